use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use combsim::sim::{self, Profile, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "combsim", version, about = "Comb superchannel simulator with joint carrier recovery")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Simulate one (format, distance) cell for every seed.
    Run(Common),
    /// Simulate the full distance grid of every format.
    Sweep(Common),
    /// Search the decision-directed window for the configured cell.
    CalibrateWindow(Common),
    /// Run the built-in property checks.
    Selftest(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Single seed replacing the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override a configuration key, e.g. `--set fiber.gamma_w_km=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Fill the runtime_s column (the CSV is then no longer reproducible).
    #[arg(long)]
    timings: bool,
    /// Dump the received optical field of every cell into this directory.
    #[arg(long, value_name = "DIR")]
    dump_waveforms: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut v = self.sets.clone();
        if let Some(s) = self.seed {
            v.push(format!("seeds=[{s}]"));
        }
        if self.timings {
            v.push("timings=true".into());
        }
        if let Some(d) = &self.dump_waveforms {
            v.push(format!("dump_dir={:?}", d.display().to_string()));
        }
        v
    }

    fn config(&self) -> Result<RunConfig> {
        let profile = self.profile.map(|p| match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        });
        let cfg = RunConfig::resolve(profile, self.config.as_deref(), &self.overrides())?;
        if !cfg.dump_dir.is_empty() {
            std::fs::create_dir_all(&cfg.dump_dir)
                .with_context(|| format!("creating {}", cfg.dump_dir))?;
        }
        Ok(cfg)
    }
}

fn simulate(verb: &str, c: &Common, single: bool) -> Result<ExitCode> {
    let cfg = c.config()?;
    let out = if single {
        sim::run_single(&cfg, c.jobs)
    } else {
        sim::run_sweep(&cfg, c.jobs)
    };
    sim::write_outputs(&c.out, &cfg, verb, &c.overrides(), &out)
        .with_context(|| format!("writing results to {}", c.out.display()))?;
    if verb == "calibrate-window" {
        print!("{}", sim::window_report(&out));
    }
    for e in &out.errors {
        eprintln!("error: {e}");
    }
    eprintln!(
        "{} rows, {} errors, {:.1} s -> {}",
        out.rows.len(),
        out.errors.len(),
        out.elapsed_s,
        c.out.display()
    );
    Ok(if out.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn selftest(c: &Common) -> Result<ExitCode> {
    let cfg = c.config()?;
    let checks = combsim::par::with_pool(c.jobs, || sim::run_selftest(&cfg));
    let mut ok = true;
    for r in &checks {
        ok &= r.pass;
        println!("{} {:<28} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.verb {
        Verb::Run(c) => simulate("run", c, true),
        Verb::Sweep(c) => simulate("sweep", c, false),
        Verb::CalibrateWindow(c) => simulate("calibrate-window", c, true),
        Verb::Selftest(c) => selftest(c),
    };
    r.unwrap_or_else(|e| {
        eprintln!("combsim: {e:#}");
        ExitCode::FAILURE
    })
}
