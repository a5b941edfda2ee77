use std::path::{Path, PathBuf};
use std::process::Command;

fn combsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_combsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn run_is_byte_reproducible() {
    let mut csv = Vec::new();
    for i in 0..2 {
        let dir = scratch(&format!("repro{i}"));
        let out = combsim(&[
            "run",
            "--seed",
            "3",
            "--set",
            "distance_km=80",
            "--set",
            "frame_len=8192",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(std::fs::read(dir.join("results.csv")).unwrap());
        assert!(dir.join("meta.txt").exists());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv[0].clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "distance_km,format,scheme,n_r,seed,ngmi_mean,fec_oh,poh_mean,r_net,gain_pct,dd_window,runtime_s"
    );
    // independent once, three joint schemes at two pilot spacings
    assert_eq!(lines.count(), 7);
}

#[test]
fn unknown_key_is_rejected() {
    let out = combsim(&["run", "--set", "no_such_key=1", "--out", scratch("bad").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn selftest_prints_one_line_per_check() {
    let out = combsim(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));
}
