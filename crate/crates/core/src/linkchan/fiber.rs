use crate::error::{Error, Result};
use crate::fft::{omega_axis, FftPair, C64};
use crate::par::{self, Exec};

use super::field::FieldGrid;
use super::params::FiberParams;

/// Manakov averaging factor for randomly varying birefringence.
pub const MANAKOV: f64 = 8.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub step_km: f64,
    pub exec: Exec,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            step_km: 1.0,
            exec: Exec::Parallel,
        }
    }
}

/// Exact linear dispersion: multiplies the spectrum by `exp(j beta2 w^2 L / 2)`.
/// A negative `beta2_l` with this sign convention delays positive frequencies.
pub fn apply_dispersion(x: &mut [C64], sample_rate: f64, beta2_l: f64) {
    let plan = FftPair::new(x.len());
    plan.forward(x);
    let omega = omega_axis(x.len(), sample_rate);
    for (v, w) in x.iter_mut().zip(omega) {
        *v *= C64::from_polar(1.0, 0.5 * beta2_l * w * w);
    }
    plan.inverse(x);
}

/// Group delay (s) of a tone at `offset_hz` after accumulated `beta2_l`, relative to DC.
pub fn walkoff_delay(beta2_l: f64, offset_hz: f64) -> f64 {
    -beta2_l * 2.0 * std::f64::consts::PI * offset_hz
}

fn both<F>(exec: Exec, field: &mut FieldGrid, f: F)
where
    F: Fn(&mut Vec<C64>) + Sync + Send,
{
    let [x, y] = &mut field.pol;
    par::join(exec, || f(x), || f(y));
}

/// Propagates one span with the symmetric split-step Fourier method on the
/// Manakov equation. Adjacent linear half steps are merged; the nonlinear
/// step uses the effective length of each segment.
pub fn ssfm_span(field: &mut FieldGrid, fiber: &FiberParams, step: &StepControl) -> Result<()> {
    fiber.validate()?;
    if !(step.step_km > 0.0) {
        return Err(Error::Parameter(format!("step size {} km", step.step_km)));
    }
    let n = field.len();
    let span = fiber.span_m();
    if span == 0.0 {
        return Ok(());
    }
    let n_steps = (fiber.span_km / step.step_km - 1e-9).ceil().max(1.0) as usize;
    let dz = span / n_steps as f64;
    let beta2 = fiber.beta2();
    let alpha = fiber.alpha_per_m();
    let gamma = MANAKOV * fiber.gamma_per_w_m();
    let l_eff = if alpha > 0.0 {
        (1.0 - (-alpha * dz).exp()) / alpha
    } else {
        dz
    };
    let att = (-alpha * dz / 2.0).exp();

    let omega = omega_axis(n, field.sample_rate);
    let half: Vec<C64> = omega
        .iter()
        .map(|w| C64::from_polar(1.0, 0.25 * beta2 * w * w * dz))
        .collect();
    let full: Vec<C64> = half.iter().map(|h| h * h).collect();
    let plan = FftPair::new(n);

    let mul = |v: &mut Vec<C64>, h: &[C64]| {
        for (a, b) in v.iter_mut().zip(h) {
            *a *= b;
        }
    };

    both(step.exec, field, |v| {
        plan.forward(v);
        mul(v, &half);
    });
    for s in 0..n_steps {
        both(step.exec, field, |v| plan.inverse(v));
        let [x, y] = &mut field.pol;
        for (a, b) in x.iter_mut().zip(y.iter_mut()) {
            let p = a.norm_sqr() + b.norm_sqr();
            let r = C64::from_polar(att, gamma * p * l_eff);
            *a *= r;
            *b *= r;
        }
        let lin = if s + 1 == n_steps { &half } else { &full };
        both(step.exec, field, |v| {
            plan.forward(v);
            mul(v, lin);
        });
    }
    both(step.exec, field, |v| plan.inverse(v));
    field.check_finite()
}

/// Halves the step until one span changes by less than `tol` (relative L2)
/// between consecutive step sizes; returns the accepted step.
pub fn converge_step(
    field: &FieldGrid,
    fiber: &FiberParams,
    start: StepControl,
    tol: f64,
    max_halvings: usize,
) -> Result<StepControl> {
    let mut step = start;
    let mut prev = field.clone();
    ssfm_span(&mut prev, fiber, &step)?;
    for _ in 0..max_halvings {
        let finer = StepControl {
            step_km: step.step_km / 2.0,
            ..step
        };
        let mut next = field.clone();
        ssfm_span(&mut next, fiber, &finer)?;
        let num: f64 = (0..2)
            .map(|p| {
                next.pol[p]
                    .iter()
                    .zip(&prev.pol[p])
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let den: f64 = (0..2)
            .map(|p| next.pol[p].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum();
        if (num / den).sqrt() < tol {
            return Ok(step);
        }
        step = finer;
        prev = next;
    }
    Err(Error::Numerical(format!(
        "split-step did not converge to {tol:e} within {max_halvings} halvings"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::rel_l2;

    fn pulse(n: usize, fs: f64) -> FieldGrid {
        let mut f = FieldGrid::zeros(n, fs);
        for i in 0..n {
            let t = (i as f64 - n as f64 / 2.0) / fs;
            let g = (-(t / 20e-12).powi(2)).exp();
            f.pol[0][i] = C64::new(g, 0.3 * g) * 1e-2;
            f.pol[1][i] = C64::new(0.0, g) * 1e-2;
        }
        f
    }

    #[test]
    fn linear_lossless_matches_analytic() {
        let fiber = FiberParams {
            alpha_db_km: 0.0,
            gamma_w_km: 0.0,
            span_km: 80.0,
            ..FiberParams::default()
        };
        let mut f = pulse(4096, 1.08e12);
        let mut want = f.clone();
        ssfm_span(&mut f, &fiber, &StepControl::default()).unwrap();
        for p in want.pol.iter_mut() {
            apply_dispersion(p, 1.08e12, fiber.beta2() * fiber.span_m());
        }
        for p in 0..2 {
            assert!(rel_l2(&f.pol[p], &want.pol[p]) < 1e-8);
        }
    }

    #[test]
    fn loss_only() {
        let fiber = FiberParams {
            d_ps_nm_km: 0.0,
            gamma_w_km: 0.0,
            ..FiberParams::default()
        };
        let mut f = pulse(1024, 1.08e12);
        let p0 = f.power_w();
        ssfm_span(&mut f, &fiber, &StepControl::default()).unwrap();
        let loss = 10.0 * (p0 / f.power_w()).log10();
        assert!((loss - 16.0).abs() < 1e-9);
    }

    #[test]
    fn positive_frequencies_arrive_later() {
        let fiber = FiberParams {
            alpha_db_km: 0.0,
            gamma_w_km: 0.0,
            span_km: 10.0,
            ..FiberParams::default()
        };
        let fs = 1.08e12;
        let n = 1 << 14;
        let f0 = 150e9;
        let mut f = FieldGrid::zeros(n, fs);
        for i in 0..n {
            let t = (i as f64 - n as f64 / 2.0) / fs;
            let g = (-(t / 10e-12).powi(2)).exp();
            f.pol[0][i] = C64::from_polar(g, 2.0 * std::f64::consts::PI * f0 * t);
        }
        ssfm_span(&mut f, &fiber, &StepControl::default()).unwrap();
        let (peak, _) = f.pol[0]
            .iter()
            .enumerate()
            .fold((0, 0.0), |b, (i, v)| if v.norm() > b.1 { (i, v.norm()) } else { b });
        let delay = (peak as f64 - n as f64 / 2.0) / fs;
        let want = walkoff_delay(fiber.beta2() * fiber.span_m(), f0);
        assert!(want > 0.0);
        assert!((delay - want).abs() < 2.0 / fs, "{delay} vs {want}");
    }

    #[test]
    fn nonlinear_phase_of_cw() {
        let fiber = FiberParams {
            d_ps_nm_km: 0.0,
            ..FiberParams::default()
        };
        let mut f = FieldGrid::zeros(64, 1e12);
        let a = (10e-3f64).sqrt();
        f.pol[0].iter_mut().for_each(|v| *v = C64::new(a, 0.0));
        ssfm_span(&mut f, &fiber, &StepControl::default()).unwrap();
        let alpha = fiber.alpha_per_m();
        let l_eff = (1.0 - (-alpha * fiber.span_m()).exp()) / alpha;
        let want = MANAKOV * fiber.gamma_per_w_m() * 10e-3 * l_eff;
        assert!((f.pol[0][0].arg() - want).abs() < 1e-9);
    }

    #[test]
    fn step_halving_converges() {
        let fiber = FiberParams::default();
        let mut f = pulse(2048, 1.08e12);
        f.scale(3.0);
        let s = converge_step(&f, &fiber, StepControl { step_km: 8.0, exec: Exec::Sequential }, 1e-4, 8)
            .unwrap();
        assert!(s.step_km <= 8.0);
    }
}
