//! Hand-derived reference values checked against the library.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use combsim::cpr::{drc_reconstruct, Regularization, Scheme};
use combsim::linkchan::{db_to_lin, FiberParams, LinkParams};
use combsim::metrics::{channel_poh, fec_oh, net_rate, ngmi_from_fec_oh, MetricsReport};
use combsim::sigkit::{header_overhead, Constellation, Format, PilotPlan};
use combsim::sim::selftest::{drc_oracle_error, gmi_monte_carlo, gmi_quadrature, hold_lag, poh_counts};
use combsim::sim::RunConfig;

#[test]
fn pilot_overheads() {
    assert_relative_eq!(PilotPlan::new(0).overhead(), 1.0 / 31.0, max_relative = 1e-12);
    assert_relative_eq!(PilotPlan::new(64).overhead(), 1.0 / 543.0, max_relative = 1e-12);
    for n_r in [1, 8, 17, 64] {
        assert_relative_eq!(
            PilotPlan::new(n_r).overhead(),
            1.0 / (31.0 + 8.0 * n_r as f64),
            max_relative = 1e-12
        );
    }
    let h = header_overhead(1024, 1 << 17);
    assert_relative_eq!(h, 0.007874, epsilon = 1e-6);
    assert_relative_eq!(channel_poh(&PilotPlan::new(0), 1 << 17), 0.04013, epsilon = 1e-5);
}

#[test]
fn layout_counts_match_formula() {
    assert_eq!(poh_counts(0).unwrap(), (32, 992));
    assert_eq!(poh_counts(64).unwrap(), (32, 17376));
}

#[test]
fn fec_mapping() {
    // R_c = 0.9 - 0.07
    let oh = fec_oh(0.9, 0.07).unwrap();
    assert_relative_eq!(oh, 0.17 / 0.83, max_relative = 1e-12);
    assert_relative_eq!(ngmi_from_fec_oh(0.175, 0.07), 1.0 / 1.175 + 0.07, max_relative = 1e-12);
    assert_relative_eq!(net_rate(0.25, 0.04), 1.0 / (1.25 * 1.04), max_relative = 1e-12);
    assert!(fec_oh(0.05, 0.07).is_err());
}

#[test]
fn pilot_saving_alone_gives_two_percent() {
    // equal NGMI on all channels; one main keeps 1/31, three secondaries drop to 1/543
    let rate = 1 << 17;
    let dense = channel_poh(&PilotPlan::new(0), rate);
    let sparse = channel_poh(&PilotPlan::new(64), rate);
    let base = MetricsReport::new(vec![0.9; 4], vec![dense; 4], 0.07).unwrap();
    let joint = MetricsReport::new(vec![0.9; 4], vec![dense, sparse, sparse, sparse], 0.07).unwrap();
    let g = joint.gain_over(&base);
    assert!((g - 0.022).abs() < 0.001, "{g}");
}

#[test]
fn composite_b2b_snr() {
    let link = LinkParams::default();
    let s = db_to_lin(link.per_stage_snr_db());
    let total = 10.0 * (1.0 / (2.0 / s)).log10();
    assert!((total - 22.0).abs() < 0.01, "{total}");
    assert_relative_eq!(s, 316.9, epsilon = 0.2);
}

#[test]
fn walkoff_between_outer_lines() {
    // 2400 km, 450 GHz apart: tau = 2 pi beta2 L df
    let f = FiberParams::default();
    let tau = 2.0 * PI * f.beta2().abs() * 2400e3 * 450e9;
    assert!((tau - 1.73e-7).abs() < 0.02e-7, "{tau}");
}

#[test]
fn hold_lag_under_residual_fo() {
    let want = 2.0 * PI * 1e6 * (32.0 * 68.0 / 135e9);
    let got = hold_lag(1e6, 64).unwrap();
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn drc_synthetic_geometry() {
    let c = RunConfig::default().cpr;
    let e = drc_oracle_error(2400.0, c.drc_eps, c.drc_regularization).unwrap();
    assert!(e < 0.05, "{e}");
}

#[test]
fn drc_separates_two_delayed_processes() {
    // P is a single tone, Q a different one; both recoverable from two delays
    let n = 64;
    let p: Vec<f64> = (0..n).map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).sin()).collect();
    let q: Vec<f64> = (0..n).map(|i| 0.5 * (2.0 * PI * 5.0 * i as f64 / n as f64).cos()).collect();
    let delayed = |tau: f64| -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * 3.0 * (i as f64 - tau) / n as f64).sin() + q[i])
            .collect()
    };
    let out = drc_reconstruct(&delayed(1.0), &delayed(-2.5), 1.0, -2.5, &[0.0], 0.1, Regularization::Threshold).unwrap();
    for i in 0..n {
        assert!((out.phases[0][i] - (p[i] + q[i])).abs() < 1e-9);
    }
}

#[test]
fn gmi_quadrature_agrees_with_sampling() {
    for f in [Format::Qam16, Format::Qam64] {
        let c = Constellation::new(f);
        let q = gmi_quadrature(&c, 15.0, 24);
        let m = gmi_monte_carlo(&c, 15.0, 200_000, 3).unwrap();
        assert!((q - m).abs() < 0.02, "{f:?}: {q} vs {m}");
    }
}

#[test]
fn scheme_mains() {
    assert_eq!(Scheme::Independent.default_mains(4).len(), 4);
    assert_eq!(Scheme::Ms1.default_mains(4), vec![1]);
    assert_eq!(Scheme::Ms2.default_mains(4), vec![0, 3]);
    assert_eq!(Scheme::Drc.default_mains(4), vec![0, 3]);
}
