use berrymag::noise::*;
use berrymag::quadrature::QuadratureSpec;
use berrymag::sequences::{build_hahn, build_ramsey, ExecOptions};
use berrymag::PhysicalConstants;
use proptest::prelude::*;

// Time-domain phase variances for Ornstein–Uhlenbeck noise of correlation
// Δ²e^{−|t|/τc}, half of ⟨φ²⟩ for free precession and for a centred echo.
fn ou_ramsey(delta: f64, tau_c: f64, t: f64) -> f64 {
    let x = t / tau_c;
    delta * delta * tau_c * tau_c * (x - 1.0 + (-x).exp())
}

fn ou_echo(delta: f64, tau_c: f64, t: f64) -> f64 {
    let x = t / tau_c;
    delta * delta * tau_c * tau_c * (x - 3.0 + 4.0 * (-x / 2.0).exp() - (-x).exp())
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn lorentzian_matches_time_domain_variance() {
    for &(delta, tau_c) in &[(2.8e4, 8e-3), (1e5, 1e-6), (3e4, 5e-5)] {
        for &t in &[1e-6, 2e-5, 1e-4, 5e-4] {
            let s = SpectralDensity::Lorentzian { delta, tau_c };
            let c0 = filter_integral(&s, FilterFunctionKind::GeometricF0, t, &q()).unwrap();
            let c1 = filter_integral(&s, FilterFunctionKind::DynamicF1, t, &q()).unwrap();
            let (e0, e1) = (ou_ramsey(delta, tau_c, t), ou_echo(delta, tau_c, t));
            assert!((c0 / e0 - 1.0).abs() < 1e-5, "F0 {delta} {tau_c} {t}: {c0} vs {e0}");
            assert!((c1 / e1 - 1.0).abs() < 1e-4, "F1 {delta} {tau_c} {t}: {c1} vs {e1}");
        }
    }
}

#[test]
fn quasi_static_limit() {
    let (delta, t) = (2e4, 3e-5);
    let s = SpectralDensity::Lorentzian { delta, tau_c: 10.0 };
    let d = decoherence_function(&s, 0.7, t, &q()).unwrap();
    let expect = 0.49 * delta * delta * t * t / 2.0;
    assert!((d.geometric / expect - 1.0).abs() < 1e-4);
}

#[test]
fn zero_adiabaticity_keeps_echo_term_only() {
    let s = SpectralDensity::Lorentzian { delta: 3e4, tau_c: 1e-4 };
    let d = decoherence_function(&s, 0.0, 5e-5, &q()).unwrap();
    assert_eq!(d.geometric, 0.0);
    assert_eq!(d.total, d.dynamic);
}

#[test]
fn doubling_panels_changes_little() {
    for s in [
        SpectralDensity::Lorentzian { delta: 3e4, tau_c: 1e-4 },
        SpectralDensity::White { level: 1e3 },
        SpectralDensity::OneOverF {
            amplitude: 1e8,
            low_cutoff: 10.0,
            high_cutoff: 1e7,
        },
    ] {
        for &t in &[1e-5, 1e-4] {
            let a = decoherence_function(&s, 1.0, t, &q()).unwrap().total;
            let fine = QuadratureSpec { panel_split: 2, ..q() };
            let b = decoherence_function(&s, 1.0, t, &fine).unwrap().total;
            assert!(((a - b) / a).abs() < 1e-4, "{s:?} {t}: {a} vs {b}");
        }
    }
}

#[test]
fn coherence_is_monotone() {
    let s = SpectralDensity::Lorentzian { delta: 3e4, tau_c: 1e-4 };
    let grid: Vec<f64> = (1..=30).map(|i| i as f64 * 5e-6).collect();
    let c = coherence_decay(&s, 0.5, &grid, &q()).unwrap();
    assert!(c.samples.windows(2).all(|w| w[1].1 <= w[0].1));
    let zero = SpectralDensity::White { level: 0.0 };
    let c = coherence_decay(&zero, 0.5, &grid, &q()).unwrap();
    assert!(c.samples.iter().all(|s| s.1 == 1.0));
    assert!(c.fit.is_none());
}

#[test]
fn calibration_hits_targets() {
    let c = calibrate_noise(50e-6, 500e-6, &q()).unwrap();
    assert!(c.residual < 0.05);
    assert!(c.tau_c > 50e-6 * 10.0, "tau_c = {}", c.tau_c);
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 3e-6).collect();
    let curve = coherence_decay(&c.density, 1.0, &grid, &q()).unwrap();
    let t2g = curve.fit.unwrap().t2g;
    assert!((t2g / 50e-6 - 1.0).abs() < 0.2, "T2g = {t2g}");
}

#[test]
fn calibration_scales_with_targets() {
    let a = calibrate_noise(50e-6, 500e-6, &q()).unwrap();
    let b = calibrate_noise(100e-6, 1000e-6, &q()).unwrap();
    assert!((b.delta * 2.0 / a.delta - 1.0).abs() < 1e-3);
    assert!((b.tau_c / (2.0 * a.tau_c) - 1.0).abs() < 1e-3);
}

#[test]
fn ou_statistics() {
    let c = PhysicalConstants::default();
    let (delta, tau_c) = (1e4, 1e-4);
    let s = SpectralDensity::Lorentzian { delta, tau_c };
    let dt = tau_c / 20.0;
    let lag = 20;
    let n = 10_000;
    let (mut var, mut cov) = (0.0, 0.0);
    for i in 0..n {
        let tr = ou_trajectory(&s, tau_c * 3.0, dt, 11, i, &c).unwrap();
        let x: Vec<f64> = tr.samples.iter().map(|v| v * c.gamma).collect();
        var += x[5] * x[5];
        cov += x[5] * x[5 + lag];
    }
    var /= n as f64;
    cov /= n as f64;
    assert!((var / (delta * delta) - 1.0).abs() < 0.03, "var ratio {}", var / (delta * delta));
    let expect = delta * delta / std::f64::consts::E;
    assert!((cov / expect - 1.0).abs() < 0.05, "cov ratio {}", cov / expect);
}

#[test]
fn monte_carlo_is_order_independent() {
    let c = PhysicalConstants::default();
    let s = SpectralDensity::Lorentzian { delta: 2e4, tau_c: 1e-3 };
    let grid = [1e-5, 4e-5];
    let opts = ExecOptions::default();
    let seq = MonteCarlo {
        trajectories: 64,
        seed: 5,
        workers: 1,
        resolution: 200,
    };
    let par = MonteCarlo { workers: 4, ..seq };
    let a = monte_carlo_decay(&build_ramsey, &grid, &s, &c, 0.0, &seq, &opts).unwrap();
    let b = monte_carlo_decay(&build_ramsey, &grid, &s, &c, 0.0, &par, &opts).unwrap();
    assert_eq!(a, b);
    let h = monte_carlo_decay(&build_hahn, &grid, &s, &c, 0.0, &seq, &opts).unwrap();
    assert!(h[1].mean > a[1].mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chi_is_affine_in_a_squared(a in 0.0f64..5.0, t in 1e-6f64..3e-4, tau in -6.0f64..-2.0) {
        let s = SpectralDensity::Lorentzian { delta: 2e4, tau_c: 10f64.powf(tau) };
        let chi = |a: f64| decoherence_function(&s, a, t, &q()).unwrap().total;
        let (c0, c1, ca) = (chi(0.0), chi(1.0), chi(a));
        prop_assert!(((ca - c0) - a * a * (c1 - c0)).abs() <= 1e-10 * ca.abs().max(1e-300));
    }

    #[test]
    fn filter_identities(x in -1e4f64..1e4) {
        let f0 = filter_function(FilterFunctionKind::GeometricF0, x);
        let f1 = filter_function(FilterFunctionKind::DynamicF1, x);
        prop_assert!((f0 - (1.0 - x.cos())).abs() < 1e-12);
        prop_assert!((f1 - (3.0 - 4.0 * (x / 2.0).cos() + x.cos())).abs() < 1e-11);
    }
}
