//! Closed-form signal models, field ranges, slopes and sensitivities.
//!
//! Dynamic phase (Ramsey): `P = cos(γBT)`.
//! Geometric phase (Berry, adiabatic): `P = cos[4πN(1 − γB/√((γB)² + Ω²))]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{brent_root, scan_max};
use crate::units::{PhysicalConstants, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicModel {
    /// Interaction time, s.
    pub t: f64,
    /// rad/s/T.
    pub gamma: f64,
}

impl DynamicModel {
    pub fn new(t: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(format!("interaction time must be positive, got {t}")));
        }
        Ok(Self {
            t,
            gamma: consts.gamma,
        })
    }

    pub fn phase(&self, b: f64) -> f64 {
        self.gamma * b * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricModel {
    /// Rabi frequency Ω, rad/s.
    pub rabi: f64,
    /// Larmor-vector turns per half sequence.
    pub n: u32,
    pub gamma: f64,
}

impl GeometricModel {
    pub fn new(rabi: f64, n: u32, consts: &PhysicalConstants) -> Result<Self> {
        if !(rabi.is_finite() && rabi > 0.0) {
            return Err(invalid(format!("rabi frequency must be positive, got {rabi}")));
        }
        if n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        Ok(Self {
            rabi,
            n,
            gamma: consts.gamma,
        })
    }

    /// cos θ of the Larmor vector.
    pub fn cos_theta(&self, b: f64) -> f64 {
        let x = self.gamma * b;
        x / x.hypot(self.rabi)
    }

    /// Argument of the cosine, `4πN(1 − cos θ)`. Strictly decreasing in B ≥ 0.
    pub fn argument(&self, b: f64) -> f64 {
        2.0 * TWO_PI * self.n as f64 * (1.0 - self.cos_theta(b))
    }

    /// Inverse of [`GeometricModel::argument`] for arguments in `(0, 4πN]`.
    pub fn field_for_argument(&self, arg: f64) -> f64 {
        let c = 1.0 - arg / (2.0 * TWO_PI * self.n as f64);
        self.rabi * c / (1.0 - c * c).sqrt() / self.gamma
    }
}

pub fn ramsey_signal(m: &DynamicModel, b: f64) -> f64 {
    m.phase(b).cos()
}

pub fn ramsey_slope(m: &DynamicModel, b: f64) -> f64 {
    -m.gamma * m.t * m.phase(b).sin()
}

/// All `B_m = (γT)⁻¹(±cos⁻¹P + 2πm)` inside `window`, ascending.
pub fn ramsey_ambiguities(m: &DynamicModel, p_meas: f64, window: (f64, f64)) -> Result<Vec<f64>> {
    if !(p_meas.abs() <= 1.0) {
        return Err(invalid(format!("|P| must be <= 1, got {p_meas}")));
    }
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Ok(Vec::new());
    }
    let scale = m.gamma * m.t;
    let base = p_meas.acos();
    let m_lo = ((lo * scale - base) / TWO_PI).floor() as i64 - 1;
    let m_hi = ((hi * scale + base) / TWO_PI).ceil() as i64 + 1;
    let mut out = Vec::new();
    for k in m_lo..=m_hi {
        for branch in [base, -base] {
            let b = (branch + TWO_PI * k as f64) / scale;
            if b >= lo - 1e-15 * scale.recip() && b <= hi + 1e-15 * scale.recip() {
                out.push(b);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    // cos⁻¹(±1) puts both branches on the same point.
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale.recip().max(a.abs()));
    Ok(out)
}

/// One full fringe, `2π/(γT)`.
pub fn ramsey_field_range(m: &DynamicModel) -> f64 {
    TWO_PI / (m.gamma * m.t)
}

pub fn berry_signal(m: &GeometricModel, b: f64) -> f64 {
    m.argument(b).cos()
}

/// `dP/dB = sin(arg) · 4πN γ Ω² / R³`.
pub fn berry_slope(m: &GeometricModel, b: f64) -> f64 {
    let x = m.gamma * b;
    let r = x.hypot(m.rabi);
    m.argument(b).sin() * 2.0 * TWO_PI * m.n as f64 * m.gamma * m.rabi * m.rabi / (r * r * r)
}

/// Field of the last minimum: `4πN(1 − cos θ) = π`.
pub fn berry_field_range(m: &GeometricModel) -> f64 {
    m.field_for_argument(PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Tesla per √Hz (with `sigma_p` in signal units per shot).
    pub eta: f64,
    /// Largest |dP/dB| found, 1/T.
    pub max_slope: f64,
    pub b_at_max_slope: f64,
    pub sigma_p: f64,
    pub overhead: f64,
}

const SLOPE_FLOOR: f64 = 1e-15;

/// `η = σ_P √(T + overhead) / max |dP/dB|` over `b_search`. Without an
/// analytic slope the signal is differenced numerically.
pub fn sensitivity(
    signal_fn: &dyn Fn(f64) -> f64,
    slope_fn: Option<&dyn Fn(f64) -> f64>,
    b_search: (f64, f64),
    t: f64,
    sigma_p: f64,
    overhead: f64,
) -> Result<SensitivityReport> {
    if !(t > 0.0) {
        return Err(invalid("interaction time must be positive"));
    }
    if !(sigma_p > 0.0) {
        return Err(invalid("sigma_P must be positive"));
    }
    if !(overhead >= 0.0) {
        return Err(invalid("overhead must be >= 0"));
    }
    let (lo, hi) = b_search;
    if !(lo < hi) {
        return Err(invalid("empty field search interval"));
    }
    let h = (hi - lo) * 1e-7;
    let fd = |b: f64| (signal_fn(b + h) - signal_fn(b - h)) / (2.0 * h);
    let abs_slope = |b: f64| match slope_fn {
        Some(s) => s(b).abs(),
        None => fd(b).abs(),
    };
    let (b_at, max_slope) = scan_max(abs_slope, lo, hi, 8193);
    if !(max_slope >= SLOPE_FLOOR) {
        return Err(Error::DegenerateSlope(max_slope));
    }
    Ok(SensitivityReport {
        eta: sigma_p * (t + overhead).sqrt() / max_slope,
        max_slope,
        b_at_max_slope: b_at,
        sigma_p,
        overhead,
    })
}

/// Ramsey sensitivity over one fringe.
pub fn ramsey_sensitivity(m: &DynamicModel, sigma_p: f64, overhead: f64) -> Result<SensitivityReport> {
    sensitivity(
        &|b| ramsey_signal(m, b),
        Some(&|b| ramsey_slope(m, b)),
        (0.0, ramsey_field_range(m)),
        m.t,
        sigma_p,
        overhead,
    )
}

/// Berry sensitivity searched over `[0, B_max]`.
pub fn berry_sensitivity(m: &GeometricModel, t: f64, sigma_p: f64, overhead: f64) -> Result<SensitivityReport> {
    sensitivity(
        &|b| berry_signal(m, b),
        Some(&|b| berry_slope(m, b)),
        (0.0, berry_field_range(m)),
        t,
        sigma_p,
        overhead,
    )
}

/// Three hyperfine lines as σz offsets with weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineModel {
    /// rad/s.
    pub offsets: [f64; 3],
    pub weights: [f64; 3],
}

impl HyperfineModel {
    /// `{−δ, 0, +δ}` with equal weights.
    pub fn equal(splitting: f64) -> Self {
        Self {
            offsets: [-splitting, 0.0, splitting],
            weights: [1.0 / 3.0; 3],
        }
    }

    pub fn with_weights(splitting: f64, weights: [f64; 3]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("hyperfine weights must be nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("hyperfine weights sum to {sum}, not 1")));
        }
        Ok(Self {
            offsets: [-splitting, 0.0, splitting],
            weights,
        })
    }
}

/// Weighted sum of `base(offset)` over the three lines.
pub fn hyperfine_average(base: impl Fn(f64) -> f64, h: &HyperfineModel) -> f64 {
    h.offsets.iter().zip(&h.weights).map(|(&d, &w)| w * base(d)).sum()
}

/// Hyperfine-averaged Ramsey signal, `Σ wᵢ cos((γB + δᵢ)T)`.
pub fn ramsey_hyperfine_signal(m: &DynamicModel, h: &HyperfineModel, b: f64) -> f64 {
    hyperfine_average(|d| ((m.gamma * b + d) * m.t).cos(), h)
}

/// First interaction time at which the zero-field hyperfine-averaged Ramsey
/// signal changes sign (the first beat-envelope null), searched on `(0, t_max]`.
pub fn hyperfine_first_null(h: &HyperfineModel, t_max: f64) -> Option<f64> {
    let f = |t: f64| hyperfine_average(|d| (d * t).cos(), h);
    let n = 4096;
    let dt = t_max / n as f64;
    let mut prev = f(0.0);
    for i in 1..=n {
        let t = dt * i as f64;
        let v = f(t);
        if prev.signum() != v.signum() {
            return brent_root(f, t - dt, t, 1e-18, 200).ok();
        }
        prev = v;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adiabaticity {
    /// `ρ̇ sin θ / 2R` with ρ̇ = 4πN/T.
    pub exact: f64,
    /// The small-field shorthand `N/(ΩT)` with Ω in rad/s.
    pub approx: f64,
}

pub fn adiabaticity(rabi: f64, n: u32, t: f64, b: f64, gamma: f64) -> Result<Adiabaticity> {
    if !(t > 0.0) {
        return Err(invalid("interaction time must be positive"));
    }
    if !(rabi > 0.0) {
        return Err(invalid("rabi frequency must be positive"));
    }
    let rate = 2.0 * TWO_PI * n as f64 / t;
    let x = gamma * b;
    let r2 = rabi * rabi + x * x;
    Ok(Adiabaticity {
        exact: rate * rabi / (2.0 * r2),
        approx: n as f64 / (rabi * t),
    })
}

/// Rabi frequency giving adiabaticity `a` (exact form, B = 0) for N and T.
pub fn rabi_for_adiabaticity(a: f64, n: u32, t: f64) -> f64 {
    TWO_PI * n as f64 / (a * t)
}
