//! Classical field noise: spectral densities, filter functions, the
//! decoherence integral, Gaussian coherence-time fits, calibration against
//! target T₂*/T₂, and an Ornstein–Uhlenbeck time-domain generator.
//!
//! Conventions: `S(ω)` is one-sided in ω ≥ 0 with units rad²/s, so that a
//! Lorentzian of amplitude Δ (rad/s) is `S(ω) = 2Δ²τc/(1+ω²τc²)` and
//!
//! ```text
//! χ_k(T) = (1/π) ∫₀^∞ S(ω) F_k(ωT)/ω² dω,    W(T) = exp(−χ(T)).
//! ```
//!
//! The geometric sequence sees `A²·χ₀ + χ₁`. Ramsey sees `χ₀` alone and the
//! Hahn echo `χ₁` alone.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{brent_root, golden_max};
use crate::parallel::map_indexed;
use crate::quadrature::{integrate_panels, QuadratureSpec};
use crate::sequences::{execute, ExecOptions, NoiseSource, SequencePlan};
use crate::units::PhysicalConstants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SpectralDensity {
    /// Ornstein–Uhlenbeck detuning noise with rms `delta` (rad/s).
    Lorentzian { delta: f64, tau_c: f64 },
    /// Flat `S(ω) = level`.
    White { level: f64 },
    /// `amplitude/ω` between the cutoffs, flat below the low cutoff and
    /// zero above the high one.
    OneOverF {
        amplitude: f64,
        low_cutoff: f64,
        high_cutoff: f64,
    },
}

impl SpectralDensity {
    pub fn lorentzian(delta: f64, tau_c: f64) -> Result<Self> {
        let s = SpectralDensity::Lorentzian { delta, tau_c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpectralDensity::Lorentzian { delta, tau_c } => delta >= 0.0 && delta.is_finite() && tau_c > 0.0 && tau_c.is_finite(),
            SpectralDensity::White { level } => level >= 0.0 && level.is_finite(),
            SpectralDensity::OneOverF {
                amplitude,
                low_cutoff,
                high_cutoff,
            } => amplitude >= 0.0 && amplitude.is_finite() && low_cutoff > 0.0 && high_cutoff > low_cutoff && high_cutoff.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid spectral density {self:?}")))
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        let w = w.abs();
        match *self {
            SpectralDensity::Lorentzian { delta, tau_c } => 2.0 * delta * delta * tau_c / (1.0 + (w * tau_c).powi(2)),
            SpectralDensity::White { level } => level,
            SpectralDensity::OneOverF {
                amplitude,
                low_cutoff,
                high_cutoff,
            } => {
                if w > high_cutoff {
                    0.0
                } else {
                    amplitude / w.max(low_cutoff)
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            SpectralDensity::Lorentzian { delta, .. } => delta == 0.0,
            SpectralDensity::White { level } => level == 0.0,
            SpectralDensity::OneOverF { amplitude, .. } => amplitude == 0.0,
        }
    }

    fn knees(&self) -> Vec<f64> {
        match *self {
            SpectralDensity::Lorentzian { tau_c, .. } => vec![1.0 / tau_c],
            SpectralDensity::White { .. } => vec![],
            SpectralDensity::OneOverF {
                low_cutoff, high_cutoff, ..
            } => vec![low_cutoff, high_cutoff],
        }
    }

    /// `∫_W^∞ S(ω)/ω² dω`.
    fn tail_weight(&self, w: f64) -> f64 {
        match *self {
            SpectralDensity::Lorentzian { delta, tau_c } => {
                let u = 1.0 / (w * tau_c);
                let core = if u < 1e-3 {
                    tau_c * u.powi(3) * (1.0 / 3.0 - u * u / 5.0 + u.powi(4) / 7.0)
                } else {
                    1.0 / w - tau_c * u.atan()
                };
                2.0 * delta * delta * tau_c * core
            }
            SpectralDensity::White { level } => level / w,
            SpectralDensity::OneOverF {
                amplitude: a,
                low_cutoff: lo,
                high_cutoff: hi,
            } => {
                if w >= hi {
                    0.0
                } else if w >= lo {
                    0.5 * a * (1.0 / (w * w) - 1.0 / (hi * hi))
                } else {
                    a / lo * (1.0 / w - 1.0 / lo) + 0.5 * a * (1.0 / (lo * lo) - 1.0 / (hi * hi))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterFunctionKind {
    /// `F₀(x) = 2 sin²(x/2)`, free-precession weighting.
    GeometricF0,
    /// `F₁(x) = 8 sin⁴(x/4)`, echo weighting.
    DynamicF1,
}

impl FilterFunctionKind {
    fn mean(self) -> f64 {
        match self {
            FilterFunctionKind::GeometricF0 => 1.0,
            FilterFunctionKind::DynamicF1 => 3.0,
        }
    }

    // Bound on |∫(F − mean)| over any partial period, in units of 1/T.
    fn ripple(self) -> f64 {
        match self {
            FilterFunctionKind::GeometricF0 => 2.0,
            FilterFunctionKind::DynamicF1 => 18.0,
        }
    }
}

pub fn filter_function(kind: FilterFunctionKind, x: f64) -> f64 {
    match kind {
        FilterFunctionKind::GeometricF0 => 2.0 * (0.5 * x).sin().powi(2),
        FilterFunctionKind::DynamicF1 => 8.0 * (0.25 * x).sin().powi(4),
    }
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// `F(ωT)/ω²`, evaluated without cancellation near ω = 0.
pub fn filter_weight(kind: FilterFunctionKind, w: f64, t: f64) -> f64 {
    match kind {
        FilterFunctionKind::GeometricF0 => 0.5 * t * t * sinc(0.5 * w * t).powi(2),
        FilterFunctionKind::DynamicF1 => w * w * t.powi(4) / 32.0 * sinc(0.25 * w * t).powi(4),
    }
}

const PERIOD_PANEL_CAP: usize = 40_000;

fn panel_points(s: &SpectralDensity, t: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0, upper];
    for knee in s.knees() {
        for k in -12..=12 {
            pts.push(knee * 2f64.powi(k));
        }
    }
    let width = PI / t;
    let n = ((upper / width) as usize).min(PERIOD_PANEL_CAP);
    pts.extend((1..=n).map(|j| width * j as f64));
    let mut w = width * n as f64;
    while w > 0.0 && w < upper {
        w *= 1.25;
        pts.push(w);
    }
    pts.retain(|&p| p >= 0.0 && p <= upper);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `(1/π) ∫₀^∞ S(ω) F(ωT)/ω² dω`.
pub fn filter_integral(s: &SpectralDensity, kind: FilterFunctionKind, t: f64, q: &QuadratureSpec) -> Result<f64> {
    s.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("interaction time must be positive"));
    }
    if s.is_zero() {
        return Ok(0.0);
    }
    let f = |w: f64| s.eval(w) * filter_weight(kind, w, t);
    let period = 4.0 * PI / t;
    let knee = s.knees().into_iter().fold(0.0f64, f64::max);
    let round_up = |w: f64| (w / period).ceil().max(1.0) * period;

    // A coarse pass fixes the scale the truncation is measured against.
    let w0 = round_up((16.0 * knee).max(8.0 * period));
    let coarse = QuadratureSpec {
        rel_tol: 1e-4,
        panel_split: 1,
        ..*q
    };
    let scale = integrate_panels(&f, &panel_points(s, t, w0), &coarse)?.value;
    if scale <= 0.0 {
        return Ok(0.0);
    }

    // Beyond W the filter is replaced by its mean. S/ω² is nonincreasing so
    // the neglected ripple is at most S(W)/W² · ripple/T.
    let budget = 1e-2 * q.rel_tol.max(1e-12) * scale;
    let mut upper = w0;
    while s.eval(upper) / (upper * upper) * kind.ripple() / t > budget {
        upper *= 2.0;
        if upper > 1e30 {
            return Err(Error::QuadratureFailure {
                omega: upper,
                estimate: s.eval(upper) / (upper * upper),
                target: budget,
            });
        }
    }
    let upper = round_up(upper);
    let body = integrate_panels(&f, &panel_points(s, t, upper), q)?;
    Ok((body.value + kind.mean() * s.tail_weight(upper)) / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoherence {
    /// `A²·χ₀`.
    pub geometric: f64,
    /// `χ₁`.
    pub dynamic: f64,
    pub total: f64,
}

pub fn decoherence_function(s: &SpectralDensity, a: f64, t: f64, q: &QuadratureSpec) -> Result<Decoherence> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid("adiabaticity must be nonnegative"));
    }
    let geometric = if a == 0.0 {
        0.0
    } else {
        a * a * filter_integral(s, FilterFunctionKind::GeometricF0, t, q)?
    };
    let dynamic = filter_integral(s, FilterFunctionKind::DynamicF1, t, q)?;
    Ok(Decoherence {
        geometric,
        dynamic,
        total: geometric + dynamic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2gFit {
    pub t2g: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceCurve {
    /// `(T, W)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Gaussian fit, absent when the curve shows no resolvable decay.
    pub fit: Option<T2gFit>,
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{what} grid must be positive and increasing")));
    }
    Ok(())
}

pub fn coherence_decay(s: &SpectralDensity, a: f64, t_grid: &[f64], q: &QuadratureSpec) -> Result<CoherenceCurve> {
    check_grid(t_grid, "T")?;
    let samples = t_grid
        .iter()
        .map(|&t| Ok((t, (-decoherence_function(s, a, t, q)?.total).exp())))
        .collect::<Result<Vec<_>>>()?;
    let fit = if samples.len() >= 4 { fit_t2g(&samples).ok() } else { None };
    Ok(CoherenceCurve { samples, fit })
}

/// Least-squares fit of `amplitude·exp[−(T/T₂g)²]`.
pub fn fit_t2g(samples: &[(f64, f64)]) -> Result<T2gFit> {
    if samples.len() < 4 {
        return Err(Error::FitFailure(format!("{} samples, need at least 4", samples.len())));
    }
    if samples.iter().any(|(t, y)| !(t.is_finite() && y.is_finite()) || *t < 0.0) {
        return Err(Error::FitFailure("non-finite or negative sample".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(_, y)| (l.min(y), h.max(y)));
    if hi - lo <= 1e-9 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::FitFailure("no decay: samples are constant".into()));
    }
    let first = samples.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let last = samples.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    if last.1 >= first.1 {
        return Err(Error::FitFailure("samples do not decay".into()));
    }

    // For fixed T₂g the amplitude is linear, so only log T₂g is searched.
    let amp_sse = |log_tau: f64| {
        let tau = log_tau.exp();
        let (mut yg, mut gg) = (0.0, 0.0);
        for &(t, y) in samples {
            let g = (-(t / tau).powi(2)).exp();
            yg += y * g;
            gg += g * g;
        }
        let amp = if gg > 0.0 { yg / gg } else { 0.0 };
        let sse: f64 = samples
            .iter()
            .map(|&(t, y)| (y - amp * (-(t / tau).powi(2)).exp()).powi(2))
            .sum();
        (amp, sse)
    };
    let t_min = samples.iter().map(|s| s.0).filter(|&t| t > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = last.0;
    let (a, b) = ((t_min / 100.0).ln(), (t_max * 100.0).ln());
    let n = 800;
    let h = (b - a) / n as f64;
    let (mut best_i, mut best) = (0usize, f64::INFINITY);
    for i in 0..=n {
        let v = amp_sse(a + h * i as f64).1;
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if best_i == n {
        return Err(Error::FitFailure("decay too slow to resolve on this grid".into()));
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = a + h * (best_i + 1) as f64;
    let (log_tau, _) = golden_max(|x| -amp_sse(x).1, lo, hi, 1e-12);
    let (amplitude, sse) = amp_sse(log_tau);
    Ok(T2gFit {
        t2g: log_tau.exp(),
        amplitude,
        residual: (sse / samples.len() as f64).sqrt(),
    })
}

/// The time at which `χ_k(T) = 1`, i.e. the 1/e point of the decay.
pub fn decay_time(s: &SpectralDensity, kind: FilterFunctionKind, q: &QuadratureSpec) -> Result<f64> {
    let chi = |t: f64| filter_integral(s, kind, t, q);
    let mut hi = 1e-9;
    let mut guard = 0;
    while chi(hi)? < 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::FitFailure("no decay within reachable times".into()));
        }
    }
    let lo = hi / 2.0;
    // Errors inside the root search are surfaced as NaN and checked after.
    let root = brent_root(|x| chi(x.exp()).map_or(f64::NAN, |c| c.ln()), lo.ln(), hi.ln(), 1e-10, 200)?;
    let t = root.exp();
    chi(t)?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub density: SpectralDensity,
    pub delta: f64,
    pub tau_c: f64,
    /// Achieved Ramsey and echo 1/e times.
    pub t2_star: f64,
    pub t2: f64,
    /// Largest relative mismatch against the targets.
    pub residual: f64,
}

/// Finds a Lorentzian whose Ramsey (`χ₀`) and echo (`χ₁`) 1/e times match
/// the targets. Because both χ scale with Δ², Δ is fixed by the Ramsey
/// target for each trial τc and the search is one-dimensional in τc.
pub fn calibrate_noise(t2_star: f64, t2: f64, q: &QuadratureSpec) -> Result<Calibration> {
    if !(t2_star > 0.0 && t2_star.is_finite() && t2.is_finite()) {
        return Err(invalid("coherence targets must be positive"));
    }
    if t2 <= t2_star {
        return Err(Error::CalibrationFailure {
            reason: format!("echo time {t2:e} s does not exceed Ramsey time {t2_star:e} s"),
            best_residual: f64::NAN,
        });
    }
    let unit = |tau_c: f64| SpectralDensity::Lorentzian { delta: 1.0, tau_c };
    let delta_for = |tau_c: f64| -> Result<f64> {
        let i0 = filter_integral(&unit(tau_c), FilterFunctionKind::GeometricF0, t2_star, q)?;
        Ok(1.0 / i0.sqrt())
    };
    // ln χ₁(T₂) with Δ tuned so that χ₀(T₂*) = 1.
    let mismatch = |log_tau: f64| -> Result<f64> {
        let tau_c = log_tau.exp();
        let d = delta_for(tau_c)?;
        let i1 = filter_integral(&unit(tau_c), FilterFunctionKind::DynamicF1, t2, q)?;
        Ok((d * d * i1).ln())
    };

    let (a, b) = ((t2_star * 1e-3).ln(), (t2 * 1e6).ln());
    let n = 48;
    let grid: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut bracket = None;
    for (i, &x) in grid.iter().enumerate() {
        let v = mismatch(x)?;
        values.push(v);
        if i > 0 && values[i - 1].signum() != v.signum() {
            bracket = Some((grid[i - 1], x));
            break;
        }
    }
    let Some((lo, hi)) = bracket else {
        let best = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        return Err(Error::CalibrationFailure {
            reason: "no correlation time reproduces both targets".into(),
            best_residual: best.exp_m1().abs(),
        });
    };
    let log_tau = brent_root(|x| mismatch(x).unwrap_or(f64::NAN), lo, hi, 1e-10, 200)?;
    let tau_c = log_tau.exp();
    let delta = delta_for(tau_c)?;
    let density = SpectralDensity::lorentzian(delta, tau_c)?;
    let got_star = decay_time(&density, FilterFunctionKind::GeometricF0, q)?;
    let got_echo = decay_time(&density, FilterFunctionKind::DynamicF1, q)?;
    let residual = ((got_star - t2_star) / t2_star).abs().max(((got_echo - t2) / t2).abs());
    if residual > 0.05 {
        return Err(Error::CalibrationFailure {
            reason: "calibrated times miss the targets by more than 5%".into(),
            best_residual: residual,
        });
    }
    Ok(Calibration {
        density,
        delta,
        tau_c,
        t2_star: got_star,
        t2: got_echo,
        residual,
    })
}

/// A sampled Ornstein–Uhlenbeck field offset (tesla), linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct OuTrajectory {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl OuTrajectory {
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }
}

impl NoiseSource for OuTrajectory {
    fn field_at(&self, t: f64) -> f64 {
        let x = (t / self.dt).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= self.samples.len() {
            return *self.samples.last().unwrap();
        }
        let f = x - i as f64;
        self.samples[i] * (1.0 - f) + self.samples[i + 1] * f
    }
}

/// Draws trajectory `index` of the stream seeded by `seed`. The process starts
/// in its stationary distribution and uses the exact discrete update.
pub fn ou_trajectory(
    s: &SpectralDensity,
    duration: f64,
    dt: f64,
    seed: u64,
    index: u64,
    consts: &PhysicalConstants,
) -> Result<OuTrajectory> {
    let SpectralDensity::Lorentzian { delta, tau_c } = *s else {
        return Err(invalid("time-domain generator requires a Lorentzian spectrum"));
    };
    s.validate()?;
    if !(dt > 0.0 && duration >= 0.0 && duration.is_finite()) {
        return Err(invalid("duration and dt must be positive"));
    }
    if dt > tau_c / 10.0 {
        return Err(invalid(format!("dt = {dt:e} s exceeds tau_c/10 = {:e} s", tau_c / 10.0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = (duration / dt).ceil() as usize + 1;
    let decay = (-dt / tau_c).exp();
    let kick = delta * (-(-2.0 * dt / tau_c).exp_m1()).sqrt();
    let to_field = 1.0 / consts.gamma;
    let mut x = delta * rng.sample::<f64, _>(StandardNormal);
    let mut samples = Vec::with_capacity(n);
    samples.push(x * to_field);
    for _ in 1..n {
        x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
        samples.push(x * to_field);
    }
    Ok(OuTrajectory { dt, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub omega: f64,
    pub s: f64,
    /// `A²·F₀(ωT)/ω²`.
    pub geometric: f64,
    /// `F₁(ωT)/ω²`.
    pub dynamic: f64,
}

pub fn spectral_overlay(s: &SpectralDensity, a: f64, t: f64, omega_grid: &[f64]) -> Result<Vec<OverlayRow>> {
    s.validate()?;
    check_grid(omega_grid, "omega")?;
    if !(t > 0.0) || !(a >= 0.0) {
        return Err(invalid("T must be positive and A nonnegative"));
    }
    Ok(omega_grid
        .iter()
        .map(|&w| OverlayRow {
            omega: w,
            s: s.eval(w),
            geometric: a * a * filter_weight(FilterFunctionKind::GeometricF0, w, t),
            dynamic: filter_weight(FilterFunctionKind::DynamicF1, w, t),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trajectories: usize,
    pub seed: u64,
    pub workers: usize,
    /// Trajectory samples across the longest interaction time.
    pub resolution: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            trajectories: 2000,
            seed: 0,
            workers: 1,
            resolution: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Ensemble-averaged signal of `build(T)` for every T in the grid under OU
/// noise. Trajectory `i` is shared across the grid and drawn from stream
/// `(seed, i)`, and partial sums are combined in index order.
pub fn monte_carlo_decay(
    build: &(dyn Fn(f64) -> Result<SequencePlan> + Sync),
    t_grid: &[f64],
    s: &SpectralDensity,
    consts: &PhysicalConstants,
    b: f64,
    mc: &MonteCarlo,
    opts: &ExecOptions,
) -> Result<Vec<McPoint>> {
    check_grid(t_grid, "T")?;
    if mc.trajectories < 2 {
        return Err(invalid("need at least two trajectories"));
    }
    let SpectralDensity::Lorentzian { tau_c, .. } = *s else {
        return Err(invalid("Monte-Carlo requires a Lorentzian spectrum"));
    };
    let plans = t_grid.iter().map(|&t| build(t)).collect::<Result<Vec<_>>>()?;
    let horizon = plans.iter().map(|p| p.interaction_time()).fold(0.0, f64::max);
    let dt = (tau_c / 10.0).min(horizon / mc.resolution.max(1) as f64);
    let runs = map_indexed(mc.trajectories, mc.workers, |i| -> Result<Vec<f64>> {
        let traj = ou_trajectory(s, horizon, dt, mc.seed, i as u64, consts)?;
        plans.iter().map(|p| execute(p, consts, b, Some(&traj), opts)).collect()
    })?;
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let n = runs.len() as f64;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mean = runs.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = runs.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            McPoint {
                t,
                mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect())
}
