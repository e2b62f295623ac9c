//! Parameter sweeps, log–log power-law fits and the scans behind the
//! scaling, decoupling and decoherence-regime results.

use serde::{Deserialize, Serialize};

use crate::analytic::{
    adiabaticity, berry_field_range, berry_sensitivity, berry_signal, ramsey_field_range, ramsey_sensitivity,
    ramsey_signal, rabi_for_adiabaticity, sensitivity, DynamicModel, GeometricModel,
};
use crate::error::{invalid, Error, Result};
use crate::noise::{
    coherence_decay, filter_integral, fit_t2g, monte_carlo_decay, Calibration, FilterFunctionKind, MonteCarlo,
    SpectralDensity,
};
use crate::numerics::{brent_root, least_squares};
use crate::parallel::map_indexed;
use crate::quadrature::QuadratureSpec;
use crate::sequences::{build_berry, build_hahn, build_ramsey, execute, ExecOptions, Protocol, SequencePlan};
use crate::units::PhysicalConstants;

/// Above this adiabaticity the closed-form Berry signal is not trusted and
/// curves always come from the propagator.
pub const ANALYTIC_A_LIMIT: f64 = 0.05;

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Numeric,
    NumericNoise { seed: u64, ensemble: usize },
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Numeric => "numeric",
            Engine::NumericNoise { .. } => "numeric+noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub protocol: Protocol,
    /// rad/s; Berry only.
    pub rabi: Vec<f64>,
    /// Berry only.
    pub n: Vec<u32>,
    /// s.
    pub t: Vec<f64>,
    /// Field grid for the signal curves, T.
    pub b: Vec<f64>,
    pub engine: Engine,
    pub sigma_p: f64,
    pub overhead: f64,
    /// Required by the noisy engine and by `t2g_grid`.
    pub noise: Option<SpectralDensity>,
    /// Interaction times for a coherence-time fit at every grid point.
    pub t2g_grid: Option<Vec<f64>>,
    pub workers: usize,
    pub consts: PhysicalConstants,
    pub exec: ExecOptions,
    pub quadrature: QuadratureSpec,
}

impl SweepSpec {
    pub fn new(protocol: Protocol, engine: Engine) -> Self {
        Self {
            protocol,
            rabi: vec![],
            n: vec![],
            t: vec![],
            b: vec![],
            engine,
            sigma_p: 1.0,
            overhead: 0.0,
            noise: None,
            t2g_grid: None,
            workers: 1,
            consts: PhysicalConstants::default(),
            exec: ExecOptions::default(),
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        if self.t.is_empty() || self.b.is_empty() {
            return Err(invalid("T and B grids must be nonempty"));
        }
        if self.t.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("T grid values must be positive"));
        }
        if self.b.iter().any(|b| !b.is_finite()) {
            return Err(invalid("B grid values must be finite"));
        }
        match self.protocol {
            Protocol::Berry => {
                if self.rabi.is_empty() || self.n.is_empty() {
                    return Err(invalid("berry sweeps need nonempty rabi and N grids"));
                }
                if self.rabi.iter().any(|r| !(r.is_finite() && *r > 0.0)) || self.n.contains(&0) {
                    return Err(invalid("rabi must be positive and N >= 1"));
                }
            }
            Protocol::Ramsey | Protocol::Hahn => {
                if !self.rabi.is_empty() || !self.n.is_empty() {
                    return Err(invalid(format!(
                        "{} sweeps take no rabi or N grid",
                        self.protocol.name()
                    )));
                }
            }
        }
        if self.protocol == Protocol::Hahn && self.engine == Engine::Analytic {
            return Err(invalid("hahn has no analytic engine; use numeric"));
        }
        if let Engine::NumericNoise { ensemble, .. } = self.engine {
            if ensemble < 2 {
                return Err(invalid("numeric+noise needs an ensemble of at least 2"));
            }
            if !matches!(self.noise, Some(SpectralDensity::Lorentzian { .. })) {
                return Err(invalid("numeric+noise needs a Lorentzian noise model"));
            }
        }
        if self.t2g_grid.is_some() && self.noise.is_none() {
            return Err(invalid("a T2g grid needs a noise model"));
        }
        if let Some(s) = &self.noise {
            s.validate()?;
        }
        if !(self.sigma_p > 0.0) || !(self.overhead >= 0.0) {
            return Err(invalid("sigma_P must be positive and overhead nonnegative"));
        }
        Ok(())
    }

    fn points(&self) -> Vec<(Option<f64>, Option<u32>, f64)> {
        let mut out = Vec::new();
        match self.protocol {
            Protocol::Berry => {
                for &r in &self.rabi {
                    for &n in &self.n {
                        for &t in &self.t {
                            out.push((Some(r), Some(n), t));
                        }
                    }
                }
            }
            _ => out.extend(self.t.iter().map(|&t| (None, None, t))),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub protocol: Protocol,
    pub engine: String,
    pub rabi: Option<f64>,
    pub n: Option<u32>,
    pub t: f64,
    /// Adiabaticity at B = 0 (Berry only).
    pub adiabaticity: Option<f64>,
    /// `(B, P)` pairs.
    pub curve: Vec<(f64, f64)>,
    pub eta: Option<f64>,
    pub max_slope: Option<f64>,
    pub b_at_max_slope: Option<f64>,
    pub b_max: Option<f64>,
    pub t2g: Option<f64>,
    pub t2g_residual: Option<f64>,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }

    /// One JSON object per line, in grid order.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs every grid point. Point-level failures are recorded in the record
/// and do not abort the sweep; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec.points();
    let records = map_indexed(points.len(), spec.workers, |i| {
        let (rabi, n, t) = points[i];
        let mut rec = SweepRecord {
            index: i,
            protocol: spec.protocol,
            engine: spec.engine.name().to_string(),
            rabi,
            n,
            t,
            adiabaticity: None,
            curve: vec![],
            eta: None,
            max_slope: None,
            b_at_max_slope: None,
            b_max: None,
            t2g: None,
            t2g_residual: None,
            error: None,
        };
        if let Err(e) = fill_record(spec, &mut rec) {
            rec.error = Some(e.to_string());
        }
        rec
    })?;
    Ok(SweepResult { records })
}

fn plan_for(protocol: Protocol, rabi: Option<f64>, n: Option<u32>, t: f64) -> Result<SequencePlan> {
    match protocol {
        Protocol::Ramsey => build_ramsey(t),
        Protocol::Hahn => build_hahn(t),
        Protocol::Berry => build_berry(rabi.unwrap_or(0.0), n.unwrap_or(0), t),
    }
}

/// Signal curve over `spec.b` for one grid point, and the engine actually
/// used. Berry points above [`ANALYTIC_A_LIMIT`] are always propagated.
pub fn signal_curve(spec: &SweepSpec, rabi: Option<f64>, n: Option<u32>, t: f64) -> Result<(Vec<(f64, f64)>, Engine)> {
    let c = &spec.consts;
    let plan = plan_for(spec.protocol, rabi, n, t)?;
    let mut engine = spec.engine;
    if let (Engine::Analytic, Some(r), Some(n)) = (engine, rabi, n) {
        if adiabaticity(r, n, t, 0.0, c.gamma)?.exact > ANALYTIC_A_LIMIT {
            engine = Engine::Numeric;
        }
    }
    let curve = match engine {
        Engine::Analytic => match spec.protocol {
            Protocol::Ramsey => {
                let m = DynamicModel::new(t, c)?;
                spec.b.iter().map(|&b| (b, ramsey_signal(&m, b))).collect()
            }
            Protocol::Berry => {
                let m = GeometricModel::new(rabi.unwrap_or(0.0), n.unwrap_or(0), c)?;
                spec.b.iter().map(|&b| (b, berry_signal(&m, b))).collect()
            }
            Protocol::Hahn => return Err(invalid("hahn has no analytic engine")),
        },
        Engine::Numeric => spec
            .b
            .iter()
            .map(|&b| Ok((b, execute(&plan, c, b, None, &spec.exec)?)))
            .collect::<Result<_>>()?,
        Engine::NumericNoise { seed, ensemble } => {
            let s = spec.noise.ok_or_else(|| invalid("numeric+noise needs a noise model"))?;
            let mc = MonteCarlo {
                trajectories: ensemble,
                seed,
                workers: 1,
                ..MonteCarlo::default()
            };
            let build = |_t: f64| Ok(plan.clone());
            spec.b
                .iter()
                .map(|&b| Ok((b, monte_carlo_decay(&build, &[t], &s, c, b, &mc, &spec.exec)?[0].mean)))
                .collect::<Result<_>>()?
        }
    };
    Ok((curve, engine))
}

fn fill_record(spec: &SweepSpec, rec: &mut SweepRecord) -> Result<()> {
    let c = &spec.consts;
    let plan = plan_for(spec.protocol, rec.rabi, rec.n, rec.t)?;
    let geo = match (rec.rabi, rec.n) {
        (Some(r), Some(n)) => {
            rec.adiabaticity = Some(adiabaticity(r, n, rec.t, 0.0, c.gamma)?.exact);
            Some(GeometricModel::new(r, n, c)?)
        }
        _ => None,
    };
    let dynm = DynamicModel::new(rec.t, c)?;
    let (curve, engine) = signal_curve(spec, rec.rabi, rec.n, rec.t)?;
    rec.curve = curve;
    rec.engine = engine.name().to_string();
    let numeric = |b: f64| execute(&plan, c, b, None, &spec.exec);

    rec.b_max = match spec.protocol {
        Protocol::Ramsey => Some(ramsey_field_range(&dynm)),
        Protocol::Berry => Some(berry_field_range(geo.as_ref().unwrap())),
        Protocol::Hahn => None,
    };
    let report = match (spec.protocol, engine) {
        (Protocol::Hahn, _) => None,
        (Protocol::Ramsey, Engine::Analytic) => Some(ramsey_sensitivity(&dynm, spec.sigma_p, spec.overhead)?),
        (Protocol::Berry, Engine::Analytic) => Some(berry_sensitivity(
            geo.as_ref().unwrap(),
            rec.t,
            spec.sigma_p,
            spec.overhead,
        )?),
        (_, Engine::Numeric) => {
            let f = |b: f64| numeric(b).unwrap_or(f64::NAN);
            Some(sensitivity(&f, None, (0.0, rec.b_max.unwrap()), rec.t, spec.sigma_p, spec.overhead)?)
        }
        (_, Engine::NumericNoise { .. }) => Some(curve_sensitivity(&rec.curve, rec.t, spec.sigma_p, spec.overhead)?),
    };
    if let Some(r) = report {
        if !r.eta.is_finite() {
            return Err(Error::DegenerateSlope(r.max_slope));
        }
        rec.eta = Some(r.eta);
        rec.max_slope = Some(r.max_slope);
        rec.b_at_max_slope = Some(r.b_at_max_slope);
    }

    if let (Some(grid), Some(s)) = (&spec.t2g_grid, &spec.noise) {
        let samples: Vec<(f64, f64)> = match engine {
            Engine::NumericNoise { seed, ensemble } => {
                let mc = MonteCarlo {
                    trajectories: ensemble,
                    seed,
                    workers: 1,
                    ..MonteCarlo::default()
                };
                let build = |t: f64| plan_for(spec.protocol, rec.rabi, rec.n, t);
                monte_carlo_decay(&build, grid, s, c, 0.0, &mc, &spec.exec)?
                    .into_iter()
                    .map(|p| (p.t, p.mean))
                    .collect()
            }
            _ => grid
                .iter()
                .map(|&t| {
                    let chi = protocol_chi(spec.protocol, s, rec.rabi, rec.n, t, c, &spec.quadrature)?;
                    Ok((t, (-chi).exp()))
                })
                .collect::<Result<_>>()?,
        };
        let fit = fit_t2g(&samples)?;
        rec.t2g = Some(fit.t2g);
        rec.t2g_residual = Some(fit.residual);
    }
    Ok(())
}

/// Largest finite-difference slope along a sampled curve.
fn curve_sensitivity(
    curve: &[(f64, f64)],
    t: f64,
    sigma_p: f64,
    overhead: f64,
) -> Result<crate::analytic::SensitivityReport> {
    let best = curve
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| (0.5 * (w[0].0 + w[1].0), ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| invalid("need at least two increasing B points for a slope"))?;
    if !(best.1 > 1e-15) {
        return Err(Error::DegenerateSlope(best.1));
    }
    Ok(crate::analytic::SensitivityReport {
        eta: sigma_p * (t + overhead).sqrt() / best.1,
        max_slope: best.1,
        b_at_max_slope: best.0,
        sigma_p,
        overhead,
    })
}

/// The decoherence exponent a protocol sees: Ramsey `χ₀`, Hahn `χ₁`, Berry
/// `A²χ₀ + χ₁` with A at B = 0 for the given (Ω, N, T).
pub fn protocol_chi(
    protocol: Protocol,
    s: &SpectralDensity,
    rabi: Option<f64>,
    n: Option<u32>,
    t: f64,
    c: &PhysicalConstants,
    q: &QuadratureSpec,
) -> Result<f64> {
    Ok(match protocol {
        Protocol::Ramsey => filter_integral(s, FilterFunctionKind::GeometricF0, t, q)?,
        Protocol::Hahn => filter_integral(s, FilterFunctionKind::DynamicF1, t, q)?,
        Protocol::Berry => {
            let a = adiabaticity(rabi.unwrap_or(0.0), n.unwrap_or(0), t, 0.0, c.gamma)?.exact;
            a * a * filter_integral(s, FilterFunctionKind::GeometricF0, t, q)?
                + filter_integral(s, FilterFunctionKind::DynamicF1, t, q)?
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Eta,
    BMax,
    T2g,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlVar {
    Rabi,
    N,
    T,
    A,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub control: ControlVar,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub response: Response,
    pub exponents: Vec<Exponent>,
    /// `ln` of the prefactor.
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn exponent(&self, c: ControlVar) -> Option<f64> {
        self.exponents.iter().find(|e| e.control == c).map(|e| e.value)
    }
}

fn control_value(r: &SweepRecord, c: ControlVar) -> Option<f64> {
    match c {
        ControlVar::Rabi => r.rabi,
        ControlVar::N => r.n.map(f64::from),
        ControlVar::T => Some(r.t),
        ControlVar::A => r.adiabaticity,
    }
}

fn response_value(r: &SweepRecord, resp: Response) -> Option<f64> {
    match resp {
        Response::Eta => r.eta,
        Response::BMax => r.b_max,
        Response::T2g => r.t2g,
    }
}

/// Multilinear least squares of `ln y` on `ln x_i` over successful records.
pub fn fit_power_law(result: &SweepResult, response: Response, controls: &[ControlVar]) -> Result<PowerLawFit> {
    let rows: Vec<(Vec<f64>, f64)> = result
        .records
        .iter()
        .filter(|r| r.ok())
        .filter_map(|r| {
            let y = response_value(r, response)?;
            let xs: Option<Vec<f64>> = controls.iter().map(|&c| control_value(r, c)).collect();
            Some((xs?, y))
        })
        .collect();
    fit_power_law_points(&rows, response, controls)
}

/// Same as [`fit_power_law`] on raw `(controls, response)` rows.
pub fn fit_power_law_points(rows: &[(Vec<f64>, f64)], response: Response, controls: &[ControlVar]) -> Result<PowerLawFit> {
    if controls.is_empty() {
        return Err(Error::FitFailure("no controls to fit".into()));
    }
    if rows.iter().any(|(xs, y)| !(*y > 0.0) || xs.iter().any(|x| !(*x > 0.0))) {
        return Err(Error::FitFailure("power-law fits need positive values".into()));
    }
    for (j, c) in controls.iter().enumerate() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        if vals.len() < 3 {
            return Err(Error::FitFailure(format!("{c:?} has fewer than 3 distinct values")));
        }
    }
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|(xs, _)| xs.iter().map(|v| v.ln()).chain(std::iter::once(1.0)).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let (beta, se, rss) = least_squares(&x, &y)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let p = controls.len();
    Ok(PowerLawFit {
        response,
        exponents: controls
            .iter()
            .enumerate()
            .map(|(j, &c)| Exponent {
                control: c,
                value: beta[j],
                stderr: se[j],
            })
            .collect(),
        log_prefactor: beta[p],
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        points: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmartRow {
    pub k: f64,
    pub rabi: f64,
    pub n: u32,
    pub adiabaticity: f64,
    pub eta: f64,
    /// `eta` rescaled so that k = 1 sits at the target, when one was given.
    pub eta_scaled: Option<f64>,
    pub b_max: f64,
    pub eta_ratio: f64,
    pub b_max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmartControl {
    pub rows: Vec<SmartRow>,
    /// Largest `B_max(k)/B_max(1)`.
    pub enhancement: f64,
    /// Largest `|η(k)/η(1) − 1|`.
    pub eta_spread: f64,
}

/// Scales Ω → kΩ and N → round(kN) at fixed T. The ratios are relative to
/// the unscaled base. Fails if any point exceeds A = 0.1.
pub fn smart_control_curve(
    base: &GeometricModel,
    t: f64,
    k_grid: &[f64],
    eta_target: Option<f64>,
    sigma_p: f64,
) -> Result<SmartControl> {
    if k_grid.is_empty() || k_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(invalid("k grid must be nonempty and positive"));
    }
    let eval = |k: f64| -> Result<SmartRow> {
        let rabi = base.rabi * k;
        let n = ((base.n as f64) * k).round().max(1.0) as u32;
        let m = GeometricModel { rabi, n, gamma: base.gamma };
        let a = adiabaticity(rabi, n, t, 0.0, base.gamma)?.exact;
        if a > 0.1 {
            return Err(Error::AdiabaticityViolation { k, a, limit: 0.1 });
        }
        let eta = berry_sensitivity(&m, t, sigma_p, 0.0)?.eta;
        Ok(SmartRow {
            k,
            rabi,
            n,
            adiabaticity: a,
            eta,
            eta_scaled: None,
            b_max: berry_field_range(&m),
            eta_ratio: 1.0,
            b_max_ratio: 1.0,
        })
    };
    let reference = eval(1.0)?;
    let scale = eta_target.map(|e| e / reference.eta);
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let mut r = eval(k)?;
        r.eta_ratio = r.eta / reference.eta;
        r.b_max_ratio = r.b_max / reference.b_max;
        r.eta_scaled = scale.map(|s| s * r.eta);
        rows.push(r);
    }
    let enhancement = rows.iter().map(|r| r.b_max_ratio).fold(f64::NEG_INFINITY, f64::max);
    let eta_spread = rows.iter().map(|r| (r.eta_ratio - 1.0).abs()).fold(0.0, f64::max);
    Ok(SmartControl {
        rows,
        enhancement,
        eta_spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonadiabaticRow {
    pub a: f64,
    pub rabi: f64,
    pub n: u32,
    /// Contrast `exp(−A²χ₀ − χ₁)`.
    pub contrast: f64,
    pub eta_geo: f64,
    pub eta_dyn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonadiabaticScan {
    pub t: f64,
    pub rows: Vec<NonadiabaticRow>,
    /// Smallest A with `η_geo < η_dyn`, if any.
    pub crossover: Option<f64>,
}

/// Geometric sensitivity against adiabaticity at `T = T₂*/2`.
///
/// A is realized at fixed N by choosing `Ω = 2πN/(AT)`. The signal is the
/// propagated Berry sequence scaled by the Eq.-(3) contrast, and η comes
/// from its steepest slope within `[0, 1.5·B_max]`. The reference is
/// Ramsey at the same T with contrast `exp(−χ₀)`.
pub fn nonadiabatic_sensitivity_scan(
    cal: &Calibration,
    a_grid: &[f64],
    n: u32,
    consts: &PhysicalConstants,
    sigma_p: f64,
    q: &QuadratureSpec,
    workers: usize,
) -> Result<NonadiabaticScan> {
    if a_grid.is_empty() || a_grid.iter().any(|a| !(*a > 0.0)) {
        return Err(invalid("A grid must be nonempty and positive"));
    }
    let t = cal.t2_star / 2.0;
    let s = cal.density;
    let chi0 = filter_integral(&s, FilterFunctionKind::GeometricF0, t, q)?;
    let chi1 = filter_integral(&s, FilterFunctionKind::DynamicF1, t, q)?;
    let eta_dyn = sigma_p * t.sqrt() / ((-chi0).exp() * consts.gamma * t);
    let opts = ExecOptions::default();
    let rows = map_indexed(a_grid.len(), workers, |i| -> Result<NonadiabaticRow> {
        let a = a_grid[i];
        let rabi = rabi_for_adiabaticity(a, n, t);
        let m = GeometricModel::new(rabi, n, consts)?;
        let plan = build_berry(rabi, n, t)?;
        let contrast = (-(a * a * chi0 + chi1)).exp();
        let signal = |b: f64| contrast * execute(&plan, consts, b, None, &opts).unwrap_or(f64::NAN);
        let hi = 1.5 * berry_field_range(&m);
        let r = sensitivity(&signal, None, (0.0, hi), t, sigma_p, 0.0)?;
        Ok(NonadiabaticRow {
            a,
            rabi,
            n,
            contrast,
            eta_geo: r.eta,
            eta_dyn,
        })
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let crossover = rows.iter().find(|r| r.eta_geo < r.eta_dyn).map(|r| r.a);
    Ok(NonadiabaticScan { t, rows, crossover })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Adiabatic,
    Intermediate,
    Nonadiabatic,
    StronglyNonadiabatic,
}

impl Regime {
    /// `A < 0.1`, `[0.1, 1)`, `[1, 3)`, `≥ 3`.
    pub fn classify(a: f64) -> Regime {
        if a < 0.1 {
            Regime::Adiabatic
        } else if a < 1.0 {
            Regime::Intermediate
        } else if a < 3.0 {
            Regime::Nonadiabatic
        } else {
            Regime::StronglyNonadiabatic
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Adiabatic => "adiabatic",
            Regime::Intermediate => "intermediate",
            Regime::Nonadiabatic => "nonadiabatic",
            Regime::StronglyNonadiabatic => "strongly_nonadiabatic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimeEngine {
    Eq3,
    /// Full propagator under OU noise at N turns per half.
    MonteCarlo { mc: MonteCarlo, n: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub a: f64,
    pub regime: Regime,
    pub t2g: Option<f64>,
    pub residual: Option<f64>,
    /// `(T, W)` samples the fit was made on.
    pub curve: Vec<(f64, f64)>,
    pub error: Option<String>,
}

/// Time at which `A²χ₀ + χ₁` reaches 1.
fn chi_unit_time(s: &SpectralDensity, a: f64, q: &QuadratureSpec) -> Result<f64> {
    let chi = |t: f64| -> Result<f64> {
        Ok(a * a * filter_integral(s, FilterFunctionKind::GeometricF0, t, q)?
            + filter_integral(s, FilterFunctionKind::DynamicF1, t, q)?)
    };
    let mut hi = 1e-9;
    while chi(hi)? < 1.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::FitFailure("no decay within reachable times".into()));
        }
    }
    let root = brent_root(|x| chi(x.exp()).map_or(f64::NAN, |c| c.ln()), (hi / 2.0).ln(), hi.ln(), 1e-8, 200)?;
    Ok(root.exp())
}

/// Geometric coherence time against A. Each point samples W(T) on 32 times
/// spanning the decay and fits a Gaussian. Fit failures are recorded per
/// point.
pub fn decoherence_regime_scan(
    s: &SpectralDensity,
    a_grid: &[f64],
    engine: RegimeEngine,
    consts: &PhysicalConstants,
    q: &QuadratureSpec,
    workers: usize,
) -> Result<Vec<RegimeRow>> {
    if a_grid.is_empty() || a_grid.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(invalid("A grid must be nonempty and nonnegative"));
    }
    s.validate()?;
    map_indexed(a_grid.len(), workers, |i| {
        let a = a_grid[i];
        let mut row = RegimeRow {
            a,
            regime: Regime::classify(a),
            t2g: None,
            residual: None,
            curve: vec![],
            error: None,
        };
        let run = |row: &mut RegimeRow| -> Result<()> {
            let te = chi_unit_time(s, a, q)?;
            let grid = linspace(te / 16.0, 2.0 * te, 32);
            row.curve = match engine {
                RegimeEngine::Eq3 => coherence_decay(s, a, &grid, q)?.samples,
                RegimeEngine::MonteCarlo { mc, n } => {
                    if a == 0.0 {
                        return Err(invalid("the propagator cannot realize A = 0"));
                    }
                    let build = |t: f64| build_berry(rabi_for_adiabaticity(a, n, t), n, t);
                    let mc = MonteCarlo { workers: 1, ..mc };
                    monte_carlo_decay(&build, &grid, s, consts, 0.0, &mc, &ExecOptions::default())?
                        .into_iter()
                        .map(|p| (p.t, p.mean))
                        .collect()
                }
            };
            let fit = fit_t2g(&row.curve)?;
            row.t2g = Some(fit.t2g);
            row.residual = Some(fit.residual);
            Ok(())
        };
        if let Err(e) = run(&mut row) {
            row.error = Some(e.to_string());
        }
        row
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::TWO_PI;

    #[test]
    fn pure_power_law_is_recovered() {
        let rows: Vec<(Vec<f64>, f64)> = (1..=8)
            .map(|i| {
                let x = i as f64 * 0.7;
                (vec![x], 3.0 * x.powf(-0.5))
            })
            .collect();
        let f = fit_power_law_points(&rows, Response::Eta, &[ControlVar::T]).unwrap();
        assert!((f.exponent(ControlVar::T).unwrap() + 0.5).abs() < 1e-9);
        assert!((f.log_prefactor - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn power_law_needs_spread() {
        let rows = vec![(vec![1.0], 1.0), (vec![2.0], 2.0), (vec![2.0], 2.1)];
        assert!(matches!(
            fit_power_law_points(&rows, Response::Eta, &[ControlVar::T]),
            Err(Error::FitFailure(_))
        ));
    }

    #[test]
    fn ramsey_periods_scale_inversely_with_t() {
        let mut spec = SweepSpec::new(Protocol::Ramsey, Engine::Analytic);
        spec.t = vec![0.2e-6, 0.5e-6, 1.0e-6];
        spec.b = linspace(0.0, 1e-4, 11);
        let r = run_sweep(&spec).unwrap();
        let ranges: Vec<f64> = r.records.iter().map(|x| x.b_max.unwrap()).collect();
        assert!((ranges[0] / ranges[2] - 5.0).abs() < 1e-12);
        assert!((ranges[1] / ranges[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let mut spec = SweepSpec::new(Protocol::Ramsey, Engine::Analytic);
        spec.t = vec![1e-6];
        spec.b = vec![0.0];
        spec.n = vec![3];
        assert!(run_sweep(&spec).is_err());
        spec.n.clear();
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.records.len(), 1);
        let mut noisy = SweepSpec::new(Protocol::Ramsey, Engine::NumericNoise { seed: 1, ensemble: 8 });
        noisy.t = vec![1e-6];
        noisy.b = vec![0.0];
        assert!(run_sweep(&noisy).is_err());
    }

    #[test]
    fn engines_agree_when_adiabatic() {
        let mut spec = SweepSpec::new(Protocol::Berry, Engine::Analytic);
        spec.rabi = vec![TWO_PI * 10e6];
        spec.n = vec![1];
        spec.t = vec![40e-6];
        spec.b = linspace(0.0, 1e-3, 25);
        let a = run_sweep(&spec).unwrap();
        spec.engine = Engine::Numeric;
        let b = run_sweep(&spec).unwrap();
        assert!(a.records[0].adiabaticity.unwrap() <= 0.01);
        for (x, y) in a.records[0].curve.iter().zip(&b.records[0].curve) {
            assert!((x.1 - y.1).abs() < 0.01);
        }
    }

    #[test]
    fn sweeps_are_deterministic_across_workers() {
        let mut spec = SweepSpec::new(Protocol::Berry, Engine::Numeric);
        spec.rabi = vec![TWO_PI * 5e6, TWO_PI * 8e6];
        spec.n = vec![1, 2];
        spec.t = vec![4e-6];
        spec.b = linspace(0.0, 5e-4, 9);
        let a = run_sweep(&spec).unwrap().to_json_lines();
        spec.workers = 3;
        let b = run_sweep(&spec).unwrap().to_json_lines();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 4);
    }

    #[test]
    fn smart_control_rejects_nonadiabatic_base() {
        let c = PhysicalConstants::default();
        let base = GeometricModel::new(TWO_PI * 1e6, 3, &c).unwrap();
        let r = smart_control_curve(&base, 4e-6, &[1.0, 2.0], None, 1.0);
        assert!(matches!(r, Err(Error::AdiabaticityViolation { .. })));
    }

    #[test]
    fn regime_labels_are_monotone() {
        let grid = logspace(1e-3, 10.0, 40);
        let labels: Vec<Regime> = grid.iter().map(|&a| Regime::classify(a)).collect();
        assert!(labels.windows(2).all(|w| w[0] <= w[1]));
    }
}
