use std::fmt::Write as _;

use berrymag::analytic::{berry_field_range, ramsey_field_range, DynamicModel, GeometricModel};
use berrymag::estimate::{estimate_dynamic, estimate_geometric, geometric_candidates, Measurement};
use berrymag::harness::{
    decoherence_regime_scan, fit_power_law, run_sweep, signal_curve, ControlVar, Engine, RegimeEngine, Response,
    SweepRecord, SweepResult, SweepSpec,
};
use berrymag::noise::{calibrate_noise, spectral_overlay, Calibration, MonteCarlo, SpectralDensity};
use berrymag::quadrature::QuadratureSpec;
use berrymag::sequences::Protocol;
use berrymag::units::{mhz_to_angular, mt_to_tesla, s_to_us, tesla_to_mt, us_to_s, TWO_PI};
use berrymag::{Error, PhysicalConstants};
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::format::{num, opt, round9};

/// Process exit status with the message shown on stderr.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Compute(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn cfg<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

/// One emitted file: a name suffix (empty for the main output) and contents.
pub struct Emitted {
    pub suffix: &'static str,
    pub body: String,
}

pub struct Outcome {
    pub files: Vec<Emitted>,
    pub code: i32,
    pub message: Option<String>,
}

impl Outcome {
    fn ok(files: Vec<Emitted>) -> Self {
        Self {
            files,
            code: 0,
            message: None,
        }
    }
}

fn header(command: &str, c: &Config) -> String {
    let mut s = format!("# berrymag {} {command}\n", env!("CARGO_PKG_VERSION"));
    for line in c.echo() {
        s.push_str("# ");
        s.push_str(&line);
        s.push('\n');
    }
    s
}

fn constants(c: &Config) -> Result<PhysicalConstants, Failure> {
    let gamma = TWO_PI * 1e9 * cfg(c.f64("gamma_ghz_per_t"))?;
    let hf = mhz_to_angular(cfg(c.f64("hyperfine_mhz"))?);
    Ok(PhysicalConstants::new(gamma, hf)?)
}

fn protocol(c: &Config) -> Result<Protocol, Failure> {
    let v = cfg(c.require("protocol"))?;
    v.parse()
        .map_err(|_| Failure::Config(format!("protocol: unknown value '{v}' (ramsey | hahn | berry)")))
}

fn engine(c: &Config) -> Result<Engine, Failure> {
    match cfg(c.require("engine"))? {
        "analytic" => Ok(Engine::Analytic),
        "numeric" => Ok(Engine::Numeric),
        "numeric+noise" => Ok(Engine::NumericNoise {
            seed: cfg(c.u64("seed"))?,
            ensemble: cfg(c.u64("ensemble"))? as usize,
        }),
        other => Err(Failure::Config(format!(
            "engine: unknown value '{other}' (analytic | numeric | numeric+noise)"
        ))),
    }
}

fn workers(c: &Config) -> Result<usize, Failure> {
    Ok(cfg(c.u64("workers"))? as usize)
}

/// Explicit (Δ, τc) when both are set, otherwise a calibration to the
/// T₂*/T₂ targets.
fn noise(c: &Config) -> Result<(SpectralDensity, Option<Calibration>), Failure> {
    match (cfg(c.opt_f64("delta_mhz"))?, cfg(c.opt_f64("tau_c_us"))?) {
        (Some(d), Some(tau)) => Ok((SpectralDensity::lorentzian(mhz_to_angular(d), us_to_s(tau))?, None)),
        (None, None) => {
            let cal = calibrate_noise(
                us_to_s(cfg(c.f64("t2_star_us"))?),
                us_to_s(cfg(c.f64("t2_us"))?),
                &QuadratureSpec::default(),
            )?;
            Ok((cal.density, Some(cal)))
        }
        _ => Err(Failure::Config("delta_mhz and tau_c_us must be given together".into())),
    }
}

fn sweep_spec(c: &Config) -> Result<SweepSpec, Failure> {
    let protocol = protocol(c)?;
    let engine = engine(c)?;
    let mut spec = SweepSpec::new(protocol, engine);
    spec.consts = constants(c)?;
    spec.t = cfg(c.grid("t_us"))?.into_iter().map(us_to_s).collect();
    spec.b = cfg(c.grid("b_mt"))?.into_iter().map(mt_to_tesla).collect();
    if protocol == Protocol::Berry {
        spec.rabi = cfg(c.grid("omega_mhz"))?.into_iter().map(mhz_to_angular).collect();
        spec.n = cfg(c.int_grid("n"))?;
    }
    spec.sigma_p = cfg(c.f64("sigma_p"))?;
    spec.overhead = us_to_s(cfg(c.f64("overhead_us"))?);
    spec.workers = workers(c)?;
    spec.t2g_grid = cfg(c.opt_grid("t2g_t_us"))?.map(|g| g.into_iter().map(us_to_s).collect());
    if matches!(engine, Engine::NumericNoise { .. }) || spec.t2g_grid.is_some() {
        spec.noise = Some(noise(c)?.0);
    }
    spec.validate()?;
    Ok(spec)
}

pub fn signal(c: &Config) -> Result<Outcome, Failure> {
    let spec = sweep_spec(c)?;
    let mut body = header("signal", c);
    body.push_str("B_mT,P,engine,protocol,omega_MHz,N,T_us\n");
    let mut points: Vec<(Option<f64>, Option<u32>, f64)> = Vec::new();
    match spec.protocol {
        Protocol::Berry => {
            for &r in &spec.rabi {
                for &n in &spec.n {
                    points.extend(spec.t.iter().map(|&t| (Some(r), Some(n), t)));
                }
            }
        }
        _ => points.extend(spec.t.iter().map(|&t| (None, None, t))),
    }
    for (rabi, n, t) in points {
        let (curve, used) = signal_curve(&spec, rabi, n, t)?;
        let omega = opt(rabi.map(|r| r / (TWO_PI * 1e6)));
        let n = n.map(|n| n.to_string()).unwrap_or_default();
        for (b, p) in curve {
            let _ = writeln!(
                body,
                "{},{},{},{},{omega},{n},{}",
                num(tesla_to_mt(b)),
                num(p),
                used.name(),
                spec.protocol.name(),
                num(s_to_us(t))
            );
        }
    }
    Ok(Outcome::ok(vec![Emitted { suffix: "", body }]))
}

fn value(v: f64) -> Value {
    json!(round9(v))
}

fn opt_value(v: Option<f64>) -> Value {
    v.map_or(Value::Null, value)
}

fn record_json(r: &SweepRecord) -> Value {
    let mut m = Map::new();
    m.insert("record".into(), json!("point"));
    m.insert("index".into(), json!(r.index));
    m.insert("protocol".into(), json!(r.protocol.name()));
    m.insert("engine".into(), json!(r.engine));
    m.insert("omega_MHz".into(), opt_value(r.rabi.map(|x| x / (TWO_PI * 1e6))));
    m.insert("N".into(), r.n.map_or(Value::Null, |n| json!(n)));
    m.insert("T_us".into(), value(s_to_us(r.t)));
    m.insert("A".into(), opt_value(r.adiabaticity));
    m.insert("status".into(), json!(if r.ok() { "ok" } else { "error" }));
    m.insert("error".into(), r.error.as_ref().map_or(Value::Null, |e| json!(e)));
    // T/√Hz → mT/√Hz.
    m.insert("eta_mT_rtHz".into(), opt_value(r.eta.map(tesla_to_mt)));
    m.insert("max_slope_per_mT".into(), opt_value(r.max_slope.map(|s| s / 1e3)));
    m.insert("B_at_max_slope_mT".into(), opt_value(r.b_at_max_slope.map(tesla_to_mt)));
    m.insert("B_max_mT".into(), opt_value(r.b_max.map(tesla_to_mt)));
    m.insert("T2g_us".into(), opt_value(r.t2g.map(s_to_us)));
    m.insert("T2g_residual".into(), opt_value(r.t2g_residual));
    m.insert(
        "curve".into(),
        Value::Array(
            r.curve
                .iter()
                .map(|&(b, p)| json!([round9(tesla_to_mt(b)), round9(p)]))
                .collect(),
        ),
    );
    Value::Object(m)
}

fn control_name(c: ControlVar) -> &'static str {
    match c {
        ControlVar::Rabi => "omega",
        ControlVar::N => "N",
        ControlVar::T => "T",
        ControlVar::A => "A",
    }
}

fn fit_records(result: &SweepResult, protocol: Protocol) -> Vec<Value> {
    let ok: Vec<&SweepRecord> = result.records.iter().filter(|r| r.ok()).collect();
    let distinct = |f: &dyn Fn(&SweepRecord) -> Option<f64>| {
        let mut v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    let mut controls = Vec::new();
    if protocol == Protocol::Berry {
        if distinct(&|r| r.rabi) >= 3 {
            controls.push(ControlVar::Rabi);
        }
        if distinct(&|r| r.n.map(f64::from)) >= 3 {
            controls.push(ControlVar::N);
        }
    }
    if distinct(&|r| Some(r.t)) >= 3 {
        controls.push(ControlVar::T);
    }
    if controls.is_empty() {
        return vec![];
    }
    let mut out = Vec::new();
    for (resp, name) in [(Response::Eta, "eta"), (Response::BMax, "B_max"), (Response::T2g, "T2g")] {
        let present = ok.iter().any(|r| match resp {
            Response::Eta => r.eta.is_some(),
            Response::BMax => r.b_max.is_some(),
            Response::T2g => r.t2g.is_some(),
        });
        if !present {
            continue;
        }
        let v = match fit_power_law(result, resp, &controls) {
            Ok(f) => {
                let exps: Map<String, Value> = f
                    .exponents
                    .iter()
                    .map(|e| (control_name(e.control).to_string(), value(e.value)))
                    .collect();
                let errs: Map<String, Value> = f
                    .exponents
                    .iter()
                    .map(|e| (control_name(e.control).to_string(), value(e.stderr)))
                    .collect();
                json!({"record": "fit", "response": name, "exponents": exps, "stderr": errs,
                       "r_squared": round9(f.r_squared), "points": f.points})
            }
            Err(e) => json!({"record": "fit", "response": name, "error": e.to_string()}),
        };
        out.push(v);
    }
    out
}

pub fn sweep(c: &Config) -> Result<Outcome, Failure> {
    let spec = sweep_spec(c)?;
    let result = run_sweep(&spec)?;
    let mut body = header("sweep", c);
    for r in &result.records {
        body.push_str(&record_json(r).to_string());
        body.push('\n');
    }
    for f in fit_records(&result, spec.protocol) {
        body.push_str(&f.to_string());
        body.push('\n');
    }
    let failed = result.failures();
    Ok(Outcome {
        files: vec![Emitted { suffix: "", body }],
        code: if failed > 0 { 4 } else { 0 },
        message: (failed > 0).then(|| format!("{failed} of {} grid points failed", result.records.len())),
    })
}

pub fn estimate(c: &Config) -> Result<Outcome, Failure> {
    let consts = constants(c)?;
    let p = cfg(c.f64("p"))?;
    let slope = cfg(c.opt_f64("slope_per_mt"))?.map(|s| s * 1e3);
    let mut meas = Measurement::new(p, slope);
    meas.sigma = cfg(c.f64("sigma"))?;
    meas.delta_b = cfg(c.opt_f64("delta_b_mt"))?.map(mt_to_tesla);
    let mut body = header("estimate", c);
    match protocol(c)? {
        Protocol::Berry => {
            let rabi = mhz_to_angular(cfg(c.grid("omega_mhz"))?[0]);
            let n = cfg(c.int_grid("n"))?[0];
            let m = GeometricModel::new(rabi, n, &consts)?;
            let cands = geometric_candidates(&m, p);
            let _ = writeln!(body, "B_max_mT = {}", num(tesla_to_mt(berry_field_range(&m))));
            let _ = writeln!(body, "candidates = {}", cands.len());
            body.push_str("candidate,B_mT,slope_per_mT,lobe\n");
            for (i, k) in cands.iter().enumerate() {
                let _ = writeln!(
                    body,
                    "{i},{},{},{}",
                    num(tesla_to_mt(k.b)),
                    num(k.slope / 1e3),
                    k.lobe_index
                );
            }
            match estimate_geometric(&m, &meas) {
                Ok(e) => {
                    let _ = writeln!(body, "B_hat_mT = {}", num(tesla_to_mt(e.b_hat)));
                    let _ = writeln!(body, "lobe_index = {}", e.lobe_index);
                    let _ = writeln!(body, "confidence = {}", num(e.confidence));
                    let _ = writeln!(body, "clamped = {}", e.clamped);
                    Ok(Outcome::ok(vec![Emitted { suffix: "", body }]))
                }
                Err(e @ Error::Unresolvable(_)) => {
                    let _ = writeln!(body, "status = unresolvable");
                    Ok(Outcome {
                        files: vec![Emitted { suffix: "", body }],
                        code: 5,
                        message: Some(e.to_string()),
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
        Protocol::Ramsey => {
            let t = us_to_s(cfg(c.grid("t_us"))?[0]);
            let m = DynamicModel::new(t, &consts)?;
            let window = match cfg(c.opt_grid("window_mt"))? {
                Some(w) if w.len() == 2 => (mt_to_tesla(w[0]), mt_to_tesla(w[1])),
                Some(_) => return Err(Failure::Config("window_mt: expected 'lo,hi'".into())),
                None => (0.0, ramsey_field_range(&m)),
            };
            let e = estimate_dynamic(&m, &meas, window)?;
            let _ = writeln!(body, "fringe_mT = {}", num(tesla_to_mt(ramsey_field_range(&m))));
            let _ = writeln!(body, "candidates = {}", e.candidates.len());
            let _ = writeln!(body, "clamped = {}", e.clamped);
            body.push_str("candidate,B_mT,fringe,best\n");
            for (i, k) in e.candidates.iter().enumerate() {
                let _ = writeln!(
                    body,
                    "{i},{},{},{}",
                    num(tesla_to_mt(k.b_hat)),
                    k.lobe_index,
                    e.best == Some(i)
                );
            }
            Ok(Outcome::ok(vec![Emitted { suffix: "", body }]))
        }
        Protocol::Hahn => Err(Failure::Config(
            "protocol: estimate supports ramsey and berry only".into(),
        )),
    }
}

pub fn decohere(c: &Config) -> Result<Outcome, Failure> {
    let consts = constants(c)?;
    let (density, cal) = noise(c)?;
    let q = QuadratureSpec::default();
    let a_grid = cfg(c.grid("a"))?;
    let engine = match cfg(c.require("decohere_engine"))? {
        "eq3" => RegimeEngine::Eq3,
        "monte-carlo" => RegimeEngine::MonteCarlo {
            mc: MonteCarlo {
                trajectories: cfg(c.u64("ensemble"))? as usize,
                seed: cfg(c.u64("seed"))?,
                workers: 1,
                ..MonteCarlo::default()
            },
            n: cfg(c.int_grid("n"))?[0],
        },
        other => {
            return Err(Failure::Config(format!(
                "decohere_engine: unknown value '{other}' (eq3 | monte-carlo)"
            )))
        }
    };
    let rows = decoherence_regime_scan(&density, &a_grid, engine, &consts, &q, workers(c)?)?;

    let head = header("decohere", c);
    let mut noise_line = String::new();
    if let SpectralDensity::Lorentzian { delta, tau_c } = density {
        let _ = writeln!(
            noise_line,
            "# noise: lorentzian delta_MHz = {}, tau_c_us = {}",
            num(delta / (TWO_PI * 1e6)),
            num(s_to_us(tau_c))
        );
    }
    if let Some(cal) = cal {
        let _ = writeln!(
            noise_line,
            "# calibrated: t2_star_us = {}, t2_us = {}",
            num(s_to_us(cal.t2_star)),
            num(s_to_us(cal.t2))
        );
    }

    let mut coherence = format!("{head}{noise_line}A,T_us,W\n");
    let mut regimes = format!("{head}{noise_line}A,T2g_us,regime,fit_residual,status\n");
    let mut failed = 0;
    for r in &rows {
        for &(t, w) in &r.curve {
            let _ = writeln!(coherence, "{},{},{}", num(r.a), num(s_to_us(t)), num(w));
        }
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => {
                failed += 1;
                format!("\"{}\"", e.replace('"', "'"))
            }
        };
        let _ = writeln!(
            regimes,
            "{},{},{},{},{status}",
            num(r.a),
            opt(r.t2g.map(s_to_us)),
            r.regime.name(),
            opt(r.residual)
        );
    }

    let overlay_a = cfg(c.f64("overlay_a"))?;
    let overlay_t = match cfg(c.opt_f64("overlay_t_us"))? {
        Some(t) => us_to_s(t),
        None => us_to_s(cfg(c.f64("t2_star_us"))?),
    };
    let omegas: Vec<f64> = cfg(c.grid("overlay_f_mhz"))?.into_iter().map(mhz_to_angular).collect();
    let table = spectral_overlay(&density, overlay_a, overlay_t, &omegas)?;
    let mut overlay = format!("{head}{noise_line}# S in rad^2/s, weights F(wT)/w^2 in s^2\nf_MHz,S,geometric,dynamic\n");
    for r in table {
        let _ = writeln!(
            overlay,
            "{},{},{},{}",
            num(r.omega / (TWO_PI * 1e6)),
            num(r.s),
            num(r.geometric),
            num(r.dynamic)
        );
    }
    Ok(Outcome {
        files: vec![
            Emitted {
                suffix: ".coherence.csv",
                body: coherence,
            },
            Emitted {
                suffix: ".regimes.csv",
                body: regimes,
            },
            Emitted {
                suffix: ".overlay.csv",
                body: overlay,
            },
        ],
        code: if failed > 0 { 4 } else { 0 },
        message: (failed > 0).then(|| format!("{failed} of {} regime fits failed", rows.len())),
    })
}

pub fn calibrate(c: &Config) -> Result<Outcome, Failure> {
    let t2_star = us_to_s(cfg(c.f64("t2_star_us"))?);
    let t2 = us_to_s(cfg(c.f64("t2_us"))?);
    let cal = calibrate_noise(t2_star, t2, &QuadratureSpec::default())?;
    let mut body = header("calibrate", c);
    let _ = writeln!(body, "family = lorentzian");
    let _ = writeln!(body, "delta_MHz = {}", num(cal.delta / (TWO_PI * 1e6)));
    let _ = writeln!(body, "tau_c_us = {}", num(s_to_us(cal.tau_c)));
    let _ = writeln!(body, "t2_star_us = {}", num(s_to_us(cal.t2_star)));
    let _ = writeln!(body, "t2_us = {}", num(s_to_us(cal.t2)));
    let _ = writeln!(body, "residual = {}", num(cal.residual));
    Ok(Outcome::ok(vec![Emitted { suffix: "", body }]))
}
