//! Field estimation from a measured signal and its field slope.
//!
//! The geometric signal argument is monotone in B, so a value of P has one
//! arccos branch per half-lobe and the slope picks among a finite set. The
//! Ramsey phase wraps, so the same P and slope recur every fringe.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::{berry_field_range, berry_slope, ramsey_ambiguities, ramsey_slope, DynamicModel, GeometricModel};
use crate::error::{invalid, Error, Result};
use crate::units::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub p: f64,
    /// dP/dB from a two-point difference across `delta_b`.
    pub slope: Option<f64>,
    /// Per-value standard deviation of P.
    pub sigma: f64,
    /// Difference step; defaults to `B_max/10³` for the geometric model.
    pub delta_b: Option<f64>,
}

impl Measurement {
    pub fn new(p: f64, slope: Option<f64>) -> Self {
        Self {
            p,
            slope,
            sigma: 0.0,
            delta_b: None,
        }
    }

    fn slope_sigma(&self, default_step: f64) -> f64 {
        std::f64::consts::SQRT_2 * self.sigma / self.delta_b.unwrap_or(default_step)
    }
}

/// Central two-point difference `[f(B + δ/2) − f(B − δ/2)]/δ`.
pub fn difference_slope(f: impl Fn(f64) -> f64, b: f64, delta_b: f64) -> f64 {
    (f(b + 0.5 * delta_b) - f(b - 0.5 * delta_b)) / delta_b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub b: f64,
    /// Model slope at `b`.
    pub slope: f64,
    pub lobe_index: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEstimate {
    pub b_hat: f64,
    pub candidates_considered: usize,
    pub lobe_index: i64,
    /// Separation of the winning slope residual from the runner-up, in
    /// `[0, 1]`; 1 when only one candidate exists or the match is exact.
    pub confidence: f64,
    /// `|P|` exceeded 1 and was clamped.
    pub clamped: bool,
}

fn clamp_p(meas: &Measurement) -> Result<(f64, bool)> {
    if !meas.p.is_finite() {
        return Err(invalid("P must be finite"));
    }
    if meas.p.abs() > 1.0 + 3.0 * meas.sigma.max(0.0) {
        return Err(Error::OutOfRange(meas.p));
    }
    Ok((meas.p.clamp(-1.0, 1.0), meas.p.abs() > 1.0))
}

/// Every `B ∈ [0, B_max]` with `berry_signal(B) = p`, ascending in B.
///
/// Lobe 0 is the one starting at B = 0; the argument decreases through
/// `4πN − 2πk` at the start of lobe `k`.
pub fn geometric_candidates(m: &GeometricModel, p: f64) -> Vec<Candidate> {
    let top = 2.0 * TWO_PI * m.n as f64;
    let base = p.clamp(-1.0, 1.0).acos();
    let mut args = Vec::new();
    for k in 0..=(2 * m.n as i64) {
        for branch in [base, -base] {
            let a = TWO_PI * k as f64 + branch;
            if a >= PI * (1.0 - 1e-14) && a <= top * (1.0 + 1e-14) {
                args.push(a.clamp(PI, top));
            }
        }
    }
    args.sort_by(|a, b| b.total_cmp(a));
    args.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * top);
    args.into_iter()
        .map(|a| {
            let b = m.field_for_argument(a);
            Candidate {
                b,
                slope: berry_slope(m, b),
                lobe_index: (((top - a) / TWO_PI).floor() as i64).clamp(0, 2 * m.n as i64 - 1),
            }
        })
        .collect()
}

/// Picks the geometric candidate whose model slope best matches the
/// measured one. Ties within the combined slope uncertainty are reported as
/// [`Error::Unresolvable`] rather than broken arbitrarily.
pub fn estimate_geometric(m: &GeometricModel, meas: &Measurement) -> Result<FieldEstimate> {
    let slope = meas
        .slope
        .ok_or_else(|| invalid("geometric estimation needs a measured slope"))?;
    if !slope.is_finite() {
        return Err(invalid("slope must be finite"));
    }
    let (p, clamped) = clamp_p(meas)?;
    let cands = geometric_candidates(m, p);
    if cands.is_empty() {
        return Err(Error::OutOfRange(meas.p));
    }
    let b_max = berry_field_range(m);
    let scale = 2.0 * TWO_PI * m.n as f64 * m.gamma / m.rabi;
    let tol = 3.0 * meas.slope_sigma(b_max / 1e3) + 1e-9 * scale;
    pick(cands, slope, tol, clamped)
}

fn pick(cands: Vec<Candidate>, slope: f64, tol: f64, clamped: bool) -> Result<FieldEstimate> {
    let mut ranked: Vec<(f64, &Candidate)> = cands.iter().map(|c| ((c.slope - slope).abs(), c)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (r1, best) = ranked[0];
    let confidence = match ranked.get(1) {
        None => 1.0,
        Some(&(r2, _)) => {
            if r2 - r1 <= tol {
                return Err(Error::Unresolvable(cands.len()));
            }
            (r2 - r1) / (r2 + r1)
        }
    };
    Ok(FieldEstimate {
        b_hat: best.b,
        candidates_considered: cands.len(),
        lobe_index: best.lobe_index,
        confidence,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicEstimate {
    /// Every field in the window consistent with P, ascending.
    pub candidates: Vec<FieldEstimate>,
    /// Index of the candidate whose slope matches best, when a slope was given.
    pub best: Option<usize>,
    pub clamped: bool,
}

/// All Ramsey solutions in `window`. The slope ranks them but cannot remove
/// the 2π ladder, so every candidate is returned.
pub fn estimate_dynamic(m: &DynamicModel, meas: &Measurement, window: (f64, f64)) -> Result<DynamicEstimate> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 <= window.1) {
        return Err(invalid("prior window must be a finite interval"));
    }
    let clamped = meas.p.abs() > 1.0;
    let p = meas.p.clamp(-1.0, 1.0);
    let bs = ramsey_ambiguities(m, p, window)?;
    let count = bs.len();
    let scale = m.gamma * m.t;
    let residuals: Vec<Option<f64>> = bs
        .iter()
        .map(|&b| meas.slope.map(|s| (ramsey_slope(m, b) - s).abs()))
        .collect();
    let best = residuals
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let candidates = bs
        .iter()
        .zip(&residuals)
        .map(|(&b, r)| FieldEstimate {
            b_hat: b,
            candidates_considered: count,
            lobe_index: (b * scale / TWO_PI).floor() as i64,
            confidence: r.map_or(0.0, |r| (-r / scale).exp()),
            clamped,
        })
        .collect();
    Ok(DynamicEstimate {
        candidates,
        best,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{berry_signal, ramsey_field_range, ramsey_signal};
    use crate::PhysicalConstants;

    fn model() -> GeometricModel {
        GeometricModel::new(TWO_PI * 5e6, 3, &PhysicalConstants::default()).unwrap()
    }

    fn measure(m: &GeometricModel, b: f64) -> Measurement {
        let step = berry_field_range(m) / 1e4;
        Measurement {
            p: berry_signal(m, b),
            slope: Some(difference_slope(|x| berry_signal(m, x), b, step)),
            sigma: 0.0,
            delta_b: Some(step),
        }
    }

    #[test]
    fn round_trip_half_range() {
        let m = model();
        let b = 0.5 * berry_field_range(&m);
        let e = estimate_geometric(&m, &measure(&m, b)).unwrap();
        assert!((e.b_hat / b - 1.0).abs() < 1e-6);
        assert!(e.candidates_considered > 1);
    }

    #[test]
    fn extremum_is_unresolvable() {
        let m = model();
        let r = estimate_geometric(&m, &Measurement::new(1.0, Some(0.0)));
        assert!(matches!(r, Err(Error::Unresolvable(_))));
    }

    #[test]
    fn candidate_count_is_finite() {
        let m = model();
        for &p in &[-0.99, -0.3, 0.0, 0.4, 0.98] {
            let c = geometric_candidates(&m, p);
            assert_eq!(c.len(), 4 * m.n as usize - 1, "P = {p}");
            assert!(c.iter().all(|c| (berry_signal(&m, c.b) - p).abs() < 1e-9));
        }
    }

    #[test]
    fn out_of_range_signal() {
        let m = model();
        let meas = Measurement {
            sigma: 0.01,
            ..Measurement::new(1.2, Some(1.0))
        };
        assert!(matches!(estimate_geometric(&m, &meas), Err(Error::OutOfRange(_))));
        assert!(estimate_geometric(&m, &Measurement::new(0.3, None)).is_err());
    }

    #[test]
    fn dynamic_ladder() {
        let c = PhysicalConstants::default();
        let m = DynamicModel::new(1e-6, &c).unwrap();
        let fringe = ramsey_field_range(&m);
        let b = 0.3 * fringe;
        let meas = Measurement::new(ramsey_signal(&m, b), Some(ramsey_slope(&m, b)));
        let one = estimate_dynamic(&m, &meas, (0.0, fringe)).unwrap();
        assert!(one.candidates.len() <= 2);
        assert!((one.candidates[one.best.unwrap()].b_hat - b).abs() < 1e-12);
        let five = estimate_dynamic(&m, &meas, (0.0, 5.0 * fringe)).unwrap();
        assert_eq!(five.candidates.len(), 10);
        let clamped = estimate_dynamic(&m, &Measurement::new(1.01, None), (0.0, fringe)).unwrap();
        assert!(clamped.clamped);
    }
}
