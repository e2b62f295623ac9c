//! Globally adaptive 15-point Gauss–Kronrod integration over a set of
//! initial panels. The interval with the largest error estimate is bisected
//! until the summed error meets the target.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Each initial panel is split into this many equal pieces before
    /// adaptation starts. Used to check convergence under refinement.
    pub panel_split: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 0.0,
            max_subdivisions: 200_000,
            panel_split: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss–Kronrod 7/15 rule on `[a, b]`: (Kronrod value, |K − G|).
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate over consecutive panels given by sorted `breakpoints`.
pub fn integrate_panels(f: &dyn Fn(f64) -> f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let split = spec.panel_split.max(1);
    let mut evals = 0;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let step = (b - a) / split as f64;
        for i in 0..split {
            let lo = a + step * i as f64;
            let hi = if i + 1 == split { b } else { lo + step };
            let (value, error) = gk15(f, lo, hi);
            evals += 15;
            heap.push(Piece { a: lo, b: hi, value, error });
        }
    }
    let total = |h: &BinaryHeap<Piece>| h.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    let (mut value, mut error) = total(&heap);
    let target = |v: f64| spec.abs_tol.max(spec.rel_tol * v.abs());
    let mut since_resum = 0;
    while error > target(value) {
        if heap.len() >= spec.max_subdivisions {
            let worst = heap.peek().copied();
            return Err(Error::QuadratureFailure {
                omega: worst.map_or(f64::NAN, |p| 0.5 * (p.a + p.b)),
                estimate: error,
                target: target(value),
            });
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval cannot be split any further.
            return Err(Error::QuadratureFailure {
                omega: mid,
                estimate: error,
                target: target(value),
            });
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        evals += 30;
        value += v1 + v2 - p.value;
        error += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
        since_resum += 1;
        if since_resum == 1000 {
            // Running sums drift; recompute them exactly now and then.
            (value, error) = total(&heap);
            since_resum = 0;
        }
    }
    let (value, error) = total(&heap);
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
        intervals: heap.len(),
    })
}

/// Integrate `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    integrate_panels(f, &[a, b], spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(&|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, &QuadratureSpec::default()).unwrap();
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        // ∫₀^{50π} sin²(x)/(1+x²) dx against a fine composite Simpson oracle.
        let f = |x: f64| x.sin().powi(2) / (1.0 + x * x);
        let b = 50.0 * PI;
        let n = 2_000_000;
        let h = b / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(h * i as f64)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let r = integrate(&f, 0.0, b, &QuadratureSpec::default()).unwrap();
        assert!((r.value - simpson).abs() < 1e-8, "{} vs {}", r.value, simpson);
    }

    #[test]
    fn sharp_peak_with_breakpoints() {
        let eps = 1e-4;
        let f = |x: f64| eps / (x * x + eps * eps);
        let r = integrate_panels(&f, &[0.0, 1e-3, 1.0], &QuadratureSpec::default()).unwrap();
        let exact = (1.0 / eps).atan();
        assert!((r.value - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn failure_is_reported() {
        let spec = QuadratureSpec {
            rel_tol: 1e-15,
            max_subdivisions: 4,
            ..Default::default()
        };
        let r = integrate(&|x: f64| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &spec);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
