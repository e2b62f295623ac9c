//! Small numerical kernels shared by the modules: bracketed root finding,
//! 1-D maximization and dense least squares.

use crate::error::{invalid, Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(invalid(format!("root not bracketed on [{a:e}, {b:e}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::FitFailure(format!("root search did not converge in {max_iter} iterations")))
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Global maximum on `[lo, hi]`: dense scan followed by golden refinement
/// around the best sample.
pub fn scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    let n = samples.max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..n {
        let x = lo + h * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let refined = golden_max(&f, a, b, h * 1e-9 + f64::EPSILON * hi.abs());
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}

/// Ordinary least squares `y ≈ X β` via normal equations.
/// Returns coefficients, their standard errors and the residual sum of squares.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let m = y.len();
    if m == 0 || x.len() != m {
        return Err(invalid("design matrix and response lengths differ"));
    }
    let p = x[0].len();
    if m < p {
        return Err(Error::FitFailure(format!("{m} observations for {p} parameters")));
    }
    // Column scaling keeps the normal matrix well conditioned.
    let mut scale = vec![0.0f64; p];
    for row in x {
        for (j, v) in row.iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    if scale.contains(&0.0) {
        return Err(Error::FitFailure("a regressor is identically zero".into()));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            let xi = row[i] / scale[i];
            xty[i] += xi * yi;
            for j in 0..p {
                xtx[i][j] += xi * row[j] / scale[j];
            }
        }
    }
    let inv = invert(&xtx).ok_or_else(|| Error::FitFailure("rank-deficient design".into()))?;
    let beta_s: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = (0..p).map(|j| row[j] / scale[j] * beta_s[j]).sum();
            (yi - fit).powi(2)
        })
        .sum();
    let dof = (m - p).max(1) as f64;
    let s2 = if m > p { rss / dof } else { 0.0 };
    let beta = (0..p).map(|j| beta_s[j] / scale[j]).collect();
    let se = (0..p).map(|j| (s2 * inv[j][j].max(0.0)).sqrt() / scale[j]).collect();
    Ok((beta, se, rss))
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let norm = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * norm {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        let pivot = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}
