//! Deterministic number formatting for emitted files.

/// Nine significant digits in fixed notation for moderate magnitudes,
/// scientific otherwise.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

/// `v` rounded to nine significant digits, for structured output.
pub fn round9(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.8e}").parse().unwrap_or(v)
    } else {
        v
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1.00000000");
        assert_eq!(num(-0.035714285714), "-0.0357142857");
        assert_eq!(num(123456.789012), "123456.789");
        assert_eq!(num(9.9999999996), "10.0000000");
        assert_eq!(num(1.5e-9), "1.50000000e-9");
        assert_eq!(round9(0.1 + 0.2), 0.3);
    }
}
