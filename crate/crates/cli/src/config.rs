//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Every accepted key, its default and a one-line description.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("protocol", Some("berry"), "ramsey | hahn | berry"),
    ("engine", Some("analytic"), "analytic | numeric | numeric+noise"),
    ("omega_mhz", Some("5"), "Rabi frequency Omega/2pi, MHz (grid)"),
    ("n", Some("3"), "Larmor-vector turns per half sequence (grid)"),
    ("t_us", Some("8"), "interaction time, us (grid)"),
    ("b_mt", Some("0:0.6:201"), "field grid, mT"),
    ("gamma_ghz_per_t", Some("28"), "gyromagnetic ratio gamma/2pi, GHz/T"),
    ("hyperfine_mhz", Some("2.16"), "hyperfine line spacing, MHz"),
    ("sigma_p", Some("1"), "per-shot signal noise"),
    ("overhead_us", Some("0"), "per-shot dead time, us"),
    ("t2_star_us", Some("50"), "Ramsey calibration target, us"),
    ("t2_us", Some("500"), "Hahn-echo calibration target, us"),
    ("delta_mhz", None, "explicit Lorentzian rms Delta/2pi, MHz (with tau_c_us)"),
    ("tau_c_us", None, "explicit Lorentzian correlation time, us"),
    ("ensemble", Some("200"), "Monte-Carlo trajectories"),
    ("seed", Some("0"), "random seed"),
    ("workers", Some("1"), "worker threads (0 = all cores)"),
    ("out", None, "output path (stdout when absent)"),
    ("t2g_t_us", None, "sweep: interaction times for a T2g fit, us"),
    ("p", None, "estimate: measured signal"),
    ("slope_per_mt", None, "estimate: measured dP/dB, 1/mT"),
    ("sigma", Some("0"), "estimate: standard deviation of P"),
    ("delta_b_mt", None, "estimate: slope difference step, mT"),
    ("window_mt", None, "estimate: dynamic prior window lo:hi, mT"),
    ("a", Some("0.01,0.02,0.05,0.1,0.15,0.2,0.3,0.45,0.6,0.8,1,2"), "decohere: adiabaticity grid"),
    ("decohere_engine", Some("eq3"), "decohere: eq3 | monte-carlo"),
    ("overlay_a", Some("1"), "decohere: adiabaticity for the spectral overlay"),
    ("overlay_t_us", None, "decohere: interaction time for the overlay, us (default t2_star_us)"),
    ("overlay_f_mhz", Some("1e-5:1:200:log"), "decohere: overlay frequencies omega/2pi, MHz"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Default,
    File { path: String, line: usize },
    Override,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Default => write!(f, "default"),
            Source::File { path, line } => write!(f, "{path}:{line}"),
            Source::Override => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, (String, Source)>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|k| k.0 == key)
}

impl Config {
    pub fn defaults() -> Self {
        let values = KEYS
            .iter()
            .filter_map(|(k, d, _)| d.map(|d| (k.to_string(), (d.to_string(), Source::Default))))
            .collect();
        Self { values }
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.merge_text(&text, &path.display().to_string())
    }

    pub fn merge_text(&mut self, text: &str, name: &str) -> Result<(), String> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| format!("{name}:{line}: expected 'key = value', got '{content}'"))?;
            let (k, v) = (k.trim(), v.trim());
            if !known(k) {
                return Err(format!("{name}:{line}: unknown key '{k}'"));
            }
            if let Some(prev) = seen.insert(k.to_string(), line) {
                return Err(format!("{name}:{line}: key '{k}' already set on line {prev}"));
            }
            self.values.insert(
                k.to_string(),
                (
                    v.to_string(),
                    Source::File {
                        path: name.to_string(),
                        line,
                    },
                ),
            );
        }
        Ok(())
    }

    /// `--key value` pairs; `-` and `_` are interchangeable in keys.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), String> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| format!("expected --key, got '{flag}'"))?;
            let (key, inline) = match key.split_once('=') {
                Some((k, v)) => (k, Some(v.to_string())),
                None => (key, None),
            };
            let key = key.replace('-', "_");
            if !known(&key) {
                return Err(format!("--{key}: unknown key"));
            }
            let value = match inline {
                Some(v) => v,
                None => it.next().ok_or_else(|| format!("--{key}: missing value"))?.clone(),
            };
            self.set(&key, &value);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), (value.to_string(), Source::Override));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|v| v.0.as_str())
    }

    fn err(&self, key: &str, msg: impl fmt::Display) -> String {
        let src = self.values.get(key).map_or(Source::Default, |v| v.1.clone());
        format!("{key} ({src}): {msg}")
    }

    pub fn require(&self, key: &str) -> Result<&str, String> {
        self.raw(key).ok_or_else(|| format!("{key}: required but not set"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, String> {
        let v = self.require(key)?;
        let x: f64 = v.parse().map_err(|_| self.err(key, format!("invalid number '{v}'")))?;
        if !x.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(x)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.raw(key).map(|_| self.f64(key)).transpose()
    }

    pub fn u64(&self, key: &str) -> Result<u64, String> {
        let v = self.require(key)?;
        v.parse().map_err(|_| self.err(key, format!("invalid integer '{v}'")))
    }

    /// A comma list, or `lo:hi:count` (linear) / `lo:hi:count:log`.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>, String> {
        let v = self.require(key)?;
        let out = parse_grid(v).map_err(|e| self.err(key, e))?;
        if out.is_empty() {
            return Err(self.err(key, "grid is empty"));
        }
        Ok(out)
    }

    pub fn opt_grid(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.raw(key).map(|_| self.grid(key)).transpose()
    }

    pub fn int_grid(&self, key: &str) -> Result<Vec<u32>, String> {
        self.grid(key)?
            .into_iter()
            .map(|x| {
                if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                    Ok(x as u32)
                } else {
                    Err(self.err(key, format!("{x} is not a positive integer")))
                }
            })
            .collect()
    }

    /// The resolved configuration in declaration order, one `key = value`
    /// per line.
    pub fn echo(&self) -> Vec<String> {
        KEYS.iter()
            .filter_map(|(k, _, _)| self.raw(k).map(|v| format!("{k} = {v}")))
            .collect()
    }
}

pub fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| -> Result<f64, String> {
        let x: f64 = s.trim().parse().map_err(|_| format!("invalid number '{}'", s.trim()))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err("values must be finite".into())
        }
    };
    let v = v.trim();
    if v.is_empty() {
        return Ok(vec![]);
    }
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if !(parts.len() == 3 || parts.len() == 4) {
            return Err(format!("range '{v}' must be lo:hi:count or lo:hi:count:log"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("invalid count '{}'", parts[2].trim()))?;
        let log = match parts.get(3).map(|s| s.trim()) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(other) => return Err(format!("unknown spacing '{other}'")),
        };
        if log {
            if !(lo > 0.0 && hi > 0.0) {
                return Err("log ranges need positive bounds".into());
            }
            let (a, b) = (lo.ln(), hi.ln());
            return Ok(linear(a, b, count).into_iter().map(f64::exp).collect());
        }
        return Ok(linear(lo, hi, count));
    }
    v.split(',').map(num).collect()
}

fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2, 3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("1:100:3:log").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("").unwrap().is_empty());
    }

    #[test]
    fn file_diagnostics() {
        let mut c = Config::defaults();
        let e = c.merge_text("protocol = ramsey\nbogus = 1\n", "x.cfg").unwrap_err();
        assert_eq!(e, "x.cfg:2: unknown key 'bogus'");
        let e = c.merge_text("t_us 3\n", "x.cfg").unwrap_err();
        assert!(e.starts_with("x.cfg:1:"));
        let e = c.merge_text("t_us = 1\nt_us = 2\n", "x.cfg").unwrap_err();
        assert!(e.contains("already set"));
    }

    #[test]
    fn overrides_win() {
        let mut c = Config::defaults();
        c.merge_text("t_us = 4 # comment\n", "f").unwrap();
        c.apply_overrides(&["--t-us".into(), "6".into(), "--seed=9".into()]).unwrap();
        assert_eq!(c.raw("t_us"), Some("6"));
        assert_eq!(c.raw("seed"), Some("9"));
        assert!(c.apply_overrides(&["--nope".into(), "1".into()]).is_err());
        c.set("t_us", "x");
        assert!(c.f64("t_us").unwrap_err().contains("command line"));
    }
}
