use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_berrymag")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output with its header comments and column line removed.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ramsey_fringe_period() {
    let o = run(&["signal", "--protocol", "ramsey", "--t-us", "1", "--b-mt", "0,0.0357142857,0.0178571429"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\nB_mT,P,engine,protocol,omega_MHz,N,T_us\n"));
    let r = rows(&text);
    let p: Vec<f64> = r.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((p[0] - 1.0).abs() < 1e-8);
    assert!((p[1] - 1.0).abs() < 1e-8);
    assert!((p[2] + 1.0).abs() < 1e-8);
    // Inapplicable columns stay empty.
    assert_eq!(r[0][4], "");
    assert_eq!(r[0][5], "");
}

#[test]
fn berry_last_minimum() {
    let o = run(&["signal", "--b-mt", "0.35:0.47:121"]);
    assert!(o.status.success());
    let (b, p) = rows(&stdout(&o))
        .iter()
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .fold((0.0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
    assert!((b - 0.410).abs() < 0.005, "minimum at {b} mT");
    assert!(p < -0.99);
}

#[test]
fn empty_grid_is_a_config_error() {
    let o = run(&["signal", "--b-mt", ""]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b_mt"));
}

#[test]
fn unknown_keys_are_rejected() {
    assert_eq!(run(&["signal", "--nonsense", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "protocol = ramsey\nfoo = 2\n").unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "signal"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:2: unknown key 'foo'"));
}

#[test]
fn flat_slope_at_full_contrast_is_unresolvable() {
    let o = run(&["estimate", "--p", "1", "--slope-per-mt", "0"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("status = unresolvable"));
}

#[test]
fn estimate_recovers_a_field() {
    // Signal and slope of the analytic curve at 0.25 mT.
    let sig = run(&["signal", "--b-mt", "0.2499,0.25,0.2501", "--engine", "analytic", "--omega-mhz", "500"]);
    let r = rows(&stdout(&sig));
    let p: Vec<f64> = r.iter().map(|r| r[1].parse().unwrap()).collect();
    let slope = (p[2] - p[0]) / 0.0002;
    let o = run(&["estimate", "--omega-mhz", "500", "--p", &p[1].to_string(), "--slope-per-mt", &slope.to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("B_hat_mT = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((b - 0.25).abs() < 1e-4, "{b}");
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = [
        "--seed", "7", "signal", "--engine", "numeric+noise", "--ensemble", "3", "--delta-mhz", "0.02", "--tau-c-us",
        "50", "--b-mt", "0:0.3:4",
    ];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[&["--workers", "0"], &args[..]].concat());
    assert_eq!(rows(&stdout(&a)), rows(&stdout(&c)));
}

#[test]
fn sweep_emits_points_and_fits() {
    let o = run(&["sweep", "--omega-mhz", "20,40,80", "--n", "1", "--b-mt", "0:0.5:101"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.iter().filter(|v| v["record"] == "point").count(), 3);
    let eta = lines.iter().find(|v| v["record"] == "fit" && v["response"] == "eta").unwrap();
    assert!((eta["exponents"]["omega"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_reports_failed_points() {
    // A T2g grid far shorter than the decay cannot be fitted.
    let o = run(&[
        "sweep", "--protocol", "ramsey", "--t-us", "1,2", "--b-mt", "0:0.1:11", "--t2g-t-us", "0.001,0.002,0.003,0.004",
        "--delta-mhz", "0.01", "--tau-c-us", "100",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    let failed: Vec<&str> = text.lines().filter(|l| l.contains("\"status\":\"error\"")).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed[0].contains("\"eta_mT_rtHz\":5.68"));
    assert_eq!(run(&["sweep", "--protocol", "hahn", "--t-us", "1"]).status.code(), Some(2));
}

#[test]
fn overlay_without_geometric_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "--out", out.to_str().unwrap(), "decohere", "--delta-mhz", "0.01", "--tau-c-us", "100", "--a", "0,1",
        "--overlay-a", "0", "--overlay-t-us", "20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let overlay = std::fs::read_to_string(format!("{}.overlay.csv", out.display())).unwrap();
    assert!(overlay.contains("\nf_MHz,S,geometric,dynamic\n"));
    for r in rows(&overlay) {
        assert_eq!(r[2], "0");
        assert!(r[3].parse::<f64>().unwrap() >= 0.0);
    }
    let regimes = std::fs::read_to_string(format!("{}.regimes.csv", out.display())).unwrap();
    assert_eq!(rows(&regimes).len(), 2);
    assert!(std::path::Path::new(&format!("{}.coherence.csv", out.display())).exists());
}

#[test]
fn calibration_reports_targets() {
    let o = run(&["calibrate", "--t2-star-us", "50", "--t2-us", "500"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# berrymag "));
    assert!(text.contains("t2_star_us = 50.0000000"));
    assert_eq!(run(&["calibrate", "--t2-star-us", "50", "--t2-us", "40"]).status.code(), Some(3));
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.cfg");
    std::fs::write(&path, "protocol = ramsey\nt_us = 2 # fringe 17.86 uT\n").unwrap();
    let o = run(&["signal", "--b-mt", "0.0178571429", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# t_us = 2\n"));
    let p: f64 = rows(&text)[0][1].parse().unwrap();
    assert!((p - 1.0).abs() < 1e-8);
    let o = run(&["signal", "--config", path.to_str().unwrap(), "--t-us", "1", "--b-mt", "0.0178571429"]);
    let p: f64 = rows(&stdout(&o))[0][1].parse().unwrap();
    assert!((p + 1.0).abs() < 1e-8);
}
