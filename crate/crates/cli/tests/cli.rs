use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lproj"))
        .args(args)
        .env_remove("LPROJ_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn indifference_values_and_range() {
    let o = lproj(&["indifference", "--h-max", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let num = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((num(0, 1) - 0.57735).abs() < 1e-5 && (num(0, 2) - 0.57735).abs() < 1e-5);
    assert!((num(1, 1) - 0.64930).abs() < 1e-4 && (num(1, 2) - 0.74716).abs() < 1e-4);

    let o = lproj(&["indifference", "--h-max", "60"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 59);
    for r in &rows {
        let h: usize = r[0].parse().unwrap();
        let (lo, hi): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0);
        // Re-solve from the written values: both are roots of their defining equations.
        let x_lo = lo.powi(-2);
        let f_lo: f64 = (0..h).map(|m| x_lo.powi(m as i32)).sum::<f64>() - (h * h) as f64;
        let x_hi = hi.powi(-2);
        let f_hi: f64 = (1..h).map(|l| x_hi.powi(l as i32)).sum::<f64>() - (2 * h - 1) as f64;
        assert!(f_lo.abs() < 1e-9 * (h * h) as f64, "h={h}: {f_lo}");
        assert!(f_hi.abs() < 1e-9 * (2 * h) as f64, "h={h}: {f_hi}");
        assert_eq!(lproj::asymptotics::indifference_lp_vs_arla(h).unwrap(), lo);
    }

    assert_eq!(lproj(&["indifference", "--h-max", "1"]).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_feeds_estimate() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("ar1_rho05.json");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = lproj(&["simulate", s(&cfg), "--T", "100", "--seed", "5", "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("y1\n"));
    assert_eq!(text.lines().count(), 101);

    let est = dir.path().join("est.csv");
    let o = lproj(&[
        "estimate", s(&a), "--response", "y1", "--lags", "1", "--horizons", "1-6", "--boot-draws", "100", "--out",
        s(&est),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = std::fs::read_to_string(&est).unwrap();
    assert!(out.starts_with("horizon,point,se,lo,hi,method"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[5] == "LP-LA_b"));
}

#[test]
fn estimate_intervals_cover_truth_across_seeds() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("ar1_rho05.json");
    let (mut covered, mut total) = (0, 0);
    for seed in 0..10 {
        let data = dir.path().join(format!("d{seed}.csv"));
        let seed_s = seed.to_string();
        let o = lproj(&["simulate", s(&cfg), "--T", "240", "--seed", &seed_s, "--out", s(&data)]);
        assert!(o.status.success());
        let o = lproj(&[
            "estimate", s(&data), "--response", "0", "--lags", "1", "--boot-draws", "200", "--seed", &seed_s,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for r in csv_rows(&stdout(&o)) {
            let h: i32 = r[0].parse().unwrap();
            let (lo, hi): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
            let truth = 0.5f64.powi(h);
            covered += usize::from(lo <= truth && truth <= hi);
            total += 1;
        }
    }
    assert_eq!(total, 120);
    let share = covered as f64 / total as f64;
    assert!((0.8..=0.99).contains(&share), "share {share}");
}

#[test]
fn estimate_input_errors() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("x,y\n");
    for t in 0..40 {
        text.push_str(&format!("{t},{}\n", if t == 10 { "abc".to_string() } else { t.to_string() }));
    }
    let bad = write(&dir, "bad.csv", &text);
    let o = lproj(&["estimate", s(&bad), "--response", "x", "--lags", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 12, column 2 (y)"), "{}", stderr(&o));

    let good = write(&dir, "good.csv", &text.replace("abc", "1"));
    let o = lproj(&["estimate", s(&good), "--response", "x", "--lags", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--lags"));
    let o = lproj(&["estimate", s(&good), "--response", "z", "--lags", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lproj(&["estimate", s(&good), "--response", "x", "--lags", "1", "--shock-weight", "1,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    // Perfectly collinear columns: an estimation failure.
    let mut collinear = String::from("x,y\n");
    for t in 0..40 {
        let v = ((t * 7919) % 31) as f64;
        collinear.push_str(&format!("{v},{}\n", 2.0 * v));
    }
    let c = write(&dir, "col.csv", &collinear);
    let o = lproj(&["estimate", s(&c), "--response", "x", "--lags", "1", "--method", "LP-LA"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn every_method_runs_from_the_cli() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d.csv");
    let cfg = write(&dir, "var.json", r#"{"kind": "bivariate_var4", "rho": 0.5}"#);
    assert!(lproj(&["simulate", s(&cfg), "--T", "200", "--seed", "1", "--out", s(&data)]).status.success());
    for m in lproj::Method::ALL {
        let o = lproj(&[
            "estimate", s(&data), "--response", "y2", "--shock", "y1", "--lags", "4", "--horizons", "1,4",
            "--boot-draws", "60", "--method", m.label(),
        ]);
        assert!(o.status.success(), "{m}: {}", stderr(&o));
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows.len(), 2, "{m}");
        assert!(rows.iter().all(|r| r[5] == m.label()));
    }
}

#[test]
fn explosive_simulation_warns_then_overflows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "ex.json", r#"{"kind": "ar1", "rho": 1.2}"#);
    let o = lproj(&["simulate", s(&cfg), "--T", "500", "--seed", "3"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("explosive"));
    // 1.2^t passes 1e100 near t = 100 / log10(1.2) = 1263.
    let o = lproj(&["simulate", s(&cfg), "--T", "2000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    let t: f64 = err
        .rsplit("t = ")
        .next()
        .and_then(|x| x.trim().parse().ok())
        .unwrap_or_else(|| panic!("{err}"));
    assert!((t - 1263.0).abs() < 25.0, "{t}");
}

#[test]
fn mc_bundled_config_layout_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("var4_supplement.json");
    let outs: Vec<PathBuf> = ["a.csv", "b.csv"].iter().map(|n| dir.path().join(n)).collect();
    for (k, out) in outs.iter().enumerate() {
        let threads = if k == 0 { "1" } else { "8" };
        let o = lproj(&[
            "mc", s(&cfg), "--reps", "1", "--draws", "50", "--seed", "7", "--threads", threads, "--out", s(out),
        ]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(3), "{}", stderr(&o));
    }
    let a = std::fs::read(&outs[0]).unwrap();
    assert_eq!(a, std::fs::read(&outs[1]).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
    let text = String::from_utf8(a).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4 * 5 * 5);
    let methods: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        methods.into_iter().collect::<Vec<_>>(),
        vec!["AR", "AR-LA_b", "LP-LA_b", "LP-LA_b^8", "LP_b"]
    );
}

#[test]
fn mc_config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"schema_version": 1, "experiments": [{"dgp": {"kind": "ar1", "rho": 0.5},
            "methods": ["AR"], "horizons": [1], "sample_size": 100, "lags": 1, "reps": "many"}]}"#,
    );
    let o = lproj(&["mc", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reps") || stderr(&o).contains("string \"many\""), "{}", stderr(&o));

    let horizon = write(
        &dir,
        "h.json",
        r#"{"schema_version": 1, "experiments": [{"dgp": {"kind": "ar1", "rho": 0.5},
            "methods": ["AR"], "horizons": [99], "sample_size": 100, "lags": 1}]}"#,
    );
    let o = lproj(&["mc", s(&horizon)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizons"), "{}", stderr(&o));

    let truncated = write(&dir, "t.json", "{\"schema_version\": 1, \"experiments\": [");
    assert_eq!(lproj(&["mc", s(&truncated)]).status.code(), Some(2));
}

#[test]
fn mc_excess_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "x.json",
        r#"{"schema_version": 1, "experiments": [{"dgp": {"kind": "ar1", "rho": 40.0},
            "methods": ["LP-LA"], "horizons": [1], "sample_size": 100, "lags": 1, "reps": 3}]}"#,
    );
    let out = dir.path().join("x.csv");
    let o = lproj(&["mc", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // The table is still written, with the failures reported.
    let rows = csv_rows(&std::fs::read_to_string(out).unwrap());
    assert_eq!(rows[0][5], "3");
}

#[test]
fn compare_exit_status() {
    let dir = TempDir::new().unwrap();
    let head = "dgp,method,horizon,coverage,median_length,failed,reps\n";
    let reference = write(&dir, "r.csv", &format!("{head}v,AR,1,0.890,1.0,0,1000\n"));
    let same = write(&dir, "s.csv", &format!("{head}v,AR,1,0.890,1.0,0,1000\nv,AR,6,0.5,1.0,0,1000\n"));
    let edge = write(&dir, "e.csv", &format!("{head}v,AR,1,0.860,1.1,0,1000\n"));
    let off = write(&dir, "o.csv", &format!("{head}v,AR,1,0.850,1.0,0,1000\n"));
    let other = write(&dir, "k.csv", &format!("{head}v,LP,1,0.890,1.0,0,1000\n"));
    assert_eq!(lproj(&["compare", s(&same), s(&reference)]).status.code(), Some(0));
    assert_eq!(lproj(&["compare", s(&edge), s(&reference)]).status.code(), Some(0));
    let o = lproj(&["compare", s(&off), s(&reference)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("v,AR,1,0.85,0.89"));
    assert_eq!(lproj(&["compare", s(&other), s(&reference)]).status.code(), Some(2));
}
