use std::process::Command;

fn stokes(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stokes")).args(args).output().unwrap()
}

fn json(out: &std::process::Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn catalog_lists_all_theories() {
    let v = json(&stokes(&["catalog"]));
    let names: Vec<_> = v.as_array().unwrap().iter().map(|e| e["theory"]["name"].as_str().unwrap().to_owned()).collect();
    assert_eq!(names, ["A1A2", "A1A3", "A2A1", "A2A2"]);
}

#[test]
fn ieq_reproduces_cluster_fixture() {
    let v = json(&stokes(&["ieq", "--theory", "A1A2", "--param", "c=1", "--param", "lambda=0"]));
    let x1 = v["cluster"][0][0].as_f64().unwrap();
    let x2 = v["cluster"][1][0].as_f64().unwrap();
    assert!((x1 + 0.006415703123337184).abs() < 1e-12, "{x1}");
    assert!((x2 + 1.0).abs() < 1e-12, "{x2}");
}

#[test]
fn bad_input_exits_nonzero() {
    assert!(!stokes(&["ieq", "--theory", "A9A9"]).status.success());
    assert!(!stokes(&["ieq", "--param", "c"]).status.success());
    assert!(!stokes(&["hitchin-de", "--pde_nmesh", "100", "--method", "fourier"]).status.success());
}

#[test]
fn oper_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"theory": "A1A2", "mode": "oper", "theta": 0.0, "schedule": [0.5, 1.0]}"#).unwrap();
    let out = dir.path().join("res");
    let o = stokes(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--stem", "a1a2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("a1a2.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "X1_reldiff").unwrap();
    let recs: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert!(r[col].parse::<f64>().unwrap() < 1e-9);
    }
}
