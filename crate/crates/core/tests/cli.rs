use std::path::Path;
use std::process::{Command, Output};

fn slepmom(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slepmom"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = slepmom(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let cmds: &[&[&str]] = &[
        &["--help"],
        &["dpss", "gen", "--help"],
        &["moments", "compute", "--help"],
        &["invariants", "--help"],
        &["reconstruct", "--help"],
        &["rotate-test", "--help"],
        &["noise-test", "--help"],
        &["classify", "--help"],
        &["synth", "dataset", "--help"],
        &["synth", "test-image", "--help"],
    ];
    for args in cmds {
        let out = slepmom(args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
    let out = slepmom(&["noise-test", "--help"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--image", "--basis", "--angles", "--orders", "--snr-db", "--seed", "--precision", "--threads"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let out = slepmom(&["dpss", "gen", "--n", "8", "--w", "0.1", "--k", "2", "--bogus", "1"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--bogus"));
    assert_eq!(stderr(&out).trim().lines().count(), 1);

    let out = slepmom(&["dpss", "gen", "--n", "8", "--w", "0.7", "--k", "2", "--out", "b.json"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--w"), "{}", stderr(&out));
    assert!(!p.join("b.json").exists());

    let out = slepmom(&["dpss", "gen", "--n", "8", "--w", "0.1", "--k", "9", "--out", "b.json"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--k"));

    ok(&["dpss", "gen", "--n", "16", "--w", "0.2", "--k", "4", "--out", "b.json"], p);
    ok(&["synth", "test-image", "--size", "32", "--out", "img.pgm"], p);

    let out = slepmom(&["moments", "compute", "--image", "missing.pgm", "--basis", "b.json", "--m", "2", "--l", "2", "--out", "s.json"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.pgm"));

    std::fs::write(p.join("bad.pgm"), b"P6\n1 1\n255\n\0\0\0").unwrap();
    let out = slepmom(&["moments", "compute", "--image", "bad.pgm", "--basis", "b.json", "--m", "2", "--l", "2", "--out", "s.json"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.pgm"));

    let out = slepmom(
        &["moments", "compute", "--image", "img.pgm", "--basis", "b.json", "--m", "5", "--l", "2", "--out", "s.json"],
        p,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--m"));

    let out = slepmom(
        &["moments", "compute", "--image", "img.pgm", "--basis", "b.json", "--m", "2", "--l", "8", "--angular", "16", "--out", "s.json"],
        p,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--l"));
}

#[test]
fn pipeline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["dpss", "gen", "--n", "64", "--w", "0.1", "--k", "10", "--out", "b.json"], p);
    let basis: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("b.json")).unwrap()).unwrap();
    let eig: Vec<f64> = basis["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(eig.len(), 10);
    assert_eq!(basis["sequences"].as_array().unwrap().len(), 10);
    assert!(eig.iter().all(|l| *l > 0.0 && *l < 1.0));

    ok(&["synth", "test-image", "--size", "64", "--out", "face.pgm"], p);
    ok(
        &["moments", "compute", "--image", "face.pgm", "--basis", "b.json", "--m", "10", "--l", "9", "--radial", "128", "--angular", "256", "--out", "s.json"],
        p,
    );
    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("s.json")).unwrap()).unwrap();
    assert_eq!(s["moments"].as_array().unwrap().len(), 10 * 19);
    assert_eq!(s["metadata"]["grid"]["radial"], 128);
    assert!(s["metadata"]["basis_id"].is_string());
    assert!(s["metadata"]["quadrature"].is_string());

    ok(&["invariants", "--moments", "s.json", "--out", "phi.csv"], p);
    let csv = std::fs::read_to_string(p.join("phi.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("phi_0_0,phi_0_1"));
    assert_eq!(lines[1].split(',').count(), 100);

    let out = ok(&["reconstruct", "--moments", "s.json", "--basis", "b.json", "--size", "64", "--out", "rec.pgm"], p);
    assert!(String::from_utf8_lossy(&out.stdout).contains("imaginary residual"));
    assert!(std::fs::read(p.join("rec.pgm")).unwrap().starts_with(b"P5"));

    ok(
        &["rotate-test", "--image", "face.pgm", "--basis", "b.json", "--angles", "0,35,90,140,180,230,270,325", "--radial", "64", "--angular", "128", "--out", "table.csv", "--json", "table.json", "--precision", "4"],
        p,
    );
    let table = std::fs::read_to_string(p.join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[0].starts_with("angle,phi_1_1"));
    assert!(rows[9].starts_with("std,"));
    assert_eq!(rows[1].split(',').count(), 11);

    ok(&["synth", "dataset", "--classes", "3", "--per-class", "4", "--size", "32", "--out-dir", "data"], p);
    assert_eq!(std::fs::read_dir(p.join("data")).unwrap().count(), 3);
    ok(
        &["classify", "--data", "data", "--basis", "b.json", "--fractions", "0.5", "--repeats", "2", "--epochs", "200", "--out", "acc.csv"],
        p,
    );
    let acc = std::fs::read_to_string(p.join("acc.csv")).unwrap();
    assert!(acc.starts_with("train_fraction,mean,std\n0.5,"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["dpss", "gen", "--n", "32", "--w", "0.15", "--k", "10", "--out", "b.json"], p);
    ok(&["synth", "test-image", "--size", "48", "--out", "img.pgm"], p);
    let runs: &[(&[&str], &str)] = &[
        (&["dpss", "gen", "--n", "32", "--w", "0.15", "--k", "10", "--out", "OUT"], "basis"),
        (&["noise-test", "--image", "img.pgm", "--basis", "b.json", "--radial", "32", "--angular", "64", "--seed", "5", "--threads", "3", "--out", "OUT"], "noise"),
        (&["classify", "--classes", "3", "--per-class", "6", "--size", "32", "--radial", "32", "--angular", "64", "--repeats", "3", "--epochs", "100", "--seed", "8", "--threads", "2", "--out", "OUT"], "classify"),
    ];
    for (args, name) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let target = format!("{name}{rep}.out");
            let argv: Vec<&str> = args.iter().map(|a| if *a == "OUT" { target.as_str() } else { a }).collect();
            ok(&argv, p);
            outputs.push(std::fs::read(p.join(&target)).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}
