use std::path::Path;
use std::process::{Command, Output};

fn capwit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capwit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn theory_prints_capacities() {
    let out = capwit(&["theory", "--p", "0.5", "--mu", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        "p = 0.500000, mu = 0.500000: Q = 0.188722, Q1 = 0.000000, Q2 = 0.000000, \
         Q_lim = 0.000000, Delta_Q = 0.188722"
    );
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["theory", "--p", "0.5"][..],
        &["theory", "--p", "1.5", "--mu", "0"],
        &[
            "simulate", "--p", "0.5", "--mu", "1", "--shots", "10", "--out", "x.json",
        ],
        &[
            "witness",
            "--p",
            "1/2",
            "--mu",
            "1",
            "--fit",
            "--bootstrap",
            "20",
        ],
        &["witness", "--p", "1/2", "--mu", "1", "--fit", "--grid", "1"],
        &["frobnicate"],
    ] {
        assert_eq!(capwit(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"p\": \"1/2\"").unwrap();
    assert_eq!(
        capwit(&["witness", "--input", path(&bad)]).status.code(),
        Some(3)
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        capwit(&["fit", "--input", path(&missing)]).status.code(),
        Some(3)
    );

    // single-pair data are absent from the appendix tables
    assert_eq!(
        capwit(&["witness", "--p", "1/2", "--mu", "1"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        capwit(&["witness", "--p", "1/3", "--mu", "1", "--fit"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let file = dir.path().join(name);
        let args = [
            "simulate", "--p", "0.25", "--mu", "0.5", "--shots", "500", "--seed", seed,
        ];
        let out = capwit(&[&args[..], &["--out", path(&file)]].concat());
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(file).unwrap()
    };
    let a = run("a.json", "9");
    assert_eq!(a, run("b.json", "9"));
    assert_ne!(a, run("c.json", "10"));
}

#[test]
fn exact_simulation_feeds_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.json");
    let sim = capwit(&["simulate", "--p", "0.5", "--mu", "1", "--out", path(&rec)]);
    assert_eq!(sim.status.code(), Some(0));

    let json = dir.path().join("witness.json");
    let out = capwit(&["witness", "--input", path(&rec), "--out", path(&json)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    let q = v["witness"]["q_det"].as_f64().unwrap();
    assert!((q - 1.0).abs() < 1e-6, "{q}");
    assert!(v["lim"]["q_lim"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn fit_reports_parameters() {
    let out = capwit(&["fit", "--p", "1/2", "--mu", "1/2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.starts_with("label p = 1/2, mu = 1/2: fitted p = 0.49"),
        "{text}"
    );
}

#[test]
fn reproduce_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let out = capwit(&["reproduce", "--grid", "11", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 15);
    assert!(lines[0].starts_with("p,mu,Q_theory,Q_det_tot_raw,Q_det_tot,sigma_Q"));
    assert!(lines[1].starts_with("0.500000,0.000000,0.000000,"));
    assert!(lines[14].starts_with("0.125000,1.000000,1.456436,"));
}

#[test]
fn reproduce_rejects_a_tampered_fixture_directory() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in capwit::dataio::APPENDIX_FIXTURES {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    std::fs::write(
        dir.path().join("MANIFEST.sha256"),
        capwit::dataio::APPENDIX_MANIFEST,
    )
    .unwrap();
    let ok = capwit(&[
        "reproduce",
        "--grid",
        "5",
        "--refine",
        "false",
        "--input",
        path(dir.path()),
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );

    let (name, text) = capwit::dataio::APPENDIX_FIXTURES[3];
    std::fs::write(dir.path().join(name), text.replace("0.9", "0.8")).unwrap();
    let bad = capwit(&["reproduce", "--grid", "5", "--input", path(dir.path())]);
    assert_eq!(bad.status.code(), Some(3));
}
