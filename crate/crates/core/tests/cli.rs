use std::path::PathBuf;

use bessel_inverse::cli::main_with_args;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name).display().to_string()
}

fn run(out: &std::path::Path, args: &[&str]) -> u8 {
    let mut all = vec!["bessinv".to_string(), "--out".into(), out.display().to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    main_with_args(all)
}

#[test]
fn spectrum_writes_csv_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["spectrum", "--n", "3", "--beta", "inf,0"]), 0);
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("# "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "beta,n,lambda,zeta,kappa,tau,residual");
    assert_eq!(rows.len(), 7);
    let first: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((first - std::f64::consts::PI.powi(2)).abs() < 1e-9);
}

#[test]
fn run_file_matches_direct_invocation() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["run", &data("spectrum.toml")]), 0);
    let from_file = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--ell", "1", "--beta", "inf,0", "--n", "10", "--q", &data("sample.toml"), "--norming"];
    assert_eq!(run(dir2.path(), &args), 0);
    let direct = std::fs::read_to_string(dir2.path().join("spectrum.csv")).unwrap();
    let body = |t: &str| t.lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&from_file), body(&direct));
}

#[test]
fn uniqueness_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["uniqueness", "--data", &data("full_dirichlet.json")]), 0);
    assert_eq!(run(dir.path(), &["uniqueness", "--data", &data("thin_dirichlet.json")]), 2);
    assert_eq!(run(dir.path(), &["uniqueness", "--corollary", &data("corollary_5_6.json")]), 0);
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["spectrum"]), 1);
    assert_eq!(run(dir.path(), &["spectrum", "--n", "3", "--ell", "-2"]), 1);
    assert_eq!(run(dir.path(), &["uniqueness", "--data", "/nonexistent.json"]), 1);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[spectrum]\nn = \"ten\"\n").unwrap();
    assert_eq!(run(dir.path(), &["run", bad.to_str().unwrap()]), 1);
}

#[test]
fn verify_derivative_identity() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify", "lemma2.2", "--ell", "0.5", "--beta", "inf,0", "--n", "5"]), 0);
    assert_eq!(run(dir.path(), &["verify", "lemma2.2", "--n", "5", "--tol", "1e-300"]), 1);
}

#[test]
fn reconstruct_from_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["reconstruct", "--problem", &data("cells4_problem.json")]), 0);
    let text = std::fs::read_to_string(dir.path().join("reconstruction.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["provenance"]["config_hash"].is_string());
    assert!(v["result"]["l2_error"].as_f64().unwrap() < 1e-6);
}
