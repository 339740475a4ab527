use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambda-holonomy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn spectrum_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "omega = 3\ndelta = 4\ngrid_n = 1\n");
    let o = run(&["spectrum", "--config", &cfg]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(&row[4..7], &[0.0, 1.0, -9.0]);
    assert!((row[7] - (1.0f64 / 3.0).atan()).abs() < 1e-15);
    assert!(text.lines().last().unwrap().starts_with("# config_sha256="));
}

#[test]
fn invalid_configs_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (text, key) in [
        ("speed = 3\n", "speed"),
        ("delta_over_omega_list =\n", "delta_over_omega_list"),
    ] {
        let cfg = write_config(dir.path(), text);
        let o = run(&["sweep", "--config", &cfg]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{err}");
    }
    let o = run(&["spectrum", "--config", "/nonexistent/scenario.cfg"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/scenario.cfg"));
}

#[test]
fn curvature_csv_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid_n = 20\ndelta = 2\nplaquette_step = 1e-3\n",
    );
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = run(&[
            "curvature",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(o.status.success());
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    assert_eq!(
        String::from_utf8(a)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        401
    );
}

#[test]
fn holonomy_of_computational_basis_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "variant = computational-basis\n");
    let o = run(&["holonomy", "--config", &cfg, "--steps", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == "deviation").unwrap();
    assert_eq!(row[k].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn claims_exit_status_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("claims.csv");
    let o = run(&["claims", "--out", out.to_str().unwrap()]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    for (k, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4, "{line}");
        assert_eq!(fields[0], (k + 1).to_string());
        assert!(fields[1] == "pass" || fields[1] == "fail");
    }
    let any_fail = lines.iter().any(|l| l.split('\t').nth(1) == Some("fail"));
    assert_eq!(o.status.success(), !any_fail);
    assert!(std::fs::read_to_string(out)
        .unwrap()
        .starts_with("claim,description,check,value,threshold,result\n"));
}

#[test]
fn injected_sign_flip_fails_the_triviality_claim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "triviality_variant = du-sign\n");
    let o = run(&["claims", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stdout(&o).lines().any(|l| l.starts_with("2\tfail\t")));
}
