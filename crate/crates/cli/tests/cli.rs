use std::path::Path;
use std::process::{Command, Output};

fn lrv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const CONFIG: &str = r#"
models = ["M1"]
estimators = ["dk-hac", "nw/fixed-b:0.5"]
sample_sizes = [100]
deltas = [0.0]
n_reps = 100
base_seed = 7
"#;

#[test]
fn run_writes_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("results.csv");
    let cache = dir.path().join("cv.json");
    write(&cfg, CONFIG);
    let args = [
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
        "--cv-cache",
        cache.to_str().unwrap(),
    ];
    let o = lrv(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 3);
    assert!(cache.exists());

    // resumed cells are copied verbatim, wall time included
    let o = lrv(&args);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);

    let o = lrv(&["table", "--in", out.to_str().unwrap(), "--format", "markdown"]);
    assert!(o.status.success());
    let md = stdout(&o);
    assert!(md.starts_with("| estimator | M1 T=100 δ=0 |"));
    assert!(md.contains("| nw/fixed-b:0.5/fixedb |"));
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    write(&cfg, CONFIG);
    let b1_of = |seed: &str| {
        let o = lrv(&["run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--threads", "1"]);
        assert!(o.status.success());
        let text = stdout(&o);
        text.lines().nth(1).unwrap().split(',').nth(9).unwrap().to_string()
    };
    assert_eq!(b1_of("7"), b1_of("7"));
    assert_ne!(b1_of("7"), b1_of("8"));
}

#[test]
fn estimate_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("scores.csv");
    let mut text = String::from("a,b\n");
    for s in 0..300 {
        let x = (0.37 * s as f64).sin();
        let y = (1.3 * s as f64).cos() + 0.2 * x;
        text.push_str(&format!("{x},{y}\n"));
    }
    write(&data, &text);
    for (est, bw) in [("dk-hac", "joint-plugin"), ("nw", "nw94"), ("ewc", "auto"), ("hac-qs", "fixed:0.1")] {
        let o = lrv(&["estimate", "--input", data.to_str().unwrap(), "--estimator", est, "--bandwidth", bw]);
        assert!(o.status.success(), "{est}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["t"], 300);
        assert_eq!(v["columns"], serde_json::json!(["a", "b"]));
        let j = v["lrv"].as_array().unwrap();
        assert_eq!(j.len(), 2);
        assert_eq!(j[0][1], j[1][0]);
        assert!(j[0][0].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    write(&bad_cfg, "n_reps = 10\n");
    assert_eq!(lrv(&["run", "--config", bad_cfg.to_str().unwrap()]).status.code(), Some(2));

    let unknown = dir.path().join("unknown.toml");
    write(&unknown, "colour = 1\n");
    assert_eq!(lrv(&["run", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));

    let data = dir.path().join("d.csv");
    write(&data, "a\n1\nfoo\n");
    assert_eq!(lrv(&["estimate", "--input", data.to_str().unwrap()]).status.code(), Some(2));

    let zeros = dir.path().join("z.csv");
    write(&zeros, &format!("a\n{}", "0\n".repeat(50)));
    let o = lrv(&["estimate", "--input", zeros.to_str().unwrap(), "--estimator", "dk-hac"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));

    assert_eq!(lrv(&["estimate", "--input", data.to_str().unwrap(), "--estimator", "nope"]).status.code(), Some(2));
    assert_eq!(lrv(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn simulate_dumps_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m3.csv");
    let o = lrv(&["simulate", "--model", "M3", "--t", "200", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("y,x"));
    assert_eq!(text.lines().count(), 201);
}
