use std::path::Path;
use std::process::{Command, Output};

const SUBCRITICAL: &str = r#"
[grid]
dim = 1
half_width = 512.0
points = 4096

[operator]
s = 0.5

[source]
family = "power"
p = 1.5

[weight]
family = "const"
c = 1.0

[initial]
shape = "gaussian"
amplitude = 0.5
width = 1.0

[solver]
dt_initial = 0.5
dt_min = 1e-6
t_max = 200.0
picard_sweeps = 3
"#;

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mixfujita"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_subcritical_reports_blow_up() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("simulate", SUBCRITICAL, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(trace.lines().any(|l| l == "# outcome=BlowUp"));
    assert!(trace.contains("t,sup_norm,l1_norm,boundary_mass_fraction,dt,prop1_margin"));
    assert!(dir.path().join("out/trace_long.csv").exists());
}

#[test]
fn missing_operator_s_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("simulate", &SUBCRITICAL.replace("s = 0.5", ""), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("operator.s"), "{}", stderr(&o));
}

#[test]
fn bad_time_steps_and_unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("simulate", &SUBCRITICAL.replace("dt_min = 1e-6", "dt_min = 1.0"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = run("simulate", &SUBCRITICAL.replace("p = 1.5", "p = 1.5\nq = 2"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_override_reaches_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, SUBCRITICAL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mixfujita"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("MIXFUJITA_OPERATOR_S", "1.5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn kernel_rejects_s_above_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("kernel", &SUBCRITICAL.replace("s = 0.5", "s = 1.5"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_half_laplacian_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("kernel", SUBCRITICAL, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/kernel.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# all_pass=true"), "{csv}");
}

#[test]
fn kernel_near_one_passes_and_reports_timing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("kernel", &SUBCRITICAL.replace("s = 0.5", "s = 0.99"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/kernel.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# all_pass=true"), "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("# total_seconds=")));
}

#[test]
fn criteria_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let sup = SUBCRITICAL.replace("p = 1.5", "p = 3.0").replace("amplitude = 0.5", "amplitude = 0.05");
    let o = run("criteria", &sup, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PredictGlobal"), "{text}");
    assert!(text.contains("beta, delta"));

    let o = run("criteria", SUBCRITICAL, dir.path(), &[]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PredictNonglobal"), "{text}");

    let lc = SUBCRITICAL.replace("family = \"power\"", "family = \"log_concave\"").replace("p = 1.5", "p = 2.0");
    let o = run("criteria", &lc, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Jensen hypothesis not certified"), "{text}");
    assert!(!text.contains("PredictNonglobal"));
}

const TINY_SWEEP: &str = r#"
[grid]
dim = 1
half_width = 256.0
points = 1024

[operator]
s = 0.5

[source]
family = "power"

[weight]
family = "const"
c = 1.0

[initial]
shape = "gaussian"
amplitude = 0.5
width = 1.0

[solver]
dt_initial = 0.5
dt_min = 1e-6
t_max = 20.0
picard_sweeps = 3

[sweep]
p_min = 1.5
p_max = 3.0
p_steps = 2
amplitudes = [0.5]
"#;

#[test]
fn sweep_is_deterministic_modulo_timestamp() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "2")] {
        let o = run("sweep", TINY_SWEEP, dir.path(), &["--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| -> Vec<String> {
        std::fs::read_to_string(d.path().join("out/sweep.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# generated_at="))
            .map(String::from)
            .collect()
    };
    let (x, y) = (read(&a), read(&b));
    assert_eq!(x, y);
    assert!(x.iter().any(|l| l.starts_with("p,amplitude,")));
    assert!(a.path().join("out/sweep_long.csv").exists());
}
