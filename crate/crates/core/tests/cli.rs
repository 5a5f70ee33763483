use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use movmono::cli::config::RunConfig;
use movmono::cli::output::report_body;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_movmono"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("MOVMONO_THREADS")
        .env_remove("MOVMONO_SEED")
        .output()
        .unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const FAILING: &str = "\
curvature = -1
n = 3
k = 2
R = 1.0
s_y = 0.4
surface = geodesic_disk
surface.centre_s = 0.4
surface.tilt = 0.5
suites = moving
t_grid = geometric 0.1 1 4
policy.max_refine_depth = 1
policy.target_rel_tol = 1e-14
";

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["verify"], &configs().join("equality_disk.conf"), &dir.path().join("ok"));
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let refused = run(&["verify"], &configs().join("sphere_k2_moving.conf"), &dir.path().join("refused"));
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("k cs(u)^2 >= 2"));

    let failing = write_config(dir.path(), "failing.conf", FAILING);
    let failed = run(&["verify"], &failing, &dir.path().join("failed"));
    assert_eq!(failed.status.code(), Some(1));
    assert!(dir.path().join("failed/report.json").exists());

    let bad = write_config(dir.path(), "bad.conf", "curvature = -1\nn = 3\nk = 2\nR = -1\nsurface = geodesic_disk\nsurface.centre_s = 0\nsurface.tilt = 0\n");
    let rejected = run(&["verify"], &bad, &dir.path().join("bad"));
    assert_eq!(rejected.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("line 4"));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("catenoid.conf");
    let mut bodies = Vec::new();
    for threads in ["1", "4", "8"] {
        let out = dir.path().join(threads);
        let o = run(&["verify", "--threads", threads], &config, &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<String> = ["report.csv", "excess.csv", "checks.csv"]
            .iter()
            .map(|f| read(&out.join(f)))
            .collect();
        bodies.push((files, report_body(&read(&out.join("report.json"))).unwrap()));
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn json_and_flat_configs_are_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let flat = configs().join("equality_disk.conf");
    let cfg = RunConfig::load(&flat).unwrap();
    let json = write_config(dir.path(), "equality.json", &cfg.to_json());
    assert_eq!(run(&["verify"], &flat, &dir.path().join("a")).status.code(), Some(0));
    assert_eq!(run(&["verify"], &json, &dir.path().join("b")).status.code(), Some(0));
    for f in ["report.csv", "checks.csv"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f}");
    }
}

/// Numeric cells within `1e-9` relative, others exactly.
fn assert_csv_close(actual: &str, expected: &str) {
    let (a, e): (Vec<&str>, Vec<&str>) = (actual.lines().collect(), expected.lines().collect());
    assert_eq!(a.len(), e.len());
    for (la, le) in a.iter().zip(&e) {
        for (ca, ce) in la.split(',').zip(le.split(',')) {
            match (ca.parse::<f64>(), ce.parse::<f64>()) {
                (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
                    assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-3), "{la}\n{le}");
                }
                _ => assert_eq!(ca, ce, "{la}\n{le}"),
            }
        }
    }
}

#[test]
fn catenoid_report_matches_golden_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], &configs().join("catenoid.conf"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/catenoid_report.csv");
    assert_csv_close(&read(&dir.path().join("report.csv")), &read(&golden));
}

#[test]
fn sweep_levelsets_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = run(&["sweep"], &configs().join("sphere_sweep.conf"), dir.path());
    assert_eq!(sweep.status.code(), Some(0), "{}", String::from_utf8_lossy(&sweep.stderr));
    let table = read(&dir.path().join("sweep.csv"));
    assert_eq!(table.lines().count(), 1 + 6 * 20);

    let levels = run(&["levelsets"], &configs().join("levelsets_hyperbolic.conf"), dir.path());
    assert_eq!(levels.status.code(), Some(0), "{}", String::from_utf8_lossy(&levels.stderr));
    for f in ["levelsets.csv", "levelsets_poincare.csv", "levelsets.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let verify = run(&["verify"], &configs().join("equality_disk.conf"), dir.path());
    assert_eq!(verify.status.code(), Some(0));
    let report = run(&["report"], &configs().join("equality_disk.conf"), dir.path());
    assert_eq!(report.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&report.stdout).contains("PASS"));
}
