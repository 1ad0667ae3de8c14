use std::path::Path;
use std::process::{Command, Output};

use tracespace::instances::{rng, InstanceModel};
use tracespace::trace_ext::ExtensionSetup;
use tracespace::SpaceParams;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracespace")).args(args).output().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn single_mother_besov_norm() {
    let dir = tempfile::tempdir().unwrap();
    let input = config(dir.path(), "one.txt", "# dim=1 J=2\nM 2 2 0 1\n");
    let cfg = config(dir.path(), "n.cfg", &format!("norm = besov\ns = 0.5\np = 2\nq = 2\ninput = {input}\n"));
    let o = run(&["norm", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].last().unwrap().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn malformed_record_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = config(dir.path(), "bad.txt", "# dim=1 J=2\nF 0 1\nM 2 1 zz 3\n");
    let cfg = config(dir.path(), "n.cfg", &format!("input = {input}\n"));
    let o = run(&["norm", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn flat_norms_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = config(dir.path(), "flat.txt", "# flat dim=1\n0 0 1\n");
    for (norm, want) in [("f", 1.0), ("fqlpr", 0.5f64.sqrt())] {
        let cfg = config(dir.path(), "n.cfg", &format!("norm = {norm}\np = 2\nq = 2\ninput = {input}\n"));
        let o = run(&["norm", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: f64 = data_rows(&stdout(&o))[0].last().unwrap().parse().unwrap();
        assert!((v - want).abs() <= 1e-14, "{norm}: {v}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "i.cfg",
        "space = seq\np1 = 1\np2 = 2\nr = 3\nq = 1\ninstances = 2\nj_min = 2\nj_max = 3\n",
    );
    let a = run(&["interp-check", "--config", &cfg, "--seed", "11"]);
    let b = run(&["interp-check", "--config", &cfg, "--seed", "11"]);
    let c = run(&["interp-check", "--config", &cfg, "--seed", "12"]);
    assert!(matches!(a.status.code(), Some(0 | 2)), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let n1 = run(&["norm", "--seed", "5"]);
    assert_eq!(n1.stdout, run(&["norm", "--seed", "5"]).stdout);
}

#[test]
fn codimension_and_admissibility_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "k.cfg", "n = 2\nk = 2\n");
    for cmd in ["trace-ext-check", "atoms-check"] {
        let o = run(&[cmd, "--config", &cfg]);
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("1 <= k <= n - 1"), "{}", stderr(&o));
    }
    let cfg = config(dir.path(), "s.cfg", "s = 0.5\np = 2\n");
    let o = run(&["trace-ext-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("s - (alpha + k)/p > (n - k)(1/p - 1)_+"), "{}", stderr(&o));
}

#[test]
fn theta_outside_unit_interval_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (space, theta) in [("seq", "1"), ("besov", "0"), ("diagonal", "1.5")] {
        let cfg = config(dir.path(), "t.cfg", &format!("space = {space}\ntheta = {theta}\n"));
        let o = run(&["interp-check", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(1), "{space}");
        assert!(stderr(&o).contains("(0, 1)"), "{}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["norm", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "u.cfg", "s = 1\nmystery = 2\n");
    let o = run(&["norm", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
    let cfg = config(dir.path(), "t.cfg", "growth_factor = -1\n");
    assert_eq!(run(&["trace-ext-check", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn diagonal_couple_gives_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "d.cfg", "space = diagonal\ntheta = 0.5\nr = 1\ninstances = 3\nj_min = 1\nj_max = 3\n");
    let o = run(&["interp-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for row in data_rows(&stdout(&o)) {
        let ratio: f64 = row[10].parse().unwrap();
        assert!((ratio - 4.0).abs() <= 1e-9, "{ratio}");
    }
}

#[test]
fn besov_run_emits_envelopes_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let curves = dir.path().join("curves");
    let cfg = config(
        dir.path(),
        "b.cfg",
        &format!(
            "space = besov\ns = 3\np1 = 1\np2 = 2\ntheta = 0.5\nr = 3\ninstances = 3\nj_min = 2\nj_max = 3\nkcurve_dir = {}\n",
            curves.display()
        ),
    );
    let out = dir.path().join("report.tsv");
    let o = run(&["interp-check", "--config", &cfg, "--format", "tsv", "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("experiment\tseed\tJ\t"));
    assert!(text.contains("# besov J=2 count=3"));
    assert!(text.contains("# besov J=3 count=3"));
    assert!(text.contains("lorentz oracle"));
    let dumps: Vec<_> = std::fs::read_dir(&curves).unwrap().collect();
    assert_eq!(dumps.len(), 6);
    let first = std::fs::read_to_string(dumps[0].as_ref().unwrap().path()).unwrap();
    assert!(first.lines().all(|l| l.split(' ').count() == 2 && l.split(' ').all(|v| v.parse::<f64>().is_ok())));
}

#[test]
fn failed_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.cfg", "instances = 3\nj_max = 4\ngrowth_factor = 1e-3\n");
    let o = run(&["trace-ext-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("# FAIL extension boundedness"));
}

#[test]
fn trace_ext_rows_are_rederivable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "r.cfg", "s = 2.5\np = 1.5\nq = 1\nalpha = 0.5\ninstances = 4\nj_max = 4\n");
    let o = run(&["trace-ext-check", "--config", &cfg, "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let setup = ExtensionSetup::new(SpaceParams::new(2.5, 1.5, 1.0, 0.5, 2, 1), 2).unwrap();
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 12);
    for row in rows {
        let seed: u64 = row[0].parse().unwrap();
        let j: u32 = row[1].parse().unwrap();
        let lam = InstanceModel::default().coeff_seq(&mut rng(seed), 1, j);
        let want = setup.ext_norm_ratio(&lam).unwrap().ratio;
        assert_eq!(row[9].parse::<f64>().unwrap(), want);
    }
}

#[test]
fn atoms_and_kcurve_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "a.cfg", "instances = 1\nj_max = 4\n");
    let o = run(&["atoms-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("# PASS atoms"));
    let o = run(&["kcurve", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = data_rows(&stdout(&o));
    assert!(rows.len() > 10);
    let k: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(k.windows(2).all(|w| w[0] <= w[1]));
}
