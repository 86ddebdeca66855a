use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stability-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Data rows of a CSV file (after the comment and header lines).
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn alt_convergence_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["alt-convergence", "--r-from", "2", "--r-to", "4", "--r-max", "5"], dir.path());
    let r = rows(&dir.path().join("alt_convergence.csv"));
    assert_eq!(r.len(), 3);
    let nus: Vec<usize> = r.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(nus.windows(2).all(|p| p[0] <= p[1]));
    // nothing but the outputs is left in the directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn vershik_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["vershik", "--seed", "4", "--samples", "1", "--ns", "5"], dir.path());
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.path().join("vershik.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // one fingerprint with mass 1 per target
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l["n_samples"], 1);
        assert_eq!(l["mass"], 1.0);
        assert!(l.get("stderr").is_some());
    }
    let r = rows(&dir.path().join("vershik.csv"));
    assert_eq!(r[0][3], "1");
}

#[test]
fn identical_levels_have_zero_tv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["fullgroup-irs", "--levels", "a,a", "--k", "2"], dir.path());
    let r = rows(&dir.path().join("fullgroup_irs.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][4].parse::<f64>().unwrap(), 0.0);
    assert_eq!(r[0][6], "true");
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        ok(&["dgen", "--seed", "11", "--instances", "15"], dir);
        ok(&["vershik", "--seed", "11", "--samples", "5000", "--ns", "4,6"], dir);
    }
    for f in ["dgen.csv", "vershik.csv", "vershik.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r = rows(&a.path().join("dgen.csv"));
    assert_eq!(r.len(), 15);
    assert!(r.iter().all(|row| row[5] == "true"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# alt run\nr-from = 2\nr_to = 3\nr-max = 4\n").unwrap();
    let out = dir.path().join("out");
    ok(&["alt-convergence", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(rows(&out.join("alt_convergence.csv")).len(), 2);
    ok(&["alt-convergence", "--config", cfg.to_str().unwrap(), "--r-to", "5"], &out);
    assert_eq!(rows(&out.join("alt_convergence.csv")).len(), 4);
}

#[test]
fn usage_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "r-maks = 4\n").unwrap();
    let o = run(&["alt-convergence", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("r-maks"));

    let o = run(&["vershik"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = run(&["subshift-kr", "--substitution", "a->aa"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("substitution"));

    let o = run(&["dgen", "--seed", "1", "--tolerance", "1e-6"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn subshift_kr_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["subshift-kr", "--substitution", "thue-morse", "--seed-len", "2", "--refine-len", "2"], dir.path());
    let r = rows(&dir.path().join("subshift_kr.csv"));
    assert!(!r.is_empty());
    assert!(r.iter().all(|row| row[5] == "true" && row[6] == "true" && row[8] == "true"));
}

#[test]
fn embed_and_neumann_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["fullgroup-embed", "--ns", "1"], dir.path());
    assert!(rows(&dir.path().join("fullgroup_embed.csv")).iter().all(|row| row[10] == "true"));
    ok(&["neumann", "--n-to", "1"], dir.path());
    assert_eq!(rows(&dir.path().join("neumann.csv")).len(), 2);
    assert_eq!(rows(&dir.path().join("neumann_tail.csv")).len(), 5);
}
