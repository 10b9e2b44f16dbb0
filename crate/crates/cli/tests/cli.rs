use std::path::Path;
use std::process::{Command, Output};

fn debate(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_debate")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn honest_bisection_prints_machine_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.cfg", "protocol = bisection\nmachine = stock:first_bit\ninput = 10\nseed = 5\n");
    let o = debate(dir.path(), &["run-debate", "--config", "a.cfg", "--out", "out", "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("verdict 1"), "{s}");
    assert!(s.contains("protocol=bisection verdict=1"), "{s}");
    assert!(dir.path().join("out/outcome.txt").exists());
    assert!(dir.path().join("out/trace.txt").exists());
}

#[test]
fn seed_flag_overrides_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.cfg", "protocol = bisection\nmachine = stock:const0\ninput = 0\n");
    let o = debate(dir.path(), &["run-debate", "--config", "a.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no seed"), "{}", stderr(&o));
    let o = debate(dir.path(), &["run-debate", "--config", "a.cfg", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed=9"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.cfg", "seed = 1\n# comment\nprotocol = sideways\n");
    let o = debate(dir.path(), &["experiment", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["run-debate", "--bogus"][..], &["experiment", "--mode", "fast"], &["experiment", "--seed", "x"], &["nothing"], &[]] {
        let o = debate(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = debate(dir.path(), &["experiment", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_expectation_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let base = "protocol = stochastic\nmachine = stock:single_query\noracle = const 9/10\ninput = 1\nseed = 3\ntrials = 40\nmode = scaled\n";
    write(dir.path(), "ok.cfg", &format!("{base}expect_min = 0.5\n"));
    write(dir.path(), "bad.cfg", &format!("{base}expect_max = 0.5\n"));
    let o = debate(dir.path(), &["experiment", "--config", "ok.cfg", "--out", "ok"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("ok/experiment.csv")).unwrap();
    assert!(csv.starts_with("a,b,trials,successes,"));
    let o = debate(dir.path(), &["experiment", "--config", "bad.cfg", "--out", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "s.cfg",
        "protocol = crossexam\nmachine = stock:parity3\ninput = 110\nseed = 11\ntrials = 4\nfamily = auto\nsweep_side = a\n",
    );
    for out in ["r1", "r2"] {
        let o = debate(dir.path(), &["sweep", "--config", "s.cfg", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["sweep.csv", "sweep.json"] {
        let a = std::fs::read(dir.path().join("r1").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("r2").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn check_exhaustive_on_one_machine() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.cfg", "machine = stock:query_then_not\noracle = const 1/2\nseed = 2\n");
    let o = debate(dir.path(), &["check-exhaustive", "--config", "ok.cfg", "--out", "ok"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 counterexample(s)"));

    write(dir.path(), "broken.cfg", "machine = stock:const0\nseed = 2\nbroken_verifier = true\n");
    let o = debate(dir.path(), &["check-exhaustive", "--config", "broken.cfg", "--out", "broken"]);
    assert_eq!(o.status.code(), Some(1));
    let details = std::fs::read_to_string(dir.path().join("broken/counterexamples.txt")).unwrap();
    assert!(details.contains("# seed"));
}

#[test]
fn lipschitz_certifies_declared_constant() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "l.cfg", "machine = stock:majority3\noracle = const 1/2\ninput = 101\nseed = 1\n");
    let o = debate(dir.path(), &["lipschitz", "--config", "l.cfg", "--out", "l"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("certified"));
}
