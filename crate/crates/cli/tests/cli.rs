use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spinadapt");
const H2: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/h2_sto6g.fcidump");
const H6: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/h6_sto6g.fcidump");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(BIN).args(args).env(key, val).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn help_for_every_subcommand() {
    for sub in [
        "pool-stats",
        "trotter-error",
        "spin-violation",
        "periodicity",
        "identity-scan",
        "closedform-verify",
        "jw-dump",
        "adapt",
    ] {
        let o = run(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"), "{sub}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[],
        &["no-such-command"],
        &["pool-stats", "--fcidump", "/nonexistent/file"],
        &["trotter-error", "--order", "3"],
        &["trotter-error", "--theta", "1:0:0.1"],
        &["trotter-error", "--generator", "ppqr:1,3,9"],
        &["trotter-error", "--generator", "bogus:1"],
        &["closedform-verify", "--which", "sm-s9", "--n-spatial", "3"],
        &["trotter-error", "--out", "/nonexistent/dir/x.csv"],
    ];
    for args in cases {
        assert_eq!(code(&run(args)), 2, "{args:?}");
    }
    assert_eq!(code(&run_env(&["pool-stats", "--fcidump", H2], "SPINADAPT_THREADS", "zero")), 2);
}

#[test]
fn failed_checks_exit_1() {
    assert_eq!(code(&run(&["periodicity", "--generator", "ppqr:1,3,5", "--expect", "periodic"])), 1);
    assert_eq!(code(&run(&["periodicity", "--generator", "so-single:0,5", "--period", "3.0"])), 1);
    assert_eq!(code(&run(&["identity-scan", "--theta", "0.5:20:0.01", "--floor", "1000"])), 1);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let path = dir.path().join(format!("t{threads}.csv"));
            let o = run_env(
                &["trotter-error", "--order", "2", "--theta", "0:3:0.05", "--out", path.to_str().unwrap()],
                "SPINADAPT_THREADS",
                threads,
            );
            assert_eq!(code(&o), 0);
            std::fs::read(&path).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].starts_with(b"theta,value\n"));
    assert_eq!(String::from_utf8_lossy(&runs[0]).lines().count(), 62);
}

#[test]
fn pool_stats_table() {
    let o = run(&["pool-stats", "--fcidump", H6]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        text,
        "symmetry,operators,unique_up_to_sign,hilbert_dim\nN,1551,1551,924\nN+Sz,870,870,400\nN+Sz+PG,420,420,200\nN+Sz+PG+S2,312,159,92\n"
    );
}

#[test]
fn jw_dump_verifies() {
    let o = run(&["jw-dump", "--generator", "ppqr:0,1,2", "--verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let lcu = run(&["jw-dump", "--generator", "single:0,1", "--lcu", "--theta", "0.3", "--verify"]);
    assert_eq!(code(&lcu), 0, "{}", String::from_utf8_lossy(&lcu.stderr));
    assert!(!lcu.stdout.is_empty());
}

#[test]
fn h2_adapt_converges() {
    let o = run(&["adapt", "--fcidump", H2]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8_lossy(&o.stdout);
    let last = csv.lines().last().unwrap();
    let err: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!(err < 1e-10, "{last}");
}
