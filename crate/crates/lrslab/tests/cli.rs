//! CLI surface tests: exit codes, output schemas, determinism, help text.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lrslab"))
}

fn write_rpca_example(path: &Path) {
    std::fs::write(path, "3 3\n0 1 1\n1 0 0\n1 0 0\n").unwrap();
}

#[test]
fn help_on_every_subcommand() {
    for sub in [
        "construct",
        "rigidity",
        "rpca",
        "mc",
        "sweep",
        "diagnose",
        "epsilon-study",
        "repro",
        "min-size",
    ] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{} --help failed", sub);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--help"), "{} help text missing", sub);
    }
}

#[test]
fn unknown_flags_rejected() {
    let out = bin()
        .args(["min-size", "--r", "1", "--s", "1", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn construct_rejects_swapped_lemma_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("x");
    let out = bin()
        .args(["construct", "--family", "lemma2", "--r", "2", "--s", "1"])
        .args(["--out-prefix"])
        .arg(&prefix)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("lemma3"),
        "error should direct to lemma3: {}",
        err
    );
}

#[test]
fn construct_writes_all_artifacts_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("fam");
    let out = bin()
        .args([
            "construct",
            "--family",
            "lemma2",
            "--r",
            "1",
            "--s",
            "2",
            "--eps",
            "1e-3",
            "--seed",
            "9",
        ])
        .args(["--out-prefix"])
        .arg(&prefix)
        .output()
        .unwrap();
    assert!(out.status.success());
    for suffix in ["M_limit", "M_eps", "L_eps", "S_eps"] {
        let p = dir.path().join(format!("fam_{}.txt", suffix));
        assert!(p.exists(), "{:?} missing", p);
        let m = lrslab::Matrix::read_file(&p).unwrap();
        assert_eq!(m.rows(), 5);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fam_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["family"], "lemma2");
    assert_eq!(meta["claimed_rigidity_lower_bound"], 4);
    // split identity survives the text round trip exactly
    let m_eps = lrslab::Matrix::read_file(&dir.path().join("fam_M_eps.txt")).unwrap();
    let l = lrslab::Matrix::read_file(&dir.path().join("fam_L_eps.txt")).unwrap();
    let s = lrslab::Matrix::read_file(&dir.path().join("fam_S_eps.txt")).unwrap();
    assert_eq!(l.add(&s).data(), m_eps.data());
}

#[test]
fn rigidity_cli_certifies_the_example_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    write_rpca_example(&mpath);
    let cert_path = dir.path().join("cert.json");
    let out = bin()
        .args(["rigidity", "--r", "1", "--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(&cert_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
    assert_eq!(cert["lower_bound"], 2);
    assert_eq!(cert["upper_bound"], 2);
    assert_eq!(cert["status"], "Exact");
    // witness is inlined in the matrix text format
    let wtext = cert["witness"].as_str().unwrap();
    let w = lrslab::Matrix::from_text(wtext, Path::new("inline")).unwrap();
    assert_eq!(w.nnz(1e-12), 2);
}

#[test]
fn rpca_and_diagnose_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    std::fs::write(&mpath, "3 3\n1 -2 -2\n-2 0 0\n-2 0 0\n").unwrap();
    let trace_path = dir.path().join("trace.csv");
    let out = bin()
        .args(["rpca", "--algo", "godec", "--r", "1", "--s", "1"])
        .args(["--max-iters", "500", "--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(&trace_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace_path).unwrap();
    assert!(text.starts_with("iter,residual,norm_L,norm_S,rank_L,nnz_S"));

    let cls_path = dir.path().join("cls.json");
    let out = bin()
        .args(["diagnose", "--trace"])
        .arg(&trace_path)
        .args(["--out"])
        .arg(&cls_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let cls: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cls_path).unwrap()).unwrap();
    assert!(cls["verdict"].is_string());
    assert!(cls["final_residual"].is_number());
}

#[test]
fn mc_cli_runs_and_rejects_bad_missing_lists() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    std::fs::write(&mpath, "3 3\n2 -1 -1\n-1 0 0\n-1 0 0\n").unwrap();
    let trace_path = dir.path().join("trace.csv");
    let out = bin()
        .args(["mc", "--algo", "asd", "--missing", "0,0", "--r", "1"])
        .args(["--init", "corner", "--max-iters", "200", "--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(&trace_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(trace_path.exists());

    let out = bin()
        .args(["mc", "--algo", "asd", "--missing", "9,9", "--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(dir.path().join("t2.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_file_is_an_io_error() {
    let out = bin()
        .args(["rigidity", "--r", "1", "--matrix", "/nonexistent/m.txt"])
        .args(["--out", "/tmp/lrslab_nonexistent_cert.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_cli_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    std::fs::write(&mpath, "3 3\n2 -1 -1\n-1 0 0\n-1 0 0\n").unwrap();
    let table = dir.path().join("sweep.csv");
    let out = bin()
        .args(["sweep", "--algo", "ialm", "--lambda-grid", "0.4:0.6:0.1"])
        .args(["--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(&table)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("lambda,rank_L,nnz_S,nuclear_L,l1_S"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    std::fs::write(&mpath, "3 3\n1 -2 -2\n-2 0 0\n-2 0 0\n").unwrap();
    let run = |out: &Path| {
        let st = bin()
            .args([
                "rpca",
                "--algo",
                "godec",
                "--seed",
                "5",
                "--max-iters",
                "300",
            ])
            .args(["--matrix"])
            .arg(&mpath)
            .args(["--out"])
            .arg(out)
            .output()
            .unwrap();
        assert!(st.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert_eq!(a, b);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"family": "simple3", "r": 1, "s": 1, "eps": 0.1, "seed": 3}"#,
    )
    .unwrap();
    let prefix = dir.path().join("c");
    // flag --eps overrides the file value
    let out = bin()
        .args(["construct", "--eps", "0.5", "--config"])
        .arg(&cfg_path)
        .args(["--out-prefix"])
        .arg(&prefix)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("\"eps\":0.5"),
        "resolved config not printed or override lost: {}",
        stderr
    );
    let m_eps = lrslab::Matrix::read_file(&dir.path().join("c_M_eps.txt")).unwrap();
    assert_eq!(m_eps.get(1, 1), 0.5);
}

#[test]
fn partial_solver_config_files_parse() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("m.txt");
    std::fs::write(&mpath, "3 3\n1 -2 -2\n-2 0 0\n-2 0 0\n").unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"max_iters": 50}"#).unwrap();
    let trace = dir.path().join("t.csv");
    let out = bin()
        .args(["rpca", "--algo", "godec", "--config"])
        .arg(&cfg_path)
        .args(["--matrix"])
        .arg(&mpath)
        .args(["--out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    // 50 iterations from the file plus the initial record
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn min_size_cli_values() {
    let out = bin()
        .args(["min-size", "--r", "1", "--s", "1", "--bound", "main"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "6");
    let out = bin()
        .args(["min-size", "--r", "1", "--s", "4", "--bound", "quadratic"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "11");
    // malformed s for the quadratic bound is a domain error
    let out = bin()
        .args(["min-size", "--r", "1", "--s", "3", "--bound", "quadratic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
