use std::path::PathBuf;
use std::process::{Command, Output};

fn ncck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncck")).args(args).env_remove("NCCK_WORKERS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn kernel_text_matches_golden_files() {
    for (vars, d, file) in [
        ("1", "1", "semicircle_d1.txt"),
        ("1", "2", "semicircle_d2.txt"),
        ("1", "3", "semicircle_d3.txt"),
        ("1", "4", "semicircle_d4.txt"),
        ("2", "1", "pair_d1.txt"),
        ("2", "2", "pair_d2.txt"),
        ("2", "3", "pair_d3.txt"),
    ] {
        let o = ncck(&["kernel", "--law", "semicircle", "--vars", vars, "--degree", d]);
        assert!(o.status.success(), "{file}");
        assert_eq!(stdout(&o), golden(file), "{file}");
    }
}

#[test]
fn kernel_csv_rows() {
    let o = ncck(&["kernel", "--law", "semicircle", "--vars", "1", "--degree", "2", "--format", "csv"]);
    assert_eq!(stdout(&o), "word,coefficient\n1,2\nX1X1,-1\nX1X1X1X1,1\n");
}

#[test]
fn poisson_kernel_at_c_one() {
    let o = ncck(&["kernel", "--law", "poisson", "--c", "1", "--vars", "2", "--degree", "1"]);
    assert_eq!(stdout(&o), "3 - 2*X1 - 2*X2 + X1^2 + X2^2\n");
}

#[test]
fn verify_poisson_reports_psd() {
    let o = ncck(&["verify", "--law", "poisson", "--c", "5", "--vars", "2", "--degree", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["psd"], serde_json::json!(true));
    assert_eq!(v["matrix_size"], serde_json::json!(7));
}

#[test]
fn exit_codes() {
    let o = ncck(&["moments", "--observable", "X1^^2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
    let o = ncck(&["moments", "--observable", "X3", "--vars", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ncck(&["moments", "--law", "table", "--moments", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ncck(&["kernel", "--law", "cauchy", "--degree", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ncck(&["kernel", "--law", "poisson", "--degree", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let o = ncck(&["sample", "--help"]);
    let text = stdout(&o);
    for flag in [
        "--law", "--vars", "--degree", "--k", "--epsilon", "--samples", "--observable", "--seed", "--workers",
        "--variance", "--c", "--moments", "--out", "--format", "NCCK_WORKERS",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn sample_is_deterministic_and_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("row.csv");
    let args = [
        "sample", "--law", "semicircle", "--vars", "1", "--degree", "2", "--k", "2", "--epsilon", "0.7", "--samples",
        "300", "--observable", "X1^2", "--seed", "1", "--workers", "2",
    ];
    let mut with_out: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap();
    with_out.extend(["--out", out_str]);
    assert!(ncck(&with_out).status.success());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, stdout(&ncck(&args)));
    assert!(written.starts_with("d,k,epsilon,N,accept_rate,mean,stderr\n2,2,"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn moment_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("m.csv");
    std::fs::write(&table, "# one variable\nword,value\nX1,0\nX1X1,1\nX1X1X1,0\nX1X1X1X1,2\n").unwrap();
    let o = ncck(&["kernel", "--law", "table", "--moments", table.to_str().unwrap(), "--degree", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), golden("semicircle_d2.txt"));
}

#[test]
fn sdp_export_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "1 - X1^2\n").unwrap();
    let out = dir.path().join("toy.dat-s");
    let o = ncck(&["sdp-export", "--objective", "X1", "--constraints", g.to_str().unwrap(), "--degree", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("2\n2\n2 1\n"));

    let sol = dir.path().join("sol.txt");
    std::fs::write(&sol, "status = optimal\noptimum = -1\n").unwrap();
    let o = ncck(&[
        "sdp-check", "--objective", "X1", "--constraints", g.to_str().unwrap(), "--degree", "1", "--law", "poisson",
        "--c", "2", "--solution", sol.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // τ(X²) = 6 for rate 2, so the 1 × 1 localizing block is negative
    assert_eq!(v["feasible"], serde_json::json!(false));
    assert_eq!(v["witness_above_optimum"], serde_json::json!(true));
}
