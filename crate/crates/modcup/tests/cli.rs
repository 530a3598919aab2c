//! End-to-end tests of the `modcup` binary: exit codes, output shapes, and
//! run-to-run determinism of the value columns.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modcup"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn modcup")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("modcup_cli_{}_{name}", std::process::id()))
}

fn shipped_reference() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../table1.ref").to_string()
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    let text = stdout_of(&out);
    assert!(out.status.success(), "selftest failed:\n{text}");
    assert!(text.contains("selftest:"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn reference_check_passes() {
    let out = run(&["table", "--check", &shipped_reference()]);
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(&out),
        stderr_of(&out)
    );
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r1,r2,value,tail_estimate,seconds");
    assert_eq!(lines.len(), 14, "header + 13 reference cells:\n{text}");
}

#[test]
fn reference_check_flags_bad_value() {
    let path = tmp_path("bad_ref.csv");
    std::fs::write(&path, "# doctored reference\n-0.3,0.2,9.999999,5e-4\n").unwrap();
    let out = bin()
        .args(["table", "--check"])
        .arg(&path)
        .output()
        .expect("spawn modcup");
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("check failed at (-0.3, 0.2)"), "{err}");
    // the computed row is still emitted
    assert!(stdout_of(&out).lines().count() == 2);
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[],
        &["table", "--bogus"],
        &["tri", "--r1", "-0.7"],
        &["tri", "--r1", "-0.7", "--r2", "0.6", "--tol", "0.5"],
        &["tri", "--r1", "-0.7", "--r2", "0.6", "--tol", "1e-15"],
        &["coeffs", "--r1", "0.4", "--M", "1000"],
        &["coeffs", "--r1", "0.4", "--M", "2"],
        &["table", "--check", "whatever.csv", "--r1", "0.2"],
        &["table", "--r1", "-0.3"],
        &["tri", "--r1", "-0.3", "--r2", "2.5"],
        &["psi", "--r1", "-0.3", "--r2", "0.2", "--mu1", "0.1", "--mu2", "-1.0", "--mu3", "0"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {}", stderr_of(&out));
    }
}

#[test]
fn bad_thread_env_exits_2() {
    let out = bin()
        .args(["selftest"])
        .env("MODCUP_THREADS", "many")
        .output()
        .expect("spawn modcup");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("MODCUP_THREADS"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in ["table", "tri", "psi", "haberland", "coeffs", "coinv", "selftest"] {
        assert!(stdout_of(&out).contains(sub), "missing {sub} in help");
    }
}

#[test]
fn empty_axis_gives_header_only() {
    let out = run(&["table", "--r1", "", "--r2", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "r1,r2,value,tail_estimate,seconds\n");
}

#[test]
fn table_value_columns_are_deterministic() {
    let args = [
        "table", "--r1", "-0.3,-0.7", "--r2", "0.2", "--M", "24", "--threads", "2",
        "--seed", "7",
    ];
    let strip_seconds = |text: &str| -> Vec<String> {
        text.lines()
            .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
            .collect()
    };
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success() && b.status.success());
    let (ta, tb) = (stdout_of(&a), stdout_of(&b));
    assert_eq!(ta.lines().count(), 3, "{ta}");
    assert_eq!(strip_seconds(&ta), strip_seconds(&tb));
}

#[test]
fn invalid_cell_becomes_skip_row() {
    let out = run(&["table", "--r1", "-0.3", "--r2", "2.5"]);
    assert_eq!(out.status.code(), Some(0), "parameter rejections skip, not fail");
    let text = stdout_of(&out);
    assert!(text.contains(",skip,"), "{text}");
    assert!(text.contains("invalid parameter"), "{text}");
}

#[test]
fn tri_json_record_shape() {
    let out = run(&["tri", "--r1", "-0.7", "--r2", "0.6", "--M", "24"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    for key in ["\"params\"", "\"value_re\"", "\"value_im\"", "\"error_estimate\""] {
        assert!(text.contains(key), "missing {key} in:\n{text}");
    }
}

fn json_number(text: &str, key: &str) -> f64 {
    let pat = format!("\"{key}\": ");
    let start = text.find(&pat).unwrap_or_else(|| panic!("no {key} in:\n{text}")) + pat.len();
    let rest = &text[start..];
    let end = rest
        .find(|c: char| c == ',' || c == '}' || c == '\n')
        .unwrap_or(rest.len());
    rest[..end].trim().parse().expect("parse JSON number")
}

#[test]
fn psi_matches_closed_form() {
    // at mu3 = 0 the kernel reduces to a Beta-function closed form; the CLI
    // reports it with the 1/(2 pi i) prefactor attached
    let out = run(&[
        "psi", "--r1", "-0.3", "--r2", "0.2", "--mu1", "-0.025", "--mu2",
        "0.016666666666666666", "--mu3", "0",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let want_im = -9.864671618949606 / (2.0 * std::f64::consts::PI);
    let got_im = json_number(&text, "value_im");
    assert!(
        (got_im - want_im).abs() <= 1e-9 * want_im.abs(),
        "{got_im} vs {want_im}"
    );
    assert_eq!(json_number(&text, "value_re"), 0.0);
}

#[test]
fn out_flag_writes_file_and_keeps_stdout_quiet() {
    let path = tmp_path("coeffs.csv");
    let out = bin()
        .args(["coeffs", "--r1", "0.4", "--M", "5", "--out"])
        .arg(&path)
        .output()
        .expect("spawn modcup");
    assert!(out.status.success());
    assert!(stdout_of(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,mu,a");
    assert_eq!(lines.len(), 7, "header + coefficients 0..=5:\n{text}");
    // a(0) = 1 and mu(0) = r/12 for eta^{2r}
    assert!(lines[1].starts_with("0,"), "{text}");
    assert!(lines[1].ends_with(",1"), "{text}");
}

#[test]
fn haberland_residual_is_small() {
    let out = run(&["haberland", "--r1", "1.2", "--M", "40"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let resid = json_number(&text, "error_estimate");
    let im = json_number(&text, "value_im");
    assert!(resid <= 1e-3 * im.abs(), "residual {resid} vs value_im {im}");
}
