//! Command-line surface: reproduce the reference table, compute single
//! values of T / Psi / the Haberland residual, dump coefficients and
//! coinvariant dimensions, and run a seeded cross-module self-test.
//!
//! Exit codes: 0 success, 1 numerical failure (diagnostic JSON on the output
//! stream), 2 usage error.

use crate::cocycle::{eichler_integral, equivariance_residual, poly_coinvariant_dim, rho, Endpoint};
use crate::error::McError;
use crate::forms::{
    eta_power_coeffs, eta_power_expansion, eta_power_polys, Gen, MultiplierSystem, QExpansion,
};
use crate::polar::{
    bracket, bracket_closed_form, eichler_kernel_minus_expansion, j_r,
    knopp_kernel_plus_expansion, sigma_r_coeff, sigma_r_contour, PolarSeries,
};
use crate::quad::{integrate_fundamental_domain, GaussJacobi01};
use crate::special::{beta, cpow, gamma_real, ArgRange};
use crate::triform::{
    haberland_lhs, petersson, psi_kernel, table_entry, triple_form_direct, triple_form_series,
    PsiRules, WeightTriple,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

/// The 13 filled cells of the reference table, row-major.
const PAPER_GRID: [(f64, f64); 13] = [
    (-0.3, 0.2),
    (-0.7, 0.2),
    (-0.7, 0.6),
    (-1.1, 0.2),
    (-1.1, 0.6),
    (-1.1, 1.3),
    (-1.5, 0.2),
    (-1.5, 0.6),
    (-1.5, 1.3),
    (-2.4, 0.2),
    (-2.4, 0.6),
    (-2.4, 1.3),
    (-2.4, 1.8),
];

#[derive(Parser)]
#[command(
    name = "modcup",
    version,
    about = "Cup-product trilinear form T(f1, f2, f3) for real-weight modular forms on SL2(Z)"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// q-expansion truncation order (5..=500)
    #[arg(long = "M", default_value_t = 30)]
    m: usize,
    /// target tolerance (1e-12..=1e-2)
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// write output to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// output format (default: csv for table/coeffs/coinv, json otherwise)
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// worker threads (default: MODCUP_THREADS env var, else all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// RNG seed for randomized property sweeps
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bare table cell sums (CSV: r1,r2,value,tail_estimate,seconds)
    Table {
        #[command(flatten)]
        common: Common,
        /// comma-separated r1 axis ("" for an empty grid); default: the 13 reference cells
        #[arg(long, allow_hyphen_values = true)]
        r1: Option<String>,
        /// comma-separated r2 axis ("" for an empty grid)
        #[arg(long, allow_hyphen_values = true)]
        r2: Option<String>,
        /// reference CSV (rows r1,r2,value,rel_tol); defines the grid, exit 1 on any miss
        #[arg(long, conflicts_with_all = ["r1", "r2"])]
        check: Option<PathBuf>,
    },
    /// Fully normalized T(f1, f2, f3) at one (r1, r2) cell
    Tri {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        r1: f64,
        #[arg(long, allow_negative_numbers = true)]
        r2: f64,
    },
    /// Psi kernel (with its 1/(2 pi i) prefactor) at explicit mu-arguments
    Psi {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        r1: f64,
        #[arg(long, allow_negative_numbers = true)]
        r2: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu1: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu2: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu3: f64,
    },
    /// Haberland contour integral and its residual against -2i (f, f) for f = eta^{2 r1}
    Haberland {
        #[command(flatten)]
        common: Common,
        /// weight r of f = eta^{2r} (must be a cusp form: r > 0)
        #[arg(long, allow_negative_numbers = true)]
        r1: f64,
    },
    /// Fourier coefficients of eta^{2 r1} (CSV: m,mu,a)
    Coeffs {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        r1: f64,
    },
    /// Coinvariant dimensions of the polynomial modules, 2 <= r <= rmax (CSV: r,p,dim)
    Coinv {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 14)]
        rmax: u32,
    },
    /// Run the cross-module invariant suite; exit 0 iff every property passes
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numerical(McError),
}

fn lift(e: McError) -> CliError {
    match e {
        McError::InvalidParameter(_) => CliError::Usage(e.to_string()),
        other => CliError::Numerical(other),
    }
}

/// 17 significant digits, `.` decimal, valid as a JSON number.
fn fnum(x: f64) -> String {
    format!("{:.16e}", x)
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// The standard single-value JSON record.
fn json_record(params: &[(&str, String)], value: Complex64, error_estimate: f64) -> String {
    let body = params
        .iter()
        .map(|(k, v)| format!("\"{k}\": {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "{{\n  \"params\": {{{body}}},\n  \"value_re\": {},\n  \"value_im\": {},\n  \"error_estimate\": {}\n}}\n",
        fnum(value.re),
        fnum(value.im),
        fnum(error_estimate)
    )
}

fn single_value_output(
    format: Format,
    params: &[(&str, String)],
    value: Complex64,
    error_estimate: f64,
) -> String {
    match format {
        Format::Json => json_record(params, value, error_estimate),
        Format::Csv => {
            let head = params
                .iter()
                .map(|(k, _)| *k)
                .chain(["value_re", "value_im", "error_estimate"])
                .collect::<Vec<_>>()
                .join(",");
            let row = params
                .iter()
                .map(|(_, v)| v.clone())
                .chain([fnum(value.re), fnum(value.im), fnum(error_estimate)])
                .collect::<Vec<_>>()
                .join(",");
            format!("{head}\n{row}\n")
        }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let common = match &cli.command {
        Cmd::Table { common, .. }
        | Cmd::Tri { common, .. }
        | Cmd::Psi { common, .. }
        | Cmd::Haberland { common, .. }
        | Cmd::Coeffs { common, .. }
        | Cmd::Coinv { common, .. }
        | Cmd::Selftest { common } => common,
    };
    if !(1e-12..=1e-2).contains(&common.tol) {
        eprintln!("modcup: --tol must lie in [1e-12, 1e-2], got {}", common.tol);
        return 2;
    }
    if !(5..=500).contains(&common.m) {
        eprintln!("modcup: --M must lie in [5, 500], got {}", common.m);
        return 2;
    }
    let threads = match common.threads {
        Some(n) => n,
        None => match std::env::var("MODCUP_THREADS") {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) => n,
                Err(_) => {
                    eprintln!("modcup: MODCUP_THREADS must be an integer, got {s:?}");
                    return 2;
                }
            },
            Err(_) => 0, // rayon default: all logical cores
        },
    };
    let out = common.out.clone();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("modcup: failed to build thread pool: {e}");
            return 1;
        }
    };

    let outcome = pool.install(|| dispatch(cli.command));
    match outcome {
        Ok((text, code)) => {
            if let Err(e) = emit(&out, &text) {
                eprintln!("modcup: cannot write output: {e}");
                return 1;
            }
            code
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("modcup: {msg}");
            2
        }
        Err(CliError::Numerical(e)) => {
            let diag = format!("{{\"error\": \"{}\"}}\n", json_escape(&e.to_string()));
            if emit(&out, &diag).is_err() {
                eprintln!("modcup: {e}");
            }
            1
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(String, i32), CliError> {
    match cmd {
        Cmd::Table {
            common,
            r1,
            r2,
            check,
        } => cmd_table(&common, r1, r2, check),
        Cmd::Tri { common, r1, r2 } => cmd_tri(&common, r1, r2),
        Cmd::Psi {
            common,
            r1,
            r2,
            mu1,
            mu2,
            mu3,
        } => cmd_psi(&common, r1, r2, mu1, mu2, mu3),
        Cmd::Haberland { common, r1 } => cmd_haberland(&common, r1),
        Cmd::Coeffs { common, r1 } => cmd_coeffs(&common, r1),
        Cmd::Coinv { common, rmax } => cmd_coinv(&common, rmax),
        Cmd::Selftest { common } => cmd_selftest(&common),
    }
}

fn parse_axis(s: &str) -> Result<Vec<f64>, CliError> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(vec![]);
    }
    t.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number {:?} in axis list", p.trim())))
        })
        .collect()
}

fn parse_reference(path: &PathBuf) -> Result<Vec<(f64, f64, f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || {
            CliError::Usage(format!(
                "{}:{}: expected `r1,r2,value,rel_tol`, got {line:?}",
                path.display(),
                ln + 1
            ))
        };
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut vals = [0.0f64; 4];
        for (slot, part) in vals.iter_mut().zip(&parts) {
            *slot = part.parse::<f64>().map_err(|_| bad())?;
        }
        rows.push((vals[0], vals[1], vals[2], vals[3]));
    }
    Ok(rows)
}

fn cmd_table(
    common: &Common,
    r1: Option<String>,
    r2: Option<String>,
    check: Option<PathBuf>,
) -> Result<(String, i32), CliError> {
    // grid: reference cells with --check, explicit product grid with
    // --r1/--r2, the 13 reference cells otherwise
    let reference = match &check {
        Some(path) => Some(parse_reference(path)?),
        None => None,
    };
    let grid: Vec<(f64, f64, Option<(f64, f64)>)> = if let Some(rows) = &reference {
        rows.iter().map(|&(a, b, v, t)| (a, b, Some((v, t)))).collect()
    } else {
        match (&r1, &r2) {
            (None, None) => PAPER_GRID.iter().map(|&(a, b)| (a, b, None)).collect(),
            (Some(a), Some(b)) => {
                let axis1 = parse_axis(a)?;
                let axis2 = parse_axis(b)?;
                axis1
                    .iter()
                    .flat_map(|&x| axis2.iter().map(move |&y| (x, y, None)))
                    .collect()
            }
            _ => {
                return Err(CliError::Usage(
                    "provide both --r1 and --r2, or neither".into(),
                ))
            }
        }
    };

    enum RowOut {
        Value { value: f64, tail: f64, seconds: f64 },
        Skip { reason: String },
    }
    let mut rows: Vec<(f64, f64, RowOut)> = Vec::with_capacity(grid.len());
    let mut code = 0i32;
    for &(a, b, reference) in &grid {
        let t0 = Instant::now();
        let outcome = WeightTriple::for_table(a, b)
            .and_then(|_| table_entry(a, b, common.m, common.tol));
        let row = match outcome {
            Ok((value, tail)) => RowOut::Value {
                value,
                tail,
                seconds: t0.elapsed().as_secs_f64(),
            },
            Err(e) => {
                // a numerical failure (not a parameter rejection) fails the run
                if !matches!(e, McError::InvalidParameter(_)) {
                    code = 1;
                }
                RowOut::Skip {
                    reason: e.to_string(),
                }
            }
        };
        if let Some((want, rel_tol)) = reference {
            match &row {
                RowOut::Value { value, .. } if (value - want).abs() <= rel_tol * want.abs() => {}
                RowOut::Value { value, .. } => {
                    eprintln!(
                        "check failed at ({a}, {b}): got {value:.8e}, want {want:.8e} (rel {:.3e} > {rel_tol:.1e})",
                        (value - want).abs() / want.abs()
                    );
                    code = 1;
                }
                RowOut::Skip { reason } => {
                    eprintln!("check failed at ({a}, {b}): {reason}");
                    code = 1;
                }
            }
        }
        rows.push((a, b, row));
    }

    let format = common.format.unwrap_or(Format::Csv);
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str("r1,r2,value,tail_estimate,seconds\n");
            for (a, b, row) in &rows {
                match row {
                    RowOut::Value {
                        value,
                        tail,
                        seconds,
                    } => {
                        let _ = writeln!(
                            text,
                            "{a},{b},{},{},{seconds:.3}",
                            fnum(*value),
                            fnum(*tail)
                        );
                    }
                    RowOut::Skip { reason } => {
                        let _ = writeln!(text, "{a},{b},skip,{},0.000", csv_quote(reason));
                    }
                }
            }
        }
        Format::Json => {
            text.push_str("{\n  \"rows\": [\n");
            let body = rows
                .iter()
                .map(|(a, b, row)| match row {
                    RowOut::Value {
                        value,
                        tail,
                        seconds,
                    } => format!(
                        "    {{\"r1\": {a}, \"r2\": {b}, \"value\": {}, \"tail_estimate\": {}, \"seconds\": {seconds:.3}}}",
                        fnum(*value),
                        fnum(*tail)
                    ),
                    RowOut::Skip { reason } => format!(
                        "    {{\"r1\": {a}, \"r2\": {b}, \"skip\": \"{}\"}}",
                        json_escape(reason)
                    ),
                })
                .collect::<Vec<_>>()
                .join(",\n");
            text.push_str(&body);
            text.push_str("\n  ]\n}\n");
        }
    }
    Ok((text, code))
}

fn table_forms(r1: f64, r2: f64, m: usize) -> (QExpansion, QExpansion, QExpansion) {
    use crate::forms::{e4_expansion, qexp_mul};
    (
        eta_power_expansion(r1, m),
        eta_power_expansion(r2, m),
        qexp_mul(&e4_expansion(m), &eta_power_expansion(-(r1 + r2), m), m),
    )
}

fn cmd_tri(common: &Common, r1: f64, r2: f64) -> Result<(String, i32), CliError> {
    let wt = WeightTriple::for_table(r1, r2).map_err(lift)?;
    let (f1, f2, f3) = table_forms(r1, r2, common.m);
    let res = triple_form_series(&wt, &f1, &f2, &f3, common.tol).map_err(lift)?;
    let params = [
        ("r1", fnum(r1)),
        ("r2", fnum(r2)),
        ("r3", fnum(wt.r3)),
        ("M", common.m.to_string()),
        ("tol", fnum(common.tol)),
    ];
    let format = common.format.unwrap_or(Format::Json);
    Ok((
        single_value_output(format, &params, res.value, res.tail_estimate),
        0,
    ))
}

fn cmd_psi(
    common: &Common,
    r1: f64,
    r2: f64,
    mu1: f64,
    mu2: f64,
    mu3: f64,
) -> Result<(String, i32), CliError> {
    let value = psi_kernel(r1, r2, mu1, mu2, mu3, common.tol).map_err(lift)?;
    let params = [
        ("r1", fnum(r1)),
        ("r2", fnum(r2)),
        ("mu1", fnum(mu1)),
        ("mu2", fnum(mu2)),
        ("mu3", fnum(mu3)),
        ("tol", fnum(common.tol)),
    ];
    let format = common.format.unwrap_or(Format::Json);
    Ok((
        single_value_output(format, &params, value, common.tol),
        0,
    ))
}

fn cmd_haberland(common: &Common, r: f64) -> Result<(String, i32), CliError> {
    let f = eta_power_expansion(r, common.m);
    let lhs = haberland_lhs(&f, &f, r, common.tol).map_err(lift)?;
    let pet = petersson(&f, &f, r, common.tol).map_err(lift)?;
    let residual = (lhs + Complex64::new(0.0, 2.0) * pet).norm();
    let params = [
        ("r", fnum(r)),
        ("M", common.m.to_string()),
        ("tol", fnum(common.tol)),
    ];
    let format = common.format.unwrap_or(Format::Json);
    Ok((single_value_output(format, &params, lhs, residual), 0))
}

fn cmd_coeffs(common: &Common, r1: f64) -> Result<(String, i32), CliError> {
    let f = eta_power_expansion(r1, common.m);
    let format = common.format.unwrap_or(Format::Csv);
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str("m,mu,a\n");
            for m in 0..=f.truncation() {
                let _ = writeln!(text, "{m},{},{}", f.mu(m), f.coeffs()[m]);
            }
        }
        Format::Json => {
            text.push_str("{\n  \"rows\": [\n");
            let body = (0..=f.truncation())
                .map(|m| {
                    format!(
                        "    {{\"m\": {m}, \"mu\": {}, \"a\": {}}}",
                        fnum(f.mu(m)),
                        fnum(f.coeffs()[m])
                    )
                })
                .collect::<Vec<_>>()
                .join(",\n");
            text.push_str(&body);
            text.push_str("\n  ]\n}\n");
        }
    }
    Ok((text, 0))
}

fn cmd_coinv(common: &Common, rmax: u32) -> Result<(String, i32), CliError> {
    if !(2..=40).contains(&rmax) {
        return Err(CliError::Usage(format!(
            "--rmax must lie in [2, 40], got {rmax}"
        )));
    }
    let mut rows = Vec::new();
    for r in 2..=rmax {
        for p in (0..12).filter(|p| p % 2 == r as i64 % 2) {
            let res = poly_coinvariant_dim(r, p).map_err(lift)?;
            rows.push((r, p, res.dim, res.margin));
        }
    }
    let format = common.format.unwrap_or(Format::Csv);
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str("r,p,dim\n");
            for (r, p, dim, _) in &rows {
                let _ = writeln!(text, "{r},{p},{dim}");
            }
        }
        Format::Json => {
            text.push_str("{\n  \"rows\": [\n");
            let body = rows
                .iter()
                .map(|(r, p, dim, margin)| {
                    format!(
                        "    {{\"r\": {r}, \"p\": {p}, \"dim\": {dim}, \"margin\": {}}}",
                        if margin.is_finite() {
                            fnum(*margin)
                        } else {
                            "null".into()
                        }
                    )
                })
                .collect::<Vec<_>>()
                .join(",\n");
            text.push_str(&body);
            text.push_str("\n  ]\n}\n");
        }
    }
    Ok((text, 0))
}

// ---------------------------------------------------------------------------
// selftest

fn cmd_selftest(common: &Common) -> Result<(String, i32), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut report = String::new();
    let mut failures = 0usize;
    let mut total = 0usize;
    {
        let mut check = |name: &str, res: Result<(), String>| {
            total += 1;
            match res {
                Ok(()) => {
                    let _ = writeln!(report, "ok   {name}");
                }
                Err(msg) => {
                    failures += 1;
                    let _ = writeln!(report, "FAIL {name}: {msg}");
                }
            }
        };
        check("cpow-product-law", st_cpow(&mut rng));
        check("gamma-recurrence", st_gamma(&mut rng));
        check("gauss-jacobi-moments", st_gj_moments(&mut rng));
        check("fundamental-domain-area", st_fd_area());
        check("eta-coefficient-recurrence", st_eta_recurrence(&mut rng));
        check("ramanujan-tau", st_tau());
        check("duality-roundtrip", st_duality_roundtrip(&mut rng));
        check("sigma-contour-vs-coefficient", st_sigma_contour());
        check("kernel-bracket-closed-form", st_bracket_kernel(&mut rng));
        check("cocycle-additivity", st_cocycle_additivity());
        check("cocycle-equivariance", st_equivariance());
        check("psi-continuity", st_psi_continuity());
        check("series-vs-direct", st_series_direct());
        check("haberland-identity", st_haberland());
        check("coinvariant-dims", st_coinv());
        check("table-reference-cell", st_table_cell());
    }
    let _ = writeln!(report, "selftest: {}/{} passed", total - failures, total);
    Ok((report, if failures == 0 { 0 } else { 1 }))
}

fn st_cpow(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let theta = rng.gen_range(0.05..1.0);
        let rad = rng.gen_range(0.3..3.0);
        let z = Complex64::from_polar(rad, theta);
        let a = rng.gen_range(0.1..1.4);
        let b = rng.gen_range(0.1..1.4);
        let lhs = cpow(z, a, ArgRange::upper_half()).map_err(|e| e.to_string())?
            * cpow(z, b, ArgRange::upper_half()).map_err(|e| e.to_string())?;
        let rhs = cpow(z, a + b, ArgRange::upper_half()).map_err(|e| e.to_string())?;
        if (lhs - rhs).norm() > 1e-13 * rhs.norm() {
            return Err(format!("z = {z}, a = {a}, b = {b}: {lhs} vs {rhs}"));
        }
    }
    Ok(())
}

fn st_gamma(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let x = rng.gen_range(0.1..5.0);
        let lhs = gamma_real(x + 1.0).map_err(|e| e.to_string())?;
        let rhs = x * gamma_real(x).map_err(|e| e.to_string())?;
        if (lhs - rhs).abs() > 1e-12 * lhs.abs() {
            return Err(format!("x = {x}: {lhs} vs {rhs}"));
        }
    }
    Ok(())
}

fn st_gj_moments(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..2 {
        let alpha = rng.gen_range(-0.9..2.0);
        let bexp = rng.gen_range(-0.9..2.0);
        let rule = GaussJacobi01::new(12, alpha, bexp).map_err(|e| e.to_string())?;
        for k in 0..=15u32 {
            let got = rule
                .integrate(&|u| Complex64::new(u.powi(k as i32), 0.0))
                .re;
            let want = beta(bexp + k as f64 + 1.0, alpha + 1.0).map_err(|e| e.to_string())?;
            if (got - want).abs() > 1e-12 * want.max(1.0) {
                return Err(format!(
                    "alpha = {alpha:.4}, beta = {bexp:.4}, k = {k}: {got} vs {want}"
                ));
            }
        }
    }
    Ok(())
}

fn st_fd_area() -> Result<(), String> {
    let (v, _) = integrate_fundamental_domain(1e-10, |_x, y| Complex64::new(y.powi(-2), 0.0))
        .map_err(|e| e.to_string())?;
    let want = std::f64::consts::PI / 3.0;
    if (v.re - want).abs() > 1e-8 || v.im.abs() > 1e-12 {
        return Err(format!("hyperbolic area {v} vs {want}"));
    }
    Ok(())
}

fn st_eta_recurrence(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let polys = eta_power_polys(12);
    for _ in 0..5 {
        let r = rng.gen_range(-3.0..3.0);
        let coeffs = eta_power_coeffs(r, 12);
        for (m, poly) in polys.iter().enumerate() {
            let want = poly.eval_f64(r);
            if (coeffs[m] - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(format!("r = {r}, m = {m}: {} vs {want}", coeffs[m]));
            }
        }
    }
    Ok(())
}

fn st_tau() -> Result<(), String> {
    let tau = [
        1.0, -24.0, 252.0, -1472.0, 4830.0, -6048.0, -16744.0, 84480.0, -113643.0, -115920.0,
        534612.0,
    ];
    let coeffs = eta_power_coeffs(12.0, 10);
    for (m, &want) in tau.iter().enumerate() {
        if (coeffs[m] - want).abs() > 1e-6 * want.abs().max(1.0) {
            return Err(format!("p_{m}(12) = {} vs tau({}) = {want}", coeffs[m], m + 1));
        }
    }
    Ok(())
}

fn st_duality_roundtrip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..5 {
        let k = rng.gen_range(3..10i64);
        let coeffs: Vec<Complex64> = (0..=k)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = PolarSeries::new(-k, coeffs).map_err(|e| e.to_string())?;
        let r = rng.gen_range(0.2..1.8);
        let sigma = sigma_r_coeff(&f, r).map_err(|e| e.to_string())?;
        let back = j_r(&sigma, r);
        for n in -k..=0 {
            if (back.coeff(n) - f.coeff(n)).norm() > 1e-12 {
                return Err(format!("r = {r:.4}, n = {n}: roundtrip drift"));
            }
        }
    }
    Ok(())
}

fn st_sigma_contour() -> Result<(), String> {
    let f = PolarSeries::monomial(-3, Complex64::new(1.0, 0.0));
    let r = 1.7;
    let z = Complex64::new(0.2, 2.0);
    let w_z = (z - Complex64::new(0.0, 1.0)) / (z + Complex64::new(0.0, 1.0));
    let c = 0.4 * w_z.norm();
    let by_contour =
        sigma_r_contour(&|w| f.eval_w(w), r, z, c, 512).map_err(|e| e.to_string())?;
    let by_coeff = sigma_r_coeff(&f, r)
        .map_err(|e| e.to_string())?
        .eval_w(w_z);
    if (by_contour - by_coeff).norm() > 1e-9 * by_coeff.norm().max(1e-12) {
        return Err(format!("{by_contour} vs {by_coeff}"));
    }
    Ok(())
}

fn st_bracket_kernel(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let i = Complex64::new(0.0, 1.0);
    for _ in 0..5 {
        // sample tau through the disk coordinate with |u| <= 0.6
        let mut draw = || {
            let radius = rng.gen_range(0.0..0.6);
            let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let u = Complex64::from_polar(radius, phi);
            i * (Complex64::new(1.0, 0.0) + u) / (Complex64::new(1.0, 0.0) - u)
        };
        let tau1 = draw();
        let tau2 = draw();
        let r = rng.gen_range(0.1..1.9);
        let q = eichler_kernel_minus_expansion(tau1, r, 200).map_err(|e| e.to_string())?;
        let p = knopp_kernel_plus_expansion(tau2, r, 200).map_err(|e| e.to_string())?;
        let series = bracket(&p, &q, 2.0 - r).map_err(|e| e.to_string())?;
        let closed = bracket_closed_form(tau1, tau2, r).map_err(|e| e.to_string())?;
        if (series - closed).norm() > 1e-8 * closed.norm() {
            return Err(format!("tau1 = {tau1}, tau2 = {tau2}, r = {r:.4}: {series} vs {closed}"));
        }
    }
    Ok(())
}

fn st_cocycle_additivity() -> Result<(), String> {
    let f = eta_power_expansion(0.6, 48);
    let t = Complex64::new(0.4, -1.3);
    let ep = |z: Complex64| Endpoint::Point(z);
    let i = Complex64::new(0.0, 1.0);
    let a = eichler_integral(&f, ep(rho() - 1.0), ep(i), t, 1e-10).map_err(|e| e.to_string())?;
    let b = eichler_integral(&f, ep(i), ep(rho()), t, 1e-10).map_err(|e| e.to_string())?;
    let whole =
        eichler_integral(&f, ep(rho() - 1.0), ep(rho()), t, 1e-10).map_err(|e| e.to_string())?;
    if (a + b - whole).norm() > 1e-9 {
        return Err(format!("additivity residual {}", (a + b - whole).norm()));
    }
    Ok(())
}

fn st_equivariance() -> Result<(), String> {
    let f = eta_power_expansion(0.6, 48);
    let v = MultiplierSystem::new(0.6);
    let z1 = Complex64::new(0.0, 1.0);
    let z2 = Complex64::new(0.0, 2.0);
    let t = Complex64::new(-1.0, -1.0);
    for g in [Gen::T, Gen::S] {
        let res = equivariance_residual(&f, &v, g, z1, z2, t, 1e-10).map_err(|e| e.to_string())?;
        if res > 1e-8 {
            return Err(format!("{g:?} residual {res:.3e}"));
        }
    }
    Ok(())
}

fn st_psi_continuity() -> Result<(), String> {
    let rules = PsiRules::new(-0.3, 0.2).map_err(|e| e.to_string())?;
    let (closed, _) = rules
        .psi_tilde(-0.025, 1.0 / 60.0, 0.0, 1e-13)
        .map_err(|e| e.to_string())?;
    let (near, _) = rules
        .psi_tilde(-0.025, 1.0 / 60.0, 1e-8, 1e-13)
        .map_err(|e| e.to_string())?;
    if (near - closed).abs() > 1e-6 * closed.abs() {
        return Err(format!("psi gap {near} vs {closed}"));
    }
    Ok(())
}

fn st_series_direct() -> Result<(), String> {
    let wt = WeightTriple::for_table(-0.7, 0.6).map_err(|e| e.to_string())?;
    let (f1, f2, f3) = table_forms(-0.7, 0.6, 24);
    let series = triple_form_series(&wt, &f1, &f2, &f3, 1e-6).map_err(|e| e.to_string())?;
    let direct = triple_form_direct(&wt, &f1, &f2, &f3, 1e-4).map_err(|e| e.to_string())?;
    let rel = (series.value - direct).norm() / series.value.norm();
    if rel > 1e-3 {
        return Err(format!("series {} vs direct {direct}, rel {rel:.3e}", series.value));
    }
    Ok(())
}

fn st_haberland() -> Result<(), String> {
    let f = eta_power_expansion(1.2, 40);
    let lhs = haberland_lhs(&f, &f, 1.2, 1e-6).map_err(|e| e.to_string())?;
    let pet = petersson(&f, &f, 1.2, 1e-8).map_err(|e| e.to_string())?;
    let resid = (lhs + Complex64::new(0.0, 2.0) * pet).norm();
    if resid > 1e-3 * pet.norm() {
        return Err(format!("residual {resid:.3e} vs (f,f) = {}", pet.re));
    }
    Ok(())
}

fn st_coinv() -> Result<(), String> {
    let top = poly_coinvariant_dim(2, 0).map_err(|e| e.to_string())?;
    if top.dim != 1 || top.margin < 1e3 {
        return Err(format!("(2, 0): dim {} margin {:.1e}", top.dim, top.margin));
    }
    for (r, p) in [(12, 0), (2, 2), (3, 1), (4, 10)] {
        let res = poly_coinvariant_dim(r, p).map_err(|e| e.to_string())?;
        if res.dim != 0 || res.margin < 1e3 {
            return Err(format!("({r}, {p}): dim {} margin {:.1e}", res.dim, res.margin));
        }
    }
    Ok(())
}

fn st_table_cell() -> Result<(), String> {
    let (v, _) = table_entry(-0.3, 0.2, 30, 1e-8).map_err(|e| e.to_string())?;
    let want = 7.911_485;
    if (v - want).abs() > 5e-4 * want {
        return Err(format!("(-0.3, 0.2): {v} vs {want}"));
    }
    Ok(())
}
