//! `muchan`: generate, analyze, search and verify mixed-unitary channels.
//!
//! Every command writes one JSON value to standard output, errors included.
//! Exit codes: 0 success, 2 input error, 3 no decomposition found (or
//! verification failed), 4 numerical failure.

mod names;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use muchan::channels::{self, KrausChannel};
use muchan::constructive::{toroidal_from_decomposition, zero_diagonal_unitary};
use muchan::format::{matrix_to_json, Document};
use muchan::linalg::{self, unitarity_defect};
use muchan::mu_analysis::{channel_ranks, rank_bounds, verify_decomposition};
use muchan::search::{murank_search, search_decomposition, SearchConfig, SearchStatus};
use muchan::{Error, Tolerance};

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "muchan", version, about = "Mixed-unitary rank of quantum channels")]
struct Cli {
    /// Rank and equality tolerance.
    #[arg(long, global = true, value_name = "EPS")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a gallery object (`gen list` prints the catalogue).
    Gen {
        name: String,
        #[arg(short = 'o', value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Report Choi rank, operator-system dimension and rank bounds.
    Analyze { channel: PathBuf },
    /// Search for a mixed-unitary decomposition.
    Search(SearchArgs),
    /// Check a decomposition against a channel.
    Verify { channel: PathBuf, decomposition: PathBuf },
    /// Unitary conjugating a traceless matrix to zero diagonal.
    ZeroDiag {
        matrix: PathBuf,
        #[arg(short = 'o', value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SearchArgs {
    channel: PathBuf,
    /// Number of terms to search for.
    #[arg(long = "N", value_name = "K", conflicts_with = "scan", required_unless_present = "scan")]
    n: Option<usize>,
    /// Scan N from the Choi rank up to the upper bound.
    #[arg(long)]
    scan: bool,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iters", default_value_t = 2000)]
    max_iters: usize,
    /// Wall-clock budget in seconds.
    #[arg(long = "time-budget", value_name = "SECONDS")]
    time_budget: Option<f64>,
    /// Write the decomposition found to this file.
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

/// Failure carried to the top level and printed as `{code, message, path}`.
struct Failure {
    exit: u8,
    code: &'static str,
    message: String,
    path: Option<String>,
}

impl Failure {
    fn from_error(e: Error, file: Option<&Path>) -> Self {
        let file = file.map(|p| p.display().to_string());
        let (exit, code, path) = match &e {
            Error::Numerical(_) => (EXIT_NUMERICAL, "numerical", file),
            Error::Format { path, .. } => (
                EXIT_INPUT,
                "format",
                Some(match file {
                    Some(f) => format!("{f}#{path}"),
                    None => path.clone(),
                }),
            ),
            Error::Io(_) => (EXIT_INPUT, "io", file),
            Error::Json(_) => (EXIT_INPUT, "json", file),
            Error::Validation(_) => (EXIT_INPUT, "validation", file),
            Error::Argument(_) => (EXIT_INPUT, "argument", file),
            Error::Refusal(_) => (EXIT_INPUT, "refused", file),
        };
        Failure {
            exit,
            code,
            message: e.to_string(),
            path,
        }
    }

    fn to_json(&self) -> Value {
        json!({"code": self.code, "message": self.message, "path": self.path})
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from_error(e, None)
    }
}

type Outcome = Result<(Value, u8), Failure>;

fn read_doc(path: &Path, tol: &Tolerance) -> Result<Document, Failure> {
    Document::read(path, tol).map_err(|e| Failure::from_error(e, Some(path)))
}

fn write_doc(doc: &Document, path: &Path) -> Result<(), Failure> {
    doc.write(path).map_err(|e| Failure::from_error(e, Some(path)))
}

/// Channels are given as Kraus files or as correlation matrices, which stand
/// for their Schur channels.
fn read_channel(path: &Path, tol: &Tolerance) -> Result<(KrausChannel, bool), Failure> {
    match read_doc(path, tol)? {
        Document::Kraus(phi) => Ok((phi, false)),
        Document::Correlation(c) => Ok((channels::schur_channel(&c, tol)?, true)),
        other => Err(Failure {
            exit: EXIT_INPUT,
            code: "format",
            message: format!("expected a kraus or correlation file, got {:?}", other.kind()),
            path: Some(format!("{}#/kind", path.display())),
        }),
    }
}

fn timestamp() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn cmd_gen(name: &str, output: Option<&Path>, tol: &Tolerance) -> Outcome {
    if name == "list" {
        let list: Vec<Value> = names::NAMES
            .iter()
            .map(|(n, d)| json!({"name": n, "description": d}))
            .collect();
        return Ok((json!({ "names": list }), 0));
    }
    let doc = names::generate(name, tol)?;
    match output {
        Some(path) => {
            write_doc(&doc, path)?;
            Ok((json!({"written": path.display().to_string(), "kind": doc.kind()}), 0))
        }
        None => Ok((doc.to_json(), 0)),
    }
}

fn cmd_analyze(path: &Path, tol: &Tolerance) -> Outcome {
    let (phi, _) = read_channel(path, tol)?;
    let (r, s) = channel_ranks(&phi, tol)?;
    let unital = phi.is_square() && phi.is_unital(tol);
    let mut out = json!({
        "r": r,
        "s": s,
        "unital": unital,
        "dim_in": phi.dim_in(),
        "dim_out": phi.dim_out(),
    });
    if !unital {
        out["bounds"] = Value::Null;
        out["note"] = json!("not unital, hence not mixed unitary");
        return Ok((out, 0));
    }
    match rank_bounds(&phi, tol) {
        Ok(b) => {
            out["bounds"] = json!({"lower": b.lower, "upper": b.upper, "exact": b.exact});
            out["extremal"] = json!(b.flags.extremal);
            out["schur_equivalent"] = json!(b.flags.schur_equivalent);
            out["uniqueness_certified"] = json!(b.flags.unique_decomposition_certified);
        }
        Err(Error::Refusal(msg)) => {
            out["bounds"] = Value::Null;
            out["note"] = json!(msg);
        }
        Err(e) => return Err(e.into()),
    }
    Ok((out, 0))
}

fn decomposition_json(
    phi: &KrausChannel,
    d: &muchan::mu_analysis::MixedUnitaryDecomposition,
    schur: bool,
    tol: &Tolerance,
) -> Result<Value, Failure> {
    let mut out = json!({
        "decomposition": Document::MixedUnitary(d.clone()).to_json(),
        "verification": verify_decomposition(phi, d, tol)?,
    });
    if schur {
        if let Ok(t) = toroidal_from_decomposition(d, tol) {
            out["toroidal"] = Document::Toroidal(t).to_json();
        }
    }
    Ok(out)
}

fn cmd_search(a: &SearchArgs, tol: &Tolerance) -> Outcome {
    let (phi, schur) = read_channel(&a.channel, tol)?;
    let cfg = SearchConfig {
        restarts: a.restarts,
        max_iters: a.max_iters,
        seed: a.seed,
        time_budget: a.time_budget,
        ..SearchConfig::default()
    };
    cfg.validate()?;
    let mut out = json!({"timestamp": timestamp(), "config": cfg});
    let found = match a.n {
        Some(n) => {
            let res = search_decomposition(&phi, n, &cfg, tol)?;
            out["n"] = json!(n);
            out["status"] = json!(res.status);
            out["objective"] = json!(res.objective);
            out["restart_log"] = json!(res.restart_log);
            res.decomposition.filter(|_| res.status == SearchStatus::Found)
        }
        None => {
            let res = murank_search(&phi, &cfg, tol)?;
            out["status"] = json!(if res.n_found.is_some() { "found" } else { "not_found" });
            out["n_found"] = json!(res.n_found);
            out["bounds"] = json!(res.bounds);
            out["attempts"] = json!(res.attempts);
            res.decomposition
        }
    };
    match found {
        Some(d) => {
            let extra = decomposition_json(&phi, &d, schur, tol)?;
            for (k, v) in extra.as_object().expect("object") {
                out[k] = v.clone();
            }
            if let Some(path) = &a.output {
                write_doc(&Document::MixedUnitary(d), path)?;
            }
            Ok((out, 0))
        }
        None => {
            out["decomposition"] = Value::Null;
            Ok((out, EXIT_NOT_FOUND))
        }
    }
}

fn cmd_verify(channel: &Path, decomposition: &Path, tol: &Tolerance) -> Outcome {
    let (phi, _) = read_channel(channel, tol)?;
    let d = match read_doc(decomposition, tol)? {
        Document::MixedUnitary(d) => d,
        Document::Toroidal(t) => t.to_mixed_unitary(tol)?,
        other => {
            return Err(Failure {
                exit: EXIT_INPUT,
                code: "format",
                message: format!(
                    "expected a mixed-unitary or toroidal file, got {:?}",
                    other.kind()
                ),
                path: Some(format!("{}#/kind", decomposition.display())),
            })
        }
    };
    let v = verify_decomposition(&phi, &d, tol).map_err(|e| Failure::from_error(e, Some(decomposition)))?;
    let mut out = json!(v);
    out["terms"] = json!(d.len());
    Ok((out, if v.ok { 0 } else { EXIT_NOT_FOUND }))
}

fn cmd_zero_diag(path: &Path, output: Option<&Path>, tol: &Tolerance) -> Outcome {
    let z = match read_doc(path, tol)? {
        Document::Matrix(m) | Document::Correlation(m) => m,
        other => {
            return Err(Failure {
                exit: EXIT_INPUT,
                code: "format",
                message: format!("expected a matrix file, got {:?}", other.kind()),
                path: Some(format!("{}#/kind", path.display())),
            })
        }
    };
    let u = zero_diagonal_unitary(&z, tol).map_err(|e| Failure::from_error(e, Some(path)))?;
    let conj = &u * &z * u.adjoint();
    let max_diag = (0..conj.nrows()).map(|i| conj[(i, i)].norm()).fold(0.0, f64::max);
    let norm = z.norm();
    let residual = if norm > 0.0 { max_diag / norm } else { max_diag };
    if let Some(out) = output {
        write_doc(&Document::Matrix(u.clone()), out)?;
    }
    Ok((
        json!({
            "unitary": matrix_to_json(&u),
            "residual": residual,
            "unitarity_defect": unitarity_defect(&u),
            "trace": [linalg::trace(&z).re, linalg::trace(&z).im],
        }),
        0,
    ))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MUCHAN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        exit: EXIT_INPUT,
        code: "argument",
        message: format!("MUCHAN_THREADS must be a positive integer, got {raw:?}"),
        path: None,
    })?;
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let tol = match cli.tol {
        Some(eps) => Tolerance::uniform(eps)?,
        None => Tolerance::default(),
    };
    match &cli.command {
        Command::Gen { name, output } => cmd_gen(name, output.as_deref(), &tol),
        Command::Analyze { channel } => cmd_analyze(channel, &tol),
        Command::Search(a) => cmd_search(a, &tol),
        Command::Verify {
            channel,
            decomposition,
        } => cmd_verify(channel, decomposition, &tol),
        Command::ZeroDiag { matrix, output } => cmd_zero_diag(matrix, output.as_deref(), &tol),
    }
}

fn emit(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    // A closed pipe (e.g. `| head`) is not an error worth panicking over.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            emit(&json!({"code": "usage", "message": e.to_string().trim(), "path": null}));
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match run(cli) {
        Ok((v, code)) => {
            emit(&v);
            ExitCode::from(code)
        }
        Err(f) => {
            emit(&f.to_json());
            ExitCode::from(f.exit)
        }
    }
}
