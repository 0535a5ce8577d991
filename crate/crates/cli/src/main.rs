//! `frobkit` command-line entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use frobkit::builtins::{builtin_family, sec4_matrix, BUILTIN_NAMES};
use frobkit::family::{FamilyManifest, SubspaceFamily};
use frobkit::frobenius::{integrate, GridSpec};
use frobkit::geninv::{gi_from_complements, moore_penrose_with_tol, seven_conditions, GenInverse};
use frobkit::io::{matrix_from_text, MatrixJson};
use frobkit::linalg::Subspace;
use frobkit::opmanifold::{fixed_rank_chart_check, tangency_fixed_rank, OperatorFamilyContext};
use frobkit::sampling::rng_for;
use frobkit::verify::{self, SuiteSettings};
use frobkit::{Config, Error, Matrix, Vector};

#[derive(Debug, Parser)]
#[command(name = "frobkit", version)]
#[command(about = "generalized inverses, co-final sets and numerical Frobenius integration")]
struct Cli {
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Override the residual tolerance `tol_num`.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// RK4 step for integration.
    #[arg(long, global = true, default_value_t = 1e-3)]
    step: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a generalized inverse from a matrix (JSON or CSV)
    Gi {
        matrix: PathBuf,
        /// Basis (columns) of the complement of N(A) that becomes R(A⁺).
        #[arg(long, requires = "n_plus")]
        r_plus: Option<PathBuf>,
        /// Basis (columns) of the complement of R(A) that becomes N(A⁺).
        #[arg(long, requires = "r_plus")]
        n_plus: Option<PathBuf>,
    },

    /// Evaluate the seven equivalent perturbation conditions on {"A", "T", "A_plus"?}
    Conditions { input: PathBuf },

    /// Integrate a family manifest (or a builtin) into a patch
    Integrate {
        manifest: Option<PathBuf>,
        #[arg(long, conflicts_with = "manifest")]
        builtin: Option<String>,
        /// Half-width of the parameter box on every axis.
        #[arg(long, default_value_t = 0.9)]
        extent: f64,
        /// Nodes per axis (odd). Defaults to one node per step on 1-D bases, 51 otherwise.
        #[arg(long)]
        nodes: Option<usize>,
        /// Emit `x…,psi…` CSV rows instead of the JSON patch.
        #[arg(long)]
        emit_csv: bool,
    },

    /// Check the fixed-rank charts on {"A", "k", "samples", "seed"}
    Chart {
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "input")]
        builtin: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },

    /// Run a randomized verification suite
    Verify {
        suite: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },

    /// Test co-final membership of a point and report its coordinate operator
    Cofinal {
        manifest: Option<PathBuf>,
        #[arg(long, conflicts_with = "manifest")]
        builtin: Option<String>,
        /// Comma-separated coordinates of the point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical_precondition() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// What a command produced: text to write and whether it counts as a pass.
struct Output {
    text: String,
    passed: bool,
}

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CmdResult<T> {
    serde_json::from_str(text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn with_context<T>(path: &Path, r: frobkit::Result<T>) -> CmdResult<T> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn gi_json(gi: &GenInverse) -> Value {
    json!({
        "A_plus": MatrixJson::from(&gi.inverse),
        "R_plus": MatrixJson::from(gi.range_complement.basis()),
        "N_plus": MatrixJson::from(gi.kernel_complement.basis()),
        "residuals": gi.residuals(),
    })
}

fn cmd_gi(matrix: &Path, r_plus: Option<&Path>, n_plus: Option<&Path>, cfg: &Config) -> CmdResult<Output> {
    let a = with_context(matrix, matrix_from_text(&read(matrix)?))?;
    let gi = match (r_plus, n_plus) {
        (Some(r), Some(n)) => {
            let r_basis = with_context(r, matrix_from_text(&read(r)?))?;
            let n_basis = with_context(n, matrix_from_text(&read(n)?))?;
            gi_from_complements(&a, &Subspace::span(&r_basis), &Subspace::span(&n_basis), cfg)?
        }
        _ => moore_penrose_with_tol(&a, cfg.tol_split),
    };
    Ok(Output {
        text: pretty(&gi_json(&gi)),
        passed: true,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionsInput {
    #[serde(rename = "A")]
    a: MatrixJson,
    #[serde(rename = "T")]
    t: MatrixJson,
    #[serde(rename = "A_plus", default)]
    a_plus: Option<MatrixJson>,
}

fn cmd_conditions(input: &Path, cfg: &Config) -> CmdResult<Output> {
    let parsed: ConditionsInput = parse_json(input, &read(input)?)?;
    let a = with_context(input, parsed.a.into_matrix())?;
    let t = with_context(input, parsed.t.into_matrix())?;
    let gi = match parsed.a_plus {
        Some(b) => with_context(input, b.into_matrix().and_then(|b| GenInverse::from_matrices(a, b, cfg)))?,
        None => moore_penrose_with_tol(&a, cfg.tol_split),
    };
    let report = seven_conditions(&gi, &t, cfg)?;
    Ok(Output {
        text: pretty(&report),
        passed: true,
    })
}

fn load_family(manifest: Option<&Path>, builtin: Option<&str>, cfg: &Config) -> CmdResult<SubspaceFamily> {
    match (manifest, builtin) {
        (Some(path), None) => {
            let m = with_context(path, FamilyManifest::from_json(&read(path)?))?;
            Ok(with_context(path, m.build(cfg))?.family)
        }
        (None, Some(name)) => Ok(builtin_family(name, cfg)?.family),
        _ => Err(invalid(format!(
            "give a manifest path or --builtin NAME ({})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn cmd_integrate(
    manifest: Option<&Path>,
    builtin: Option<&str>,
    extent: f64,
    nodes: Option<usize>,
    emit_csv: bool,
    step: f64,
    cfg: &Config,
) -> CmdResult<Output> {
    let family = load_family(manifest, builtin, cfg)?;
    let dim = family.base_subspace().dim();
    let grid = match nodes {
        Some(n) => GridSpec::uniform(dim, extent, n)?,
        None if dim == 1 => GridSpec::with_spacing(1, extent, step.max(1e-3))?,
        None => GridSpec::uniform(dim, extent, 51)?,
    };
    let patch = integrate(&family, &grid, step, cfg)?;
    let text = if emit_csv { patch.to_csv() } else { pretty(&patch) };
    Ok(Output { text, passed: true })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartInput {
    #[serde(rename = "A")]
    a: MatrixJson,
    k: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
}

fn cmd_chart(input: Option<&Path>, builtin: Option<&str>, samples: usize, seed: u64, cfg: &Config) -> CmdResult<Output> {
    let (a, samples, seed) = match (input, builtin) {
        (Some(path), None) => {
            let parsed: ChartInput = parse_json(path, &read(path)?)?;
            let a = with_context(path, parsed.a.into_matrix())?;
            let rank = frobkit::linalg::rank_of(&a, cfg.tol_split);
            if let Some(k) = parsed.k {
                if k != rank {
                    return Err(invalid(format!("{}: k = {k} but rank A = {rank}", path.display())));
                }
            }
            (a, parsed.samples.unwrap_or(samples), parsed.seed.unwrap_or(seed))
        }
        (None, Some("sec4_2x2")) => (sec4_matrix(), samples, seed),
        (None, Some(other)) => return Err(invalid(format!("chart has no builtin `{other}` (expected sec4_2x2)"))),
        _ => return Err(invalid("give an input path or --builtin sec4_2x2")),
    };
    let ctx = OperatorFamilyContext::new(&a, cfg)?;
    let report = fixed_rank_chart_check(&ctx, samples, seed, cfg);
    let x = ctx.sample_rank_k(&mut rng_for(seed, u64::MAX));
    let tangency = tangency_fixed_rank(&ctx, &x, ctx.m0.dim() + 4, seed, cfg)?;
    let passed = report.passes(1e-10, cfg) && tangency.max_residual <= 1e-6 && tangency.span_dim == tangency.expected_dim;
    let mut out = serde_json::to_value(&report).expect("report serializes");
    out["tangency_residual"] = json!(tangency.max_residual);
    out["tangent_span_dim"] = json!(tangency.span_dim);
    out["expected_tangent_dim"] = json!(tangency.expected_dim);
    Ok(Output {
        text: pretty(&out),
        passed,
    })
}

fn cmd_verify(suite: &str, trials: usize, seed: u64, step: f64, cfg: &Config) -> CmdResult<Output> {
    let report = verify::run(suite, trials, seed, cfg, &SuiteSettings { step })?;
    Ok(Output {
        text: pretty(&report),
        passed: report.passed(),
    })
}

fn cmd_cofinal(manifest: Option<&Path>, builtin: Option<&str>, point: &[f64], cfg: &Config) -> CmdResult<Output> {
    let family = load_family(manifest, builtin, cfg)?;
    let x = Vector::from_column_slice(point);
    if x.len() != family.param_dim() {
        return Err(invalid(format!(
            "point has {} coordinates, the family is parametrized over R^{}",
            x.len(),
            family.param_dim()
        )));
    }
    let member = family.cofinal_member(&x, cfg)?;
    let alpha: Option<Matrix> = if member { Some(family.alpha_at(&x, cfg)?.alpha) } else { None };
    let out = json!({
        "point": point,
        "member": member,
        "alpha": alpha.as_ref().map(MatrixJson::from),
    });
    Ok(Output {
        text: pretty(&out),
        passed: true,
    })
}

fn run(cli: &Cli) -> CmdResult<Output> {
    let mut cfg = Config::DEFAULT;
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid(format!("--tol must be positive, got {tol}")));
        }
        cfg.tol_num = tol;
    }
    if !(cli.step.is_finite() && cli.step > 0.0) {
        return Err(Error::Step(cli.step).into());
    }
    match &cli.command {
        Command::Gi { matrix, r_plus, n_plus } => cmd_gi(matrix, r_plus.as_deref(), n_plus.as_deref(), &cfg),
        Command::Conditions { input } => cmd_conditions(input, &cfg),
        Command::Integrate {
            manifest,
            builtin,
            extent,
            nodes,
            emit_csv,
        } => cmd_integrate(manifest.as_deref(), builtin.as_deref(), *extent, *nodes, *emit_csv, cli.step, &cfg),
        Command::Chart { input, builtin, samples } => cmd_chart(input.as_deref(), builtin.as_deref(), *samples, cli.seed, &cfg),
        Command::Verify { suite, trials } => cmd_verify(suite, *trials, cli.seed, cli.step, &cfg),
        Command::Cofinal { manifest, builtin, point } => cmd_cofinal(manifest.as_deref(), builtin.as_deref(), point, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match run(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, &output.text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.text.as_bytes()).map_err(|e| format!("stdout: {e}"))
        }
    };
    if let Err(message) = written {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    if output.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
