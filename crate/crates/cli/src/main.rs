use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qfid::io::{parse_kraus, parse_matrix, ProblemFile};
use qfid::linalg::{c, eig2_normal, Complex, DEFAULT_TOL};
use qfid::moments::{kraus_report, subspace_avg_fidelity, GateSpec};
use qfid::optimizer::optimize;
use qfid::qubit_dist::normal_pdf;
use qfid::sampler::{mc_histogram, mc_moment};
use qfid::verify::{Level, Verifier};
use qfid::{ComplexMatrix, Error, McConfig, QubitSpectrum, SubspaceSelector};
use serde::Serialize;
use serde_json::json;

const EXIT_USAGE: u8 = 1;
const EXIT_INVARIANT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qfid",
    version,
    about = "Haar-averaged fidelity statistics for quantum gates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,

    /// Histogram bin count.
    #[arg(long, global = true, default_value_t = 50)]
    bins: usize,

    /// Sampling workers; results are reproducible for a fixed seed and worker count.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Directory that receives output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Points in the emitted density CSV.
    #[arg(long, global = true, default_value_t = 400)]
    grid: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form mean, second moment and variance of the fidelity.
    Moments {
        /// Target unitary (matrix JSON); identity when omitted.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Actual operation (matrix JSON).
        #[arg(long, conflicts_with = "kraus", required_unless_present = "kraus")]
        actual: Option<PathBuf>,
        /// Actual operation as a Kraus map (JSON).
        #[arg(long)]
        kraus: Option<PathBuf>,
        /// Comma-separated basis indices of the computational subspace.
        #[arg(long, conflicts_with = "kraus")]
        subspace: Option<String>,
    },
    /// Exact fidelity distribution of a 2x2 normal map.
    Dist {
        /// 2x2 normal matrix (JSON).
        #[arg(long, conflicts_with_all = ["lambda0", "lambda1"], required_unless_present_all = ["lambda0", "lambda1"])]
        matrix: Option<PathBuf>,
        /// First eigenvalue as `re,im`.
        #[arg(long, requires = "lambda1", allow_hyphen_values = true)]
        lambda0: Option<String>,
        /// Second eigenvalue as `re,im`.
        #[arg(long, requires = "lambda0", allow_hyphen_values = true)]
        lambda1: Option<String>,
    },
    /// Monte Carlo histogram and mean estimate.
    Sample {
        /// Matrix `M` whose fidelity `|<psi|M|psi>|^2` is sampled (JSON).
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Cross-checks of closed forms against independent oracles.
    Verify {
        #[arg(value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
    },
    /// Simplex optimization of a built-in gate family.
    Optimize {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Also write the evaluation trace as CSV.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    /// Library error, prefixed with its source (usually a file name).
    fn lib(context: impl Display, err: Error) -> Self {
        let code = match err {
            Error::Parse(_)
            | Error::BadShape { .. }
            | Error::NonFinite(_)
            | Error::InvalidSelector(_)
            | Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_INVARIANT,
        };
        Self {
            code,
            message: format!("{context}: {err}"),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    seed: Option<u64>,
    versions: String,
    outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, inputs: &[&Path], seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            versions: format!("qfid {}", env!("CARGO_PKG_VERSION")),
            outputs: Vec::new(),
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path, manifest: RunManifest) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, manifest })
    }

    fn write(&mut self, name: &str, contents: &str) -> CmdResult {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(mut self) -> CmdResult {
        let path = self.dir.join("manifest.json");
        self.manifest.outputs.push(path.display().to_string());
        let text = to_json(&self.manifest);
        fs::write(&path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<ComplexMatrix, Failure> {
    parse_matrix(&read(path)?).map_err(|e| Failure::lib(path.display(), e))
}

fn parse_complex(flag: &str, text: &str) -> Result<Complex, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match parsed.as_deref() {
        Some(&[re, im]) if re.is_finite() && im.is_finite() => Ok(c(re, im)),
        _ => Err(Failure::usage(format!(
            "--{flag}: expected `re,im`, got '{text}'"
        ))),
    }
}

fn parse_subspace(text: &str) -> Result<SubspaceSelector, Failure> {
    let indices: Result<Vec<usize>, _> =
        text.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let indices = indices.map_err(|e| Failure::usage(format!("--subspace '{text}': {e}")))?;
    SubspaceSelector::new(indices).map_err(|e| Failure::lib("--subspace", e))
}

fn mc_config(cli: &Cli) -> McConfig {
    McConfig::new(cli.samples, cli.seed).with_workers(cli.workers)
}

fn cmd_moments(
    target: Option<&Path>,
    actual: Option<&Path>,
    kraus: Option<&Path>,
    subspace: Option<&str>,
) -> CmdResult {
    let subspace = subspace.map(parse_subspace).transpose()?;
    let target_matrix = target.map(load_matrix).transpose()?;
    let target_name = target.map_or_else(|| "target".to_string(), |p| p.display().to_string());

    let report = if let Some(path) = kraus {
        let map = parse_kraus(&read(path)?).map_err(|e| Failure::lib(path.display(), e))?;
        let t = target_matrix.unwrap_or_else(|| ComplexMatrix::identity(map.dim()));
        kraus_report(&map, &t)
            .map_err(|e| Failure::lib(format!("{target_name} vs {}", path.display()), e))?
    } else {
        let path = actual.expect("clap requires --actual or --kraus");
        let a = load_matrix(path)?;
        let t = target_matrix.unwrap_or_else(|| ComplexMatrix::identity(a.dim()));
        let context = format!("{target_name} vs {}", path.display());
        let has_subspace = subspace.is_some();
        let g = GateSpec::new(t, a, subspace).map_err(|e| Failure::lib(&context, e))?;
        if has_subspace {
            subspace_avg_fidelity(&g).map_err(|e| Failure::lib(&context, e))?
        } else {
            g.moments()
        }
    };
    emit(&to_json(&report));
    Ok(())
}

fn cmd_dist(
    cli: &Cli,
    matrix: Option<&Path>,
    lambda0: Option<&str>,
    lambda1: Option<&str>,
) -> CmdResult {
    let (spectrum, source, inputs): (QubitSpectrum, String, Vec<&Path>) = match matrix {
        Some(path) => {
            let m = load_matrix(path)?;
            let s = eig2_normal(&m, DEFAULT_TOL).map_err(|e| Failure::lib(path.display(), e))?;
            (s, path.display().to_string(), vec![path])
        }
        None => {
            let a = parse_complex("lambda0", lambda0.expect("clap requires both eigenvalues"))?;
            let b = parse_complex("lambda1", lambda1.expect("clap requires both eigenvalues"))?;
            let s = QubitSpectrum::new(a, b).map_err(|e| Failure::lib("--lambda0/--lambda1", e))?;
            (s, "--lambda0/--lambda1".to_string(), Vec::new())
        }
    };
    let d = normal_pdf(&spectrum).map_err(|e| Failure::lib(&source, e))?;
    let csv = d.pdf_csv(cli.grid).map_err(|e| Failure::lib("--grid", e))?;
    let (lo, hi) = d.support();
    let mut doc = serde_json::to_value(&d).expect("plain data serializes");
    doc["support"] = json!([lo, hi]);
    doc["quadrature"] =
        serde_json::to_value(d.quadrature_moments()).expect("plain data serializes");
    let text = to_json(&doc);

    let mut out = Output::new(&cli.out, RunManifest::new("dist", &inputs, None))?;
    out.write("dist.json", &text)?;
    out.write("pdf.csv", &csv)?;
    out.finish()?;
    emit(&text);
    Ok(())
}

fn cmd_sample(cli: &Cli, path: &Path) -> CmdResult {
    let m = load_matrix(path)?;
    let cfg = mc_config(cli);
    // a 2x2 normal map has a known support; bin over it so the histogram lines up with the density
    let range = eig2_normal(&m, DEFAULT_TOL)
        .ok()
        .and_then(|s| normal_pdf(&s).ok())
        .map(|d| d.support());
    let hist =
        mc_histogram(&m, cli.bins, &cfg, range).map_err(|e| Failure::lib("--samples/--bins", e))?;
    let estimate = mc_moment(&m, 1, &cfg).map_err(|e| Failure::lib("--samples", e))?;
    let text = to_json(&estimate);

    let mut out = Output::new(
        &cli.out,
        RunManifest::new("sample", &[path], Some(cli.seed)),
    )?;
    out.write("histogram.csv", &hist.to_csv())?;
    out.write("estimate.json", &text)?;
    out.finish()?;
    emit(&text);
    Ok(())
}

fn cmd_verify(cli: &Cli, level: VerifyLevel) -> CmdResult {
    let level = match level {
        VerifyLevel::Quick => Level::Quick,
        VerifyLevel::Full => Level::Full,
    };
    let report = Verifier::new(level)
        .with_seed(cli.seed)
        .with_workers(cli.workers)
        .run();
    emit(&to_json(&report));
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed: {}", failed.join(", ")),
        })
    }
}

fn cmd_optimize(cli: &Cli, path: &Path, trace: bool) -> CmdResult {
    let problem = ProblemFile::parse(&read(path)?).map_err(|e| Failure::lib(path.display(), e))?;
    let family = problem
        .family()
        .map_err(|e| Failure::lib(path.display(), e))?;
    let mut config = problem.config();
    config.record_trace = trace;
    let result = optimize(&family, &problem.objective, &config)
        .map_err(|e| Failure::lib(path.display(), e))?;
    emit(&to_json(&result));
    if let Some(points) = &result.trace {
        let mut csv = String::from("evaluation,");
        csv.push_str(
            &(0..family.param_count())
                .map(|i| format!("p{i}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        csv.push_str(",value\n");
        for (i, t) in points.iter().enumerate() {
            let params: Vec<String> = t.params.iter().map(f64::to_string).collect();
            csv.push_str(&format!("{i},{},{}\n", params.join(","), t.value));
        }
        let mut out = Output::new(&cli.out, RunManifest::new("optimize", &[path], None))?;
        out.write("trace.csv", &csv)?;
        out.finish()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Moments {
            target,
            actual,
            kraus,
            subspace,
        } => cmd_moments(
            target.as_deref(),
            actual.as_deref(),
            kraus.as_deref(),
            subspace.as_deref(),
        ),
        Command::Dist {
            matrix,
            lambda0,
            lambda1,
        } => cmd_dist(
            cli,
            matrix.as_deref(),
            lambda0.as_deref(),
            lambda1.as_deref(),
        ),
        Command::Sample { matrix } => cmd_sample(cli, matrix),
        Command::Verify { level } => cmd_verify(cli, *level),
        Command::Optimize { problem, trace } => cmd_optimize(cli, problem, *trace),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qfid: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
