//! The `l2t` command line.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::alexander::{
    alexander_complex_curve, alexander_graph_curve, convexity_scan, fibered_reference_curve, format_sig12, log_spaced,
    AlexanderCurve, ConvexityReport, FiberedCurveSpec, Normalization, CONVEXITY_TOL,
};
use crate::chain::{torsion, AdmissibleTriple, BasedChainComplex, Representation, TorsionMethod, TorsionStatus};
use crate::error::L2tError;
use crate::laurent::{CohomologyClass, LaurentElement, LaurentMatrix};
use crate::mahler::{mahler_measure, rdet_abelian, MethodChoice, QuadConfig};
use crate::manifolds::{
    crosscheck_graph_formula, thurston_norm_graph, torsion_graph_manifold, CrosscheckReport, GraphManifold,
    PieceRealization, SeifertPiece,
};
use crate::numeric::{eigenvalues, ComplexMatrix, C64};
use crate::quotient::{rdet_finite_quotient, FiniteQuotient, QuotientEstimate, TorusBundlePreset, WordMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_STATUS: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "l2t", version, about = "Twisted L2-torsion and L2-Alexander torsion of 3-manifolds")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tol: f64,
    /// Grid cap per axis (power of two, at most 16384).
    #[arg(long, global = true, default_value_t = 1 << 14)]
    pub max_grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MahlerMethodArg {
    Auto,
    Roots,
    Grid,
    Nested,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorsionMethodArg {
    Auto,
    Subset,
    Laplacian,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizationArg {
    Raw,
    Symmetric,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    TorusBundle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mahler measure of a Laurent polynomial.
    Mahler {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MahlerMethodArg::Auto)]
        method: MahlerMethodArg,
    },
    /// Regular Fuglede-Kadison determinant of a square matrix over C[Z^k].
    Rdet {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// L2-torsion of a based chain complex, optionally twisted.
    Torsion {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        triple: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TorsionMethodArg::Auto)]
        method: TorsionMethodArg,
    },
    /// Closed-form torsion of a graph manifold.
    Graph {
        #[arg(long)]
        manifold: PathBuf,
        /// Recompute each piece through chain complexes.
        #[arg(long)]
        crosscheck: bool,
    },
    /// L2-Alexander torsion curve.
    Alexander {
        #[arg(long, conflicts_with = "complex")]
        manifold: Option<PathBuf>,
        #[arg(long)]
        complex: Option<PathBuf>,
        #[arg(long)]
        class: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        t_min: f64,
        #[arg(long, default_value_t = 4.0)]
        t_max: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = NormalizationArg::Raw)]
        normalization: NormalizationArg,
        /// Reference curve of a fibered class with this entropy.
        #[arg(long, conflicts_with_all = ["manifold", "complex"], requires = "norm")]
        entropy: Option<f64>,
        /// Thurston norm for the fibered reference curve.
        #[arg(long, requires = "entropy")]
        norm: Option<f64>,
    },
    /// Discrete convexity scan of a multi-twisted determinant along a line.
    Convexity {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 33)]
        samples: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        s_min: f64,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
    },
    /// Finite-quotient determinant estimate (heuristic).
    Quotient {
        #[arg(long, conflicts_with = "preset", requires = "quotient")]
        matrix: Option<PathBuf>,
        #[arg(long)]
        quotient: Option<PathBuf>,
        #[arg(long)]
        rep: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 5)]
        modulus: usize,
        /// Twist parameters for the preset curve.
        #[arg(long = "t", num_args = 1.., default_values_t = [0.25, 4.0])]
        t: Vec<f64>,
    },
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    /// Torsion status failure; carries the status JSON.
    Status(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) | CliError::Status(s) => f.write_str(s),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Status(_) => EXIT_STATUS,
        }
    }
}

impl From<L2tError> for CliError {
    fn from(e: L2tError) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses JSON, reporting the file, the field path and the problem.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        match path.as_str() {
            "?" => CliError::Input(format!("{origin}: malformed JSON: {}", e.inner())),
            "." | "" => CliError::Input(format!("{origin}: field (root): {}", e.inner())),
            _ => CliError::Input(format!("{origin}: field {path}: {}", e.inner())),
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

fn quad_config(g: &GlobalOpts, method: MethodChoice) -> CliResult<QuadConfig> {
    let cfg = QuadConfig { tol: g.tol, max_grid: g.max_grid, method, ..QuadConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn json_only(g: &GlobalOpts, what: &str) -> CliResult<()> {
    if g.format == Format::Csv {
        return Err(CliError::Input(format!("csv output is not available for {what}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphReport {
    value: f64,
    log_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    thurston_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crosscheck: Option<Vec<CrosscheckReport>>,
}

#[derive(Serialize)]
struct PresetSample {
    t: f64,
    #[serde(flatten)]
    estimate: QuotientEstimate,
}

/// `S` with `S^P` similar to `rho(h)`: principal roots of the eigenvalues,
/// one of them corrected by a root of unity so that `det S = 1`.
fn diagonal_fiber_root(piece: &SeifertPiece) -> CliResult<ComplexMatrix> {
    let big_p = piece.fibers.iter().fold(1i64, |acc, &(_, p)| acc.lcm(&p));
    let mut roots: Vec<C64> = eigenvalues(&piece.fiber_image)?.iter().map(|z| z.powf(1.0 / big_p as f64)).collect();
    let det: C64 = roots.iter().product();
    if let Some(r) = roots.first_mut() {
        *r /= det / det.norm();
    }
    Ok(ComplexMatrix::diagonal(&roots))
}

fn curve_csv(c: &AlexanderCurve) -> String {
    c.to_csv()
}

fn convexity_csv(r: &ConvexityReport) -> String {
    let mut out = String::from("t,value\n");
    for (s, v) in r.s_values.iter().zip(&r.log_values) {
        out.push_str(&format!("{},{}\n", format_sig12(s.exp()), format_sig12(v.exp())));
    }
    out
}

/// Runs one parsed command and returns the text to emit.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let g = &cli.global;
    match &cli.command {
        Command::Mahler { input, method } => {
            json_only(g, "mahler")?;
            let method = match method {
                MahlerMethodArg::Auto => MethodChoice::Auto,
                MahlerMethodArg::Roots => MethodChoice::Roots,
                MahlerMethodArg::Grid => MethodChoice::Grid,
                MahlerMethodArg::Nested => MethodChoice::Nested,
            };
            let p: LaurentElement = read_json(input)?;
            Ok(to_json(&mahler_measure(&p, &quad_config(g, method)?)?))
        }
        Command::Rdet { matrix } => {
            json_only(g, "rdet")?;
            let m: LaurentMatrix = read_json(matrix)?;
            Ok(to_json(&rdet_abelian(&m, &quad_config(g, MethodChoice::Auto)?)?))
        }
        Command::Torsion { complex, triple, method } => {
            json_only(g, "torsion")?;
            let mut c: BasedChainComplex = read_json(complex)?;
            if let Some(path) = triple {
                let t: AdmissibleTriple = read_json(path)?;
                c = c.twist(&t)?;
            }
            let method = match method {
                TorsionMethodArg::Auto | TorsionMethodArg::Subset => TorsionMethod::Subset,
                TorsionMethodArg::Laplacian => TorsionMethod::Laplacian,
            };
            let v = torsion(&c, method, g.seed, &quad_config(g, MethodChoice::Auto)?)?;
            let text = to_json(&v);
            if v.status != TorsionStatus::Ok {
                return Err(CliError::Status(text));
            }
            Ok(text)
        }
        Command::Graph { manifold, crosscheck } => {
            json_only(g, "graph")?;
            let m: GraphManifold = read_json(manifold)?;
            let value = torsion_graph_manifold(&m)?;
            let crosscheck = if *crosscheck {
                let cfg = quad_config(g, MethodChoice::Auto)?;
                let mut reports = Vec::new();
                for (i, piece) in m.pieces.iter().enumerate() {
                    // Diagonal surrogate: rho(h) replaced by the similar S^P.
                    let root = diagonal_fiber_root(piece)?;
                    let mut surrogate = piece.clone();
                    surrogate.fiber_image = root.pow(piece.fibers.iter().fold(1i64, |acc, &(_, p)| acc.lcm(&p)))?;
                    let real = PieceRealization::through_fiber_root(&surrogate, &root)
                        .map_err(|e| CliError::Input(format!("piece {i}: {e}")))?;
                    let seed = g.seed.wrapping_add(1000 * i as u64);
                    reports.push(crosscheck_graph_formula(&surrogate, &real, seed, &cfg)?);
                }
                Some(reports)
            } else {
                None
            };
            Ok(to_json(&GraphReport {
                value,
                log_value: value.ln(),
                thurston_norm: thurston_norm_graph(&m).ok(),
                crosscheck,
            }))
        }
        Command::Alexander { manifold, complex, class, t_min, t_max, samples, normalization, entropy, norm } => {
            let ts = log_spaced(*t_min, *t_max, *samples)?;
            let normalization = match normalization {
                NormalizationArg::Raw => Normalization::Raw,
                NormalizationArg::Symmetric => Normalization::Symmetric,
            };
            let class: Option<CohomologyClass> = class.as_deref().map(read_json).transpose()?;
            let curve = if let (Some(h), Some(x)) = (entropy, norm) {
                fibered_reference_curve(&FiberedCurveSpec { entropy: *h, thurston_norm: *x }, &ts)?
            } else if let Some(path) = manifold {
                let m: GraphManifold = read_json(path)?;
                alexander_graph_curve(&m, class.as_ref(), &ts, normalization)?
            } else if let Some(path) = complex {
                let c: BasedChainComplex = read_json(path)?;
                let class = class.ok_or_else(|| CliError::Input("--class is required with --complex".into()))?;
                alexander_complex_curve(&c, &class, &ts, normalization, g.seed, &quad_config(g, MethodChoice::Auto)?)?
            } else {
                return Err(CliError::Input("one of --manifold, --complex or --entropy/--norm is required".into()));
            };
            Ok(match g.format {
                Format::Json => to_json(&curve),
                Format::Csv => curve_csv(&curve),
            })
        }
        Command::Convexity { matrix, classes, base, dir, samples, s_min, s_max } => {
            let omega: LaurentMatrix = read_json(matrix)?;
            let classes: Vec<CohomologyClass> = read_json(classes)?;
            let base: Vec<f64> = read_json(base)?;
            let dir: Vec<f64> = read_json(dir)?;
            let cfg = quad_config(g, MethodChoice::Auto)?;
            let r = convexity_scan(&omega, &classes, &base, &dir, *samples, (*s_min, *s_max), CONVEXITY_TOL, &cfg)?;
            Ok(match g.format {
                Format::Json => to_json(&r),
                Format::Csv => convexity_csv(&r),
            })
        }
        Command::Quotient { matrix, quotient, rep, preset, modulus, t } => {
            if let Some(Preset::TorusBundle) = preset {
                let p = TorusBundlePreset::new([[2, 1], [1, 1]], *modulus)?;
                let ests = p.curve(t)?;
                let samples: Vec<PresetSample> =
                    t.iter().zip(ests).map(|(&t, estimate)| PresetSample { t, estimate }).collect();
                return Ok(match g.format {
                    Format::Json => to_json(&samples),
                    Format::Csv => {
                        let mut out = String::from("t,value\n");
                        for s in &samples {
                            out.push_str(&format!("{},{}\n", format_sig12(s.t), format_sig12(s.estimate.value)));
                        }
                        out
                    }
                });
            }
            json_only(g, "quotient estimates")?;
            let matrix = matrix.as_ref().ok_or_else(|| CliError::Input("--matrix or --preset is required".into()))?;
            let q_path = quotient.as_ref().ok_or_else(|| CliError::Input("--quotient is required".into()))?;
            let words: WordMatrix = read_json(matrix)?;
            let q: FiniteQuotient = read_json(q_path)?;
            let rep: Option<Representation> = rep.as_deref().map(read_json).transpose()?;
            Ok(to_json(&rdet_finite_quotient(&words, &q, rep.as_ref())?))
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("L2T_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::Input(format!("L2T_THREADS: not a count: {v:?}")))?;
    if n > 0 {
        // A second initialisation in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Parses arguments, runs, writes output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|_| execute(&cli));
    match result {
        Ok(text) => match emit(&cli.global.out, &text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(CliError::Status(text)) => {
            // Status JSON goes where results would have gone.
            if let Err(e) = emit(&cli.global.out, &text) {
                eprintln!("error: {e}");
            }
            eprintln!("error: torsion status failure");
            EXIT_STATUS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
