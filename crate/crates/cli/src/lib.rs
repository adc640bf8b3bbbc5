//! Command-line driver: load a matrix, compress, factor, solve, report.

pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vbarms::compression::{build_quotient_graph, compress, CompressionMethod, CompressionParams};
use vbarms::dd::{DdParams, DomainMap, GlobalKind, GlobalPreconditioner};
use vbarms::factor::{FactorParams, VbarmsPreconditioner};
use vbarms::gallery::desk_corpus;
use vbarms::io::{
    load_matrix, parse_domain_assignment, save_matrix_market, write_block_partition,
    write_csr_cache,
};
use vbarms::krylov::{fgmres, Identity, KrylovParams, Operator};
use vbarms::sparse::{block_metrics, symmetrized_pattern, CsrMatrix};

pub use report::{emit_report, ReportFormat, RunReport};

#[derive(Debug, Parser)]
#[command(
    name = "vbarms",
    version,
    about = "Variable-block multilevel ILU preconditioning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress, factor and solve one system.
    Run(RunConfig),
    /// Compute a block partition and print its density.
    Compress(CompressArgs),
    /// Write a desk-corpus matrix in Matrix Market format.
    Gen(GenArgs),
    /// Convert between Matrix Market and the binary CSR cache.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecondKind {
    /// No preconditioner.
    None,
    /// Multilevel VBARMS on the whole matrix.
    Seq,
    /// Single-level variable-block ILUT.
    Vbilut,
    Bj,
    Ras,
    Schur,
}

impl PrecondKind {
    fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Seq => "seq",
            Self::Vbilut => "vbilut",
            Self::Bj => "bj",
            Self::Ras => "ras",
            Self::Schur => "schur",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompressionArgs {
    #[arg(long, default_value = "graph")]
    pub method: CompressionMethod,
    /// Cosine threshold of the angle method.
    #[arg(long, default_value_t = 0.8)]
    pub tau: f64,
    /// Density floor of the graph method.
    #[arg(long, default_value_t = 0.7)]
    pub mu: f64,
}

impl CompressionArgs {
    fn params(&self) -> CompressionParams {
        CompressionParams {
            method: self.method,
            tau: self.tau,
            mu: self.mu,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub matrix: PathBuf,
    /// `ones` (b = A * ones), `random` (seeded) or a file with one value per line.
    #[arg(long, default_value = "ones")]
    pub rhs: String,
    #[command(flatten)]
    pub compression: CompressionArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub droptol: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long = "min-schur", default_value_t = 200)]
    pub min_schur: usize,
    /// Keep at most this many blocks per row in the last-level factors.
    #[arg(long)]
    pub fill: Option<usize>,
    /// Dense LU on the last level when it has at most 200 rows.
    #[arg(long = "exact-last")]
    pub exact_last: bool,
    #[arg(long, value_enum, default_value = "seq")]
    pub precond: PrecondKind,
    #[arg(long, default_value_t = 1)]
    pub domains: usize,
    #[arg(long, default_value_t = 0)]
    pub overlap: usize,
    /// Domain id per supernode, one per line; overrides --domains.
    #[arg(long = "partition-file")]
    pub partition_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub maxit: usize,
    #[arg(long, default_value_t = 60)]
    pub restart: usize,
    #[arg(long = "inner-its", default_value_t = 5)]
    pub inner_its: usize,
    #[arg(long = "inner-tol", default_value_t = 1e-2)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub compression: CompressionArgs,
    /// Write the block id of every row here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Corpus matrix name; `list` prints the available names.
    pub name: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    pub input: PathBuf,
    /// `.mtx` writes Matrix Market, anything else the binary cache.
    pub output: PathBuf,
}

/// Any failure of a command, tagged with the stage it happened in.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

fn at<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError {
        stage,
        message: e.to_string(),
    }
}

fn matrix_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn build_rhs(a: &CsrMatrix, spec: &str, seed: u64) -> Result<(Vec<f64>, bool), CliError> {
    match spec {
        "ones" => Ok((a.spmv(&vec![1.0; a.n_cols()]).map_err(at("rhs"))?, true)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((
                (0..a.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                false,
            ))
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError {
                stage: "rhs",
                message: format!("{path}: {e}"),
            })?;
            let b: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(at("rhs"))?;
            if b.len() != a.n_rows() {
                return Err(CliError {
                    stage: "rhs",
                    message: format!("{} values for {} rows", b.len(), a.n_rows()),
                });
            }
            Ok((b, false))
        }
    }
}

/// Runs the full pipeline. Non-convergence is not an error; it is
/// recorded in the report.
pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let total = Instant::now();
    let a = load_matrix(&cfg.matrix).map_err(at("load"))?;
    if !a.is_square() {
        return Err(CliError {
            stage: "load",
            message: format!("matrix is {}x{}", a.n_rows(), a.n_cols()),
        });
    }
    let (b, known_solution) = build_rhs(&a, &cfg.rhs, cfg.seed)?;
    let factor = FactorParams {
        drop_tol: cfg.droptol,
        max_levels: cfg.levels,
        min_schur_size: cfg.min_schur,
        last_level_fill: cfg.fill,
        compression: cfg.compression.params(),
        exact_last_level: cfg.exact_last,
    };
    factor.validate().map_err(at("parameters"))?;
    let krylov = KrylovParams {
        tol: cfg.tol,
        max_iters: cfg.maxit,
        restart: cfg.restart,
        track_orthogonality: false,
    };
    krylov.validate().map_err(at("parameters"))?;

    let t0 = Instant::now();
    let partition = compress(&a, &factor.compression).map_err(at("compress"))?;
    let blocking_time = t0.elapsed().as_secs_f64();
    let metrics = block_metrics(&a, &partition).map_err(at("compress"))?;

    let t0 = Instant::now();
    let mut domains = 1;
    let (precond, nnz_precond, memory_ratio): (Box<dyn Operator>, usize, f64) = match cfg.precond {
        PrecondKind::None => (Box::new(Identity(a.n_rows())), 0, 0.0),
        PrecondKind::Seq | PrecondKind::Vbilut => {
            let p = if cfg.precond == PrecondKind::Seq {
                VbarmsPreconditioner::with_partition(&a, &partition, &factor)
            } else {
                VbarmsPreconditioner::block_ilu(&a, &partition, &factor)
            }
            .map_err(at("factor"))?;
            let nnz = p.nnz();
            (Box::new(p), nnz, nnz as f64 / a.nnz().max(1) as f64)
        }
        PrecondKind::Bj | PrecondKind::Ras | PrecondKind::Schur => {
            let kind = match cfg.precond {
                PrecondKind::Bj => GlobalKind::BlockJacobi,
                PrecondKind::Ras => GlobalKind::Ras,
                _ => GlobalKind::Schur,
            };
            let params = DdParams {
                factor,
                inner: KrylovParams {
                    tol: cfg.inner_tol,
                    max_iters: cfg.inner_its,
                    restart: cfg.inner_its.max(1),
                    track_orthogonality: false,
                },
            };
            let gp = match &cfg.partition_file {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError {
                        stage: "partition",
                        message: format!("{}: {e}", path.display()),
                    })?;
                    let (owner, p) = parse_domain_assignment(&text).map_err(at("partition"))?;
                    let qg = build_quotient_graph(
                        &symmetrized_pattern(&a).map_err(at("partition"))?,
                        &partition,
                    );
                    let map = DomainMap::from_assignment(&qg, owner, p).map_err(at("partition"))?;
                    GlobalPreconditioner::with_map(&a, &partition, &map, kind, cfg.overlap, &params)
                }
                None => GlobalPreconditioner::new(
                    &a,
                    &partition,
                    cfg.domains,
                    kind,
                    cfg.overlap,
                    &params,
                ),
            }
            .map_err(at("factor"))?;
            domains = gp.n_domains();
            let nnz = gp
                .local_solvers()
                .iter()
                .map(VbarmsPreconditioner::nnz)
                .sum();
            let ratio = gp.memory_ratio();
            (Box::new(gp), nnz, ratio)
        }
    };
    let factor_time = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (x, stats) = fgmres(&a, precond.as_ref(), &b, &krylov).map_err(at("solve"))?;
    let solve_time = t0.elapsed().as_secs_f64();
    let max_error = known_solution.then(|| x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));

    Ok(RunReport {
        matrix: matrix_name(&cfg.matrix),
        n: a.n_rows(),
        nnz: a.nnz(),
        method: cfg.compression.method.to_string(),
        precond: cfg.precond.name().into(),
        domains,
        av_bd: metrics.av_bd,
        av_bs: metrics.av_bs,
        n_blocks: metrics.n_blocks,
        blocking_time,
        factor_time,
        solve_time,
        total_time: total.elapsed().as_secs_f64(),
        iterations: stats.iterations,
        converged: stats.converged,
        final_relres: stats.final_relres,
        nnz_precond,
        memory_ratio,
        max_error,
    })
}

/// Summary line printed by `compress`.
pub fn compress_cmd(args: &CompressArgs) -> Result<String, CliError> {
    let a = load_matrix(&args.matrix).map_err(at("load"))?;
    let t0 = Instant::now();
    let p = compress(&a, &args.compression.params()).map_err(at("compress"))?;
    let time = t0.elapsed().as_secs_f64();
    let m = block_metrics(&a, &p).map_err(at("compress"))?;
    if let Some(out) = &args.output {
        let f = std::fs::File::create(out).map_err(at("write"))?;
        write_block_partition(&p, std::io::BufWriter::new(f)).map_err(at("write"))?;
    }
    Ok(format!(
        "{} n={} nnz={} method={} blocks={} av_bd={:.2}% av_bs={:.3} time={:.3}s",
        matrix_name(&args.matrix),
        a.n_rows(),
        a.nnz(),
        args.compression.method,
        m.n_blocks,
        100.0 * m.av_bd,
        m.av_bs,
        time
    ))
}

pub fn gen_cmd(args: &GenArgs) -> Result<String, CliError> {
    let corpus = desk_corpus();
    if args.name == "list" {
        return Ok(corpus.iter().map(|c| c.name).collect::<Vec<_>>().join("\n"));
    }
    let m = corpus
        .into_iter()
        .find(|c| c.name == args.name)
        .ok_or_else(|| CliError {
            stage: "gen",
            message: format!("unknown corpus matrix '{}'", args.name),
        })?;
    let out = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.mtx", m.name)));
    save_matrix_market(&m.matrix, &out).map_err(at("write"))?;
    Ok(format!(
        "{} n={} nnz={} -> {}",
        m.name,
        m.matrix.n_rows(),
        m.matrix.nnz(),
        out.display()
    ))
}

pub fn convert_cmd(args: &ConvertArgs) -> Result<String, CliError> {
    let a = load_matrix(&args.input).map_err(at("load"))?;
    if args.output.extension().is_some_and(|e| e == "mtx") {
        save_matrix_market(&a, &args.output).map_err(at("write"))?;
    } else {
        let f = std::fs::File::create(&args.output).map_err(at("write"))?;
        write_csr_cache(&a, std::io::BufWriter::new(f)).map_err(at("write"))?;
    }
    Ok(format!(
        "{} -> {}",
        args.input.display(),
        args.output.display()
    ))
}
