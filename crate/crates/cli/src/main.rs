use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lplr::compressor::{compress, reconstruct, Algorithm, CompressionConfig, RangeMode};
use lplr::eval::{
    knn_classify, knn_predict, parity_sketch_size, relative_fro_error, shepp_logan, sweep,
    verify_equalization, verify_sketched_ls, verify_wishart_trace, SketchedLsSetup, SweepGrid,
};
use lplr::io::{
    load_factorization, load_matrix, save_factorization, save_matrix, to_json, MatrixFormat,
};
use lplr::linalg::LstsqMethod;
use lplr::quantize::MAX_BITS;
use lplr::{Matrix, Rounding};

#[derive(Parser)]
#[command(name = "lplr", version, about = "Low-precision low-rank matrix compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a matrix into a packed factor file.
    Compress(CompressArgs),
    /// Expand a factor file back into a dense matrix.
    Decompress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Relative Frobenius error of `b` against the reference `a`.
    Eval {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Run a grid of (algorithm, budget, seed) cells; the grid is a JSON file or inline JSON.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-nearest-neighbour classification.
    Knn {
        #[arg(long)]
        train: PathBuf,
        /// Integer labels, one per training row.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Ground truth for the test rows; enables accuracy and F1.
        #[arg(long)]
        test_labels: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Write the modified Shepp-Logan phantom. PGM output is scaled to 0..=255.
    Phantom {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Monte-Carlo checks of the error analysis.
    Selftest {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// LPLR sketch size.
    #[arg(long, group = "width")]
    sketch_size: Option<usize>,
    /// Target rank of the SVD-based algorithms.
    #[arg(long, group = "width")]
    rank: Option<usize>,
    /// Choose the width so the factors use no more bits than naive quantization at this width.
    #[arg(long, group = "width")]
    parity_bnq: Option<u32>,
    /// Left-factor bits (naive quantization: bits per entry).
    #[arg(long)]
    bits: u32,
    /// Right-factor bits; defaults to --bits.
    #[arg(long)]
    bits2: Option<u32>,
    #[arg(long, value_enum, default_value_t = RangeArg::Data)]
    range_mode: RangeArg,
    /// Tolerance for theory-mode ranges.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Closed)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = RoundingArg::Dithered)]
    rounding: RoundingArg,
    /// Rotate the SVD basis before quantizing (lsvd only).
    #[arg(long)]
    rotate: bool,
    #[arg(long)]
    normalize_shift: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Lplr,
    Lsvd,
    Dsvd,
    Nq,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Lplr => Algorithm::Lplr,
            AlgoArg::Lsvd => Algorithm::LplrSvd,
            AlgoArg::Dsvd => Algorithm::Dsvd,
            AlgoArg::Nq => Algorithm::Naive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeArg {
    Data,
    Theory,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Closed,
    Cg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Dithered,
    Nearest,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Matf,
    Csv,
    Pgm,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Matf => MatrixFormat::Matf,
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Pgm => MatrixFormat::Pgm,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Wishart,
    Equalization,
    Sketchedls,
    All,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<lplr::Error> for Failure {
    fn from(e: lplr::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn format_for(path: &Path, explicit: Option<FormatArg>) -> MatrixFormat {
    explicit.map_or_else(|| MatrixFormat::from_path(path), Into::into)
}

fn read_matrix(path: &Path) -> CliResult<Matrix> {
    load_matrix(path, MatrixFormat::from_path(path))
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> CliResult<()> {
    print!("{}", to_json(value)?);
    Ok(())
}

fn compress_config(args: &CompressArgs, n: usize, d: usize) -> CliResult<CompressionConfig> {
    let algorithm = Algorithm::from(args.algo);
    let bits2 = args.bits2.unwrap_or(args.bits);
    let width = match algorithm {
        Algorithm::Naive => 0,
        Algorithm::Lplr | Algorithm::LplrSvd | Algorithm::Dsvd => {
            match (args.sketch_size, args.rank, args.parity_bnq) {
                (Some(m), None, None) | (None, Some(m), None) => m,
                (None, None, Some(bnq)) => parity_sketch_size(n, d, args.bits, bits2, bnq)?.m,
                _ => {
                    return Err(Failure::Usage(format!(
                        "{algorithm} needs one of --sketch-size, --rank or --parity-bnq"
                    )))
                }
            }
        }
    };
    let range_mode = match (args.range_mode, args.eps) {
        (RangeArg::Data, _) => RangeMode::DataDriven,
        (RangeArg::Theory, Some(eps)) => RangeMode::Theory { eps },
        (RangeArg::Theory, None) => {
            return Err(Failure::Usage("--range-mode theory requires --eps".into()))
        }
    };
    // Parity is computed with the nominal widths; the quantizer tops out at MAX_BITS.
    let cfg = CompressionConfig::for_algorithm(
        algorithm,
        width,
        args.bits.min(MAX_BITS),
        bits2.min(MAX_BITS),
    )
    .with_range_mode(range_mode)
    .with_solver(match args.solver {
        SolverArg::Closed => LstsqMethod::ClosedForm,
        SolverArg::Cg => LstsqMethod::conjugate_gradient(),
    })
    .with_rounding(match args.rounding {
        RoundingArg::Dithered => Rounding::Dithered,
        RoundingArg::Nearest => Rounding::Nearest,
    })
    .with_rotation(args.rotate)
    .with_normalize_shift(args.normalize_shift)
    .with_seed(args.seed);
    Ok(cfg)
}

fn run_compress(args: &CompressArgs) -> CliResult<()> {
    let a = read_matrix(&args.input)?;
    let cfg = compress_config(args, a.rows(), a.cols())?;
    let (factors, report) = compress(&a, &cfg)?;
    save_factorization(&args.out, &factors)?;
    match &args.report {
        Some(path) => fs::write(path, to_json(&report)?)?,
        None => print_json(&report)?,
    }
    Ok(())
}

fn read_labels(path: &Path) -> CliResult<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Failure::Runtime(format!("{}: label {t:?} is not an integer", path.display())))
        })
        .collect()
}

fn read_grid(grid: &str) -> CliResult<SweepGrid> {
    let text = if grid.trim_start().starts_with('{') {
        grid.to_string()
    } else {
        fs::read_to_string(grid).map_err(|e| Failure::Runtime(format!("{grid}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Runtime(format!("invalid sweep grid: {e}")))
}

fn run_selftest(suite: Suite, seed: u64) -> CliResult<bool> {
    let mut results = Vec::new();
    let mut passed = true;
    let wanted = |s: Suite| suite == Suite::All || suite == s;
    if wanted(Suite::Wishart) {
        for (m, d) in [(4, 20), (8, 40)] {
            let c = verify_wishart_trace(m, d, 5000, seed)?;
            let ok = c.rel_dev <= 0.05;
            passed &= ok;
            results.push(json!({"suite": "wishart", "passed": ok, "check": c}));
        }
    }
    if wanted(Suite::Equalization) {
        for bits in [1, 4, 8] {
            let c = verify_equalization(256, 32, bits, 1.0, 1.0, 2000, seed)?;
            passed &= c.holds;
            results.push(json!({"suite": "equalization", "passed": c.holds, "check": c}));
        }
    }
    if wanted(Suite::Sketchedls) {
        let c = verify_sketched_ls(&SketchedLsSetup {
            seed,
            ..SketchedLsSetup::default()
        })?;
        let ok = c.lower_holds && c.upper_holds;
        passed &= ok;
        results.push(json!({"suite": "sketchedls", "passed": ok, "check": c}));
    }
    print_json(&json!({"passed": passed, "results": results}))?;
    Ok(passed)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Compress(args) => run_compress(&args),
        Command::Decompress { input, out, format } => {
            let f = load_factorization(&input)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
            save_matrix(&out, &reconstruct(&f), format_for(&out, format))?;
            Ok(())
        }
        Command::Eval { a, b } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            print_json(&json!({"relative_fro_error": relative_fro_error(&b, &a)?}))
        }
        Command::Sweep { input, grid, out } => {
            let a = read_matrix(&input)?;
            let table = sweep(&a, &read_grid(&grid)?)?;
            match out {
                Some(path) => fs::write(path, to_json(&table)?)?,
                None => print_json(&table)?,
            }
            Ok(())
        }
        Command::Knn {
            train,
            labels,
            test,
            test_labels,
            k,
        } => {
            let (train, test) = (read_matrix(&train)?, read_matrix(&test)?);
            let labels = read_labels(&labels)?;
            match test_labels {
                Some(path) => print_json(&knn_classify(&train, &labels, &test, &read_labels(&path)?, k)?),
                None => print_json(&json!({"predicted": knn_predict(&train, &labels, &test, k)?})),
            }
        }
        Command::Phantom { size, out, format } => {
            let p = shepp_logan(size)?;
            let format = format_for(&out, format);
            let p = if format == MatrixFormat::Pgm { p.scale(255.0) } else { p };
            save_matrix(&out, &p, format)?;
            Ok(())
        }
        Command::Selftest { suite, seed } => {
            if run_selftest(suite, seed)? {
                Ok(())
            } else {
                Err(Failure::Runtime("self-test failed".into()))
            }
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LPLR_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("LPLR_THREADS must be a non-negative integer, got {value:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
