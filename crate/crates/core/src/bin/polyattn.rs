use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polyattn::annreduce::{
    ann_binary_search, gap_ann_decide, read_points, CbScale, DecideOptions, DecisionPath, GapAnnInstance, GapCase, Route,
};
use polyattn::attention::{
    error_report, exact_attention, poly_attention, AttentionInstance, ExactSolver,
};
use polyattn::bench::{generate_instance, run_sweep, write_csv, write_json, SweepConfig};
use polyattn::error::Error;
use polyattn::linalg::{read_matrices, write_binary, write_text, DenseMatrix};

#[derive(Parser)]
#[command(name = "polyattn", version, about = "Softmax attention: exact, polynomial-method, and a Gap-ANN reduction")]
struct Cli {
    /// Worker threads for row-parallel kernels (default: all cores).
    #[arg(long, global = true, env = "POLYATTN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact attention on a file holding Q, K and V.
    AttnExact(MatrixIo),
    /// PolyAttention on a file holding Q, K and V; prints g, r and stage times.
    AttnPoly {
        #[command(flatten)]
        io: MatrixIo,
        #[command(flatten)]
        acc: Accuracy,
    },
    /// Random instance, both solvers, max error compared against eps.
    Verify {
        #[arg(long, env = "POLYATTN_N")]
        n: usize,
        #[arg(long, env = "POLYATTN_D")]
        d: usize,
        #[command(flatten)]
        acc: Accuracy,
        #[arg(long, env = "POLYATTN_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Timing sweep described by a TOML file.
    Bench {
        #[arg(long, env = "POLYATTN_CONFIG")]
        config: PathBuf,
        /// Emit a JSON array instead of CSV.
        #[arg(long, env = "POLYATTN_JSON")]
        json: bool,
        /// Output file (default: stdout).
        #[arg(long, env = "POLYATTN_OUT")]
        out: Option<PathBuf>,
    },
    /// Decide a Gap-ANN instance and compare with brute force.
    Ann {
        #[arg(long, env = "POLYATTN_POINTS")]
        points: PathBuf,
        #[arg(long, env = "POLYATTN_T")]
        t: usize,
        #[arg(long, env = "POLYATTN_EPS")]
        eps: f64,
        #[command(flatten)]
        route: RouteArgs,
    },
    /// Approximate closest-pair distance by binary search over t.
    AnnSearch {
        #[arg(long, env = "POLYATTN_POINTS")]
        points: PathBuf,
        #[arg(long, env = "POLYATTN_EPS")]
        eps: f64,
        #[command(flatten)]
        route: RouteArgs,
    },
}

#[derive(Args)]
struct MatrixIo {
    input: PathBuf,
    output: PathBuf,
    /// Write the output in the binary format.
    #[arg(long, env = "POLYATTN_BINARY")]
    binary: bool,
}

#[derive(Args)]
struct Accuracy {
    /// Entry bound B.
    #[arg(long = "B", env = "POLYATTN_B")]
    bound: f64,
    /// Additive accuracy eps_a.
    #[arg(long, env = "POLYATTN_EPS")]
    eps: f64,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long, env = "POLYATTN_FORCE_ATTENTION", conflicts_with = "force_brute")]
    force_attention: bool,
    #[arg(long, env = "POLYATTN_FORCE_BRUTE")]
    force_brute: bool,
    /// Multiplier on C_b² (default: largest keeping β ≤ 300).
    #[arg(long, env = "POLYATTN_SCALE")]
    scale: Option<f64>,
}

impl RouteArgs {
    fn options(&self) -> DecideOptions {
        DecideOptions {
            route: if self.force_attention {
                Route::ForceAttention
            } else if self.force_brute {
                Route::ForceBrute
            } else {
                Route::Auto
            },
            scale: self.scale.map_or(CbScale::Auto, CbScale::Fixed),
        }
    }
}

enum Failure {
    Usage(Error),
    Runtime(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Format { .. }
            | Error::Io(_)
            | Error::DataLength { .. }
            | Error::EmptyMatrix { .. }
            | Error::NonFinite { .. }
            | Error::NonBinary { .. }
            | Error::EntryBound { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_) => Failure::Usage(e),
            _ => Failure::Runtime(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_qkv(path: &Path) -> Result<[DenseMatrix; 3], Error> {
    let ms = read_matrices(open(path)?)?;
    let count = ms.len();
    <[DenseMatrix; 3]>::try_from(ms).map_err(|_| Error::Format {
        line: 1,
        message: format!("expected three matrices (Q, K, V), found {count}"),
    })
}

fn save(path: &Path, m: &DenseMatrix, binary: bool) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    if binary {
        write_binary(&mut w, m)?;
    } else {
        write_text(&mut w, m)?;
    }
    w.flush()?;
    Ok(())
}

fn load_points(path: &Path, t: usize, eps: f64) -> Result<GapAnnInstance, Error> {
    let (a, b) = read_points(open(path)?)?;
    GapAnnInstance::new(a, b, t, eps)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::AttnExact(io) => {
            let [q, k, v] = load_qkv(&io.input)?;
            let bound = [&q, &k, &v].iter().map(|m| m.inf_norm()).fold(f64::MIN_POSITIVE, f64::max);
            // eps_a is irrelevant to the exact solver
            let inst = AttentionInstance::new(q, k, v, bound, 0.05)?;
            let t = exact_attention(&inst);
            if t.data().iter().any(|x| !x.is_finite()) {
                return Err(Failure::Runtime(Error::InvalidParameter(
                    "scores too large for double precision".into(),
                )));
            }
            save(&io.output, &t, io.binary)?;
        }
        Command::AttnPoly { io, acc } => {
            let [q, k, v] = load_qkv(&io.input)?;
            let inst = AttentionInstance::new(q, k, v, acc.bound, acc.eps)?;
            let (t, report) = poly_attention(&inst)?;
            save(&io.output, &t, io.binary)?;
            let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
            let tm = report.timings;
            println!("g = {}  r = {}  entry_eps = {:e}", report.degree, report.rank, report.entry_eps);
            println!(
                "polynomial {:.3} ms  factors {:.3} ms  row_sums {:.3} ms  numerator {:.3} ms  normalize {:.3} ms  total {:.3} ms",
                ms(tm.polynomial),
                ms(tm.factors),
                ms(tm.row_sums),
                ms(tm.numerator),
                ms(tm.normalize),
                ms(tm.total())
            );
        }
        Command::Verify { n, d, acc, seed } => {
            let inst = generate_instance(n, d, acc.bound, acc.eps, seed)?;
            let exact = exact_attention(&inst);
            let (approx, report) = poly_attention(&inst)?;
            let err = error_report(&exact, &approx)?;
            let pass = err <= acc.eps;
            println!("g = {}  r = {}", report.degree, report.rank);
            println!("max error {err:e} vs eps {:e}: {}", acc.eps, if pass { "PASS" } else { "FAIL" });
            if !pass {
                return Err(Failure::Verification);
            }
        }
        Command::Bench { config, json, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", config.display()))))?;
            let cfg = SweepConfig::from_toml(&text)?;
            let records = run_sweep(&cfg)?;
            let sink: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::Io)?)),
                None => Box::new(io::stdout().lock()),
            };
            if json {
                write_json(sink, &records)?;
            } else {
                write_csv(sink, &records)?;
            }
        }
        Command::Ann { points, t, eps, route } => {
            let inst = load_points(&points, t, eps)?;
            let decision = gap_ann_decide(&inst, &route.options(), &ExactSolver)?;
            let truth = inst.classify();
            let path = match decision.path {
                DecisionPath::HammingBall => "hamming-ball",
                DecisionPath::Attention => "attention",
            };
            println!("path: {path}");
            if let Some(p) = &decision.params {
                println!(
                    "beta = {:.3}  scale = {:.4}  eps_a = {:e}  t~0 = {:e}",
                    p.beta, p.scale, p.eps_a, p.t_tilde0
                );
            }
            let label = |c: GapCase| match c {
                GapCase::Near => "near",
                GapCase::Far => "far",
            };
            let mut disagreements = 0;
            for (i, (got, want)) in decision.cases.iter().zip(&truth).enumerate() {
                let want_s = want.map_or("outside-promise", label);
                let mark = match want {
                    Some(w) if w != got => {
                        disagreements += 1;
                        "  MISMATCH"
                    }
                    _ => "",
                };
                println!("{i}\t{}\t{want_s}{mark}", label(*got));
            }
            println!("oracle agreement: {} mismatches", disagreements);
            if disagreements > 0 {
                return Err(Failure::Verification);
            }
        }
        Command::AnnSearch { points, eps, route } => {
            let inst = load_points(&points, 0, eps)?;
            let out = ann_binary_search(&inst, &route.options(), &ExactSolver)?;
            println!("t* = {}  ({} decide calls)", out.t_star, out.calls);
        }
    }
    Ok(())
}
