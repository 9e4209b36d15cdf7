use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nzdd_core::build::{compress, ElementOrder};
use nzdd_core::erlpboost::{self, ErlpOptions, ErlpRecord};
use nzdd_core::extform::{compress_binary, extend_integer, IntMode};
use nzdd_core::lp::{solve_lp, LpStatus};
use nzdd_core::lpfile::{emit_lp, parse_lp};
use nzdd_core::softmargin::{build_primal, column_generation, SampleNzdd};
use nzdd_core::{gen_mip, gen_rofk, read_libsvm, write_libsvm};
use nzdd_core::{ConstraintSystem, Error, Nzdd, Result, SubsetFamily};

#[derive(Parser)]
#[command(name = "nzdd", version, about = "Compress constraint rows into decision diagrams and solve over them")]
struct Cli {
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Frequency,
    Natural,
}

impl From<Order> for ElementOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Frequency => ElementOrder::Frequency,
            Order::Natural => ElementOrder::Natural,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IntModeArg {
    Binary,
    Sigma,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    /// Write the compressed LP and solve it with the built-in simplex.
    ExportLp,
    /// Column generation.
    Cg,
    /// Entropy regularised LPBoost.
    Erlp,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a set family (one set per line) into a reduced diagram.
    Compress {
        family: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "frequency")]
        order: Order,
    },
    /// Print size statistics of a diagram.
    Stats { nzdd: PathBuf },
    /// Rewrite a constraint system (native text or .lp) as its extended
    /// formulation in LP format.
    Extend {
        system: PathBuf,
        /// Required for integer coefficients; 0/1 systems need none.
        #[arg(long, value_enum)]
        int_mode: Option<IntModeArg>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "frequency")]
        order: Order,
    },
    /// Soft margin optimisation on a libsvm sample.
    Softmargin {
        libsvm: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Features above this value count as set.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Overrides the default regularisation of `erlp`.
        #[arg(long)]
        eta: Option<f64>,
        /// Per-round TSV log of `erlp`.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Solution file; with `export-lp` the LP file (default stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthetic instances.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Covering MIP with k ones per row.
    Mip {
        #[arg(long, default_value_t = 25)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 12)]
        l: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample labelled by "at least r of the first k features".
    Rofk {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        r: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => at(p, fs::write(p, text).map_err(Error::from))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Names the file in I/O errors.
fn at<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{msg} (in {})", path.display()),
        },
        other => other,
    })
}

fn read_system(path: &Path) -> Result<ConstraintSystem> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("lp")) {
        parse_lp(&text)
    } else {
        ConstraintSystem::parse(&text)
    }
}

fn solution_text(rho: f64, bias: f64, w: &[f64], objective: f64, iterations: Option<usize>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "objective {objective}");
    let _ = writeln!(out, "rho {rho}");
    let _ = writeln!(out, "bias {bias}");
    if let Some(t) = iterations {
        let _ = writeln!(out, "iterations {t}");
    }
    out.push('w');
    for (j, &v) in w.iter().enumerate() {
        if v.abs() > 1e-12 {
            let _ = write!(out, " {}:{v}", j + 1);
        }
    }
    out.push('\n');
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Compress { family, output, order } => {
            let fam = at(&family, SubsetFamily::read(&family))?;
            let (g, stats) = compress(&fam, &order.into())?;
            eprintln!(
                "{} sets, total size {} -> {} nodes, {} edges, label size {}",
                fam.len(),
                fam.total_size(),
                stats.num_nodes,
                stats.num_edges,
                stats.total_label_size
            );
            emit(output.as_deref(), &g.to_text())
        }
        Cmd::Stats { nzdd } => {
            let g = at(&nzdd, Nzdd::read(&nzdd))?;
            let s = g.stats();
            let report = g.validate(nzdd_core::nzdd::DEFAULT_PATH_CAP);
            let mut out = String::new();
            let _ = writeln!(out, "nodes\t{}", s.num_nodes);
            let _ = writeln!(out, "edges\t{}", s.num_edges);
            let _ = writeln!(out, "label_size\t{}", s.total_label_size);
            let _ = writeln!(out, "depth\t{}", s.depth);
            let _ = writeln!(out, "paths\t{}", s.num_paths);
            let valid = if !report.is_ok() {
                "no"
            } else if report.is_verified() {
                "yes"
            } else {
                "unchecked"
            };
            let _ = writeln!(out, "valid\t{valid}");
            emit(None, &out)
        }
        Cmd::Extend { system, int_mode, output, order } => {
            let sys = at(&system, read_system(&system))?;
            let order: ElementOrder = order.into();
            let (ext, stats) = match int_mode {
                None => compress_binary(&sys, &order)?,
                Some(IntModeArg::Binary) => extend_integer(&sys, IntMode::BinaryEncoding, &order)?,
                Some(IntModeArg::Sigma) => extend_integer(&sys, IntMode::Sigma, &order)?,
            };
            eprintln!(
                "{} rows -> {} rows ({} edge rows), {} -> {} variables",
                sys.num_rows(),
                ext.system.num_rows(),
                stats.num_edges,
                sys.num_vars(),
                ext.system.num_vars()
            );
            emit(Some(&output), &emit_lp(&ext.system))
        }
        Cmd::Softmargin { libsvm, nu, algo, eps, threshold, eta, log, output } => {
            let sample = at(&libsvm, read_libsvm(&libsvm, threshold))?;
            let sn = SampleNzdd::build(&sample, &ElementOrder::Frequency)?;
            eprintln!(
                "{} instances, {} features, total size {} -> {} edges",
                sample.len(),
                sample.n(),
                sample.total_size(),
                sn.num_edges()
            );
            match algo {
                Algo::ExportLp => {
                    let (sys, lay) = build_primal(&sn, nu)?;
                    emit(output.as_deref(), &emit_lp(&sys))?;
                    let sol = solve_lp(&sys)?;
                    if sol.status != LpStatus::Optimal {
                        return Err(Error::Numerical(format!("simplex ended with {:?}", sol.status)));
                    }
                    let w = &sol.x[lay.w..=lay.w + sn.n];
                    let text = solution_text(sol.x[lay.rho], -w[sn.n], &w[..sn.n], sol.value, None);
                    if output.is_some() {
                        emit(None, &text)
                    } else {
                        eprint!("{text}");
                        Ok(())
                    }
                }
                Algo::Cg => {
                    let res = column_generation(&sn, nu, eps)?;
                    let s = &res.solution;
                    let text = solution_text(s.rho, s.bias(), &s.w[..sn.n], s.objective, Some(res.iterations));
                    emit(output.as_deref(), &text)
                }
                Algo::Erlp => {
                    let res = erlpboost::run(&sn, nu, eps, &ErlpOptions { eta, ..Default::default() })?;
                    if let Some(path) = log {
                        let mut tsv = String::from(ErlpRecord::TSV_HEADER);
                        tsv.push('\n');
                        for r in &res.records {
                            tsv.push_str(&r.tsv());
                            tsv.push('\n');
                        }
                        fs::write(path, tsv)?;
                    }
                    let s = &res.solution;
                    let text = solution_text(s.rho, s.bias(), &s.w[..sn.n], s.objective, Some(res.iterations));
                    emit(output.as_deref(), &text)
                }
            }
        }
        Cmd::Gen { kind } => match kind {
            GenKind::Mip { n, k, l, m, seed, output } => {
                emit(output.as_deref(), &gen_mip(n, k, l, m, seed)?.to_text())
            }
            GenKind::Rofk { n, k, r, m, seed, output } => {
                emit(output.as_deref(), &write_libsvm(&gen_rofk(n, k, r, m, seed)?))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::new().parse_filters(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
