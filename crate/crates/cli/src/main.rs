//! `nnwalk`: analytic queries, reproducible simulation campaigns, and
//! statistical verification for transient nearest-neighbor walks.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{parse_config_file, Effective};
use nnwalk_core::analytics::AnalyticsError;
use nnwalk_core::model::ModelError;
use nnwalk_core::simulator::SimError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "nnwalk", version, about = "Transient nearest-neighbor walk toolkit")]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Root seed; replica k derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path: CSV written here, JSON record alongside as <out>.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key=value config file (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Relative series tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Series term budget.
    #[arg(long = "max-terms", global = true)]
    max_terms: Option<u64>,
    /// Escape-certificate bound for barrier sampling.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Replica count for sampling campaigns.
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "NNWALK_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Transience classification with evidence.
    Classify { model: String },
    /// Exact analytic queries over index grids.
    Analyze {
        model: String,
        #[command(subcommand)]
        query: AnalyzeQuery,
    },
    /// Simulation campaigns emitting sample CSV.
    Simulate {
        model: String,
        #[command(subcommand)]
        mode: SimMode,
    },
    /// End-to-end statistical verification suites.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
}

#[derive(Subcommand)]
enum AnalyzeQuery {
    /// Escape series D(m, n); n may be `inf`.
    D {
        /// Base sites: single value, `a,b,c` list, or `a..b` range.
        #[arg(long)]
        m: String,
        #[arg(long)]
        n: String,
    },
    /// Hitting probability p(a, b, c); c may be `inf`.
    Hit {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: String,
    },
    /// Local-time or upcrossing pmf at a site.
    Pmf {
        #[arg(long = "R")]
        r: u64,
        /// Counts: single value, list, or range like `1..5`.
        #[arg(long = "L")]
        l: String,
        /// Which law: `local` (total local time) or `up` (upcrossings).
        #[arg(long, default_value = "local")]
        law: String,
    },
    /// Upcrossing moment generating function at a site.
    Mgf {
        #[arg(long = "R")]
        r: u64,
        #[arg(long)]
        lam: f64,
    },
    /// Run-of-ones thresholds f, g (and f*, g* with --alpha).
    Thresholds {
        #[arg(long = "R")]
        r: String,
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "eps-run", default_value_t = 0.0)]
        eps_run: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
enum Sampler {
    /// Windowed construction with exact boundary laws.
    #[default]
    Window,
    /// Literal walk from zero to the eps-certified barrier.
    Barrier,
}

#[derive(Subcommand)]
enum SimMode {
    /// One path of n steps; emits checkpoint rows.
    Path {
        #[arg(long)]
        n: u64,
    },
    /// Total local-time samples at a site.
    Localtime {
        #[arg(long = "R")]
        r: u64,
        #[arg(long, value_enum, default_value_t = Sampler::Barrier)]
        sampler: Sampler,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
    /// Runs of local time 1 inside a window, one trajectory per replica.
    Scan {
        #[arg(long = "r-lo")]
        r_lo: u64,
        #[arg(long = "r-hi")]
        r_hi: u64,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
    /// Final positions X_n over replicas.
    Position {
        #[arg(long)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum VerifySuite {
    /// Geometric laws of xi and xi-up at a site.
    Geom {
        model: String,
        #[arg(long = "R")]
        r: u64,
        /// Sample count.
        #[arg(long)]
        n: u64,
        /// Override the hypothesized q for the xi fit (negative controls).
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        sampler: Sampler,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
    /// Exponential limits of xi/(2D) and xi-up/D.
    Exp {
        model: String,
        #[arg(long = "R")]
        r: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t)]
        sampler: Sampler,
        #[arg(long, default_value_t = 128)]
        window: u64,
    },
    /// Conditional mean of xi-up across neighboring sites.
    Condmean {
        model: String,
        #[arg(long = "R")]
        r: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t)]
        sampler: Sampler,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
    /// Submartingale mean trace of zeta(R).
    Submart {
        model: String,
        /// Comma-separated ascending site grid.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
    /// Iterated-logarithm ratio traces (soft bands, report only).
    Lil {
        model: String,
        /// Comma-separated ascending site grid (local-time kind).
        #[arg(long, default_value = "100,178,316,562,1000,1778,3162,5623,10000")]
        grid: String,
        /// `local` for xi(R) traces, `position` for X_n checkpoints.
        #[arg(long, default_value = "local")]
        kind: String,
        /// Steps per replica for the position kind.
        #[arg(long, default_value_t = 1_048_576)]
        n: u64,
        #[arg(long, default_value_t = 128)]
        window: u64,
    },
    /// Law of large numbers for the power family.
    Lln {
        model: String,
        #[arg(long)]
        n: u64,
    },
    /// Limit distribution of X_n/sqrt(n) for the lambda family.
    Limitdist {
        model: String,
        #[arg(long)]
        n: u64,
    },
    /// Run-of-ones frequencies against the exact product law.
    Ones {
        model: String,
        #[arg(long = "r-lo")]
        r_lo: u64,
        #[arg(long = "r-hi")]
        r_hi: u64,
        /// Lengths: single value, list, or range like `1..5`.
        #[arg(long, default_value = "1..5")]
        lengths: String,
        #[arg(long, default_value_t = 256)]
        window: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    };
    std::process::exit(code);
}

/// Maps error chains onto the documented exit codes: 2 for input errors,
/// 3 for failed convergence certification, 4 for everything else.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            return match m {
                ModelError::BadSpec(_) | ModelError::InvalidParam(_) => 2,
                _ => 4,
            };
        }
        if let Some(a) = cause.downcast_ref::<AnalyticsError>() {
            return match a {
                AnalyticsError::NonConvergent { .. } => 3,
                AnalyticsError::BadArgs(_) | AnalyticsError::Unsupported(_) => 2,
                _ => 4,
            };
        }
        if let Some(s) = cause.downcast_ref::<SimError>() {
            return match s {
                SimError::Analytics(AnalyticsError::NonConvergent { .. }) => 3,
                _ => 4,
            };
        }
    }
    4
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let file_cfg = match &cli.globals.config {
        Some(path) => parse_config_file(path)?,
        None => Default::default(),
    };
    let g = &cli.globals;
    let eff = Effective {
        seed: g.seed.or(file_cfg.seed).unwrap_or(0),
        out: g.out.clone().or(file_cfg.out),
        tol: g.tol.or(file_cfg.tol).unwrap_or(1e-6),
        max_terms: g.max_terms.or(file_cfg.max_terms).unwrap_or(100_000_000),
        eps: g.eps.or(file_cfg.eps).unwrap_or(1e-6),
        replicas: g.replicas.or(file_cfg.replicas).unwrap_or(1000),
        threads: g.threads.or(file_cfg.threads),
    };
    if let Some(t) = eff.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Classify { model } => commands::run_classify(&model, &eff),
        Command::Analyze { model, query } => commands::run_analyze(&model, &query, &eff),
        Command::Simulate { model, mode } => commands::run_simulate(&model, &mode, &eff),
        Command::Verify { suite } => commands::run_verify(&suite, &eff),
    }
}
