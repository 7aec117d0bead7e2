mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dyasim::{Distribution, HashFamily};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistArg {
    Gaussian,
    Cauchy,
    Rw,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Gaussian => Distribution::Gaussian,
            DistArg::Cauchy => Distribution::Cauchy,
            DistArg::Rw => Distribution::RandomWalk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HashArg {
    Fast,
    Poly2,
    Poly4,
}

impl From<HashArg> for HashFamily {
    fn from(h: HashArg) -> Self {
        match h {
            HashArg::Fast => HashFamily::FastMixer,
            HashArg::Poly2 => HashFamily::PolyKWise(2),
            HashArg::Poly4 => HashFamily::PolyKWise(4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Split,
    Marginal,
    Kwise,
    Ideal,
}

/// Dyadic simulation trees: range sums, streaming sketches, LSH and checks.
#[derive(Debug, Parser)]
#[command(name = "dyasim", version)]
pub struct Cli {
    /// Universe size U = 2^ulog. Defaults to 20, or 6 for `verify`.
    #[arg(long, global = true)]
    pub ulog: Option<u32>,

    /// Distribution of the underlying variables. `verify` runs all three
    /// when omitted.
    #[arg(long, global = true, value_enum)]
    pub dist: Option<DistArg>,

    /// Per-level hash family. Defaults to poly4 for `verify`, else fast.
    #[arg(long, global = true, value_enum)]
    pub hash: Option<HashArg>,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Sketch accumulators.
    #[arg(long, global = true, default_value_t = 400)]
    pub r: usize,

    /// LSH bucket width.
    #[arg(long = "W", global = true, default_value_t = 122.0)]
    pub width: f64,

    /// LSH dimension.
    #[arg(long, global = true, default_value_t = 1)]
    pub m: usize,

    /// Monte-Carlo trials. Defaults to 10000.
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Output format. Reports default to json, curves to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Time splits per distribution and range sums across universe sizes.
    Bench {
        /// Splits per distribution.
        #[arg(long, default_value_t = 1_000_000)]
        splits: u64,
        /// Smallest and largest universe_log of the scaling table.
        #[arg(long, default_value_t = 10)]
        scale_from: u32,
        #[arg(long, default_value_t = 30)]
        scale_to: u32,
        /// Random queries per scaling point.
        #[arg(long, default_value_t = 20_000)]
        queries: usize,
    },
    /// Run statistical checks; exit status 0 iff all pass.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// Feed a stream file (`a b delta` per line) to a sketch.
    Stream {
        file: PathBuf,
        /// Norm to estimate. Defaults to l1 for --dist cauchy, else l2.
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        /// Also write the sketch state here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Monte-Carlo collision probabilities of the L1 LSH.
    LshCollision {
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000,20000")]
        distances: Vec<u64>,
    },
    /// Print the dyadic cover of [a, b).
    Cover { a: u64, b: u64 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
