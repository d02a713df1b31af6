use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "neurocap",
    version,
    about = "Channel capacity and optimal tuning curves for gamma ISI neuron models"
)]
pub struct Cli {
    /// JSON file supplying values for any flag of the subcommand
    /// (keys are the long flag names); explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for solver-internal parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Shannon primitives on finite alphabets.
    It {
        #[command(subcommand)]
        op: ItOp,
    },
    /// Solve for the capacity and a capacity-achieving input ensemble.
    Capacity(CapacityArgs),
    /// Build an optimal tuning curve from a certified solution.
    Tuning(TuningArgs),
    /// MAP hard-decoder regions and the induced-channel rate.
    Decode(DecodeArgs),
    /// Monte-Carlo cross-check of a solution's mutual information.
    McCheck(McCheckArgs),
}

#[derive(Subcommand)]
pub enum ItOp {
    /// Entropy of a PMF, bits per symbol.
    Entropy {
        /// PMF file (.json or .csv).
        #[arg(long, value_name = "FILE")]
        pmf: Option<PathBuf>,
        /// Inline probabilities, e.g. 0.5,0.5.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        probs: Option<Vec<f64>>,
        /// Labels for inline probabilities (defaults to indices).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        /// Optional JSON report path.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Mutual information of a joint distribution, bits.
    Mi {
        /// Joint distribution JSON.
        #[arg(long, value_name = "FILE")]
        joint: Option<PathBuf>,
        /// Channel matrix (.json or .csv); combined with --input.
        #[arg(long, value_name = "FILE")]
        channel: Option<PathBuf>,
        /// Input PMF driving --channel.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Kullback-Leibler divergence D(p||q), bits.
    Kl {
        #[arg(long, value_name = "FILE")]
        p: PathBuf,
        #[arg(long, value_name = "FILE")]
        q: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Binary symmetric channel capacity 1 - H(p), bits per use.
    Bsc {
        /// Flip probability.
        #[arg(long)]
        p: f64,
        /// Also report I(X;Y) for the input law P(X=1) = q.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Blahut-Arimoto capacity of a channel matrix.
    Ba {
        #[arg(long, value_name = "FILE")]
        channel: PathBuf,
        /// Certified bracket width, bits.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iter: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodingArg {
    Temporal,
    Rate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    /// Free support positions, consolidated under the KKT certificate.
    Particle,
    /// Input restricted to a uniform grid; the brute-force reference.
    Grid,
}

#[derive(Args)]
pub struct CapacityArgs {
    /// Output convention: the ISI itself or the windowed spike count.
    #[arg(value_enum)]
    pub coding: CodingArg,
    /// Gamma shape.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Lower mean-ISI bound, seconds [default: 0.003].
    #[arg(long)]
    pub a0: Option<f64>,
    /// Upper mean-ISI bound, seconds [default: 0.03].
    #[arg(long)]
    pub b0: Option<f64>,
    /// Counting window, seconds; rate coding only [default: 0.1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Count truncation tail mass [default: 1e-12].
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Solver tolerance and certificate slack, bits [default: 1e-4].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Certificate probe-grid size [default: 2001].
    #[arg(long)]
    pub probe_n: Option<usize>,
    /// Support seed size for the particle solver [default: 101].
    #[arg(long)]
    pub init_grid: Option<usize>,
    /// Grid size for the grid solver [default: 201].
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Solution JSON path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// KKT probe curve CSV path.
    #[arg(long, value_name = "FILE")]
    pub kkt_csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct TuningArgs {
    /// Certified solution JSON produced by `capacity`.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
    /// Stimulus spec: uniform:LO,HI | beta:A,B[:LO,HI] | pwl:FILE.json.
    #[arg(long)]
    pub stimulus: Option<String>,
    /// Direction of the mean response in the stimulus [default: increasing].
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Tuning curve JSON path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Tuning curve CSV path (x_break, level_theta, mean_response).
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Plot-ready staircase CSV path.
    #[arg(long, value_name = "FILE")]
    pub staircase_csv: Option<PathBuf>,
    /// Staircase sample count [default: 400].
    #[arg(long)]
    pub staircase_n: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Increasing,
    Decreasing,
}

#[derive(Args)]
pub struct DecodeArgs {
    /// Solution JSON produced by `capacity`.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
    /// Decoder partition JSON path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct McCheckArgs {
    /// Solution JSON produced by `capacity`.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
    /// Sample count [default: 1000000].
    #[arg(long)]
    pub samples: Option<usize>,
    /// RNG seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
}
