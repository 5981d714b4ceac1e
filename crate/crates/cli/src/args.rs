use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "xjunction", version, about = "Ion shuttling planner and analysis tools for an X-junction trap")]
pub struct Cli {
    /// Primitive table (JSON); defaults to $XJUNCTION_TABLE1, then the
    /// built-in table.
    #[arg(long, global = true, value_name = "FILE")]
    pub table1: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a transport sequence.
    Plan(PlanArgs),
    /// Run the excitation and phase ledger over a sequence.
    Simulate(SimulateArgs),
    /// Fit sideband-flopping curves jointly.
    Fit(FitArgs),
    /// Synthesize a sideband-flopping curve.
    Synth(SynthArgs),
    /// Solve electrode voltages and ramps.
    Waveform(WaveformArgs),
    /// Inspect the trap graph.
    Topology(TopologyArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(subcommand)]
    pub kind: PlanKind,
    /// Write the sequence JSON here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlanKind {
    /// Swap two ions held together in S through the junction.
    Reorder {
        /// Exactly two ion labels, e.g. `a,b`.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        ions: Vec<char>,
    },
    /// Individual addressing and detection of one ion of a separated pair.
    Address {
        #[arg(long)]
        target: char,
        /// The pair as held in A and B.
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        ions: Vec<char>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Sequence JSON as written by `plan`.
    #[arg(long, required_unless_present_any = ["row", "check_table1"])]
    pub seq: Option<PathBuf>,
    /// Simulate a table row's test sequence instead.
    #[arg(long, conflicts_with = "seq")]
    pub row: Option<u32>,
    /// Full ledger configuration (JSON); replaces the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Phase sources (JSON).
    #[arg(long)]
    pub phases: Option<PathBuf>,
    /// Step already included in the baseline: `ID` or `ID:rev`.
    #[arg(long = "cover")]
    pub cover: Vec<String>,
    /// Idle heating, quanta/s.
    #[arg(long, default_value_t = 0.0)]
    pub idle_heating: f64,
    /// Extra quanta at each step boundary: `VALUE` or `VALUE:SIGMA`.
    #[arg(long)]
    pub penalty: Option<String>,
    /// Also recompute every table row.
    #[arg(long)]
    pub check_table1: bool,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-ion, per-mode summary CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    Thermal,
    Coherent,
    /// Fit both and report which describes the data better.
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV (with its JSON sidecar); repeat for a joint fit.
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    /// Carrier Rabi frequency Ω/2π starting value, kHz (estimated from the
    /// data if omitted).
    #[arg(long)]
    pub omega_khz: Option<f64>,
    /// Decay rate starting value, 1/s.
    #[arg(long, default_value_t = 1000.0)]
    pub gamma: f64,
    /// Starting n̄: `MODE=VALUE`, repeatable (estimated if omitted).
    #[arg(long)]
    pub nbar: Vec<String>,
    /// Lamb-Dicke parameter `MODE=VALUE`; overrides the sidecars.
    #[arg(long)]
    pub eta: Vec<String>,
    /// Free parameters (`omega`, `gamma`, `nbar:MODE`, `eta:MODE`);
    /// defaults to omega, gamma and every n̄.
    #[arg(long, value_delimiter = ',')]
    pub free: Vec<String>,
    #[arg(long, value_enum, default_value_t = DistributionArg::Thermal)]
    pub distribution: DistributionArg,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Write the fit report JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residual CSV (dataset, t_us, population, model, residual).
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrystalArg {
    OneIonOneMode,
    OneIonTwoModes,
    TwoIonsSameSpecies,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = CrystalArg::OneIonOneMode)]
    pub crystal: CrystalArg,
    /// Probed mode.
    #[arg(long, default_value = "axial")]
    pub mode: String,
    /// Sideband order: 1 blue, -1 red.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub kappa: i32,
    /// n̄: a bare value applies to the probed mode; `MODE=VALUE` repeatable.
    #[arg(long, required = true)]
    pub nbar: Vec<String>,
    /// η: a bare value applies to the probed mode; `MODE=VALUE` repeatable.
    #[arg(long, required = true)]
    pub eta: Vec<String>,
    /// Ω/2π, kHz.
    #[arg(long, default_value_t = 100.0)]
    pub omega_khz: f64,
    /// 1/s.
    #[arg(long, default_value_t = 2000.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_max_us: f64,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, default_value_t = 250)]
    pub shots: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Exact model values instead of binomial samples.
    #[arg(long)]
    pub analytic: bool,
    #[arg(long)]
    pub coherent: bool,
    /// Output CSV; the sidecar goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WaveformArgs {
    #[command(subcommand)]
    pub kind: WaveformKind,
}

#[derive(Debug, Args)]
pub struct RampArgs {
    /// Ramp duration, e.g. `310us`, `0.31ms`, `3.1e-4s`.
    #[arg(long, default_value = "310us")]
    pub duration: String,
    /// Solve points along the schedule.
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    /// Samples/s.
    #[arg(long, default_value_t = 5e7)]
    pub rate: f64,
    #[arg(long, default_value_t = false)]
    pub sine_squared: bool,
    /// |V| limit per electrode.
    #[arg(long, default_value_t = 10.0)]
    pub bound: f64,
    /// Electrode basis JSON (defaults to the synthetic X-junction).
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Low-pass cutoff, Hz; enables pre-compensation.
    #[arg(long)]
    pub filter_cutoff: Option<f64>,
    /// Output CSV; the JSON header goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum WaveformKind {
    /// Split one well in S into two.
    Separate {
        #[command(flatten)]
        ramp: RampArgs,
        /// Single-well frequency, Hz.
        #[arg(long, default_value_t = 3.6e6)]
        from_freq: f64,
        /// Frequency of each final well, Hz.
        #[arg(long, default_value_t = 3.6e6)]
        to_freq: f64,
        /// Final well separation, µm.
        #[arg(long, default_value_t = 340.0)]
        separation: f64,
        /// Axial bias field gradient, V/µm.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        bias: f64,
        /// Relative weight of the satellite wells.
        #[arg(long, default_value_t = 1.0)]
        satellite_weight: f64,
    },
    /// Rotate the weak axis of the well at the junction.
    Rotate {
        #[command(flatten)]
        ramp: RampArgs,
        #[arg(long, default_value_t = 0.0)]
        from_deg: f64,
        #[arg(long, default_value_t = 90.0)]
        to_deg: f64,
        #[arg(long, default_value_t = 2.0e6)]
        weak_freq: f64,
        #[arg(long, default_value_t = 4.0e6)]
        transverse_freq: f64,
        /// Flag steps where the mode gap drops below this, Hz.
        #[arg(long, default_value_t = 0.5e6)]
        gap_threshold: f64,
    },
    /// Static voltages for one well.
    Solve {
        /// `X,Z` in µm.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, -710.0])]
        position: Vec<f64>,
        #[arg(long, default_value_t = 3.6e6)]
        freq: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        angle_deg: f64,
        #[arg(long)]
        transverse_freq: Option<f64>,
        /// ∂⁴ along the weak axis, V/µm⁴.
        #[arg(long, allow_negative_numbers = true)]
        quartic: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        bound: f64,
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Write the solution JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in basis as JSON.
    Basis,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    #[command(subcommand)]
    pub kind: TopologyKind,
}

#[derive(Debug, Subcommand)]
pub enum TopologyKind {
    /// The default trap graph as JSON.
    Show,
    /// Shortest path between two zones.
    Path { from: String, to: String },
    /// Two-ion axial modes for a single-ion frequency.
    Modes {
        #[arg(long, default_value_t = 3.6)]
        freq_mhz: f64,
    },
}
