use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Scale-space analysis of transient 1-D signals under fractional-derivative kernels.
#[derive(Debug, Parser)]
#[command(name = "scalespace", version, about)]
pub struct Cli {
    /// Not accepted: every computation is deterministic.
    #[arg(long, global = true, hide = true)]
    pub seed: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a kernel and its transfer function.
    Kernel(KernelCmd),
    /// Synthesize the field ∂ₓᵏΨ over the σ ladder.
    Field(FieldCmd),
    /// Extract and classify the level set ∂ₓᵏΨ = c.
    Contours(ContoursCmd),
    /// Build the interval tree of a level set and its signatures.
    Tree(TreeCmd),
    /// Scan p (or c) for bifurcations of the level set.
    Scan(ScanCmd),
    /// Handle-count tables over a grid of levels.
    Invariants(InvariantsCmd),
    /// Compare the tree (and optionally invariant) signatures of two signals.
    Compare(CompareCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    C,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SignalOpts {
    /// Signal file: CSV with columns x,value or JSON {x0, dx, samples}.
    #[arg(long)]
    pub signal: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Zero-padding factor applied before rounding up to a power of two.
    #[arg(long, default_value_t = 2)]
    pub pad: usize,
    /// Explicit lattice size (power of two, at least the padded length).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LadderOpts {
    /// Smallest nonzero σ; defaults to the sample spacing.
    #[arg(long)]
    pub sigma_min: Option<f64>,
    /// Ratio between consecutive σ rows.
    #[arg(long, default_value_t = 2f64.powf(0.125))]
    pub sigma_ratio: f64,
    /// Number of σ rows, including σ = 0.
    #[arg(long, default_value_t = 64)]
    pub sigma_count: usize,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct KernelOpts {
    /// Weight of the odd kernel part.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Weight of the even kernel part.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Fractional order.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutOpts {
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Scale ρ = 1/σ.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Kernel samples cover [-x_max, x_max].
    #[arg(long, default_value_t = 10.0)]
    pub x_max: f64,
    /// Transfer samples cover [-omega_max, omega_max].
    #[arg(long, default_value_t = 10.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldCmd {
    #[command(flatten)]
    pub signal: SignalOpts,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Spatial derivative order.
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContoursCmd {
    /// Signal to analyse; required unless --field is given.
    #[arg(long, required_unless_present = "field")]
    pub signal: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 2)]
    pub pad: usize,
    #[arg(long)]
    pub n: Option<usize>,
    /// Field CSV written by `field`; its JSON sidecar must sit next to it.
    #[arg(long, conflicts_with = "signal")]
    pub field: Option<PathBuf>,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Contour level c.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub level: f64,
    /// Orient contours, sample the energy along them and run the genericity check.
    #[arg(long)]
    pub analyze: bool,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TreeCmd {
    #[command(flatten)]
    pub signal: SignalOpts,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub level: f64,
    /// Drop components cut by the analysis window instead of failing.
    #[arg(long)]
    pub tolerate_truncated: bool,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanOpts {
    /// Scanned parameter.
    #[arg(long, value_enum, default_value_t = Axis::P)]
    pub axis: Axis,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 32)]
    pub slices: usize,
    /// Bisection width for event refinement.
    #[arg(long, default_value_t = 1e-3)]
    pub tol_param: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanCmd {
    #[command(flatten)]
    pub signal: SignalOpts,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    /// Level for p scans; ignored on the c axis.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub level: f64,
    #[command(flatten)]
    pub scan: ScanOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InvariantsCmd {
    #[command(flatten)]
    pub signal: SignalOpts,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    /// Comma-separated levels; more than one gives the three-index table.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub levels: Vec<f64>,
    /// p range.
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 32)]
    pub slices: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol_param: f64,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareCmd {
    #[command(flatten)]
    pub signal: SignalOpts,
    /// Second signal, read with the same format options.
    #[arg(long)]
    pub other: PathBuf,
    #[command(flatten)]
    pub ladder: LadderOpts,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub level: f64,
    /// Also compare handle-count tables of a p scan over [lo, hi] at `--scan-level`.
    #[arg(long, requires_all = ["lo", "hi"])]
    pub invariants: bool,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub scan_level: f64,
    #[arg(long, default_value_t = 32)]
    pub slices: usize,
    #[command(flatten)]
    pub out: OutOpts,
}
