use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dicke_battery::analytic::Branch;
use dicke_battery::battery::SweepMode;
use dicke_battery::dynamics::SystemKind;

#[derive(Debug, Parser)]
#[command(
    name = "dicke",
    version,
    about = "Extended Dicke model quantum battery"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON file with `model` and `run` sections; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output if omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Integrator tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Cavity frequency
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Two-level splitting
    #[arg(long, global = true)]
    pub omega0: Option<f64>,
    /// Light-matter coupling
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Interaction parameter (-1 is the Dicke model)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Number of two-level systems (even)
    #[arg(long = "N", global = true)]
    pub n: Option<u64>,
    /// Jacobi modulus, or a comma-separated list
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub k: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full, reduced or (Q, phi) equations of motion
    Simulate(SimulateArgs),
    /// Bound luminosity solution, optionally compared with the ODE
    Analytic(AnalyticArgs),
    /// Effective double-well potential and C levels
    Potential(SamplesArgs),
    /// Battery charging curves E_B(t), P(t)
    Battery(SamplesArgs),
    /// Power-law scaling of charging power and time with N
    Scaling(ScalingArgs),
    /// Run the self-check suite
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub system: Option<SystemArg>,
    /// Explicit initial state: q,p,sx,sy,sz | sx,sy,sz | Q,phi
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<f64>>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt_out: Option<f64>,
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    /// Sample intervals over one period
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also integrate the reduced system and report the deviation
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
}

#[derive(Debug, Args)]
pub struct SamplesArgs {
    /// Sample intervals per curve
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Comma-separated even values of N
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Same as --format json
    #[arg(long)]
    pub json: bool,
    /// Shift every solved Omega by this amount before the residual check
    #[arg(long, hide = true, allow_negative_numbers = true)]
    pub perturb_omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemArg {
    Full,
    Reduced,
    Qphi,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Full => SystemKind::Full,
            SystemArg::Reduced => SystemKind::Reduced,
            SystemArg::Qphi => SystemKind::QPhi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    #[value(name = "fixed_lambda", alias = "fixed-lambda")]
    FixedLambda,
    #[value(name = "fixed_lambda_ratio", alias = "fixed-lambda-ratio")]
    FixedLambdaRatio,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixedLambda => SweepMode::FixedLambda,
            ModeArg::FixedLambdaRatio => SweepMode::FixedLambdaRatio,
        }
    }
}
