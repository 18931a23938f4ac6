mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "wedge", version, about = "Reflected Brownian motion in the three-quarter plane")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Parameter file `{"mu":[..],"sigma":[..],"rho":..,"refl":[..]}`
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Master seed for the Monte Carlo streams
    #[arg(long, global = true, default_value_t = 20_240_601)]
    pub seed: u64,
    /// Directory for output files and the run manifest
    #[arg(long, global = true, env = "WEDGE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Single-line JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,
}

/// Simulation settings for commands that need an ensemble.
#[derive(Args, Debug, Clone)]
pub struct Mc {
    /// Time step
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Length of each path, burn-in included
    #[arg(long, default_value_t = 2e4)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e3)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 8)]
    pub replicas: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate and describe a parameter set
    Params {
        #[command(subcommand)]
        cmd: ParamsCmd,
    },
    /// Kernel roots, branch points and hyperbolas
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Simulate one trajectory to CSV or raw binary
    Simulate(SimulateArgs),
    /// Monte Carlo estimates of transforms and densities
    Estimate {
        #[command(subcommand)]
        cmd: EstimateCmd,
    },
    /// Residual checks of the functional equations
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
    /// Boundary value problem on the cut
    Bvp {
        #[command(subcommand)]
        cmd: BvpCmd,
    },
    /// The symmetric case
    Symmetric {
        #[command(subcommand)]
        cmd: SymmetricCmd,
    },
    /// Plot data as CSV files in the output directory
    Figure(FigureArgs),
}

#[derive(Subcommand, Debug)]
pub enum ParamsCmd {
    /// Recurrence conditions and derived quantities
    Check,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KernelArg {
    U,
    V,
    Sym,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariableArg {
    /// Solve for `p` given `q`
    P,
    /// Solve for `q` given `p`
    Q,
}

#[derive(Subcommand, Debug)]
pub enum KernelCmd {
    /// Branch points of a root family
    BranchPoints {
        #[arg(long, value_enum, default_value = "u")]
        kernel: KernelArg,
        #[arg(long, value_enum, default_value = "p")]
        variable: VariableArg,
    },
    /// Both roots on a rectangular grid of arguments, as CSV
    Eval {
        #[arg(long, value_enum, default_value = "u")]
        kernel: KernelArg,
        #[arg(long, value_enum, default_value = "p")]
        variable: VariableArg,
        /// Grid `re_min,re_max,im_min,im_max,n`
        #[arg(long, default_value = "-3,3,-3,3,61")]
        grid: String,
        #[arg(long, default_value = "kernel-eval.csv")]
        out: PathBuf,
    },
    /// The hyperbola traced by the first root over the imaginary axis
    Hyperbola {
        #[arg(long, value_enum, default_value = "u")]
        kernel: KernelArg,
    },
    /// The four compositions `P_i ∘ Q_j` at a point
    Automorphy {
        /// Complex point such as `-1+0.5i`
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrajFormat {
    Csv,
    /// Little-endian f64 rows `t, z1, z2, dL1, dL2`
    Raw,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Start point `z1,z2`
    #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
    pub start: String,
    #[arg(long, default_value = "path.csv")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TrajFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Target {
    #[value(name = "L1")]
    L1,
    #[value(name = "L2")]
    L2,
    #[value(name = "m")]
    M,
    #[value(name = "n")]
    N,
    #[value(name = "ell1")]
    Ell1,
    #[value(name = "ell2")]
    Ell2,
}

#[derive(Subcommand, Debug)]
pub enum EstimateCmd {
    /// A Laplace transform at one point
    Laplace {
        #[arg(long, value_enum)]
        target: Target,
        /// `x,y` for L1 and L2, `x` for the one-variable transforms
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[command(flatten)]
        mc: Mc,
    },
    /// Histogram of the stationary density
    Density {
        #[arg(long, default_value = "density.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 60)]
        cells: usize,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Equation {
    Sum,
    S1,
    S2,
}

#[derive(Subcommand, Debug)]
pub enum CheckCmd {
    /// Functional equation residuals at a set of points
    Feq {
        /// A count of random points, or a JSON file of `[x, y]` pairs
        #[arg(long, default_value = "20")]
        points: String,
        /// Shorthand for `--equation sum`
        #[arg(long)]
        sum: bool,
        #[arg(long, value_enum, default_value = "sum")]
        equation: Equation,
        /// Report file, JSON array of residual reports
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Subcommand, Debug)]
pub enum BvpCmd {
    /// The jump matrix at a cut point
    Gmatrix {
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
    },
    /// The boundary condition at cut points inside the estimable region
    Check {
        #[arg(long, default_value_t = 10)]
        cut_points: usize,
        #[arg(long, default_value_t = 0.25)]
        spacing: f64,
        #[command(flatten)]
        mc: Mc,
    },
    /// Nyström solution of the Fredholm equation on the unit circle
    Fredholm {
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value = "phi.csv")]
        out: PathBuf,
        /// Value at infinity `a,b` (complex); estimated by simulation if absent
        #[arg(long, allow_hyphen_values = true)]
        phi_inf: Option<String>,
        /// Keep the solution when the interior test suggests a pole
        #[arg(long)]
        allow_poles: bool,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Subcommand, Debug)]
pub enum SymmetricCmd {
    /// Which of the known solvable classes the parameters belong to
    Classify,
    /// The scalar boundary condition at points of the half-plane contour
    BvpCheck {
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[command(flatten)]
        mc: Mc,
    },
    /// The closed-form density on a Cartesian grid
    Density {
        #[arg(long, default_value = "remarkable-density.csv")]
        grid: PathBuf,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 100)]
        cells: usize,
    },
    /// Adjoint-relation residual and normalization of the closed form
    VerifyRemarkable {
        /// Also compare with a simulated histogram
        #[arg(long)]
        mc_check: bool,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum FigureId {
    BranchCurves,
    Hyperbolas,
    DensityGrid,
    RemarkableDensity,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub id: FigureId,
    #[command(flatten)]
    pub mc: Mc,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(commands::run(cli, argv))
}
