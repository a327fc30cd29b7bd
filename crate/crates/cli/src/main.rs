//! `birat`: command-line front end to the `birat` library.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 file or parse
//! error, 3 invalid map, 4 resource limit, 5 statistical insufficiency,
//! 6 numerical failure (indeterminacy proximity, degenerate input) or a
//! failed `verify` table.

// `!(x > 0.0)` guards reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod run;
mod verify;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use birat::Error;

#[derive(Parser, Debug)]
#[command(name = "birat", version, about = "Dynamics of birational maps of projective space")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command. Flags override the config file, which
/// overrides `BIRAT_SEED` (seed only), which overrides the built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Built-in map: henon, cremona, power, shiftlike3, linear.
    #[arg(long, global = true, conflicts_with = "map")]
    pub zoo: Option<String>,
    /// Map file (JSON).
    #[arg(long, global = true)]
    pub map: Option<std::path::PathBuf>,
    /// Degree parameter of the zoo family.
    #[arg(long, global = true)]
    pub d: Option<u32>,
    /// Jacobian parameter of henon / shiftlike3, e.g. 0.3 or 3/10.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Coefficients of the polynomial p of henon / shiftlike3, leading
    /// first, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub poly: Option<String>,
    /// Matrix of the linear family: rows separated by ';', entries by ','.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Region configuration (JSON); defaults to the bundled one, if any.
    #[arg(long, global = true)]
    pub regions: Option<std::path::PathBuf>,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; default `birat-out/<command>`.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Green function truncation depth N.
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Grid resolution per real axis.
    #[arg(long, global = true)]
    pub res: Option<usize>,
    /// Chart box `lo,hi`, applied to every real axis.
    #[arg(long = "box", global = true, allow_hyphen_values = true)]
    pub bbox: Option<String>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Relative indeterminacy-proximity threshold.
    #[arg(long, global = true)]
    pub eps_ind: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact degrees of the reduced iterates.
    Degrees {
        #[arg(long, default_value_t = 6)]
        n: u32,
    },
    /// Algebraic stability: deg f^n = d^n for n <= N.
    Stability {
        #[arg(long, default_value_t = 5)]
        n: u32,
    },
    /// Indeterminacy points of f^n (or of the inverse), found numerically and
    /// confirmed exactly where a small rational lift exists.
    Indeterminacy {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        inverse: bool,
    },
    /// Sampled check of the regularity conditions.
    CheckRegular {
        /// Use the two-sided roles (V±, U±) even when V, U are present.
        #[arg(long)]
        two_sided: bool,
    },
    /// Green function at a point, with the functional-equation residual.
    Green {
        /// Lift as comma-separated complex numbers, e.g. `1000,0,1`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        inverse: bool,
    },
    /// Potential on the real slice (Re z1, Re z2) of the last chart.
    GreenGrid {
        #[arg(long)]
        inverse: bool,
        /// `relative` (G - log|z|) or `chart` (G).
        #[arg(long, default_value = "relative")]
        kind: String,
    },
    /// Convergence of pulled-back hyperplane potentials on basin points.
    PullbackConverge {
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        nmin: u32,
        #[arg(long, default_value_t = 8)]
        nmax: u32,
        /// Linear form, comma-separated complex coefficients.
        #[arg(long, allow_hyphen_values = true)]
        form: Option<String>,
        /// Region whose entrance marks basin membership.
        #[arg(long, default_value = "V-")]
        basin_role: String,
        #[arg(long, default_value_t = 20)]
        max_steps: u32,
    },
    /// Equilibrium measure T+ ∧ T- on a chart box of P^2.
    Measure {
        /// Binomial smoothing passes per axis.
        #[arg(long)]
        smoothing: Option<usize>,
        /// Skip cells below this mass in the CSV.
        #[arg(long, default_value_t = 1e-9)]
        csv_min_mass: f64,
    },
    /// Invariance of the sampled measure under the map.
    Invariance {
        /// Observable label, or `all` for the built-in set.
        #[arg(long, default_value = "all")]
        observable: String,
        #[arg(long)]
        smoothing: Option<usize>,
    },
    /// Correlations C_n of the sampled measure.
    Mixing {
        #[arg(long, default_value = "re-z1")]
        phi: String,
        #[arg(long, default_value = "re-z1")]
        psi: String,
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        #[arg(long)]
        smoothing: Option<usize>,
    },
    /// Monte-Carlo pullback masses and the dynamical degree estimate.
    McDegree {
        /// Index p of the dynamical degree d_p.
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        /// A single mass at this n instead of the estimate.
        #[arg(long)]
        n: Option<u32>,
        /// `uniform` points, or random `lines` (p = 1 only).
        #[arg(long, default_value = "uniform")]
        sampling: String,
        #[arg(long)]
        inverse: bool,
    },
    /// Run the invariant suite for the map and print a pass/fail table.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Degrees { .. } => "degrees",
            Command::Stability { .. } => "stability",
            Command::Indeterminacy { .. } => "indeterminacy",
            Command::CheckRegular { .. } => "check-regular",
            Command::Green { .. } => "green",
            Command::GreenGrid { .. } => "green-grid",
            Command::PullbackConverge { .. } => "pullback-converge",
            Command::Measure { .. } => "measure",
            Command::Invariance { .. } => "invariance",
            Command::Mixing { .. } => "mixing",
            Command::McDegree { .. } => "mc-degree",
            Command::Verify => "verify",
        }
    }
}

/// Error raised by the CLI itself on top of library errors.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    /// `verify` ran but some rows failed.
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(e) => match e {
                Error::Usage(_) => 1,
                Error::Io(_) | Error::Parse(_) => 2,
                Error::InvalidMap(_) => 3,
                Error::Resource { .. } => 4,
                Error::Insufficient(_) => 5,
                Error::IndeterminacyProximity { .. } | Error::Degenerate(_) => 6,
            },
            Failure::Checks(_) => 6,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Lib(e) => match e {
                Error::Usage(_) => "usage",
                Error::Io(_) => "io",
                Error::Parse(_) => "parse",
                Error::InvalidMap(_) => "invalid-map",
                Error::Resource { .. } => "resource",
                Error::Insufficient(_) => "statistical-insufficiency",
                Error::IndeterminacyProximity { .. } => "indeterminacy-proximity",
                Error::Degenerate(_) => "degenerate",
            },
            Failure::Checks(_) => "verification-failed",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Checks(n) => format!("{n} check(s) failed"),
        }
    }
}

fn main() -> ExitCode {
    // die quietly on a closed pipe (`birat ... | head`) instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = cli.command.name();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let report = serde_json::json!({
                "command": command,
                "error": f.kind(),
                "message": f.message(),
                "exit_code": f.exit_code(),
            });
            eprintln!("{report}");
            ExitCode::from(f.exit_code())
        }
    }
}
