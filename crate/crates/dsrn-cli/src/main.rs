//! `dsrn`: direct sweeps, verification, asymptotic comparisons, inversion
//! and complex-z exports from the command line.
//!
//! Exit status: 0 success, 1 usage or I/O error, 2 numerical or
//! verification failure. The thread count is read from DSRN_THREADS.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dsrn::DsrnError;

use settings::Format;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Math(String),
}

impl From<DsrnError> for Failure {
    fn from(e: DsrnError) -> Self {
        match e {
            DsrnError::Io(_) | DsrnError::Invalid(_) | DsrnError::Inadmissible { .. } | DsrnError::Domain(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Math(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Black-hole mass M
    #[arg(long = "M", global = true, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    /// Black-hole charge Q
    #[arg(long = "Q", global = true, allow_hyphen_values = true)]
    pub charge: Option<f64>,
    /// Cosmological constant Lambda
    #[arg(long = "Lambda", global = true)]
    pub cosmo: Option<f64>,
    /// Dirac field mass m
    #[arg(long = "m", global = true)]
    pub m_dirac: Option<f64>,
    /// Dirac field charge q
    #[arg(long = "q", global = true, allow_hyphen_values = true)]
    pub q_dirac: Option<f64>,
    /// Energy lambda
    #[arg(long = "lambda", global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Angular momenta: 1..10, 4, 1,2,8 or mixtures
    #[arg(long = "n", global = true)]
    pub n: Option<String>,
    /// Output file (stdout if absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// json or csv
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Flat key=value file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Local relative tolerance of the Jost integrator
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Tail criterion defining the cutoffs
    #[arg(long = "tail-eps", global = true)]
    pub tail_eps: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "dsrn", version, about = "Dirac scattering on de Sitter-Reissner-Nordstrom black holes")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Horizons, surface gravities, width A and phase beta
    Horizons,
    /// Physical partial-wave S-matrices for every n
    Direct,
    /// Run the invariant checks; exit 2 if any fails
    Verify,
    /// Compare A_L blocks with their large-n predictions
    Asympt {
        /// Block of A_L to compare (1..4)
        #[arg(long, default_value_t = 1)]
        block: usize,
    },
    /// Recover (M, Q, Lambda) from reflection data
    Invert {
        /// Output of `direct`, or an inversion problem file
        #[arg(long)]
        data: PathBuf,
        /// Relative perturbation of the generating parameters used as the start
        #[arg(long = "init-perturb", default_value_t = 0.0, allow_hyphen_values = true)]
        init_perturb: f64,
        /// Reflection block to fit, L or R (default L for `direct` output)
        #[arg(long)]
        which: Option<String>,
        /// Step tolerance of the fit
        #[arg(long = "fit-tol", default_value_t = 1e-10)]
        fit_tol: f64,
    },
    /// Sample A_L and the reflection blocks on a complex z grid
    Cam {
        /// Real axis lo:hi:count
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary axis lo:hi:count
        #[arg(long, allow_hyphen_values = true)]
        im: String,
    },
}

fn set_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("DSRN_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| Failure::Usage(format!("DSRN_THREADS: cannot parse '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Usage(format!("DSRN_THREADS: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = set_threads().and_then(|_| commands::run(&cli));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Math(m)) => {
            eprintln!("failure: {m}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_exit_with_two_and_input_errors_with_one() {
        let math = [
            DsrnError::NonConvergence { iterations: 200, residual: 1.0 },
            DsrnError::ExtractionInconsistency { spread: 1e-3, threshold: 1e-7 },
            DsrnError::Stiffness { x: 0.0 },
            DsrnError::Pole("A_L1".into()),
        ];
        for e in math {
            assert!(matches!(Failure::from(e), Failure::Math(_)));
        }
        let usage = [
            DsrnError::Io("missing".into()),
            DsrnError::Invalid("bad".into()),
            DsrnError::Inadmissible { reason: "complex roots".into(), roots: vec![] },
        ];
        for e in usage {
            assert!(matches!(Failure::from(e), Failure::Usage(_)));
        }
    }

    #[test]
    fn flags_parse_with_case_sensitive_names() {
        let cli = Cli::try_parse_from([
            "dsrn", "direct", "--M", "2", "--m", "0.3", "--Lambda", "0.01", "--lambda", "-1", "--Q", "-0.2",
        ])
        .unwrap();
        assert_eq!(cli.common.mass, Some(2.0));
        assert_eq!(cli.common.m_dirac, Some(0.3));
        assert_eq!(cli.common.cosmo, Some(0.01));
        assert_eq!(cli.common.lambda, Some(-1.0));
        assert_eq!(cli.common.charge, Some(-0.2));
        assert!(Cli::try_parse_from(["dsrn", "cam", "--re", "1:2:2"]).is_err());
    }
}
