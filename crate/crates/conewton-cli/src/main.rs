//! Command-line front end: certificate computation, solver runs with CSV
//! trace export and bound auditing, and the min-norm oracle self-test.
//!
//! Exit codes: 0 success, 1 parse/usage error, 2 certification failure,
//! 3 non-convergence, 4 audit failure, 5 oracle mismatch.

use clap::{Parser, Subcommand, ValueEnum};
use conewton::io::{self, ProblemFileError};
use conewton::majorant::Variant;
use conewton::minnorm::compare_with_oracle;
use conewton::newton::{
    audit_passed, certify, newton_solve, solve_certified, CheckStatus, PipelineError, ProblemSpec,
    ResidualMode, RunStatus, SolverConfig, Termination,
};
use conewton::problems::{builtin, BUILTIN_NAMES};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PARSE: u8 = 1;
const EXIT_CERTIFY: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_AUDIT: u8 = 4;
const EXIT_ORACLE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "conewton",
    version,
    about = "Inexact Newton solver for nonlinear cone inclusions, with convergence certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Lipschitz,
    Smale,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Lipschitz => Variant::Lipschitz,
            VariantArg::Smale => Variant::Smale,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Zero,
    ScaledRandom,
    Boundary,
}

impl From<ModeArg> for ResidualMode {
    fn from(m: ModeArg) -> ResidualMode {
        match m {
            ModeArg::Zero => ResidualMode::Zero,
            ModeArg::ScaledRandom => ResidualMode::ScaledRandom,
            ModeArg::Boundary => ResidualMode::Boundary,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute and print the convergence certificate for a problem.
    Certify {
        /// Builtin name (quad1d, ineq2, smale1d) or path to a JSON problem file.
        problem: String,
        /// Robustness radius around x0.
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Model family; defaults to whichever constant the problem carries.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
    },
    /// Run the inexact Newton iteration.
    Solve {
        /// Builtin name or path to a JSON problem file.
        problem: String,
        /// Residual relative error tolerance.
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Geometric decay factor for theta_k = theta * q^k.
        #[arg(long = "theta-decay", default_value_t = 1.0)]
        theta_decay: f64,
        /// Residual generation mode.
        #[arg(long, value_enum, default_value_t = ModeArg::Zero)]
        mode: ModeArg,
        /// Termination tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 100)]
        max_iter: usize,
        /// Robustness radius around x0.
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Certify first, gate theta, and audit every bound after the run.
        #[arg(long)]
        audit: bool,
    },
    /// Compare the min-norm solver against the brute-force oracle on random
    /// instances.
    OracleTest {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Certify { problem, rho, variant } => cmd_certify(&problem, rho, variant),
        Command::Solve {
            problem,
            theta,
            theta_decay,
            mode,
            tol,
            max_iter,
            rho,
            seed,
            trace,
            audit,
        } => {
            let config = SolverConfig {
                theta,
                theta_decay,
                residual_mode: mode.into(),
                tol,
                max_iter,
                rho,
                seed,
                start: None,
            };
            cmd_solve(&problem, config, trace, audit)
        }
        Command::OracleTest { instances, seed } => cmd_oracle_test(instances, seed),
    }
}

/// Load a problem by builtin name or file path.
fn load_problem(arg: &str) -> Result<(String, ProblemSpec), (u8, String)> {
    if BUILTIN_NAMES.contains(&arg) {
        let spec = builtin(arg).map_err(|e| (EXIT_PARSE, e.to_string()))?;
        return Ok((arg.to_string(), spec));
    }
    let text = std::fs::read(arg)
        .map_err(|e| (EXIT_PARSE, format!("cannot read problem file '{arg}': {e}")))?;
    match io::parse_problem_bytes(&text) {
        Ok((file, spec)) => Ok((file.name, spec)),
        Err(ProblemFileError::Json { line, column, message }) => Err((
            EXIT_PARSE,
            format!("{arg}: line {line}, column {column}: {message}"),
        )),
        Err(ProblemFileError::Invalid(msg)) => Err((EXIT_PARSE, format!("{arg}: {msg}"))),
    }
}

/// Plain decimal with 12 significant digits.
fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.000000000000".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn fail(code: u8, message: String) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn cmd_certify(problem: &str, rho: f64, variant: Option<VariantArg>) -> ExitCode {
    let (name, spec) = match load_problem(problem) {
        Ok(v) => v,
        Err((code, msg)) => return fail(code, msg),
    };
    let cert = match certify(&spec, rho, variant.map(Into::into), None) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CERTIFY, format!("{name}: {e}")),
    };
    println!("problem: {name}");
    println!("variant: {}", cert.variant);
    println!("rho={}", sig12(cert.rho));
    println!("b={}", sig12(cert.b));
    println!("t_star={}", sig12(cert.critical.t_star));
    println!("t_bar={}", sig12(cert.critical.t_bar));
    println!("beta={}", sig12(cert.critical.beta));
    println!("kappa={}", sig12(cert.constants.kappa));
    println!("lambda={}", sig12(cert.constants.lambda));
    println!("theta_tilde={}", sig12(cert.constants.theta_tilde));
    println!("q_linear_threshold={}", sig12(cert.constants.q_linear_threshold));
    if cert.degenerate {
        println!("warning: admissibility boundary; only theta = 0 is certified");
    }
    ExitCode::SUCCESS
}

fn cmd_solve(
    problem: &str,
    config: SolverConfig,
    trace_path: Option<PathBuf>,
    audit: bool,
) -> ExitCode {
    let (name, spec) = match load_problem(problem) {
        Ok(v) => v,
        Err((code, msg)) => return fail(code, msg),
    };

    let report = if audit {
        match solve_certified(&spec, &config, None) {
            Ok(r) => r,
            Err(PipelineError::Certify(e)) => return fail(EXIT_CERTIFY, format!("{name}: {e}")),
            Err(e @ PipelineError::ThetaExceedsTolerance { .. }) => {
                return fail(EXIT_CERTIFY, format!("{name}: {e}"))
            }
            Err(PipelineError::Newton(e)) => return fail(EXIT_PARSE, format!("{name}: {e}")),
        }
    } else {
        match newton_solve(&spec, &config) {
            Ok(mut r) => {
                // Attach a certificate when one is computable so the trace
                // gets its predicted columns; failures are not fatal here.
                r.certificate = certify(&spec, config.rho, None, None).ok();
                r
            }
            Err(e) => return fail(EXIT_PARSE, format!("{name}: {e}")),
        }
    };

    println!("problem: {name}");
    let status = match report.status {
        RunStatus::Converged => "converged",
        RunStatus::MaxIter => "max_iter",
        RunStatus::RobinsonFail => "robinson_fail",
        RunStatus::InfeasibleStep { .. } => "infeasible_step",
    };
    println!("status: {status}");
    if let RunStatus::InfeasibleStep { k } = report.status {
        println!("infeasible_at: {k}");
    }
    if let Some(t) = report.termination {
        let label = match t {
            Termination::ResidualTol => "residual_tol",
            Termination::ConeMembership => "cone_membership",
            Termination::Both => "residual_tol+cone_membership",
        };
        println!("termination: {label}");
    }
    println!("iterations: {}", report.trace.len());
    let final_x: Vec<String> = report.final_x.iter().map(|v| format!("{v:.16e}")).collect();
    println!("final_x: [{}]", final_x.join(", "));
    println!("final_residual_norm: {:.16e}", report.final_residual_norm);

    if let Some(path) = trace_path {
        let rows = io::trace_rows(&report);
        let csv = io::write_trace_csv(&rows);
        if let Err(e) = std::fs::write(&path, csv) {
            return fail(EXIT_PARSE, format!("cannot write trace to {}: {e}", path.display()));
        }
        println!("trace: {}", path.display());
    }

    let mut audit_ok = true;
    if let Some(checks) = &report.audit {
        println!("audit:");
        println!(
            "  {:<18} {:>4} {:>24} {:>24} {:>10}",
            "check", "k", "lhs", "rhs", "result"
        );
        for c in checks {
            let (result, detail) = match &c.status {
                CheckStatus::Pass => ("pass", String::new()),
                CheckStatus::Fail => ("FAIL", String::new()),
                CheckStatus::Advisory => ("advisory", String::new()),
                CheckStatus::Skipped(reason) => ("skipped", format!("  ({reason})")),
            };
            let k = c.k.map(|k| k.to_string()).unwrap_or_else(|| "-".to_string());
            println!(
                "  {:<18} {:>4} {:>24.16e} {:>24.16e} {:>10}{}",
                c.name, k, c.lhs, c.rhs, result, detail
            );
        }
        audit_ok = audit_passed(checks);
        println!("audit result: {}", if audit_ok { "pass" } else { "fail" });
    }

    if report.status != RunStatus::Converged {
        return ExitCode::from(EXIT_NO_CONVERGENCE);
    }
    if audit && !audit_ok {
        return ExitCode::from(EXIT_AUDIT);
    }
    ExitCode::SUCCESS
}

fn cmd_oracle_test(instances: usize, seed: u64) -> ExitCode {
    if instances == 0 {
        return fail(EXIT_PARSE, "--instances must be at least 1".into());
    }
    #[allow(unused_mut)]
    let mut report = match compare_with_oracle(instances, seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PARSE, e.to_string()),
    };
    #[cfg(feature = "fault-inject")]
    {
        report.max_norm_deviation += 1e-3;
    }
    println!("instances: {}", report.instances);
    println!("max_norm_deviation: {:.16e}", report.max_norm_deviation);
    println!("max_step_deviation: {:.16e}", report.max_step_deviation);
    println!("max_kkt_residual: {:.16e}", report.max_kkt_residual);
    println!("feasibility_disagreements: {}", report.feasibility_disagreements);
    if report.passed() {
        println!("oracle: pass");
        ExitCode::SUCCESS
    } else {
        println!("oracle: FAIL");
        ExitCode::from(EXIT_ORACLE)
    }
}
