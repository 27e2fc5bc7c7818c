//! Command-line front end: every subcommand prints machine-readable JSON
//! with 17-significant-digit floats on stdout, diagnostics go to stderr.
//!
//! Exit codes: 0 on success or a passing verdict, 1 on a failing verdict,
//! 2 on usage or input errors.

mod emit;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use kcbs::classical::bound_formula_check;
use kcbs::coefficients::SosCoefficients;
use kcbs::operators::sos_certificate_bn;
use kcbs::realization::{canonical, embed, random_effect, Realization};
use kcbs::seesaw::seesaw;
use kcbs::selftest::self_test;
use kcbs::sequential::{
    evaluate_expression, exact_statistics, operator_value, sample_statistics,
    SequentialStatistics,
};

#[derive(Parser)]
#[command(
    name = "kcbs",
    version,
    about = "Modified n-cycle noncontextuality inequalities: coefficients, SOS \
             certificates, bounds, sequential simulation, and self-testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive every closed-form scalar for n = 2^m + 1
    Coeffs {
        #[arg(long)]
        n: usize,
        /// Allow m > 5 despite the conditioning warning
        #[arg(long)]
        allow_large: bool,
    },
    /// Emit the canonical qutrit realization
    Canonical {
        #[arg(long)]
        n: usize,
        /// Write the realization JSON here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the SOS certificate identity on random effects or a file
    VerifySos {
        #[arg(long)]
        n: usize,
        /// Effect dimension for random trials
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Number of random effect tuples to draw
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Verify the certificate on a stored realization instead
        #[arg(long, conflicts_with = "random")]
        realization: Option<PathBuf>,
    },
    /// Brute-force the classical bound and compare with the closed form
    ClassicalBound {
        #[arg(long)]
        n: usize,
    },
    /// Simulate the sequential protocol and evaluate the expression
    Simulate {
        #[arg(long)]
        realization: PathBuf,
        #[arg(long)]
        n: usize,
        /// Sample this many protocol runs per context (exact when absent)
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Subtract the sequential double-click penalties
        #[arg(long)]
        penalized: bool,
        /// Also export the correlators as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the self-testing pipeline on a stored realization
    Selftest {
        #[arg(long)]
        realization: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = kcbs::selftest::DEFAULT_TOL)]
        tol: f64,
        /// Write the full report here as well
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Variational lower bound by alternating optimization
    Seesaw {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the best realization found
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round trip: canonical, embed, self test
    Certify {
        #[arg(long)]
        n: usize,
        /// Junk dimensions to embed before extraction
        #[arg(long, default_value_t = 2)]
        extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = kcbs::selftest::DEFAULT_TOL)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Coeffs { n, allow_large } => {
            let coeffs = if allow_large {
                let c = SosCoefficients::derive_unrestricted(n)?;
                if c.m > kcbs::coefficients::DEFAULT_MAX_M {
                    eprintln!(
                        "warning: m = {} secant products shed precision; expect fewer \
                         trustworthy digits",
                        c.m
                    );
                }
                c
            } else {
                SosCoefficients::derive(n)?
            };
            print_json(&serde_json::to_value(&coeffs)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Canonical { n, out } => {
            let r = canonical(n)?;
            let value = serde_json::to_value(&r)?;
            match out {
                Some(path) => {
                    write_text(&path, &emit::to_string(&value))?;
                    print_json(&json!({
                        "written": path.display().to_string(),
                        "n": n,
                        "dim": r.dim,
                    }));
                }
                None => print_json(&value),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifySos {
            n,
            dim,
            random,
            seed,
            realization,
        } => verify_sos(n, dim, random, seed, realization.as_deref()),
        Command::ClassicalBound { n } => {
            let coeffs = SosCoefficients::derive(n)?;
            let check = bound_formula_check(&coeffs)?;
            print_json(&serde_json::to_value(&check)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            realization,
            n,
            shots,
            seed,
            penalized,
            csv,
        } => simulate(&realization, n, shots, seed, penalized, csv.as_deref()),
        Command::Selftest {
            realization,
            n,
            tol,
            report,
        } => {
            let r = load_realization(&realization, n)?;
            let coeffs = SosCoefficients::derive(n)?;
            let result = self_test(&r, &coeffs, tol);
            let value = serde_json::to_value(&result)?;
            if let Some(path) = report {
                write_text(&path, &emit::to_string(&value))?;
            }
            print_json(&value);
            Ok(exit_for(result.passed()))
        }
        Command::Seesaw {
            n,
            dim,
            restarts,
            max_iters,
            seed,
            out,
        } => {
            let coeffs = SosCoefficients::derive(n)?;
            let trace = seesaw(n, dim, restarts, max_iters, seed)?;
            if let Some(path) = out {
                let value = serde_json::to_value(&trace.best_realization)?;
                write_text(&path, &emit::to_string(&value))?;
            }
            print_json(&json!({
                "n": n,
                "dim": dim,
                "restarts": restarts,
                "seed": seed,
                "best_value": trace.best_value,
                "best_restart": trace.best_restart,
                "eta_q": coeffs.eta_q,
                "gap_to_eta": coeffs.eta_q - trace.best_value,
                "iterations": trace.iterations,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { n, extra, seed, tol } => {
            let coeffs = SosCoefficients::derive(n)?;
            let r = canonical(n)?;
            let embedded = embed(&r, extra, None, seed)?;
            let result = self_test(&embedded, &coeffs, tol);
            print_json(&json!({
                "n": n,
                "extra": extra,
                "seed": seed,
                "tol": tol,
                "verdict": if result.passed() { "pass" } else { "fail" },
                "max_deviation": result.max_deviation,
                "failure": result.failure,
            }));
            Ok(exit_for(result.passed()))
        }
    }
}

fn verify_sos(
    n: usize,
    dim: usize,
    random: Option<u64>,
    seed: u64,
    realization: Option<&Path>,
) -> Result<ExitCode> {
    let coeffs = SosCoefficients::derive(n)?;
    match realization {
        Some(path) => {
            let r = load_realization(path, n)?;
            let cert = sos_certificate_bn(&coeffs, &r.effects)?;
            print_json(&json!({
                "mode": "realization",
                "n": n,
                "dim": r.dim,
                "eta": cert.eta,
                "residual": cert.residual,
                // stabilization defect of the stored state
                "max_term_violation": cert.max_state_residual(&r.psi),
            }));
        }
        None => {
            use rand::SeedableRng;
            let trials = random.unwrap_or(1);
            let mut worst_residual: f64 = 0.0;
            let mut worst_term: f64 = 0.0;
            for trial in 0..trials {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                let effects: Vec<_> =
                    (0..n).map(|_| random_effect(dim, &mut rng)).collect();
                let cert = sos_certificate_bn(&coeffs, &effects)?;
                worst_residual = worst_residual.max(cert.residual);
                worst_term = worst_term.max(cert.max_term_violation());
            }
            print_json(&json!({
                "mode": "random",
                "n": n,
                "dim": dim,
                "trials": trials,
                "seed": seed,
                "eta": coeffs.eta_q,
                "residual": worst_residual,
                "max_term_violation": worst_term,
            }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(
    realization: &Path,
    n: usize,
    shots: Option<u64>,
    seed: u64,
    penalized: bool,
    csv: Option<&Path>,
) -> Result<ExitCode> {
    let r = load_realization(realization, n)?;
    let coeffs = SosCoefficients::derive(n)?;
    let stats = match shots {
        Some(count) => sample_statistics(&r, count, seed)?,
        None => exact_statistics(&r)?,
    };
    let expression_value = evaluate_expression(&stats, &coeffs, penalized)?;
    let operator = operator_value(&r, &coeffs, penalized)?;
    if let Some(path) = csv {
        write_text(path, &correlator_csv(&stats)?)?;
    }
    print_json(&json!({
        "n": n,
        "penalized": penalized,
        "shots": shots,
        "seed": shots.map(|_| seed),
        "expression_value": expression_value,
        "operator_value": operator,
        "gap": expression_value - operator,
        "statistics": serde_json::to_value(&stats)?,
    }));
    Ok(ExitCode::SUCCESS)
}

fn correlator_csv(stats: &SequentialStatistics) -> Result<String> {
    let mut out = String::from("kind,first,second,value\n");
    for (i, j) in stats.contexts() {
        let c = stats.correlator(i, j)?;
        out.push_str(&format!("pair,{i},{j},{:.16e}\n", c));
    }
    for i in 1..=stats.n {
        let s = stats.single(i)?;
        out.push_str(&format!("single,{i},,{:.16e}\n", s));
    }
    Ok(out)
}

fn load_realization(path: &Path, n: usize) -> Result<Realization> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading realization file {}", path.display()))?;
    let r: Realization = serde_json::from_str(&text)
        .with_context(|| format!("parsing realization file {}", path.display()))?;
    if r.n() != n {
        bail!(
            "realization has {} effects but --n {} was requested",
            r.n(),
            n
        );
    }
    r.validate()?;
    Ok(r)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &Value) {
    print!("{}", emit::to_string(value));
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
