use std::path::PathBuf;
use std::process::ExitCode;

use bittune::error::{read_file, write_file, Error};
use bittune::files::{to_json, ReportFile, SolutionFile, TraceFile, ValidationFile};
use bittune::lp::write_lp;
use bittune::pipeline::{
    parse_threshold, tune_source, validate, Requirement, SolverChoice, TuneOptions, ValidateOptions,
};
use bittune::ranges::RangeSpec;
use bittune_core::constraints::{LoopRule, Method};
use bittune_core::frontend::parse;
use bittune_core::tuner::emit_annotated;
use bittune_core::validator::Rounding;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bittune", version, about = "Bit-level precision tuning by linear constraints")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ilp,
    Pi,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopRuleArg {
    /// loop bodies read the assignments reaching the loop
    Entry,
    /// loop bodies read the loop's join label
    Fixpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Simplex,
    Kleene,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    /// round every labelled value at its nsb
    PerLabel,
    /// round constants and inputs only
    SourcesOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the nsb of every label and print the annotated program
    Tune {
        file: PathBuf,
        /// accuracy 10^-k, on --var or else on every require_nsb
        #[arg(long, conflicts_with = "nsb")]
        threshold: Option<String>,
        /// bits required of --var
        #[arg(long, requires = "var")]
        nsb: Option<u32>,
        #[arg(long)]
        var: Option<String>,
        #[arg(long, value_enum, default_value = "ilp")]
        method: MethodArg,
        /// bits lost by elementary functions
        #[arg(long, default_value_t = 2)]
        phi: i64,
        #[arg(long, default_value_t = 200)]
        prec_max: i64,
        #[arg(long, value_enum, default_value = "entry")]
        loop_rule: LoopRuleArg,
        #[arg(long, value_enum, default_value = "simplex")]
        solver: SolverArg,
        #[arg(long, default_value_t = 1000)]
        max_pi_iters: usize,
        /// TOML input intervals and loop enclosures
        #[arg(long)]
        ranges: Option<PathBuf>,
        /// label to ufp overrides
        #[arg(long)]
        ufp_table: Option<PathBuf>,
        /// the solved linear program, CPLEX LP format
        #[arg(long)]
        emit_lp: Option<PathBuf>,
        #[arg(long)]
        dump_solution: Option<PathBuf>,
        /// policy iteration steps
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// write the annotated program here instead of to stdout
        #[arg(long)]
        emit_annotated: Option<PathBuf>,
    },
    /// Run a tuned program against a high-precision reference on sampled inputs
    Validate {
        file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        ref_bits: u64,
        #[arg(long, default_value_t = 1_000_000)]
        step_limit: u64,
        #[arg(long, value_enum, default_value = "per-label")]
        rounding: RoundingArg,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn requirement(threshold: Option<String>, nsb: Option<u32>, var: Option<String>) -> Result<Requirement, Error> {
    Ok(match (threshold, nsb) {
        (Some(t), _) => Requirement::Threshold {
            k: parse_threshold(&t)?,
            var,
        },
        (None, Some(n)) => Requirement::Nsb {
            n,
            var: var.expect("clap requires --var with --nsb"),
        },
        (None, None) if var.is_some() => {
            return Err(Error::Usage("--var needs --threshold or --nsb".into()));
        }
        (None, None) => Requirement::AsWritten,
    })
}

fn write_opt(path: &Option<PathBuf>, text: impl FnOnce() -> String) -> Result<(), Error> {
    match path {
        Some(p) => write_file(p, &text()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.cmd {
        Command::Tune {
            file,
            threshold,
            nsb,
            var,
            method,
            phi,
            prec_max,
            loop_rule,
            solver,
            max_pi_iters,
            ranges,
            ufp_table,
            emit_lp,
            dump_solution,
            trace,
            report,
            emit_annotated: annotated_out,
        } => {
            let src = read_file(&file)?;
            let opts = TuneOptions {
                method: match method {
                    MethodArg::Ilp => Method::Ilp,
                    MethodArg::Pi => Method::Pi,
                },
                phi,
                prec_max,
                loop_rule: match loop_rule {
                    LoopRuleArg::Entry => LoopRule::EntryEnv,
                    LoopRuleArg::Fixpoint => LoopRule::Fixpoint,
                },
                solver: match solver {
                    SolverArg::Simplex => SolverChoice::Simplex,
                    SolverArg::Kleene => SolverChoice::Kleene,
                    SolverArg::Both => SolverChoice::Both,
                },
                max_pi_iters,
                ranges: match &ranges {
                    Some(p) => RangeSpec::parse(&read_file(p)?)?,
                    None => RangeSpec::default(),
                },
                ufp_table: ufp_table.as_deref().map(read_file).transpose()?,
                requirement: requirement(threshold, nsb, var)?,
            };
            let t = tune_source(&src, &opts)?;
            let annotated = emit_annotated(&t.program, &t.values)?;
            write_opt(&emit_lp, || {
                write_lp(&t.system.resolve(&t.policy), &format!("precision tuning of {}", file.display()))
            })?;
            write_opt(&dump_solution, || to_json(&SolutionFile::new(&t)))?;
            if let (Some(p), Some(tr)) = (&trace, &t.trace) {
                write_file(p, &to_json(&TraceFile::new(&t, tr)))?;
            } else if trace.is_some() {
                eprintln!("note: --trace is only written for --method pi");
            }
            write_opt(&report, || to_json(&ReportFile::new(&t)))?;
            match &annotated_out {
                Some(p) => write_file(p, &annotated)?,
                None => print!("{}", annotated),
            }
            let r = &t.report;
            eprintln!(
                "bits {} of {} (BL {:.1}%, IEEE {:.1}%), objective {}, H/S/D/LD {}/{}/{}/{}, solved in {:.3}s",
                r.bits_after,
                r.bits_before,
                r.bl_percent,
                r.ieee_percent,
                r.objective,
                r.counts[0],
                r.counts[1],
                r.counts[2],
                r.counts[3],
                t.timings.solve
            );
            let mut seen = std::collections::BTreeSet::new();
            for w in t.ranges.warnings.iter().map(|w| w.to_string()).chain(t.system.warnings.iter().map(|w| w.to_string())) {
                if seen.insert(w.clone()) {
                    eprintln!("warning: {}", w);
                }
            }
            Ok(true)
        }
        Command::Validate {
            file,
            solution,
            samples,
            seed,
            ref_bits,
            step_limit,
            rounding,
            report,
        } => {
            let prog = parse(&read_file(&file)?)?;
            let sol = SolutionFile::parse(&read_file(&solution)?)?;
            sol.check_program(&prog)?;
            let opts = ValidateOptions {
                samples,
                seed,
                ref_bits,
                step_limit,
                rounding: match rounding {
                    RoundingArg::PerLabel => Rounding::PerLabel,
                    RoundingArg::SourcesOnly => Rounding::SourcesOnly,
                },
            };
            let rep = validate(&prog, &sol.precisions(), &sol.input_intervals()?, &sol.requirement_ufps, &opts)?;
            let doc = ValidationFile::new(&rep, seed, ref_bits);
            write_opt(&report, || to_json(&doc))?;
            for (l, e) in &doc.worst {
                println!("l{}: worst error {:e}", l, e);
            }
            println!(
                "{} samples, {} failing, {} diverged: {}",
                doc.samples,
                doc.failures,
                doc.diverged,
                if doc.pass { "PASS" } else { "FAIL" }
            );
            Ok(doc.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}

