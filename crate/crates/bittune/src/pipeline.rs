//! Parse, analyse, generate, solve and summarise; then validate by sampling.

use std::collections::BTreeMap;
use std::time::Instant;

use bittune_core::constraints::{generate, Branch, ConstraintSystem, GenConfig, LoopRule, Method};
use bittune_core::frontend::{parse, Cmd, CmdKind, Label, Program};
use bittune_core::policy::{tune_pi, PiConfig, PiTrace};
use bittune_core::range::{analyze_ranges, Interval, RangeMap, UfpTable};
use bittune_core::solver::{kleene_least_fixpoint, solve_lp, Integrality, Solution};
use bittune_core::tuner::{report, threshold_to_nsb, TuningReport};
use bittune_core::validator::{
    check_inputs, requirement_ufps, validate_sample, BigFloat, Elementary, InterpConfig, Precisions, Rounding,
    ValidationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::ranges::RangeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    Simplex,
    Kleene,
    /// both, and fail unless they agree
    Both,
}

/// Accuracy demand set from the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Requirement {
    /// the `require_nsb` statements of the program
    AsWritten,
    /// `10^-k`, on `var` or else on every `require_nsb`
    Threshold { k: u32, var: Option<String> },
    Nsb { n: u32, var: String },
}

#[derive(Clone, Debug)]
pub struct TuneOptions {
    pub method: Method,
    pub phi: i64,
    pub prec_max: i64,
    pub loop_rule: LoopRule,
    pub solver: SolverChoice,
    pub max_pi_iters: usize,
    pub ranges: RangeSpec,
    /// text of a label to ufp table
    pub ufp_table: Option<String>,
    pub requirement: Requirement,
}

impl Default for TuneOptions {
    fn default() -> TuneOptions {
        let g = GenConfig::default();
        TuneOptions {
            method: g.method,
            phi: g.phi,
            prec_max: g.prec_max,
            loop_rule: g.loop_rule,
            solver: SolverChoice::Simplex,
            max_pi_iters: PiConfig::default().max_iters,
            ranges: RangeSpec::default(),
            ufp_table: None,
            requirement: Requirement::AsWritten,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub ranges: f64,
    pub generate: f64,
    pub solve: f64,
}

#[derive(Clone, Debug)]
pub struct Tuned {
    pub program: Program,
    pub ranges: RangeMap,
    pub system: ConstraintSystem,
    pub solution: Solution,
    /// final policy; empty for the pure ILP
    pub policy: Vec<Branch>,
    pub trace: Option<PiTrace>,
    /// `nsb` per label
    pub values: BTreeMap<Label, i64>,
    pub precisions: Precisions,
    pub report: TuningReport,
    pub timings: Timings,
}

/// Parses `"1e-6"`, `"0.000001"` and the like into `k` for `10^-k`.
pub fn parse_threshold(text: &str) -> Result<u32, Error> {
    let bad = || Error::Usage(format!("threshold {:?} is not 10^-k for a positive integer k", text));
    let t: f64 = text.trim().parse().map_err(|_| bad())?;
    if !(t > 0.0 && t < 1.0) {
        return Err(bad());
    }
    let k = (-t.log10()).round();
    if !(1.0..=300.0).contains(&k) || ((t - 10f64.powi(-(k as i32))) / t).abs() > 1e-9 {
        return Err(bad());
    }
    Ok(k as u32)
}

fn set_requirements(c: &mut Cmd, var: Option<&str>, n: u32, hits: &mut usize) {
    match &mut c.kind {
        CmdKind::Seq(cs) => cs.iter_mut().for_each(|c| set_requirements(c, var, n, hits)),
        CmdKind::While { body, .. } => set_requirements(body, var, n, hits),
        CmdKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            set_requirements(then_branch, var, n, hits);
            if let Some(e) = else_branch {
                set_requirements(e, var, n, hits);
            }
        }
        CmdKind::Require { var: x, nsb } => {
            if var.is_none_or(|v| v == x) {
                *nsb = n;
                *hits += 1;
            }
        }
        CmdKind::Assign { .. } => {}
    }
}

/// Parses `src` with `req` applied. A demand on a variable the program
/// never requires appends a `require_nsb` at the end.
pub fn parse_with_requirement(src: &str, req: &Requirement) -> Result<Program, Error> {
    let (n, var) = match req {
        Requirement::AsWritten => return Ok(parse(src)?),
        Requirement::Threshold { k, var } => (threshold_to_nsb(*k), var.clone()),
        Requirement::Nsb { n, var } => (*n, Some(var.clone())),
    };
    if n == 0 {
        return Err(Error::Usage("a requirement needs at least one bit".into()));
    }
    let mut prog = parse(src)?;
    let mut hits = 0;
    if let Some(body) = &mut prog.body {
        set_requirements(body, var.as_deref(), n, &mut hits);
    }
    if hits > 0 {
        return Ok(prog);
    }
    match var {
        Some(x) => Ok(parse(&format!("{}\nrequire_nsb({}, {});\n", src.trim_end(), x, n))?),
        None => Err(Error::Usage(
            "the program has no require_nsb to apply the threshold to; name a variable".into(),
        )),
    }
}

/// Range analysis with the table's overrides on top.
pub fn ranges_for(prog: &Program, spec: &RangeSpec, table: Option<&str>) -> Result<RangeMap, Error> {
    let mut r = analyze_ranges(prog, &spec.inputs, &spec.config)?;
    if let Some(t) = table {
        UfpTable::parse(t, prog)?.apply(&mut r);
    }
    Ok(r)
}

pub fn tune_program(prog: Program, opts: &TuneOptions) -> Result<Tuned, Error> {
    let t0 = Instant::now();
    let ranges = ranges_for(&prog, &opts.ranges, opts.ufp_table.as_deref())?;
    let t1 = Instant::now();
    let cfg = GenConfig {
        method: opts.method,
        phi: opts.phi,
        prec_max: opts.prec_max,
        loop_rule: opts.loop_rule,
    };
    let system = generate(&prog, &ranges, &cfg)?;
    let t2 = Instant::now();
    let (solution, policy, trace) = match opts.method {
        Method::Ilp => {
            let lp = system.resolve(&[]);
            let sol = match opts.solver {
                SolverChoice::Simplex => solve_lp(&lp, Integrality::Required)?,
                SolverChoice::Kleene => kleene_least_fixpoint(&lp)?,
                SolverChoice::Both => {
                    let a = solve_lp(&lp, Integrality::Required)?;
                    let b = kleene_least_fixpoint(&lp)?;
                    if a.values != b.values {
                        return Err(Error::Internal("simplex and Kleene optima differ".into()));
                    }
                    a
                }
            };
            (sol, Vec::new(), None)
        }
        Method::Pi => {
            if opts.solver == SolverChoice::Kleene {
                return Err(Error::Usage(
                    "policy iteration solves each policy by simplex; Kleene iteration applies to the ILP only".into(),
                ));
            }
            let (sol, policy, trace) = tune_pi(
                &system,
                &PiConfig {
                    max_iters: opts.max_pi_iters,
                },
            )?;
            (sol, policy, Some(trace))
        }
    };
    let t3 = Instant::now();
    if !system.holds(&solution.values) {
        return Err(Error::Internal("solution violates its constraint system".into()));
    }
    let values = system.label_values(&solution.values);
    let precisions = Precisions::from_solution(&system, &solution.values);
    let solve = (t3 - t2).as_secs_f64();
    let rep = report(&prog, &values, solution.objective, Some(solve))?;
    Ok(Tuned {
        program: prog,
        ranges,
        system,
        solution,
        policy,
        trace,
        values,
        precisions,
        report: rep,
        timings: Timings {
            ranges: (t1 - t0).as_secs_f64(),
            generate: (t2 - t1).as_secs_f64(),
            solve,
        },
    })
}

pub fn tune_source(src: &str, opts: &TuneOptions) -> Result<Tuned, Error> {
    tune_program(parse_with_requirement(src, &opts.requirement)?, opts)
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub samples: usize,
    pub seed: u64,
    pub ref_bits: u64,
    pub step_limit: u64,
    pub rounding: Rounding,
}

impl Default for ValidateOptions {
    fn default() -> ValidateOptions {
        let c = InterpConfig::default();
        ValidateOptions {
            samples: 100,
            seed: 42,
            ref_bits: c.ref_bits,
            step_limit: c.step_limit,
            rounding: c.rounding,
        }
    }
}

/// `n` input vectors drawn uniformly from bounded intervals, reproducible
/// from `seed`.
pub fn sample_inputs(inputs: &BTreeMap<String, Interval>, n: usize, seed: u64) -> Result<Vec<BTreeMap<String, BigFloat>>, Error> {
    if let Some((x, _)) = inputs.iter().find(|(_, i)| !i.is_bounded()) {
        return Err(Error::Usage(format!("input {} has an unbounded interval and cannot be sampled", x)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            inputs
                .iter()
                .map(|(x, i)| {
                    let v = if i.lo == i.hi { i.lo } else { rng.gen_range(i.lo..=i.hi) };
                    (x.clone(), BigFloat::from_f64(v).expect("finite sample"))
                })
                .collect()
        })
        .collect())
}

/// Reference and tuned runs on every sample.
pub fn validate(
    prog: &Program,
    precisions: &Precisions,
    inputs: &BTreeMap<String, Interval>,
    zero_ufps: &BTreeMap<Label, i64>,
    opts: &ValidateOptions,
) -> Result<ValidationReport, Error> {
    let cfg = InterpConfig {
        ref_bits: opts.ref_bits,
        step_limit: opts.step_limit,
        rounding: opts.rounding,
    };
    let elem = Elementary::new(opts.ref_bits);
    let mut rep = ValidationReport::default();
    for (i, sample) in sample_inputs(inputs, opts.samples, opts.seed)?.into_iter().enumerate() {
        check_inputs(&sample, inputs)?;
        rep.samples.push(validate_sample(prog, precisions, &sample, zero_ufps, &elem, &cfg, i)?);
    }
    Ok(rep)
}

/// Validation of a fresh tuning result.
pub fn validate_tuned(t: &Tuned, opts: &ValidateOptions) -> Result<ValidationReport, Error> {
    let zu = requirement_ufps(&t.program, &t.ranges);
    validate(&t.program, &t.precisions, &t.ranges.inputs, &zu, opts)
}
