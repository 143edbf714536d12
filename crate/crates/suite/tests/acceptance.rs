//! One line per acceptance criterion, `PASS` or `FAIL`, with the figures
//! behind it. Details of failures go to stderr.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use bittune::corpus::{accept, corpus, CorpusProgram, MAX_DEPTH, MAX_LABELS};
use bittune::pipeline::{tune_program, validate_tuned, SolverChoice, TuneOptions, Tuned, ValidateOptions};
use bittune_core::constraints::{generate, GenConfig, Method};
use bittune_core::frontend::parse;
use bittune_core::policy::{tune_pi, PiConfig};
use bittune_core::range::{analyze_ranges, RangeConfig};
use bittune_core::solver::{kleene_least_fixpoint, solve_lp, Integrality};
use bittune_core::tuner::{emit_annotated, threshold_to_nsb};
use bittune_core::validator::{requirement_ufps, BigFloat, Rounding};

const PENDULUM: &str = include_str!("../../../testdata/pendulum.imp");
const PENDULUM_UFP: &str = include_str!("../../../testdata/pendulum_ufp.tsv");
const CORPUS_SEED: u64 = 20_240_601;
const CORPUS_SIZE: usize = 200;

struct Line {
    ok: bool,
    text: String,
}

fn line(n: usize, name: &str, ok: bool, detail: String) -> Line {
    Line {
        ok,
        text: format!("[{}] {} {}: {}", if ok { "PASS" } else { "FAIL" }, n, name, detail),
    }
}

fn worked_example() -> Line {
    let t0 = Instant::now();
    let p = parse("x = 5.0; y = 3.0; z = x + y; require_nsb(z, 15);").unwrap();
    let r = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
    let s = generate(&p, &r, &GenConfig::default()).unwrap();
    let sol = solve_lp(&s.resolve(&[]), Integrality::Required).unwrap();
    let got = s.label_values(&sol.values)[&6];
    let secs = t0.elapsed().as_secs_f64();
    line(
        1,
        "worked example",
        got == 17 && secs < 1.0,
        format!("nsb(l6) = {} (want 17) in {:.3}s", got, secs),
    )
}

fn pendulum_opts(method: Method) -> TuneOptions {
    TuneOptions {
        method,
        phi: 9,
        ufp_table: Some(PENDULUM_UFP.to_string()),
        ..Default::default()
    }
}

fn pendulum(method: Method) -> Tuned {
    tune_program(parse(PENDULUM).unwrap(), &pendulum_opts(method)).unwrap()
}

fn line_six(t: &Tuned) -> String {
    let text = emit_annotated(&t.program, &t.values).unwrap();
    text.lines().map(str::trim).find(|l| l.starts_with("y1new")).unwrap().trim_end_matches(';').to_string()
}

fn pendulum_reproduction(ilp: &Tuned, pi: &Tuned) -> Line {
    let want_line = "y1new|20| = y1|21| +|20| y2|21| *|22| h|21|";
    // y1 read, y2 read, h read, product, sum, assignment
    let want: [(usize, i64); 6] = [(15, 21), (16, 21), (17, 21), (18, 22), (19, 20), (20, 20)];
    let close = |got: i64, want: i64| (got - want).abs() * 50 <= want;
    let (a, b) = (ilp.report.bits_after, pi.report.bits_after);
    let totals = ilp.report.bits_before == 689 && close(a, 274) && close(b, 272) && b + 2 <= a;
    let got_line = line_six(pi);
    let itemised: Vec<String> = want
        .iter()
        .filter(|(l, n)| pi.values[l] != *n)
        .map(|(l, n)| format!("l{} {} vs {}", l, pi.values[l], n))
        .collect();
    let detail = format!(
        "baseline {} (689), ILP {} (274), PI {} (272), PI gain {}; PI line 6 `{}`{}",
        ilp.report.bits_before,
        a,
        b,
        a - b,
        got_line,
        if itemised.is_empty() {
            String::new()
        } else {
            format!(" differs from `{}` at {}", want_line, itemised.join(", "))
        }
    );
    line(2, "pendulum reproduction", totals && got_line == want_line, detail)
}

struct Solved {
    ilp: Tuned,
    pi: Tuned,
}

fn corpus_options(c: &CorpusProgram, method: Method) -> TuneOptions {
    TuneOptions {
        method,
        ranges: c.ranges.clone(),
        solver: SolverChoice::Simplex,
        ..Default::default()
    }
}

fn integrality(programs: &[CorpusProgram]) -> Line {
    let mut violations = 0;
    for c in programs {
        let p = parse(&c.source).unwrap();
        let r = bittune::pipeline::ranges_for(&p, &c.ranges, None).unwrap();
        let s = generate(&p, &r, &GenConfig::default()).unwrap();
        let sol = solve_lp(&s.resolve(&[]), Integrality::BranchAndBound).unwrap();
        if !sol.stats.relaxation_integral {
            violations += 1;
            eprintln!("non-integral relaxation:\n{}", c.source);
        }
    }
    line(
        3,
        "integrality",
        violations == 0,
        format!("{} of {} relaxations fractional", violations, programs.len()),
    )
}

fn oracle_equivalence(programs: &[CorpusProgram]) -> Line {
    let mut mismatches = 0;
    for c in programs {
        let p = parse(&c.source).unwrap();
        let r = bittune::pipeline::ranges_for(&p, &c.ranges, None).unwrap();
        let s = generate(&p, &r, &GenConfig::default()).unwrap();
        let lp = s.resolve(&[]);
        let a = solve_lp(&lp, Integrality::BranchAndBound).unwrap();
        let b = kleene_least_fixpoint(&lp).unwrap();
        if a.values != b.values {
            mismatches += 1;
            eprintln!("simplex and Kleene differ:\n{}", c.source);
        }
    }
    line(
        4,
        "oracle equivalence",
        mismatches == 0,
        format!("{} of {} programs differ coordinate-wise", mismatches, programs.len()),
    )
}

fn pi_behaviour(programs: &[CorpusProgram], solved: &[Solved]) -> Line {
    let (mut not_decreasing, mut worse, mut repeats, mut steps) = (0, 0, 0, 0);
    for (c, s) in programs.iter().zip(solved) {
        // the trace again, straight from the core
        let (sol, _, trace) = tune_pi(&s.pi.system, &PiConfig::default()).unwrap();
        steps += trace.steps.len();
        if !trace.strictly_decreasing() || trace.hit_cap {
            not_decreasing += 1;
            eprintln!("objectives {:?}:\n{}", trace.objectives(), c.source);
        }
        if trace.has_repeated_policy() {
            repeats += 1;
        }
        if sol.objective > s.ilp.solution.objective {
            worse += 1;
            eprintln!("PI {} above ILP {}:\n{}", sol.objective, s.ilp.solution.objective, c.source);
        }
    }
    line(
        5,
        "policy iteration",
        not_decreasing + worse + repeats == 0,
        format!(
            "{} traces not strictly decreasing, {} PI optima above ILP, {} repeated policies, {:.2} steps on average",
            not_decreasing,
            worse,
            repeats,
            steps as f64 / solved.len() as f64
        ),
    )
}

#[derive(Default)]
struct Tally {
    points: usize,
    failing: usize,
    /// within `2^(ufp - n)` of the reference, `ufp` from the analysed range,
    /// but the value itself lies far below that magnitude
    below_range: usize,
    diverged: usize,
    errors: usize,
}

impl Tally {
    fn add(&mut self, t: &Tuned, opts: &ValidateOptions, name: &str) -> bool {
        let zu = requirement_ufps(&t.program, &t.ranges);
        match validate_tuned(t, opts) {
            Ok(rep) => {
                self.diverged += rep.samples.iter().filter(|s| s.diverged).count();
                for p in rep.samples.iter().flat_map(|s| &s.points) {
                    self.points += 1;
                    if p.pass {
                        continue;
                    }
                    self.failing += 1;
                    let d = p.tuned.sub(&p.reference).abs();
                    if d < BigFloat::pow2(zu[&p.label] - p.nsb as i64) {
                        self.below_range += 1;
                    }
                }
                if !rep.pass() {
                    eprintln!("{} ({:?}) fails: worst errors {:?}", name, t.system.method, rep.worst());
                }
                rep.pass()
            }
            Err(e) => {
                self.errors += 1;
                eprintln!("{} ({:?}) could not be validated: {}", name, t.system.method, e);
                false
            }
        }
    }
}

fn soundness(programs: &[CorpusProgram], solved: &[Solved], ilp: &Tuned, pi: &Tuned) -> Line {
    let mut tally = Tally::default();
    let mut failing_programs = 0;
    let mut slow = 0;
    let mut worst_secs: f64 = 0.0;
    let mut cases: Vec<(String, [&Tuned; 2], u64)> = vec![("pendulum".into(), [ilp, pi], 42)];
    for (i, (c, s)) in programs.iter().zip(solved).enumerate() {
        cases.push((format!("corpus program {}\n{}", i, c.source), [&s.ilp, &s.pi], i as u64));
    }
    for (name, tuned, seed) in &cases {
        let t0 = Instant::now();
        let mut ok = true;
        for t in tuned {
            let opts = ValidateOptions {
                seed: *seed,
                ref_bits: 500.max(4 * t.precisions.max() as u64),
                ..Default::default()
            };
            ok &= tally.add(t, &opts, name);
        }
        let secs = t0.elapsed().as_secs_f64();
        worst_secs = worst_secs.max(secs);
        slow += (secs >= 10.0) as usize;
        failing_programs += !ok as usize;
    }
    // the same ILP solutions with only constants and inputs rounded, as in
    // the expression semantics the constraints are derived from
    let mut sources = Tally::default();
    for (name, tuned, seed) in &cases {
        let opts = ValidateOptions {
            seed: *seed,
            ref_bits: 500.max(4 * tuned[0].precisions.max() as u64),
            rounding: Rounding::SourcesOnly,
            ..Default::default()
        };
        sources.add(tuned[0], &opts, name);
    }
    line(
        6,
        "empirical soundness",
        failing_programs == 0 && slow == 0,
        format!(
            "{} of {} programs fail; {} of {} checked points fail ({} within the bound of their range but far below its magnitude), \
             {} samples diverged, {} runs aborted; ILP with only constants and inputs rounded: {} failing points \
             ({} below range magnitude); slowest program {:.2}s",
            failing_programs,
            cases.len(),
            tally.failing,
            tally.points,
            tally.below_range,
            tally.diverged,
            tally.errors,
            sources.failing,
            sources.below_range,
            worst_secs
        ),
    )
}

fn timing() -> Line {
    let t0 = Instant::now();
    let ilp = pendulum(Method::Ilp);
    let a = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let _pi = pendulum(Method::Pi);
    let b = t1.elapsed().as_secs_f64();
    line(
        7,
        "timing",
        a < 5.0 && b < 30.0,
        format!("pendulum ({} labels) ILP {:.3}s (< 5), PI {:.3}s (< 30)", ilp.program.n_labels, a, b),
    )
}

fn threshold_conversion() -> Line {
    let mut bad = Vec::new();
    for k in 1..=16u32 {
        let n = threshold_to_nsb(k);
        let ten = 10u128.pow(k);
        // least n with 2^-n < 10^-k: 2^(n-1) <= 10^k < 2^n
        if !(1u128 << (n - 1) <= ten && ten < 1u128 << n) {
            bad.push(k);
        }
    }
    let six = threshold_to_nsb(6);
    line(
        8,
        "threshold conversion",
        six == 20 && bad.is_empty(),
        format!("threshold_to_nsb(6) = {}; k in 1..=16 wrong at {:?}", six, bad),
    )
}

fn main() -> ExitCode {
    let (programs, drawn) = corpus(CORPUS_SEED, CORPUS_SIZE);
    eprintln!(
        "corpus: {} programs (depth <= {}, <= {} labels) from {} candidates",
        programs.len(),
        MAX_DEPTH,
        MAX_LABELS,
        drawn
    );
    for c in &programs {
        assert!(accept(c).is_some());
    }
    let solved: Vec<Solved> = programs
        .iter()
        .map(|c| {
            let p = parse(&c.source).unwrap();
            Solved {
                ilp: tune_program(p.clone(), &corpus_options(c, Method::Ilp)).unwrap(),
                pi: tune_program(p, &corpus_options(c, Method::Pi)).unwrap(),
            }
        })
        .collect();
    let (ilp, pi) = (pendulum(Method::Ilp), pendulum(Method::Pi));
    let lines = [
        worked_example(),
        pendulum_reproduction(&ilp, &pi),
        integrality(&programs),
        oracle_equivalence(&programs),
        pi_behaviour(&programs, &solved),
        soundness(&programs, &solved, &ilp, &pi),
        timing(),
        threshold_conversion(),
    ];
    for l in &lines {
        println!("{}", l.text);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
