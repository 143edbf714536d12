//! Random programs for property checks: straight-line code, branches and
//! counted loops over a few bounded inputs, each ending in requirements.

use bittune_core::constraints::{generate, GenConfig, Method};
use bittune_core::frontend::{parse, Cmd, CmdKind, CondKind, Program};
use bittune_core::range::{Interval, RangeWarning};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::ranges_for;
use crate::ranges::RangeSpec;

pub const MAX_DEPTH: usize = 6;
pub const MAX_LABELS: usize = 50;

#[derive(Clone, Debug)]
pub struct CorpusProgram {
    pub source: String,
    pub ranges: RangeSpec,
}

/// Nesting depth of the labelled tree: commands, conditions and expressions.
pub fn program_depth(p: &Program) -> usize {
    fn cond(c: &bittune_core::frontend::Cond) -> usize {
        1 + match &c.kind {
            CondKind::Cmp(_, a, b) => a.depth().max(b.depth()),
            CondKind::And(a, b) | CondKind::Or(a, b) => cond(a).max(cond(b)),
            CondKind::Not(a) => cond(a),
        }
    }
    fn cmd(c: &Cmd) -> usize {
        1 + match &c.kind {
            CmdKind::Seq(cs) => cs.iter().map(cmd).max().unwrap_or(0),
            CmdKind::Assign { expr, .. } => expr.depth(),
            CmdKind::While { cond: k, body } => cond(k).max(cmd(body)),
            CmdKind::If {
                cond: k,
                then_branch,
                else_branch,
            } => cond(k).max(cmd(then_branch)).max(else_branch.as_deref().map_or(0, cmd)),
            CmdKind::Require { .. } => 0,
        }
    }
    p.body.as_ref().map_or(0, cmd)
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    /// variables that may be read
    readable: Vec<String>,
    fresh: usize,
}

impl Gen<'_> {
    fn constant(&mut self) -> String {
        let whole = self.rng.gen_range(0..6);
        let frac = self.rng.gen_range(0..100);
        if whole == 0 && frac == 0 {
            return "0.5".into();
        }
        format!("{}.{:02}", whole, frac)
    }

    fn leaf(&mut self) -> String {
        if !self.readable.is_empty() && self.rng.gen_bool(0.7) {
            self.readable.choose(self.rng).unwrap().clone()
        } else {
            self.constant()
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth <= 1 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let r = self.rng.gen_range(0..100);
        if r < 70 {
            let op = ["+", "-", "*", "/"].choose(self.rng).unwrap();
            let a = self.expr(depth - 1);
            let b = self.expr(depth - 1);
            format!("({} {} {})", a, op, b)
        } else if r < 78 {
            format!("sqrt({})", self.expr(depth - 1))
        } else {
            let f = ["sin", "cos", "arctan", "exp", "log"].choose(self.rng).unwrap();
            format!("{}({})", f, self.expr(depth - 1))
        }
    }

    fn var(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{}{}", prefix, self.fresh)
    }
}

/// One candidate program; it may still be rejected by [`accept`].
pub fn random_program(rng: &mut ChaCha8Rng) -> CorpusProgram {
    let mut spec = RangeSpec::default();
    let n_inputs = rng.gen_range(1..=3);
    for i in 0..n_inputs {
        let lo = (rng.gen_range(0.25f64..4.0) * 100.0).round() / 100.0;
        let hi = (lo * rng.gen_range(1.05f64..1.9) * 100.0).round() / 100.0;
        spec.inputs.insert(format!("x{}", i), Interval::new(lo, hi).unwrap());
    }
    let mut g = Gen {
        rng,
        readable: spec.inputs.keys().cloned().collect(),
        fresh: 0,
    };
    let mut lines = Vec::new();
    let mut assigned = Vec::new();
    for _ in 0..g.rng.gen_range(2..=5) {
        let v = g.var("v");
        let r = g.rng.gen_range(0..100);
        if r < 75 {
            lines.push(format!("{} = {};", v, g.expr(4)));
        } else if r < 90 {
            let a = g.leaf();
            let c = g.constant();
            let e1 = g.expr(3);
            let e2 = g.expr(3);
            lines.push(format!("if ({} < {}) {{ {} = {}; }} else {{ {} = {}; }}", a, c, v, e1, v, e2));
        } else {
            let i = g.var("i");
            let k = g.rng.gen_range(1..=4);
            lines.push(format!("{} = {};", v, g.expr(3)));
            lines.push(format!("{} = 0.0;", i));
            let body = g.expr(2);
            lines.push(format!(
                "while ({} < {}.0) {{ {} = {}; {} = {} + 1.0; }}",
                i, k, v, body, i, i
            ));
        }
        g.readable.push(v.clone());
        assigned.push(v);
    }
    let n_req = g.rng.gen_range(1..=2).min(assigned.len());
    let mut targets = assigned.clone();
    targets.shuffle(g.rng);
    for v in targets.into_iter().take(n_req) {
        let n = g.rng.gen_range(4..=30);
        lines.push(format!("require_nsb({}, {});", v, n));
    }
    CorpusProgram {
        source: lines.join("\n") + "\n",
        ranges: spec,
    }
}

/// Within the size limits, every function argument within its domain,
/// and constraint generation for both methods succeeds.
pub fn accept(c: &CorpusProgram) -> Option<Program> {
    let p = parse(&c.source).ok()?;
    if p.n_labels > MAX_LABELS || program_depth(&p) > MAX_DEPTH {
        return None;
    }
    let r = ranges_for(&p, &c.ranges, None).ok()?;
    // a clipped argument means some inputs leave the function's domain
    if r.warnings.iter().any(|w| matches!(w, RangeWarning::DomainClipped { .. })) {
        return None;
    }
    for method in [Method::Ilp, Method::Pi] {
        generate(&p, &r, &GenConfig { method, ..GenConfig::default() }).ok()?;
    }
    Some(p)
}

/// `count` accepted programs, reproducible from `seed`, with the number of
/// candidates drawn to find them.
pub fn corpus(seed: u64, count: usize) -> (Vec<CorpusProgram>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut drawn = 0;
    while out.len() < count {
        drawn += 1;
        let c = random_program(&mut rng);
        if accept(&c).is_some() {
            out.push(c);
        }
    }
    (out, drawn)
}
