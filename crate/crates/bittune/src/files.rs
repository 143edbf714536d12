//! JSON documents written and read by the CLI. Every document carries
//! `"schema": 1`.

use std::collections::BTreeMap;

use bittune_core::constraints::{Branch, Method};
use bittune_core::frontend::{print_program, Label, Program};
use bittune_core::policy::PiTrace;
use bittune_core::range::Interval;
use bittune_core::tuner::{IeeeFormat, TuningReport};
use bittune_core::validator::{Precisions, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pipeline::Tuned;

pub const SCHEMA: u32 = 1;

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Ilp => "ilp",
        Method::Pi => "pi",
    }
}

/// A solved program: enough to validate it without re-solving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema: u32,
    pub method: String,
    /// the program as printed after parsing, requirements applied
    pub program: String,
    pub objective: i64,
    pub nsb: BTreeMap<Label, i64>,
    pub input_nsb: BTreeMap<String, i64>,
    pub input_ranges: BTreeMap<String, [f64; 2]>,
    /// magnitude, as a ufp, that errors are judged against where a required
    /// value is exactly zero
    pub requirement_ufps: BTreeMap<Label, i64>,
}

impl SolutionFile {
    pub fn new(t: &Tuned) -> SolutionFile {
        SolutionFile {
            schema: SCHEMA,
            method: method_name(t.system.method).into(),
            program: print_program(&t.program),
            objective: t.solution.objective,
            nsb: t.precisions.labels.clone(),
            input_nsb: t.precisions.inputs.clone(),
            input_ranges: t.ranges.inputs.iter().map(|(k, i)| (k.clone(), [i.lo, i.hi])).collect(),
            requirement_ufps: bittune_core::validator::requirement_ufps(&t.program, &t.ranges),
        }
    }

    pub fn parse(text: &str) -> Result<SolutionFile, Error> {
        let s: SolutionFile = serde_json::from_str(text).map_err(|e| Error::SolutionFile(e.to_string()))?;
        if s.schema != SCHEMA {
            return Err(Error::SolutionFile(format!("schema {} is not {}", s.schema, SCHEMA)));
        }
        Ok(s)
    }

    /// Fails unless the solution was computed for `prog`.
    pub fn check_program(&self, prog: &Program) -> Result<(), Error> {
        if print_program(prog) != self.program {
            return Err(Error::SolutionFile("solution was computed for a different program".into()));
        }
        Ok(())
    }

    pub fn precisions(&self) -> Precisions {
        Precisions {
            labels: self.nsb.clone(),
            inputs: self.input_nsb.clone(),
        }
    }

    pub fn input_intervals(&self) -> Result<BTreeMap<String, Interval>, Error> {
        self.input_ranges
            .iter()
            .map(|(k, [lo, hi])| {
                Interval::new(*lo, *hi)
                    .map(|i| (k.clone(), i))
                    .map_err(|e| Error::SolutionFile(format!("input {}: {}", k, e)))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormatCounts {
    #[serde(rename = "H")]
    pub half: usize,
    #[serde(rename = "S")]
    pub single: usize,
    #[serde(rename = "D")]
    pub double: usize,
    #[serde(rename = "LD")]
    pub long_double: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub nsb: i64,
    pub format: String,
    pub overflow: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub ranges_seconds: f64,
    pub generate_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: u32,
    pub method: String,
    pub labels: usize,
    pub variables_in_system: usize,
    pub constraints: usize,
    pub carry_sites: usize,
    /// 53 bits per assignment
    pub bits_before: i64,
    /// `nsb` summed over assignments
    pub bits_after: i64,
    /// `nsb` summed over every label and input
    pub objective: i64,
    pub ieee_bits_after: i64,
    pub bl_percent: f64,
    pub ieee_percent: f64,
    pub counts: FormatCounts,
    pub variables: Vec<VariableEntry>,
    pub timings: TimingEntry,
    pub pi_steps: Option<usize>,
    pub warnings: Vec<String>,
}

impl ReportFile {
    pub fn new(t: &Tuned) -> ReportFile {
        let r: &TuningReport = &t.report;
        let warnings = t
            .ranges
            .warnings
            .iter()
            .map(|w| w.to_string())
            .chain(t.system.warnings.iter().map(|w| w.to_string()))
            .collect();
        ReportFile {
            schema: SCHEMA,
            method: method_name(t.system.method).into(),
            labels: t.program.n_labels,
            variables_in_system: t.system.vars.len(),
            constraints: t.system.constraints.len(),
            carry_sites: t.system.xi_sites.len(),
            bits_before: r.bits_before,
            bits_after: r.bits_after,
            objective: r.objective,
            ieee_bits_after: r.ieee_bits_after,
            bl_percent: r.bl_percent,
            ieee_percent: r.ieee_percent,
            counts: FormatCounts {
                half: r.counts[IeeeFormat::Half as usize],
                single: r.counts[IeeeFormat::Single as usize],
                double: r.counts[IeeeFormat::Double as usize],
                long_double: r.counts[IeeeFormat::LongDouble as usize],
            },
            variables: r
                .variables
                .iter()
                .map(|v| VariableEntry {
                    name: v.name.clone(),
                    nsb: v.nsb,
                    format: v.format.letter().into(),
                    overflow: v.overflow,
                })
                .collect(),
            timings: TimingEntry {
                ranges_seconds: t.timings.ranges,
                generate_seconds: t.timings.generate,
                solve_seconds: t.timings.solve,
            },
            pi_steps: t.trace.as_ref().map(|tr| tr.steps.len()),
            warnings,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub objective: i64,
    /// branch per carry site, `A`, `B` or `C`
    pub policy: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: u32,
    /// label of each carry site, in policy order
    pub sites: Vec<Label>,
    pub steps: Vec<TraceStep>,
    pub hit_cap: bool,
    pub tripwire: bool,
    pub strictly_decreasing: bool,
    pub repeated_policy: bool,
}

fn policy_text(p: &[Branch]) -> String {
    p.iter().map(|b| b.to_string()).collect()
}

impl TraceFile {
    pub fn new(t: &Tuned, trace: &PiTrace) -> TraceFile {
        TraceFile {
            schema: SCHEMA,
            sites: t.system.xi_sites.iter().map(|s| s.label).collect(),
            steps: trace
                .steps
                .iter()
                .map(|s| TraceStep {
                    objective: s.objective,
                    policy: policy_text(&s.policy),
                })
                .collect(),
            hit_cap: trace.hit_cap,
            tripwire: trace.tripwire,
            strictly_decreasing: trace.strictly_decreasing(),
            repeated_policy: trace.has_repeated_policy(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    pub label: Label,
    pub var: String,
    pub nsb: u32,
    pub reference: f64,
    pub tuned: f64,
    /// relative error, or absolute where the reference is zero
    pub error: f64,
    pub target: f64,
    pub zero_reference: bool,
    pub executions: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: usize,
    pub inputs: BTreeMap<String, f64>,
    pub diverged: bool,
    pub points: Vec<PointEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationFile {
    pub schema: u32,
    pub seed: u64,
    pub ref_bits: u64,
    pub samples: usize,
    pub failures: usize,
    pub diverged: usize,
    pub pass: bool,
    pub worst: BTreeMap<Label, f64>,
    pub details: Vec<SampleEntry>,
}

impl ValidationFile {
    pub fn new(r: &ValidationReport, seed: u64, ref_bits: u64) -> ValidationFile {
        ValidationFile {
            schema: SCHEMA,
            seed,
            ref_bits,
            samples: r.samples.len(),
            failures: r.failures(),
            diverged: r.samples.iter().filter(|s| s.diverged).count(),
            pass: r.pass(),
            worst: r.worst(),
            details: r
                .samples
                .iter()
                .map(|s| SampleEntry {
                    index: s.index,
                    inputs: s.inputs.clone(),
                    diverged: s.diverged,
                    points: s
                        .points
                        .iter()
                        .map(|p| PointEntry {
                            label: p.label,
                            var: p.var.clone(),
                            nsb: p.nsb,
                            reference: p.reference.to_f64(),
                            tuned: p.tuned.to_f64(),
                            error: p.error,
                            target: (-(p.nsb as f64)).exp2(),
                            zero_reference: p.zero_reference,
                            executions: p.executions,
                            pass: p.pass,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialise");
    s.push('\n');
    s
}
