//! From accuracy thresholds to requirements, and from solved `nsb` values to
//! IEEE-754 formats, annotated source and summary figures.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;

use crate::frontend::{print_annotated, Label, NodeKind, Program};

/// Bits charged to every assignment of the untuned, all-double program.
pub const DOUBLE_BITS: u32 = 53;

/// Least `n` with `2^-n < 10^-k`, by exact comparison of `2^n` and `10^k`.
pub fn threshold_to_nsb(k: u32) -> u32 {
    let ten_k = BigUint::from(10u32).pow(k);
    let mut n = 0u32;
    let mut two_n = BigUint::from(1u32);
    while two_n <= ten_k {
        two_n <<= 1u32;
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IeeeFormat {
    Half,
    Single,
    Double,
    LongDouble,
}

impl IeeeFormat {
    pub const ALL: [IeeeFormat; 4] = [IeeeFormat::Half, IeeeFormat::Single, IeeeFormat::Double, IeeeFormat::LongDouble];

    /// Significand bits, hidden bit included.
    pub fn significand(self) -> u32 {
        match self {
            IeeeFormat::Half => 11,
            IeeeFormat::Single => 24,
            IeeeFormat::Double => 53,
            IeeeFormat::LongDouble => 113,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            IeeeFormat::Half => "H",
            IeeeFormat::Single => "S",
            IeeeFormat::Double => "D",
            IeeeFormat::LongDouble => "LD",
        }
    }
}

impl fmt::Display for IeeeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.letter(), self.significand())
    }
}

/// The smallest format holding `nsb` bits; the flag is set when even the
/// widest one is too narrow.
pub fn to_ieee_format(nsb: i64) -> (IeeeFormat, bool) {
    IeeeFormat::ALL
        .iter()
        .find(|f| nsb <= f.significand() as i64)
        .map_or((IeeeFormat::LongDouble, true), |&f| (f, false))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TuneError {
    /// a numeric label has no value in the solution
    MissingLabelValue(Label),
}

impl fmt::Display for TuneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TuneError::MissingLabelValue(l) => write!(f, "no nsb value for l{}", l),
        }
    }
}

/// The program with `|nsb|` after every variable, operator and constant.
pub fn emit_annotated(prog: &Program, values: &BTreeMap<Label, i64>) -> Result<String, TuneError> {
    let kinds = prog.node_kinds();
    if let Some(l) = (0..kinds.len()).find(|&l| kinds[l].is_numeric() && !values.contains_key(&l)) {
        return Err(TuneError::MissingLabelValue(l));
    }
    Ok(print_annotated(prog, &|l| values.get(&l).map(|&v| v as u32)))
}

/// Removes `|n|` annotations, giving text the parser accepts.
pub fn strip_annotations(text: &str) -> String {
    let b = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'|' {
            let digits = b[i + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
            if digits > 0 && b.get(i + 1 + digits) == Some(&b'|') {
                i += digits + 2;
                continue;
            }
        }
        let ch = text[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableFormat {
    pub name: String,
    /// largest `nsb` over the variable's assignments
    pub nsb: i64,
    pub format: IeeeFormat,
    /// wider than the widest format
    pub overflow: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningReport {
    /// `DOUBLE_BITS` per assignment label
    pub bits_before: i64,
    /// `nsb` summed over assignment labels
    pub bits_after: i64,
    /// the solver's objective: `nsb` summed over every variable
    pub objective: i64,
    /// format significands summed over assignment labels
    pub ieee_bits_after: i64,
    pub bl_percent: f64,
    pub ieee_percent: f64,
    pub variables: Vec<VariableFormat>,
    /// variables per format, in `IeeeFormat::ALL` order
    pub counts: [usize; 4],
    pub solve_seconds: Option<f64>,
}

fn saved(after: i64, before: i64) -> f64 {
    if before == 0 {
        0.0
    } else {
        100.0 * (1.0 - after as f64 / before as f64)
    }
}

/// Summary figures of a solved program.
pub fn report(
    prog: &Program,
    values: &BTreeMap<Label, i64>,
    objective: i64,
    solve_seconds: Option<f64>,
) -> Result<TuningReport, TuneError> {
    let kinds = prog.node_kinds();
    let mut per_var: BTreeMap<String, i64> = BTreeMap::new();
    let mut assigns = Vec::new();
    for (l, k) in kinds.iter().enumerate() {
        if let NodeKind::Assign(x) = k {
            let v = *values.get(&l).ok_or(TuneError::MissingLabelValue(l))?;
            let e = per_var.entry(x.clone()).or_insert(0);
            *e = (*e).max(v);
            assigns.push((x.clone(), v));
        }
    }
    let variables: Vec<VariableFormat> = per_var
        .iter()
        .map(|(name, &nsb)| {
            let (format, overflow) = to_ieee_format(nsb);
            VariableFormat {
                name: name.clone(),
                nsb,
                format,
                overflow,
            }
        })
        .collect();
    let mut counts = [0usize; 4];
    for v in &variables {
        counts[v.format as usize] += 1;
    }
    let fmt_of: BTreeMap<&str, IeeeFormat> = variables.iter().map(|v| (v.name.as_str(), v.format)).collect();
    let bits_before = DOUBLE_BITS as i64 * assigns.len() as i64;
    let bits_after = assigns.iter().map(|(_, v)| v).sum();
    let ieee_bits_after = assigns
        .iter()
        .map(|(x, _)| fmt_of[x.as_str()].significand() as i64)
        .sum();
    Ok(TuningReport {
        bits_before,
        bits_after,
        objective,
        ieee_bits_after,
        bl_percent: saved(bits_after, bits_before),
        ieee_percent: saved(ieee_bits_after, bits_before),
        variables,
        counts,
        solve_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn thresholds() {
        assert_eq!(threshold_to_nsb(6), 20);
        assert_eq!(threshold_to_nsb(4), 14);
        assert_eq!(threshold_to_nsb(1), 4);
        for k in 1..=16u32 {
            let n = threshold_to_nsb(k);
            let ten = 10u128.pow(k);
            assert!(1u128 << n > ten && 1u128 << (n - 1) <= ten);
        }
    }

    #[test]
    fn formats() {
        assert_eq!(to_ieee_format(20), (IeeeFormat::Single, false));
        assert_eq!(to_ieee_format(11), (IeeeFormat::Half, false));
        assert_eq!(to_ieee_format(54), (IeeeFormat::LongDouble, false));
        assert_eq!(to_ieee_format(114), (IeeeFormat::LongDouble, true));
        let mut last = IeeeFormat::Half;
        for n in 0..=200 {
            let f = to_ieee_format(n).0;
            assert!(f >= last && f.significand() as i64 >= n.min(113));
            last = f;
        }
    }

    #[test]
    fn annotation_of_a_single_assignment() {
        let p = parse("x = 1.0;").unwrap();
        let vals: BTreeMap<Label, i64> = [(0, 0), (1, 0)].into_iter().collect();
        assert_eq!(emit_annotated(&p, &vals).unwrap(), "x|0| = 1.0|0|;\n");
        let partial: BTreeMap<Label, i64> = [(1, 0)].into_iter().collect();
        assert_eq!(emit_annotated(&p, &partial), Err(TuneError::MissingLabelValue(0)));
    }

    #[test]
    fn stripping_keeps_logical_or() {
        let t = "if (a < 1.0 || b > 2.0) { y|3| = a|2| +|4| b|1|; }";
        assert_eq!(strip_annotations(t), "if (a < 1.0 || b > 2.0) { y = a + b; }");
    }

    #[test]
    fn report_aggregates_per_variable() {
        let p = parse("x = 1.0; x = x + 1.0; y = x;").unwrap();
        // 1.0 0, x 1, x 2, 1.0 3, + 4, x 5, x 6, y 7, seq 8
        let vals: BTreeMap<Label, i64> = [(0, 10), (1, 10), (2, 30), (3, 1), (4, 30), (5, 30), (6, 12), (7, 12)]
            .into_iter()
            .collect();
        let r = report(&p, &vals, 0, None).unwrap();
        assert_eq!(r.bits_before, 3 * 53);
        assert_eq!(r.bits_after, 10 + 30 + 12);
        assert_eq!(r.variables[0].format, IeeeFormat::Double);
        assert_eq!(r.variables[1].format, IeeeFormat::Single);
        assert_eq!(r.counts, [0, 1, 1, 0]);
        assert_eq!(r.ieee_bits_after, 53 + 53 + 24);
        assert!((r.bl_percent - 100.0 * (1.0 - 52.0 / 159.0)).abs() < 1e-9);
    }
}
