//! Affine forms and min-max terms over integer variables.
//!
//! A `MinMax` is `min_i max_j a_ij(x)`. Sums, maxima and minima of min-max
//! terms are again min-max terms, which is what lets a carry-bit site be
//! resolved by choosing one alternative of the outer minimum.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::VarId;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    /// sorted by variable, no zero coefficients
    pub terms: Vec<(VarId, i64)>,
    pub constant: i64,
}

impl Affine {
    pub fn constant(c: i64) -> Affine {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn new(terms: &[(VarId, i64)], constant: i64) -> Affine {
        let mut m: BTreeMap<VarId, i64> = BTreeMap::new();
        for &(v, a) in terms {
            *m.entry(v).or_insert(0) += a;
        }
        Affine {
            terms: m.into_iter().filter(|(_, a)| *a != 0).collect(),
            constant,
        }
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        self.constant + self.terms.iter().map(|&(v, a)| a * x[v]).sum::<i64>()
    }

    pub fn add(&self, o: &Affine) -> Affine {
        let mut t = self.terms.clone();
        t.extend_from_slice(&o.terms);
        Affine::new(&t, self.constant + o.constant)
    }

    pub fn neg(&self) -> Affine {
        Affine {
            terms: self.terms.iter().map(|&(v, a)| (v, -a)).collect(),
            constant: -self.constant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinMax {
    /// outer minimum over inner maxima; never empty, nor any inner list
    pub alts: Vec<Vec<Affine>>,
}

impl MinMax {
    pub fn affine(a: Affine) -> MinMax {
        MinMax {
            alts: alloc::vec![alloc::vec![a]],
        }
    }

    pub fn constant(c: i64) -> MinMax {
        MinMax::affine(Affine::constant(c))
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        self.alts
            .iter()
            .map(|alt| alt.iter().map(|a| a.eval(x)).max().expect("non-empty"))
            .min()
            .expect("non-empty")
    }

    /// Value of each alternative at `x`.
    pub fn alt_values(&self, x: &[i64]) -> Vec<i64> {
        self.alts
            .iter()
            .map(|alt| alt.iter().map(|a| a.eval(x)).max().expect("non-empty"))
            .collect()
    }

    /// `min_i max_j a_ij + min_k max_l b_kl = min_(i,k) max_(j,l) (a_ij + b_kl)`.
    pub fn add(&self, o: &MinMax) -> MinMax {
        let mut alts = Vec::new();
        for a in &self.alts {
            for b in &o.alts {
                let mut inner = Vec::new();
                for x in a {
                    for y in b {
                        inner.push(x.add(y));
                    }
                }
                alts.push(dedup(inner));
            }
        }
        MinMax { alts }
    }

    /// `max(min_i A_i, min_k B_k) = min_(i,k) max(A_i, B_k)`.
    pub fn max(&self, o: &MinMax) -> MinMax {
        let mut alts = Vec::new();
        for a in &self.alts {
            for b in &o.alts {
                let mut inner = a.clone();
                inner.extend(b.iter().cloned());
                alts.push(dedup(inner));
            }
        }
        MinMax { alts }
    }

    pub fn min(&self, o: &MinMax) -> MinMax {
        let mut alts = self.alts.clone();
        alts.extend(o.alts.iter().cloned());
        MinMax { alts }
    }
}

fn dedup(mut v: Vec<Affine>) -> Vec<Affine> {
    v.sort();
    v.dedup();
    v
}
