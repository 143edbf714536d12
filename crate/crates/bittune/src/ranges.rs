//! Input intervals and loop enclosures, read from TOML:
//!
//! ```toml
//! max_loop_iters = 64
//!
//! [inputs]
//! x = [1.0, 2.0]
//!
//! [enclosures]
//! v = [-10, 10]
//! ```

use std::collections::BTreeMap;

use bittune_core::range::{Interval, RangeConfig};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum Bound {
    Int(i64),
    Float(f64),
}

impl Bound {
    fn value(self) -> f64 {
        match self {
            Bound::Int(i) => i as f64,
            Bound::Float(f) => f,
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RangesToml {
    #[serde(skip_serializing_if = "Option::is_none")]
    max_loop_iters: Option<usize>,
    #[serde(default)]
    inputs: BTreeMap<String, [Bound; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    enclosures: BTreeMap<String, [Bound; 2]>,
}

/// What range analysis needs besides the program.
#[derive(Clone, Debug, Default)]
pub struct RangeSpec {
    pub inputs: BTreeMap<String, Interval>,
    pub config: RangeConfig,
}

fn intervals(table: BTreeMap<String, [Bound; 2]>, what: &str) -> Result<BTreeMap<String, Interval>, Error> {
    table
        .into_iter()
        .map(|(k, [lo, hi])| {
            Interval::new(lo.value(), hi.value())
                .map(|i| (k.clone(), i))
                .map_err(|e| Error::RangesFile(format!("{} {}: {}", what, k, e)))
        })
        .collect()
}

impl RangeSpec {
    pub fn parse(text: &str) -> Result<RangeSpec, Error> {
        let t: RangesToml = toml::from_str(text).map_err(|e| Error::RangesFile(e.to_string()))?;
        let mut config = RangeConfig::default();
        if let Some(n) = t.max_loop_iters {
            if n == 0 {
                return Err(Error::RangesFile("max_loop_iters must be at least 1".into()));
            }
            config.max_loop_iters = n;
        }
        config.enclosures = intervals(t.enclosures, "enclosure")?;
        Ok(RangeSpec {
            inputs: intervals(t.inputs, "input")?,
            config,
        })
    }

    pub fn to_toml(&self) -> String {
        let pair = |i: &Interval| [Bound::Float(i.lo), Bound::Float(i.hi)];
        let t = RangesToml {
            max_loop_iters: Some(self.config.max_loop_iters),
            inputs: self.inputs.iter().map(|(k, i)| (k.clone(), pair(i))).collect(),
            enclosures: self.config.enclosures.iter().map(|(k, i)| (k.clone(), pair(i))).collect(),
        };
        toml::to_string(&t).expect("plain tables serialise")
    }
}
