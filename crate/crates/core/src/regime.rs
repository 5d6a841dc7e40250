//! Static treatment regimes and the estimand description.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::NodeSchema;

/// Fixed exposure assignment per treatment block, with censoring prevented
/// throughout (the censoring intervention is always "none").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regime {
    /// `assignments[j][t-1]` is the value of exposure node `j` at block `t`.
    assignments: Vec<Vec<u8>>,
}

impl Regime {
    pub fn new(schema: &NodeSchema, assignments: Vec<Vec<u8>>) -> Result<Regime> {
        if assignments.len() != schema.n_exposures() {
            return Err(Error::config(format!(
                "regime assigns {} exposure nodes, schema declares {}",
                assignments.len(),
                schema.n_exposures()
            )));
        }
        for (j, series) in assignments.iter().enumerate() {
            if series.len() != schema.treatment_intervals() {
                return Err(Error::config(format!(
                    "regime for exposure '{}' has {} assignments, expected {}",
                    schema.exposure_nodes[j],
                    series.len(),
                    schema.treatment_intervals()
                )));
            }
            if series.iter().any(|&v| v > 1) {
                return Err(Error::config("regime assignments must be 0 or 1"));
            }
        }
        Ok(Regime { assignments })
    }

    /// Constant assignment per exposure node at every block (e.g. sustained
    /// use of the first exposure: `&[1]`, or `&[1, 0]` with a comparator).
    pub fn sustained(schema: &NodeSchema, values: &[u8]) -> Regime {
        let k = schema.treatment_intervals();
        Regime { assignments: values.iter().map(|&v| vec![v; k]).collect() }
    }

    /// Builds from a name-keyed map, as configs spell it.
    pub fn from_named(schema: &NodeSchema, named: &BTreeMap<String, Vec<u8>>) -> Result<Regime> {
        let mut assignments = Vec::with_capacity(schema.n_exposures());
        for name in &schema.exposure_nodes {
            let series = named.get(name).ok_or_else(|| {
                Error::config(format!("regime is missing exposure node '{name}'"))
            })?;
            assignments.push(series.clone());
        }
        if named.len() != schema.n_exposures() {
            return Err(Error::config("regime names unknown exposure nodes"));
        }
        Regime::new(schema, assignments)
    }

    #[inline]
    pub fn assignment(&self, exposure: usize, t: usize) -> u8 {
        self.assignments[exposure][t - 1]
    }

    pub fn to_named(&self, schema: &NodeSchema) -> BTreeMap<String, Vec<u8>> {
        schema
            .exposure_nodes
            .iter()
            .cloned()
            .zip(self.assignments.iter().cloned())
            .collect()
    }
}

/// How the two arms are contrasted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastType {
    RiskDifference,
    RelativeRisk,
    PerArmRisk,
}

/// The full estimand: two regimes, an evaluation horizon, and a contrast.
#[derive(Debug, Clone)]
pub struct EstimandSpec {
    pub treatment: Regime,
    pub control: Regime,
    /// Interval at which the cumulative outcome risk is evaluated (1..=K+1).
    pub horizon: usize,
    pub contrast: ContrastType,
}

impl EstimandSpec {
    pub fn validate(&self, schema: &NodeSchema) -> Result<()> {
        if self.horizon < 1 || self.horizon > schema.intervals {
            return Err(Error::config(format!(
                "horizon {} outside 1..={}",
                self.horizon, schema.intervals
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> NodeSchema {
        NodeSchema {
            baseline_nodes: vec!["w".into()],
            intervals: 3,
            interval_length_days: 182,
            covariate_nodes: vec![],
            outcome_node: "y".into(),
            competing_node: "d".into(),
            censor_node: "c".into(),
            exposure_nodes: vec!["a1".into(), "a2".into()],
        }
    }

    #[test]
    fn sustained_regime_assigns_every_block() {
        let s = schema();
        let r = Regime::sustained(&s, &[1, 0]);
        assert_eq!(r.assignment(0, 1), 1);
        assert_eq!(r.assignment(0, 2), 1);
        assert_eq!(r.assignment(1, 2), 0);
    }

    #[test]
    fn named_regime_requires_every_exposure() {
        let s = schema();
        let mut named = BTreeMap::new();
        named.insert("a1".to_string(), vec![1, 1]);
        assert!(Regime::from_named(&s, &named).is_err());
        named.insert("a2".to_string(), vec![0, 0]);
        let r = Regime::from_named(&s, &named).unwrap();
        assert_eq!(r, Regime::sustained(&s, &[1, 0]));
    }

    #[test]
    fn horizon_bounds_checked() {
        let s = schema();
        let spec = EstimandSpec {
            treatment: Regime::sustained(&s, &[1, 0]),
            control: Regime::sustained(&s, &[0, 1]),
            horizon: 4,
            contrast: ContrastType::RiskDifference,
        };
        assert!(spec.validate(&s).is_err());
    }
}
