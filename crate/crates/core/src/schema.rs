//! Longitudinal node schema: which nodes exist, in what temporal order, and
//! where each (node, interval) lives in the wide value matrix.
//!
//! The observed data are laid out as
//!
//! ```text
//! W..., [L~ (1)..., Y(1), D(1), A~ (1)..., C(1)], ..., [L~ (K)..., Y(K), D(K), A~ (K)..., C(K)],
//! [L~ (K+1)..., Y(K+1), D(K+1)]
//! ```
//!
//! i.e. `intervals` = K+1 covariate/outcome blocks and K treatment/censoring
//! blocks; the final interval carries no treatment block. Within an interval
//! the fixed order is covariates, outcome, competing event, exposures,
//! censoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a single node at a single interval.
///
/// Ordering of the variants within an interval matches the within-interval
/// order used everywhere: covariates, outcome, competing, exposures, censor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    /// Baseline node `j` (time-invariant).
    Baseline(usize),
    /// Time-varying covariate `j` at interval `t` (1-based).
    Covariate(usize, usize),
    /// Outcome indicator at interval `t`.
    Outcome(usize),
    /// Competing-event indicator at interval `t`.
    Competing(usize),
    /// Exposure node `j` at interval `t` (only t = 1..K).
    Exposure(usize, usize),
    /// Censoring indicator at interval `t` (only t = 1..K).
    Censor(usize),
}

/// Declares the longitudinal structure: node names, interval count, and the
/// discretization grain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSchema {
    /// Baseline (time-invariant) node names; binary or small-integer coded.
    pub baseline_nodes: Vec<String>,
    /// Number of covariate/outcome blocks (K+1). The last block has no
    /// exposure/censoring nodes.
    pub intervals: usize,
    /// Length of one interval in days.
    #[serde(default = "default_interval_length")]
    pub interval_length_days: u32,
    /// Time-varying covariate names.
    pub covariate_nodes: Vec<String>,
    /// Outcome node name (absorbing).
    pub outcome_node: String,
    /// Competing-event node name (absorbing).
    pub competing_node: String,
    /// Censoring node name (absorbing).
    pub censor_node: String,
    /// Exposure node names (one or two in practice).
    pub exposure_nodes: Vec<String>,
}

fn default_interval_length() -> u32 {
    182
}

impl NodeSchema {
    /// Validates name uniqueness and counts.
    pub fn validate(&self) -> Result<()> {
        if self.intervals < 1 {
            return Err(Error::config("intervals must be >= 1"));
        }
        if self.interval_length_days < 1 {
            return Err(Error::config("interval_length_days must be >= 1"));
        }
        if self.exposure_nodes.is_empty() {
            return Err(Error::config("at least one exposure node is required"));
        }
        let mut names: Vec<&str> = Vec::new();
        names.extend(self.baseline_nodes.iter().map(|s| s.as_str()));
        names.extend(self.covariate_nodes.iter().map(|s| s.as_str()));
        names.push(&self.outcome_node);
        names.push(&self.competing_node);
        names.push(&self.censor_node);
        names.extend(self.exposure_nodes.iter().map(|s| s.as_str()));
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::config("node names must be unique across all roles"));
        }
        Ok(())
    }

    /// K: the number of exposure/censoring blocks (`intervals` - 1).
    pub fn treatment_intervals(&self) -> usize {
        self.intervals - 1
    }

    pub fn n_baseline(&self) -> usize {
        self.baseline_nodes.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_nodes.len()
    }

    pub fn n_exposures(&self) -> usize {
        self.exposure_nodes.len()
    }

    fn l_block_width(&self) -> usize {
        self.n_covariates() + 2
    }

    fn a_block_width(&self) -> usize {
        self.n_exposures() + 1
    }

    /// Total number of columns in the wide value matrix.
    pub fn n_columns(&self) -> usize {
        self.n_baseline()
            + self.intervals * self.l_block_width()
            + self.treatment_intervals() * self.a_block_width()
    }

    fn l_block_start(&self, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.intervals);
        self.n_baseline() + (t - 1) * (self.l_block_width() + self.a_block_width())
    }

    /// Column index of a node position.
    pub fn column(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Baseline(j) => j,
            NodeRef::Covariate(j, t) => self.l_block_start(t) + j,
            NodeRef::Outcome(t) => self.l_block_start(t) + self.n_covariates(),
            NodeRef::Competing(t) => self.l_block_start(t) + self.n_covariates() + 1,
            NodeRef::Exposure(j, t) => {
                debug_assert!(t <= self.treatment_intervals());
                self.l_block_start(t) + self.l_block_width() + j
            }
            NodeRef::Censor(t) => {
                debug_assert!(t <= self.treatment_intervals());
                self.l_block_start(t) + self.l_block_width() + self.n_exposures()
            }
        }
    }

    /// All node positions in temporal (generation/column) order.
    pub fn node_order(&self) -> Vec<NodeRef> {
        let mut order = Vec::with_capacity(self.n_columns());
        for j in 0..self.n_baseline() {
            order.push(NodeRef::Baseline(j));
        }
        for t in 1..=self.intervals {
            for j in 0..self.n_covariates() {
                order.push(NodeRef::Covariate(j, t));
            }
            order.push(NodeRef::Outcome(t));
            order.push(NodeRef::Competing(t));
            if t <= self.treatment_intervals() {
                for j in 0..self.n_exposures() {
                    order.push(NodeRef::Exposure(j, t));
                }
                order.push(NodeRef::Censor(t));
            }
        }
        order
    }

    /// Column header for a node position: `<node>` for baseline nodes,
    /// `<node>_t<t>` for time-varying ones.
    pub fn column_name(&self, node: NodeRef) -> String {
        match node {
            NodeRef::Baseline(j) => self.baseline_nodes[j].clone(),
            NodeRef::Covariate(j, t) => format!("{}_t{}", self.covariate_nodes[j], t),
            NodeRef::Outcome(t) => format!("{}_t{}", self.outcome_node, t),
            NodeRef::Competing(t) => format!("{}_t{}", self.competing_node, t),
            NodeRef::Exposure(j, t) => format!("{}_t{}", self.exposure_nodes[j], t),
            NodeRef::Censor(t) => format!("{}_t{}", self.censor_node, t),
        }
    }

    /// All column headers in column order.
    pub fn column_names(&self) -> Vec<String> {
        self.node_order().iter().map(|&n| self.column_name(n)).collect()
    }

    /// Reads a schema from its JSON sidecar representation.
    pub fn from_json(text: &str) -> Result<NodeSchema> {
        let schema: NodeSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn toy_schema() -> NodeSchema {
        NodeSchema {
            baseline_nodes: vec!["w1".into(), "w2".into()],
            intervals: 3,
            interval_length_days: 182,
            covariate_nodes: vec!["l1".into()],
            outcome_node: "y".into(),
            competing_node: "d".into(),
            censor_node: "c".into(),
            exposure_nodes: vec!["a1".into()],
        }
    }

    #[test]
    fn column_layout_is_dense_and_ordered() {
        let s = toy_schema();
        s.validate().unwrap();
        // 2 baseline + 3 L-blocks of (1 cov + Y + D) + 2 A-blocks of (1 exp + C)
        assert_eq!(s.n_columns(), 2 + 3 * 3 + 2 * 2);
        let order = s.node_order();
        assert_eq!(order.len(), s.n_columns());
        for (i, node) in order.iter().enumerate() {
            assert_eq!(s.column(*node), i);
        }
        assert_eq!(s.column_name(NodeRef::Baseline(0)), "w1");
        assert_eq!(s.column_name(NodeRef::Covariate(0, 2)), "l1_t2");
        assert_eq!(s.column_name(NodeRef::Censor(1)), "c_t1");
    }

    #[test]
    fn last_interval_has_no_treatment_block() {
        let s = toy_schema();
        let names = s.column_names();
        assert!(names.contains(&"a1_t2".to_string()));
        assert!(!names.contains(&"a1_t3".to_string()));
        assert!(!names.contains(&"c_t3".to_string()));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = toy_schema();
        s.covariate_nodes = vec!["w1".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn schema_json_round_trip() {
        let s = toy_schema();
        let text = s.to_json();
        let back = NodeSchema::from_json(&text).unwrap();
        assert_eq!(s, back);
    }
}
