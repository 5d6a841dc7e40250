//! Design matrices over node histories.
//!
//! A regression at a given node position conditions on everything strictly
//! before it. Small-integer coded columns are expanded to reference-coded
//! indicators; columns that are constant or duplicated within the training
//! stratum are dropped. The surviving column recipe is kept so evaluation
//! rows are expanded identically.

use crate::dataset::ObservedDataset;
use crate::error::{Error, Result};
use crate::schema::NodeRef;

/// Dense row-major predictor matrix (intercept implicit).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub n: usize,
    pub p: usize,
    data: Vec<f64>,
    pub names: Vec<String>,
}

impl DesignMatrix {
    pub fn from_rows(data: Vec<f64>, n: usize, p: usize, names: Vec<String>) -> Result<Self> {
        if data.len() != n * p || names.len() != p {
            return Err(Error::structural("design matrix dimensions inconsistent"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("design matrix contains non-finite values"));
        }
        Ok(DesignMatrix { n, p, data, names })
    }

    /// Intercept-only design (no predictor columns).
    pub fn intercept_only(n: usize) -> Self {
        DesignMatrix { n, p: 0, data: Vec::new(), names: Vec::new() }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.get(i, j))
    }

    /// Checks that another matrix was built with the same column recipe.
    pub fn columns_match(&self, other: &DesignMatrix) -> bool {
        self.names == other.names
    }
}

/// One expanded predictor: an indicator for `node == level` (plain 0/1
/// columns use level 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ExpandedColumn {
    node: NodeRef,
    level: u8,
}

/// Frozen column recipe: which (node, level) indicators enter the design.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    columns: Vec<ExpandedColumn>,
    names: Vec<String>,
    /// Raw source nodes, kept for pattern-keyed (saturated) learners.
    sources: Vec<NodeRef>,
}

impl DesignSpec {
    /// Derives the recipe from a history and a training stratum: expand
    /// coded columns to indicators, then drop constants and duplicates as
    /// observed within `train_rows`.
    pub fn from_history(
        data: &ObservedDataset,
        history: &[NodeRef],
        train_rows: &[usize],
    ) -> DesignSpec {
        let mut columns = Vec::new();
        let mut names = Vec::new();
        let mut seen: Vec<Vec<u8>> = Vec::new();
        for &node in history {
            let max_level = (0..data.n).map(|i| data.value(i, node)).max().unwrap_or(0);
            let levels: Vec<u8> = if max_level <= 1 { vec![1] } else { (1..=max_level).collect() };
            for level in levels {
                let col: Vec<u8> = train_rows
                    .iter()
                    .map(|&i| (data.value(i, node) == level) as u8)
                    .collect();
                let first = col.first().copied().unwrap_or(0);
                if col.iter().all(|&v| v == first) {
                    continue; // constant within the stratum
                }
                if seen.contains(&col) {
                    continue; // duplicate of an earlier expanded column
                }
                let name = if max_level <= 1 {
                    data.schema.column_name(node)
                } else {
                    format!("{}={}", data.schema.column_name(node), level)
                };
                seen.push(col);
                columns.push(ExpandedColumn { node, level });
                names.push(name);
            }
        }
        DesignSpec { columns, names, sources: history.to_vec() }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Materializes the design for an arbitrary row set.
    pub fn matrix(&self, data: &ObservedDataset, rows: &[usize]) -> DesignMatrix {
        let p = self.columns.len();
        let mut out = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            for c in &self.columns {
                out.push((data.value(i, c.node) == c.level) as u8 as f64);
            }
        }
        DesignMatrix { n: rows.len(), p, data: out, names: self.names.clone() }
    }

    /// Raw (unexpanded) source values for pattern-keyed learners.
    pub fn raw_patterns(&self, data: &ObservedDataset, rows: &[usize]) -> Vec<Vec<u8>> {
        rows.iter()
            .map(|&i| self.sources.iter().map(|&node| data.value(i, node)).collect())
            .collect()
    }
}
