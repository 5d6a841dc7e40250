//! Observed longitudinal dataset: storage, invariant validation, last-value-
//! carried-forward completion, and the adherence / at-risk indicators shared
//! by all estimators.
//!
//! Conventions:
//!
//! - Outcome, competing event, and censoring are absorbing: once 1, always 1.
//! - After the first interval in which any of the three fires, every node is
//!   frozen at its value from that interval (LVCF).
//! - Within an interval the outcome precedes the competing event, so the two
//!   never first fire together; a subject with both in one interval is an
//!   outcome case.
//! - Terminal outcome/competing events freeze adherence: exposure values
//!   recorded after the event are padding and never disqualify a subject.
//!   Censoring does not freeze adherence; the regimes of interest prevent it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::regime::Regime;
use crate::schema::{NodeRef, NodeSchema};

/// Which terminal process fired first for a subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Outcome,
    Competing,
    Censor,
}

/// A single invariant violation found by [`ObservedDataset::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: usize,
    pub node: String,
    pub interval: usize,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "subject {} node {} interval {}: {}",
            self.subject, self.node, self.interval, self.message
        )
    }
}

/// Wide person-interval table of node values in schema column order.
///
/// Immutable after construction; cheap to share across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    pub schema: NodeSchema,
    pub n: usize,
    values: Vec<u8>,
}

impl ObservedDataset {
    /// Wraps a value matrix, checking dimensions only (invariants are the
    /// business of [`validate`](Self::validate)).
    pub fn new(schema: NodeSchema, n: usize, values: Vec<u8>) -> Result<Self> {
        schema.validate()?;
        let expect = n * schema.n_columns();
        if values.len() != expect {
            return Err(Error::structural(format!(
                "value matrix has {} cells, expected {} ({} subjects x {} columns)",
                values.len(),
                expect,
                n,
                schema.n_columns()
            )));
        }
        Ok(ObservedDataset { schema, n, values })
    }

    #[inline]
    pub fn value_at(&self, subject: usize, column: usize) -> u8 {
        self.values[subject * self.schema.n_columns() + column]
    }

    #[inline]
    pub fn value(&self, subject: usize, node: NodeRef) -> u8 {
        self.value_at(subject, self.schema.column(node))
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn row(&self, subject: usize) -> &[u8] {
        let w = self.schema.n_columns();
        &self.values[subject * w..(subject + 1) * w]
    }

    /// First interval at which a terminal process fires, with within-interval
    /// precedence outcome > competing > censor. `None` if fully event-free.
    pub fn first_event(&self, subject: usize) -> Option<(usize, EventKind)> {
        for t in 1..=self.schema.intervals {
            if self.value(subject, NodeRef::Outcome(t)) != 0 {
                return Some((t, EventKind::Outcome));
            }
            if self.value(subject, NodeRef::Competing(t)) != 0 {
                return Some((t, EventKind::Competing));
            }
            if t <= self.schema.treatment_intervals()
                && self.value(subject, NodeRef::Censor(t)) != 0
            {
                return Some((t, EventKind::Censor));
            }
        }
        None
    }

    /// 1 iff the subject followed the regime (exposures match, no censoring)
    /// at every treatment block through `t`, or had a terminal outcome or
    /// competing event while still adherent. `t` in 1..=K.
    pub fn adherent_at(&self, subject: usize, regime: &Regime, t: usize) -> bool {
        debug_assert!(t >= 1 && t <= self.schema.treatment_intervals());
        let stop = match self.first_event(subject) {
            Some((e, EventKind::Outcome)) | Some((e, EventKind::Competing)) if e <= t => e - 1,
            _ => t,
        };
        for s in 1..=stop {
            for j in 0..self.schema.n_exposures() {
                if self.value(subject, NodeRef::Exposure(j, s)) != regime.assignment(j, s) {
                    return false;
                }
            }
            if self.value(subject, NodeRef::Censor(s)) != 0 {
                return false;
            }
        }
        true
    }

    /// Per-subject adherence indicators at treatment block `t` (1..=K).
    pub fn adherence_indicator(&self, regime: &Regime, t: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.adherent_at(i, regime, t) as u8).collect()
    }

    /// 1 iff the subject is still at risk at the treatment block of interval
    /// `t`: event-free through the covariate/outcome block of `t` and
    /// uncensored strictly before `t`. `t` in 1..=intervals.
    pub fn at_risk_at(&self, subject: usize, t: usize) -> bool {
        debug_assert!(t >= 1 && t <= self.schema.intervals);
        if self.value(subject, NodeRef::Outcome(t)) != 0
            || self.value(subject, NodeRef::Competing(t)) != 0
        {
            return false;
        }
        for s in 1..t {
            if self.value(subject, NodeRef::Outcome(s)) != 0
                || self.value(subject, NodeRef::Competing(s)) != 0
                || self.value(subject, NodeRef::Censor(s)) != 0
            {
                return false;
            }
        }
        true
    }

    /// Per-subject at-risk indicators at interval `t`.
    pub fn at_risk_indicator(&self, t: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.at_risk_at(i, t) as u8).collect()
    }

    /// Event-free and uncensored strictly before the covariate block of `t`;
    /// the stratum in which interval-`t` covariates are generated.
    pub fn at_risk_before_lblock(&self, subject: usize, t: usize) -> bool {
        for s in 1..t {
            if self.value(subject, NodeRef::Outcome(s)) != 0
                || self.value(subject, NodeRef::Competing(s)) != 0
                || self.value(subject, NodeRef::Censor(s)) != 0
            {
                return false;
            }
        }
        true
    }

    /// Checks every dataset invariant, returning one entry per violation.
    /// An empty report means the dataset is internally consistent.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        let schema = &self.schema;
        let order = schema.node_order();
        for i in 0..self.n {
            // 0/1 range for event and exposure nodes
            for &node in &order {
                let v = self.value(i, node);
                let binary = matches!(
                    node,
                    NodeRef::Outcome(_)
                        | NodeRef::Competing(_)
                        | NodeRef::Censor(_)
                        | NodeRef::Exposure(_, _)
                );
                if binary && v > 1 {
                    report.push(Violation {
                        subject: i,
                        node: schema.column_name(node),
                        interval: node_interval(node),
                        message: format!("value {v} outside {{0,1}}"),
                    });
                }
            }
            // absorbing (monotone non-decreasing) event processes
            for t in 2..=schema.intervals {
                for (name, prev, cur) in [
                    (
                        "outcome",
                        self.value(i, NodeRef::Outcome(t - 1)),
                        self.value(i, NodeRef::Outcome(t)),
                    ),
                    (
                        "competing event",
                        self.value(i, NodeRef::Competing(t - 1)),
                        self.value(i, NodeRef::Competing(t)),
                    ),
                ] {
                    if cur < prev {
                        report.push(Violation {
                            subject: i,
                            node: name.to_string(),
                            interval: t,
                            message: format!("{name} not absorbing at t={t}"),
                        });
                    }
                }
            }
            for t in 2..=schema.treatment_intervals() {
                if self.value(i, NodeRef::Censor(t)) < self.value(i, NodeRef::Censor(t - 1)) {
                    report.push(Violation {
                        subject: i,
                        node: "censoring".to_string(),
                        interval: t,
                        message: format!("censoring not absorbing at t={t}"),
                    });
                }
            }
            // outcome/competing first occurrence must not coincide
            let mut y_prev = 0u8;
            let mut d_prev = 0u8;
            for t in 1..=schema.intervals {
                let y = self.value(i, NodeRef::Outcome(t));
                let d = self.value(i, NodeRef::Competing(t));
                if y > y_prev && d > d_prev {
                    report.push(Violation {
                        subject: i,
                        node: "competing event".to_string(),
                        interval: t,
                        message: format!(
                            "outcome and competing event first occur together at t={t}"
                        ),
                    });
                }
                y_prev = y;
                d_prev = d;
            }
            // LVCF: every node frozen after the first event interval
            if let Some((e, _)) = self.first_event(i) {
                for &node in &order {
                    let t = node_interval(node);
                    if t <= e || matches!(node, NodeRef::Baseline(_)) {
                        continue;
                    }
                    let frozen = self.value(i, with_interval(node, e));
                    if self.value(i, node) != frozen {
                        report.push(Violation {
                            subject: i,
                            node: schema.column_name(node),
                            interval: t,
                            message: format!("LVCF broken: expected {frozen} after event at t={e}"),
                        });
                    }
                }
            }
        }
        report
    }

    /// Gathers subject rows by index into a new dataset (bootstrap resample).
    pub fn take_rows(&self, indices: &[usize]) -> ObservedDataset {
        let w = self.schema.n_columns();
        let mut values = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        ObservedDataset { schema: self.schema.clone(), n: indices.len(), values }
    }

    /// Writes the wide CSV (header = schema column names, one row/subject).
    pub fn write_wide_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.schema.column_names())?;
        let mut record = csv::StringRecord::new();
        let mut buf = [0u8; 3];
        for i in 0..self.n {
            record.clear();
            for &v in self.row(i) {
                record.push_field(format_u8(v, &mut buf));
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a wide CSV against a schema. Accepts columns in any order but
    /// requires the header to carry exactly the schema's column names.
    pub fn read_wide_csv<R: std::io::Read>(schema: NodeSchema, reader: R) -> Result<Self> {
        schema.validate()?;
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let names = schema.column_names();
        let mut position: HashMap<&str, usize> = HashMap::with_capacity(header.len());
        for (idx, field) in header.iter().enumerate() {
            if position.insert(field, idx).is_some() {
                return Err(Error::structural(format!("duplicate CSV column '{field}'")));
            }
        }
        let mut source = Vec::with_capacity(names.len());
        for name in &names {
            match position.get(name.as_str()) {
                Some(&idx) => source.push(idx),
                None => return Err(Error::structural(format!("CSV missing column '{name}'"))),
            }
        }
        if header.len() != names.len() {
            return Err(Error::structural(format!(
                "CSV has {} columns, schema declares {}",
                header.len(),
                names.len()
            )));
        }
        let mut values = Vec::new();
        let mut n = 0usize;
        for record in rdr.records() {
            let record = record?;
            for &idx in &source {
                let field = record.get(idx).ok_or_else(|| {
                    Error::structural(format!("row {n} is shorter than the header"))
                })?;
                let v: u8 = field.trim().parse().map_err(|_| {
                    Error::data(format!("row {n}: cannot parse '{field}' as a small integer"))
                })?;
                values.push(v);
            }
            n += 1;
        }
        ObservedDataset::new(schema, n, values)
    }
}

fn node_interval(node: NodeRef) -> usize {
    match node {
        NodeRef::Baseline(_) => 0,
        NodeRef::Covariate(_, t)
        | NodeRef::Outcome(t)
        | NodeRef::Competing(t)
        | NodeRef::Exposure(_, t)
        | NodeRef::Censor(t) => t,
    }
}

fn with_interval(node: NodeRef, t: usize) -> NodeRef {
    match node {
        NodeRef::Baseline(j) => NodeRef::Baseline(j),
        NodeRef::Covariate(j, _) => NodeRef::Covariate(j, t),
        NodeRef::Outcome(_) => NodeRef::Outcome(t),
        NodeRef::Competing(_) => NodeRef::Competing(t),
        NodeRef::Exposure(j, _) => NodeRef::Exposure(j, t),
        NodeRef::Censor(_) => NodeRef::Censor(t),
    }
}

/// Allocation-free decimal formatting for cell values.
fn format_u8(v: u8, buf: &mut [u8; 3]) -> &str {
    let mut len = 0;
    let mut n = v;
    loop {
        buf[len] = b'0' + n % 10;
        len += 1;
        n /= 10;
        if n == 0 {
            break;
        }
    }
    buf[..len].reverse();
    std::str::from_utf8(&buf[..len]).expect("digits are ascii")
}

/// Raw person-interval table that may have missing cells after terminal
/// events; [`apply_lvcf`] completes it into an [`ObservedDataset`].
#[derive(Debug, Clone)]
pub struct RawTable {
    pub schema: NodeSchema,
    pub n: usize,
    pub cells: Vec<Option<u8>>,
}

impl RawTable {
    pub fn from_dataset(data: &ObservedDataset) -> RawTable {
        RawTable {
            schema: data.schema.clone(),
            n: data.n,
            cells: data.values().iter().map(|&v| Some(v)).collect(),
        }
    }

    #[inline]
    fn get(&self, subject: usize, column: usize) -> Option<u8> {
        self.cells[subject * self.schema.n_columns() + column]
    }
}

/// Completes a raw table under the last-value-carried-forward convention:
/// every cell after a subject's first terminal event is overwritten with the
/// node's value at the event interval. Missing cells are only tolerated at or
/// after the event; a hole before any terminal event is an error.
///
/// Cells missing within the event interval itself (positions after the event
/// node) take the node's previous-interval value, or 0 at the first interval.
pub fn apply_lvcf(raw: &RawTable) -> Result<ObservedDataset> {
    let schema = &raw.schema;
    schema.validate()?;
    let w = schema.n_columns();
    if raw.cells.len() != raw.n * w {
        return Err(Error::structural(format!(
            "raw table has {} cells, expected {}",
            raw.cells.len(),
            raw.n * w
        )));
    }
    let order = schema.node_order();
    let mut values = vec![0u8; raw.n * w];
    for i in 0..raw.n {
        // locate the first event from observed cells, scanning temporally
        let mut event: Option<(usize, usize)> = None; // (interval, column)
        'scan: for t in 1..=schema.intervals {
            let mut probes = vec![NodeRef::Outcome(t), NodeRef::Competing(t)];
            if t <= schema.treatment_intervals() {
                probes.push(NodeRef::Censor(t));
            }
            for node in probes {
                let col = schema.column(node);
                match raw.get(i, col) {
                    Some(1) => {
                        event = Some((t, col));
                        break 'scan;
                    }
                    Some(_) => {}
                    None => {
                        return Err(Error::data(format!(
                            "subject {i}: non-terminal missingness unsupported ({} missing \
                             before any terminal event)",
                            schema.column_name(node)
                        )))
                    }
                }
            }
        }
        for &node in &order {
            let col = schema.column(node);
            let t = node_interval(node);
            let freeze_from = event.map(|(e, _)| e);
            let post_event_interval = freeze_from.map_or(false, |e| t > e);
            let v = if matches!(node, NodeRef::Baseline(_)) || !post_event_interval {
                match raw.get(i, col) {
                    Some(v) => v,
                    None => {
                        // missing at the event interval, after the event node
                        let within_event_tail = match event {
                            Some((e, ecol)) => t == e && col > ecol,
                            None => false,
                        };
                        if !within_event_tail {
                            return Err(Error::data(format!(
                                "subject {i}: non-terminal missingness unsupported \
                                 ({} missing before any terminal event)",
                                schema.column_name(node)
                            )));
                        }
                        if t > 1 {
                            values[i * w + schema.column(with_interval(node, t - 1))]
                        } else {
                            0
                        }
                    }
                }
            } else {
                // frozen: copy the node's value from the event interval
                let e = freeze_from.unwrap();
                values[i * w + schema.column(with_interval(node, e))]
            };
            values[i * w + col] = v;
        }
    }
    ObservedDataset::new(schema.clone(), raw.n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> NodeSchema {
        NodeSchema {
            baseline_nodes: vec!["w".into()],
            intervals: 3,
            interval_length_days: 182,
            covariate_nodes: vec!["l".into()],
            outcome_node: "y".into(),
            competing_node: "d".into(),
            censor_node: "c".into(),
            exposure_nodes: vec!["a".into()],
        }
    }

    /// Builds a dataset from per-subject (node -> values) shorthand.
    fn build(rows: &[&[u8]]) -> ObservedDataset {
        let s = schema();
        let values: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ObservedDataset::new(s, rows.len(), values).unwrap()
    }

    // Column order for the test schema:
    // w | l1 y1 d1 a1 c1 | l2 y2 d2 a2 c2 | l3 y3 d3

    #[test]
    fn all_zero_dataset_is_valid() {
        let data = build(&[&[0; 14]]);
        assert!(data.validate().is_empty());
    }

    #[test]
    fn non_absorbing_outcome_is_reported() {
        // y = (0, 1, 0)
        let data = build(&[&[0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0]]);
        let report = data.validate();
        assert!(
            report.iter().any(|v| v.message.contains("outcome not absorbing at t=3")),
            "{report:?}"
        );
    }

    #[test]
    fn post_event_covariate_change_is_lvcf_violation() {
        // death at t=2 with l=1 there, l flips to 0 at t=3
        let data = build(&[&[0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1]]);
        let report = data.validate();
        assert!(report.iter().any(|v| v.message.contains("LVCF broken")), "{report:?}");
    }

    #[test]
    fn joint_first_occurrence_of_outcome_and_competing_is_reported() {
        let data = build(&[&[0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 1]]);
        let report = data.validate();
        assert!(report.iter().any(|v| v.message.contains("first occur together")), "{report:?}");
    }

    #[test]
    fn lvcf_fills_after_death() {
        let s = schema();
        // observed through death at t=2 (l=1 at t=2); later cells missing
        let cells: Vec<Option<u8>> = vec![
            Some(0), // w
            Some(0),
            Some(0),
            Some(0),
            Some(1),
            Some(0), // t=1: l y d a c
            Some(1),
            Some(0),
            Some(1),
            None,
            None, // t=2: died; a, c unrecorded
            None,
            None,
            None, // t=3 all missing
        ];
        let raw = RawTable { schema: s, n: 1, cells };
        let data = apply_lvcf(&raw).unwrap();
        assert_eq!(data.value(0, NodeRef::Covariate(0, 3)), 1);
        assert_eq!(data.value(0, NodeRef::Competing(3)), 1);
        // a(2) filled from a(1)=1; frozen thereafter
        assert_eq!(data.value(0, NodeRef::Exposure(0, 2)), 1);
        assert!(data.validate().is_empty());
    }

    #[test]
    fn lvcf_identity_when_fully_observed() {
        let data = build(&[&[1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0]]);
        let raw = RawTable::from_dataset(&data);
        let out = apply_lvcf(&raw).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn lvcf_freezes_everything_after_first_censoring() {
        let s = schema();
        let mut cells: Vec<Option<u8>> = vec![Some(0); 14];
        cells[5] = Some(1); // c(1) = 1
        cells[6] = None; // l(2) missing
        cells[13] = None;
        let raw = RawTable { schema: s, n: 1, cells };
        let data = apply_lvcf(&raw).unwrap();
        assert_eq!(data.value(0, NodeRef::Censor(2)), 1);
        assert_eq!(data.value(0, NodeRef::Covariate(0, 2)), 0);
        assert!(data.validate().is_empty());
    }

    #[test]
    fn missing_before_event_is_an_error() {
        let s = schema();
        let mut cells: Vec<Option<u8>> = vec![Some(0); 14];
        cells[1] = None; // l(1) missing, no event anywhere
        let raw = RawTable { schema: s, n: 1, cells };
        let err = apply_lvcf(&raw).unwrap_err();
        assert!(err.to_string().contains("non-terminal missingness"));
    }

    #[test]
    fn adherence_and_freezing() {
        let s = schema();
        let regime = Regime::sustained(&s, &[1]);
        // subject 0: a=(1,1), no events -> adherent at both blocks
        // subject 1: a=(1,0), no events -> breaks at t=2
        // subject 2: outcome at t=1, a(1)=1 recorded, a(2)=1 padding -> frozen adherent
        // subject 3: censored at t=1 -> not adherent
        let data = build(&[
            &[0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            &[0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0],
            &[0, 0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0],
        ]);
        assert_eq!(data.adherence_indicator(&regime, 1), vec![1, 1, 1, 1]);
        assert_eq!(data.adherence_indicator(&regime, 2), vec![1, 0, 1, 0]);
    }

    #[test]
    fn event_freezes_adherence_even_when_padding_disagrees() {
        let s = schema();
        let regime = Regime::sustained(&s, &[1]);
        // outcome at t=1; exposure padding at later blocks is 0 (disagrees with regime)
        let data = build(&[&[0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0]]);
        assert_eq!(data.adherence_indicator(&regime, 2), vec![1]);
    }

    #[test]
    fn at_risk_monotone_and_events() {
        let data = build(&[
            &[0; 14],                                      // never any event
            &[0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1],  // death at t=2
            &[0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0],  // censored at t=1
        ]);
        assert_eq!(data.at_risk_indicator(1), vec![1, 1, 1]);
        assert_eq!(data.at_risk_indicator(2), vec![1, 0, 0]);
        assert_eq!(data.at_risk_indicator(3), vec![1, 0, 0]);
    }

    #[test]
    fn wide_csv_round_trip() {
        let data = build(&[
            &[1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0],
            &[0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0],
        ]);
        let mut buf = Vec::new();
        data.write_wide_csv(&mut buf).unwrap();
        let back = ObservedDataset::read_wide_csv(data.schema.clone(), buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_missing_column_is_structural_error() {
        let data = build(&[&[0; 14]]);
        let mut buf = Vec::new();
        data.write_wide_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("l_t3", "zzz");
        let err = ObservedDataset::read_wide_csv(data.schema.clone(), text.as_bytes());
        assert!(matches!(err, Err(Error::Structural(_))));
    }
}
