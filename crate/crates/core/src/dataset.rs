//! Binary event matrices: ingestion, validation and empirical probabilities.
//!
//! Columns are stored as packed bitsets so that marginal and joint counts are
//! popcounts. Probabilities are integer counts divided by the number of rows
//! at the last step.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column position of an event inside a [`GenotypeMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId(pub usize);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub const DEFAULT_KIND: &str = "event";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMeta {
    pub label: String,
    pub kind: String,
}

impl EventMeta {
    pub fn new(label: impl Into<String>, kind: impl Into<String>) -> Self {
        EventMeta {
            label: label.into(),
            kind: kind.into(),
        }
    }

    /// Plain event with the default kind.
    pub fn plain(label: impl Into<String>) -> Self {
        Self::new(label, DEFAULT_KIND)
    }

    /// Parses a header cell: `kind:label` splits on the first colon, a bare
    /// label gets the default kind.
    pub fn parse_header(cell: &str) -> Self {
        match cell.split_once(':') {
            Some((kind, label)) => Self::new(label.trim(), kind.trim()),
            None => Self::plain(cell.trim()),
        }
    }

    /// Inverse of [`EventMeta::parse_header`].
    pub fn header(&self) -> String {
        if self.kind == DEFAULT_KIND {
            self.label.clone()
        } else {
            format!("{}:{}", self.kind, self.label)
        }
    }
}

impl fmt::Display for EventMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.header())
    }
}

/// Fixed-length packed bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitColumn {
    words: Vec<u64>,
    len: usize,
}

impl BitColumn {
    pub fn zeros(len: usize) -> Self {
        BitColumn {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                *words.last_mut().unwrap() |= 1 << (len % 64);
            }
            len += 1;
        }
        BitColumn { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions set in both columns.
    pub fn and_count(&self, other: &BitColumn) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn and(&self, other: &BitColumn) -> BitColumn {
        BitColumn {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

/// An `m x n` binary grid of samples by events, with event metadata.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    samples: Vec<String>,
    events: Vec<EventMeta>,
    columns: Vec<BitColumn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Tsv,
}

impl MatrixFormat {
    fn delimiter(self) -> u8 {
        match self {
            MatrixFormat::Csv => b',',
            MatrixFormat::Tsv => b'\t',
        }
    }
}

impl GenotypeMatrix {
    pub fn new(samples: Vec<String>, events: Vec<EventMeta>, columns: Vec<BitColumn>) -> Result<Self> {
        if samples.is_empty() || events.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if columns.len() != events.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} event labels for {} columns",
                events.len(),
                columns.len()
            )));
        }
        if let Some(col) = columns.iter().find(|c| c.len() != samples.len()) {
            return Err(Error::SchemaMismatch(format!(
                "column of length {} in a matrix with {} samples",
                col.len(),
                samples.len()
            )));
        }
        let mut seen = HashSet::new();
        for meta in &events {
            if meta.label.is_empty() {
                return Err(Error::InvalidParameter("empty event label".into()));
            }
            if !seen.insert((meta.kind.as_str(), meta.label.as_str())) {
                return Err(Error::DuplicateLabel(meta.header()));
            }
        }
        Ok(GenotypeMatrix {
            samples,
            events,
            columns,
        })
    }

    /// Builds a matrix from row-major 0/1 cells.
    pub fn from_rows(samples: Vec<String>, events: Vec<EventMeta>, rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if samples.len() != rows.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} sample ids for {} rows",
                samples.len(),
                rows.len()
            )));
        }
        let n = events.len();
        let mut columns = vec![BitColumn::zeros(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::RaggedRow {
                    row: r,
                    expected: n,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => columns[c].set(r, true),
                    _ => {
                        return Err(Error::NonBinaryCell {
                            row: r,
                            column: c,
                            value: v.to_string(),
                        })
                    }
                }
            }
        }
        Self::new(samples, events, columns)
    }

    /// Convenience constructor with generated sample ids and plain labels.
    pub fn from_bits(labels: &[&str], rows: &[Vec<u8>]) -> Result<Self> {
        let samples = (0..rows.len()).map(|i| format!("s{}", i + 1)).collect();
        let events = labels.iter().map(|l| EventMeta::plain(*l)).collect();
        Self::from_rows(samples, events, rows)
    }

    /// Reads a delimited matrix: header row of event labels, first column
    /// sample ids, cells literal `0`/`1`.
    pub fn import<R: Read>(reader: R, format: MatrixFormat) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(format.delimiter())
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::EmptyMatrix),
        };
        if header.len() < 2 {
            return Err(Error::EmptyMatrix);
        }
        let events: Vec<EventMeta> = header.iter().skip(1).map(EventMeta::parse_header).collect();
        let n = events.len();
        let mut samples = Vec::new();
        let mut rows = Vec::new();
        for (r, record) in records.enumerate() {
            let record = record?;
            if record.len() == 1 && record[0].trim().is_empty() {
                continue;
            }
            if record.len() != n + 1 {
                return Err(Error::RaggedRow {
                    row: r,
                    expected: n,
                    found: record.len().saturating_sub(1),
                });
            }
            samples.push(record[0].trim().to_string());
            let mut row = Vec::with_capacity(n);
            for (c, cell) in record.iter().skip(1).enumerate() {
                row.push(match cell.trim() {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::NonBinaryCell {
                            row: r,
                            column: c,
                            value: other.to_string(),
                        })
                    }
                });
            }
            rows.push(row);
        }
        Self::from_rows(samples, events, &rows)
    }

    pub fn import_str(text: &str, format: MatrixFormat) -> Result<Self> {
        Self::import(text.as_bytes(), format)
    }

    pub fn export<W: Write>(&self, writer: W, format: MatrixFormat) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .delimiter(format.delimiter())
            .from_writer(writer);
        let mut header = vec!["sample".to_string()];
        header.extend(self.events.iter().map(EventMeta::header));
        wtr.write_record(&header)?;
        for r in 0..self.n_samples() {
            let mut record = vec![self.samples[r].clone()];
            record.extend(self.columns.iter().map(|c| if c.get(r) { "1" } else { "0" }.to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn samples(&self) -> &[String] {
        &self.samples
    }

    pub fn events(&self) -> &[EventMeta] {
        &self.events
    }

    pub fn event_ids(&self) -> impl Iterator<Item = EventId> {
        (0..self.n_events()).map(EventId)
    }

    pub fn meta(&self, e: EventId) -> Result<&EventMeta> {
        self.events.get(e.0).ok_or_else(|| Error::UnknownEvent(e.to_string()))
    }

    pub fn column(&self, e: EventId) -> &BitColumn {
        &self.columns[e.0]
    }

    pub fn columns(&self) -> &[BitColumn] {
        &self.columns
    }

    #[inline]
    pub fn bit(&self, row: usize, e: EventId) -> bool {
        self.columns[e.0].get(row)
    }

    pub fn row(&self, r: usize) -> Vec<bool> {
        self.columns.iter().map(|c| c.get(r)).collect()
    }

    /// Looks an event up by `kind:label` or, when unambiguous, by bare label.
    pub fn find(&self, name: &str) -> Result<EventId> {
        if name.contains(':') {
            let qualified = EventMeta::parse_header(name);
            if let Some(i) = self.events.iter().position(|m| *m == qualified) {
                return Ok(EventId(i));
            }
        }
        let mut hits = self.events.iter().enumerate().filter(|(_, m)| m.label == name);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(EventId(i)),
            (Some(_), Some(_)) => Err(Error::AmbiguousEvent(name.to_string())),
            _ => Err(Error::UnknownEvent(name.to_string())),
        }
    }

    fn check(&self, e: EventId) -> Result<()> {
        if e.0 < self.n_events() {
            Ok(())
        } else {
            Err(Error::UnknownEvent(e.to_string()))
        }
    }

    pub fn count(&self, e: EventId) -> usize {
        self.columns[e.0].count_ones()
    }

    pub fn joint_count(&self, a: EventId, b: EventId) -> usize {
        self.columns[a.0].and_count(&self.columns[b.0])
    }

    pub fn marginal(&self, e: EventId) -> Result<f64> {
        self.check(e)?;
        Ok(self.count(e) as f64 / self.n_samples() as f64)
    }

    pub fn joint(&self, a: EventId, b: EventId) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.joint_count(a, b) as f64 / self.n_samples() as f64)
    }

    /// `P(e | given)`, or `P(e | not given)` when `given_negated`.
    pub fn conditional(&self, e: EventId, given: EventId, given_negated: bool) -> Result<f64> {
        self.check(e)?;
        self.check(given)?;
        let joint = self.joint_count(e, given);
        let given_count = self.count(given);
        let (num, den) = if given_negated {
            (self.count(e) - joint, self.n_samples() - given_count)
        } else {
            (joint, given_count)
        };
        if den == 0 {
            return Err(Error::UndefinedConditional(self.events[given.0].header()));
        }
        Ok(num as f64 / den as f64)
    }

    /// Lists degenerate columns and identical-column and identical-row groups.
    pub fn consolidate(&self) -> ConsolidationReport {
        let m = self.n_samples();
        let degenerate = self
            .event_ids()
            .filter_map(|e| match self.count(e) {
                0 => Some((e, 0.0)),
                c if c == m => Some((e, 1.0)),
                _ => None,
            })
            .collect();

        let mut by_column: BTreeMap<usize, Vec<EventId>> = BTreeMap::new();
        let mut first_of: HashMap<&BitColumn, usize> = HashMap::new();
        for e in self.event_ids() {
            let first = *first_of.entry(&self.columns[e.0]).or_insert(e.0);
            by_column.entry(first).or_default().push(e);
        }
        let duplicates = by_column.into_values().filter(|g| g.len() > 1).collect();

        let mut by_row: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut first_row: HashMap<Vec<bool>, usize> = HashMap::new();
        for r in 0..m {
            let first = *first_row.entry(self.row(r)).or_insert(r);
            by_row.entry(first).or_default().push(self.samples[r].clone());
        }
        let duplicate_samples = by_row.into_values().filter(|g| g.len() > 1).collect();

        ConsolidationReport {
            degenerate,
            duplicates,
            duplicate_samples,
        }
    }

    /// Fails unless every column has marginal in (0,1) and columns are
    /// pairwise distinct.
    pub fn require_consolidated(&self) -> Result<()> {
        let report = self.consolidate();
        if report.is_consolidated() {
            return Ok(());
        }
        let mut reasons = Vec::new();
        for (e, p) in &report.degenerate {
            reasons.push(format!("{} has probability {}", self.events[e.0], p));
        }
        for group in &report.duplicates {
            let names: Vec<String> = group.iter().map(|e| self.events[e.0].header()).collect();
            reasons.push(format!("indistinguishable {{{}}}", names.join(", ")));
        }
        Err(Error::NotConsolidated(reasons.join("; ")))
    }

    /// Keeps events with marginal at least `min_freq` or whose label (bare or
    /// qualified) is listed in `keep`. Row order is preserved.
    pub fn select_events(&self, min_freq: f64, keep: &HashSet<String>) -> Result<GenotypeMatrix> {
        if !(0.0..=1.0).contains(&min_freq) {
            return Err(Error::InvalidParameter(format!("min_freq {min_freq} outside [0,1]")));
        }
        let m = self.n_samples() as f64;
        let kept: Vec<EventId> = self
            .event_ids()
            .filter(|&e| {
                let meta = &self.events[e.0];
                self.count(e) as f64 / m >= min_freq || keep.contains(&meta.label) || keep.contains(&meta.header())
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::ZeroEvents);
        }
        Ok(self.select_columns(&kept))
    }

    pub fn select_columns(&self, ids: &[EventId]) -> GenotypeMatrix {
        GenotypeMatrix {
            samples: self.samples.clone(),
            events: ids.iter().map(|e| self.events[e.0].clone()).collect(),
            columns: ids.iter().map(|e| self.columns[e.0].clone()).collect(),
        }
    }

    /// Matrix made of the given rows (repetition allowed), in order.
    pub fn resample(&self, rows: &[usize]) -> GenotypeMatrix {
        GenotypeMatrix {
            samples: rows.iter().map(|&r| self.samples[r].clone()).collect(),
            events: self.events.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| BitColumn::from_bools(rows.iter().map(|&r| c.get(r))))
                .collect(),
        }
    }

    /// Appends columns; the caller guarantees label uniqueness.
    pub(crate) fn with_columns(&self, extra: Vec<(EventMeta, BitColumn)>) -> Result<GenotypeMatrix> {
        let mut events = self.events.clone();
        let mut columns = self.columns.clone();
        for (meta, col) in extra {
            events.push(meta);
            columns.push(col);
        }
        GenotypeMatrix::new(self.samples.clone(), events, columns)
    }

    /// Stacks `times` copies of the rows.
    pub fn replicate(&self, times: usize) -> GenotypeMatrix {
        let rows: Vec<usize> = (0..times).flat_map(|_| 0..self.n_samples()).collect();
        let mut out = self.resample(&rows);
        out.samples = (0..times)
            .flat_map(|k| self.samples.iter().map(move |s| format!("{s}.{k}")))
            .collect();
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationReport {
    pub degenerate: Vec<(EventId, f64)>,
    pub duplicates: Vec<Vec<EventId>>,
    pub duplicate_samples: Vec<Vec<String>>,
}

impl ConsolidationReport {
    /// No degenerate or indistinguishable events. Duplicate samples are only
    /// reported.
    pub fn is_consolidated(&self) -> bool {
        self.degenerate.is_empty() && self.duplicates.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_consolidated() && self.duplicate_samples.is_empty()
    }

    /// Events to drop so that the remainder is consolidated: all degenerate
    /// columns plus every member but the first of each duplicate group.
    pub fn flagged(&self) -> Vec<EventId> {
        let mut out: Vec<EventId> = self.degenerate.iter().map(|(e, _)| *e).collect();
        for g in &self.duplicates {
            out.extend(g.iter().skip(1).copied());
        }
        out.sort();
        out.dedup();
        out
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::d6;
    use super::*;
    use proptest::prelude::*;

    const A: EventId = EventId(0);
    const B: EventId = EventId(1);

    #[test]
    fn import_two_by_two() {
        let m = GenotypeMatrix::import_str("id,a,b\ns1,1,0\ns2,0,1\n", MatrixFormat::Csv).unwrap();
        assert_eq!(m.n_samples(), 2);
        assert_eq!(m.marginal(A).unwrap(), 0.5);
        assert_eq!(m.marginal(B).unwrap(), 0.5);
        assert_eq!(m.samples(), ["s1", "s2"]);
    }

    #[test]
    fn import_tsv_with_kinds() {
        let m = GenotypeMatrix::import_str("id\tMutation:TP53\tTP53\ns1\t1\t0\n", MatrixFormat::Tsv).unwrap();
        assert_eq!(m.events()[0], EventMeta::new("TP53", "Mutation"));
        assert_eq!(m.events()[1], EventMeta::plain("TP53"));
        assert!(matches!(m.find("TP53"), Err(Error::AmbiguousEvent(_))));
        assert_eq!(m.find("Mutation:TP53").unwrap(), EventId(0));
        assert_eq!(m.find("event:TP53").unwrap(), EventId(1));
    }

    #[test]
    fn import_errors() {
        assert!(matches!(GenotypeMatrix::import_str("", MatrixFormat::Csv), Err(Error::EmptyMatrix)));
        assert!(matches!(
            GenotypeMatrix::import_str("id,a\n", MatrixFormat::Csv),
            Err(Error::EmptyMatrix)
        ));
        assert!(matches!(
            GenotypeMatrix::import_str("id,a,b\ns1,1,2\n", MatrixFormat::Csv),
            Err(Error::NonBinaryCell { .. })
        ));
        assert!(matches!(
            GenotypeMatrix::import_str("id,a,b\ns1,1\n", MatrixFormat::Csv),
            Err(Error::RaggedRow { .. })
        ));
        assert!(matches!(
            GenotypeMatrix::import_str("id,a,a\ns1,1,0\n", MatrixFormat::Csv),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn export_round_trips() {
        let m = d6();
        let mut buf = Vec::new();
        m.export(&mut buf, MatrixFormat::Csv).unwrap();
        let back = GenotypeMatrix::import(buf.as_slice(), MatrixFormat::Csv).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn d6_probabilities() {
        let m = d6();
        assert_eq!(m.marginal(A).unwrap(), 4.0 / 6.0);
        assert_eq!(m.joint(A, B).unwrap(), 2.0 / 6.0);
        assert_eq!(m.conditional(B, A, false).unwrap(), 0.5);
        assert_eq!(m.conditional(B, A, true).unwrap(), 0.0);
        assert!(matches!(m.marginal(EventId(3)), Err(Error::UnknownEvent(_))));
    }

    #[test]
    fn constant_columns() {
        let m = GenotypeMatrix::from_bits(&["x", "y"], &[vec![1, 0], vec![1, 0]]).unwrap();
        assert_eq!(m.marginal(A).unwrap(), 1.0);
        assert_eq!(m.marginal(B).unwrap(), 0.0);
        assert!(matches!(m.conditional(A, B, false), Err(Error::UndefinedConditional(_))));
        assert!(matches!(m.conditional(B, A, true), Err(Error::UndefinedConditional(_))));
        let report = m.consolidate();
        assert_eq!(report.degenerate, vec![(A, 1.0), (B, 0.0)]);
    }

    #[test]
    fn consolidate_reports() {
        assert!(d6().consolidate().is_consolidated());
        assert!(d6().consolidate().duplicates.is_empty());
        let m = GenotypeMatrix::from_bits(&["x", "y", "z"], &[vec![1, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        let report = m.consolidate();
        assert_eq!(report.duplicates, vec![vec![A, B]]);
        assert!(report.degenerate.is_empty());
        assert_eq!(report.flagged(), vec![B]);
    }

    #[test]
    fn d6_reports_duplicate_samples_only() {
        let report = d6().consolidate();
        assert!(report.is_consolidated());
        assert_eq!(report.duplicate_samples.len(), 2);
    }

    #[test]
    fn select_events_rules() {
        let m = d6();
        assert_eq!(m.select_events(0.0, &HashSet::new()).unwrap(), m);
        let s = m.select_events(0.3, &HashSet::new()).unwrap();
        let labels: Vec<&str> = s.events().iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["a", "b"]);
        assert!(matches!(m.select_events(1.0, &HashSet::new()), Err(Error::ZeroEvents)));
        let keep: HashSet<String> = ["c".to_string()].into();
        assert_eq!(m.select_events(1.0, &keep).unwrap().n_events(), 1);
    }

    fn matrix_strategy() -> impl Strategy<Value = GenotypeMatrix> {
        (1usize..30, 2usize..5).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, n), m).prop_map(move |rows| {
                let labels: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                GenotypeMatrix::from_bits(&refs, &rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn joint_properties(m in matrix_strategy()) {
            let (a, b) = (EventId(0), EventId(1));
            prop_assert_eq!(m.joint(a, b).unwrap(), m.joint(b, a).unwrap());
            prop_assert_eq!(m.joint(a, a).unwrap(), m.marginal(a).unwrap());
            prop_assert!(m.joint(a, b).unwrap() <= m.marginal(a).unwrap().min(m.marginal(b).unwrap()));
        }

        #[test]
        fn total_probability(m in matrix_strategy()) {
            let (a, b) = (EventId(0), EventId(1));
            if let (Ok(pos), Ok(neg)) = (m.conditional(b, a, false), m.conditional(b, a, true)) {
                let pa = m.marginal(a).unwrap();
                let total = pos * pa + neg * (1.0 - pa);
                prop_assert!((total - m.marginal(b).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn row_permutation_invariance(m in matrix_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rows: Vec<usize> = (0..m.n_samples()).collect();
            rows.shuffle(&mut crate::rng::stream(seed, 0));
            let p = m.resample(&rows);
            for a in m.event_ids() {
                prop_assert_eq!(m.marginal(a).unwrap(), p.marginal(a).unwrap());
                for b in m.event_ids() {
                    prop_assert_eq!(m.joint(a, b).unwrap(), p.joint(a, b).unwrap());
                    prop_assert_eq!(m.conditional(a, b, false).ok(), p.conditional(a, b, false).ok());
                }
            }
        }

        #[test]
        fn dropping_flagged_columns_consolidates(m in matrix_strategy()) {
            let flagged = m.consolidate().flagged();
            let kept: Vec<EventId> = m.event_ids().filter(|e| !flagged.contains(e)).collect();
            if !kept.is_empty() {
                let s = m.select_columns(&kept);
                prop_assert!(s.consolidate().is_consolidated());
                for e in s.event_ids() {
                    let p = s.marginal(e).unwrap();
                    prop_assert!(p > 0.0 && p < 1.0);
                }
            }
        }
    }
}
