//! Boolean hypothesis formulas over events and the lifted matrix.
//!
//! A hypothesis `formula > target` claims that the pattern described by the
//! formula selects for the target event. Lifting evaluates each clause of each
//! formula row by row and appends the result as a new column, so that patterns
//! can be tested exactly like atomic events.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{BitColumn, EventId, EventMeta, GenotypeMatrix};
use crate::error::{Error, Result};

/// Kind assigned to lifted clause columns.
pub const PATTERN_KIND: &str = "pattern";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    And,
    Or,
    Xor,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::And => "AND",
            Op::Or => "OR",
            Op::Xor => "XOR",
        }
    }
}

/// Expression tree with literal leaves and n-ary AND/OR/XOR nodes.
///
/// XOR over `k` children is true iff an odd number of children are true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Literal { event: EventId, negated: bool },
    Node { op: Op, args: Vec<Formula> },
}

impl Formula {
    pub fn event(e: EventId) -> Self {
        Formula::Literal {
            event: e,
            negated: false,
        }
    }

    pub fn not_event(e: EventId) -> Self {
        Formula::Literal {
            event: e,
            negated: true,
        }
    }

    pub fn and(args: Vec<Formula>) -> Self {
        Formula::Node { op: Op::And, args }
    }

    pub fn or(args: Vec<Formula>) -> Self {
        Formula::Node { op: Op::Or, args }
    }

    pub fn xor(args: Vec<Formula>) -> Self {
        Formula::Node { op: Op::Xor, args }
    }

    pub fn over(op: Op, events: &[EventId]) -> Self {
        Formula::Node {
            op,
            args: events.iter().copied().map(Formula::event).collect(),
        }
    }

    /// Logical negation, pushed down to the leaves.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Literal { event, negated } => Formula::Literal {
                event: *event,
                negated: !negated,
            },
            Formula::Node { op: Op::And, args } => Formula::or(args.iter().map(Formula::negate).collect()),
            Formula::Node { op: Op::Or, args } => Formula::and(args.iter().map(Formula::negate).collect()),
            Formula::Node { op: Op::Xor, args } => {
                // flipping one operand flips the parity
                let mut args = args.clone();
                args[0] = args[0].negate();
                Formula::xor(args)
            }
        }
    }

    pub fn validate(&self, n_events: usize) -> std::result::Result<(), String> {
        match self {
            Formula::Literal { event, .. } if event.0 >= n_events => {
                Err(format!("leaf {event} out of range for {n_events} events"))
            }
            Formula::Literal { .. } => Ok(()),
            Formula::Node { op, args } => {
                if args.len() < 2 {
                    return Err(format!("{} node with {} children", op.name(), args.len()));
                }
                args.iter().try_for_each(|a| a.validate(n_events))
            }
        }
    }

    /// Evaluates the formula on one row of event bits.
    pub fn evaluate(&self, row: &[bool]) -> Result<bool> {
        match self {
            Formula::Literal { event, negated } => row
                .get(event.0)
                .map(|&b| b != *negated)
                .ok_or_else(|| Error::UnknownEvent(event.to_string())),
            Formula::Node { op, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(a.evaluate(row)?);
                }
                Ok(match op {
                    Op::And => values.iter().all(|&v| v),
                    Op::Or => values.iter().any(|&v| v),
                    Op::Xor => values.iter().filter(|&&v| v).count() % 2 == 1,
                })
            }
        }
    }

    fn eval_at(&self, m: &GenotypeMatrix, r: usize) -> bool {
        match self {
            Formula::Literal { event, negated } => m.bit(r, *event) != *negated,
            Formula::Node { op, args } => match op {
                Op::And => args.iter().all(|a| a.eval_at(m, r)),
                Op::Or => args.iter().any(|a| a.eval_at(m, r)),
                Op::Xor => args.iter().filter(|a| a.eval_at(m, r)).count() % 2 == 1,
            },
        }
    }

    /// Row-by-row evaluation over a matrix whose columns the leaves index.
    pub fn column(&self, m: &GenotypeMatrix) -> BitColumn {
        BitColumn::from_bools((0..m.n_samples()).map(|r| self.eval_at(m, r)))
    }

    pub fn leaves(&self) -> BTreeSet<EventId> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut BTreeSet<EventId>) {
        match self {
            Formula::Literal { event, .. } => {
                out.insert(*event);
            }
            Formula::Node { args, .. } => args.iter().for_each(|a| a.collect_leaves(out)),
        }
    }

    /// Top-level conjuncts: the children of an AND root, or the formula itself.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::Node { op: Op::And, args } => args.iter().collect(),
            other => vec![other],
        }
    }

    /// Canonical text using the matrix's event headers, e.g. `XOR(a, NOT b)`.
    pub fn text(&self, m: &GenotypeMatrix) -> String {
        let mut s = String::new();
        self.write_text(m, &mut s);
        s
    }

    fn write_text(&self, m: &GenotypeMatrix, s: &mut String) {
        match self {
            Formula::Literal { event, negated } => {
                if *negated {
                    s.push_str("NOT ");
                }
                let name = m.events().get(event.0).map(EventMeta::header).unwrap_or_else(|| event.to_string());
                s.push_str(&name);
            }
            Formula::Node { op, args } => {
                let _ = write!(s, "{}(", op.name());
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    a.write_text(m, s);
                }
                s.push(')');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub formula: Formula,
    pub target: EventId,
    pub label: String,
}

impl Hypothesis {
    /// Validates the formula against `m` and rejects formulas that contain
    /// their own target.
    pub fn new(formula: Formula, target: EventId, label: impl Into<String>, m: &GenotypeMatrix) -> Result<Self> {
        let label = label.into();
        let invalid = |reason: String| Error::InvalidHypothesis {
            label: label.clone(),
            reason,
        };
        formula.validate(m.n_events()).map_err(invalid)?;
        if target.0 >= m.n_events() {
            return Err(invalid(format!("target {target} out of range")));
        }
        if formula.leaves().contains(&target) {
            return Err(invalid("formula contains its own target".into()));
        }
        Ok(Hypothesis { formula, target, label })
    }
}

/// Lifted column for one compound clause, shared by every hypothesis that
/// contains the same clause text.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseNode {
    pub formula: Formula,
    pub text: String,
    pub column: EventId,
    pub targets: BTreeSet<EventId>,
}

/// Base matrix plus one column per distinct compound clause.
///
/// Clause conjuncts that are plain positive literals reuse the base event
/// column; every other clause gets a column of kind [`PATTERN_KIND`].
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrix {
    matrix: GenotypeMatrix,
    n_base: usize,
    clauses: Vec<ClauseNode>,
    hypotheses: Vec<Hypothesis>,
    /// Clause columns per hypothesis, in conjunct order.
    hypothesis_clauses: Vec<Vec<EventId>>,
}

impl LiftedMatrix {
    /// Lifting with no hypotheses.
    pub fn plain(m: &GenotypeMatrix) -> Self {
        LiftedMatrix {
            matrix: m.clone(),
            n_base: m.n_events(),
            clauses: Vec::new(),
            hypotheses: Vec::new(),
            hypothesis_clauses: Vec::new(),
        }
    }

    /// The combined matrix: base columns first, then clause columns.
    pub fn matrix(&self) -> &GenotypeMatrix {
        &self.matrix
    }

    pub fn n_base(&self) -> usize {
        self.n_base
    }

    pub fn n_columns(&self) -> usize {
        self.matrix.n_events()
    }

    pub fn base(&self) -> GenotypeMatrix {
        let ids: Vec<EventId> = (0..self.n_base).map(EventId).collect();
        self.matrix.select_columns(&ids)
    }

    pub fn clauses(&self) -> &[ClauseNode] {
        &self.clauses
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn hypothesis_clauses(&self) -> &[Vec<EventId>] {
        &self.hypothesis_clauses
    }

    pub fn is_clause(&self, col: EventId) -> bool {
        col.0 >= self.n_base
    }

    pub fn clause(&self, col: EventId) -> Option<&ClauseNode> {
        col.0.checked_sub(self.n_base).and_then(|i| self.clauses.get(i))
    }

    /// Same hypotheses and clause layout over a different set of rows of the
    /// base matrix (e.g. a bootstrap resample).
    pub fn resample(&self, rows: &[usize]) -> LiftedMatrix {
        LiftedMatrix {
            matrix: self.matrix.resample(rows),
            n_base: self.n_base,
            clauses: self.clauses.clone(),
            hypotheses: self.hypotheses.clone(),
            hypothesis_clauses: self.hypothesis_clauses.clone(),
        }
    }
}

/// Appends one column per distinct compound clause of every hypothesis.
///
/// Fails with [`Error::PatternDuplicates`] when a clause column is identical to
/// an existing column.
pub fn lift(m: &GenotypeMatrix, hyps: &[Hypothesis]) -> Result<LiftedMatrix> {
    let n = m.n_events();
    let mut clauses: Vec<ClauseNode> = Vec::new();
    let mut extra: Vec<(EventMeta, BitColumn)> = Vec::new();
    let mut hypothesis_clauses = Vec::with_capacity(hyps.len());

    for h in hyps {
        h.formula.validate(n).map_err(|reason| Error::InvalidHypothesis {
            label: h.label.clone(),
            reason,
        })?;
        if h.formula.leaves().contains(&h.target) || h.target.0 >= n {
            return Err(Error::InvalidHypothesis {
                label: h.label.clone(),
                reason: "formula contains its own target".into(),
            });
        }
        let mut cols = Vec::new();
        for conj in h.formula.conjuncts() {
            if let Formula::Literal { event, negated: false } = conj {
                cols.push(*event);
                continue;
            }
            let text = conj.text(m);
            if let Some(existing) = clauses.iter_mut().find(|c| c.text == text) {
                existing.targets.insert(h.target);
                cols.push(existing.column);
                continue;
            }
            let bits = conj.column(m);
            if let Some(e) = m.columns().iter().position(|c| *c == bits) {
                return Err(Error::PatternDuplicates {
                    pattern: text,
                    existing: m.events()[e].header(),
                });
            }
            if let Some((meta, _)) = extra.iter().find(|(_, c)| *c == bits) {
                return Err(Error::PatternDuplicates {
                    pattern: text,
                    existing: meta.label.clone(),
                });
            }
            let column = EventId(n + clauses.len());
            clauses.push(ClauseNode {
                formula: conj.clone(),
                text: text.clone(),
                column,
                targets: BTreeSet::from([h.target]),
            });
            extra.push((EventMeta::new(text, PATTERN_KIND), bits));
            cols.push(column);
        }
        hypothesis_clauses.push(cols);
    }

    Ok(LiftedMatrix {
        matrix: m.with_columns(extra)?,
        n_base: n,
        clauses,
        hypotheses: hyps.to_vec(),
        hypothesis_clauses,
    })
}

/// Which events a generated pattern is tested against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSelector {
    /// Every event not occurring in the formula (`*`).
    All,
    Event(EventId),
}

fn expand_targets(
    m: &GenotypeMatrix,
    formula: Formula,
    target: &TargetSelector,
    out: &mut Vec<Hypothesis>,
) -> Result<()> {
    let text = formula.text(m);
    match target {
        TargetSelector::Event(t) => {
            let label = format!("{text} > {}", m.meta(*t)?.header());
            out.push(Hypothesis::new(formula, *t, label, m)?);
        }
        TargetSelector::All => {
            let leaves = formula.leaves();
            for t in m.event_ids().filter(|t| !leaves.contains(t)) {
                let label = format!("{text} > {}", m.events()[t.0].header());
                out.push(Hypothesis::new(formula.clone(), t, label, m)?);
            }
        }
    }
    Ok(())
}

/// One pattern per subset of `genes` with size in `[dim_min, dim_max]`; each
/// pattern applies `op` over every event carrying one of the subset's labels.
pub fn group_hypotheses(
    m: &GenotypeMatrix,
    genes: &[String],
    op: Op,
    dim_min: usize,
    dim_max: usize,
    target: &TargetSelector,
) -> Result<Vec<Hypothesis>> {
    let events_of = |gene: &str| -> Vec<EventId> { m.event_ids().filter(|e| m.events()[e.0].label == gene).collect() };
    let resolved: Vec<(String, Vec<EventId>)> = genes
        .iter()
        .map(|g| (g.clone(), events_of(g)))
        .filter(|(_, es)| !es.is_empty())
        .collect();
    let total: usize = resolved.iter().map(|(_, es)| es.len()).sum();
    if total < 2 {
        return Err(Error::InvalidParameter(format!("group resolves to {total} events, need at least 2")));
    }
    if dim_min < 2 || dim_min > dim_max || dim_max > resolved.len() {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= dim_min <= dim_max <= {} (got {dim_min}, {dim_max})",
            resolved.len()
        )));
    }
    let mut out = Vec::new();
    let k = resolved.len();
    // subsets in order of size, then lexicographic by position
    for size in dim_min..=dim_max {
        for mask in 0u64..(1 << k) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let events: Vec<EventId> = (0..k)
                .filter(|i| mask >> i & 1 == 1)
                .flat_map(|i| resolved[i].1.iter().copied())
                .collect();
            expand_targets(m, Formula::over(op, &events), target, &mut out)?;
        }
    }
    Ok(out)
}

/// Patterns over events that share a label across different kinds. `Or` is
/// hardened to `Xor` when the events never co-occur.
pub fn homologous_hypotheses(m: &GenotypeMatrix, op: Op) -> Result<Vec<Hypothesis>> {
    let mut labels: Vec<&str> = m.events().iter().map(|e| e.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut out = Vec::new();
    for label in labels {
        let events: Vec<EventId> = m.event_ids().filter(|e| m.events()[e.0].label == label).collect();
        let kinds: BTreeSet<&str> = events.iter().map(|e| m.events()[e.0].kind.as_str()).collect();
        if events.len() < 2 || kinds.len() < 2 {
            continue;
        }
        let disjoint = events
            .iter()
            .enumerate()
            .all(|(i, &a)| events[i + 1..].iter().all(|&b| m.joint_count(a, b) == 0));
        let op = if op == Op::Or && disjoint { Op::Xor } else { op };
        expand_targets(m, Formula::over(op, &events), &TargetSelector::All, &mut out)?;
    }
    Ok(out)
}

/// JSON form of a formula: `{"op": "and|or|xor|not", "args": [...]}` with
/// leaves `{"event": "kind:label"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormulaDoc {
    Leaf { event: String },
    Node { op: String, args: Vec<FormulaDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisDoc {
    pub label: String,
    /// `kind:label`, bare label, or `*` for every event outside the formula.
    pub target: String,
    pub formula: FormulaDoc,
}

impl FormulaDoc {
    pub fn resolve(&self, m: &GenotypeMatrix) -> Result<Formula> {
        match self {
            FormulaDoc::Leaf { event } => Ok(Formula::event(m.find(event)?)),
            FormulaDoc::Node { op, args } => {
                let args = args.iter().map(|a| a.resolve(m)).collect::<Result<Vec<_>>>()?;
                match op.to_ascii_lowercase().as_str() {
                    "not" => {
                        let [inner] = <[Formula; 1]>::try_from(args)
                            .map_err(|_| Error::InvalidParameter("\"not\" takes exactly one argument".into()))?;
                        Ok(inner.negate())
                    }
                    "and" => Ok(Formula::and(args)),
                    "or" => Ok(Formula::or(args)),
                    "xor" => Ok(Formula::xor(args)),
                    other => Err(Error::InvalidParameter(format!("unknown operator {other:?}"))),
                }
            }
        }
    }

    pub fn from_formula(f: &Formula, m: &GenotypeMatrix) -> FormulaDoc {
        match f {
            Formula::Literal { event, negated } => {
                let leaf = FormulaDoc::Leaf {
                    event: m.events()[event.0].header(),
                };
                if *negated {
                    FormulaDoc::Node {
                        op: "not".into(),
                        args: vec![leaf],
                    }
                } else {
                    leaf
                }
            }
            Formula::Node { op, args } => FormulaDoc::Node {
                op: op.name().to_ascii_lowercase(),
                args: args.iter().map(|a| FormulaDoc::from_formula(a, m)).collect(),
            },
        }
    }
}

/// Parses a JSON array of hypothesis documents against `m`.
pub fn parse_hypotheses(json: &str, m: &GenotypeMatrix) -> Result<Vec<Hypothesis>> {
    let docs: Vec<HypothesisDoc> = serde_json::from_str(json)?;
    let mut out = Vec::new();
    for doc in docs {
        let formula = doc.formula.resolve(m)?;
        if doc.target == "*" {
            let leaves = formula.leaves();
            for t in m.event_ids().filter(|t| !leaves.contains(t)) {
                let label = format!("{} > {}", doc.label, m.events()[t.0].header());
                out.push(Hypothesis::new(formula.clone(), t, label, m)?);
            }
        } else {
            out.push(Hypothesis::new(formula, m.find(&doc.target)?, doc.label, m)?);
        }
    }
    Ok(out)
}
