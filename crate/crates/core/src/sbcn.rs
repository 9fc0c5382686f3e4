//! Suppes-Bayes causal networks over categorical decision records, with
//! random-walk and personalized PageRank discrimination scores.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capri::{hill_climb_acyclic, HillClimbParams, ParamCount, Regularizer};
use crate::dataset::{BitColumn, EventId, EventMeta, GenotypeMatrix};
use crate::error::{Error, Result};
use crate::rng::stream;

pub const DEFAULT_WALKS: usize = 10_000;
pub const DEFAULT_DAMPING: f64 = 0.85;
/// Steps allowed per walk, restarts included.
pub const MAX_WALK_STEPS: usize = 1_000_000;
const PPR_TOLERANCE: f64 = 1e-12;
const PPR_MAX_ITER: usize = 100_000;

/// Records over named categorical attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalTable {
    pub attributes: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl CategoricalTable {
    pub fn new(attributes: Vec<String>, records: Vec<Vec<String>>) -> Result<Self> {
        if attributes.is_empty() || records.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a) {
                return Err(Error::DuplicateLabel(a.clone()));
            }
        }
        for (row, rec) in records.iter().enumerate() {
            if rec.len() != attributes.len() {
                return Err(Error::RaggedRow {
                    row,
                    expected: attributes.len(),
                    found: rec.len(),
                });
            }
            if let Some(column) = rec.iter().position(|v| v.trim().is_empty()) {
                return Err(Error::NonBinaryCell {
                    row,
                    column,
                    value: "missing value".into(),
                });
            }
        }
        Ok(CategoricalTable { attributes, records })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    fn from_reader(r: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
        let attributes = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let records = rdr
            .records()
            .map(|rec| Ok(rec?.iter().map(|v| v.trim().to_string()).collect()))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Self::new(attributes, records)
    }
}

/// Temporal level of each attribute; lower levels may cause higher ones.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemporalOrder {
    pub level: BTreeMap<String, u32>,
}

impl TemporalOrder {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One column per observed `attribute=value` pair, values sorted within an
/// attribute. Returns the matrix and the level of every column.
pub fn binarize(table: &CategoricalTable, order: &TemporalOrder) -> Result<(GenotypeMatrix, Vec<u32>)> {
    let mut events = Vec::new();
    let mut columns = Vec::new();
    let mut levels = Vec::new();
    for (k, attr) in table.attributes.iter().enumerate() {
        let level = *order
            .level
            .get(attr)
            .ok_or_else(|| Error::InvalidParameter(format!("attribute {attr:?} has no temporal level")))?;
        let values: BTreeSet<&str> = table.records.iter().map(|r| r[k].as_str()).collect();
        for v in values {
            events.push(EventMeta::plain(format!("{attr}={v}")));
            columns.push(BitColumn::from_bools(table.records.iter().map(|r| r[k] == v)));
            levels.push(level);
        }
    }
    let samples = (1..=table.records.len()).map(|i| format!("r{i}")).collect();
    Ok((GenotypeMatrix::new(samples, events, columns)?, levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbcnParams {
    pub regularizer: Regularizer,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SbcnParams {
    fn default() -> Self {
        SbcnParams {
            regularizer: Regularizer::Bic,
            max_iter: 10_000,
            restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcnEdge {
    pub from: usize,
    pub to: usize,
    /// `P(to | from) - P(to | not from)`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sbcn {
    pub labels: Vec<String>,
    pub level: Vec<u32>,
    pub edges: Vec<SbcnEdge>,
    pub decision_neg: usize,
    pub decision_pos: usize,
    pub score: f64,
}

impl Sbcn {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn find(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownEvent(label.to_string()))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = &SbcnEdge> {
        self.edges.iter().filter(move |e| e.from == u)
    }

    pub fn is_acyclic(&self) -> bool {
        crate::suppes::topological_order(self.n_nodes(), self.edges.iter().map(|e| (e.from, e.to)).collect::<Vec<_>>())
            .is_some()
    }

    fn reachable_from(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n_nodes()];
        let mut queue = VecDeque::from([v]);
        seen[v] = true;
        while let Some(u) = queue.pop_front() {
            for e in self.out_edges(u) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }
}

/// Candidate edges `(v, u)` with `level(v) <= level(u)` and strict probability
/// raising, each with its weight.
pub fn suppes_candidates(m: &GenotypeMatrix, levels: &[u32]) -> Result<Vec<SbcnEdge>> {
    let n = m.n_events();
    if levels.len() != n {
        return Err(Error::SchemaMismatch(format!("{} levels for {n} events", levels.len())));
    }
    let mut out = Vec::new();
    for v in 0..n {
        for u in 0..n {
            if u == v || levels[v] > levels[u] {
                continue;
            }
            let with = m.conditional(EventId(u), EventId(v), false)?;
            let without = m.conditional(EventId(u), EventId(v), true)?;
            if with > without {
                out.push(SbcnEdge {
                    from: v,
                    to: u,
                    weight: with - without,
                });
            }
        }
    }
    Ok(out)
}

/// Point-estimate Suppes filter followed by a regularized DAG search over the
/// surviving edges.
pub fn learn_sbcn(
    m: &GenotypeMatrix,
    levels: &[u32],
    decision_neg: EventId,
    decision_pos: EventId,
    params: &SbcnParams,
) -> Result<Sbcn> {
    m.require_consolidated()?;
    m.meta(decision_neg)?;
    m.meta(decision_pos)?;
    if decision_neg == decision_pos {
        return Err(Error::InvalidParameter("negative and positive decisions must differ".into()));
    }
    let candidates = suppes_candidates(m, levels)?;
    let moves: Vec<(usize, usize)> = candidates.iter().map(|e| (e.from, e.to)).collect();
    let hc = HillClimbParams {
        max_iter: params.max_iter,
        restarts: params.restarts,
        seed: params.seed,
        param_count: ParamCount::PerConfiguration,
    };
    let (parents, score) = hill_climb_acyclic(m, &moves, params.regularizer, &hc)?;
    let edges = candidates
        .into_iter()
        .filter(|e| parents[e.to].contains(&e.from))
        .collect();
    Ok(Sbcn {
        labels: m.events().iter().map(|e| e.label.clone()).collect(),
        level: levels.to_vec(),
        edges,
        decision_neg: decision_neg.0,
        decision_pos: decision_pos.0,
        score,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkScores {
    pub n_walks: usize,
    pub ds_neg: f64,
    pub ds_pos: f64,
    /// Mean steps of the walks ending at each pole; `None` if none did.
    pub as_neg: Option<f64>,
    pub as_pos: Option<f64>,
}

struct Walk {
    negative: bool,
    steps: usize,
    visited: Vec<usize>,
}

fn check_walk_source(s: &Sbcn, v: usize, n_walks: usize) -> Result<()> {
    if v >= s.n_nodes() {
        return Err(Error::UnknownEvent(v.to_string()));
    }
    if n_walks == 0 {
        return Err(Error::InvalidParameter("n_walks must be at least 1".into()));
    }
    if v == s.decision_neg || v == s.decision_pos {
        return Err(Error::InvalidParameter("walks cannot start at a decision node".into()));
    }
    let reach = s.reachable_from(v);
    if !reach[s.decision_neg] && !reach[s.decision_pos] {
        return Err(Error::Undefined(format!("disconnected group: {} reaches no decision", s.labels[v])));
    }
    Ok(())
}

/// One walk from `v` until it hits a decision node. Dead ends restart from
/// `v`; the steps and visits of abandoned attempts are discarded.
fn walk(s: &Sbcn, out: &[Vec<(usize, f64)>], v: usize, seed: u64, index: usize) -> Result<Walk> {
    let mut rng = stream(seed, index as u64);
    let mut total = 0;
    let mut u = v;
    let mut steps = 0;
    let mut visited = vec![v];
    loop {
        if u == s.decision_neg || u == s.decision_pos {
            return Ok(Walk {
                negative: u == s.decision_neg,
                steps,
                visited,
            });
        }
        if out[u].is_empty() {
            u = v;
            steps = 0;
            visited.clear();
            visited.push(v);
            continue;
        }
        total += 1;
        if total > MAX_WALK_STEPS {
            return Err(Error::Undefined(format!("walk from {} exceeded {MAX_WALK_STEPS} steps", s.labels[v])));
        }
        let sum: f64 = out[u].iter().map(|&(_, w)| w).sum();
        let mut x = rng.gen::<f64>() * sum;
        let mut next = out[u][out[u].len() - 1].0;
        for &(z, w) in &out[u] {
            if x < w {
                next = z;
                break;
            }
            x -= w;
        }
        u = next;
        steps += 1;
        visited.push(u);
    }
}

fn walks(s: &Sbcn, v: usize, n_walks: usize, seed: u64) -> Result<Vec<Walk>> {
    check_walk_source(s, v, n_walks)?;
    let out: Vec<Vec<(usize, f64)>> = (0..s.n_nodes())
        .map(|u| s.out_edges(u).map(|e| (e.to, e.weight)).collect())
        .collect();
    (0..n_walks).into_par_iter().map(|i| walk(s, &out, v, seed, i)).collect()
}

/// Fraction of `n_walks` walks from `v` reaching the negative decision first,
/// and mean walk lengths per pole.
pub fn group_discrimination(s: &Sbcn, v: usize, n_walks: usize, seed: u64) -> Result<WalkScores> {
    let ws = walks(s, v, n_walks, seed)?;
    let mean = |neg: bool| {
        let hits: Vec<usize> = ws.iter().filter(|w| w.negative == neg).map(|w| w.steps).collect();
        (!hits.is_empty()).then(|| hits.iter().sum::<usize>() as f64 / hits.len() as f64)
    };
    let neg = ws.iter().filter(|w| w.negative).count();
    let ds_neg = neg as f64 / n_walks as f64;
    Ok(WalkScores {
        n_walks,
        ds_neg,
        ds_pos: 1.0 - ds_neg,
        as_neg: mean(true),
        as_pos: mean(false),
    })
}

/// Among walks from `v` that reach the negative decision first, the fraction
/// passing through any of `mediators`.
pub fn explainable_fraction(s: &Sbcn, v: usize, mediators: &[usize], n_walks: usize, seed: u64) -> Result<f64> {
    if mediators.is_empty() || mediators.contains(&v) {
        return Err(Error::InvalidParameter("mediators must be nonempty and exclude the source".into()));
    }
    let ws = walks(s, v, n_walks, seed)?;
    let neg: Vec<&Walk> = ws.iter().filter(|w| w.negative).collect();
    if neg.is_empty() {
        return Err(Error::Undefined("no walk reached the negative decision".into()));
    }
    let through = neg.iter().filter(|w| w.visited.iter().any(|u| mediators.contains(u))).count();
    Ok(through as f64 / neg.len() as f64)
}

/// Personalized PageRank with restarts spread uniformly over `seeds` and
/// weight-proportional transitions. Mass at nodes without outgoing edges
/// returns to the seeds.
pub fn personalized_pagerank(s: &Sbcn, seeds: &[usize], damping: f64) -> Result<Vec<f64>> {
    if seeds.is_empty() || seeds.iter().any(|&v| v >= s.n_nodes()) {
        return Err(Error::InvalidParameter("seeds must be nonempty node indices".into()));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!("damping {damping} outside (0, 1)")));
    }
    let n = s.n_nodes();
    let seeds: BTreeSet<usize> = seeds.iter().copied().collect();
    let mut restart = vec![0.0; n];
    for &v in &seeds {
        restart[v] = 1.0 / seeds.len() as f64;
    }
    let out_sum: Vec<f64> = (0..n).map(|u| s.out_edges(u).map(|e| e.weight).sum()).collect();
    let mut x = restart.clone();
    for _ in 0..PPR_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&u| out_sum[u] == 0.0).map(|u| x[u]).sum();
        let mut next: Vec<f64> = restart.iter().map(|r| r * ((1.0 - damping) + damping * dangling)).collect();
        for e in &s.edges {
            next[e.to] += damping * x[e.from] * e.weight / out_sum[e.from];
        }
        let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < PPR_TOLERANCE {
            break;
        }
    }
    Ok(x)
}

/// `ppr(neg) / (ppr(neg) + ppr(pos))` for restarts at `seeds`.
pub fn generalized_score(s: &Sbcn, seeds: &[usize], damping: f64) -> Result<f64> {
    let ppr = personalized_pagerank(s, seeds, damping)?;
    gds_from_mass(ppr[s.decision_neg], ppr[s.decision_pos])
}

pub fn gds_from_mass(neg: f64, pos: f64) -> Result<f64> {
    if neg + pos <= 0.0 {
        return Err(Error::Undefined("no PageRank mass on either decision".into()));
    }
    Ok(neg / (neg + pos))
}

/// The 1973 Berkeley graduate admissions counts by department as
/// (department, male admitted, male denied, female admitted, female denied).
pub const BERKELEY_COUNTS: [(&str, usize, usize, usize, usize); 6] = [
    ("A", 512, 313, 89, 19),
    ("B", 313, 207, 17, 8),
    ("C", 120, 205, 202, 391),
    ("D", 138, 279, 131, 244),
    ("E", 53, 138, 94, 299),
    ("F", 22, 351, 24, 317),
];

/// One record per applicant with attributes `sex`, `Dep`, `Admission`.
pub fn berkeley_table() -> CategoricalTable {
    let mut records = Vec::new();
    for (dep, ma, md, fa, fd) in BERKELEY_COUNTS {
        for (sex, admitted, n) in [("Male", "Yes", ma), ("Male", "No", md), ("Female", "Yes", fa), ("Female", "No", fd)] {
            for _ in 0..n {
                records.push(vec![sex.to_string(), dep.to_string(), admitted.to_string()]);
            }
        }
    }
    CategoricalTable::new(vec!["sex".into(), "Dep".into(), "Admission".into()], records).unwrap()
}

/// Gender before department before decision.
pub fn berkeley_order() -> TemporalOrder {
    TemporalOrder {
        level: [("sex", 0), ("Dep", 1), ("Admission", 2)].map(|(a, l)| (a.to_string(), l)).into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)], neg: usize, pos: usize) -> Sbcn {
        Sbcn {
            labels: (0..n).map(|i| format!("n{i}")).collect(),
            level: vec![0; n],
            edges: edges.iter().map(|&(from, to, weight)| SbcnEdge { from, to, weight }).collect(),
            decision_neg: neg,
            decision_pos: pos,
            score: 0.0,
        }
    }

    #[test]
    fn binarize_one_hot() {
        let t = CategoricalTable::from_csv_str("color\nred\ngreen\nblue\n").unwrap();
        let order = TemporalOrder::from_json(r#"{"color": 0}"#).unwrap();
        let (m, levels) = binarize(&t, &order).unwrap();
        assert_eq!((m.n_samples(), m.n_events()), (3, 3));
        assert_eq!(levels, vec![0, 0, 0]);
        for r in 0..3 {
            assert_eq!((0..3).filter(|&j| m.bit(r, EventId(j))).count(), 1);
        }
        assert_eq!(m.meta(EventId(0)).unwrap().label, "color=blue");
    }

    #[test]
    fn missing_values_and_levels_are_errors() {
        assert!(CategoricalTable::from_csv_str("a,b\nx,\n").is_err());
        assert!(CategoricalTable::from_csv_str("a,b\nx\n").is_err());
        let t = CategoricalTable::from_csv_str("a,b\nx,y\n").unwrap();
        let order = TemporalOrder::from_json(r#"{"a": 0}"#).unwrap();
        assert!(binarize(&t, &order).is_err());
    }

    #[test]
    fn berkeley_expansion_shape() {
        let t = berkeley_table();
        assert_eq!(t.records.len(), 4486);
        let (m, levels) = binarize(&t, &berkeley_order()).unwrap();
        assert_eq!(m.n_events(), 2 + 6 + 2);
        assert_eq!(levels.iter().filter(|&&l| l == 1).count(), 6);
        let female = m.find("sex=Female").unwrap();
        assert_eq!(m.count(female), 89 + 19 + 17 + 8 + 202 + 391 + 131 + 244 + 94 + 299 + 24 + 317);
    }

    #[test]
    fn independent_data_has_no_edges() {
        let rows: Vec<Vec<String>> = ["xu", "xv", "yu", "yv"]
            .iter()
            .map(|r| r.chars().map(|c| c.to_string()).collect())
            .collect();
        let t = CategoricalTable::new(vec!["a".into(), "b".into()], rows).unwrap();
        let order = TemporalOrder::from_json(r#"{"a": 0, "b": 1}"#).unwrap();
        let (m, levels) = binarize(&t, &order).unwrap();
        assert!(suppes_candidates(&m, &levels).unwrap().is_empty());
        let s = learn_sbcn(&m, &levels, EventId(2), EventId(3), &SbcnParams::default()).unwrap();
        assert!(s.edges.is_empty());
    }

    #[test]
    fn same_level_pair_keeps_at_most_one_direction() {
        // two strongly associated events on the same level
        let mut rows = vec![vec![true, true]; 40];
        rows.extend(vec![vec![false, false]; 40]);
        rows.extend(vec![vec![true, false]; 10]);
        rows.extend(vec![vec![false, true]; 5]);
        let cols = (0..2).map(|j| BitColumn::from_bools(rows.iter().map(|r| r[j]))).collect();
        let m = GenotypeMatrix::new(
            (0..rows.len()).map(|i| format!("s{i}")).collect(),
            vec![EventMeta::plain("u"), EventMeta::plain("v")],
            cols,
        )
        .unwrap();
        let levels = [0, 0];
        assert_eq!(suppes_candidates(&m, &levels).unwrap().len(), 2);
        let s = learn_sbcn(&m, &levels, EventId(0), EventId(1), &SbcnParams::default()).unwrap();
        assert_eq!(s.edges.len(), 1);
        assert!(s.is_acyclic());
    }

    #[test]
    fn single_edge_to_negative() {
        let s = graph(3, &[(0, 1, 0.4)], 1, 2);
        let w = group_discrimination(&s, 0, 100, 1).unwrap();
        assert_eq!((w.ds_neg, w.ds_pos, w.as_neg, w.as_pos), (1.0, 0.0, Some(1.0), None));
        assert!(group_discrimination(&s, 0, 0, 1).is_err());
    }

    #[test]
    fn first_step_split_converges() {
        let s = graph(3, &[(0, 1, 0.3), (0, 2, 0.1)], 1, 2);
        let w = group_discrimination(&s, 0, 10_000, 9).unwrap();
        assert!((w.ds_neg - 0.75).abs() < 0.02, "{}", w.ds_neg);
        assert_eq!(w.ds_neg + w.ds_pos, 1.0);
    }

    #[test]
    fn dead_ends_restart_and_unreachable_sources_fail() {
        // 0 -> 3 is a dead end, 0 -> 1 -> neg
        let s = graph(5, &[(0, 3, 0.5), (0, 1, 0.5), (1, 2, 0.2)], 2, 4);
        let w = group_discrimination(&s, 0, 500, 2).unwrap();
        assert_eq!(w.ds_neg, 1.0);
        assert_eq!(w.as_neg, Some(2.0));
        assert!(matches!(group_discrimination(&s, 3, 10, 2), Err(Error::Undefined(_))));
    }

    #[test]
    fn explainable_fraction_cases() {
        let s = graph(5, &[(0, 1, 0.5), (1, 2, 0.5), (0, 4, 0.1)], 2, 4);
        assert_eq!(explainable_fraction(&s, 0, &[1], 2000, 3).unwrap(), 1.0);
        assert_eq!(explainable_fraction(&s, 0, &[3], 2000, 3).unwrap(), 0.0);
        let only_pos = graph(3, &[(0, 2, 0.5)], 1, 2);
        assert!(explainable_fraction(&only_pos, 0, &[1], 10, 0).is_err());
    }

    #[test]
    fn walk_scores_are_seed_stable() {
        let s = graph(4, &[(0, 1, 0.3), (0, 3, 0.2), (1, 2, 0.4), (1, 3, 0.1)], 2, 3);
        let a = group_discrimination(&s, 0, 100_000, 1).unwrap();
        let b = group_discrimination(&s, 0, 100_000, 2).unwrap();
        assert!((a.ds_neg - b.ds_neg).abs() < 0.01);
        assert_eq!(a, group_discrimination(&s, 0, 100_000, 1).unwrap());
    }

    #[test]
    fn pagerank_closed_form() {
        // v -> neg (0.3), v -> pos (0.1); both decisions dangle back to v
        let d = DEFAULT_DAMPING;
        let s = graph(3, &[(0, 1, 0.3), (0, 2, 0.1)], 1, 2);
        let ppr = personalized_pagerank(&s, &[0], d).unwrap();
        let xv = 1.0 / (1.0 + d);
        assert!((ppr[0] - xv).abs() < 1e-10);
        assert!((ppr[1] - d * 0.75 * xv).abs() < 1e-10);
        assert!((ppr.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((generalized_score(&s, &[0], d).unwrap() - 0.75).abs() < 1e-10);
        assert!(generalized_score(&s, &[1], d).unwrap() > 0.9);
        assert!(personalized_pagerank(&s, &[], d).is_err());
        assert!(personalized_pagerank(&s, &[0], 1.0).is_err());
    }

    #[test]
    fn gds_arithmetic_and_symmetry() {
        assert!((gds_from_mass(0.03, 0.01).unwrap() - 0.75).abs() < 1e-15);
        assert!(gds_from_mass(0.0, 0.0).is_err());
        let s = graph(3, &[(0, 1, 0.2), (0, 2, 0.2)], 1, 2);
        assert!((generalized_score(&s, &[0], 0.85).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn learned_edges_respect_order_and_weights() {
        let (m, levels) = binarize(&berkeley_table(), &berkeley_order()).unwrap();
        let neg = m.find("Admission=No").unwrap();
        let pos = m.find("Admission=Yes").unwrap();
        let s = learn_sbcn(&m, &levels, neg, pos, &SbcnParams::default()).unwrap();
        assert!(s.is_acyclic());
        for e in &s.edges {
            assert!(s.level[e.from] <= s.level[e.to]);
            assert!(e.weight > 0.0 && e.weight <= 1.0);
        }
    }
}
