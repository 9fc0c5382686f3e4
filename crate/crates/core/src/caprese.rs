//! Tree and forest reconstruction with the shrinkage-like estimator, plus the
//! classic oncotree edge weight.

use serde::{Deserialize, Serialize};

use crate::dataset::{ConsolidationReport, EventId, GenotypeMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.5;
/// Stand-in for the vanishing-shrinkage limit.
pub const SMALL_LAMBDA: f64 = 0.01;

/// Ordered-pair score grids. `None` marks the diagonal and pairs whose
/// denominators vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageScores {
    pub lambda: f64,
    pub alpha_raw: Vec<Vec<Option<f64>>>,
    pub beta: Vec<Vec<Option<f64>>>,
    pub m_score: Vec<Vec<Option<f64>>>,
}

impl ShrinkageScores {
    pub fn m(&self, from: usize, to: usize) -> Option<f64> {
        self.m_score[from][to]
    }
}

fn check_marginals(m: &GenotypeMatrix) -> Result<Vec<f64>> {
    let p: Vec<f64> = m.event_ids().map(|e| m.marginal(e)).collect::<Result<_>>()?;
    if let Some(i) = p.iter().position(|&x| x <= 0.0 || x >= 1.0) {
        return Err(Error::DegenerateData(format!(
            "event {} has marginal {}",
            m.events()[i].header(),
            p[i]
        )));
    }
    Ok(p)
}

/// Computes α, β and m = (1-λ)α + λβ for every ordered pair of events.
pub fn shrinkage_scores(m: &GenotypeMatrix, lambda: f64) -> Result<ShrinkageScores> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
    }
    let p = check_marginals(m)?;
    let n = m.n_events();
    let rows = m.n_samples() as f64;
    let mut alpha_raw = vec![vec![None; n]; n];
    let mut beta = vec![vec![None; n]; n];
    let mut m_score = vec![vec![None; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let joint = m.joint_count(EventId(a), EventId(b)) as f64 / rows;
            let b_given_a = joint / p[a];
            let b_given_not_a = (p[b] - joint) / (1.0 - p[a]);
            let alpha = ratio(b_given_a - b_given_not_a, b_given_a + b_given_not_a);
            let product = p[a] * p[b];
            let be = ratio(joint - product, joint + product);
            alpha_raw[a][b] = alpha;
            beta[a][b] = be;
            if let (Some(x), Some(y)) = (alpha, be) {
                m_score[a][b] = Some((1.0 - lambda) * x + lambda * y);
            }
        }
    }
    Ok(ShrinkageScores {
        lambda,
        alpha_raw,
        beta,
        m_score,
    })
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Edge weight log[P(a)/(P(a)+P(b)) · P(a∧b)/(P(a)P(b))]; `-inf` when the
/// events never co-occur.
pub fn desper_weight(m: &GenotypeMatrix, a: EventId, b: EventId) -> Result<f64> {
    let (pa, pb) = (m.marginal(a)?, m.marginal(b)?);
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::DegenerateData("oncotree weight needs positive marginals".into()));
    }
    let joint = m.joint(a, b)?;
    if joint == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((pa / (pa + pb) * joint / (pa * pb)).ln())
}

/// Rooted tree over the events; `parent[j] == None` means the root ◇.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub labels: Vec<String>,
    pub parent: Vec<Option<usize>>,
    /// Score of the edge into each event (the estimator value for event
    /// parents, `None` for the root).
    pub edge_score: Vec<Option<f64>>,
}

impl TreeModel {
    pub fn n_events(&self) -> usize {
        self.parent.len()
    }

    /// Directed edges including the root's, `None` standing for ◇.
    pub fn edges(&self) -> Vec<(Option<usize>, usize)> {
        self.parent.iter().enumerate().map(|(j, &p)| (p, j)).collect()
    }

    pub fn children(&self, node: Option<usize>) -> Vec<usize> {
        (0..self.n_events()).filter(|&j| self.parent[j] == node).collect()
    }

    /// Number of edges from ◇ to `j`, or `None` if `j` is on a cycle.
    pub fn depth(&self, j: usize) -> Option<usize> {
        let mut d = 1;
        let mut cur = j;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
            if d > self.n_events() {
                return None;
            }
        }
        Some(d)
    }

    /// Acyclic, single parent per event, and every event reachable from ◇.
    pub fn is_valid(&self) -> bool {
        self.labels.len() == self.parent.len()
            && self.parent.iter().all(|p| p.is_none_or(|p| p < self.n_events()))
            && (0..self.n_events()).all(|j| self.depth(j).is_some())
    }
}

/// How a parent is picked for each event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeSelection {
    /// Best candidate per event.
    #[default]
    PerNode,
    /// Maximum-weight branching over all candidate edges.
    Edmonds,
}

/// Per-event parent choice followed by the independent-progressions filter.
pub fn reconstruct_tree(m: &GenotypeMatrix, lambda: f64) -> Result<TreeModel> {
    reconstruct_tree_with(m, lambda, TreeSelection::PerNode)
}

pub fn reconstruct_tree_with(m: &GenotypeMatrix, lambda: f64, selection: TreeSelection) -> Result<TreeModel> {
    m.require_consolidated()?;
    let scores = shrinkage_scores(m, lambda)?;
    let n = m.n_events();
    let candidate = |i: usize, j: usize| -> Option<f64> {
        let mij = scores.m(i, j)?;
        let mji = scores.m(j, i)?;
        (mij > 0.0 && mij > mji).then_some(mij)
    };

    let mut parent: Vec<Option<usize>> = match selection {
        TreeSelection::PerNode => (0..n)
            .map(|j| {
                let mut best: Option<(usize, f64)> = None;
                for i in (0..n).filter(|&i| i != j) {
                    let Some(s) = candidate(i, j) else { continue };
                    let better = match best {
                        None => true,
                        Some((bi, bs)) => {
                            s > bs || (s == bs && scores.beta[i][j].unwrap_or(f64::NEG_INFINITY) > scores.beta[bi][j].unwrap_or(f64::NEG_INFINITY))
                        }
                    };
                    if better {
                        best = Some((i, s));
                    }
                }
                best.map(|(i, _)| i)
            })
            .collect(),
        TreeSelection::Edmonds => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if let Some(s) = candidate(i, j) {
                        edges.push((i, j, s));
                    }
                }
            }
            max_branching(n, &edges)
        }
    };

    let p: Vec<f64> = m.event_ids().map(|e| m.marginal(e)).collect::<Result<_>>()?;
    let rows = m.n_samples() as f64;
    for j in 0..n {
        if parent[j].is_none() {
            continue;
        }
        let root_weight = 1.0 / (1.0 + p[j]);
        let spurious = (0..n).filter(|&x| p[x] > p[j]).all(|x| {
            let joint = m.joint_count(EventId(x), EventId(j)) as f64 / rows;
            root_weight > p[x] / (p[x] + p[j]) * joint / (p[x] * p[j])
        });
        if spurious {
            parent[j] = None;
        }
    }

    let edge_score = (0..n).map(|j| parent[j].and_then(|i| scores.m(i, j))).collect();
    Ok(TreeModel {
        labels: m.events().iter().map(|e| e.header()).collect(),
        parent,
        edge_score,
    })
}

/// Reconstruction on data that may hold degenerate or duplicate columns. The
/// tree is fit on the consolidated columns; a removed duplicate takes the
/// parent of the column it copies and a degenerate event hangs from the root.
pub fn reconstruct_tree_lenient(
    m: &GenotypeMatrix,
    lambda: f64,
    selection: TreeSelection,
) -> Result<(TreeModel, ConsolidationReport)> {
    let report = m.consolidate();
    let n = m.n_events();
    let flagged = report.flagged();
    let kept: Vec<EventId> = m.event_ids().filter(|e| !flagged.contains(e)).collect();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut edge_score: Vec<Option<f64>> = vec![None; n];
    if !kept.is_empty() {
        let sub = reconstruct_tree_with(&m.select_columns(&kept), lambda, selection)?;
        for (k, e) in kept.iter().enumerate() {
            parent[e.0] = sub.parent[k].map(|p| kept[p].0);
            edge_score[e.0] = sub.edge_score[k];
        }
    }
    for group in &report.duplicates {
        let rep = group[0].0;
        for e in &group[1..] {
            parent[e.0] = parent[rep];
            edge_score[e.0] = edge_score[rep];
        }
    }
    let tree = TreeModel {
        labels: m.events().iter().map(|e| e.header()).collect(),
        parent,
        edge_score,
    };
    Ok((tree, report))
}

/// Maximum-weight branching (each node at most one parent, no cycles) over
/// positive-weight edges, by Chu-Liu/Edmonds contraction. Ties prefer the
/// edge listed first.
pub fn max_branching(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Option<usize>> {
    // A virtual root at index n with zero-weight edges to every node turns the
    // branching problem into a spanning arborescence problem.
    let mut all: Vec<(usize, usize, f64)> = edges.iter().copied().filter(|e| e.2 > 0.0 && e.0 != e.1).collect();
    all.extend((0..n).map(|j| (n, j, 0.0)));
    let chosen = arborescence(n + 1, n, &all);
    let mut parent = vec![None; n];
    for k in chosen {
        let (u, v, _) = all[k];
        if u != n {
            parent[v] = Some(u);
        }
    }
    parent
}

/// Indices of the edges in a maximum spanning arborescence rooted at `root`.
/// Every non-root node must have at least one incoming edge.
fn arborescence(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    // best incoming edge per node
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (k, &(u, v, w)) in edges.iter().enumerate() {
        if v == root || u == v {
            continue;
        }
        if best[v].is_none_or(|b| w > edges[b].2) {
            best[v] = Some(k);
        }
    }
    // look for a cycle among the chosen edges
    let mut color = vec![usize::MAX; n];
    let mut cycle: Option<Vec<usize>> = None;
    for start in 0..n {
        if cycle.is_some() {
            break;
        }
        let mut v = start;
        while v != root && color[v] == usize::MAX {
            color[v] = start;
            v = edges[best[v].expect("every node has an incoming edge")].0;
        }
        if v != root && color[v] == start {
            let mut c = vec![v];
            let mut u = edges[best[v].unwrap()].0;
            while u != v {
                c.push(u);
                u = edges[best[u].unwrap()].0;
            }
            cycle = Some(c);
        }
    }
    let Some(cycle) = cycle else {
        return (0..n).filter(|&v| v != root).map(|v| best[v].unwrap()).collect();
    };

    // contract the cycle into a single node
    let in_cycle: Vec<bool> = (0..n).map(|v| cycle.contains(&v)).collect();
    let mut id = vec![0usize; n];
    let mut next = 0;
    for v in 0..n {
        if !in_cycle[v] {
            id[v] = next;
            next += 1;
        }
    }
    let super_node = next;
    for &v in &cycle {
        id[v] = super_node;
    }
    let mut contracted = Vec::new();
    let mut origin = Vec::new();
    for (k, &(u, v, w)) in edges.iter().enumerate() {
        let (cu, cv) = (id[u], id[v]);
        if cu == cv {
            continue;
        }
        let w = if in_cycle[v] { w - edges[best[v].unwrap()].2 } else { w };
        contracted.push((cu, cv, w));
        origin.push(k);
    }
    let sub = arborescence(super_node + 1, id[root], &contracted);
    let mut chosen: Vec<usize> = sub.iter().map(|&k| origin[k]).collect();
    let entering = chosen
        .iter()
        .map(|&k| edges[k].1)
        .find(|&v| in_cycle[v])
        .expect("contracted node has an incoming edge");
    chosen.extend(cycle.iter().filter(|&&v| v != entering).map(|&v| best[v].unwrap()));
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::d6;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn d6_scores() {
        let s = shrinkage_scores(&d6(), 0.5).unwrap();
        assert!((s.alpha_raw[0][1].unwrap() - 1.0).abs() < TOL);
        assert!((s.beta[0][1].unwrap() - 0.2).abs() < TOL);
        assert!((s.m(0, 1).unwrap() - 0.6).abs() < TOL);
        assert!((s.m(0, 2).unwrap() - 0.6).abs() < TOL);
        assert!((s.m(1, 2).unwrap() - 0.75).abs() < TOL);
        let raw = shrinkage_scores(&d6(), 0.0).unwrap();
        assert_eq!(raw.m_score, raw.alpha_raw);
    }

    #[test]
    fn independent_pair_scores_zero() {
        let m = GenotypeMatrix::from_bits(&["x", "y"], &[vec![1, 1], vec![1, 0], vec![0, 1], vec![0, 0]]).unwrap();
        let s = shrinkage_scores(&m, 0.5).unwrap();
        assert_eq!(s.alpha_raw[0][1], Some(0.0));
        assert_eq!(s.beta[0][1], Some(0.0));
        assert_eq!(s.m(0, 1), Some(0.0));
    }

    #[test]
    fn scores_reject_bad_input() {
        assert!(shrinkage_scores(&d6(), 1.5).is_err());
        let m = GenotypeMatrix::from_bits(&["x", "y"], &[vec![1, 1], vec![1, 0]]).unwrap();
        assert!(matches!(shrinkage_scores(&m, 0.5), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn desper_examples() {
        let half = GenotypeMatrix::from_bits(&["x", "y"], &[vec![1, 1], vec![0, 0]]).unwrap();
        assert!(desper_weight(&half, EventId(0), EventId(1)).unwrap().abs() < TOL);
        assert!(desper_weight(&d6(), EventId(0), EventId(1)).unwrap().abs() < TOL);
        let disjoint = GenotypeMatrix::from_bits(&["x", "y"], &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(desper_weight(&disjoint, EventId(0), EventId(1)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn d6_chain() {
        let t = reconstruct_tree(&d6(), 0.5).unwrap();
        assert_eq!(t.parent, vec![None, Some(0), Some(1)]);
        assert!(t.is_valid());
        assert_eq!(reconstruct_tree_with(&d6(), 0.5, TreeSelection::Edmonds).unwrap(), t);
    }

    #[test]
    fn single_event() {
        let m = GenotypeMatrix::from_bits(&["a"], &[vec![1], vec![0]]).unwrap();
        assert_eq!(reconstruct_tree(&m, 0.5).unwrap().parent, vec![None]);
    }

    #[test]
    fn unconsolidated_input_fails() {
        let m = GenotypeMatrix::from_bits(&["a", "b"], &[vec![1, 1], vec![0, 0]]).unwrap();
        assert!(matches!(reconstruct_tree(&m, 0.5), Err(Error::NotConsolidated(_))));
    }

    #[test]
    fn lenient_reconstruction_places_flagged_events() {
        // D6 plus a copy of b and a never-observed event z
        let rows = [[1, 1, 1, 1, 0], [1, 1, 0, 1, 0], [1, 0, 0, 0, 0], [1, 0, 0, 0, 0], [0; 5], [0; 5]];
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        let m = GenotypeMatrix::from_bits(&["a", "b", "c", "b2", "z"], &rows).unwrap();
        let (t, report) = reconstruct_tree_lenient(&m, 0.5, TreeSelection::PerNode).unwrap();
        assert_eq!(report.flagged(), vec![EventId(3), EventId(4)]);
        assert_eq!(t.parent, vec![None, Some(0), Some(1), Some(0), None]);
        assert!(t.is_valid());
        let (clean, _) = reconstruct_tree_lenient(&d6(), 0.5, TreeSelection::PerNode).unwrap();
        assert_eq!(clean, reconstruct_tree(&d6(), 0.5).unwrap());
    }

    #[test]
    fn filter_sends_independent_event_to_root() {
        // c leans on a only weakly, so the root weight wins for it
        let mut rows = Vec::new();
        for (row, times) in [([1, 0, 1], 4), ([1, 0, 0], 2), ([0, 0, 1], 1), ([0, 0, 0], 1), ([1, 1, 0], 1), ([1, 1, 1], 1)] {
            rows.extend(std::iter::repeat_n(row.to_vec(), times));
        }
        let m = GenotypeMatrix::from_bits(&["a", "b", "c"], &rows).unwrap();
        assert!(shrinkage_scores(&m, 0.5).unwrap().m(0, 2).unwrap() > 0.0);
        let t = reconstruct_tree(&m, 0.5).unwrap();
        assert_eq!(t.parent[1], Some(0));
        assert_eq!(t.parent[2], None);
    }

    fn brute_branching(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
        // every node picks a parent among its incoming edges or none
        let incoming: Vec<Vec<(usize, f64)>> =
            (0..n).map(|v| edges.iter().filter(|e| e.1 == v && e.2 > 0.0).map(|e| (e.0, e.2)).collect()).collect();
        let mut best = 0.0f64;
        let mut choice = vec![0usize; n];
        loop {
            let parent: Vec<Option<(usize, f64)>> =
                (0..n).map(|v| if choice[v] == 0 { None } else { Some(incoming[v][choice[v] - 1]) }).collect();
            let acyclic = (0..n).all(|v| {
                let mut cur = v;
                for _ in 0..=n {
                    match parent[cur] {
                        Some((p, _)) => cur = p,
                        None => return true,
                    }
                }
                false
            });
            if acyclic {
                best = best.max(parent.iter().flatten().map(|x| x.1).sum());
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                choice[k] += 1;
                if choice[k] <= incoming[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn branching_matches_brute_force(raw in proptest::collection::vec((0usize..5, 0usize..5, 1u32..20), 0..12)) {
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            for (u, v, w) in raw {
                if u != v && !edges.iter().any(|e| e.0 == u && e.1 == v) {
                    edges.push((u, v, f64::from(w)));
                }
            }
            let parent = max_branching(5, &edges);
            let t = TreeModel { labels: vec![String::new(); 5], parent: parent.clone(), edge_score: vec![None; 5] };
            prop_assert!(t.is_valid());
            let total: f64 = parent.iter().enumerate().filter_map(|(v, p)| p.map(|u| edges.iter().find(|e| e.0 == u && e.1 == v).unwrap().2)).sum();
            prop_assert!((total - brute_branching(5, &edges)).abs() < 1e-9);
        }
    }

    fn random_matrix() -> impl Strategy<Value = GenotypeMatrix> {
        (2usize..6, 4usize..40).prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, n), m).prop_map(move |rows| {
                let labels: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                GenotypeMatrix::from_bits(&refs, &rows).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn normalization_and_coherence(m in random_matrix(), lambda in 0.0f64..=1.0) {
            let Ok(s) = shrinkage_scores(&m, lambda) else { return Ok(()) };
            let n = m.n_events();
            for a in 0..n {
                for b in (0..n).filter(|&b| b != a) {
                    let (al, be) = (s.alpha_raw[a][b].unwrap(), s.beta[a][b].unwrap());
                    let dep = m.joint(EventId(a), EventId(b)).unwrap()
                        - m.marginal(EventId(a)).unwrap() * m.marginal(EventId(b)).unwrap();
                    // coherence: beta symmetric, dependency signs agree
                    prop_assert_eq!(be, s.beta[b][a].unwrap());
                    if dep.abs() > 1e-12 {
                        prop_assert_eq!(dep > 0.0, al > 0.0);
                        prop_assert_eq!(dep > 0.0, be > 0.0);
                    }
                    // monotonic normalization for PR-positive pairs
                    if dep > 1e-12 {
                        let (pa, pb) = (m.marginal(EventId(a)).unwrap(), m.marginal(EventId(b)).unwrap());
                        if (pa - pb).abs() > 1e-12 {
                            prop_assert_eq!(pa > pb, al > s.alpha_raw[b][a].unwrap());
                        }
                    }
                    let mm = s.m(a, b).unwrap();
                    prop_assert!((mm - ((1.0 - lambda) * al + lambda * be)).abs() < TOL);
                }
            }
            let half = shrinkage_scores(&m, 0.5).unwrap();
            for a in 0..n {
                for b in (0..n).filter(|&b| b != a) {
                    let mid = (half.alpha_raw[a][b].unwrap() + half.beta[a][b].unwrap()) / 2.0;
                    prop_assert!((half.m(a, b).unwrap() - mid).abs() < TOL);
                }
            }
        }

        #[test]
        fn trees_are_well_formed(m in random_matrix(), lambda in 0.0f64..=1.0) {
            if !m.consolidate().is_consolidated() {
                return Ok(());
            }
            let t = reconstruct_tree(&m, lambda).unwrap();
            prop_assert!(t.is_valid());
            for (p, j) in t.edges() {
                if let Some(p) = p {
                    prop_assert!(m.marginal(EventId(p)).unwrap() > m.marginal(EventId(j)).unwrap());
                }
            }
            let e = reconstruct_tree_with(&m, lambda, TreeSelection::Edmonds).unwrap();
            prop_assert!(e.is_valid());
        }
    }
}
