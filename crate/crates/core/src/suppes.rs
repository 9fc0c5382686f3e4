//! Temporal priority and probability raising tested on bootstrap
//! distributions, the prima facie graph, and residual cycle removal.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::EventId;
use crate::error::{Error, Result};
use crate::patterns::LiftedMatrix;
use crate::rng::stream;

pub const DEFAULT_NBOOT: usize = 100;
pub const DEFAULT_PVALUE: f64 = 0.05;
pub const DEFAULT_MIN_BOOT: usize = 3;

/// Pooled samples at or below this size get an exact p-value.
pub const EXACT_LIMIT: usize = 20;

/// Upper-tail Mann-Whitney U test of "a is stochastically greater than b".
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("Mann-Whitney needs two nonempty samples".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    // doubled midranks keep every rank an integer
    let mut ranks2 = vec![0usize; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let r2 = (i + 1) + (j + 1);
        ranks2[i..=j].fill(r2);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: usize = pooled.iter().zip(&ranks2).filter(|((_, in_a), _)| *in_a).map(|(_, &r)| r).sum();

    if n <= EXACT_LIMIT {
        return Ok(exact_upper_tail(&ranks2, n1, w2));
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = w2 as f64 / 2.0 - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = (u - mean - 0.5) / var.sqrt();
    let normal = Normal::standard();
    Ok(normal.sf(z))
}

/// P(W ≥ w) where W is the sum of `k` doubled ranks drawn without
/// replacement from `ranks2`, all subsets equally likely.
fn exact_upper_tail(ranks2: &[usize], k: usize, w: usize) -> f64 {
    let max_sum: usize = ranks2.iter().sum();
    // ways[c][s]: subsets of size c with doubled-rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    for &r in ranks2 {
        for c in (1..=k).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[c - 1][s - r];
                if add != 0.0 {
                    ways[c][s] += add;
                }
            }
        }
    }
    let total: f64 = ways[k].iter().sum();
    let upper: f64 = ways[k][w..].iter().sum();
    upper / total
}

/// Marginal and pairwise joint frequencies over accepted row resamples.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistributions {
    n_columns: usize,
    /// `marginals[i][r]`: frequency of column `i` in accepted resample `r`.
    marginals: Vec<Vec<f64>>,
    /// `joints[pair(i, j)][r]` for `i < j`.
    joints: Vec<Vec<f64>>,
    /// Resample attempts consumed, accepted or not.
    pub attempts: usize,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl BootstrapDistributions {
    pub fn accepted(&self) -> usize {
        self.marginals.first().map_or(0, Vec::len)
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn marginal(&self, i: usize) -> &[f64] {
        &self.marginals[i]
    }

    pub fn joint(&self, i: usize, j: usize) -> &[f64] {
        &self.joints[pair_index(self.n_columns, i, j)]
    }

    /// Per-resample P(j | i) and P(j | not i).
    pub fn conditionals(&self, j: usize, i: usize) -> (Vec<f64>, Vec<f64>) {
        let pi = self.marginal(i);
        let pj = self.marginal(j);
        let pij = self.joint(i, j);
        let given: Vec<f64> = (0..pi.len()).map(|r| pij[r] / pi[r]).collect();
        let given_not: Vec<f64> = (0..pi.len()).map(|r| (pj[r] - pij[r]) / (1.0 - pi[r])).collect();
        (given, given_not)
    }
}

/// Distinct rows of a matrix, each as its list of set columns.
struct RowPatterns {
    /// Pattern index of each original row.
    of_row: Vec<usize>,
    set_columns: Vec<Vec<usize>>,
}

impl RowPatterns {
    fn new(lifted: &LiftedMatrix) -> Self {
        let m = lifted.matrix();
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut set_columns = Vec::new();
        let of_row = (0..m.n_samples())
            .map(|r| {
                let set: Vec<usize> = (0..m.n_events()).filter(|&c| m.bit(r, EventId(c))).collect();
                *index.entry(set.clone()).or_insert_with(|| {
                    set_columns.push(set);
                    set_columns.len() - 1
                })
            })
            .collect();
        RowPatterns { of_row, set_columns }
    }
}

enum Attempt {
    Accepted { counts: Vec<u32>, joints: Vec<u32> },
    Rejected { degenerate: Vec<usize>, identical: Vec<(usize, usize)> },
}

fn attempt(patterns: &RowPatterns, n_rows: usize, n: usize, seed: u64, index: u64) -> Attempt {
    let mut rng = stream(seed, index);
    let mut weight = vec![0u32; patterns.set_columns.len()];
    for _ in 0..n_rows {
        weight[patterns.of_row[rng.gen_range(0..n_rows)]] += 1;
    }
    let mut counts = vec![0u32; n];
    let mut joints = vec![0u32; n * n.saturating_sub(1) / 2];
    for (p, set) in patterns.set_columns.iter().enumerate() {
        let w = weight[p];
        if w == 0 {
            continue;
        }
        for (a, &i) in set.iter().enumerate() {
            counts[i] += w;
            for &j in &set[a + 1..] {
                joints[pair_index(n, i, j)] += w;
            }
        }
    }
    let degenerate: Vec<usize> = (0..n).filter(|&i| counts[i] == 0 || counts[i] as usize == n_rows).collect();
    let mut identical = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let k = joints[pair_index(n, i, j)];
            if k == counts[i] && k == counts[j] {
                identical.push((i, j));
            }
        }
    }
    if degenerate.is_empty() && identical.is_empty() {
        Attempt::Accepted { counts, joints }
    } else {
        Attempt::Rejected { degenerate, identical }
    }
}

/// Resamples rows with replacement until `k_min` resamples satisfy
/// 0 < P(i) < 1 for every column and P(i|j) < 1 or P(j|i) < 1 for every pair.
///
/// Attempt `r` draws from `stream(seed, r)` and attempts are accepted in index
/// order, so the result does not depend on the thread count.
pub fn bootstrap_distributions(
    lifted: &LiftedMatrix,
    k_min: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<BootstrapDistributions> {
    bootstrap_distributions_with_floor(lifted, k_min, k_min, seed, max_attempts)
}

/// Like [`bootstrap_distributions`] but settles for `floor` accepted
/// resamples when `max_attempts` runs out before `target`.
pub fn bootstrap_distributions_with_floor(
    lifted: &LiftedMatrix,
    target: usize,
    floor: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<BootstrapDistributions> {
    if target == 0 || floor == 0 || floor > target {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= floor <= target resamples (got floor {floor}, target {target})"
        )));
    }
    let m = lifted.matrix();
    let n = m.n_events();
    let n_rows = m.n_samples();
    let patterns = RowPatterns::new(lifted);

    let mut accepted: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(target);
    let mut degenerate_hits = vec![0usize; n];
    let mut identical_hits: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = 0usize;
    let batch = rayon::current_num_threads().max(1) * 8;
    while accepted.len() < target && next < max_attempts {
        let end = (next + batch).min(max_attempts);
        let results: Vec<Attempt> = (next..end)
            .into_par_iter()
            .map(|r| attempt(&patterns, n_rows, n, seed, r as u64))
            .collect();
        for result in results {
            next += 1;
            match result {
                Attempt::Accepted { counts, joints } => {
                    accepted.push((counts, joints));
                    if accepted.len() == target {
                        break;
                    }
                }
                Attempt::Rejected { degenerate, identical } => {
                    degenerate.iter().for_each(|&i| degenerate_hits[i] += 1);
                    identical.into_iter().for_each(|p| *identical_hits.entry(p).or_default() += 1);
                }
            }
        }
    }

    if accepted.len() < floor {
        let header = |i: usize| m.events()[i].header();
        let worst_deg = degenerate_hits.iter().copied().max().unwrap_or(0);
        let worst_id = identical_hits.values().copied().max().unwrap_or(0);
        let mut blamed: Vec<String> = Vec::new();
        if worst_deg > 0 && worst_deg >= worst_id {
            blamed.extend((0..n).filter(|&i| degenerate_hits[i] == worst_deg).map(|i| format!("{} (degenerate)", header(i))));
        }
        if worst_id > 0 && worst_id >= worst_deg {
            let mut pairs: Vec<_> = identical_hits.iter().filter(|(_, &c)| c == worst_id).map(|(p, _)| *p).collect();
            pairs.sort_unstable();
            blamed.extend(pairs.into_iter().map(|(i, j)| format!("{} = {} (indistinguishable)", header(i), header(j))));
        }
        return Err(Error::DegenerateData(format!(
            "{} of {floor} resamples accepted after {next} attempts; offending columns: {}",
            accepted.len(),
            blamed.join(", ")
        )));
    }

    let rows = n_rows as f64;
    let marginals = (0..n).map(|i| accepted.iter().map(|(c, _)| c[i] as f64 / rows).collect()).collect();
    let joints = (0..n * n.saturating_sub(1) / 2)
        .map(|p| accepted.iter().map(|(_, j)| j[p] as f64 / rows).collect())
        .collect();
    Ok(BootstrapDistributions {
        n_columns: n,
        marginals,
        joints,
        attempts: next,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfEdge {
    pub from: usize,
    pub to: usize,
    /// P(from) - P(to) on the original data.
    pub gamma: f64,
    /// P(to | from) - P(to | not from) on the original data.
    pub lambda_pr: f64,
    pub p_tp: f64,
    pub p_pr: f64,
}

impl PfEdge {
    pub fn combined_p(&self) -> f64 {
        self.p_tp.max(self.p_pr)
    }
}

/// Candidate causal edges over the columns of a lifted matrix. Node `i` is
/// column `i`; columns at or past `n_base` are clause nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaFacieGraph {
    pub labels: Vec<String>,
    pub n_base: usize,
    pub edges: Vec<PfEdge>,
}

impl PrimaFacieGraph {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&PfEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edge(from, to).is_some()
    }

    pub fn parents_of(&self, j: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.to == j).map(|e| e.from).collect()
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            out[e.from].push(e.to);
        }
        out
    }

    /// Kahn order, or `None` when the graph has a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        topological_order(self.n_nodes(), self.edges.iter().map(|e| (e.from, e.to)))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

/// Kahn's algorithm; ties resolved by smallest node index.
pub fn topological_order(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (a, b) in edges {
        succ[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.insert(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn reaches(succ: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(&succ[v]);
        }
    }
    false
}

/// Builds the prima facie graph: an edge `i -> j` survives when both point
/// estimates are strictly positive and both one-sided tests reject at `alpha`.
/// Clause nodes only point at the targets of their hypotheses; nothing points
/// at a clause node.
pub fn prima_facie_graph(lifted: &LiftedMatrix, alpha: f64, dists: &BootstrapDistributions) -> Result<PrimaFacieGraph> {
    let m = lifted.matrix();
    let n = m.n_events();
    if dists.n_columns() != n {
        return Err(Error::SchemaMismatch(format!(
            "distributions cover {} columns, lifted matrix has {n}",
            dists.n_columns()
        )));
    }
    let n_base = lifted.n_base();
    let mut pairs = Vec::new();
    for i in 0..n {
        let targets: Vec<usize> = match lifted.clause(EventId(i)) {
            Some(c) => c.targets.iter().map(|t| t.0).collect(),
            None => (0..n_base).filter(|&j| j != i).collect(),
        };
        pairs.extend(targets.into_iter().map(|j| (i, j)));
    }

    let edges: Vec<Option<PfEdge>> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<Option<PfEdge>> {
            let (ei, ej) = (EventId(i), EventId(j));
            let gamma = m.marginal(ei)? - m.marginal(ej)?;
            let lambda_pr = m.conditional(ej, ei, false)? - m.conditional(ej, ei, true)?;
            if gamma <= 0.0 || lambda_pr <= 0.0 {
                return Ok(None);
            }
            let p_tp = mann_whitney_greater(dists.marginal(i), dists.marginal(j))?;
            if p_tp >= alpha {
                return Ok(None);
            }
            let (given, given_not) = dists.conditionals(j, i);
            let p_pr = mann_whitney_greater(&given, &given_not)?;
            if p_pr >= alpha {
                return Ok(None);
            }
            Ok(Some(PfEdge {
                from: i,
                to: j,
                gamma,
                lambda_pr,
                p_tp,
                p_pr,
            }))
        })
        .collect::<Result<_>>()?;

    Ok(PrimaFacieGraph {
        labels: m.events().iter().map(|e| e.header()).collect(),
        n_base,
        edges: edges.into_iter().flatten().collect(),
    })
}

/// Removes edges that lie on directed cycles, least confident first, until
/// the graph is acyclic.
///
/// Confidence is ranked by the larger of the two p-values (larger is worse);
/// ties go to the smaller `lambda_pr`, then to the smaller `(from, to)` pair.
pub fn remove_cycles(g: &PrimaFacieGraph) -> PrimaFacieGraph {
    let mut out = g.clone();
    loop {
        let succ = out.successors();
        let mut candidates: Vec<usize> = (0..out.edges.len())
            .filter(|&k| reaches(&succ, out.edges[k].to, out.edges[k].from))
            .collect();
        if candidates.is_empty() {
            return out;
        }
        candidates.sort_by(|&x, &y| {
            let (a, b) = (&out.edges[x], &out.edges[y]);
            b.combined_p()
                .total_cmp(&a.combined_p())
                .then(a.lambda_pr.total_cmp(&b.lambda_pr))
                .then((a.from, a.to).cmp(&(b.from, b.to)))
        });
        out.edges.remove(candidates[0]);
    }
}
