//! Regularized maximum-likelihood DAG fitting inside the prima facie space.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ConsolidationReport, EventId, GenotypeMatrix};
use crate::error::{Error, Result};
use crate::patterns::{lift, Hypothesis, LiftedMatrix};
use crate::rng::{derive_seed, stream};
use crate::suppes::{
    bootstrap_distributions_with_floor, prima_facie_graph, remove_cycles, PrimaFacieGraph, DEFAULT_MIN_BOOT,
    DEFAULT_NBOOT, DEFAULT_PVALUE,
};

/// Score improvements at or below this are treated as ties.
pub const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    Bic,
    Aic,
}

impl Regularizer {
    /// Penalty per parameter in the maximize-LL convention.
    pub fn penalty(self, n_rows: usize) -> f64 {
        match self {
            Regularizer::Bic => (n_rows as f64).ln() / 2.0,
            Regularizer::Aic => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regularizer::Bic => "bic",
            Regularizer::Aic => "aic",
        }
    }
}

impl std::str::FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(Regularizer::Bic),
            "aic" => Ok(Regularizer::Aic),
            other => Err(Error::InvalidParameter(format!("unknown regularizer {other:?}"))),
        }
    }
}

/// Parameter count per node with `k` parents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamCount {
    /// `2^k`: one Bernoulli parameter per parent configuration.
    #[default]
    PerConfiguration,
    /// `2^k - 1`.
    FreeParameters,
}

impl ParamCount {
    pub fn node(self, n_parents: usize) -> usize {
        let full = 1usize << n_parents;
        match self {
            ParamCount::PerConfiguration => full,
            ParamCount::FreeParameters => full - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionModel {
    /// Column headers of the lifted matrix; node `i` is column `i`.
    pub labels: Vec<String>,
    /// Columns at or past this index are clause nodes.
    pub n_base: usize,
    /// Sorted parent lists.
    pub parents: Vec<Vec<usize>>,
    pub labeling: Vec<f64>,
    pub regularizer: Regularizer,
    pub log_likelihood: f64,
    pub score: f64,
}

impl ProgressionModel {
    pub fn n_nodes(&self) -> usize {
        self.parents.len()
    }

    /// Edges sorted by (from, to).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(j, ps)| ps.iter().map(move |&p| (p, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_acyclic(&self) -> bool {
        crate::suppes::topological_order(self.n_nodes(), self.edges()).is_some()
    }
}

/// Rows split by parent configuration: `(rows, rows with the child set)` per
/// configuration index, where bit `k` of the index is parent `k`.
fn family_counts(data: &GenotypeMatrix, j: usize, parents: &[usize]) -> Vec<(usize, usize)> {
    let mut counts = vec![(0usize, 0usize); 1 << parents.len()];
    let child = data.column(EventId(j));
    let cols: Vec<_> = parents.iter().map(|&p| data.column(EventId(p))).collect();
    for r in 0..data.n_samples() {
        let mut config = 0usize;
        for (k, c) in cols.iter().enumerate() {
            config |= (c.get(r) as usize) << k;
        }
        counts[config].0 += 1;
        counts[config].1 += child.get(r) as usize;
    }
    counts
}

/// Log-likelihood of column `j` given `parents`, with one pseudo-count added
/// to each cell of every parent configuration.
pub fn family_log_likelihood(data: &GenotypeMatrix, j: usize, parents: &[usize]) -> f64 {
    family_counts(data, j, parents)
        .into_iter()
        .filter(|&(n, _)| n > 0)
        .map(|(n, ones)| {
            let zeros = n - ones;
            let denom = (n + 2) as f64;
            ones as f64 * ((ones + 1) as f64 / denom).ln() + zeros as f64 * ((zeros + 1) as f64 / denom).ln()
        })
        .sum()
}

fn check_schema(parents: &[Vec<usize>], data: &GenotypeMatrix) -> Result<()> {
    let n = data.n_events();
    if parents.len() != n || parents.iter().flatten().any(|&p| p >= n) {
        return Err(Error::SchemaMismatch(format!(
            "model has {} nodes, data has {n} columns",
            parents.len()
        )));
    }
    Ok(())
}

pub fn log_likelihood(parents: &[Vec<usize>], data: &GenotypeMatrix) -> Result<f64> {
    check_schema(parents, data)?;
    Ok(parents.iter().enumerate().map(|(j, ps)| family_log_likelihood(data, j, ps)).sum())
}

pub fn dimension(parents: &[Vec<usize>], count: ParamCount) -> usize {
    parents.iter().map(|ps| count.node(ps.len())).sum()
}

pub fn regularized_score(log_likelihood: f64, dimension: usize, n_rows: usize, reg: Regularizer) -> f64 {
    log_likelihood - reg.penalty(n_rows) * dimension as f64
}

/// P(j) without parents, else P(j | every parent present) (0 when the parents
/// never co-occur). No smoothing.
pub fn labeling(data: &GenotypeMatrix, j: usize, parents: &[usize]) -> f64 {
    let child = data.column(EventId(j));
    if parents.is_empty() {
        return child.count_ones() as f64 / data.n_samples() as f64;
    }
    let mut all = data.column(EventId(parents[0])).clone();
    for &p in &parents[1..] {
        all = all.and(data.column(EventId(p)));
    }
    let support = all.count_ones();
    if support == 0 {
        0.0
    } else {
        all.and_count(child) as f64 / support as f64
    }
}

/// Assembles a model with its labeling, likelihood and score.
pub fn build_model(
    lifted: &LiftedMatrix,
    mut parents: Vec<Vec<usize>>,
    reg: Regularizer,
    count: ParamCount,
) -> Result<ProgressionModel> {
    let data = lifted.matrix();
    parents.iter_mut().for_each(|ps| ps.sort_unstable());
    let log_likelihood = log_likelihood(&parents, data)?;
    let score = regularized_score(log_likelihood, dimension(&parents, count), data.n_samples(), reg);
    let labeling = parents.iter().enumerate().map(|(j, ps)| labeling(data, j, ps)).collect();
    Ok(ProgressionModel {
        labels: data.events().iter().map(|e| e.header()).collect(),
        n_base: lifted.n_base(),
        parents,
        labeling,
        regularizer: reg,
        log_likelihood,
        score,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClimbParams {
    /// Accepted moves per restart.
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub param_count: ParamCount,
}

impl Default for HillClimbParams {
    fn default() -> Self {
        HillClimbParams {
            max_iter: 10_000,
            restarts: 10,
            seed: 0,
            param_count: ParamCount::PerConfiguration,
        }
    }
}

struct FamilyScorer<'a> {
    data: &'a GenotypeMatrix,
    penalty: f64,
    count: ParamCount,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl FamilyScorer<'_> {
    fn score(&mut self, j: usize, parents: &[usize]) -> f64 {
        if let Some(&s) = self.cache.get(&(j, parents.to_vec())) {
            return s;
        }
        let s = family_log_likelihood(self.data, j, parents) - self.penalty * self.count.node(parents.len()) as f64;
        self.cache.insert((j, parents.to_vec()), s);
        s
    }
}

/// Whether `to` is reachable from `from` along parent links reversed.
fn reaches(parents: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut stack = vec![to];
    let mut seen = vec![false; parents.len()];
    // walk ancestors of `to`; `from` reaching `to` means `from` is one of them
    while let Some(v) = stack.pop() {
        if v == from {
            return true;
        }
        for &p in &parents[v] {
            if !seen[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    false
}

/// One greedy run: from the empty graph, repeatedly shuffle every single-edge
/// toggle and take the first that strictly improves the score. With
/// `acyclic`, additions that would close a cycle are skipped.
fn climb(
    n: usize,
    moves: &[(usize, usize)],
    scorer: &mut FamilyScorer,
    max_iter: usize,
    rng: &mut crate::rng::StreamRng,
    acyclic: bool,
) -> (Vec<Vec<usize>>, f64) {
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut family: Vec<f64> = (0..n).map(|j| scorer.score(j, &[])).collect();
    let mut moves = moves.to_vec();
    moves.sort_unstable();
    for _ in 0..max_iter {
        moves.shuffle(rng);
        let mut accepted = false;
        for &(from, to) in &moves {
            let mut next = parents[to].clone();
            match next.binary_search(&from) {
                Ok(pos) => {
                    next.remove(pos);
                }
                Err(pos) => {
                    if acyclic && reaches(&parents, to, from) {
                        continue;
                    }
                    next.insert(pos, from)
                }
            }
            let s = scorer.score(to, &next);
            if s - family[to] > IMPROVEMENT_EPS {
                parents[to] = next;
                family[to] = s;
                accepted = true;
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    (parents, family.iter().sum())
}

/// Parallel restarts over `moves`; ties keep the earliest run.
fn best_of_restarts(
    data: &GenotypeMatrix,
    moves: &[(usize, usize)],
    reg: Regularizer,
    params: &HillClimbParams,
    acyclic: bool,
) -> (Vec<Vec<usize>>, f64) {
    let restarts = params.restarts.max(1);
    let runs: Vec<(Vec<Vec<usize>>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut scorer = FamilyScorer {
                data,
                penalty: reg.penalty(data.n_samples()),
                count: params.param_count,
                cache: HashMap::new(),
            };
            let mut rng = stream(params.seed, r as u64);
            climb(data.n_events(), moves, &mut scorer, params.max_iter, &mut rng, acyclic)
        })
        .collect();
    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 + IMPROVEMENT_EPS {
            best = k;
        }
    }
    runs.into_iter().nth(best).unwrap()
}

/// Best model over `params.restarts` greedy runs; ties keep the earliest run.
pub fn hill_climb(
    space: &PrimaFacieGraph,
    lifted: &LiftedMatrix,
    reg: Regularizer,
    params: &HillClimbParams,
) -> Result<ProgressionModel> {
    let data = lifted.matrix();
    check_schema(&vec![Vec::new(); space.n_nodes()], data)?;
    if !space.is_acyclic() {
        return Err(Error::CyclicSpace);
    }
    let moves: Vec<(usize, usize)> = space.edges.iter().map(|e| (e.from, e.to)).collect();
    let (parents, _) = best_of_restarts(data, &moves, reg, params, false);
    build_model(lifted, parents, reg, params.param_count)
}

/// Hill climbing over candidate edges that may form cycles; every accepted
/// state stays acyclic. Returns parent sets and the regularized score.
pub fn hill_climb_acyclic(
    data: &GenotypeMatrix,
    candidates: &[(usize, usize)],
    reg: Regularizer,
    params: &HillClimbParams,
) -> Result<(Vec<Vec<usize>>, f64)> {
    check_schema(&vec![Vec::new(); data.n_events()], data)?;
    if candidates.iter().any(|&(a, b)| a == b || a >= data.n_events() || b >= data.n_events()) {
        return Err(Error::InvalidParameter("candidate edges must join distinct events".into()));
    }
    Ok(best_of_restarts(data, candidates, reg, params, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapriParams {
    pub alpha: f64,
    /// Target number of accepted bootstrap resamples.
    pub nboot: usize,
    /// Fewest accepted resamples the tests will run on.
    pub min_boot: usize,
    /// Resample attempts allowed; 0 means `100 * nboot`.
    pub max_attempts: usize,
    pub regularizers: Vec<Regularizer>,
    pub seed: u64,
    pub max_iter: usize,
    pub restarts: usize,
    pub param_count: ParamCount,
}

impl Default for CapriParams {
    fn default() -> Self {
        CapriParams {
            alpha: DEFAULT_PVALUE,
            nboot: DEFAULT_NBOOT,
            min_boot: DEFAULT_MIN_BOOT,
            max_attempts: 0,
            regularizers: vec![Regularizer::Bic, Regularizer::Aic],
            seed: 0,
            max_iter: 10_000,
            restarts: 10,
            param_count: ParamCount::PerConfiguration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapriResult {
    pub lifted: LiftedMatrix,
    /// Prima facie graph after cycle removal.
    pub space: PrimaFacieGraph,
    /// One model per requested regularizer, in request order.
    pub models: Vec<ProgressionModel>,
}

/// Lifting, bootstrap testing, cycle removal and one fit per regularizer.
pub fn reconstruct(m: &GenotypeMatrix, hyps: &[Hypothesis], params: &CapriParams) -> Result<CapriResult> {
    m.require_consolidated()?;
    if params.regularizers.is_empty() {
        return Err(Error::InvalidParameter("no regularizer requested".into()));
    }
    let lifted = lift(m, hyps)?;
    let max_attempts = if params.max_attempts == 0 {
        params.nboot.saturating_mul(100)
    } else {
        params.max_attempts
    };
    let dists = bootstrap_distributions_with_floor(
        &lifted,
        params.nboot,
        params.min_boot.min(params.nboot),
        derive_seed(params.seed, 0),
        max_attempts,
    )?;
    let space = remove_cycles(&prima_facie_graph(&lifted, params.alpha, &dists)?);
    let models = params
        .regularizers
        .par_iter()
        .enumerate()
        .map(|(k, &reg)| {
            let hc = HillClimbParams {
                max_iter: params.max_iter,
                restarts: params.restarts,
                seed: derive_seed(params.seed, 1 + k as u64),
                param_count: params.param_count,
            };
            hill_climb(&space, &lifted, reg, &hc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapriResult { lifted, space, models })
}

/// Hypothesis-free CAPRI on data that may hold degenerate or duplicate
/// columns. The fit runs on the consolidated columns; flagged events get no
/// edges. Models are rescored on the full data.
pub fn reconstruct_lenient(m: &GenotypeMatrix, params: &CapriParams) -> Result<(Vec<ProgressionModel>, ConsolidationReport)> {
    let report = m.consolidate();
    let flagged = report.flagged();
    let kept: Vec<EventId> = m.event_ids().filter(|e| !flagged.contains(e)).collect();
    let full = LiftedMatrix::plain(m);
    let sub_models = if kept.len() >= 2 {
        reconstruct(&m.select_columns(&kept), &[], params)?.models
    } else {
        Vec::new()
    };
    let models = params
        .regularizers
        .iter()
        .enumerate()
        .map(|(k, &reg)| {
            let mut parents = vec![Vec::new(); m.n_events()];
            if let Some(sub) = sub_models.get(k) {
                for (j, ps) in sub.parents.iter().enumerate() {
                    parents[kept[j].0] = ps.iter().map(|&p| kept[p].0).collect();
                }
            }
            build_model(&full, parents, reg, params.param_count)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((models, report))
}
