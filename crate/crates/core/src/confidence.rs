//! Edge and model confidence by resampling, and overlap significance.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::caprese::{reconstruct_tree, TreeModel};
use crate::capri::{reconstruct, CapriParams, ProgressionModel, Regularizer};
use crate::dataset::{EventId, GenotypeMatrix};
use crate::error::{Error, Result};
use crate::eval::EdgeSet;
use crate::patterns::Hypothesis;
use crate::rng::{derive_seed, stream};
use crate::synthgen::{flip_noise, sample_dataset, GroundTruth, StructureKind};

/// Reconstruction rerun on every bootstrap iteration.
#[derive(Debug, Clone)]
pub enum Algo {
    Caprese { lambda: f64 },
    Capri { params: CapriParams, hypotheses: Vec<Hypothesis> },
}

impl Algo {
    /// Edge sets of the reconstructed models: one for CAPRESE, one per
    /// regularizer for CAPRI.
    fn run(&self, m: &GenotypeMatrix) -> Result<Vec<EdgeSet>> {
        match self {
            Algo::Caprese { lambda } => Ok(vec![EdgeSet::from_tree(&reconstruct_tree(m, *lambda)?)]),
            Algo::Capri { params, hypotheses } => {
                Ok(reconstruct(m, hypotheses, params)?.models.iter().map(EdgeSet::from_model).collect())
            }
        }
    }

    fn regularizers(&self) -> Vec<Option<Regularizer>> {
        match self {
            Algo::Caprese { .. } => vec![None],
            Algo::Capri { params, .. } => params.regularizers.iter().map(|&r| Some(r)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapKind {
    Nonparametric,
    Statistical,
    Parametric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub kind: BootstrapKind,
    /// Set for CAPRI runs; each regularizer is tallied on its own.
    pub regularizer: Option<Regularizer>,
    pub nboot: usize,
    /// Iterations whose input the algorithm rejected. They still count in the
    /// denominator.
    pub skipped: usize,
    /// Edges of the reference model, as "from->to".
    pub reference: Vec<String>,
    /// Fraction of iterations inferring each edge; reference edges are always
    /// present.
    pub edge_freq: BTreeMap<String, f64>,
    /// Fraction of iterations reproducing the reference edge set exactly.
    pub model_freq: f64,
}

impl BootstrapReport {
    pub fn freq(&self, from: &str, to: &str) -> f64 {
        self.edge_freq.get(&edge_key(from, to)).copied().unwrap_or(0.0)
    }
}

pub fn edge_key(from: &str, to: &str) -> String {
    format!("{from}->{to}")
}

fn check_nboot(nboot: usize) -> Result<()> {
    if nboot == 0 {
        return Err(Error::InvalidParameter("nboot must be at least 1".into()));
    }
    Ok(())
}

/// Runs `iterate` for each iteration; data errors become skipped iterations.
fn tally(
    kind: BootstrapKind,
    algo: &Algo,
    reference: &[EdgeSet],
    nboot: usize,
    iterate: impl Fn(usize) -> Result<Vec<EdgeSet>> + Sync,
) -> Result<Vec<BootstrapReport>> {
    let outcomes = (0..nboot)
        .into_par_iter()
        .map(|r| match iterate(r) {
            Ok(sets) => Ok(Some(sets)),
            Err(e) if e.is_data_error() => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let regs = algo.regularizers();
    Ok(reference
        .iter()
        .zip(regs)
        .enumerate()
        .map(|(k, (refset, regularizer))| {
            let mut counts: BTreeMap<String, usize> =
                refset.edges.iter().map(|(a, b)| (edge_key(a, b), 0)).collect();
            let mut exact = 0;
            for sets in outcomes.iter().flatten() {
                let got = &sets[k];
                for (a, b) in &got.edges {
                    *counts.entry(edge_key(a, b)).or_default() += 1;
                }
                exact += usize::from(got.edges == refset.edges);
            }
            BootstrapReport {
                kind,
                regularizer,
                nboot,
                skipped,
                reference: refset.edges.iter().map(|(a, b)| edge_key(a, b)).collect(),
                edge_freq: counts.into_iter().map(|(e, c)| (e, c as f64 / nboot as f64)).collect(),
                model_freq: exact as f64 / nboot as f64,
            }
        })
        .collect())
}

/// Row resampling with replacement; the reference model is fit on `m`.
pub fn nonparametric_bootstrap(m: &GenotypeMatrix, algo: &Algo, nboot: usize, seed: u64) -> Result<Vec<BootstrapReport>> {
    check_nboot(nboot)?;
    let reference = algo.run(m)?;
    let n = m.n_samples();
    tally(BootstrapKind::Nonparametric, algo, &reference, nboot, |r| {
        let mut rng = stream(seed, r as u64);
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        algo.run(&m.resample(&rows))
    })
}

/// Fixed data; iteration `r` reruns CAPRI with seed `derive_seed(seed, r)`.
/// The reference uses `seed` itself.
pub fn statistical_bootstrap(
    m: &GenotypeMatrix,
    params: &CapriParams,
    hypotheses: &[Hypothesis],
    nboot: usize,
    seed: u64,
) -> Result<Vec<BootstrapReport>> {
    check_nboot(nboot)?;
    let with_seed = |s: u64| Algo::Capri {
        params: CapriParams { seed: s, ..params.clone() },
        hypotheses: hypotheses.to_vec(),
    };
    let algo = with_seed(seed);
    let reference = algo.run(m)?;
    tally(BootstrapKind::Statistical, &algo, &reference, nboot, |r| {
        with_seed(derive_seed(seed, r as u64)).run(m)
    })
}

/// Data drawn from `model` with flip noise; the reference is the model itself.
/// CAPRESE needs a tree-like model.
pub fn parametric_bootstrap(
    model: &GroundTruth,
    m_rows: usize,
    eps_plus: f64,
    eps_minus: f64,
    algo: &Algo,
    nboot: usize,
    seed: u64,
) -> Result<Vec<BootstrapReport>> {
    check_nboot(nboot)?;
    if !(0.0..1.0).contains(&eps_plus) || !(0.0..1.0).contains(&eps_minus) || eps_plus + eps_minus >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= eps < 1 and eps+ + eps- < 1 (got {eps_plus}, {eps_minus})"
        )));
    }
    model.validate()?;
    let reference = match algo {
        Algo::Caprese { .. } => {
            let tree = model
                .to_tree()
                .ok_or_else(|| Error::InvalidParameter("CAPRESE bootstrap needs a tree-like model".into()))?;
            vec![EdgeSet::from_tree(&tree)]
        }
        Algo::Capri { params, .. } => {
            let dag = EdgeSet::new(
                model.labels.iter().cloned(),
                model.edges().into_iter().map(|(a, b)| (model.labels[a].clone(), model.labels[b].clone())),
            );
            vec![dag; params.regularizers.len()]
        }
    };
    tally(BootstrapKind::Parametric, algo, &reference, nboot, |r| {
        let clean = sample_dataset(model, m_rows, derive_seed(seed, 2 * r as u64))?;
        let noisy = flip_noise(&clean, eps_plus, eps_minus, derive_seed(seed, 2 * r as u64 + 1))?;
        algo.run(&noisy)
    })
}

fn structure_kind(parents: &[Vec<usize>]) -> StructureKind {
    let roots = parents.iter().filter(|ps| ps.is_empty()).count();
    match (parents.iter().all(|ps| ps.len() <= 1), roots <= 1) {
        (true, true) => StructureKind::Tree,
        (true, false) => StructureKind::Forest,
        (false, true) => StructureKind::ConnectedDag,
        (false, false) => StructureKind::DisconnectedDag,
    }
}

/// Generative reading of a tree: roots fire with their marginal, other events
/// with their empirical probability given the parent.
pub fn truth_from_tree(t: &TreeModel, data: &GenotypeMatrix) -> Result<GroundTruth> {
    if data.n_events() != t.n_events() {
        return Err(Error::SchemaMismatch("tree and data have different events".into()));
    }
    let fire_prob = (0..t.n_events())
        .map(|j| match t.parent[j] {
            None => data.marginal(EventId(j)),
            Some(p) => data.conditional(EventId(j), EventId(p), false),
        })
        .collect::<Result<Vec<f64>>>()?;
    let parents: Vec<Vec<usize>> = t.parent.iter().map(|p| p.iter().copied().collect()).collect();
    let gt = GroundTruth {
        labels: t.labels.clone(),
        kind: structure_kind(&parents),
        parents,
        alpha: fire_prob.clone(),
        fire_prob,
        disjunctive: false,
    };
    gt.validate()?;
    Ok(gt)
}

/// Conjunctive reading of a progression model over its base events.
pub fn truth_from_model(pm: &ProgressionModel) -> Result<GroundTruth> {
    if pm.edges().iter().any(|&(a, b)| a >= pm.n_base || b >= pm.n_base) {
        return Err(Error::InvalidParameter(
            "models with pattern nodes have no generative reading".into(),
        ));
    }
    let parents: Vec<Vec<usize>> = pm.parents[..pm.n_base].to_vec();
    let fire_prob = pm.labeling[..pm.n_base].to_vec();
    let order = crate::suppes::topological_order(
        pm.n_base,
        parents.iter().enumerate().flat_map(|(j, ps)| ps.iter().map(move |&p| (p, j))).collect::<Vec<_>>(),
    )
    .ok_or(Error::CyclicSpace)?;
    let mut alpha = vec![0.0; pm.n_base];
    for j in order {
        alpha[j] = fire_prob[j] * parents[j].iter().map(|&p| alpha[p]).product::<f64>();
    }
    let gt = GroundTruth {
        labels: pm.labels[..pm.n_base].to_vec(),
        kind: structure_kind(&parents),
        parents,
        fire_prob,
        alpha,
        disjunctive: false,
    };
    gt.validate()?;
    Ok(gt)
}

/// Upper tail `P(X >= k)` for `X ~ Hypergeometric(N, K, n)`, summed exactly in
/// log space.
pub fn hypergeometric_upper_tail(population: u64, marked: u64, draws: u64, k: u64) -> Result<f64> {
    if marked > population || draws > population {
        return Err(Error::InvalidParameter("hypergeometric counts exceed the population".into()));
    }
    let least = (draws + marked).saturating_sub(population);
    if k <= least {
        return Ok(1.0);
    }
    let (lo, hi) = (k, draws.min(marked));
    if lo > hi {
        return Ok(0.0);
    }
    let denom = ln_binomial(population, draws);
    let p: f64 = (lo..=hi)
        .map(|x| (ln_binomial(marked, x) + ln_binomial(population - marked, draws - x) - denom).exp())
        .sum();
    Ok(p.min(1.0))
}

/// Significance of the co-occurrence of `e1` and `e2`: probability of at least
/// the observed overlap when `count(e1)` rows are drawn without replacement
/// from `m` rows of which `count(e2)` carry `e2`.
pub fn hypergeometric_overlap(m: &GenotypeMatrix, e1: EventId, e2: EventId) -> Result<f64> {
    let rows = m.n_samples();
    for e in [e1, e2] {
        let c = m.count(e);
        if c == 0 || c == rows {
            return Err(Error::DegenerateData(format!(
                "event {:?} has count {c} of {rows}",
                m.meta(e)?.label
            )));
        }
    }
    hypergeometric_upper_tail(rows as u64, m.count(e2) as u64, m.count(e1) as u64, m.joint_count(e1, e2) as u64)
}
