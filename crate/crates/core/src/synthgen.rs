//! Random ground-truth topologies, sampling from their induced distributions,
//! and noise injection.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caprese::TreeModel;
use crate::dataset::{BitColumn, EventMeta, GenotypeMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, StreamRng};

pub const DEFAULT_P_MIN: f64 = 0.05;
pub const DEFAULT_P_MAX: f64 = 0.95;
/// Largest disjunction a generated disjunctive node may carry.
pub const MAX_DISJUNCTION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    Tree,
    Forest,
    ConnectedDag,
    DisconnectedDag,
}

impl StructureKind {
    pub fn is_tree_like(self) -> bool {
        matches!(self, StructureKind::Tree | StructureKind::Forest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub n_events: usize,
    pub kind: StructureKind,
    /// Largest parent set (forced to 1 for trees and forests).
    pub max_parents: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Number of components for forests and disconnected DAGs.
    pub components: usize,
    pub disjunctive: bool,
    pub seed: u64,
}

impl TopologySpec {
    pub fn tree(n_events: usize, seed: u64) -> Self {
        TopologySpec {
            n_events,
            kind: StructureKind::Tree,
            max_parents: 1,
            p_min: DEFAULT_P_MIN,
            p_max: DEFAULT_P_MAX,
            components: 1,
            disjunctive: false,
            seed,
        }
    }

    pub fn dag(n_events: usize, max_parents: usize, seed: u64) -> Self {
        TopologySpec {
            kind: StructureKind::ConnectedDag,
            max_parents,
            ..TopologySpec::tree(n_events, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_events == 0 {
            return bad("need at least one event".into());
        }
        if !(0.0..=1.0).contains(&self.p_min) || !(0.0..=1.0).contains(&self.p_max) || self.p_min > self.p_max {
            return bad(format!("need 0 <= p_min <= p_max <= 1 (got {}, {})", self.p_min, self.p_max));
        }
        if self.max_parents == 0 {
            return bad("max_parents must be at least 1".into());
        }
        if self.kind.is_tree_like() && self.max_parents != 1 {
            return bad("trees and forests have max_parents = 1".into());
        }
        if self.disjunctive && self.max_parents > MAX_DISJUNCTION {
            return bad(format!("disjunctions are limited to {MAX_DISJUNCTION} parents"));
        }
        let comps = self.component_count();
        if comps == 0 || comps > self.n_events {
            return bad(format!("cannot split {} events into {comps} components", self.n_events));
        }
        Ok(())
    }

    fn component_count(&self) -> usize {
        match self.kind {
            StructureKind::Tree | StructureKind::ConnectedDag => 1,
            StructureKind::Forest | StructureKind::DisconnectedDag => self.components,
        }
    }
}

/// Generating model. Node `j` fires with probability `fire_prob[j]` once its
/// parents allow it: all of them (conjunctive), or a uniformly chosen nonempty
/// subset of them (disjunctive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<String>,
    pub kind: StructureKind,
    pub parents: Vec<Vec<usize>>,
    pub fire_prob: Vec<f64>,
    /// Edge probability for tree-like models; product-rule node value for DAGs.
    pub alpha: Vec<f64>,
    pub disjunctive: bool,
}

impl GroundTruth {
    pub fn n_events(&self) -> usize {
        self.parents.len()
    }

    /// Sorted `(from, to)` edges between events.
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

    pub fn roots(&self) -> Vec<usize> {
        (0..self.n_events()).filter(|&j| self.parents[j].is_empty()).collect()
    }

    /// The tree view, when every event has at most one parent.
    pub fn to_tree(&self) -> Option<TreeModel> {
        if self.parents.iter().any(|ps| ps.len() > 1) {
            return None;
        }
        Some(TreeModel {
            labels: self.labels.clone(),
            parent: self.parents.iter().map(|ps| ps.first().copied()).collect(),
            edge_score: self.fire_prob.iter().map(|&p| Some(p)).collect(),
        })
    }

    /// Levels counted from 1 at the roots.
    pub fn depth(&self, j: usize) -> usize {
        1 + self.parents[j].iter().map(|&p| self.depth(p)).max().unwrap_or(0)
    }

    /// Kahn order; generated models are acyclic by construction.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        crate::suppes::topological_order(self.n_events(), self.edges())
            .ok_or_else(|| Error::InvalidParameter("ground truth contains a cycle".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_events();
        if self.labels.len() != n || self.fire_prob.len() != n || self.alpha.len() != n {
            return Err(Error::SchemaMismatch("ground truth arrays differ in length".into()));
        }
        if self.parents.iter().flatten().any(|&p| p >= n) {
            return Err(Error::SchemaMismatch("parent index out of range".into()));
        }
        if self.fire_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("firing probability outside [0, 1]".into()));
        }
        self.topological_order().map(|_| ())
    }
}

fn level_count(n: usize) -> usize {
    (n.max(1) as f64).log2().ceil().max(2.0) as usize
}

/// Levels 2..=L for `k` non-root events, every level used at least once.
fn draw_levels(rng: &mut StreamRng, k: usize, n: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let top = level_count(n);
    loop {
        let levels: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=top)).collect();
        if (2..=top).all(|l| levels.contains(&l)) {
            return levels;
        }
    }
}

struct Component {
    parents: Vec<Vec<usize>>,
    fire_prob: Vec<f64>,
    alpha: Vec<f64>,
}

/// One connected component over local indices `0..n`; the root is picked
/// uniformly.
fn component(rng: &mut StreamRng, n: usize, spec: &TopologySpec, tree: bool) -> Component {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let root = order[0];
    let others = &order[1..];
    let levels = draw_levels(rng, others.len(), n);
    let mut level_of = vec![1usize; n];
    for (&e, &l) in others.iter().zip(&levels) {
        level_of[e] = l;
    }
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); level_count(n) + 1];
    for e in 0..n {
        by_level[level_of[e]].push(e);
    }

    let mut parents = vec![Vec::new(); n];
    for &e in others {
        let pool = &by_level[level_of[e] - 1];
        let k = if tree {
            1
        } else {
            rng.gen_range(1..=spec.max_parents).min(pool.len())
        };
        let mut ps: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
        ps.sort_unstable();
        parents[e] = ps;
    }

    let draw = |rng: &mut StreamRng| rng.gen_range(spec.p_min..=spec.p_max);
    let mut fire_prob = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    fire_prob[root] = draw(rng);
    alpha[root] = fire_prob[root];
    // parents sit one level up, so increasing level is a topological order
    let mut by_depth: Vec<usize> = others.to_vec();
    by_depth.sort_by_key(|&e| level_of[e]);
    for e in by_depth {
        let y = draw(rng);
        fire_prob[e] = y;
        alpha[e] = if tree { y } else { y * parents[e].iter().map(|&p| alpha[p]).product::<f64>() };
    }
    Component {
        parents,
        fire_prob,
        alpha,
    }
}

/// Uniform composition of `n` into `k` positive parts.
fn composition(rng: &mut StreamRng, n: usize, k: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(n);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let size = c - prev;
            prev = c;
            size
        })
        .collect()
}

fn generate(spec: &TopologySpec, tree: bool) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = stream(spec.seed, 0);
    let n = spec.n_events;
    let sizes = composition(&mut rng, n, spec.component_count());
    // events are assigned to components in a random order
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut parents = vec![Vec::new(); n];
    let mut fire_prob = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut offset = 0;
    for size in sizes {
        let local = &ids[offset..offset + size];
        let c = component(&mut rng, size, spec, tree);
        for (li, &g) in local.iter().enumerate() {
            let mut ps: Vec<usize> = c.parents[li].iter().map(|&p| local[p]).collect();
            ps.sort_unstable();
            parents[g] = ps;
            fire_prob[g] = c.fire_prob[li];
            alpha[g] = c.alpha[li];
        }
        offset += size;
    }
    let width = n.to_string().len();
    Ok(GroundTruth {
        labels: (0..n).map(|i| format!("e{:0width$}", i + 1)).collect(),
        kind: spec.kind,
        parents,
        fire_prob,
        alpha,
        disjunctive: spec.disjunctive,
    })
}

/// Random tree or forest: levels in `[2, L]` below the root with
/// `L = max(2, ceil(log2 n))`, one parent from the level above, edge
/// probabilities uniform in `[p_min, p_max]`.
pub fn random_tree(spec: &TopologySpec) -> Result<GroundTruth> {
    if !spec.kind.is_tree_like() {
        return Err(Error::InvalidParameter("random_tree needs a tree or forest spec".into()));
    }
    generate(spec, true)
}

/// Random DAG: as for trees, but each event draws `1..=max_parents` parents
/// from the level above, and its node value is `y` times the parents' values.
pub fn random_dag(spec: &TopologySpec) -> Result<GroundTruth> {
    if spec.kind.is_tree_like() {
        return Err(Error::InvalidParameter("random_dag needs a DAG spec".into()));
    }
    generate(spec, false)
}

/// Random DAG whose parent sets act as disjunctions of at most three events.
pub fn disjunctive_dag(spec: &TopologySpec) -> Result<GroundTruth> {
    if !spec.disjunctive {
        return Err(Error::InvalidParameter("spec does not request disjunctive patterns".into()));
    }
    random_dag(spec)
}

fn sample_row(gt: &GroundTruth, order: &[usize], rng: &mut StreamRng) -> Vec<bool> {
    let mut fired = vec![false; gt.n_events()];
    for &j in order {
        let ps = &gt.parents[j];
        let open = if ps.is_empty() {
            true
        } else if gt.disjunctive {
            // uniform nonempty subset of the parents
            let mask = rng.gen_range(1..(1u32 << ps.len()));
            ps.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).all(|(_, &p)| fired[p])
        } else {
            ps.iter().all(|&p| fired[p])
        };
        let coin: f64 = rng.gen();
        fired[j] = open && coin < gt.fire_prob[j];
    }
    fired
}

/// Draws `m_rows` independent samples; row `r` uses its own derived stream.
pub fn sample_dataset(gt: &GroundTruth, m_rows: usize, seed: u64) -> Result<GenotypeMatrix> {
    if m_rows == 0 {
        return Err(Error::InvalidParameter("m_rows must be at least 1".into()));
    }
    gt.validate()?;
    let order = gt.topological_order()?;
    let rows: Vec<Vec<bool>> = (0..m_rows)
        .into_par_iter()
        .map(|r| sample_row(gt, &order, &mut stream(seed, r as u64)))
        .collect();
    let columns = (0..gt.n_events()).map(|j| BitColumn::from_bools(rows.iter().map(|row| row[j]))).collect();
    GenotypeMatrix::new(
        sample_names(m_rows),
        gt.labels.iter().map(EventMeta::plain).collect(),
        columns,
    )
}

fn sample_names(m: usize) -> Vec<String> {
    let width = m.to_string().len();
    (1..=m).map(|i| format!("s{i:0width$}")).collect()
}

fn map_cells(m: &GenotypeMatrix, seed: u64, f: impl Fn(bool, &mut StreamRng) -> bool + Sync) -> Result<GenotypeMatrix> {
    let n = m.n_events();
    let rows: Vec<Vec<bool>> = (0..m.n_samples())
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            (0..n).map(|j| f(m.bit(r, crate::dataset::EventId(j)), &mut rng)).collect()
        })
        .collect();
    let columns = (0..n).map(|j| BitColumn::from_bools(rows.iter().map(|row| row[j]))).collect();
    GenotypeMatrix::new(m.samples().to_vec(), m.events().to_vec(), columns)
}

/// Each cell is, with probability `nu`, replaced by a fair coin.
pub fn apply_noise(m: &GenotypeMatrix, nu: f64, seed: u64) -> Result<GenotypeMatrix> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::InvalidParameter(format!("noise level {nu} outside [0, 1)")));
    }
    if nu == 0.0 {
        return Ok(m.clone());
    }
    map_cells(m, derive_seed(seed, u64::MAX), |bit, rng| {
        let (replace, coin): (f64, bool) = (rng.gen(), rng.gen());
        if replace < nu {
            coin
        } else {
            bit
        }
    })
}

/// Flips 0 to 1 with probability `eps_plus` and 1 to 0 with `eps_minus`.
pub fn flip_noise(m: &GenotypeMatrix, eps_plus: f64, eps_minus: f64, seed: u64) -> Result<GenotypeMatrix> {
    if !(0.0..1.0).contains(&eps_plus) || !(0.0..1.0).contains(&eps_minus) || eps_plus + eps_minus >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= eps < 1 and eps+ + eps- < 1 (got {eps_plus}, {eps_minus})"
        )));
    }
    map_cells(m, derive_seed(seed, u64::MAX - 1), |bit, rng| {
        let u: f64 = rng.gen();
        if bit {
            u >= eps_minus
        } else {
            u < eps_plus
        }
    })
}
