//! Structural comparison of reconstructed models against a reference.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::caprese::TreeModel;
use crate::capri::ProgressionModel;
use crate::error::{Error, Result};
use crate::synthgen::GroundTruth;

/// Label of the artificial root in tree structures.
pub const ROOT_LABEL: &str = "◇";

/// Directed edges over labeled nodes. `events` is the base universe that both
/// sides of a comparison must share; clause nodes may appear in edges only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    pub events: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl EdgeSet {
    pub fn new(events: impl IntoIterator<Item = String>, edges: impl IntoIterator<Item = (String, String)>) -> Self {
        EdgeSet {
            events: events.into_iter().collect(),
            edges: edges.into_iter().collect(),
        }
    }

    /// Tree edges including those out of the root.
    pub fn from_tree(t: &TreeModel) -> Self {
        let label = |p: Option<usize>| p.map_or_else(|| ROOT_LABEL.to_string(), |p| t.labels[p].clone());
        EdgeSet::new(
            t.labels.iter().cloned(),
            t.edges().into_iter().map(|(p, j)| (label(p), t.labels[j].clone())),
        )
    }

    pub fn from_model(m: &ProgressionModel) -> Self {
        EdgeSet::new(
            m.labels[..m.n_base].iter().cloned(),
            m.edges().into_iter().map(|(a, b)| (m.labels[a].clone(), m.labels[b].clone())),
        )
    }

    /// Tree-like truths include root edges so they compare against
    /// [`EdgeSet::from_tree`]; DAG truths do not.
    pub fn from_truth(gt: &GroundTruth) -> Self {
        match gt.to_tree() {
            Some(t) if gt.kind.is_tree_like() => EdgeSet::from_tree(&t),
            _ => EdgeSet::new(
                gt.labels.iter().cloned(),
                gt.edges().into_iter().map(|(a, b)| (gt.labels[a].clone(), gt.labels[b].clone())),
            ),
        }
    }
}

fn check_universe(a: &EdgeSet, b: &EdgeSet) -> Result<()> {
    if a.events != b.events {
        let only_a: Vec<_> = a.events.difference(&b.events).cloned().collect();
        let only_b: Vec<_> = b.events.difference(&a.events).cloned().collect();
        return Err(Error::SchemaMismatch(format!(
            "event universes differ (only in first: {only_a:?}, only in second: {only_b:?})"
        )));
    }
    Ok(())
}

/// Number of directed edges present in exactly one of the two sets.
pub fn hamming(a: &EdgeSet, b: &EdgeSet) -> Result<usize> {
    check_universe(a, b)?;
    Ok(a.edges.symmetric_difference(&b.edges).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Tree edit distance, when both sides are trees.
    pub ted: Option<usize>,
    pub hamming: usize,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "ted,hamming,precision,recall,tp,fp,fn";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.ted.map(|t| t.to_string()).unwrap_or_default(),
            self.hamming,
            self.precision,
            self.recall,
            self.tp,
            self.fp,
            self.fn_
        )
    }
}

/// Precision and recall of `inferred` against `truth`. Precision is 1 when
/// nothing was inferred and the truth is empty, 0 when nothing was inferred
/// otherwise; recall is 1 when the truth is empty.
pub fn precision_recall(inferred: &EdgeSet, truth: &EdgeSet) -> Result<EvalReport> {
    check_universe(inferred, truth)?;
    let tp = inferred.edges.intersection(&truth.edges).count();
    let fp = inferred.edges.len() - tp;
    let fn_ = truth.edges.len() - tp;
    let precision = if tp + fp == 0 {
        if truth.edges.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
    Ok(EvalReport {
        ted: None,
        hamming: fp + fn_,
        precision,
        recall,
        tp,
        fp,
        fn_,
    })
}

/// Full report; the tree edit distance is filled in when both sides are
/// tree-shaped.
pub fn evaluate(inferred: &EdgeSet, truth: &EdgeSet) -> Result<EvalReport> {
    let mut report = precision_recall(inferred, truth)?;
    if let (Some(a), Some(b)) = (LabeledTree::from_edges(inferred), LabeledTree::from_edges(truth)) {
        report.ted = Some(zhang_shasha(&a, &b));
    }
    Ok(report)
}

/// Ordered labeled tree with children kept sorted by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    pub label: String,
    pub children: Vec<LabeledTree>,
}

impl LabeledTree {
    pub fn leaf(label: &str) -> Self {
        LabeledTree {
            label: label.to_string(),
            children: Vec::new(),
        }
    }

    pub fn node(label: &str, mut children: Vec<LabeledTree>) -> Self {
        children.sort_by(|a, b| a.label.cmp(&b.label));
        LabeledTree {
            label: label.to_string(),
            children,
        }
    }

    pub fn from_tree(t: &TreeModel) -> Self {
        fn build(t: &TreeModel, node: Option<usize>) -> LabeledTree {
            let label = node.map_or(ROOT_LABEL, |j| t.labels[j].as_str());
            LabeledTree::node(label, t.children(node).into_iter().map(|c| build(t, Some(c))).collect())
        }
        build(t, None)
    }

    /// Rooted at [`ROOT_LABEL`]: every event has exactly one parent and the
    /// structure is connected and acyclic. `None` otherwise.
    pub fn from_edges(s: &EdgeSet) -> Option<Self> {
        let mut nodes: BTreeSet<&str> = s.events.iter().map(String::as_str).collect();
        for (a, b) in &s.edges {
            nodes.insert(a);
            nodes.insert(b);
        }
        nodes.remove(ROOT_LABEL);
        for n in &nodes {
            if s.edges.iter().filter(|(_, b)| b == n).count() != 1 {
                return None;
            }
        }
        if s.edges.iter().any(|(_, b)| b == ROOT_LABEL) {
            return None;
        }
        fn build(s: &EdgeSet, label: &str, budget: &mut usize) -> Option<LabeledTree> {
            *budget = budget.checked_sub(1)?;
            let children = s
                .edges
                .iter()
                .filter(|(a, _)| a == label)
                .map(|(_, b)| build(s, b, budget))
                .collect::<Option<Vec<_>>>()?;
            Some(LabeledTree::node(label, children))
        }
        let mut budget = nodes.len() + 1;
        let tree = build(s, ROOT_LABEL, &mut budget)?;
        (tree.size() == nodes.len() + 1).then_some(tree)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(LabeledTree::size).sum::<usize>()
    }
}

struct Postorder<'a> {
    labels: Vec<&'a str>,
    /// Postorder index of each node's leftmost leaf.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Postorder<'a> {
    fn new(t: &'a LabeledTree) -> Self {
        fn walk<'a>(t: &'a LabeledTree, labels: &mut Vec<&'a str>, leftmost: &mut Vec<usize>) -> usize {
            let mut first = None;
            for c in &t.children {
                let lm = walk(c, labels, leftmost);
                first.get_or_insert(lm);
            }
            let me = labels.len();
            let lm = first.unwrap_or(me);
            labels.push(&t.label);
            leftmost.push(lm);
            lm
        }
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        walk(t, &mut labels, &mut leftmost);
        let n = labels.len();
        // keyroots: the highest node for each distinct leftmost leaf
        let keyroots = (0..n)
            .filter(|&i| !(i + 1..n).any(|k| leftmost[k] == leftmost[i]))
            .collect();
        Postorder {
            labels,
            leftmost,
            keyroots,
        }
    }
}

/// Zhang-Shasha ordered tree edit distance with unit costs.
pub fn zhang_shasha(a: &LabeledTree, b: &LabeledTree) -> usize {
    let (pa, pb) = (Postorder::new(a), Postorder::new(b));
    let (na, nb) = (pa.labels.len(), pb.labels.len());
    let mut td = vec![vec![0usize; nb]; na];
    let mut fd = vec![vec![0usize; nb + 1]; na + 1];
    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let (li, lj) = (pa.leftmost[i], pb.leftmost[j]);
            // fd[x][y] is the forest distance over a[li..li+x) and b[lj..lj+y)
            fd[0][0] = 0;
            for x in 1..=i - li + 1 {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                for y in 1..=j - lj + 1 {
                    let (ai, bj) = (li + x - 1, lj + y - 1);
                    let delete = fd[x - 1][y] + 1;
                    let insert = fd[x][y - 1] + 1;
                    if pa.leftmost[ai] == li && pb.leftmost[bj] == lj {
                        let relabel = fd[x - 1][y - 1] + usize::from(pa.labels[ai] != pb.labels[bj]);
                        fd[x][y] = delete.min(insert).min(relabel);
                        td[ai][bj] = fd[x][y];
                    } else {
                        let (xa, yb) = (pa.leftmost[ai] - li, pb.leftmost[bj] - lj);
                        fd[x][y] = delete.min(insert).min(fd[xa][yb] + td[ai][bj]);
                    }
                }
            }
        }
    }
    td[na - 1][nb - 1]
}

/// Edit distance between two tree models, children ordered by label.
pub fn tree_edit_distance(a: &TreeModel, b: &TreeModel) -> usize {
    zhang_shasha(&LabeledTree::from_tree(a), &LabeledTree::from_tree(b))
}
