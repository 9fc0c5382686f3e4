//! JSON and DOT serialization of reconstructed models.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::caprese::TreeModel;
use crate::capri::{CapriResult, ProgressionModel};
use crate::confidence::{edge_key, hypergeometric_overlap, BootstrapReport};
use crate::dataset::EventId;
use crate::error::{Error, Result};
use crate::eval::{EdgeSet, ROOT_LABEL};
use crate::synthgen::GroundTruth;

pub const ROOT_KIND: &str = "root";
pub const EVENT_KIND: &str = "event";
pub const PATTERN_KIND: &str = "pattern";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfidence {
    /// Temporal priority p-value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tp: Option<f64>,
    /// Probability raising p-value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pr: Option<f64>,
    /// Hypergeometric overlap p-value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hg: Option<f64>,
    /// Nonparametric bootstrap frequency.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub npb: Option<f64>,
}

impl EdgeConfidence {
    /// Value shown on DOT edges: bootstrap frequency first, then the tests.
    pub fn primary(&self) -> Option<f64> {
        self.npb.or(self.tp).or(self.pr).or(self.hg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub label: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confidence: Option<EdgeConfidence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Tree,
    Dag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub structure: Structure,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regularizer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

fn root_node() -> NodeDoc {
    NodeDoc {
        id: ROOT_LABEL.into(),
        label: ROOT_LABEL.into(),
        kind: ROOT_KIND.into(),
        alpha: None,
    }
}

fn event_node(label: &str, kind: &str, alpha: Option<f64>) -> NodeDoc {
    NodeDoc {
        id: label.into(),
        label: label.into(),
        kind: kind.into(),
        alpha,
    }
}

impl ModelDoc {
    pub fn from_tree(t: &TreeModel, seed: Option<u64>) -> Self {
        let mut nodes = vec![root_node()];
        nodes.extend(t.labels.iter().map(|l| event_node(l, EVENT_KIND, None)));
        let edges = t
            .edges()
            .into_iter()
            .map(|(p, j)| EdgeDoc {
                from: p.map_or_else(|| ROOT_LABEL.to_string(), |p| t.labels[p].clone()),
                to: t.labels[j].clone(),
                score: t.edge_score[j],
                confidence: None,
            })
            .collect();
        ModelDoc {
            structure: Structure::Tree,
            nodes,
            edges,
            regularizer: None,
            seed,
        }
    }

    pub fn from_model(m: &ProgressionModel, seed: Option<u64>) -> Self {
        let nodes = (0..m.n_nodes())
            .map(|j| {
                let kind = if j < m.n_base { EVENT_KIND } else { PATTERN_KIND };
                event_node(&m.labels[j], kind, Some(m.labeling[j]))
            })
            .collect();
        let edges = m
            .edges()
            .into_iter()
            .map(|(a, b)| EdgeDoc {
                from: m.labels[a].clone(),
                to: m.labels[b].clone(),
                score: None,
                confidence: None,
            })
            .collect();
        ModelDoc {
            structure: Structure::Dag,
            nodes,
            edges,
            regularizer: Some(m.regularizer.name().to_string()),
            seed,
        }
    }

    /// Model `k` of a CAPRI run with the test p-values and the hypergeometric
    /// overlap attached to each edge.
    pub fn from_capri(result: &CapriResult, k: usize, seed: Option<u64>) -> Result<Self> {
        let model = result
            .models
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("no model {k}")))?;
        let mut doc = Self::from_model(model, seed);
        let data = result.lifted.matrix();
        for (edge, (a, b)) in doc.edges.iter_mut().zip(model.edges()) {
            let pf = result.space.edge(a, b);
            edge.score = pf.map(|e| e.lambda_pr);
            edge.confidence = Some(EdgeConfidence {
                tp: pf.map(|e| e.p_tp),
                pr: pf.map(|e| e.p_pr),
                hg: hypergeometric_overlap(data, EventId(a), EventId(b)).ok(),
                npb: None,
            });
        }
        Ok(doc)
    }

    pub fn from_truth(gt: &GroundTruth) -> Self {
        match gt.to_tree() {
            Some(t) if gt.kind.is_tree_like() => Self::from_tree(&t, None),
            _ => ModelDoc {
                structure: Structure::Dag,
                nodes: (0..gt.n_events())
                    .map(|j| event_node(&gt.labels[j], EVENT_KIND, Some(gt.alpha[j])))
                    .collect(),
                edges: gt
                    .edges()
                    .into_iter()
                    .map(|(a, b)| EdgeDoc {
                        from: gt.labels[a].clone(),
                        to: gt.labels[b].clone(),
                        score: Some(gt.fire_prob[b]),
                        confidence: None,
                    })
                    .collect(),
                regularizer: None,
                seed: None,
            },
        }
    }

    /// Fills `npb` from a bootstrap report keyed the same way.
    pub fn attach_bootstrap(&mut self, report: &BootstrapReport) {
        for e in &mut self.edges {
            let f = report.edge_freq.get(&edge_key(&e.from, &e.to)).copied().unwrap_or(0.0);
            e.confidence.get_or_insert_with(EdgeConfidence::default).npb = Some(f);
        }
    }

    pub fn edge_set(&self) -> EdgeSet {
        EdgeSet::new(
            self.nodes.iter().filter(|n| n.kind == EVENT_KIND).map(|n| n.label.clone()),
            self.edges.iter().map(|e| (e.from.clone(), e.to.clone())),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        if ids.len() != self.nodes.len() {
            return Err(Error::SchemaMismatch("duplicate node id".into()));
        }
        for e in &self.edges {
            for end in [&e.from, &e.to] {
                if !ids.contains(end.as_str()) {
                    return Err(Error::SchemaMismatch(format!("edge endpoint {end:?} is not a node")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph model {\n");
        for n in &self.nodes {
            let shape = match n.kind.as_str() {
                ROOT_KIND => "point",
                PATTERN_KIND => "box",
                _ => "ellipse",
            };
            let _ = writeln!(out, "  {} [label={}, shape={shape}];", quote(&n.id), quote(&n.label));
        }
        for e in &self.edges {
            let label = e.confidence.and_then(|c| c.primary()).or(e.score);
            match label {
                Some(v) => {
                    let _ = writeln!(out, "  {} -> {} [label=\"{v:.4}\"];", quote(&e.from), quote(&e.to));
                }
                None => {
                    let _ = writeln!(out, "  {} -> {};", quote(&e.from), quote(&e.to));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Reads one quoted identifier starting at `s[0] == '"'`; returns it and the
/// remaining input.
fn unquote(s: &str) -> Option<(String, &str)> {
    let mut chars = s.char_indices();
    if chars.next()?.1 != '"' {
        return None;
    }
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        match (escaped, c) {
            (true, c) => {
                out.push(c);
                escaped = false;
            }
            (false, '\\') => escaped = true,
            (false, '"') => return Some((out, &s[i + 1..])),
            (false, c) => out.push(c),
        }
    }
    None
}

/// Edges of a DOT graph written by [`ModelDoc::to_dot`].
pub fn parse_dot_edges(dot: &str) -> Result<BTreeSet<(String, String)>> {
    let mut edges = BTreeSet::new();
    for (n, line) in dot.lines().enumerate() {
        let line = line.trim();
        if !line.starts_with('"') {
            continue;
        }
        let bad = || Error::SchemaMismatch(format!("unreadable DOT line {}", n + 1));
        let (from, rest) = unquote(line).ok_or_else(bad)?;
        let Some(rest) = rest.trim_start().strip_prefix("->") else {
            continue;
        };
        let (to, _) = unquote(rest.trim_start()).ok_or_else(bad)?;
        edges.insert((from, to));
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caprese::{reconstruct_tree, DEFAULT_LAMBDA};
    use crate::capri::{reconstruct, CapriParams};
    use crate::dataset::fixtures::d6;

    #[test]
    fn tree_json_round_trip() {
        let t = reconstruct_tree(&d6(), DEFAULT_LAMBDA).unwrap();
        let doc = ModelDoc::from_tree(&t, Some(3));
        let back = ModelDoc::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.edge_set(), EdgeSet::from_tree(&t));
        assert_eq!(doc.nodes[0].kind, ROOT_KIND);
    }

    #[test]
    fn dot_parse_back_matches_json_edges() {
        let t = reconstruct_tree(&d6(), DEFAULT_LAMBDA).unwrap();
        let doc = ModelDoc::from_tree(&t, None);
        assert_eq!(parse_dot_edges(&doc.to_dot()).unwrap(), doc.edge_set().edges);
    }

    #[test]
    fn dot_escapes_quotes() {
        let mut doc = ModelDoc::from_tree(&reconstruct_tree(&d6(), DEFAULT_LAMBDA).unwrap(), None);
        doc.nodes.push(event_node("odd \"name\"", EVENT_KIND, None));
        doc.edges.push(EdgeDoc {
            from: "a".into(),
            to: "odd \"name\"".into(),
            score: None,
            confidence: None,
        });
        let edges = parse_dot_edges(&doc.to_dot()).unwrap();
        assert!(edges.contains(&("a".to_string(), "odd \"name\"".to_string())));
        assert_eq!(edges, doc.edge_set().edges);
    }

    #[test]
    fn capri_doc_carries_confidence() {
        let base = d6();
        let rows: Vec<usize> = (0..50).flat_map(|_| 0..base.n_samples()).collect();
        let m = base.resample(&rows);
        let params = CapriParams {
            nboot: 20,
            restarts: 2,
            ..CapriParams::default()
        };
        let result = reconstruct(&m, &[], &params).unwrap();
        let doc = ModelDoc::from_capri(&result, 0, Some(0)).unwrap();
        assert_eq!(doc.regularizer.as_deref(), Some("bic"));
        assert!(!doc.edges.is_empty());
        for e in &doc.edges {
            let c = e.confidence.unwrap();
            assert!(c.tp.unwrap() < params.alpha && c.pr.unwrap() < params.alpha);
            assert!((0.0..=1.0).contains(&c.hg.unwrap()));
        }
        assert_eq!(doc.edge_set(), EdgeSet::from_model(&result.models[0]));
        assert_eq!(parse_dot_edges(&doc.to_dot()).unwrap(), doc.edge_set().edges);
        assert!(ModelDoc::from_json(&doc.to_json().unwrap()).is_ok());
    }

    #[test]
    fn dangling_edges_are_rejected() {
        let json = r#"{"structure":"dag","nodes":[{"id":"a","label":"a","kind":"event"}],
            "edges":[{"from":"a","to":"b"}]}"#;
        assert!(matches!(ModelDoc::from_json(json), Err(Error::SchemaMismatch(_))));
    }
}
