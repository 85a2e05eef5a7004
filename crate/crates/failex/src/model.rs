//! Model JSON: variables with their levels, the graph, one table per node,
//! the goal condition and fit metadata.
//!
//! Tables are nested arrays, one nesting level per parent in the listed
//! parent order, innermost a distribution over the child's levels. Output is
//! deterministic: the same network always serializes to the same bytes.

use std::path::Path;

use failex_core::discretize::SchemeEntry;
use failex_core::{BayesNet, Cpt, Dag, DiscretizationScheme, GoalCondition, Intervals, Levels, VariableKind};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::io::{read_json, write_text};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub samples: usize,
    pub seed: Option<u64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableJson {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundaries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagJson {
    nodes: Vec<String>,
    arcs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptJson {
    child: String,
    parents: Vec<String>,
    probabilities: Json,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalJson {
    outcome: String,
    success: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    schema_version: u32,
    variables: Vec<VariableJson>,
    dag: DagJson,
    cpts: Vec<CptJson>,
    goal: GoalJson,
    fit: Option<FitInfo>,
}

/// A network plus how it was fitted (absent for hand-written models).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: BayesNet,
    pub fit: Option<FitInfo>,
}

impl Model {
    pub fn to_json(&self) -> String {
        let net = &self.net;
        let variables = net
            .scheme()
            .entries()
            .iter()
            .map(|e| {
                let (boundaries, labels) = match &e.levels {
                    Levels::Intervals(iv) => (Some(iv.boundaries().to_vec()), None),
                    Levels::Labels(l) => (None, Some(l.clone())),
                };
                VariableJson { name: e.name.clone(), kind: e.kind.as_str().to_string(), boundaries, labels }
            })
            .collect();
        let dag = DagJson {
            nodes: net.dag().nodes().to_vec(),
            arcs: net.dag().arcs().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        };
        let cpts = net
            .cpts()
            .iter()
            .map(|c| {
                let mut dims = c.parent_levels().to_vec();
                dims.push(c.child_levels());
                CptJson {
                    child: c.child().to_string(),
                    parents: c.parents().to_vec(),
                    probabilities: nest(c.probabilities(), &dims),
                    counts: c.counts().map(|n| nest(n, &dims)),
                }
            })
            .collect();
        let doc = ModelJson {
            schema_version: SCHEMA_VERSION,
            variables,
            dag,
            cpts,
            goal: GoalJson { outcome: net.goal().outcome.clone(), success: net.goal().success.clone() },
            fit: self.fit.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text).map_err(|e| Error::input(format!("model JSON: {e}")))?;
        Self::from_doc(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc: ModelJson = read_json(path)?;
        Self::from_doc(doc).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    fn from_doc(doc: ModelJson) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::input(format!("unsupported schema_version {}", doc.schema_version)));
        }
        let mut entries = Vec::with_capacity(doc.variables.len());
        for v in doc.variables {
            let kind = VariableKind::parse(&v.kind)
                .ok_or_else(|| Error::input(format!("variable `{}` has unknown kind `{}`", v.name, v.kind)))?;
            let levels = match (v.boundaries, v.labels) {
                (Some(b), None) if kind == VariableKind::ContinuousCause => Levels::Intervals(Intervals::from_boundaries(b)?),
                (None, Some(l)) if kind != VariableKind::ContinuousCause => Levels::Labels(l),
                _ => {
                    return Err(Error::input(format!(
                        "variable `{}`: continuous causes need `boundaries`, others `labels`",
                        v.name
                    )))
                }
            };
            entries.push(SchemeEntry { name: v.name, kind, levels });
        }
        let scheme = DiscretizationScheme::new(entries)?;
        let arcs: Vec<(&str, &str)> = doc.dag.arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let dag = Dag::from_arcs(&doc.dag.nodes.iter().map(String::as_str).collect::<Vec<_>>(), &arcs)?;
        let mut cpts = Vec::with_capacity(doc.cpts.len());
        for c in doc.cpts {
            let child_levels = scheme.cardinality(&c.child)?;
            let parents = c
                .parents
                .iter()
                .map(|p| Ok((p.clone(), scheme.cardinality(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut dims: Vec<usize> = parents.iter().map(|p| p.1).collect();
            dims.push(child_levels);
            let probs = flatten(&c.probabilities, &dims, |v| v.as_f64())
                .map_err(|e| Error::input(format!("probabilities of `{}`: {e}", c.child)))?;
            let counts = match &c.counts {
                Some(n) => Some(
                    flatten(n, &dims, |v| v.as_u64()).map_err(|e| Error::input(format!("counts of `{}`: {e}", c.child)))?,
                ),
                None => None,
            };
            cpts.push(Cpt::from_probabilities(&c.child, child_levels, parents, probs, counts)?);
        }
        let goal = GoalCondition::new(&doc.goal.outcome, &doc.goal.success);
        let net = BayesNet::new(scheme, dag, cpts, goal)?;
        Ok(Model { net, fit: doc.fit })
    }
}

/// Row-major `flat` as nested arrays of shape `dims`.
fn nest<T: Copy + Into<Json>>(flat: &[T], dims: &[usize]) -> Json {
    match dims {
        [] => unreachable!("a table has at least the child dimension"),
        [_] => Json::Array(flat.iter().map(|&v| v.into()).collect()),
        [_, rest @ ..] => {
            let stride: usize = rest.iter().product();
            Json::Array(flat.chunks(stride).map(|c| nest(c, rest)).collect())
        }
    }
}

fn flatten<T>(value: &Json, dims: &[usize], leaf: impl Fn(&Json) -> Option<T> + Copy) -> std::result::Result<Vec<T>, String> {
    let mut out = Vec::with_capacity(dims.iter().product());
    flatten_into(value, dims, leaf, &mut out)?;
    Ok(out)
}

fn flatten_into<T>(
    value: &Json,
    dims: &[usize],
    leaf: impl Fn(&Json) -> Option<T> + Copy,
    out: &mut Vec<T>,
) -> std::result::Result<(), String> {
    let items = value.as_array().ok_or("expected an array")?;
    if items.len() != dims[0] {
        return Err(format!("array of length {} where {} was expected", items.len(), dims[0]));
    }
    for item in items {
        if dims.len() == 1 {
            out.push(leaf(item).ok_or_else(|| format!("invalid entry {item}"))?);
        } else {
            flatten_into(item, &dims[1..], leaf, out)?;
        }
    }
    Ok(())
}
