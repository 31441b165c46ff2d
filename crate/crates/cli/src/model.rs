//! JSON model files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "type": "discrete",
//!   "variables": [{ "name": "A", "states": ["0", "1"] }, { "name": "T", "states": ["0", "1"] }],
//!   "edges": [["A", "T"]],
//!   "target": "T",
//!   "cpts": [
//!     { "variable": "A", "parents": [], "rows": [{ "given": [], "probs": [0.5, 0.5] }] },
//!     { "variable": "T", "parents": ["A"], "rows": [
//!       { "given": ["0"], "probs": [0.9, 0.1] },
//!       { "given": ["1"], "probs": [0.2, 0.8] }
//!     ] }
//!   ]
//! }
//! ```
//!
//! Gaussian models replace `cpts` with `coefficients` (`{from, to, weight}`)
//! and a `noise_variance` map from variable name to variance; their variables
//! carry no `states`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shapnet::discrete::{Cpt, DiscreteBayesNet};
use shapnet::gaussian::LinearGaussianSem;
use shapnet::{Dag, Scalar};

use crate::error::CliError;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Discrete,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptRow {
    pub given: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptDecl {
    pub variable: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub rows: Vec<CptRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDecl {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "type")]
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub variables: Vec<VariableDecl>,
    pub edges: Vec<(String, String)>,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpts: Option<Vec<CptDecl>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<CoefficientDecl>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<BTreeMap<String, f64>>,
}

/// A parsed, validated model.
#[derive(Debug, Clone)]
pub enum Model<T> {
    Discrete(DiscreteBayesNet<T>),
    Gaussian(LinearGaussianSem<T>),
}

impl<T: Scalar> Model<T> {
    pub fn graph(&self) -> &Dag {
        match self {
            Model::Discrete(net) => net.graph(),
            Model::Gaussian(sem) => sem.graph(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Discrete(_) => ModelKind::Discrete,
            Model::Gaussian(_) => ModelKind::Gaussian,
        }
    }
}

fn schema(field: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema {
        field: field.into(),
        message: msg.to_string(),
    }
}

impl ModelFile {
    /// Parses JSON text, reporting the offending field path, line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Schema {
                field: if path == "." { "<root>".into() } else { path },
                message: inner.to_string(),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn index(
        &self,
        names: &BTreeMap<&str, usize>,
        field: String,
        name: &str,
    ) -> Result<usize, CliError> {
        names
            .get(name)
            .copied()
            .ok_or_else(|| schema(field, format!("unknown variable `{name}`")))
    }

    pub fn build<T: Scalar>(&self) -> Result<Model<T>, CliError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {MODEL_SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let mut names = BTreeMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if names.insert(v.name.as_str(), i).is_some() {
                return Err(schema(
                    format!("variables[{i}].name"),
                    format!("duplicate variable `{}`", v.name),
                ));
            }
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, (p, c)) in self.edges.iter().enumerate() {
            edges.push((
                self.index(&names, format!("edges[{k}][0]"), p)?,
                self.index(&names, format!("edges[{k}][1]"), c)?,
            ));
        }
        let target = self.index(&names, "target".into(), &self.target)?;
        let graph = Dag::new(
            self.variables.iter().map(|v| v.name.clone()),
            &edges,
            target,
        )
        .map_err(|e| schema("edges", e))?;
        match self.kind {
            ModelKind::Discrete => self.build_discrete(graph, &names).map(Model::Discrete),
            ModelKind::Gaussian => self.build_gaussian(graph, &names).map(Model::Gaussian),
        }
    }

    fn build_discrete<T: Scalar>(
        &self,
        graph: Dag,
        names: &BTreeMap<&str, usize>,
    ) -> Result<DiscreteBayesNet<T>, CliError> {
        if self.coefficients.is_some() || self.noise_variance.is_some() {
            return Err(schema(
                "type",
                "discrete models take `cpts`, not coefficients or noise variances",
            ));
        }
        let states: Vec<Vec<String>> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| match &v.states {
                Some(s) if s.len() >= 2 => Ok(s.clone()),
                Some(_) => Err(schema(
                    format!("variables[{i}].states"),
                    "need at least two states",
                )),
                None => Err(schema(format!("variables[{i}]"), "missing field `states`")),
            })
            .collect::<Result<_, _>>()?;
        let decls = self
            .cpts
            .as_ref()
            .ok_or_else(|| schema("cpts", "missing field `cpts`"))?;
        let mut slots: Vec<Option<Cpt<T>>> = vec![None; states.len()];
        for (k, decl) in decls.iter().enumerate() {
            let v = self.index(names, format!("cpts[{k}].variable"), &decl.variable)?;
            if slots[v].is_some() {
                return Err(schema(
                    format!("cpts[{k}].variable"),
                    format!("second table for `{}`", decl.variable),
                ));
            }
            let parents = decl
                .parents
                .iter()
                .enumerate()
                .map(|(j, p)| self.index(names, format!("cpts[{k}].parents[{j}]"), p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut declared = graph.parents(v).iter().collect::<Vec<_>>();
            let mut given = parents.clone();
            declared.sort_unstable();
            given.sort_unstable();
            if declared != given {
                return Err(schema(
                    format!("cpts[{k}].parents"),
                    format!("do not match the parents of `{}` in `edges`", decl.variable),
                ));
            }
            let n_rows: usize = parents.iter().map(|&p| states[p].len()).product();
            let mut rows: Vec<Option<Vec<T>>> = vec![None; n_rows];
            for (r, row) in decl.rows.iter().enumerate() {
                let field = format!("cpts[{k}].rows[{r}]");
                if row.given.len() != parents.len() {
                    return Err(schema(
                        format!("{field}.given"),
                        format!(
                            "expected {} parent states, got {}",
                            parents.len(),
                            row.given.len()
                        ),
                    ));
                }
                let mut idx = 0;
                for (j, (&p, label)) in parents.iter().zip(&row.given).enumerate() {
                    let s = states[p].iter().position(|x| x == label).ok_or_else(|| {
                        schema(
                            format!("{field}.given[{j}]"),
                            format!("`{label}` is not a state of `{}`", self.variables[p].name),
                        )
                    })?;
                    idx = idx * states[p].len() + s;
                }
                if row.probs.len() != states[v].len() {
                    return Err(schema(
                        format!("{field}.probs"),
                        format!(
                            "expected {} probabilities, got {}",
                            states[v].len(),
                            row.probs.len()
                        ),
                    ));
                }
                if let Some((j, p)) = row
                    .probs
                    .iter()
                    .enumerate()
                    .find(|(_, p)| !p.is_finite() || **p < 0.0)
                {
                    return Err(schema(
                        format!("{field}.probs[{j}]"),
                        format!("{p} is not a probability"),
                    ));
                }
                let sum: f64 = row.probs.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(schema(
                        format!("{field}.probs"),
                        format!("sum to {sum}, not 1"),
                    ));
                }
                if rows[idx]
                    .replace(row.probs.iter().map(|&p| T::from_decimal(p)).collect())
                    .is_some()
                {
                    return Err(schema(
                        format!("{field}.given"),
                        "duplicate parent configuration",
                    ));
                }
            }
            let rows = rows
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    schema(
                        format!("cpts[{k}].rows"),
                        format!("expected {n_rows} rows, one per parent configuration"),
                    )
                })?;
            slots[v] = Some(Cpt::new(v, parents, rows));
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(v, c)| {
                c.ok_or_else(|| {
                    schema("cpts", format!("no table for `{}`", self.variables[v].name))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        DiscreteBayesNet::new(graph, states, cpts).map_err(|e| schema("cpts", e))
    }

    fn build_gaussian<T: Scalar>(
        &self,
        graph: Dag,
        names: &BTreeMap<&str, usize>,
    ) -> Result<LinearGaussianSem<T>, CliError> {
        if self.cpts.is_some() {
            return Err(schema(
                "type",
                "gaussian models take coefficients and noise variances, not `cpts`",
            ));
        }
        if let Some(i) = self.variables.iter().position(|v| v.states.is_some()) {
            return Err(schema(
                format!("variables[{i}].states"),
                "gaussian variables have no states",
            ));
        }
        let decls = self
            .coefficients
            .as_ref()
            .ok_or_else(|| schema("coefficients", "missing field `coefficients`"))?;
        let mut coefficients = BTreeMap::new();
        for (k, c) in decls.iter().enumerate() {
            let edge = (
                self.index(names, format!("coefficients[{k}].from"), &c.from)?,
                self.index(names, format!("coefficients[{k}].to"), &c.to)?,
            );
            if !graph.parents(edge.1).contains(edge.0) {
                return Err(schema(
                    format!("coefficients[{k}]"),
                    format!("no edge {} -> {}", c.from, c.to),
                ));
            }
            if !c.weight.is_finite() {
                return Err(schema(
                    format!("coefficients[{k}].weight"),
                    "must be finite",
                ));
            }
            if coefficients
                .insert(edge, T::from_decimal(c.weight))
                .is_some()
            {
                return Err(schema(
                    format!("coefficients[{k}]"),
                    "duplicate coefficient",
                ));
            }
        }
        if let Some(&(p, c)) = graph.edges().iter().find(|e| !coefficients.contains_key(e)) {
            return Err(schema(
                "coefficients",
                format!(
                    "no coefficient for edge {} -> {}",
                    graph.name(p),
                    graph.name(c)
                ),
            ));
        }
        let variances = self
            .noise_variance
            .as_ref()
            .ok_or_else(|| schema("noise_variance", "missing field `noise_variance`"))?;
        for name in variances.keys() {
            self.index(names, format!("noise_variance.{name}"), name)?;
        }
        let noise = self
            .variables
            .iter()
            .map(|v| match variances.get(&v.name) {
                Some(x) if x.is_finite() && *x > 0.0 => Ok(T::from_decimal(*x)),
                Some(x) => Err(schema(
                    format!("noise_variance.{}", v.name),
                    format!("{x} is not a positive variance"),
                )),
                None => Err(schema(
                    "noise_variance",
                    format!("no variance for `{}`", v.name),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        LinearGaussianSem::new(graph, coefficients, noise).map_err(|e| schema("coefficients", e))
    }
}

/// Parses and validates a model file in one step.
pub fn load<T: Scalar>(path: &Path) -> Result<Model<T>, CliError> {
    ModelFile::read(path)?.build()
}
