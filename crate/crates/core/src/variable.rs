//! Variable declarations, raw samples and datasets.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    ContinuousCause,
    CategoricalCause,
    Outcome,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::ContinuousCause => "continuous_cause",
            VariableKind::CategoricalCause => "categorical_cause",
            VariableKind::Outcome => "outcome",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous_cause" => Some(VariableKind::ContinuousCause),
            "categorical_cause" => Some(VariableKind::CategoricalCause),
            "outcome" => Some(VariableKind::Outcome),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Numeric range in meters. `range: None` means the range is inferred
    /// from observed data when the scheme is built.
    Continuous { range: Option<(f64, f64)>, bins: usize },
    Labels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub domain: Domain,
}

impl VariableSpec {
    pub fn continuous(name: &str, lo: f64, hi: f64, bins: usize) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind: VariableKind::ContinuousCause,
            domain: Domain::Continuous { range: Some((lo, hi)), bins },
        }
    }

    /// Continuous variable whose range comes from the data.
    pub fn continuous_observed(name: &str, bins: usize) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind: VariableKind::ContinuousCause,
            domain: Domain::Continuous { range: None, bins },
        }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, labels: &[S]) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind: VariableKind::CategoricalCause,
            domain: Domain::Labels(labels.iter().map(|l| l.as_ref().to_string()).collect()),
        }
    }

    pub fn outcome<S: AsRef<str>>(name: &str, labels: &[S]) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind: VariableKind::Outcome,
            domain: Domain::Labels(labels.iter().map(|l| l.as_ref().to_string()).collect()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.domain, Domain::Continuous { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidSpec("empty variable name".into()));
        }
        match (&self.kind, &self.domain) {
            (VariableKind::ContinuousCause, Domain::Continuous { range, bins }) => {
                if *bins < 2 {
                    return Err(Error::InvalidSpec(alloc::format!("`{}` needs at least 2 bins", self.name)));
                }
                if let Some((lo, hi)) = range {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::NonFinite(self.name.clone()));
                    }
                    if lo >= hi {
                        return Err(Error::InvalidSpec(alloc::format!("`{}` has lo >= hi", self.name)));
                    }
                }
                Ok(())
            }
            (VariableKind::CategoricalCause | VariableKind::Outcome, Domain::Labels(labels)) => {
                if labels.is_empty() {
                    return Err(Error::InvalidSpec(alloc::format!("`{}` has no labels", self.name)));
                }
                for (i, l) in labels.iter().enumerate() {
                    if labels[..i].contains(l) {
                        return Err(Error::InvalidSpec(alloc::format!("`{}` repeats label `{}`", self.name, l)));
                    }
                }
                Ok(())
            }
            _ => Err(Error::InvalidSpec(alloc::format!("`{}`: kind and domain disagree", self.name))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Label(String),
}

impl Value {
    pub fn label(s: &str) -> Self {
        Value::Label(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

/// One trial: a value per variable, keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sample {
    pub values: BTreeMap<String, Value>,
}

impl Sample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }
}

/// The goal condition: which labels of the outcome count as success.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalCondition {
    pub outcome: String,
    pub success: Vec<String>,
}

impl GoalCondition {
    pub fn new<S: AsRef<str>>(outcome: &str, success: &[S]) -> Self {
        GoalCondition {
            outcome: outcome.to_string(),
            success: success.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// Checks the success set against the outcome's label set and returns
    /// the success level indices.
    pub fn success_levels(&self, labels: &[String]) -> Result<Vec<usize>> {
        if self.success.is_empty() {
            return Err(Error::InvalidSpec("empty success label set".into()));
        }
        let mut levels = Vec::with_capacity(self.success.len());
        for s in &self.success {
            let idx = labels.iter().position(|l| l == s).ok_or_else(|| Error::UnknownLabel {
                variable: self.outcome.clone(),
                label: s.clone(),
            })?;
            if levels.contains(&idx) {
                return Err(Error::InvalidSpec(alloc::format!("success label `{s}` repeated")));
            }
            levels.push(idx);
        }
        levels.sort_unstable();
        Ok(levels)
    }
}

/// Column-major table of level indices, one column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    names: Vec<String>,
    cards: Vec<usize>,
    columns: Vec<Vec<u16>>,
    rows: usize,
}

impl LevelTable {
    pub fn new(names: Vec<String>, cards: Vec<usize>, columns: Vec<Vec<u16>>) -> Result<Self> {
        if names.len() != cards.len() || names.len() != columns.len() {
            return Err(Error::InvalidArgument("names, cardinalities and columns differ in length".into()));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::InvalidArgument("ragged columns".into()));
            }
            if cards[i] == 0 || cards[i] > u16::MAX as usize {
                return Err(Error::InvalidArgument(alloc::format!("bad cardinality for `{}`", names[i])));
            }
            if col.iter().any(|&v| v as usize >= cards[i]) {
                return Err(Error::InvalidArgument(alloc::format!("level out of range in `{}`", names[i])));
            }
        }
        Ok(LevelTable { names, cards, columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn column(&self, var: usize) -> &[u16] {
        &self.columns[var]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> LevelTable {
        let columns = self.columns.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect();
        LevelTable { names: self.names.clone(), cards: self.cards.clone(), columns, rows: idx.len() }
    }
}

/// Raw trials in declared variable order, plus an optional discretized view.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<VariableSpec>,
    rows: Vec<Vec<Value>>,
    levels: Option<LevelTable>,
}

impl Dataset {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            v.validate()?;
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidSpec(alloc::format!("duplicate variable `{}`", v.name)));
            }
        }
        Ok(Dataset { variables, rows: Vec::new(), levels: None })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// The discretized view, present after [`crate::discretize_dataset`].
    pub fn levels(&self) -> Option<&LevelTable> {
        self.levels.as_ref()
    }

    pub(crate) fn set_levels(&mut self, levels: LevelTable) {
        self.levels = Some(levels);
    }

    /// Appends a row given in declared variable order.
    pub fn push_row(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.variables.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "row has {} values, expected {}",
                row.len(),
                self.variables.len()
            )));
        }
        for (spec, value) in self.variables.iter().zip(&row) {
            check_value(spec, value).map_err(|e| e.at_row(self.rows.len()))?;
        }
        self.rows.push(row);
        self.levels = None;
        Ok(())
    }

    pub fn push_sample(&mut self, sample: &Sample) -> Result<()> {
        let mut row = Vec::with_capacity(self.variables.len());
        for spec in &self.variables {
            let v = sample
                .get(&spec.name)
                .ok_or_else(|| Error::Contract(alloc::format!("sample lacks `{}`", spec.name)))?;
            row.push(v.clone());
        }
        if sample.values.len() != self.variables.len() {
            return Err(Error::Contract("sample has variables outside the dataset".into()));
        }
        self.push_row(row)
    }

    pub fn sample(&self, row: usize) -> Sample {
        let mut s = Sample::new();
        for (spec, v) in self.variables.iter().zip(&self.rows[row]) {
            s.values.insert(spec.name.clone(), v.clone());
        }
        s
    }

    /// Numeric column, `None` for categorical variables.
    pub fn numeric_column(&self, var: usize) -> Option<Vec<f64>> {
        if !self.variables[var].is_continuous() {
            return None;
        }
        Some(
            self.rows
                .iter()
                .map(|r| match r[var] {
                    Value::Number(x) => x,
                    Value::Label(_) => unreachable!("checked on insert"),
                })
                .collect(),
        )
    }
}

fn check_value(spec: &VariableSpec, value: &Value) -> Result<()> {
    match (&spec.domain, value) {
        (Domain::Continuous { range, .. }, Value::Number(x)) => {
            if !x.is_finite() {
                return Err(Error::NonFinite(spec.name.clone()));
            }
            if let Some((lo, hi)) = *range {
                if *x < lo - crate::discretize::END_TOLERANCE || *x > hi + crate::discretize::END_TOLERANCE {
                    return Err(Error::OutOfRange { variable: spec.name.clone(), value: *x, lo, hi });
                }
            }
            Ok(())
        }
        (Domain::Labels(labels), Value::Label(l)) => {
            if labels.contains(l) {
                Ok(())
            } else {
                Err(Error::UnknownLabel { variable: spec.name.clone(), label: l.clone() })
            }
        }
        (Domain::Continuous { .. }, Value::Label(_)) => {
            Err(Error::WrongValueType { variable: spec.name.clone(), expected: "numeric" })
        }
        (Domain::Labels(_), Value::Number(_)) => {
            Err(Error::WrongValueType { variable: spec.name.clone(), expected: "label" })
        }
    }
}
