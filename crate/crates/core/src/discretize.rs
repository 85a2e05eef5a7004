//! Equal-width discretization of continuous variables.
//!
//! Interval `0` is closed on both ends, every later interval is half-open on
//! the left: `[b0, b1], (b1, b2], ..., (b_{n-1}, b_n]`. A value sitting on a
//! shared boundary therefore belongs to the lower interval.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::variable::{Dataset, Domain, LevelTable, Value, VariableKind, VariableSpec};

/// Slack allowed outside `[lo, hi]` before a value is rejected.
pub const END_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Intervals {
    boundaries: Vec<f64>,
}

impl Intervals {
    pub fn equal_width(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument("non-finite range".into()));
        }
        if lo >= hi || bins < 2 {
            return Err(Error::InvalidArgument(format!("cannot split [{lo}, {hi}] into {bins} intervals")));
        }
        let span = hi - lo;
        let mut boundaries: Vec<f64> = (0..bins).map(|k| lo + span * (k as f64) / (bins as f64)).collect();
        boundaries.push(hi);
        Ok(Intervals { boundaries })
    }

    /// Accepts explicit boundaries, e.g. when reading a saved model.
    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 3 {
            return Err(Error::InvalidArgument("need at least two intervals".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("boundaries must be finite and strictly increasing".into()));
        }
        Ok(Intervals { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lo(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn hi(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1]
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k], self.boundaries[k + 1])
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        let (a, b) = self.bounds(k);
        0.5 * (a + b)
    }

    /// Interval index of `value`, or `None` when it lies outside the range.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        if !value.is_finite() || value < self.lo() - END_TOLERANCE || value > self.hi() + END_TOLERANCE {
            return None;
        }
        // Boundaries computed as lo + span*k/n can land one ulp away from the
        // decimal value a caller types; snap within a tiny fraction of the span.
        let snap = 1e-12 * (self.hi() - self.lo());
        let upper = &self.boundaries[1..];
        let k = upper.partition_point(|&b| b + snap < value);
        Some(k.min(self.len() - 1))
    }

    /// Bracket notation for interval `k`, e.g. `(-0.006,0.006]`.
    pub fn describe(&self, k: usize) -> String {
        let (a, b) = self.bounds(k);
        let open = if k == 0 { '[' } else { '(' };
        format!("{open}{},{}]", round_for_display(a), round_for_display(b))
    }
}

fn round_for_display(x: f64) -> f64 {
    let r = libm::round(x * 1e6) / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Levels {
    Intervals(Intervals),
    Labels(Vec<String>),
}

impl Levels {
    pub fn count(&self) -> usize {
        match self {
            Levels::Intervals(iv) => iv.len(),
            Levels::Labels(l) => l.len(),
        }
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self, Levels::Intervals(_))
    }

    /// Human-readable name of level `k`.
    pub fn describe(&self, k: usize) -> String {
        match self {
            Levels::Intervals(iv) => iv.describe(k),
            Levels::Labels(l) => l[k].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeEntry {
    pub name: String,
    pub kind: VariableKind,
    pub levels: Levels,
}

/// Level structure for every variable in declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationScheme {
    entries: Vec<SchemeEntry>,
}

impl DiscretizationScheme {
    pub fn new(entries: Vec<SchemeEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::InvalidSpec(format!("duplicate variable `{}`", e.name)));
            }
            if e.levels.count() == 0 {
                return Err(Error::InvalidSpec(format!("`{}` has no levels", e.name)));
            }
        }
        Ok(DiscretizationScheme { entries })
    }

    pub fn entries(&self) -> &[SchemeEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Result<&SchemeEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn levels(&self, name: &str) -> Result<&Levels> {
        Ok(&self.entry(name)?.levels)
    }

    pub fn cardinality(&self, name: &str) -> Result<usize> {
        Ok(self.levels(name)?.count())
    }

    /// Level index of a raw value (interval for numbers, label position for labels).
    pub fn level_of(&self, name: &str, value: &Value) -> Result<usize> {
        let entry = self.entry(name)?;
        match (&entry.levels, value) {
            (Levels::Intervals(iv), Value::Number(x)) => {
                if !x.is_finite() {
                    return Err(Error::NonFinite(name.to_string()));
                }
                iv.index_of(*x).ok_or_else(|| Error::OutOfRange {
                    variable: name.to_string(),
                    value: *x,
                    lo: iv.lo(),
                    hi: iv.hi(),
                })
            }
            (Levels::Labels(labels), Value::Label(l)) => labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::UnknownLabel { variable: name.to_string(), label: l.clone() }),
            (Levels::Intervals(_), Value::Label(_)) => {
                Err(Error::WrongValueType { variable: name.to_string(), expected: "numeric" })
            }
            (Levels::Labels(_), Value::Number(_)) => {
                Err(Error::WrongValueType { variable: name.to_string(), expected: "label" })
            }
        }
    }
}

/// Builds equal-width intervals for every continuous variable. A declared
/// `[lo, hi]` wins; otherwise the observed min/max of `dataset` is used.
pub fn build_scheme(specs: &[VariableSpec], dataset: Option<&Dataset>) -> Result<DiscretizationScheme> {
    let mut entries = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let levels = match &spec.domain {
            Domain::Continuous { range: Some((lo, hi)), bins } => Levels::Intervals(Intervals::equal_width(*lo, *hi, *bins)?),
            Domain::Continuous { range: None, bins } => {
                let ds = dataset.ok_or_else(|| {
                    Error::InvalidArgument(format!("`{}` has no declared range and no dataset was given", spec.name))
                })?;
                if ds.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                let col = ds.index_of(&spec.name)?;
                let values = ds
                    .numeric_column(col)
                    .ok_or_else(|| Error::WrongValueType { variable: spec.name.clone(), expected: "numeric" })?;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for v in values {
                    if !v.is_finite() {
                        return Err(Error::NonFinite(spec.name.clone()));
                    }
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if lo >= hi {
                    return Err(Error::InvalidSpec(format!("`{}` takes a single observed value", spec.name)));
                }
                Levels::Intervals(Intervals::equal_width(lo, hi, *bins)?)
            }
            Domain::Labels(labels) => Levels::Labels(labels.clone()),
        };
        entries.push(SchemeEntry { name: spec.name.clone(), kind: spec.kind, levels });
    }
    DiscretizationScheme::new(entries)
}

pub fn discretize_value(var: &str, value: f64, scheme: &DiscretizationScheme) -> Result<usize> {
    scheme.level_of(var, &Value::Number(value))
}

/// Returns a copy of `ds` with its discretized view filled. Raw values are
/// left untouched; categorical columns map to label positions.
pub fn discretize_dataset(ds: &Dataset, scheme: &DiscretizationScheme) -> Result<Dataset> {
    let vars = ds.variables();
    let mut names = Vec::with_capacity(vars.len());
    let mut cards = Vec::with_capacity(vars.len());
    for v in vars {
        names.push(v.name.clone());
        cards.push(scheme.cardinality(&v.name)?);
    }
    let mut columns: Vec<Vec<u16>> = (0..vars.len()).map(|_| Vec::with_capacity(ds.len())).collect();
    for (r, row) in ds.rows().iter().enumerate() {
        for (c, value) in row.iter().enumerate() {
            let level = scheme.level_of(&names[c], value).map_err(|e| e.at_row(r))?;
            columns[c].push(level as u16);
        }
    }
    let mut out = ds.clone();
    out.set_levels(LevelTable::new(names, cards, columns)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn stacking_specs() -> Vec<VariableSpec> {
        vec![
            VariableSpec::continuous("xOff", -0.03, 0.03, 5),
            VariableSpec::continuous("yOff", -0.03, 0.03, 5),
            VariableSpec::continuous("dropOff", 0.004, 0.1, 7),
            VariableSpec::categorical("colorUp", &["Red", "Blue", "Green", "Orange"]),
            VariableSpec::outcome("onTop", &["0", "1"]),
        ]
    }

    #[test]
    fn x_offset_boundaries() {
        let scheme = build_scheme(&stacking_specs(), None).unwrap();
        let Levels::Intervals(iv) = scheme.levels("xOff").unwrap() else { panic!() };
        let expected = [-0.03, -0.018, -0.006, 0.006, 0.018, 0.03];
        for (b, e) in iv.boundaries().iter().zip(expected) {
            assert!((b - e).abs() < 1e-12, "{b} vs {e}");
        }
    }

    #[test]
    fn drop_offset_first_interval() {
        let scheme = build_scheme(&stacking_specs(), None).unwrap();
        let Levels::Intervals(iv) = scheme.levels("dropOff").unwrap() else { panic!() };
        let (a, b) = iv.bounds(0);
        assert_eq!(a, 0.004);
        assert!((b - 0.018).abs() < 5e-4);
        assert!((b - (0.004 + 0.096 / 7.0)).abs() < 1e-15);
    }

    #[test]
    fn unit_range_halving() {
        let iv = Intervals::equal_width(0.0, 1.0, 2).unwrap();
        assert_eq!(iv.boundaries(), &[0.0, 0.5, 1.0]);
        assert_eq!(iv.index_of(0.5), Some(0));
        assert_eq!(iv.index_of(0.5000001), Some(1));
        assert_eq!(iv.describe(0), "[0,0.5]");
        assert_eq!(iv.describe(1), "(0.5,1]");
    }

    #[test]
    fn table_values() {
        let scheme = build_scheme(&stacking_specs(), None).unwrap();
        assert_eq!(discretize_value("xOff", 0.0, &scheme).unwrap(), 2);
        assert_eq!(discretize_value("dropOff", 0.05, &scheme).unwrap(), 3);
        assert_eq!(discretize_value("xOff", -0.018, &scheme).unwrap(), 0);
        assert_eq!(discretize_value("xOff", -0.03, &scheme).unwrap(), 0);
        assert_eq!(discretize_value("xOff", 0.03, &scheme).unwrap(), 4);
        assert_eq!(discretize_value("xOff", 0.03 + 1e-13, &scheme).unwrap(), 4);
    }

    #[test]
    fn out_of_range_names_variable() {
        let scheme = build_scheme(&stacking_specs(), None).unwrap();
        match discretize_value("yOff", 0.031, &scheme) {
            Err(Error::OutOfRange { variable, .. }) => assert_eq!(variable, "yOff"),
            other => panic!("{other:?}"),
        }
        assert!(discretize_value("yOff", f64::NAN, &scheme).is_err());
        assert!(matches!(discretize_value("nope", 0.0, &scheme), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn observed_range() {
        let mut ds = Dataset::new(vec![VariableSpec::continuous_observed("v", 2)]).unwrap();
        let specs = ds.variables().to_vec();
        assert_eq!(build_scheme(&specs, Some(&ds)), Err(Error::EmptyDataset));
        assert!(build_scheme(&specs, None).is_err());
        for x in [1.0, 3.0, 2.5] {
            ds.push_row(vec![Value::Number(x)]).unwrap();
        }
        let scheme = build_scheme(&specs, Some(&ds)).unwrap();
        let Levels::Intervals(iv) = scheme.levels("v").unwrap() else { panic!() };
        assert_eq!(iv.boundaries(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn dataset_discretization() {
        let specs = stacking_specs();
        let scheme = build_scheme(&specs, None).unwrap();
        let ds = Dataset::new(specs.clone()).unwrap();
        let out = discretize_dataset(&ds, &scheme).unwrap();
        assert_eq!(out.levels().unwrap().len(), 0);

        let mut ds = Dataset::new(specs).unwrap();
        let rows = [
            (0.0, -0.02, 0.004, "Blue", "1"),
            (0.029, 0.006, 0.1, "Orange", "0"),
            (-0.018, 0.0061, 0.05, "Red", "1"),
        ];
        for (x, y, z, c, o) in rows {
            ds.push_row(vec![Value::Number(x), Value::Number(y), Value::Number(z), Value::label(c), Value::label(o)])
                .unwrap();
        }
        let out = discretize_dataset(&ds, &scheme).unwrap();
        let lt = out.levels().unwrap();
        assert_eq!(lt.len(), 3);
        assert_eq!(out.rows(), ds.rows());
        for (r, row) in ds.rows().iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let name = &ds.variables()[c].name;
                assert_eq!(lt.column(c)[r] as usize, scheme.level_of(name, v).unwrap());
            }
        }
        assert_eq!(lt.column(3), &[1, 3, 0]);
    }

    #[test]
    fn all_categorical_unchanged() {
        let specs = vec![VariableSpec::categorical("c", &["a", "b"]), VariableSpec::outcome("o", &["0", "1"])];
        let scheme = build_scheme(&specs, None).unwrap();
        let mut ds = Dataset::new(specs).unwrap();
        ds.push_row(vec![Value::label("b"), Value::label("0")]).unwrap();
        let out = discretize_dataset(&ds, &scheme).unwrap();
        assert_eq!(out.rows(), ds.rows());
        assert_eq!(out.levels().unwrap().column(0), &[1]);
    }

    #[test]
    fn row_errors_carry_index() {
        let specs = vec![VariableSpec::continuous_observed("v", 2)];
        let mut ds = Dataset::new(specs.clone()).unwrap();
        ds.push_row(vec![Value::Number(0.0)]).unwrap();
        ds.push_row(vec![Value::Number(5.0)]).unwrap();
        let scheme = build_scheme(&[VariableSpec::continuous("v", 0.0, 1.0, 2)], None).unwrap();
        assert!(matches!(discretize_dataset(&ds, &scheme), Err(Error::Row { row: 1, .. })));
    }

    proptest! {
        #[test]
        fn partition_and_midpoints(lo in -10.0f64..10.0, width in 1e-3f64..20.0, bins in 2usize..40, t in 0.0f64..=1.0) {
            let hi = lo + width;
            let iv = Intervals::equal_width(lo, hi, bins).unwrap();
            prop_assert_eq!(iv.len(), bins);
            let widths: Vec<f64> = (0..bins).map(|k| { let (a, b) = iv.bounds(k); b - a }).collect();
            let max = widths.iter().cloned().fold(f64::MIN, f64::max);
            let min = widths.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(max - min <= 1e-9 * width);
            prop_assert_eq!(iv.lo(), lo);
            prop_assert_eq!(iv.hi(), hi);
            for k in 0..bins {
                prop_assert_eq!(iv.index_of(iv.midpoint(k)), Some(k));
            }
            let v = lo + t * width;
            let k = iv.index_of(v).unwrap();
            let matches = (0..bins).filter(|&j| {
                let (a, b) = iv.bounds(j);
                if j == 0 { v >= a && v <= b } else { v > a && v <= b }
            }).count();
            // one interval under the bracket convention, barring values within the snap of a boundary
            let near_boundary = iv.boundaries().iter().any(|b| (b - v).abs() <= 1e-12 * width);
            if !near_boundary {
                prop_assert_eq!(matches, 1);
                let (a, b) = iv.bounds(k);
                prop_assert!(v <= b && (v > a || k == 0));
            }
        }
    }
}
