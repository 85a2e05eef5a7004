//! The steps behind each subcommand, callable without a process.

use failex_core::eval::{agreement_score, cross_validate, empirical_table, monotonicity_report, EmpiricalTable, EvalReport};
use failex_core::{
    build_scheme, discretize_dataset, explain_failure, fit_mle, learn_structure, render_explanation,
    Dataset, ExplanationResult, GoalCondition, Lexicon, Sample, VariableSpec,
};

use crate::error::{Error, Result};
use crate::io::{parse_value, RawTable};
use crate::model::{FitInfo, Model};

/// Parses `name=bins,name=bins,...`.
pub fn parse_bins(s: &str) -> Result<Vec<(String, usize)>> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for part in s.split(',') {
        let (name, n) = part
            .split_once('=')
            .ok_or_else(|| Error::input(format!("--bins: expected NAME=COUNT, got {part:?}")))?;
        let name = name.trim();
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("--bins: `{name}` has a non-integer bin count {n:?}")))?;
        if name.is_empty() || n < 2 {
            return Err(Error::input(format!("--bins: {part:?} needs a name and at least 2 bins")));
        }
        if out.iter().any(|(m, _)| m == name) {
            return Err(Error::input(format!("--bins: `{name}` given twice")));
        }
        out.push((name.to_string(), n));
    }
    Ok(out)
}

/// Parses `name=lo:hi`.
pub fn parse_range(s: &str) -> Result<(String, f64, f64)> {
    let bad = || Error::input(format!("--range: expected NAME=LO:HI, got {s:?}"));
    let (name, r) = s.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = r.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((name.trim().to_string(), lo, hi))
}

/// Parses `name=value`.
pub fn parse_setting(s: &str) -> Result<(String, String)> {
    let (name, v) = s
        .split_once('=')
        .ok_or_else(|| Error::input(format!("--set: expected NAME=VALUE, got {s:?}")))?;
    Ok((name.trim().to_string(), v.trim().to_string()))
}

pub struct LearnOptions {
    pub bins: Vec<(String, usize)>,
    pub ranges: Vec<(String, f64, f64)>,
    pub outcome: String,
    pub success: Vec<String>,
    pub alpha: f64,
    pub seed: Option<u64>,
}

/// Variable declarations for a CSV: binned columns are continuous causes,
/// the outcome takes its observed labels, everything else is categorical
/// with its observed labels. Labels are sorted.
pub fn infer_specs(raw: &RawTable, opts: &LearnOptions) -> Result<Vec<VariableSpec>> {
    for (name, _) in &opts.bins {
        if raw.column(name).is_none() {
            return Err(Error::input(format!("--bins names `{name}`, which is not a CSV column")));
        }
    }
    for (name, _, _) in &opts.ranges {
        if !opts.bins.iter().any(|(b, _)| b == name) {
            return Err(Error::input(format!("--range given for `{name}`, which has no --bins entry")));
        }
    }
    if raw.column(&opts.outcome).is_none() {
        return Err(Error::input(format!("outcome `{}` is not a CSV column", opts.outcome)));
    }
    if opts.bins.iter().any(|(b, _)| *b == opts.outcome) {
        return Err(Error::input("the outcome cannot be binned"));
    }
    let mut specs = Vec::with_capacity(raw.headers.len());
    for (col, name) in raw.headers.iter().enumerate() {
        let spec = if let Some((_, bins)) = opts.bins.iter().find(|(b, _)| b == name) {
            match opts.ranges.iter().find(|(r, _, _)| r == name) {
                Some(&(_, lo, hi)) => VariableSpec::continuous(name, lo, hi, *bins),
                None => VariableSpec::continuous_observed(name, *bins),
            }
        } else if *name == opts.outcome {
            VariableSpec::outcome(name, &raw.distinct(col))
        } else {
            VariableSpec::categorical(name, &raw.distinct(col))
        };
        specs.push(spec);
    }
    Ok(specs)
}

pub struct Learned {
    pub model: Model,
    /// Per node: (name, zero-support parent tuples, all parent tuples).
    pub zero_support: Vec<(String, usize, usize)>,
}

/// Discretize, learn the graph, fit the tables.
pub fn learn(raw: &RawTable, opts: &LearnOptions) -> Result<Learned> {
    let specs = infer_specs(raw, opts)?;
    let ds = raw.to_dataset(specs.clone())?;
    if ds.is_empty() {
        return Err(Error::input("the data file has no rows"));
    }
    let scheme = build_scheme(&specs, Some(&ds))?;
    let goal = GoalCondition::new(&opts.outcome, &opts.success);
    let discretized = discretize_dataset(&ds, &scheme)?;
    let table = discretized.levels().expect("filled by discretize_dataset");
    let dag = learn_structure(table, opts.alpha, Some(&opts.outcome))?;
    let net = fit_mle(table, &scheme, &dag, &goal)?;
    let zero_support = net
        .cpts()
        .iter()
        .map(|c| (c.child().to_string(), c.zero_support_rows(), c.rows()))
        .collect();
    let fit = FitInfo { samples: ds.len(), seed: opts.seed, alpha: opts.alpha };
    Ok(Learned { model: Model { net, fit: Some(fit) }, zero_support })
}

/// Declarations matching a model's scheme, for reading data against it.
pub fn model_specs(model: &Model) -> Vec<VariableSpec> {
    model
        .net
        .scheme()
        .entries()
        .iter()
        .map(|e| match &e.levels {
            failex_core::Levels::Intervals(iv) => VariableSpec::continuous(&e.name, iv.lo(), iv.hi(), iv.len()),
            failex_core::Levels::Labels(l) => {
                let mut s = VariableSpec::categorical(&e.name, l);
                s.kind = e.kind;
                s
            }
        })
        .collect()
}

/// Builds the failure sample from `name=value` settings.
pub fn failure_sample(model: &Model, settings: &[(String, String)]) -> Result<Sample> {
    let specs = model_specs(model);
    let mut sample = Sample::new();
    for (name, raw) in settings {
        let spec = specs
            .iter()
            .find(|s| &s.name == name)
            .ok_or_else(|| Error::input(format!("--set names unknown variable `{name}`")))?;
        if sample.get(name).is_some() {
            return Err(Error::input(format!("--set gives `{name}` twice")));
        }
        sample = sample.with(name, parse_value(spec, raw)?);
    }
    Ok(sample)
}

pub struct Explained {
    pub result: ExplanationResult,
    pub text: String,
}

pub fn explain(model: &Model, settings: &[(String, String)], epsilon: f64, lexicon: &Lexicon) -> Result<Explained> {
    let sample = failure_sample(model, settings)?;
    let result = explain_failure(&model.net, &sample, epsilon)?;
    let text = render_explanation(&result, lexicon)?;
    Ok(Explained { result, text })
}

pub struct EvaluateOptions {
    pub folds: usize,
    pub alpha: f64,
    pub seed: u64,
}

pub struct Evaluated {
    pub report: EvalReport,
    pub agreement_cells: Option<usize>,
}

/// Cross-validation on `data` with the model's discretization and goal,
/// agreement against `empirical` (or the data's own success rates) and the
/// monotonicity check of the model.
pub fn evaluate(model: &Model, data: &Dataset, empirical: Option<&EmpiricalTable>, opts: &EvaluateOptions) -> Result<Evaluated> {
    let net = &model.net;
    let cv = cross_validate(data, net.scheme(), net.goal(), opts.alpha, opts.folds, opts.seed)?;
    let own;
    let table = match empirical {
        Some(t) => t,
        None => {
            own = empirical_table(data, net)?;
            &own
        }
    };
    let freq = table.frequencies();
    let agreement = agreement_score(net, &freq)?;
    let violations = monotonicity_report(net)?;
    Ok(Evaluated {
        report: EvalReport { cv: Some(cv), agreement: Some(agreement), violations },
        agreement_cells: Some(freq.cells.len()),
    })
}
