//! Evaluation report output and the empirical table CSV
//! (`<parent columns...>,successes,trials`).

use std::fmt::Write as _;
use std::io::Write;

use failex_core::eval::{EmpiricalTable, EvalReport};
use failex_core::params::parent_tuples;
use failex_core::{BayesNet, Levels, Value};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::RawTable;
use crate::model::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CvJson<'a> {
    folds: usize,
    losses: &'a [f64],
    mean: f64,
    std: f64,
    single_class_folds: &'a [usize],
    degenerate_folds: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ViolationJson<'a> {
    axis: &'a str,
    inner: usize,
    outer: usize,
    context: &'a [usize],
    delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportJson<'a> {
    schema_version: u32,
    cv: Option<CvJson<'a>>,
    agreement: Option<f64>,
    agreement_cells: Option<usize>,
    violations: Vec<ViolationJson<'a>>,
}

/// `agreement_cells` is the grid size the agreement was computed on.
pub fn report_json(report: &EvalReport, agreement_cells: Option<usize>) -> String {
    let doc = ReportJson {
        schema_version: SCHEMA_VERSION,
        cv: report.cv.as_ref().map(|cv| CvJson {
            folds: cv.folds,
            losses: &cv.losses,
            mean: cv.mean,
            std: cv.std,
            single_class_folds: &cv.single_class_folds,
            degenerate_folds: &cv.degenerate_folds,
        }),
        agreement: report.agreement,
        agreement_cells,
        violations: report
            .violations
            .iter()
            .map(|v| ViolationJson { axis: &v.axis, inner: v.inner, outer: v.outer, context: &v.context, delta: v.delta })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Human-readable summary of a report.
pub fn report_summary(report: &EvalReport, agreement_cells: Option<usize>) -> String {
    let mut s = String::new();
    if let Some(cv) = &report.cv {
        let _ = writeln!(s, "cross-validation: {} folds", cv.folds);
        for (k, l) in cv.losses.iter().enumerate() {
            let _ = writeln!(s, "  fold {:>2}: loss {l:.6}", k + 1);
        }
        let _ = writeln!(s, "  mean loss {:.6}, std {:.6}", cv.mean, cv.std);
        if !cv.single_class_folds.is_empty() {
            let _ = writeln!(s, "  single-class test folds: {:?}", one_based(&cv.single_class_folds));
        }
        if !cv.degenerate_folds.is_empty() {
            let _ = writeln!(s, "  folds learned without structure (degenerate test): {:?}", one_based(&cv.degenerate_folds));
        }
    }
    if let Some(a) = report.agreement {
        let _ = writeln!(s, "agreement: {a:.6} over {} cells", agreement_cells.unwrap_or(0));
    }
    let worst = report.violations.iter().map(|v| v.delta).fold(0.0, f64::max);
    let _ = writeln!(s, "monotonicity violations: {} (largest {worst:.6})", report.violations.len());
    s
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|k| k + 1).collect()
}

/// Reads an empirical table. Parent cells hold raw values (numbers for
/// interval variables, labels otherwise) and are mapped to the model's
/// levels; repeated cells are summed.
pub fn read_empirical(raw: &RawTable, net: &BayesNet) -> Result<EmpiricalTable> {
    let n = raw.headers.len();
    if n < 3 || raw.headers[n - 2] != "successes" || raw.headers[n - 1] != "trials" {
        return Err(Error::input("empirical table must end with columns `successes,trials`"));
    }
    let vars: Vec<String> = raw.headers[..n - 2].to_vec();
    let parents = net.outcome_parents();
    if vars.len() != parents.len() || !parents.iter().all(|p| vars.contains(p)) {
        return Err(Error::input(format!("empirical table columns {vars:?} differ from the outcome's parents {parents:?}")));
    }
    let mut table = EmpiricalTable::new(vars.clone());
    for (r, row) in raw.rows.iter().enumerate() {
        let line = r + 2;
        let tuple = vars
            .iter()
            .zip(row)
            .map(|(v, cell)| {
                let value = match net.scheme().levels(v)? {
                    Levels::Intervals(_) => Value::Number(
                        cell.parse().map_err(|_| Error::input(format!("line {line}: `{v}` is not a number: {cell:?}")))?,
                    ),
                    Levels::Labels(_) => Value::Label(cell.clone()),
                };
                net.scheme().level_of(v, &value).map_err(|e| Error::input(format!("line {line}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let count = |cell: &str, what: &str| -> Result<u64> {
            cell.parse().map_err(|_| Error::input(format!("line {line}: {what} is not a count: {cell:?}")))
        };
        let successes = count(&row[n - 2], "successes")?;
        let trials = count(&row[n - 1], "trials")?;
        table
            .record(tuple, successes, trials)
            .map_err(|e| Error::input(format!("line {line}: {e}")))?;
    }
    Ok(table)
}

/// Writes an empirical table; interval levels are written as midpoints.
pub fn write_empirical<W: Write>(writer: W, net: &BayesNet, table: &EmpiricalTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.variables.iter().map(String::as_str).collect();
    header.extend(["successes", "trials"]);
    w.write_record(&header).map_err(|e| Error::input(e.to_string()))?;
    for (tuple, &(s, n)) in &table.cells {
        let mut rec = Vec::with_capacity(tuple.len() + 2);
        for (v, &l) in table.variables.iter().zip(tuple) {
            rec.push(match net.scheme().levels(v)? {
                Levels::Intervals(iv) => iv.midpoint(l).to_string(),
                Levels::Labels(names) => names[l].clone(),
            });
        }
        rec.push(s.to_string());
        rec.push(n.to_string());
        w.write_record(&rec).map_err(|e| Error::input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))?;
    Ok(())
}

/// The training counts behind the outcome table, as an empirical table in
/// parent order. Needs a fitted model (tables with counts).
pub fn count_table(net: &BayesNet) -> Result<EmpiricalTable> {
    let cpt = net.outcome_cpt();
    let counts = cpt.counts().ok_or_else(|| Error::input("model carries no counts"))?;
    let labels = match net.scheme().levels(&net.goal().outcome)? {
        Levels::Labels(l) => l.clone(),
        Levels::Intervals(_) => unreachable!("the outcome is categorical"),
    };
    let success = net.goal().success_levels(&labels)?;
    let k = cpt.child_levels();
    let mut table = EmpiricalTable::new(cpt.parents().to_vec());
    for (row, tuple) in parent_tuples(cpt.parent_levels()).into_iter().enumerate() {
        let cells = &counts[row * k..(row + 1) * k];
        let trials: u64 = cells.iter().sum();
        if trials > 0 {
            let s: u64 = success.iter().map(|&l| cells[l]).sum();
            table.record(tuple, s, trials)?;
        }
    }
    Ok(table)
}
