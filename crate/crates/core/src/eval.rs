//! Model evaluation: cross-validated log loss of the outcome, agreement
//! between model and empirical success rates, and monotonicity checks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretize::{discretize_dataset, DiscretizationScheme, Levels};
use crate::error::{Error, Result};
use crate::params::{fit_mle, parent_tuples, BayesNet};
use crate::structure::{learn_structure, Dag};
use crate::variable::{Dataset, GoalCondition, LevelTable};

/// Probabilities are floored here before taking logs.
pub const LOSS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: usize,
    pub losses: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    /// Folds whose test split holds a single outcome class.
    pub single_class_folds: Vec<usize>,
    /// Folds where structure learning hit a degenerate test and an empty
    /// graph was used instead.
    pub degenerate_folds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub axis: String,
    pub inner: usize,
    pub outer: usize,
    /// Parent tuple (CPT order) at the inner level.
    pub context: Vec<usize>,
    /// `P(success | outer) - P(success | inner)`, positive.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub cv: Option<CvReport>,
    pub agreement: Option<f64>,
    pub violations: Vec<Violation>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Stratified fold index for every row: rows of each outcome class are
/// shuffled and dealt round-robin.
pub fn stratified_folds(outcome: &[u16], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = outcome.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut fold_of = vec![0usize; outcome.len()];
    let mut next = 0usize;
    for class in 0..classes {
        let mut rows: Vec<usize> = (0..outcome.len()).filter(|&r| outcome[r] as usize == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            fold_of[r] = next % folds;
            next += 1;
        }
    }
    fold_of
}

/// Mean negative log-likelihood (natural log) of the observed outcome given
/// its parents in `net`, over the rows of `test`.
pub fn outcome_log_loss(net: &BayesNet, test: &LevelTable) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cpt = net.outcome_cpt();
    let outcome = test.index_of(cpt.child())?;
    let parents: Vec<usize> = cpt.parents().iter().map(|p| test.index_of(p)).collect::<Result<_>>()?;
    let mut tuple = vec![0usize; parents.len()];
    let mut total = 0.0;
    for r in 0..test.len() {
        for (t, &p) in tuple.iter_mut().zip(&parents) {
            *t = test.column(p)[r] as usize;
        }
        let p = cpt.row(&tuple)?[test.column(outcome)[r] as usize];
        total -= libm::log(p.max(LOSS_FLOOR));
    }
    Ok(total / test.len() as f64)
}

/// k-fold cross-validation: per fold, relearn structure and parameters on
/// the training rows and score the held-out rows with [`outcome_log_loss`].
pub fn cross_validate(
    ds: &Dataset,
    scheme: &DiscretizationScheme,
    goal: &GoalCondition,
    alpha: f64,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if ds.len() < folds {
        return Err(Error::InvalidArgument(format!("{} rows cannot fill {folds} folds", ds.len())));
    }
    let discretized = discretize_dataset(ds, scheme)?;
    let table = discretized.levels().expect("filled by discretize_dataset");
    let outcome = table.index_of(&goal.outcome)?;
    let fold_of = stratified_folds(table.column(outcome), folds, seed);

    let mut losses = Vec::with_capacity(folds);
    let mut single_class_folds = Vec::new();
    let mut degenerate_folds = Vec::new();
    for k in 0..folds {
        let train_rows: Vec<usize> = (0..table.len()).filter(|&r| fold_of[r] != k).collect();
        let test_rows: Vec<usize> = (0..table.len()).filter(|&r| fold_of[r] == k).collect();
        let train = table.subset(&train_rows);
        let test = table.subset(&test_rows);
        let first = test.column(outcome)[0];
        if test.column(outcome).iter().all(|&v| v == first) {
            single_class_folds.push(k);
        }
        let dag = match learn_structure(&train, alpha, Some(&goal.outcome)) {
            Ok(d) => d,
            Err(Error::DegenerateTest { .. }) => {
                degenerate_folds.push(k);
                Dag::new(table.names().to_vec())?
            }
            Err(e) => return Err(e),
        };
        let net = fit_mle(&train, scheme, &dag, goal)?;
        losses.push(outcome_log_loss(&net, &test)?);
    }
    let (mean, std) = mean_std(&losses);
    Ok(CvReport { folds, losses, mean, std, single_class_folds, degenerate_folds })
}

/// Success probabilities on a grid of parent tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    pub variables: Vec<String>,
    pub cells: BTreeMap<Vec<usize>, f64>,
}

/// Success counts on a grid of parent tuples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmpiricalTable {
    pub variables: Vec<String>,
    /// tuple -> (successes, trials)
    pub cells: BTreeMap<Vec<usize>, (u64, u64)>,
}

impl EmpiricalTable {
    pub fn new(variables: Vec<String>) -> Self {
        EmpiricalTable { variables, cells: BTreeMap::new() }
    }

    pub fn record(&mut self, tuple: Vec<usize>, successes: u64, trials: u64) -> Result<()> {
        if tuple.len() != self.variables.len() {
            return Err(Error::GridMismatch(format!("tuple of length {} on a {}-variable grid", tuple.len(), self.variables.len())));
        }
        if successes > trials {
            return Err(Error::InvalidArgument(format!("{successes} successes out of {trials} trials")));
        }
        let cell = self.cells.entry(tuple).or_insert((0, 0));
        cell.0 += successes;
        cell.1 += trials;
        Ok(())
    }

    /// Success frequencies; cells with zero trials are dropped.
    pub fn frequencies(&self) -> ProbTable {
        ProbTable {
            variables: self.variables.clone(),
            cells: self
                .cells
                .iter()
                .filter(|(_, &(_, n))| n > 0)
                .map(|(k, &(s, n))| (k.clone(), s as f64 / n as f64))
                .collect(),
        }
    }
}

/// Mean of `1 - |a - b|` over the shared grid.
pub fn agreement(a: &ProbTable, b: &ProbTable) -> Result<f64> {
    if a.variables != b.variables {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.variables, b.variables)));
    }
    if a.cells.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    if a.cells.len() != b.cells.len() || a.cells.keys().zip(b.cells.keys()).any(|(x, y)| x != y) {
        return Err(Error::GridMismatch("tables cover different cells".into()));
    }
    let total: f64 = a.cells.values().zip(b.cells.values()).map(|(p, q)| 1.0 - libm::fabs(p - q)).sum();
    Ok(total / a.cells.len() as f64)
}

/// The model's success probabilities on the cells of `grid`, in the grid's
/// variable order. The grid's variables must be exactly the outcome's parents.
pub fn model_table(net: &BayesNet, grid: &ProbTable) -> Result<ProbTable> {
    let parents = net.outcome_parents();
    if grid.variables.len() != parents.len() {
        return Err(Error::GridMismatch(format!("grid over {:?}, outcome parents {:?}", grid.variables, parents)));
    }
    let perm: Vec<usize> = parents
        .iter()
        .map(|p| {
            grid.variables
                .iter()
                .position(|v| v == p)
                .ok_or_else(|| Error::GridMismatch(format!("grid lacks parent `{p}`")))
        })
        .collect::<Result<_>>()?;
    let mut cells = BTreeMap::new();
    for key in grid.cells.keys() {
        let tuple: Vec<usize> = perm.iter().map(|&i| key[i]).collect();
        let p = net
            .success_prob_at(&tuple)
            .map_err(|e| Error::GridMismatch(format!("{e}")))?;
        cells.insert(key.clone(), p.p);
    }
    Ok(ProbTable { variables: grid.variables.clone(), cells })
}

/// Agreement between the model and an empirical table on the empirical grid.
pub fn agreement_score(model: &BayesNet, empirical: &ProbTable) -> Result<f64> {
    if empirical.cells.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    agreement(&model_table(model, empirical)?, empirical)
}

/// Observed success counts per outcome-parent tuple in `ds` (parent order).
pub fn empirical_table(ds: &Dataset, net: &BayesNet) -> Result<EmpiricalTable> {
    let parents = net.outcome_parents().to_vec();
    let outcome = ds.index_of(&net.goal().outcome)?;
    let cols: Vec<usize> = parents.iter().map(|p| ds.index_of(p)).collect::<Result<_>>()?;
    let success = match net.scheme().levels(&net.goal().outcome)? {
        Levels::Labels(l) => net.goal().success_levels(l)?,
        Levels::Intervals(_) => unreachable!("checked by BayesNet::new"),
    };
    let mut table = EmpiricalTable::new(parents.clone());
    for (r, row) in ds.rows().iter().enumerate() {
        let tuple = cols
            .iter()
            .zip(&parents)
            .map(|(&c, p)| net.scheme().level_of(p, &row[c]))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_row(r))?;
        let o = net.scheme().level_of(&net.goal().outcome, &row[outcome]).map_err(|e| e.at_row(r))?;
        table.record(tuple, success.contains(&o) as u64, 1)?;
    }
    Ok(table)
}

/// Pairs `(inner, outer)` to compare along an ordinal axis. Axes whose range
/// straddles zero are read as offsets and walked outward from the center
/// interval(s); other axes are walked in increasing order.
fn outward_pairs(levels: &Levels) -> Vec<(usize, usize)> {
    let Levels::Intervals(iv) = levels else { return Vec::new() };
    let n = iv.len();
    if !(iv.lo() < 0.0 && iv.hi() > 0.0) {
        return (0..n - 1).map(|k| (k, k + 1)).collect();
    }
    let snap = 1e-9 * (iv.hi() - iv.lo());
    let on_boundary = iv.boundaries().iter().position(|b| libm::fabs(*b) <= snap);
    let (left, right) = match on_boundary {
        Some(b) => (b - 1, b),
        None => {
            let c = iv.index_of(0.0).expect("zero is inside the range");
            (c, c)
        }
    };
    let mut pairs: Vec<(usize, usize)> = (right..n - 1).map(|k| (k, k + 1)).collect();
    pairs.extend((1..=left).rev().map(|k| (k, k - 1)));
    pairs
}

/// Cases where success becomes more likely as an ordinal parent of the
/// outcome moves outward (offsets) or upward (other variables), with the
/// remaining parents held fixed. Zero-support cells are skipped.
pub fn monotonicity_report(net: &BayesNet) -> Result<Vec<Violation>> {
    let cpt = net.outcome_cpt();
    let cards = cpt.parent_levels().to_vec();
    let mut out = Vec::new();
    for (axis, name) in cpt.parents().iter().enumerate() {
        let pairs = outward_pairs(net.scheme().levels(name)?);
        for (inner, outer) in pairs {
            for tuple in parent_tuples(&cards).into_iter().filter(|t| t[axis] == inner) {
                let mut moved = tuple.clone();
                moved[axis] = outer;
                let a = net.success_prob_at(&tuple)?;
                let b = net.success_prob_at(&moved)?;
                if a.zero_support || b.zero_support {
                    continue;
                }
                let delta = b.p - a.p;
                if delta > 1e-12 {
                    out.push(Violation { axis: name.clone(), inner, outer, context: tuple, delta });
                }
            }
        }
    }
    Ok(out)
}
