//! Maximum-likelihood conditional probability tables.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::discretize::DiscretizationScheme;
use crate::error::{Error, Result};
use crate::explain::Assignment;
use crate::structure::Dag;
use crate::variable::{GoalCondition, LevelTable};

/// `P(child | parents)` stored row-major: one row per parent tuple (first
/// parent most significant), each row a distribution over child levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: String,
    parents: Vec<String>,
    child_levels: usize,
    parent_levels: Vec<usize>,
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl Cpt {
    /// Builds a table from explicit probabilities, e.g. a hand-written model.
    pub fn from_probabilities(
        child: &str,
        child_levels: usize,
        parents: Vec<(String, usize)>,
        probs: Vec<f64>,
        counts: Option<Vec<u64>>,
    ) -> Result<Self> {
        let (parents, parent_levels): (Vec<String>, Vec<usize>) = parents.into_iter().unzip();
        let rows = parent_levels.iter().product::<usize>();
        if child_levels == 0 || probs.len() != rows * child_levels {
            return Err(Error::InvalidSpec(format!("CPT of `{child}` has {} cells, expected {}", probs.len(), rows * child_levels)));
        }
        if let Some(c) = &counts {
            if c.len() != probs.len() {
                return Err(Error::InvalidSpec(format!("CPT of `{child}`: counts and probabilities differ in shape")));
            }
        }
        for row in probs.chunks_exact(child_levels) {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidSpec(format!("CPT of `{child}` has an entry outside [0, 1]")));
            }
            let total: f64 = row.iter().sum();
            if libm::fabs(total - 1.0) > 1e-9 {
                return Err(Error::InvalidSpec(format!("CPT row of `{child}` sums to {total}")));
            }
        }
        Ok(Cpt { child: child.to_string(), parents, child_levels, parent_levels, probs, counts })
    }

    pub fn child(&self) -> &str {
        &self.child
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn child_levels(&self) -> usize {
        self.child_levels
    }

    pub fn parent_levels(&self) -> &[usize] {
        &self.parent_levels
    }

    pub fn rows(&self) -> usize {
        self.parent_levels.iter().product()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn row_index(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.parent_levels.len() {
            return Err(Error::Contract(format!("`{}` has {} parents, got {} levels", self.child, self.parents.len(), tuple.len())));
        }
        let mut idx = 0;
        for ((&l, &card), name) in tuple.iter().zip(&self.parent_levels).zip(&self.parents) {
            if l >= card {
                return Err(Error::Contract(format!("level {l} of `{name}` exceeds {card} levels")));
            }
            idx = idx * card + l;
        }
        Ok(idx)
    }

    pub fn row(&self, tuple: &[usize]) -> Result<&[f64]> {
        let r = self.row_index(tuple)?;
        Ok(&self.probs[r * self.child_levels..(r + 1) * self.child_levels])
    }

    /// True when the parent tuple was never observed during fitting. Tables
    /// without counts have full support.
    pub fn zero_support(&self, tuple: &[usize]) -> Result<bool> {
        let r = self.row_index(tuple)?;
        Ok(match &self.counts {
            Some(c) => c[r * self.child_levels..(r + 1) * self.child_levels].iter().all(|&n| n == 0),
            None => false,
        })
    }

    pub fn zero_support_rows(&self) -> usize {
        match &self.counts {
            Some(c) => c.chunks_exact(self.child_levels).filter(|r| r.iter().all(|&n| n == 0)).count(),
            None => 0,
        }
    }
}

/// Every parent tuple of `cards` in row-major order.
pub fn parent_tuples(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; cards.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for i in (0..cards.len()).rev() {
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    scheme: DiscretizationScheme,
    dag: Dag,
    cpts: Vec<Cpt>,
    goal: GoalCondition,
    success_levels: Vec<usize>,
}

impl BayesNet {
    /// Assembles a network; `cpts` may come in any order.
    pub fn new(scheme: DiscretizationScheme, dag: Dag, cpts: Vec<Cpt>, goal: GoalCondition) -> Result<Self> {
        if !dag.is_acyclic() {
            return Err(Error::InvalidSpec("graph is cyclic".into()));
        }
        let mut ordered = Vec::with_capacity(dag.nodes().len());
        for node in dag.nodes() {
            let cpt = cpts
                .iter()
                .find(|c| &c.child == node)
                .ok_or_else(|| Error::InvalidSpec(format!("no CPT for `{node}`")))?;
            let parents = dag.parents(node)?;
            if cpt.parents.iter().map(String::as_str).collect::<Vec<_>>() != parents {
                return Err(Error::InvalidSpec(format!("CPT parents of `{node}` disagree with the graph")));
            }
            if cpt.child_levels != scheme.cardinality(node)? {
                return Err(Error::InvalidSpec(format!("CPT of `{node}` has the wrong number of levels")));
            }
            for (p, &card) in cpt.parents.iter().zip(&cpt.parent_levels) {
                if scheme.cardinality(p)? != card {
                    return Err(Error::InvalidSpec(format!("CPT of `{node}`: parent `{p}` has the wrong number of levels")));
                }
            }
            ordered.push(cpt.clone());
        }
        if ordered.len() != cpts.len() {
            return Err(Error::InvalidSpec("CPT for a node outside the graph".into()));
        }
        let outcome_labels = match scheme.levels(&goal.outcome)? {
            crate::discretize::Levels::Labels(l) => l.clone(),
            crate::discretize::Levels::Intervals(_) => {
                return Err(Error::InvalidSpec(format!("outcome `{}` must be categorical", goal.outcome)))
            }
        };
        dag.node_index(&goal.outcome)?;
        let success_levels = goal.success_levels(&outcome_labels)?;
        Ok(BayesNet { scheme, dag, cpts: ordered, goal, success_levels })
    }

    pub fn scheme(&self) -> &DiscretizationScheme {
        &self.scheme
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn goal(&self) -> &GoalCondition {
        &self.goal
    }

    pub fn cpt(&self, node: &str) -> Result<&Cpt> {
        self.cpts
            .iter()
            .find(|c| c.child == node)
            .ok_or_else(|| Error::UnknownVariable(node.to_string()))
    }

    pub fn outcome_cpt(&self) -> &Cpt {
        self.cpt(&self.goal.outcome).expect("validated in BayesNet::new")
    }

    /// Parents of the goal's outcome in CPT order.
    pub fn outcome_parents(&self) -> &[String] {
        self.outcome_cpt().parents()
    }

    /// Success mass for a parent tuple given in CPT order.
    pub fn success_prob_at(&self, tuple: &[usize]) -> Result<SuccessProb> {
        let cpt = self.outcome_cpt();
        let row = cpt.row(tuple)?;
        let p = self.success_levels.iter().map(|&l| row[l]).sum::<f64>().clamp(0.0, 1.0);
        Ok(SuccessProb { p, zero_support: cpt.zero_support(tuple)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProb {
    pub p: f64,
    /// The parent tuple was never observed; `p` is the uniform fallback.
    pub zero_support: bool,
}

/// Fits one CPT per node by counting. Unobserved parent tuples get the
/// uniform distribution and keep all-zero counts, which flags them.
pub fn fit_mle(data: &LevelTable, scheme: &DiscretizationScheme, dag: &Dag, goal: &GoalCondition) -> Result<BayesNet> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cpts = Vec::with_capacity(dag.nodes().len());
    for node in dag.nodes() {
        let child = data.index_of(node)?;
        let parents: Vec<usize> = dag.parents(node)?.into_iter().map(|p| data.index_of(p)).collect::<Result<_>>()?;
        let k = data.cards()[child];
        let pcards: Vec<usize> = parents.iter().map(|&p| data.cards()[p]).collect();
        let rows: usize = pcards.iter().product();
        let mut counts = vec![0u64; rows * k];
        let col = data.column(child);
        for r in 0..data.len() {
            let mut idx = 0usize;
            for (&p, &card) in parents.iter().zip(&pcards) {
                idx = idx * card + data.column(p)[r] as usize;
            }
            counts[idx * k + col[r] as usize] += 1;
        }
        let mut probs = vec![0.0; rows * k];
        for (prow, crow) in probs.chunks_exact_mut(k).zip(counts.chunks_exact(k)) {
            let total: u64 = crow.iter().sum();
            if total == 0 {
                prow.iter_mut().for_each(|p| *p = 1.0 / k as f64);
            } else {
                for (p, &c) in prow.iter_mut().zip(crow) {
                    *p = c as f64 / total as f64;
                }
            }
        }
        let named = parents.iter().zip(&pcards).map(|(&p, &c)| (data.names()[p].clone(), c)).collect();
        cpts.push(Cpt::from_probabilities(node, k, named, probs, Some(counts))?);
    }
    BayesNet::new(scheme.clone(), dag.clone(), cpts, goal.clone())
}

/// `P(outcome ∈ success | parents = assignment)` by direct CPT lookup.
///
/// The assignment must name every parent of the outcome exactly once and
/// nothing else.
pub fn query_success_prob(net: &BayesNet, assignment: &Assignment) -> Result<SuccessProb> {
    let parents = net.outcome_parents();
    for (name, _) in assignment.iter() {
        if !parents.iter().any(|p| p == name) {
            return Err(Error::Contract(format!("`{name}` is not a parent of `{}`", net.goal.outcome)));
        }
    }
    if assignment.len() != parents.len() {
        return Err(Error::Contract(format!("assignment must cover exactly the {} parents", parents.len())));
    }
    let tuple = parents
        .iter()
        .map(|p| assignment.get(p).ok_or_else(|| Error::Contract(format!("assignment lacks parent `{p}`"))))
        .collect::<Result<Vec<usize>>>()?;
    net.success_prob_at(&tuple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_scheme;
    use crate::variable::VariableSpec;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary_scheme(names: &[&str], outcome: &str) -> DiscretizationScheme {
        let specs: Vec<VariableSpec> = names
            .iter()
            .map(|n| if *n == outcome { VariableSpec::outcome(n, &["0", "1"]) } else { VariableSpec::categorical(n, &["A", "B"]) })
            .collect();
        build_scheme(&specs, None).unwrap()
    }

    fn table(names: &[&str], cards: &[usize], columns: Vec<Vec<u16>>) -> LevelTable {
        LevelTable::new(names.iter().map(|s| s.to_string()).collect(), cards.to_vec(), columns).unwrap()
    }

    #[test]
    fn hand_counts() {
        // parent A: 3 of 4 successes, parent B: 1 of 2
        let p = vec![0, 0, 0, 0, 1, 1];
        let o = vec![1, 1, 1, 0, 1, 0];
        let t = table(&["p", "o"], &[2, 2], vec![p, o]);
        let dag = Dag::from_arcs(&["p", "o"], &[("p", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["p", "o"], "o"), &dag, &GoalCondition::new("o", &["1"])).unwrap();
        let q = |lvl| query_success_prob(&net, &Assignment::new(vec![("p".into(), lvl)])).unwrap().p;
        assert!((q(0) - 0.75).abs() < 1e-15);
        assert!((q(1) - 0.5).abs() < 1e-15);
        let counts = net.cpt("o").unwrap().counts().unwrap();
        assert_eq!(counts, &[1, 3, 1, 1]);
        assert_eq!(net.cpt("p").unwrap().row(&[]).unwrap(), &[4.0 / 6.0, 2.0 / 6.0]);
    }

    #[test]
    fn constant_success() {
        let t = table(&["p", "o"], &[2, 2], vec![vec![0, 1, 1], vec![1, 1, 1]]);
        let dag = Dag::from_arcs(&["p", "o"], &[("p", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["p", "o"], "o"), &dag, &GoalCondition::new("o", &["1"])).unwrap();
        for l in 0..2 {
            assert_eq!(net.success_prob_at(&[l]).unwrap().p, 1.0);
        }
    }

    #[test]
    fn zero_support_is_uniform_and_flagged() {
        let t = table(&["p", "o"], &[2, 2], vec![vec![0, 0], vec![1, 0]]);
        let dag = Dag::from_arcs(&["p", "o"], &[("p", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["p", "o"], "o"), &dag, &GoalCondition::new("o", &["1"])).unwrap();
        let r = net.success_prob_at(&[1]).unwrap();
        assert_eq!(r, SuccessProb { p: 0.5, zero_support: true });
        assert!(!net.success_prob_at(&[0]).unwrap().zero_support);
        assert_eq!(net.outcome_cpt().zero_support_rows(), 1);
    }

    #[test]
    fn whole_domain_success_is_certain() {
        let t = table(&["p", "o"], &[2, 2], vec![vec![0, 1, 0], vec![1, 0, 0]]);
        let dag = Dag::from_arcs(&["p", "o"], &[("p", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["p", "o"], "o"), &dag, &GoalCondition::new("o", &["0", "1"])).unwrap();
        for l in 0..2 {
            assert!((net.success_prob_at(&[l]).unwrap().p - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn query_contract() {
        let t = table(&["p", "q", "o"], &[2, 2, 2], vec![vec![0, 1], vec![0, 1], vec![1, 0]]);
        let dag = Dag::from_arcs(&["p", "q", "o"], &[("p", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["p", "q", "o"], "o"), &dag, &GoalCondition::new("o", &["1"])).unwrap();
        assert!(query_success_prob(&net, &Assignment::new(vec![])).is_err());
        assert!(query_success_prob(&net, &Assignment::new(vec![("q".into(), 0)])).is_err());
        assert!(query_success_prob(&net, &Assignment::new(vec![("p".into(), 0), ("q".into(), 0)])).is_err());
        assert!(query_success_prob(&net, &Assignment::new(vec![("p".into(), 5)])).is_err());
        assert!(query_success_prob(&net, &Assignment::new(vec![("p".into(), 1)])).is_ok());
        assert!(fit_mle(&t.subset(&[]), net.scheme(), &dag, net.goal()).is_err());
    }

    #[test]
    fn net_validation() {
        let scheme = binary_scheme(&["p", "o"], "o");
        let dag = Dag::from_arcs(&["p", "o"], &[("p", "o")]).unwrap();
        let root = Cpt::from_probabilities("p", 2, vec![], vec![0.5, 0.5], None).unwrap();
        let wrong = Cpt::from_probabilities("o", 2, vec![], vec![0.5, 0.5], None).unwrap();
        assert!(BayesNet::new(scheme.clone(), dag.clone(), vec![root.clone(), wrong], GoalCondition::new("o", &["1"])).is_err());
        assert!(BayesNet::new(scheme, dag, vec![root], GoalCondition::new("o", &["1"])).is_err());
        assert!(Cpt::from_probabilities("o", 2, vec![], vec![0.6, 0.6], None).is_err());
        assert!(Cpt::from_probabilities("o", 2, vec![], vec![1.5, -0.5], None).is_err());
    }

    #[test]
    fn tuples_row_major() {
        assert_eq!(parent_tuples(&[2, 3]).len(), 6);
        assert_eq!(parent_tuples(&[2, 3])[4], vec![1, 1]);
        assert_eq!(parent_tuples(&[]), vec![Vec::<usize>::new()]);
    }

    fn sample_from_cpt(seed: u64, n: usize, truth: &[f64]) -> LevelTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<u16>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
        for _ in 0..n {
            let a: u16 = rng.random_range(0..2);
            let b: u16 = rng.random_range(0..2);
            let c: u16 = rng.random_range(0..2);
            let row = (a * 4 + b * 2 + c) as usize;
            let o = rng.random_bool(truth[row]) as u16;
            for (col, v) in cols.iter_mut().zip([a, b, c, o]) {
                col.push(v);
            }
        }
        table(&["a", "b", "c", "o"], &[2, 2, 2, 2], cols)
    }

    #[test]
    fn refit_converges_to_generating_cpt() {
        let truth = [0.05, 0.2, 0.35, 0.5, 0.6, 0.75, 0.9, 0.97];
        let t = sample_from_cpt(21, 50_000, &truth);
        let dag = Dag::from_arcs(&["a", "b", "c", "o"], &[("a", "o"), ("b", "o"), ("c", "o")]).unwrap();
        let net = fit_mle(&t, &binary_scheme(&["a", "b", "c", "o"], "o"), &dag, &GoalCondition::new("o", &["1"])).unwrap();
        for (row, tuple) in parent_tuples(&[2, 2, 2]).iter().enumerate() {
            let err = (net.success_prob_at(tuple).unwrap().p - truth[row]).abs();
            assert!(err <= 0.02, "row {row}: {err}");
        }
    }

    proptest! {
        #[test]
        fn fitted_rows_are_normalized(seed in 0u64..1000, n in 1usize..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<u16>> = [3u16, 2, 4].iter().map(|&c| (0..n).map(|_| rng.random_range(0..c)).collect()).collect();
            let t = table(&["a", "b", "o"], &[3, 2, 4], cols);
            let specs = vec![
                VariableSpec::categorical("a", &["x", "y", "z"]),
                VariableSpec::categorical("b", &["x", "y"]),
                VariableSpec::outcome("o", &["0", "1", "2", "3"]),
            ];
            let dag = Dag::from_arcs(&["a", "b", "o"], &[("a", "o"), ("b", "o"), ("a", "b")]).unwrap();
            let net = fit_mle(&t, &build_scheme(&specs, None).unwrap(), &dag, &GoalCondition::new("o", &["3"])).unwrap();
            for cpt in net.cpts() {
                for row in cpt.probabilities().chunks_exact(cpt.child_levels()) {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
                }
            }
        }
    }
}
