//! Constraint-based structure learning.
//!
//! Markov blankets come from Grow-Shrink driven by G² likelihood-ratio
//! tests; adjacency and arc orientation are then derived from the blankets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::chi2_sf;
use crate::variable::LevelTable;

/// A directed acyclic graph over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    arcs: Vec<(usize, usize)>,
}

impl Dag {
    pub fn new(nodes: Vec<String>) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(Error::InvalidSpec(format!("duplicate node `{n}`")));
            }
        }
        Ok(Dag { nodes, arcs: Vec::new() })
    }

    pub fn from_arcs<S: AsRef<str>>(nodes: &[S], arcs: &[(S, S)]) -> Result<Self> {
        let mut dag = Dag::new(nodes.iter().map(|n| n.as_ref().to_string()).collect())?;
        for (a, b) in arcs {
            dag.add_arc(a.as_ref(), b.as_ref())?;
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Arcs as `(from, to)` names, sorted by node declaration order.
    pub fn arcs(&self) -> Vec<(&str, &str)> {
        self.arcs.iter().map(|&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str())).collect()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, from: &str, to: &str) -> bool {
        match (self.node_index(from), self.node_index(to)) {
            (Ok(a), Ok(b)) => self.arcs.contains(&(a, b)),
            _ => false,
        }
    }

    /// Adds `from -> to`, rejecting self-loops, duplicates and cycles.
    pub fn add_arc(&mut self, from: &str, to: &str) -> Result<()> {
        let a = self.node_index(from)?;
        let b = self.node_index(to)?;
        if a == b {
            return Err(Error::InvalidSpec(format!("self-loop on `{from}`")));
        }
        if self.arcs.contains(&(a, b)) {
            return Err(Error::InvalidSpec(format!("duplicate arc {from} -> {to}")));
        }
        if reaches(&self.arcs, self.nodes.len(), b, a) {
            return Err(Error::InvalidSpec(format!("arc {from} -> {to} closes a cycle")));
        }
        self.arcs.push((a, b));
        self.arcs.sort_unstable();
        Ok(())
    }

    /// Parents of `name` in node declaration order.
    pub fn parents(&self, name: &str) -> Result<Vec<&str>> {
        let b = self.node_index(name)?;
        Ok(self.arcs.iter().filter(|a| a.1 == b).map(|a| self.nodes[a.0].as_str()).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>> {
        let a = self.node_index(name)?;
        Ok(self.arcs.iter().filter(|x| x.0 == a).map(|x| self.nodes[x.1].as_str()).collect())
    }

    /// Kahn's algorithm; `None` if the arcs contain a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        topological_order(&self.arcs, self.nodes.len())
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

fn topological_order(arcs: &[(usize, usize)], n: usize) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    for &(_, b) in arcs {
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &(a, b) in arcs {
            if a == v {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn reaches(arcs: &[(usize, usize)], n: usize, from: usize, to: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if core::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(arcs.iter().filter(|a| a.0 == v).map(|a| a.1));
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    /// G² = 2 Σ observed · ln(observed / expected).
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub dependent: bool,
}

/// G² test of `x ⊥ y | cond` on a discretized table.
///
/// Degrees of freedom are accumulated per conditioning stratum over the
/// levels actually observed there, so empty strata and empty rows/columns
/// contribute nothing. The total is floored at 1 (the statistic is then 0).
pub fn g2_test(data: &LevelTable, x: &str, y: &str, cond: &[&str], alpha: f64) -> Result<CiTestResult> {
    let xi = data.index_of(x)?;
    let yi = data.index_of(y)?;
    let ci = cond.iter().map(|c| data.index_of(c)).collect::<Result<Vec<_>>>()?;
    CiTester::new(data, alpha)?.test(xi, yi, &ci)
}

/// Memoizing G² tester bound to one table and significance level.
pub(crate) struct CiTester<'a> {
    data: &'a LevelTable,
    alpha: f64,
    observed_levels: Vec<usize>,
    cache: BTreeMap<(usize, usize, Vec<usize>), CiTestResult>,
}

impl<'a> CiTester<'a> {
    pub(crate) fn new(data: &'a LevelTable, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let observed_levels = (0..data.num_vars())
            .map(|v| {
                let mut seen = vec![false; data.cards()[v]];
                for &l in data.column(v) {
                    seen[l as usize] = true;
                }
                seen.iter().filter(|&&s| s).count()
            })
            .collect();
        Ok(CiTester { data, alpha, observed_levels, cache: BTreeMap::new() })
    }

    pub(crate) fn test(&mut self, x: usize, y: usize, cond: &[usize]) -> Result<CiTestResult> {
        if x == y {
            return Err(Error::InvalidArgument("x and y must differ".into()));
        }
        if cond.contains(&x) || cond.contains(&y) {
            return Err(Error::InvalidArgument("conditioning set contains a tested variable".into()));
        }
        for v in [x, y] {
            if self.observed_levels[v] < 2 {
                return Err(Error::DegenerateTest {
                    variable: self.data.names()[v].clone(),
                    levels: self.observed_levels[v],
                });
            }
        }
        let mut key_cond = cond.to_vec();
        key_cond.sort_unstable();
        key_cond.dedup();
        let key = (x.min(y), x.max(y), key_cond);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(*hit);
        }
        let result = self.compute(x, y, &key.2)?;
        self.cache.insert(key, result);
        Ok(result)
    }

    fn compute(&self, x: usize, y: usize, cond: &[usize]) -> Result<CiTestResult> {
        let cards = self.data.cards();
        let (cx, cy) = (cards[x], cards[y]);
        let strata = cond
            .iter()
            .try_fold(1usize, |acc, &z| acc.checked_mul(cards[z]))
            .and_then(|s| s.checked_mul(cx * cy).map(|_| s))
            .ok_or_else(|| Error::InvalidArgument("conditioning set too large".into()))?;
        let cell = cx * cy;
        let mut counts = vec![0u32; strata * cell];
        let xs = self.data.column(x);
        let ys = self.data.column(y);
        for r in 0..self.data.len() {
            let mut s = 0usize;
            for &z in cond {
                s = s * cards[z] + self.data.column(z)[r] as usize;
            }
            counts[s * cell + xs[r] as usize * cy + ys[r] as usize] += 1;
        }

        let mut statistic = 0.0;
        let mut df = 0usize;
        let mut row = vec![0u64; cx];
        let mut col = vec![0u64; cy];
        for table in counts.chunks_exact(cell) {
            row.iter_mut().for_each(|v| *v = 0);
            col.iter_mut().for_each(|v| *v = 0);
            for i in 0..cx {
                for j in 0..cy {
                    let o = table[i * cy + j] as u64;
                    row[i] += o;
                    col[j] += o;
                }
            }
            let n: u64 = row.iter().sum();
            if n == 0 {
                continue;
            }
            let nr = row.iter().filter(|&&v| v > 0).count();
            let nc = col.iter().filter(|&&v| v > 0).count();
            df += (nr - 1) * (nc - 1);
            let nf = n as f64;
            for i in 0..cx {
                for j in 0..cy {
                    let o = table[i * cy + j];
                    if o > 0 {
                        let o = o as f64;
                        statistic += o * libm::log(o * nf / (row[i] as f64 * col[j] as f64));
                    }
                }
            }
        }
        let statistic = (2.0 * statistic).max(0.0);
        let df = df.max(1);
        let p_value = chi2_sf(statistic, df);
        Ok(CiTestResult { statistic, df, p_value, dependent: p_value < self.alpha })
    }

    fn dependent(&mut self, x: usize, y: usize, cond: &[usize]) -> Result<bool> {
        Ok(self.test(x, y, cond)?.dependent)
    }

    /// Largest p-value of `x ⊥ y | S ∪ extra` over all `S ⊆ base`, or `None`
    /// as soon as one of those tests reports independence.
    fn dependent_for_all_subsets(&mut self, x: usize, y: usize, base: &[usize], extra: &[usize]) -> Result<Option<f64>> {
        let mut worst = 0.0f64;
        for subset in subsets_by_size(base) {
            let mut cond = subset;
            cond.extend_from_slice(extra);
            let r = self.test(x, y, &cond)?;
            if !r.dependent {
                return Ok(None);
            }
            worst = worst.max(r.p_value);
        }
        Ok(Some(worst))
    }
}

/// All subsets of `items`, smallest first, in lexicographic order within a size.
fn subsets_by_size(items: &[usize]) -> Vec<Vec<usize>> {
    let n = items.len();
    assert!(n < usize::BITS as usize, "conditioning set too large");
    let mut masks: Vec<usize> = (0..(1usize << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| items[i]).collect())
        .collect()
}

fn blanket_indexed(tester: &mut CiTester<'_>, x: usize) -> Result<Vec<usize>> {
    let n = tester.data.num_vars();
    let mut blanket: Vec<usize> = Vec::new();
    loop {
        let mut grew = false;
        for y in 0..n {
            if y == x || blanket.contains(&y) {
                continue;
            }
            if tester.dependent(x, y, &blanket)? {
                blanket.push(y);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    loop {
        let mut shrank = false;
        for y in blanket.clone() {
            let rest: Vec<usize> = blanket.iter().copied().filter(|&v| v != y).collect();
            if !tester.dependent(x, y, &rest)? {
                blanket = rest;
                shrank = true;
            }
        }
        if !shrank {
            break;
        }
    }
    blanket.sort_unstable();
    Ok(blanket)
}

/// Grow-Shrink Markov blanket of `x`, in declaration order.
pub fn learn_markov_blanket(data: &LevelTable, x: &str, alpha: f64) -> Result<Vec<String>> {
    let xi = data.index_of(x)?;
    let mut tester = CiTester::new(data, alpha)?;
    let b = blanket_indexed(&mut tester, xi)?;
    Ok(b.into_iter().map(|v| data.names()[v].clone()).collect())
}

/// Blankets for every variable, then [`blankets_to_dag`].
pub fn learn_structure(data: &LevelTable, alpha: f64, outcome: Option<&str>) -> Result<Dag> {
    let mut tester = CiTester::new(data, alpha)?;
    let mut blankets = Vec::with_capacity(data.num_vars());
    for x in 0..data.num_vars() {
        blankets.push(blanket_indexed(&mut tester, x)?);
    }
    dag_from_blankets(&mut tester, blankets, outcome)
}

/// Derives adjacency and orientation from Markov blankets.
///
/// `blankets` maps each variable name to its blanket; missing variables get
/// an empty blanket. Blankets are made symmetric by intersection. Edges whose
/// direction is not settled by a collider test point into `outcome` when it
/// is one endpoint, and otherwise follow declaration order.
pub fn blankets_to_dag(
    data: &LevelTable,
    blankets: &BTreeMap<String, Vec<String>>,
    alpha: f64,
    outcome: Option<&str>,
) -> Result<Dag> {
    let mut tester = CiTester::new(data, alpha)?;
    let mut indexed = vec![Vec::new(); data.num_vars()];
    for (name, members) in blankets {
        let x = data.index_of(name)?;
        for m in members {
            let y = data.index_of(m)?;
            if y != x && !indexed[x].contains(&y) {
                indexed[x].push(y);
            }
        }
        indexed[x].sort_unstable();
    }
    dag_from_blankets(&mut tester, indexed, outcome)
}

fn without(set: &[usize], drop: &[usize]) -> Vec<usize> {
    set.iter().copied().filter(|v| !drop.contains(v)).collect()
}

fn smaller(a: Vec<usize>, b: Vec<usize>) -> Vec<usize> {
    if b.len() < a.len() {
        b
    } else {
        a
    }
}

fn dag_from_blankets(tester: &mut CiTester<'_>, mut blankets: Vec<Vec<usize>>, outcome: Option<&str>) -> Result<Dag> {
    let n = tester.data.num_vars();
    let names = tester.data.names().to_vec();
    let outcome = match outcome {
        Some(o) => Some(tester.data.index_of(o)?),
        None => None,
    };

    let snapshot = blankets.clone();
    for (x, b) in blankets.iter_mut().enumerate() {
        b.retain(|&y| snapshot[y].contains(&x));
    }

    // Adjacency: dependent given every subset of the smaller blanket.
    let mut neighbors = vec![BTreeSet::new(); n];
    for x in 0..n {
        for &y in blankets[x].iter().filter(|&&y| y > x) {
            let base = smaller(without(&blankets[x], &[y]), without(&blankets[y], &[x]));
            if tester.dependent_for_all_subsets(x, y, &base, &[])?.is_some() {
                neighbors[x].insert(y);
                neighbors[y].insert(x);
            }
        }
    }

    // Collider evidence for y -> x: some z adjacent to x but not to y stays
    // dependent on y whenever x is conditioned on. Keyed by (from, to).
    let mut evidence: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for x in 0..n {
        for &y in &neighbors[x] {
            let mut best: Option<f64> = None;
            for &z in &neighbors[x] {
                if z == y || neighbors[y].contains(&z) {
                    continue;
                }
                let base = smaller(without(&blankets[y], &[x, z]), without(&blankets[z], &[x, y]));
                if let Some(p) = tester.dependent_for_all_subsets(y, z, &base, &[x])? {
                    best = Some(best.map_or(p, |b| b.min(p)));
                }
            }
            if let Some(p) = best {
                evidence.insert((y, x), p);
            }
        }
    }

    // Where both directions have evidence keep the stronger one.
    let mut oriented: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(a, b), &p) in &evidence {
        match evidence.get(&(b, a)) {
            Some(&q) if q < p => {}
            Some(&q) if q == p => {}
            _ => {
                oriented.insert((a, b), p);
            }
        }
    }

    // Break directed cycles by dropping the orientation with the weakest evidence.
    loop {
        let arcs: Vec<(usize, usize)> = oriented.keys().copied().collect();
        let Some(cycle) = find_cycle(&arcs, n) else { break };
        let mut weakest = cycle[0];
        for arc in &cycle[1..] {
            if oriented[arc] > oriented[&weakest] {
                weakest = *arc;
            }
        }
        oriented.remove(&weakest);
    }

    let mut arcs: Vec<(usize, usize)> = oriented.keys().copied().collect();
    for (x, adj) in neighbors.iter().enumerate() {
        for &y in adj.iter().filter(|&&y| y > x) {
            if arcs.contains(&(x, y)) || arcs.contains(&(y, x)) {
                continue;
            }
            let (a, b) = match outcome {
                Some(o) if y == o => (x, y),
                Some(o) if x == o => (y, x),
                _ => (x, y),
            };
            if reaches(&arcs, n, b, a) {
                arcs.push((b, a));
            } else {
                arcs.push((a, b));
            }
        }
    }
    arcs.sort_unstable();
    debug_assert!(topological_order(&arcs, n).is_some());
    Ok(Dag { nodes: names, arcs })
}

/// Arcs of some directed cycle, if one exists.
fn find_cycle(arcs: &[(usize, usize)], n: usize) -> Option<Vec<(usize, usize)>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(v: usize, arcs: &[(usize, usize)], state: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[v] = 1;
        path.push(v);
        for &(a, b) in arcs {
            if a != v {
                continue;
            }
            if state[b] == 1 {
                let start = path.iter().position(|&p| p == b).unwrap();
                return Some(path[start..].to_vec());
            }
            if state[b] == 0 {
                if let Some(c) = visit(b, arcs, state, path) {
                    return Some(c);
                }
            }
        }
        path.pop();
        state[v] = 2;
        None
    }
    let mut state = vec![0u8; n];
    for v in 0..n {
        if state[v] == 0 {
            let mut path = Vec::new();
            if let Some(nodes) = visit(v, arcs, &mut state, &mut path) {
                let k = nodes.len();
                return Some((0..k).map(|i| (nodes[i], nodes[(i + 1) % k])).collect());
            }
        }
    }
    None
}
