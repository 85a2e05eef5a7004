//! Contrastive failure explanation.
//!
//! Starting from the discretized failure, a breadth-first search walks the
//! implicit transition graph over the outcome's parents (one variable
//! changes per step: ordinal variables by one interval, categorical ones to
//! any other label) and stops at the first assignment whose predicted
//! success probability exceeds the threshold. Children are emitted in
//! parent order, decreasing move before increasing move; ties between
//! equally distant solutions are broken by that order.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::discretize::{DiscretizationScheme, Levels};
use crate::error::{Error, Result};
use crate::params::BayesNet;
use crate::variable::Sample;

/// One level per variable, in a fixed variable order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    entries: Vec<(String, usize)>,
}

impl Assignment {
    pub fn new(entries: Vec<(String, usize)>) -> Self {
        Assignment { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(n, l)| (n.as_str(), *l))
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, l)| *l)
    }

    pub fn levels(&self) -> Vec<usize> {
        self.entries.iter().map(|(_, l)| *l).collect()
    }

    fn with_levels(&self, levels: &[usize]) -> Self {
        Assignment { entries: self.entries.iter().zip(levels).map(|((n, _), &l)| (n.clone(), l)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increase,
    Decrease,
    /// A categorical variable switched label.
    Change,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
            Direction::Change => "change",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "increase" => Some(Direction::Increase),
            "decrease" => Some(Direction::Decrease),
            "change" => Some(Direction::Change),
            _ => None,
        }
    }
}

/// A variable that differs between failure and solution. `direction` is the
/// move from the failure level to the solution level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub variable: String,
    pub from: usize,
    pub to: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationResult {
    pub failure: Assignment,
    pub solution: Assignment,
    pub p_failure: f64,
    pub p_solution: f64,
    /// Number of transitions between failure and solution.
    pub depth: usize,
    pub changes: Vec<Change>,
    pub failure_zero_support: bool,
    pub solution_zero_support: bool,
    pub text: Option<String>,
}

impl ExplanationResult {
    pub fn is_failure(&self) -> bool {
        !self.changes.is_empty()
    }
}

#[derive(Clone, Copy)]
struct Axis {
    card: usize,
    ordinal: bool,
}

fn axes(names: &[&str], scheme: &DiscretizationScheme) -> Result<Vec<Axis>> {
    names
        .iter()
        .map(|n| {
            let levels = scheme.levels(n)?;
            Ok(Axis { card: levels.count(), ordinal: levels.is_ordinal() })
        })
        .collect()
}

fn child_levels(node: &[usize], axes: &[Axis], out: &mut Vec<Vec<usize>>) {
    out.clear();
    for (i, ax) in axes.iter().enumerate() {
        let cur = node[i];
        if ax.ordinal {
            if cur > 0 {
                let mut c = node.to_vec();
                c[i] = cur - 1;
                out.push(c);
            }
            if cur + 1 < ax.card {
                let mut c = node.to_vec();
                c[i] = cur + 1;
                out.push(c);
            }
        } else {
            for l in (0..ax.card).filter(|&l| l != cur) {
                let mut c = node.to_vec();
                c[i] = l;
                out.push(c);
            }
        }
    }
}

/// Assignments one transition away from `a`, in emission order.
pub fn neighbors(a: &Assignment, scheme: &DiscretizationScheme) -> Result<Vec<Assignment>> {
    let names: Vec<&str> = a.iter().map(|(n, _)| n).collect();
    let axes = axes(&names, scheme)?;
    let levels = a.levels();
    for (l, (ax, n)) in levels.iter().zip(axes.iter().zip(&names)) {
        if *l >= ax.card {
            return Err(Error::Contract(format!("level {l} of `{n}` exceeds {} levels", ax.card)));
        }
    }
    let mut out = Vec::new();
    child_levels(&levels, &axes, &mut out);
    Ok(out.iter().map(|c| a.with_levels(c)).collect())
}

/// Discretizes the raw failure values of the outcome's parents and searches
/// from there. Values for other variables are ignored.
pub fn explain_failure(net: &BayesNet, failure: &Sample, epsilon: f64) -> Result<ExplanationResult> {
    let mut entries = Vec::with_capacity(net.outcome_parents().len());
    for p in net.outcome_parents() {
        let v = failure
            .get(p)
            .ok_or_else(|| Error::Contract(format!("failure values lack parent `{p}`")))?;
        entries.push((p.clone(), net.scheme().level_of(p, v)?));
    }
    explain_from(net, &Assignment::new(entries), epsilon)
}

/// Breadth-first search from an interval-level start assignment.
pub fn explain_from(net: &BayesNet, start: &Assignment, epsilon: f64) -> Result<ExplanationResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let p_start = crate::params::query_success_prob(net, start)?;
    let parents: Vec<&str> = net.outcome_parents().iter().map(String::as_str).collect();
    let axes = axes(&parents, net.scheme())?;
    let root: Vec<usize> = parents.iter().map(|p| start.get(p).expect("checked by query")).collect();
    let failure = Assignment::new(parents.iter().map(|p| p.to_string()).zip(root.iter().copied()).collect());

    let finish = |levels: &[usize], p: f64, zero: bool, depth: usize| {
        let solution = failure.with_levels(levels);
        let changes = diff(&failure, &solution, &axes);
        ExplanationResult {
            failure: failure.clone(),
            solution,
            p_failure: p_start.p,
            p_solution: p,
            depth,
            changes,
            failure_zero_support: p_start.zero_support,
            solution_zero_support: zero,
            text: None,
        }
    };

    if p_start.p > epsilon {
        return Ok(finish(&root, p_start.p, p_start.zero_support, 0));
    }

    let mut best = (p_start.p, root.clone(), 0usize);
    let mut visited = BTreeSet::new();
    visited.insert(root.clone());
    let mut queue = VecDeque::new();
    queue.push_back((root, 0usize));
    let mut children = Vec::new();
    while let Some((node, depth)) = queue.pop_front() {
        child_levels(&node, &axes, &mut children);
        for child in children.drain(..) {
            if !visited.insert(child.clone()) {
                continue;
            }
            let sp = net.success_prob_at(&child)?;
            if sp.p > epsilon {
                return Ok(finish(&child, sp.p, sp.zero_support, depth + 1));
            }
            if sp.p > best.0 {
                best = (sp.p, child.clone(), depth + 1);
            }
            queue.push_back((child, depth + 1));
        }
    }
    Err(Error::NoSolution { epsilon, best: failure.with_levels(&best.1), best_p: best.0, best_depth: best.2 })
}

fn diff(failure: &Assignment, solution: &Assignment, axes: &[Axis]) -> Vec<Change> {
    failure
        .entries
        .iter()
        .zip(&solution.entries)
        .zip(axes)
        .filter(|(((_, a), (_, b)), _)| a != b)
        .map(|(((name, a), (_, b)), ax)| Change {
            variable: name.clone(),
            from: *a,
            to: *b,
            direction: if !ax.ordinal {
                Direction::Change
            } else if b > a {
                Direction::Increase
            } else {
                Direction::Decrease
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phrase {
    pub variable: String,
    pub direction: Direction,
    pub text: String,
    /// Whether the phrase takes the trailing locative ("of the lower cube").
    pub locative: bool,
}

/// Wording used to turn changes into a sentence:
/// `<subject> <phrase> and <phrase>[ <locative>].`
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub subject: String,
    pub locative: String,
    pub no_failure: String,
    pub phrases: Vec<Phrase>,
}

impl Lexicon {
    /// Wording for the cube-stacking task.
    pub fn stacking() -> Self {
        let p = |variable: &str, direction, text: &str, locative| Phrase {
            variable: variable.to_string(),
            direction,
            text: text.to_string(),
            locative,
        };
        Lexicon {
            subject: "The upper cube was dropped".into(),
            locative: "of the lower cube".into(),
            no_failure: "no failure detected".into(),
            phrases: alloc::vec![
                p("xOff", Direction::Increase, "too far to the left", true),
                p("xOff", Direction::Decrease, "too far to the right", true),
                p("yOff", Direction::Increase, "too far to the back", true),
                p("yOff", Direction::Decrease, "too far to the front", true),
                p("dropOff", Direction::Decrease, "too high", false),
                p("dropOff", Direction::Increase, "too low", false),
            ],
        }
    }

    pub fn phrase(&self, variable: &str, direction: Direction) -> Option<&Phrase> {
        self.phrases.iter().find(|p| p.variable == variable && p.direction == direction)
    }
}

/// Renders the contrast as one sentence, phrases in change order.
pub fn render_explanation(res: &ExplanationResult, lexicon: &Lexicon) -> Result<String> {
    if res.changes.is_empty() {
        return Ok(lexicon.no_failure.clone());
    }
    let mut parts = Vec::with_capacity(res.changes.len());
    let mut locative = false;
    for c in &res.changes {
        let phrase = lexicon.phrase(&c.variable, c.direction).ok_or_else(|| Error::MissingPhrase {
            variable: c.variable.clone(),
            direction: c.direction.as_str(),
        })?;
        locative |= phrase.locative;
        parts.push(phrase.text.as_str());
    }
    let mut text = format!("{} {}", lexicon.subject, parts.join(" and "));
    if locative && !lexicon.locative.is_empty() {
        text.push(' ');
        text.push_str(&lexicon.locative);
    }
    text.push('.');
    Ok(text)
}

/// Interval or label name for a change endpoint.
pub fn describe_level(scheme: &DiscretizationScheme, variable: &str, level: usize) -> Result<String> {
    let levels = scheme.levels(variable)?;
    if level >= levels.count() {
        return Err(Error::Contract(format!("level {level} of `{variable}` out of range")));
    }
    Ok(match levels {
        Levels::Intervals(iv) => iv.describe(level),
        Levels::Labels(l) => l[level].clone(),
    })
}
