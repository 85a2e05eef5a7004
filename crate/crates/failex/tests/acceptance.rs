//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! the measured values; the test fails if any check fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use failex::sim::generate_parallel;
use failex::Model;
use failex_core::discretize::SchemeEntry;
use failex_core::eval::{agreement, agreement_score, cross_validate, monotonicity_report, EmpiricalTable, ProbTable};
use failex_core::simulator::{simulate_outcome, trial_rng, StackingConfig, DROP_OFF, ON_TOP, X_OFF, Y_OFF};
use failex_core::{
    build_scheme, discretize_dataset, explain_failure, explain_from, fit_mle, g2_test, learn_structure, render_explanation,
    Assignment, BayesNet, Cpt, Dag, Dataset, DiscretizationScheme, Error, GoalCondition, Intervals, LevelTable, Levels,
    Lexicon, Sample, Value, VariableKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const SAMPLES: usize = 20_000;
const BINS: [usize; 3] = [5, 5, 7];
const ALPHA: f64 = 0.05;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn report(outcomes: &[Outcome]) {
    let mut err = std::io::stderr().lock();
    for o in outcomes {
        let _ = writeln!(err, "acceptance {:<4} {} {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Trained {
    config: StackingConfig,
    data: Dataset,
    net: BayesNet,
    dag: Dag,
    elapsed: Duration,
}

fn train() -> Trained {
    let start = Instant::now();
    let config = StackingConfig { seed: SEED, ..Default::default() };
    let data = generate_parallel(&config, SAMPLES, BINS).unwrap();
    let scheme = build_scheme(data.variables(), None).unwrap();
    let discretized = discretize_dataset(&data, &scheme).unwrap();
    let table = discretized.levels().unwrap();
    let dag = learn_structure(table, ALPHA, Some(ON_TOP)).unwrap();
    let net = fit_mle(table, &scheme, &dag, &GoalCondition::new(ON_TOP, &["1"])).unwrap();
    Trained { config, data, net, dag, elapsed: start.elapsed() }
}

fn dag_recovery(t: &Trained) -> Outcome {
    let want = vec![(X_OFF, ON_TOP), (Y_OFF, ON_TOP), (DROP_OFF, ON_TOP)];
    let again = train();
    let pass = t.dag.arcs() == want && again.dag == t.dag && t.elapsed < Duration::from_secs(60);
    Outcome {
        id: "1",
        pass,
        detail: format!("DAG recovery: arcs {:?}, deterministic {}, {:.2?}", t.dag.arcs(), again.dag == t.dag, t.elapsed),
    }
}

fn interval_table() -> Outcome {
    // Boundaries as printed, per variable.
    let printed: [(&str, &[f64]); 3] = [
        (DROP_OFF, &[0.004, 0.018, 0.032, 0.045, 0.059, 0.073, 0.086, 0.099]),
        (X_OFF, &[-0.03, -0.018, -0.006, 0.006, 0.018, 0.03]),
        (Y_OFF, &[-0.03, -0.018, -0.006, 0.006, 0.0179, 0.03]),
    ];
    let scheme = build_scheme(&StackingConfig::default().variables(BINS), None).unwrap();
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for (name, want) in printed {
        let Levels::Intervals(iv) = scheme.levels(name).unwrap() else { unreachable!() };
        assert_eq!(iv.boundaries().len(), want.len());
        for (k, (&got, &w)) in iv.boundaries().iter().zip(want).enumerate() {
            let d = (got - w).abs();
            worst = worst.max(d);
            if d > 5e-4 {
                misses.push(format!("{name}[{k}] {got:.6} vs {w}"));
            }
        }
    }
    Outcome {
        id: "2",
        pass: misses.is_empty(),
        detail: format!("interval table within 5e-4: worst {worst:.2e}; outside: {misses:?}"),
    }
}

/// Stacking-shaped net over (dropOff, xOff, yOff) whose outcome table is
/// `p[(z, x, y)]`.
fn grid_net(p: &[f64]) -> BayesNet {
    let cfg = StackingConfig::default();
    let iv = |r: (f64, f64), n| Levels::Intervals(Intervals::equal_width(r.0, r.1, n).unwrap());
    let scheme = DiscretizationScheme::new(vec![
        SchemeEntry { name: DROP_OFF.into(), kind: VariableKind::ContinuousCause, levels: iv(cfg.drop_range, 7) },
        SchemeEntry { name: X_OFF.into(), kind: VariableKind::ContinuousCause, levels: iv(cfg.x_range, 5) },
        SchemeEntry { name: Y_OFF.into(), kind: VariableKind::ContinuousCause, levels: iv(cfg.y_range, 5) },
        SchemeEntry { name: ON_TOP.into(), kind: VariableKind::Outcome, levels: Levels::Labels(vec!["0".into(), "1".into()]) },
    ])
    .unwrap();
    let dag = Dag::from_arcs(&[DROP_OFF, X_OFF, Y_OFF, ON_TOP], &[(DROP_OFF, ON_TOP), (X_OFF, ON_TOP), (Y_OFF, ON_TOP)]).unwrap();
    let root = |name: &str, n: usize| Cpt::from_probabilities(name, n, vec![], vec![1.0 / n as f64; n], None).unwrap();
    let probs: Vec<f64> = p.iter().flat_map(|&q| [1.0 - q, q]).collect();
    let parents = vec![(DROP_OFF.to_string(), 7), (X_OFF.to_string(), 5), (Y_OFF.to_string(), 5)];
    let cpts = vec![
        root(DROP_OFF, 7),
        root(X_OFF, 5),
        root(Y_OFF, 5),
        Cpt::from_probabilities(ON_TOP, 2, parents, probs, None).unwrap(),
    ];
    BayesNet::new(scheme, dag, cpts, GoalCondition::new(ON_TOP, &["1"])).unwrap()
}

fn cell(z: usize, x: usize, y: usize) -> usize {
    (z * 5 + x) * 5 + y
}

/// Shortest number of single-interval moves from `start` to any cell above
/// `eps`: on a grid with ±1 moves this is the L1 distance.
fn oracle_depth(p: &[f64], start: [usize; 3], eps: f64) -> Option<usize> {
    let mut best = None;
    for z in 0..7 {
        for x in 0..5 {
            for y in 0..5 {
                if p[cell(z, x, y)] > eps {
                    let d = z.abs_diff(start[0]) + x.abs_diff(start[1]) + y.abs_diff(start[2]);
                    best = Some(best.map_or(d, |b: usize| b.min(d)));
                }
            }
        }
    }
    best
}

fn bfs_optimality() -> Outcome {
    let start_time = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases = 200;
    let mut agree = 0;
    let mut unreachable = 0;
    let mut max_depth = 0;
    for _ in 0..cases {
        // Sharpen uniform draws so that successes are rare and depths vary.
        let power = rng.random_range(1.0..12.0f64);
        let p: Vec<f64> = (0..175).map(|_| rng.random::<f64>().powf(power)).collect();
        let net = grid_net(&p);
        let start = [rng.random_range(0..7), rng.random_range(0..5), rng.random_range(0..5)];
        let eps = rng.random_range(0.05..0.99);
        let a = Assignment::new(vec![(DROP_OFF.into(), start[0]), (X_OFF.into(), start[1]), (Y_OFF.into(), start[2])]);
        let got = match explain_from(&net, &a, eps) {
            Ok(r) if r.p_solution > eps => Some(r.depth),
            Ok(_) => Some(usize::MAX),
            Err(Error::NoSolution { .. }) => None,
            Err(e) => panic!("{e}"),
        };
        let want = oracle_depth(&p, start, eps);
        if got == want {
            agree += 1;
        }
        match want {
            None => unreachable += 1,
            Some(d) => max_depth = max_depth.max(d),
        }
    }
    let elapsed = start_time.elapsed();
    Outcome {
        id: "3",
        pass: agree == cases && elapsed < Duration::from_secs(10),
        detail: format!(
            "BFS optimality: {agree}/{cases} agree with the distance oracle ({unreachable} unreachable, max depth {max_depth}), {elapsed:.2?}"
        ),
    }
}

fn worked_examples() -> Outcome {
    let model = Model::read(&fixtures().join("examples_model.json")).unwrap();
    let net = &model.net;
    let lexicon = Lexicon::stacking();
    let raw = |x: f64, y: f64, z: f64| {
        Sample::new().with(X_OFF, Value::Number(x)).with(Y_OFF, Value::Number(y)).with(DROP_OFF, Value::Number(z))
    };
    // The third example starts from its printed intervals x1, y1, z2.
    let third = Assignment::new(vec![(DROP_OFF.into(), 1), (X_OFF.into(), 0), (Y_OFF.into(), 0)]);
    let runs = [
        (
            explain_failure(net, &raw(0.0, 0.02, 0.08), 0.8),
            4,
            (0.0, 0.85),
            [2usize, 2, 3],
            "The upper cube was dropped too high and too far to the front of the lower cube.",
        ),
        (explain_failure(net, &raw(0.015, 0.0, 0.05), 0.8), 1, (0.58, 0.91), [2, 3, 2], "The upper cube was dropped too high."),
        (
            explain_from(net, &third, 0.8),
            2,
            (0.017, 1.0),
            [1, 1, 1],
            "The upper cube was dropped too far to the left and too far to the back of the lower cube.",
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, (res, depth, (pf, ps), solution, sentence)) in runs.into_iter().enumerate() {
        let res = res.unwrap();
        let text = render_explanation(&res, &lexicon).unwrap();
        let ok = res.depth == depth
            && res.solution.levels() == solution
            && (res.p_failure - pf).abs() < 1e-12
            && (res.p_solution - ps).abs() < 1e-12
            && text == sentence;
        pass &= ok;
        notes.push(format!("ex{} depth {} p {:.3}->{:.3} {:?}", k + 1, res.depth, res.p_failure, res.p_solution, text));
    }
    Outcome { id: "4", pass, detail: format!("worked-example fixtures: {}", notes.join("; ")) }
}

fn cpt_shape(t: &Trained) -> Outcome {
    let v = monotonicity_report(&t.net).unwrap();
    let worst = v.iter().map(|v| v.delta).fold(0.0, f64::max);
    let over = v.iter().filter(|v| v.delta > 0.05).count();
    Outcome {
        id: "5",
        pass: over == 0,
        detail: format!("monotonicity: {} inversions, {over} above 0.05, largest {worst:.4}", v.len()),
    }
}

fn agreement_checks(t: &Trained) -> Outcome {
    let vars = vec!["a".to_string(), "b".to_string()];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for gap in [0.0, 0.31, 0.5, 1.0] {
        let mut a = ProbTable { variables: vars.clone(), cells: BTreeMap::new() };
        let mut b = a.clone();
        for i in 0..6 {
            for j in 0..6 {
                let p = rng.random_range(gap..=1.0);
                a.cells.insert(vec![i, j], p);
                b.cells.insert(vec![i, j], p - gap);
            }
        }
        worst = worst.max((agreement(&a, &b).unwrap() - (1.0 - gap)).abs());
        worst = worst.max((agreement(&a, &a).unwrap() - 1.0).abs());
    }

    // 36 held-out cells of the trained model, 50 fresh trials each with
    // causes drawn inside the cell.
    let cfg = &t.config;
    let scheme = t.net.scheme();
    let parents = t.net.outcome_parents().to_vec();
    let mut holdout = EmpiricalTable::new(parents.clone());
    let mut pick = ChaCha8Rng::seed_from_u64(SEED + 1);
    let cards: Vec<usize> = parents.iter().map(|p| scheme.cardinality(p).unwrap()).collect();
    let mut cells = std::collections::BTreeSet::new();
    while cells.len() < 36 {
        cells.insert(cards.iter().map(|&c| pick.random_range(0..c)).collect::<Vec<_>>());
    }
    for (i, tuple) in cells.iter().enumerate() {
        let mut rng = trial_rng(SEED + 1, i as u64);
        let mut successes = 0;
        for _ in 0..50 {
            let mut v = [0.0; 3];
            for (p, &l) in parents.iter().zip(tuple) {
                let Levels::Intervals(iv) = scheme.levels(p).unwrap() else { unreachable!() };
                let (lo, hi) = iv.bounds(l);
                let x = rng.random_range(lo..=hi);
                match p.as_str() {
                    X_OFF => v[0] = x,
                    Y_OFF => v[1] = x,
                    DROP_OFF => v[2] = x,
                    other => panic!("unexpected parent {other}"),
                }
            }
            successes += simulate_outcome(cfg, v[0], v[1], v[2], &mut rng) as u64;
        }
        holdout.record(tuple.clone(), successes, 50).unwrap();
    }
    let score = agreement_score(&t.net, &holdout.frequencies()).unwrap();
    Outcome {
        id: "6",
        pass: worst <= 1e-12 && score >= 0.9,
        detail: format!("agreement: identity/constant-gap error {worst:.1e}; holdout self-agreement {score:.4} over 36 cells x 50 trials"),
    }
}

fn cv_stability(t: &Trained) -> Outcome {
    let cv = cross_validate(&t.data, t.net.scheme(), t.net.goal(), ALPHA, 10, SEED).unwrap();
    Outcome {
        id: "7",
        pass: cv.losses.len() == 10 && cv.std < 0.01,
        detail: format!("10-fold CV: mean loss {:.5}, std {:.5}", cv.mean, cv.std),
    }
}

fn g2_hand() -> Outcome {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (a, b, n) in [(0u16, 0u16, 30), (0, 1, 10), (1, 0, 10), (1, 1, 30)] {
        x.extend(std::iter::repeat_n(a, n));
        y.extend(std::iter::repeat_n(b, n));
    }
    let t = LevelTable::new(vec!["x".into(), "y".into()], vec![2, 2], vec![x, y]).unwrap();
    let r = g2_test(&t, "x", "y", &[], ALPHA).unwrap();
    Outcome {
        id: "8a",
        pass: (r.statistic - 16.48).abs() <= 0.01 && r.df == 1,
        detail: format!("G2 on [[30,10],[10,30]]: {:.4} with df {} (stated 16.48 +- 0.01)", r.statistic, r.df),
    }
}

fn g2_null_rate() -> Outcome {
    let seeds = 200;
    let mut kept = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1000;
        let x: Vec<u16> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let y: Vec<u16> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let z: Vec<u16> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let t = LevelTable::new(vec!["x".into(), "y".into(), "z".into()], vec![3, 4, 2], vec![x, y, z]).unwrap();
        let cond: &[&str] = if seed % 2 == 0 { &[] } else { &["z"] };
        if !g2_test(&t, "x", "y", cond, ALPHA).unwrap().dependent {
            kept += 1;
        }
    }
    let rate = kept as f64 / seeds as f64;
    Outcome {
        id: "8b",
        pass: (0.92..=0.98).contains(&rate),
        detail: format!("G2 under independence: {kept}/{seeds} tests keep independence at alpha 0.05 (rate {rate:.3})"),
    }
}

#[test]
fn acceptance() {
    let trained = train();
    let outcomes = vec![
        dag_recovery(&trained),
        interval_table(),
        bfs_optimality(),
        worked_examples(),
        cpt_shape(&trained),
        agreement_checks(&trained),
        cv_stability(&trained),
        g2_hand(),
        g2_null_rate(),
    ];
    report(&outcomes);
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "acceptance checks failed: {failed:?}");
}
