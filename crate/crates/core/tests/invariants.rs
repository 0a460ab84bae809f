use std::f64::consts::PI;

use fdpr::analysis::{lebesgue_bound, lebesgue_scan, moment_bound, theory_constants, Budgets, EvalGrid, Sweep};
use fdpr::basis::Family;
use fdpr::engine::Engine;
use fdpr::geometry::{DeltaRule, Domain};
use fdpr::lp::Strategy;
use fdpr::weights::WeightSpec;

fn sweep(dim: usize, degree: usize, weights: WeightSpec, engine: Engine) -> Sweep {
    Sweep {
        domain: Domain::cube(dim, 0.0, 1.0).unwrap(),
        levels: vec![],
        perturbation: None,
        family: Family::Chebyshev,
        degree,
        weights,
        delta: DeltaRule::fill(5.0).unwrap(),
        engine,
        grid: Some(if dim == 1 { 401 } else { 31 }),
    }
}

const ENGINES: [Engine; 2] = [Engine::Mls, Engine::OneNorm(Strategy::Warm)];

#[test]
fn moment_bounds_do_not_grow_under_refinement() {
    for engine in ENGINES {
        let s = sweep(1, 1, WeightSpec::gaussian(1.0).unwrap(), engine);
        let grid = s.eval_grid().unwrap();
        for ell in 0..=2 {
            let values: Vec<f64> = [9, 17, 33, 65]
                .iter()
                .map(|&n| moment_bound(&s.approximant(s.nodes(n).unwrap()).unwrap(), &grid, ell).unwrap())
                .collect();
            for w in values.windows(2) {
                assert!(w[1] <= 1.1 * w[0], "{engine} l={ell}: {values:?}");
            }
        }
    }
}

#[test]
fn lebesgue_constants_are_stable_under_refinement() {
    for engine in ENGINES {
        for (dim, levels) in [(1, vec![9, 17, 33, 65]), (2, vec![7, 9, 11])] {
            let s = sweep(dim, 2, WeightSpec::gaussian(1.0).unwrap(), engine);
            let grid = s.eval_grid().unwrap();
            let values: Vec<f64> = levels
                .iter()
                .map(|&n| {
                    lebesgue_scan(&s.approximant(s.nodes(n).unwrap()).unwrap(), &grid)
                        .certified()
                        .unwrap()
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            for v in &values {
                assert!((v - mean).abs() <= 0.1 * mean, "{engine} d={dim}: {values:?}");
            }
        }
    }
}

#[test]
fn empirical_lebesgue_constant_respects_theoretical_bound() {
    for weights in [
        WeightSpec::gaussian(1.0).unwrap(),
        WeightSpec::exponential(1.0).unwrap(),
    ] {
        for engine in ENGINES {
            for degree in [1, 2] {
                let s = sweep(1, degree, weights, engine);
                let nodes = s.nodes(33).unwrap();
                let (h, q) = (nodes.fill_distance(), nodes.separation_radius());
                let a = s.approximant(nodes).unwrap();
                let delta = a.scheme().delta();
                // Budgets that hold for this node set: gamma c_gamma q <= delta <= c_gamma c_qu q.
                let c_qu = h / q;
                let budgets = Budgets {
                    c_qu,
                    gamma: 1.0 / c_qu,
                    c_gamma: delta / (c_qu * q),
                };
                assert!(budgets.gamma * budgets.c_gamma * q <= delta * (1.0 + 1e-12));
                let (_, decay) =
                    theory_constants(PI / 5.0, 1.0, degree, budgets, &weights.profile, engine.method()).unwrap();
                let bound = lebesgue_bound(&decay, 1).unwrap().k;
                let grid: EvalGrid = s.eval_grid().unwrap();
                let empirical = lebesgue_scan(&a, &grid).certified().unwrap();
                assert!(
                    empirical <= bound,
                    "{weights} {engine} m={degree}: {empirical} > {bound}"
                );
            }
        }
    }
}
