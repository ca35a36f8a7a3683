mod common;

use common::{line_instance, pt, random_instance, RandomSpec};
use swapstable::exact::{int, rat};
use swapstable::instance::crossing_cost_auto;
use swapstable::local_search::{cost_drop_witness, is_nearly_good, rho_swap_search, SearchConfig, Termination};
use swapstable::metric::Role;
use swapstable::oracle::{solve_exact, DEFAULT_BUDGET};
use swapstable::subsets::Colex;
use swapstable::{Error, Instance, InstanceBuilder, Metric, Objective, RadicalSum};

fn all_subsets(inst: &Instance, k: usize) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = inst.centres().iter().map(|c| c.id).collect();
    Colex::new(ids.len(), k).map(|s| s.iter().map(|&i| ids[i]).collect()).collect()
}

fn swap_distance(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| !b.contains(x)).count()
}

#[test]
fn line_search_reaches_an_optimum() {
    let inst = line_instance(Objective::KMedian, 2);
    let cfg = SearchConfig { seed_solution: Some(vec![0, 1]), ..SearchConfig::with_rho(1) };
    let (sol, trace) = rho_swap_search(&inst, &cfg).unwrap();
    assert_eq!(sol.cost, RadicalSum::from_int(2));
    assert!([[0, 4], [0, 5], [1, 4], [1, 5]].iter().any(|o| sol.centres == o));
    assert_eq!(trace.terminated, Termination::LocalOptimum);
    assert_eq!(trace.steps[0].centres, vec![0, 1]);
    // The best single swap from {0, 1} replaces 0 by 4 or 5, or 1 by 4 or 5;
    // the tie-break takes the smallest swapped-in id first, then the
    // smallest swapped-out id: in 4, out 0.
    assert_eq!(trace.steps[1].centres, vec![1, 4]);
}

#[test]
fn opening_every_centre_needs_no_swap() {
    let inst = line_instance(Objective::KMeans, 4);
    let (sol, trace) = rho_swap_search(&inst, &SearchConfig::default()).unwrap();
    assert_eq!(sol.centres, vec![0, 1, 4, 5]);
    assert_eq!(trace.iterations(), 0);
    assert!(sol.cost.is_zero());
}

#[test]
fn zero_rho_and_bad_seeds_are_rejected() {
    let inst = line_instance(Objective::KMedian, 2);
    assert!(rho_swap_search(&inst, &SearchConfig::with_rho(0)).is_err());
    let short = SearchConfig { seed_solution: Some(vec![0]), ..SearchConfig::default() };
    assert!(rho_swap_search(&inst, &short).is_err());
    let unpinned = SearchConfig { seed_solution: Some(vec![0, 1]), pin_centres: vec![5], ..SearchConfig::default() };
    assert!(rho_swap_search(&inst, &unpinned).is_err());
    let too_many = SearchConfig { pin_centres: vec![0, 1, 4], ..SearchConfig::default() };
    assert!(rho_swap_search(&inst, &too_many).is_err());
}

#[test]
fn oversized_neighbourhoods_need_force() {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 100);
    b.points.push(pt(Role::Data, 0, &[0]));
    for id in 0..200 {
        b.centres.push(pt(Role::Centre, id, &[id as i64]));
    }
    let inst = b.build().unwrap();
    let err = rho_swap_search(&inst, &SearchConfig::with_rho(3)).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { .. }));
}

#[test]
fn traces_decrease_and_keep_pins() {
    for seed in 0..12 {
        let objective = if seed % 2 == 0 { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 12, centres: 8, k: 3, dim: 2, range: 30, objective, penalties: seed % 3 == 0 };
        let inst = random_instance(seed, spec);
        let pin = inst.centres()[seed as usize % 8].id;
        let cfg = SearchConfig { pin_centres: vec![pin], ..SearchConfig::with_rho(1) };
        let (sol, trace) = rho_swap_search(&inst, &cfg).unwrap();
        for w in trace.steps.windows(2) {
            assert!(w[1].cost < w[0].cost);
            let swap = w[1].swap.as_ref().unwrap();
            assert_eq!(swap.swapped_in.len(), swap.swapped_out.len());
            assert!(swap.swapped_in.len() <= 1);
        }
        for step in &trace.steps {
            assert!(step.centres.contains(&pin));
            assert_eq!(inst.solution_cost(&step.centres).unwrap().cost, step.cost);
        }
        assert_eq!(sol.centres, trace.steps.last().unwrap().centres);
    }
}

#[test]
fn final_solution_has_no_cheaper_neighbour() {
    for seed in 0..10 {
        let spec = RandomSpec { points: 14, centres: 8, k: 3, dim: 2, range: 40, objective: Objective::KMedian, penalties: seed % 2 == 1 };
        let inst = random_instance(100 + seed, spec);
        for rho in 1..=2 {
            let (sol, _) = rho_swap_search(&inst, &SearchConfig::with_rho(rho)).unwrap();
            for s in all_subsets(&inst, 3) {
                if swap_distance(&sol.centres, &s) <= rho {
                    assert!(inst.solution_cost(&s).unwrap().cost >= sol.cost, "seed {seed} rho {rho}: {s:?} beats {:?}", sol.centres);
                }
            }
        }
    }
}

#[test]
fn full_swaps_reach_the_oracle_optimum() {
    for seed in 0..10 {
        let spec = RandomSpec { points: 10, centres: 7, k: 3, dim: 2, range: 25, objective: Objective::KMeans, penalties: seed % 2 == 0 };
        let inst = random_instance(200 + seed, spec);
        let (sol, _) = rho_swap_search(&inst, &SearchConfig::with_rho(3)).unwrap();
        let opt = solve_exact(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(sol.cost, opt.optimal_cost);
        assert!(opt.contains(&sol.centres));
    }
}

#[test]
fn pinned_dummy_search_matches_the_penalty_optimum() {
    for seed in 0..8 {
        let objective = if seed % 2 == 0 { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 9, centres: 6, k: 2, dim: 2, range: 12, objective, penalties: true };
        let inst = random_instance(300 + seed, spec);
        let aug = inst.lift_penalties().unwrap();
        let (sol, trace) = rho_swap_search(&aug, &SearchConfig::with_rho(2)).unwrap();
        for step in &trace.steps {
            assert!(step.centres.contains(&aug.dummy_id));
        }
        let opt = solve_exact(&inst, DEFAULT_BUDGET).unwrap();
        let restricted = aug.restrict(&sol.centres);
        assert_eq!(inst.solution_cost(&restricted).unwrap().cost, opt.optimal_cost);
        assert!(opt.contains(&restricted));
    }
}

#[test]
fn search_is_deterministic() {
    let spec = RandomSpec { points: 20, centres: 10, k: 4, dim: 3, range: 50, objective: Objective::KMedian, penalties: false };
    let inst = random_instance(7, spec);
    let a = rho_swap_search(&inst, &SearchConfig::default()).unwrap().1;
    let b = rho_swap_search(&inst, &SearchConfig::default()).unwrap().1;
    assert_eq!(a.steps, b.steps);
}

#[test]
fn max_iterations_stops_early() {
    let inst = line_instance(Objective::KMedian, 2);
    let cfg = SearchConfig { seed_solution: Some(vec![0, 1]), max_iters: Some(0), ..SearchConfig::with_rho(1) };
    let (sol, trace) = rho_swap_search(&inst, &cfg).unwrap();
    assert_eq!(trace.terminated, Termination::MaxIterations);
    assert_eq!(sol.centres, vec![0, 1]);
}

#[test]
fn nearly_good_examples() {
    let inst = line_instance(Objective::KMedian, 2);
    let optima = solve_exact(&inst, DEFAULT_BUDGET).unwrap().solutions;
    assert_eq!(optima.len(), 4);
    assert!(is_nearly_good(&inst, &[0, 4], &optima, &rat(1, 10)).unwrap().holds);
    let strict = is_nearly_good(&inst, &[0, 1], &optima, &int(0)).unwrap();
    assert!(!strict.holds);
    assert!(strict.violating.is_some());
    assert!(is_nearly_good(&inst, &[0, 1], &[], &int(0)).is_err());

    // Direct evaluation for S = {0, 5} and S = {4, 5}.
    for s in [[0, 5], [4, 5]] {
        let cs = inst.solution_cost(&s).unwrap().cost;
        let expected = optima.iter().all(|f| {
            let cf = inst.solution_cost(f).unwrap().cost;
            let psi = crossing_cost_auto(&inst, &s, f).unwrap();
            cs <= &cf + &psi.scale(&rat(2, 10))
        });
        assert_eq!(is_nearly_good(&inst, &s, &optima, &rat(1, 10)).unwrap().holds, expected);
    }
    // {4, 5} costs 4 + 3 = 7 against 2, and no point is served by 5 under
    // {4, 5} and by 0 under {0, 4}, so the crossing cost is zero.
    assert!(!is_nearly_good(&inst, &[4, 5], &optima, &rat(1, 10)).unwrap().holds);
}

#[test]
fn cost_drop_witness_examples() {
    let inst = line_instance(Objective::KMedian, 2);
    let eps = rat(1, 10);
    assert_eq!(cost_drop_witness(&inst, &[0, 4], &[0, 4], &eps, 1).unwrap(), None);
    let w = cost_drop_witness(&inst, &[0, 1], &[0, 4], &eps, 1).unwrap().expect("a qualifying neighbour");
    // cost {0,1} = 3 + 4 = 7, cost {0,4} = 2; bound = 7 + (2 - 7 + eps psi) / 2.
    let cs = inst.solution_cost(&[0, 1]).unwrap().cost;
    let co = inst.solution_cost(&[0, 4]).unwrap().cost;
    let psi = crossing_cost_auto(&inst, &[0, 1], &[0, 4]).unwrap();
    let bound = &cs + &(&(&co - &cs) + &psi.scale(&eps)).scale(&rat(1, 2));
    assert!(inst.solution_cost(&w).unwrap().cost <= bound);
    assert_eq!(swap_distance(&[0, 1], &w), 1);
}

#[test]
fn full_swaps_always_give_a_witness() {
    for seed in 0..6 {
        let spec = RandomSpec { points: 8, centres: 6, k: 2, dim: 2, range: 15, objective: Objective::KMeans, penalties: seed % 2 == 0 };
        let inst = random_instance(400 + seed, spec);
        let eps = rat(1, 10);
        let subsets = all_subsets(&inst, 2);
        for s in &subsets {
            for o in &subsets {
                let cs = inst.solution_cost(s).unwrap().cost;
                let co = inst.solution_cost(o).unwrap().cost;
                let premise = cs > &co + &crossing_cost_auto(&inst, s, o).unwrap().scale(&eps);
                let w = cost_drop_witness(&inst, s, o, &eps, 2).unwrap();
                assert_eq!(w.is_some(), premise, "S {s:?} O {o:?}");
            }
        }
    }
}
