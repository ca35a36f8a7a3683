mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{line_instance, penalty_pair, pt, random_instance, RandomSpec};
use swapstable::exact::{int, rat};
use swapstable::instance::{check_solution, crossing_cost, crossing_cost_pen, partition_points, point_cost, Assignment};
use swapstable::metric::Role;
use swapstable::oracle::{solve_exact, DEFAULT_BUDGET};
use swapstable::stability::{apply_perturbation, canonical_perturbation};
use swapstable::subsets::Colex;
use swapstable::{Coord, Instance, InstanceBuilder, Metric, Objective, RadicalSum, Rational, Surd};

fn all_subsets(inst: &Instance, k: usize) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = inst.centres().iter().map(|c| c.id).collect();
    Colex::new(ids.len(), k).map(|s| s.iter().map(|&i| ids[i]).collect()).collect()
}

#[test]
fn line_kmedian_cost() {
    let inst = line_instance(Objective::KMedian, 2);
    let sol = inst.solution_cost(&[0, 4]).unwrap();
    assert_eq!(sol.cost, RadicalSum::from_int(2));
    assert_eq!(sol.assignment[&1], Assignment::Centre(0));
    assert_eq!(sol.assignment[&5], Assignment::Centre(4));
    check_solution(&inst, &sol).unwrap();
}

#[test]
fn line_kmeans_cost() {
    let inst = line_instance(Objective::KMeans, 2);
    assert_eq!(inst.solution_cost(&[0, 4]).unwrap().cost, RadicalSum::from_int(2));
    // 0 -> 0, 1 -> 0, 4 -> 5, 5 -> 5 would be {0, 5}: 1 + 1 as well.
    assert_eq!(inst.solution_cost(&[0, 5]).unwrap().cost, RadicalSum::from_int(2));
    assert_eq!(inst.solution_cost(&[0, 1]).unwrap().cost, RadicalSum::from_int(9 + 16));
}

#[test]
fn wrong_solution_size_is_rejected() {
    let inst = line_instance(Objective::KMedian, 2);
    assert!(inst.solution_cost(&[0]).is_err());
    assert!(inst.solution_cost(&[0, 1, 4]).is_err());
    assert!(inst.solution_cost(&[0, 2]).is_err());
}

#[test]
fn penalty_pair_pays_the_cheaper_penalty() {
    let inst = penalty_pair();
    let sol = inst.solution_cost(&[0]).unwrap();
    assert_eq!(sol.cost, RadicalSum::from_int(3));
    assert_eq!(sol.assignment[&0], Assignment::Centre(0));
    assert_eq!(sol.assignment[&1], Assignment::Penalty);
    assert_eq!(sol.per_point_cost[&1], Surd::from_int(3));
    check_solution(&inst, &sol).unwrap();
}

#[test]
fn penalty_tie_goes_to_the_centre() {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 1);
    b.points.push(pt(Role::Data, 0, &[3]));
    b.centres.push(pt(Role::Centre, 0, &[0]));
    b.penalties = Some(BTreeMap::from([(0, Surd::from_int(3))]));
    let inst = b.build().unwrap();
    let sol = inst.solution_cost(&[0]).unwrap();
    assert_eq!(sol.assignment[&0], Assignment::Centre(0));
    assert_eq!(sol.cost, RadicalSum::from_int(3));
}

fn tie_instance(order: Option<Vec<usize>>) -> Instance {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 2);
    for (id, x) in [(0, 2), (1, 1)] {
        b.points.push(pt(Role::Data, id, &[x]));
    }
    b.centres.push(pt(Role::Centre, 0, &[0]));
    b.centres.push(pt(Role::Centre, 4, &[4]));
    b.centre_order = order;
    b.build().unwrap()
}

#[test]
fn nearest_centre_breaks_ties_by_order() {
    let inst = tie_instance(None);
    assert_eq!(inst.nearest_centre(0, &[0, 4]).unwrap(), 0);
    assert_eq!(inst.nearest_centre(1, &[0, 4]).unwrap(), 0);
    let flipped = tie_instance(Some(vec![4, 0]));
    assert_eq!(flipped.nearest_centre(0, &[0, 4]).unwrap(), 4);
    assert_eq!(flipped.nearest_centre(1, &[0, 4]).unwrap(), 0);
    assert!(inst.nearest_centre(0, &[]).is_err());
}

#[test]
fn nearest_centre_matches_linear_scan() {
    let spec = RandomSpec { points: 10, centres: 6, k: 3, dim: 2, range: 20, objective: Objective::KMeans, penalties: false };
    for seed in 0..20 {
        let inst = random_instance(seed, spec);
        for s in all_subsets(&inst, 3) {
            for p in inst.points() {
                let mut best: Option<(Rational, usize)> = None;
                for &i in &s {
                    let c = &inst.centres()[inst.centre_index(i).unwrap()];
                    let d2: Rational = p.coords.iter().zip(&c.coords).map(|(a, b)| {
                        let (Coord::Exact(a), Coord::Exact(b)) = (a, b) else { unreachable!() };
                        (a - b) * (a - b)
                    }).sum();
                    if best.as_ref().map_or(true, |(b, _)| d2 < *b) {
                        best = Some((d2, i));
                    }
                }
                assert_eq!(inst.nearest_centre(p.id, &s).unwrap(), best.unwrap().1);
            }
        }
    }
}

#[test]
fn lifting_the_penalty_pair() {
    let aug = penalty_pair().lift_penalties().unwrap();
    assert_eq!(aug.lifted.k(), 2);
    assert!(!aug.lifted.has_penalties());
    let ids = aug.extend(&[0]);
    assert_eq!(aug.lifted.solution_cost(&ids).unwrap().cost, RadicalSum::from_int(3));
    assert_eq!(aug.restrict(&ids), vec![0]);
}

#[test]
fn lifting_without_penalties_fails() {
    assert!(line_instance(Objective::KMedian, 2).lift_penalties().is_err());
}

#[test]
fn non_binding_penalties_do_not_change_the_optimum() {
    for objective in [Objective::KMedian, Objective::KMeans] {
        let plain = line_instance(objective, 2);
        let mut b = plain.to_builder();
        b.penalties = Some([0, 1, 4, 5].into_iter().map(|id| (id, Surd::from_int(100))).collect());
        let aug = b.build().unwrap().lift_penalties().unwrap();
        let lifted = solve_exact(&aug, DEFAULT_BUDGET).unwrap();
        let direct = solve_exact(&plain, DEFAULT_BUDGET).unwrap();
        assert_eq!(lifted.optimal_cost, direct.optimal_cost);
        let restricted: Vec<Vec<usize>> = lifted.solutions.iter().map(|s| aug.restrict(s)).collect();
        assert_eq!(restricted, direct.solutions);
    }
}

#[test]
fn lifted_cost_equals_penalty_cost_exhaustively() {
    for (seed, objective) in [(1, Objective::KMedian), (2, Objective::KMeans), (3, Objective::KMedian), (4, Objective::KMeans)] {
        let spec = RandomSpec { points: 6, centres: 5, k: 2, dim: 2, range: 9, objective, penalties: true };
        let inst = random_instance(seed, spec);
        let aug = inst.lift_penalties().unwrap();
        for s in all_subsets(&inst, 2) {
            let base = inst.solution_cost(&s).unwrap().cost;
            let lifted = aug.lifted.solution_cost(&aug.extend(&s)).unwrap().cost;
            assert_eq!(base, lifted, "seed {seed}, S = {s:?}");
        }
    }
}

#[test]
fn crossing_cost_examples() {
    let inst = line_instance(Objective::KMeans, 2);
    assert!(crossing_cost(&inst, &[0, 4], &[0, 4]).unwrap().is_zero());
    assert_eq!(crossing_cost(&inst, &[0, 4], &[1, 5]).unwrap(), RadicalSum::from_int(4));
}

#[test]
fn penalty_crossing_cost_skips_points_paying_in_both() {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 1);
    b.points.push(pt(Role::Data, 0, &[0]));
    b.points.push(pt(Role::Data, 1, &[50]));
    b.centres.push(pt(Role::Centre, 0, &[1]));
    b.centres.push(pt(Role::Centre, 1, &[-1]));
    b.penalties = Some(BTreeMap::from([(0, Surd::from_int(10)), (1, Surd::from_int(10))]));
    let inst = b.build().unwrap();
    // Point 1 pays 10 under both; only point 0 counts, at 1 + 1.
    assert_eq!(crossing_cost_pen(&inst, &[0], &[1]).unwrap(), RadicalSum::from_int(2));
    assert_eq!(crossing_cost(&inst, &[0], &[1]).unwrap(), RadicalSum::from_int(2 + 49 + 51));
}

#[test]
fn partition_examples() {
    let spec = RandomSpec { points: 8, centres: 5, k: 2, dim: 2, range: 9, objective: Objective::KMedian, penalties: true };
    let inst = random_instance(11, spec);
    let all: Vec<usize> = inst.points().iter().map(|p| p.id).collect();
    let same = partition_points(&inst, &[0, 1], &[0, 1]).unwrap();
    assert_eq!(same.unchanged, all);
    assert!(same.leaving.is_empty() && same.joining.is_empty() && same.crossing.is_empty());

    let mut b = inst.to_builder();
    b.penalties = Some(all.iter().map(|&id| (id, Surd::from_int(1000))).collect());
    let loose = b.build().unwrap();
    let disjoint = partition_points(&loose, &[0, 1], &[2, 3]).unwrap();
    assert_eq!(disjoint.crossing, all);
}

/// Second implementation of the four predicates, on costs computed from
/// scratch.
fn rederive(inst: &Instance, s: &[usize], o: &[usize]) -> [Vec<usize>; 4] {
    let mut parts: [Vec<usize>; 4] = Default::default();
    for (j, p) in inst.points().iter().enumerate() {
        let near = |set: &[usize]| {
            let i = inst.nearest_centre(p.id, set).unwrap();
            let c = &inst.centres()[inst.centre_index(i).unwrap()];
            (i, Metric::Euclidean.distance(p, c).unwrap().powi(inst.power()))
        };
        let (si, su) = near(s);
        let (oi, ou) = near(o);
        let pen = inst.penalty_at(j).unwrap();
        let s_in_o = o.contains(&si);
        let o_in_s = s.contains(&oi);
        let (sb, ob) = (su < *pen, ou < *pen);
        let part = if !sb && !ob || s_in_o && o_in_s {
            2
        } else if !s_in_o && !o_in_s && sb && ob {
            3
        } else if (!s_in_o && sb) && (o_in_s || !ob) {
            0
        } else {
            1
        };
        parts[part].push(p.id);
    }
    parts
}

#[test]
fn partition_matches_independent_predicates() {
    for seed in 0..10 {
        let spec = RandomSpec { points: 8, centres: 5, k: 2, dim: 2, range: 9, objective: Objective::KMeans, penalties: true };
        let inst = random_instance(seed, spec);
        for s in all_subsets(&inst, 2) {
            for o in all_subsets(&inst, 2) {
                let p = partition_points(&inst, &s, &o).unwrap();
                let [l, j, u, c] = rederive(&inst, &s, &o);
                assert_eq!((p.leaving, p.joining, p.unchanged, p.crossing), (l, j, u, c), "S {s:?}, O {o:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_is_disjoint_and_covers(seed in 0u64..10_000, kmeans in any::<bool>(), a in 0usize..10, b in 0usize..10) {
        let objective = if kmeans { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 8, centres: 5, k: 2, dim: 2, range: 9, objective, penalties: true };
        let inst = random_instance(seed, spec);
        let subsets = all_subsets(&inst, 2);
        let p = partition_points(&inst, &subsets[a], &subsets[b]).unwrap();
        let mut union: Vec<usize> = [p.leaving, p.joining, p.unchanged, p.crossing].concat();
        union.sort_unstable();
        let ids: Vec<usize> = inst.points().iter().map(|p| p.id).collect();
        prop_assert_eq!(union, ids);
    }

    /// The perturbed cost of O under the canonical perturbation of S splits
    /// over the four parts.
    #[test]
    fn perturbed_cost_splits_over_the_partition(
        seed in 0u64..10_000,
        kmeans in any::<bool>(),
        a in 0usize..10,
        b in 0usize..10,
        num in 1i64..8,
    ) {
        let objective = if kmeans { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 7, centres: 5, k: 2, dim: 2, range: 9, objective, penalties: true };
        let inst = random_instance(seed, spec);
        let subsets = all_subsets(&inst, 2);
        let (s, o) = (&subsets[a], &subsets[b]);
        let eps_prime = rat(num, 8);
        let perturbed = apply_perturbation(&inst, &canonical_perturbation(&inst, s, &eps_prime).unwrap()).unwrap();
        let direct = perturbed.solution_cost(o).unwrap().cost;

        let factor = num::pow(int(1) + &eps_prime, inst.power() as usize);
        let part = partition_points(&inst, s, o).unwrap();
        let mut split = RadicalSum::zero();
        let mut add = |ids: &[usize], rule: &dyn Fn(Surd, Surd) -> Surd| {
            for &id in ids {
                let mult = inst.points()[inst.point_index(id).unwrap()].multiplicity;
                let c_s = point_cost(&inst, id, s).unwrap();
                let c_o = point_cost(&inst, id, o).unwrap();
                split.add_surd_times(&rule(c_o, c_s), mult);
            }
        };
        add(&part.leaving, &|c_o, _| c_o.scale(&factor));
        add(&part.crossing, &|c_o, _| c_o.scale(&factor));
        add(&part.unchanged, &|c_o, _| c_o);
        add(&part.joining, &|c_o, c_s| {
            let scaled = c_o.scale(&factor);
            if scaled < c_s { scaled } else { c_s }
        });
        prop_assert_eq!(direct, split);
    }

    #[test]
    fn canonical_perturbation_keeps_its_solution_cost(seed in 0u64..10_000, kmeans in any::<bool>(), a in 0usize..10) {
        let objective = if kmeans { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 7, centres: 5, k: 2, dim: 2, range: 9, objective, penalties: seed % 2 == 0 };
        let inst = random_instance(seed, spec);
        let s = &all_subsets(&inst, 2)[a];
        let perturbed = apply_perturbation(&inst, &canonical_perturbation(&inst, s, &rat(1, 5)).unwrap()).unwrap();
        prop_assert_eq!(perturbed.solution_cost(s).unwrap().cost, inst.solution_cost(s).unwrap().cost);
    }
}
