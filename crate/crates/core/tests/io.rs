mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{blob_instance, line_instance, random_instance, two_optima, RandomSpec};
use swapstable::exact::rat;
use swapstable::io::{
    parse_graph, parse_instance, parse_tiling, serialize_graph, serialize_instance, serialize_tiling, write_certificate,
    write_optima, write_trace, write_verdict, FORMAT_HEADER,
};
use swapstable::local_search::{rho_swap_search, SearchConfig};
use swapstable::oracle::{solve_exact, DEFAULT_BUDGET};
use swapstable::reductions::{
    build_cylinder_instance, build_grid_instance, build_pvc4_instance, build_pvc6_instance, certify_pvc_equivalence,
    GridReductionSpec, GridTilingInstance, PvcGraph, PvcVariant,
};
use swapstable::stability::{falsify_stability, FalsifyConfig};
use swapstable::{Instance, Objective};

fn round_trip(inst: &Instance) {
    let text = serialize_instance(inst);
    assert!(text.starts_with(FORMAT_HEADER));
    let back = parse_instance(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(&back, inst);
    assert_eq!(serialize_instance(&back), text);
}

fn small_spec() -> GridReductionSpec {
    let sets = BTreeMap::from([
        ((1, 1), BTreeSet::from([(1, 1), (2, 1)])),
        ((1, 2), BTreeSet::from([(1, 1), (2, 1)])),
        ((2, 1), BTreeSet::from([(2, 2)])),
        ((2, 2), BTreeSet::from([(1, 2)])),
    ]);
    GridReductionSpec::new(GridTilingInstance::new(2, 2, sets).unwrap(), rat(1, 2)).unwrap()
}

#[test]
fn random_instances_round_trip() {
    for seed in 0..20 {
        let objective = if seed % 2 == 0 { Objective::KMeans } else { Objective::KMedian };
        let spec = RandomSpec { points: 9, centres: 5, k: 2, dim: 1 + seed as usize % 3, range: 40, objective, penalties: seed % 3 == 0 };
        round_trip(&random_instance(seed, spec));
    }
    for seed in 0..10 {
        round_trip(&blob_instance(seed));
    }
}

#[test]
fn generated_instances_round_trip() {
    let spec = small_spec();
    let grid = build_grid_instance(&spec).unwrap();
    assert!(!grid.provenance().is_empty());
    round_trip(&grid);
    round_trip(&build_cylinder_instance(&spec).unwrap());
    let g = PvcGraph::new(3, [(1, 2), (2, 3), (1, 3)], 1, 2).unwrap();
    round_trip(&build_pvc4_instance(&g).unwrap().instance);
    round_trip(&build_pvc6_instance(&g).unwrap().instance);
}

#[test]
fn lifted_and_reordered_instances_round_trip() {
    let spec = RandomSpec { points: 6, centres: 4, k: 2, dim: 2, range: 9, objective: Objective::KMedian, penalties: true };
    let inst = random_instance(42, spec);
    round_trip(&inst.lift_penalties().unwrap().lifted);
    let mut order = inst.centre_order().to_vec();
    order.reverse();
    round_trip(&inst.with_centre_order(order).unwrap());
}

#[test]
fn reparsed_instances_keep_their_optima() {
    for seed in 0..6 {
        let inst = blob_instance(seed);
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        let a = solve_exact(&inst, DEFAULT_BUDGET).unwrap();
        let b = solve_exact(&back, DEFAULT_BUDGET).unwrap();
        assert_eq!(a.optimal_cost, b.optimal_cost);
        assert_eq!(a.solutions, b.solutions);
    }
}

#[test]
fn graph_and_tiling_round_trip() {
    for g in [PvcGraph::path(5, 2, 3).unwrap(), PvcGraph::cycle(4, 2, 4).unwrap(), PvcGraph::star(3, 1, 3).unwrap()] {
        let text = serialize_graph(&g);
        assert_eq!(parse_graph(&text).unwrap(), g);
    }
    let gt = small_spec().gt;
    assert_eq!(parse_tiling(&serialize_tiling(&gt)).unwrap(), gt);
    let full = GridTilingInstance::full(3, 2);
    assert_eq!(parse_tiling(&serialize_tiling(&full)).unwrap(), full);
}

#[test]
fn trace_writer_lists_every_step() {
    let inst = line_instance(Objective::KMedian, 2);
    let cfg = SearchConfig { seed_solution: Some(vec![0, 1]), ..SearchConfig::with_rho(1) };
    let (_, trace) = rho_swap_search(&inst, &cfg).unwrap();
    let text = write_trace(&trace);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rho 1");
    assert!(lines[1].starts_with("iteration_bound "));
    let steps: Vec<&&str> = lines.iter().filter(|l| l.starts_with("step ")).collect();
    assert_eq!(steps.len(), trace.steps.len());
    assert!(steps[0].starts_with("step 0 cost 7 "));
    assert!(!steps[0].contains(" in "));
    assert!(steps[1].ends_with("in {4} out {0}"), "{}", steps[1]);
    assert_eq!(*lines.last().unwrap(), "terminated local_optimum");
}

#[test]
fn optima_writer() {
    let inst = line_instance(Objective::KMedian, 2);
    let text = write_optima(&solve_exact(&inst, DEFAULT_BUDGET).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "optimal_cost 2");
    assert_eq!(lines[1], "optimal_cost_approx 2.000000000");
    assert_eq!(lines[2], "evaluated 6");
    assert_eq!(lines[3], "optima 4");
    assert_eq!(lines.len(), 8);
}

#[test]
fn verdict_writer_includes_the_witness() {
    let inst = two_optima();
    let cfg = FalsifyConfig { trials: 20, seed: 1, canonical: true, budget: DEFAULT_BUDGET };
    let v = falsify_stability(&inst, &rat(11, 10), &rat(1, 10), &cfg).unwrap();
    let text = write_verdict(&v);
    assert!(text.starts_with("status violated\nalpha 11/10\nbeta 1/10\n"), "{text}");
    assert!(text.contains("\nwitness_trial "));
    assert!(text.contains("\nwitness_dist "));

    let calm = falsify_stability(&inst, &rat(11, 10), &rat(100, 1), &cfg).unwrap();
    let text = write_verdict(&calm);
    assert!(text.starts_with("status no_violation_found\n"));
    assert!(!text.contains("witness"));
}

#[test]
fn certificate_writer() {
    let g = PvcGraph::path(3, 1, 2).unwrap();
    let cert = certify_pvc_equivalence(&g, PvcVariant::Pvc4, DEFAULT_BUDGET).unwrap();
    let text = write_certificate(&cert);
    assert!(text.starts_with("source pvc4\nequivalent yes\n"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("param ")).count(), cert.parameters.len());
    assert_eq!(text.lines().filter(|l| l.starts_with("check ")).count(), cert.checks.len());
    assert!(text.lines().filter(|l| l.starts_with("check ")).all(|l| l.split(' ').nth(2) == Some("pass")));
}
