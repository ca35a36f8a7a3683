//! Brute-force ground truth: every optimum of an instance, and exhaustive
//! checks of the local-search cost-drop and nearly-good properties.
//!
//! Enumeration first computes every subset's cost in floating point, then
//! re-evaluates exactly only the subsets whose float cost is within
//! [`APPROX_SLACK`](crate::cost::APPROX_SLACK) of the float minimum.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cost::{approx_cost, evaluate, exact_cost, near_min, CostSource, Evaluation};
use crate::error::{Error, Result};
use crate::exact::{RadicalSum, Rational};
use crate::instance::{ClusteringProblem, Instance};
use crate::subsets::{binomial, chunks, Colex};

/// Default limit on the number of subsets an enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// All optimal solutions of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimaSet {
    pub optimal_cost: RadicalSum,
    /// Centre ids of each optimum, ascending within a set, sets in colex order.
    pub solutions: Vec<Vec<usize>>,
    pub enumeration_complete: bool,
    /// Number of subsets enumerated.
    pub evaluated: u128,
}

impl OptimaSet {
    pub fn contains(&self, ids: &[usize]) -> bool {
        let mut s = ids.to_vec();
        s.sort_unstable();
        self.solutions.iter().any(|o| *o == s)
    }
}

/// Feasible subsets when `pins` must be open: the pins plus `k - |pins|` of
/// the remaining centres.
#[derive(Clone, Debug)]
pub(crate) struct FeasibleSpace {
    pins: Vec<usize>,
    free: Vec<usize>,
    pick: usize,
}

impl FeasibleSpace {
    pub(crate) fn new(n_centres: usize, k: usize, pins: &[usize]) -> Result<FeasibleSpace> {
        let mut pins = pins.to_vec();
        pins.sort_unstable();
        pins.dedup();
        if pins.len() > k || pins.iter().any(|&p| p >= n_centres) {
            return Err(Error::input("pinned centres do not fit in a feasible solution"));
        }
        let free: Vec<usize> = (0..n_centres).filter(|i| pins.binary_search(i).is_err()).collect();
        if free.len() < k - pins.len() {
            return Err(Error::input("not enough centres for a feasible solution"));
        }
        Ok(FeasibleSpace { pick: k - pins.len(), pins, free })
    }

    pub(crate) fn size(&self) -> u128 {
        binomial(self.free.len(), self.pick)
    }

    pub(crate) fn check_budget(&self, budget: u128) -> Result<()> {
        let required = self.size();
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(())
    }

    fn materialise(&self, choice: &[usize]) -> Vec<usize> {
        let mut s: Vec<usize> = choice.iter().map(|&c| self.free[c]).chain(self.pins.iter().copied()).collect();
        s.sort_unstable();
        s
    }

    /// Subsets with ranks in `start..end`.
    pub(crate) fn range(&self, start: u128, end: u128) -> impl Iterator<Item = (u128, Vec<usize>)> + '_ {
        Colex::from_rank(self.free.len(), self.pick, start)
            .take((end - start) as usize)
            .enumerate()
            .map(move |(o, c)| (start + o as u128, self.materialise(&c)))
    }

    pub(crate) fn all(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.range(0, self.size()).map(|(_, s)| s)
    }
}

/// Minimum cost and all minimising subsets (as sorted centre indices, colex
/// order) of a cost source.
pub fn optima_of<C: CostSource + ?Sized>(src: &C, k: usize, pins: &[usize], budget: u128) -> Result<(RadicalSum, Vec<Vec<usize>>)> {
    let space = FeasibleSpace::new(src.n_centres(), k, pins)?;
    space.check_budget(budget)?;
    let total = space.size();
    let parts = chunks(total, rayon::current_num_threads() * 8);

    let best = parts
        .par_iter()
        .map(|&(a, b)| space.range(a, b).map(|(_, s)| approx_cost(src, &s)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);

    let candidates: Vec<(u128, Vec<usize>)> = parts
        .par_iter()
        .flat_map_iter(|&(a, b)| space.range(a, b).filter(|(_, s)| near_min(approx_cost(src, s), best)).collect::<Vec<_>>())
        .collect();

    let exact: Vec<(u128, Vec<usize>, RadicalSum)> =
        candidates.into_par_iter().map(|(rank, s)| {
            let c = exact_cost(src, &s);
            (rank, s, c)
        }).collect();

    let min = exact.iter().map(|(_, _, c)| c).min().cloned().expect("at least one feasible subset");
    let mut optima: Vec<(u128, Vec<usize>)> = exact.into_iter().filter(|(_, _, c)| *c == min).map(|(r, s, _)| (r, s)).collect();
    optima.sort_by_key(|(r, _)| *r);
    Ok((min, optima.into_iter().map(|(_, s)| s).collect()))
}

/// Enumerates every feasible subset and returns all optima.
pub fn solve_exact<P: ClusteringProblem + ?Sized>(problem: &P, budget: u128) -> Result<OptimaSet> {
    let inst = problem.instance();
    let pins = inst.centre_indices(&problem.pinned())?;
    let (cost, sets) = optima_of(inst.cost_table(), inst.k(), &pins, budget)?;
    let evaluated = FeasibleSpace::new(inst.centres().len(), inst.k(), &pins)?.size();
    Ok(OptimaSet {
        optimal_cost: cost,
        solutions: sets.iter().map(|s| inst.centre_ids(s)).collect(),
        enumeration_complete: true,
        evaluated,
    })
}

/// Exact evaluation of every feasible subset, in colex order.
pub(crate) fn evaluate_all(inst: &Instance, pins: &[usize], budget: u128) -> Result<Vec<(Vec<usize>, Evaluation)>> {
    let space = FeasibleSpace::new(inst.centres().len(), inst.k(), pins)?;
    space.check_budget(budget)?;
    let subsets: Vec<Vec<usize>> = space.all().collect();
    Ok(subsets.into_par_iter().map(|s| {
        let ev = evaluate(inst.cost_table(), &s);
        (s, ev)
    }).collect())
}

/// Crossing cost from two precomputed evaluations. Matches
/// [`crossing_cost_auto`](crate::instance::crossing_cost_auto).
pub(crate) fn crossing_from(inst: &Instance, s: &[usize], es: &Evaluation, o: &[usize], eo: &Evaluation) -> RadicalSum {
    let mut sum = RadicalSum::zero();
    let t = inst.cost_table();
    for j in 0..t.n_points() {
        let crossing = o.binary_search(&es.nearest[j]).is_err() && s.binary_search(&eo.nearest[j]).is_err();
        if !crossing {
            continue;
        }
        if let Some(p) = t.penalty_ref(j) {
            if es.nearest_unit[j] >= *p || eo.nearest_unit[j] >= *p {
                continue;
            }
        }
        let m = t.multiplicity(j);
        sum.add_surd_times(&es.nearest_unit[j], m);
        sum.add_surd_times(&eo.nearest_unit[j], m);
    }
    sum
}

/// Outcome of the exhaustive cost-drop check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CostDropReport {
    pub eps: Rational,
    /// The swap size the caller asked about.
    pub rho: usize,
    pub solutions: usize,
    /// Ordered pairs `(S, O)` with `S != O`.
    pub pairs: usize,
    /// Pairs with `cost(S) > cost(O) + eps * crossing(S, O)`.
    pub premise_pairs: usize,
    /// Premise pairs with no qualifying neighbour within `|S \ O|` swaps.
    pub counterexamples: Vec<(Vec<usize>, Vec<usize>)>,
    /// Premise pairs with no qualifying neighbour within `rho` swaps.
    pub failures_at_rho: usize,
    /// Smallest swap size with a qualifying neighbour, counted over premise
    /// pairs.
    pub min_swap_histogram: BTreeMap<usize, usize>,
}

impl CostDropReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// For every ordered pair `(S, O)` of feasible solutions with
/// `cost(S) > cost(O) + eps * crossing(S, O)`, looks for a neighbour `S'`
/// with `|S \ S'| <= |S \ O|` and
/// `cost(S') <= cost(S) + (cost(O) - cost(S) + eps * crossing(S, O)) / k`.
/// Penalty instances use penalty costs and the penalty crossing cost.
pub fn verify_cost_drop(inst: &Instance, eps: &Rational, rho: usize, budget: u128) -> Result<CostDropReport> {
    let all = evaluate_all(inst, &[], budget)?;
    let n = all.len();
    if (n as u128).saturating_mul(n as u128) > budget.saturating_mul(10) {
        return Err(Error::BudgetExceeded { required: (n as u128) * (n as u128), budget: budget.saturating_mul(10) });
    }
    let k = inst.k();
    // best[s][r] = min cost over S' with |S \ S'| <= r
    let best: Vec<Vec<RadicalSum>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut by_dist: Vec<Option<&RadicalSum>> = vec![None; k + 1];
            for (b, (sb, eb)) in all.iter().enumerate() {
                let d = if a == b { 0 } else { difference(&all[a].0, sb) };
                let slot = &mut by_dist[d];
                if slot.map_or(true, |c| eb.cost < *c) {
                    *slot = Some(&eb.cost);
                }
            }
            let mut out = Vec::with_capacity(k + 1);
            let mut run: Option<RadicalSum> = None;
            for c in by_dist {
                if let Some(c) = c {
                    if run.as_ref().map_or(true, |r| c < r) {
                        run = Some(c.clone());
                    }
                }
                out.push(run.clone().expect("distance zero is always present"));
            }
            out
        })
        .collect();

    let kq = Rational::from_integer(k.into());
    let rows: Vec<(usize, usize, Vec<(Vec<usize>, Vec<usize>)>, usize, BTreeMap<usize, usize>)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let (s, es) = &all[a];
            let mut premise = 0;
            let mut cex = Vec::new();
            let mut fail_rho = 0;
            let mut hist = BTreeMap::new();
            let mut pairs = 0;
            for (b, (o, eo)) in all.iter().enumerate() {
                if a == b {
                    continue;
                }
                pairs += 1;
                let psi = crossing_from(inst, s, es, o, eo).scale(eps);
                let rhs = &eo.cost + &psi;
                if es.cost <= rhs {
                    continue;
                }
                premise += 1;
                let gap = &rhs - &es.cost;
                let bound = &es.cost + &gap.scale(&(Rational::from_integer(1.into()) / &kq));
                let d = difference(s, o);
                let min_r = (1..=k).find(|&r| best[a][r] <= bound);
                match min_r {
                    Some(r) => {
                        *hist.entry(r).or_insert(0) += 1;
                        if r > d {
                            cex.push((inst.centre_ids(s), inst.centre_ids(o)));
                        }
                        if r > rho {
                            fail_rho += 1;
                        }
                    }
                    None => {
                        cex.push((inst.centre_ids(s), inst.centre_ids(o)));
                        fail_rho += 1;
                    }
                }
            }
            (pairs, premise, cex, fail_rho, hist)
        })
        .collect();

    let mut report = CostDropReport { eps: eps.clone(), rho, solutions: n, ..Default::default() };
    for (pairs, premise, cex, fail, hist) in rows {
        report.pairs += pairs;
        report.premise_pairs += premise;
        report.counterexamples.extend(cex);
        report.failures_at_rho += fail;
        for (r, c) in hist {
            *report.min_swap_histogram.entry(r).or_insert(0) += c;
        }
    }
    Ok(report)
}

/// `|a \ b|` for sorted slices of equal length.
pub(crate) fn difference(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.binary_search(x).is_err()).count()
}

/// Outcome of the nearly-good-implies-optimal check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NearlyGoodReport {
    pub eps: Rational,
    pub solutions: usize,
    pub optima: usize,
    /// Feasible solutions that are nearly good against every optimum.
    pub nearly_good: usize,
    /// Nearly-good solutions that are not optimal.
    pub violations: Vec<Vec<usize>>,
}

impl NearlyGoodReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every feasible solution that is nearly good against all
/// optima is itself optimal.
pub fn certify_nearly_good_implies_optimal(inst: &Instance, eps: &Rational, budget: u128) -> Result<NearlyGoodReport> {
    let all = evaluate_all(inst, &[], budget)?;
    let min = all.iter().map(|(_, e)| &e.cost).min().cloned().expect("nonempty");
    let optima: Vec<&(Vec<usize>, Evaluation)> = all.iter().filter(|(_, e)| e.cost == min).collect();
    let two_eps = eps * Rational::from_integer(2.into());
    let flags: Vec<(bool, bool)> = all
        .par_iter()
        .map(|(s, es)| {
            let good = optima.iter().all(|(o, eo)| {
                let rhs = &eo.cost + &crossing_from(inst, s, es, o, eo).scale(&two_eps);
                es.cost <= rhs
            });
            (good, es.cost == min)
        })
        .collect();
    let mut report = NearlyGoodReport { eps: eps.clone(), solutions: all.len(), optima: optima.len(), ..Default::default() };
    for ((s, _), (good, optimal)) in all.iter().zip(flags) {
        if good {
            report.nearly_good += 1;
            if !optimal {
                report.violations.push(inst.centre_ids(s));
            }
        }
    }
    Ok(report)
}
