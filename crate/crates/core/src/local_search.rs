//! Best-improvement swap local search.
//!
//! Each iteration looks at every solution reachable by closing up to `rho`
//! open centres and opening as many closed ones, and moves to the cheapest.
//! Ties go to the swap whose sorted swapped-in ids, then sorted swapped-out
//! ids, are lexicographically smallest, so runs are reproducible.

use rayon::prelude::*;

use crate::cost::{approx_cost, exact_cost, near_min, CostSource};
use crate::error::{Error, Result};
use crate::exact::{RadicalSum, Rational};
use crate::instance::{crossing_cost_auto, ClusteringProblem, Instance, Solution};
use crate::subsets::{binomial, Colex};

/// Neighbourhood size above which a search refuses to run unless forced.
pub const NEIGHBOURHOOD_LIMIT: u128 = 100_000_000;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Maximum number of centres exchanged per move.
    pub rho: usize,
    pub max_iters: Option<usize>,
    /// Analysis parameter; recorded in reports, not used by the search.
    pub epsilon: Rational,
    /// Centre ids that every visited solution must contain.
    pub pin_centres: Vec<usize>,
    pub seed_solution: Option<Vec<usize>>,
    /// Run even when the neighbourhood exceeds [`NEIGHBOURHOOD_LIMIT`].
    pub force: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rho: 2,
            max_iters: None,
            epsilon: Rational::new(1.into(), 10.into()),
            pin_centres: Vec::new(),
            seed_solution: None,
            force: false,
        }
    }
}

impl SearchConfig {
    pub fn with_rho(rho: usize) -> SearchConfig {
        SearchConfig { rho, ..SearchConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Swap {
    pub swapped_in: Vec<usize>,
    pub swapped_out: Vec<usize>,
}

/// One entry of a trace. Step 0 is the seed and has no swap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchStep {
    pub iteration: usize,
    pub centres: Vec<usize>,
    pub cost: RadicalSum,
    pub swap: Option<Swap>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    LocalOptimum,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<SearchStep>,
    pub terminated: Termination,
    /// `2 k ln(n * Delta)`, with n the number of data points (with
    /// multiplicity) and Delta the largest point-to-centre unit cost.
    pub theoretical_bound: f64,
    /// The swap size actually used.
    pub rho: usize,
}

impl SearchTrace {
    /// Number of improving moves made.
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }
}

/// `2 k ln(n * Delta)` for an instance, or 0 when `n * Delta <= 1`.
pub fn iteration_bound(inst: &Instance) -> f64 {
    let n = inst.total_multiplicity() as f64;
    let delta = inst.cost_table().max_unit();
    let x = n * delta;
    if x <= 1.0 {
        0.0
    } else {
        2.0 * inst.k() as f64 * x.ln()
    }
}

/// The neighbours of one solution: every way to swap `r <= rho` removable
/// centres for `r` closed ones.
struct Neighbourhood {
    current: Vec<usize>,
    removable: Vec<usize>,
    closed: Vec<usize>,
    rho: usize,
}

impl Neighbourhood {
    fn new(current: &[usize], n_centres: usize, pins: &[usize], rho: usize) -> Neighbourhood {
        let removable = current.iter().copied().filter(|c| !pins.contains(c)).collect();
        let closed = (0..n_centres).filter(|c| current.binary_search(c).is_err()).collect();
        Neighbourhood { current: current.to_vec(), removable, closed, rho }
    }

    fn size(&self) -> u128 {
        (1..=self.rho)
            .map(|r| binomial(self.removable.len(), r).saturating_mul(binomial(self.closed.len(), r)))
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// All sets of centres to close, across swap sizes.
    fn outs(&self) -> Vec<Vec<usize>> {
        (1..=self.rho)
            .flat_map(|r| Colex::new(self.removable.len(), r).map(|c| c.iter().map(|&x| self.removable[x]).collect::<Vec<_>>()))
            .collect()
    }

    /// Calls `f(in, new_set)` for every set of `out.len()` centres to open.
    fn for_each_in(&self, out: &[usize], mut f: impl FnMut(Vec<usize>, Vec<usize>)) {
        let kept: Vec<usize> = self.current.iter().copied().filter(|c| !out.contains(c)).collect();
        for choice in Colex::new(self.closed.len(), out.len()) {
            let ins: Vec<usize> = choice.iter().map(|&x| self.closed[x]).collect();
            let mut set = kept.clone();
            set.extend_from_slice(&ins);
            set.sort_unstable();
            f(ins, set);
        }
    }
}

/// A candidate move: centres opened, centres closed (indices) and the result.
type Move = (Vec<usize>, Vec<usize>, Vec<usize>);

/// Cheapest neighbour by exact cost; ties by (sorted in ids, sorted out ids).
/// Returns `None` if the neighbourhood is empty.
fn best_neighbour<C: CostSource + ?Sized>(src: &C, hood: &Neighbourhood) -> Option<(Move, RadicalSum)> {
    let outs = hood.outs();
    let best = outs
        .par_iter()
        .map(|out| {
            let mut m = f64::INFINITY;
            hood.for_each_in(out, |_, set| m = m.min(approx_cost(src, &set)));
            m
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best == f64::INFINITY {
        return None;
    }
    let candidates: Vec<Move> = outs
        .par_iter()
        .flat_map_iter(|out| {
            let mut local = Vec::new();
            hood.for_each_in(out, |ins, set| {
                if near_min(approx_cost(src, &set), best) {
                    local.push((ins, out.clone(), set));
                }
            });
            local
        })
        .collect();
    candidates
        .into_par_iter()
        .map(|mv| {
            let c = exact_cost(src, &mv.2);
            (mv, c)
        })
        .min_by(|(a, ca), (b, cb)| ca.cmp(cb).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))))
}

/// Runs the swap local search from the configured or default seed.
///
/// The default seed opens the pinned centres and then the earliest centres of
/// the instance's centre order. The effective swap size is `rho` capped at
/// the number of unpinned open centres and the number of closed centres.
/// Pins declared by the problem itself (the dummy centre of a lifted penalty
/// instance) are always added to the configured ones.
pub fn rho_swap_search<P: ClusteringProblem + ?Sized>(problem: &P, cfg: &SearchConfig) -> Result<(Solution, SearchTrace)> {
    let inst = problem.instance();
    if cfg.rho == 0 {
        return Err(Error::input("rho must be at least 1"));
    }
    let mut pin_ids = cfg.pin_centres.clone();
    pin_ids.extend(problem.pinned());
    pin_ids.sort_unstable();
    pin_ids.dedup();
    let pins = inst.centre_indices(&pin_ids)?;
    let k = inst.k();
    let n_centres = inst.centres().len();
    if pins.len() > k {
        return Err(Error::input("pinned centres leave no room for a feasible solution"));
    }

    let seed: Vec<usize> = match &cfg.seed_solution {
        Some(ids) => {
            let idx = inst.centre_indices(ids)?;
            if idx.len() != k {
                return Err(Error::input(format!("seed has {} centres, expected {k}", idx.len())));
            }
            if pins.iter().any(|p| idx.binary_search(p).is_err()) {
                return Err(Error::input("seed does not contain the pinned centres"));
            }
            idx
        }
        None => {
            let mut s = pins.clone();
            for id in inst.centre_order() {
                if s.len() == k {
                    break;
                }
                let i = inst.centre_index(*id)?;
                if !s.contains(&i) {
                    s.push(i);
                }
            }
            s.sort_unstable();
            s
        }
    };

    let rho = cfg.rho.min(k - pins.len()).min(n_centres - k);
    let src = inst.cost_table();
    let hood = Neighbourhood::new(&seed, n_centres, &pins, rho);
    let size = hood.size();
    if size > NEIGHBOURHOOD_LIMIT && !cfg.force {
        return Err(Error::BudgetExceeded { required: size, budget: NEIGHBOURHOOD_LIMIT });
    }

    let mut current = seed;
    let mut cost = exact_cost(src, &current);
    let mut steps = vec![SearchStep { iteration: 0, centres: inst.centre_ids(&current), cost: cost.clone(), swap: None }];
    let mut terminated = Termination::LocalOptimum;
    loop {
        if rho == 0 {
            break;
        }
        if let Some(limit) = cfg.max_iters {
            if steps.len() > limit {
                terminated = Termination::MaxIterations;
                break;
            }
        }
        let hood = Neighbourhood::new(&current, n_centres, &pins, rho);
        let Some(((ins, outs, set), c)) = best_neighbour(src, &hood) else { break };
        if c >= cost {
            break;
        }
        current = set;
        cost = c;
        steps.push(SearchStep {
            iteration: steps.len(),
            centres: inst.centre_ids(&current),
            cost: cost.clone(),
            swap: Some(Swap { swapped_in: inst.centre_ids(&ins), swapped_out: inst.centre_ids(&outs) }),
        });
    }
    let solution = inst.solution_from_indices(&current);
    Ok((solution, SearchTrace { steps, terminated, theoretical_bound: iteration_bound(inst), rho }))
}

/// Verdict of [`is_nearly_good`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearlyGood {
    pub holds: bool,
    /// An optimum for which the inequality fails.
    pub violating: Option<Vec<usize>>,
}

/// Checks `cost(S) <= cost(F) + 2 eps crossing(S, F)` against every listed
/// optimum `F` (penalty costs and the penalty crossing cost on penalty
/// instances).
pub fn is_nearly_good(inst: &Instance, s: &[usize], optima: &[Vec<usize>], eps: &Rational) -> Result<NearlyGood> {
    if optima.is_empty() {
        return Err(Error::input("nearly-good check needs at least one optimum"));
    }
    let cs = exact_cost(inst.cost_table(), &inst.centre_indices(s)?);
    let two_eps = eps * Rational::from_integer(2.into());
    for f in optima {
        let cf = exact_cost(inst.cost_table(), &inst.centre_indices(f)?);
        let rhs = &cf + &crossing_cost_auto(inst, s, f)?.scale(&two_eps);
        if cs > rhs {
            return Ok(NearlyGood { holds: false, violating: Some(f.clone()) });
        }
    }
    Ok(NearlyGood { holds: true, violating: None })
}

/// If `cost(S) > cost(O) + eps crossing(S, O)`, returns the cheapest
/// neighbour `S'` within `rho` swaps (ties broken as in the search) with
/// `cost(S') <= cost(S) + (cost(O) - cost(S) + eps crossing(S, O)) / k`, or
/// `None` when the premise fails or no neighbour qualifies.
pub fn cost_drop_witness(inst: &Instance, s: &[usize], o: &[usize], eps: &Rational, rho: usize) -> Result<Option<Vec<usize>>> {
    let si = inst.centre_indices(s)?;
    let oi = inst.centre_indices(o)?;
    if si.len() != inst.k() || oi.len() != inst.k() {
        return Err(Error::input("solutions must have k centres"));
    }
    let src = inst.cost_table();
    let cs = exact_cost(src, &si);
    let co = exact_cost(src, &oi);
    let rhs = &co + &crossing_cost_auto(inst, s, o)?.scale(eps);
    if cs <= rhs {
        return Ok(None);
    }
    let k = Rational::from_integer(inst.k().into());
    let bound = &cs + &(&rhs - &cs).scale(&(Rational::from_integer(1.into()) / k));
    let rho = rho.min(inst.k()).min(inst.centres().len() - inst.k());
    let hood = Neighbourhood::new(&si, inst.centres().len(), &[], rho);
    Ok(match best_neighbour(src, &hood) {
        Some(((_, _, set), c)) if c <= bound => Some(inst.centre_ids(&set)),
        _ => None,
    })
}
