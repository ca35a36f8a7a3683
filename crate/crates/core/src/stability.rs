//! Perturbations, the bijection distance between solutions, and one-sided
//! stability checks.
//!
//! A perturbation multiplies each point-to-centre distance by a factor in
//! `[1, alpha]` and each penalty by a factor in `[1, alpha^power]`. Factors
//! are keyed on the (point, centre) pair, so the perturbed distance is
//! symmetric by construction. Centre-to-centre distances are never perturbed;
//! the bijection distance always uses the original metric.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::min_cost_assignment;
use crate::cost::{evaluate, CostSource, CostTable};
use crate::error::{Error, Result};
use crate::exact::{to_f64, RadicalSum, Rational, Surd};
use crate::instance::{Instance, InstanceBuilder};
use crate::metric::{DistanceTable, Metric};
use crate::oracle::{optima_of, FeasibleSpace, DEFAULT_BUDGET};

/// Entrywise scaling of distances and penalties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perturbation {
    pub alpha: Rational,
    /// Distance factors keyed on (point id, centre id); missing pairs are 1.
    pub scale: BTreeMap<(usize, usize), Rational>,
    /// Penalty factors keyed on point id; missing points are 1.
    pub penalty_scale: BTreeMap<usize, Rational>,
}

impl Perturbation {
    pub fn identity(alpha: Rational) -> Perturbation {
        Perturbation { alpha, scale: BTreeMap::new(), penalty_scale: BTreeMap::new() }
    }

    /// Every distance scaled by `alpha` and every penalty by `alpha^power`.
    pub fn uniform(inst: &Instance, alpha: Rational) -> Perturbation {
        let pen = num::pow(alpha.clone(), inst.power() as usize);
        let mut out = Perturbation::identity(alpha.clone());
        for p in inst.points() {
            for c in inst.centres() {
                out.scale.insert((p.id, c.id), alpha.clone());
            }
            if inst.has_penalties() {
                out.penalty_scale.insert(p.id, pen.clone());
            }
        }
        out
    }

    /// Checks the factor bounds and that every key names a point or centre.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let one = Rational::one();
        if self.alpha < one {
            return Err(Error::Perturbation(format!("alpha = {} is below 1", self.alpha)));
        }
        for (&(p, c), f) in &self.scale {
            inst.point_index(p).and_then(|_| inst.centre_index(c)).map_err(|e| Error::Perturbation(e.to_string()))?;
            if *f < one || *f > self.alpha {
                return Err(Error::Perturbation(format!("scale {f} of (p{p}, c{c}) outside [1, {}]", self.alpha)));
            }
        }
        let cap = num::pow(self.alpha.clone(), inst.power() as usize);
        for (&p, f) in &self.penalty_scale {
            inst.point_index(p).map_err(|e| Error::Perturbation(e.to_string()))?;
            if !inst.has_penalties() {
                return Err(Error::Perturbation("penalty factors on an instance without penalties".into()));
            }
            if *f < one || *f > cap {
                return Err(Error::Perturbation(format!("penalty factor {f} of p{p} outside [1, {cap}]")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Perturbation {
    /// Sparse listing of the non-unit factors.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha {}", self.alpha)?;
        for ((p, c), s) in &self.scale {
            if !s.is_one() {
                writeln!(f, "scale p{p} c{c} {s}")?;
            }
        }
        for (p, s) in &self.penalty_scale {
            if !s.is_one() {
                writeln!(f, "penalty_scale p{p} {s}")?;
            }
        }
        Ok(())
    }
}

/// The perturbation that leaves solution `s` unchanged and makes every other
/// assignment more expensive: each distance from a point to a centre other
/// than its nearest centre in `s` is multiplied by `1 + eps_prime`, and each
/// penalty of a point served below its penalty in `s` is multiplied by
/// `(1 + eps_prime)^power`.
pub fn canonical_perturbation(inst: &Instance, s: &[usize], eps_prime: &Rational) -> Result<Perturbation> {
    let idx = inst.centre_indices(s)?;
    if idx.len() != inst.k() {
        return Err(Error::input("canonical perturbation needs a feasible solution"));
    }
    let alpha = Rational::one() + eps_prime;
    let pen = num::pow(alpha.clone(), inst.power() as usize);
    let ev = evaluate(inst.cost_table(), &idx);
    let mut out = Perturbation::identity(alpha.clone());
    if eps_prime.is_zero() {
        return Ok(out);
    }
    for (j, p) in inst.points().iter().enumerate() {
        for (i, c) in inst.centres().iter().enumerate() {
            if i != ev.nearest[j] {
                out.scale.insert((p.id, c.id), alpha.clone());
            }
        }
        if let Some(pj) = inst.penalty_at(j) {
            if ev.nearest_unit[j] < *pj {
                out.penalty_scale.insert(p.id, pen.clone());
            }
        }
    }
    Ok(out)
}

/// Materialises the perturbed instance with an explicit distance table. The
/// table is flagged as non-metric; point coordinates are kept for reference.
pub fn apply_perturbation(inst: &Instance, pert: &Perturbation) -> Result<Instance> {
    pert.validate(inst)?;
    let mut table = DistanceTable::new();
    table.non_metric = true;
    let m = inst.metric();
    let one = Rational::one();
    for p in inst.points() {
        for c in inst.centres() {
            let d = m.distance(p, c)?;
            let f = pert.scale.get(&(p.id, c.id)).unwrap_or(&one);
            table.insert(p.site(), c.site(), d.scale(f));
        }
    }
    let cs = inst.centres();
    for (x, a) in cs.iter().enumerate() {
        for b in &cs[x + 1..] {
            if let Ok(d) = m.distance(a, b) {
                table.insert(a.site(), b.site(), d);
            }
        }
    }
    let penalties = inst.penalties().map(|map| {
        map.into_iter()
            .map(|(id, p)| {
                let f = pert.penalty_scale.get(&id).unwrap_or(&one);
                (id, p.scale(f))
            })
            .collect()
    });
    let mut b: InstanceBuilder = inst.to_builder();
    b.metric = Metric::Explicit(table);
    b.penalties = penalties;
    Instance::build_unchecked(b)
}

/// Costs of a perturbed instance without building its table. Each pair
/// carries a code into a palette of factors already raised to the objective's
/// power.
pub struct PerturbedCosts<'a> {
    base: &'a CostTable,
    palette: &'a [(Rational, f64)],
    codes: Vec<u16>,
    pen_codes: Vec<u16>,
}

impl<'a> PerturbedCosts<'a> {
    fn new(base: &'a CostTable, palette: &'a [(Rational, f64)], codes: Vec<u16>, pen_codes: Vec<u16>) -> Self {
        PerturbedCosts { base, palette, codes, pen_codes }
    }
}

impl CostSource for PerturbedCosts<'_> {
    fn n_points(&self) -> usize {
        self.base.n_points()
    }

    fn n_centres(&self) -> usize {
        self.base.n_centres()
    }

    fn unit(&self, j: usize, i: usize) -> Surd {
        let code = self.codes[j * self.base.n_centres() + i];
        let u = self.base.unit_ref(j, i);
        if code == 0 {
            u.clone()
        } else {
            u.scale(&self.palette[code as usize].0)
        }
    }

    fn unit_approx(&self, j: usize, i: usize) -> f64 {
        self.base.unit_approx(j, i) * self.palette[self.codes[j * self.base.n_centres() + i] as usize].1
    }

    fn penalty(&self, j: usize) -> Option<Surd> {
        let code = self.pen_codes[j];
        self.base.penalty_ref(j).map(|p| if code == 0 { p.clone() } else { p.scale(&self.palette[code as usize].0) })
    }

    fn penalty_approx(&self, j: usize) -> f64 {
        self.base.penalty_approx(j) * self.palette[self.pen_codes[j] as usize].1
    }

    fn multiplicity(&self, j: usize) -> u64 {
        self.base.multiplicity(j)
    }

    fn rank(&self, i: usize) -> usize {
        self.base.rank(i)
    }
}

/// Minimum over bijections `f: S1 -> S2` of the sum of original-metric
/// distances `d(s, f(s))`.
pub fn dist_bij(inst: &Instance, s1: &[usize], s2: &[usize]) -> Result<RadicalSum> {
    if s1.len() != s2.len() {
        return Err(Error::input(format!("sets of size {} and {} have no bijection", s1.len(), s2.len())));
    }
    let a = inst.centre_indices(s1)?;
    let b = inst.centre_indices(s2)?;
    dist_bij_indices(inst, &a, &b)
}

fn dist_bij_indices(inst: &Instance, a: &[usize], b: &[usize]) -> Result<RadicalSum> {
    if a == b {
        return Ok(RadicalSum::zero());
    }
    let cs = inst.centres();
    let mut cost = Vec::with_capacity(a.len());
    for &x in a {
        let mut row = Vec::with_capacity(b.len());
        for &y in b {
            row.push(RadicalSum::from_surd(&inst.metric().distance(&cs[x], &cs[y])?));
        }
        cost.push(row);
    }
    Ok(min_cost_assignment(&cost).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityStatus {
    NoViolationFound,
    Violated,
}

impl fmt::Display for StabilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityStatus::NoViolationFound => "no_violation_found",
            StabilityStatus::Violated => "violated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trial: usize,
    pub perturbation: Perturbation,
    pub perturbed_optimum: Vec<usize>,
    pub original_optimum: Vec<usize>,
    pub dist: RadicalSum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub alpha: Rational,
    pub beta: Rational,
    pub status: StabilityStatus,
    /// Present exactly when the status is `Violated`.
    pub witness: Option<Witness>,
    pub trials_run: usize,
    /// Largest bijection distance seen over all trials.
    pub max_dist: RadicalSum,
}

#[derive(Clone, Debug)]
pub struct FalsifyConfig {
    /// Number of random perturbations.
    pub trials: usize,
    pub seed: u64,
    /// Also try the canonical perturbation of every feasible solution.
    pub canonical: bool,
    /// Subset budget for each enumeration.
    pub budget: u128,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        FalsifyConfig { trials: 1000, seed: 0, canonical: true, budget: DEFAULT_BUDGET }
    }
}

/// Resolution of the uniform factor draw: factors are `1 + (alpha - 1) u / 1024`.
const STEPS: u16 = 1024;

fn palette(alpha: &Rational, power: u32) -> Vec<(Rational, f64)> {
    let span = alpha - Rational::one();
    (0..=STEPS)
        .map(|u| {
            let f = Rational::one() + &span * Rational::new(u.into(), STEPS.into());
            let fp = num::pow(f, power as usize);
            let approx = to_f64(&fp);
            (fp, approx)
        })
        .collect()
}

fn factor_of(alpha: &Rational, code: u16) -> Rational {
    Rational::one() + (alpha - Rational::one()) * Rational::new(code.into(), STEPS.into())
}

/// A trial's codes: canonical for a feasible subset, or random.
fn trial_codes(inst: &Instance, trial: usize, canon: &[Vec<usize>], seed: u64) -> (Vec<u16>, Vec<u16>) {
    let t = inst.cost_table();
    let (np, nc) = (t.n_points(), t.n_centres());
    if trial < canon.len() {
        let ev = evaluate(t, &canon[trial]);
        let mut codes = vec![STEPS; np * nc];
        let mut pen = vec![0; np];
        for j in 0..np {
            codes[j * nc + ev.nearest[j]] = 0;
            if let Some(p) = t.penalty_ref(j) {
                if ev.nearest_unit[j] < *p {
                    pen[j] = STEPS;
                }
            }
        }
        return (codes, pen);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let draw = |rng: &mut ChaCha8Rng| {
        let x: f64 = rng.gen();
        if x < 0.4 {
            0
        } else if x < 0.8 {
            STEPS
        } else {
            rng.gen_range(1..STEPS)
        }
    };
    let codes = (0..np * nc).map(|_| draw(&mut rng)).collect();
    let pen = (0..np).map(|_| if t.has_penalties() { draw(&mut rng) } else { 0 }).collect();
    (codes, pen)
}

fn perturbation_from_codes(inst: &Instance, alpha: &Rational, codes: &[u16], pen: &[u16]) -> Perturbation {
    let nc = inst.centres().len();
    let mut out = Perturbation::identity(alpha.clone());
    for (j, p) in inst.points().iter().enumerate() {
        for (i, c) in inst.centres().iter().enumerate() {
            let code = codes[j * nc + i];
            if code != 0 {
                out.scale.insert((p.id, c.id), factor_of(alpha, code));
            }
        }
        if pen[j] != 0 {
            out.penalty_scale.insert(p.id, num::pow(factor_of(alpha, pen[j]), inst.power() as usize));
        }
    }
    out
}

/// Searches for a perturbation whose optimum is far from the original optima.
///
/// For each trial perturbation, every perturbed optimum is compared with
/// every original optimum, and the largest bijection distance is recorded.
/// The instance is reported violated when that distance exceeds `beta` for
/// some trial. Trials are the canonical perturbation of each feasible
/// solution (if enabled) followed by `cfg.trials` random ones whose factors
/// are 1 or `alpha` with probability 0.4 each and uniform otherwise. The
/// witness is the trial with the largest distance, lowest index on ties.
/// Finding no violation proves nothing.
pub fn falsify_stability(inst: &Instance, alpha: &Rational, beta: &Rational, cfg: &FalsifyConfig) -> Result<StabilityVerdict> {
    if *alpha < Rational::one() {
        return Err(Error::Perturbation(format!("alpha = {alpha} is below 1")));
    }
    let t = inst.cost_table();
    let (_, original) = optima_of(t, inst.k(), &[], cfg.budget)?;
    let canon: Vec<Vec<usize>> = if cfg.canonical {
        FeasibleSpace::new(t.n_centres(), inst.k(), &[])?.all().collect()
    } else {
        Vec::new()
    };
    let pal = palette(alpha, inst.power());
    let total = canon.len() + cfg.trials;

    type Best = Option<(RadicalSum, usize, Vec<usize>, Vec<usize>)>;
    let better = |a: Best, b: Best| -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    };
    let results: Vec<Result<Best>> = (0..total)
        .into_par_iter()
        .map(|trial| -> Result<Best> {
            let (codes, pen) = trial_codes(inst, trial, &canon, cfg.seed);
            let pc = PerturbedCosts::new(t, &pal, codes, pen);
            let (_, perturbed) = optima_of(&pc, inst.k(), &[], cfg.budget)?;
            let mut best: Best = None;
            for o2 in &perturbed {
                for o in &original {
                    let d = dist_bij_indices(inst, o, o2)?;
                    best = better(best, Some((d, trial, o.clone(), o2.clone())));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Best = None;
    for r in results {
        best = better(best, r?);
    }
    let (max_dist, trial, o, o2) = best.expect("at least one optimum");
    let violated = max_dist > RadicalSum::from_rational(beta.clone());
    let witness = if violated {
        let (codes, pen) = trial_codes(inst, trial, &canon, cfg.seed);
        Some(Witness {
            trial,
            perturbation: perturbation_from_codes(inst, alpha, &codes, &pen),
            perturbed_optimum: inst.centre_ids(&o2),
            original_optimum: inst.centre_ids(&o),
            dist: max_dist.clone(),
        })
    } else {
        None
    };
    Ok(StabilityVerdict {
        alpha: alpha.clone(),
        beta: beta.clone(),
        status: if violated { StabilityStatus::Violated } else { StabilityStatus::NoViolationFound },
        witness,
        trials_run: total,
        max_dist,
    })
}

/// Result of [`certify_stable_family`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyCertificate {
    pub alpha: Rational,
    pub stable: bool,
    /// Number of canonical perturbations checked.
    pub checked: usize,
    /// Solution whose canonical perturbation produced a new optimum, and
    /// that optimum.
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

/// Checks, for the canonical perturbation (at `alpha - 1`) of every feasible
/// solution, that every perturbed optimum is an original optimum.
pub fn certify_stable_family(inst: &Instance, alpha: &Rational, budget: u128) -> Result<FamilyCertificate> {
    if *alpha < Rational::one() {
        return Err(Error::Perturbation(format!("alpha = {alpha} is below 1")));
    }
    let t = inst.cost_table();
    let (_, original) = optima_of(t, inst.k(), &[], budget)?;
    let canon: Vec<Vec<usize>> = FeasibleSpace::new(t.n_centres(), inst.k(), &[])?.all().collect();
    let pal = palette(alpha, inst.power());
    let failures: Vec<Result<Option<(usize, Vec<usize>)>>> = (0..canon.len())
        .into_par_iter()
        .map(|trial| {
            let (codes, pen) = trial_codes(inst, trial, &canon, 0);
            let pc = PerturbedCosts::new(t, &pal, codes, pen);
            let (_, perturbed) = optima_of(&pc, inst.k(), &[], budget)?;
            Ok(perturbed.into_iter().find(|o| !original.contains(o)).map(|o| (trial, o)))
        })
        .collect();
    let mut witness = None;
    for f in failures {
        if let Some((trial, o)) = f? {
            witness = Some((inst.centre_ids(&canon[trial]), inst.centre_ids(&o)));
            break;
        }
    }
    Ok(FamilyCertificate { alpha: alpha.clone(), stable: witness.is_none(), checked: canon.len(), witness })
}
