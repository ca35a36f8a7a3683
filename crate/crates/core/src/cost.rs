//! Unit-cost tables and subset evaluation.
//!
//! Search, enumeration and perturbation all work on centre *indices* into an
//! instance's sorted centre list and go through [`CostSource`], so a perturbed
//! instance can be evaluated without materialising a new distance table.

use crate::exact::{RadicalSum, Surd};

/// Per-pair costs of an instance (unit cost is `distance^power`).
pub trait CostSource: Sync {
    fn n_points(&self) -> usize;
    fn n_centres(&self) -> usize;
    /// `distance(j, i)^power`.
    fn unit(&self, j: usize, i: usize) -> Surd;
    fn unit_approx(&self, j: usize, i: usize) -> f64;
    fn penalty(&self, j: usize) -> Option<Surd>;
    /// `f64::INFINITY` when the instance has no penalties.
    fn penalty_approx(&self, j: usize) -> f64;
    fn multiplicity(&self, j: usize) -> u64;
    /// Position of centre `i` in the tie-breaking order.
    fn rank(&self, i: usize) -> usize;
}

/// Dense table of unit costs, built once per instance.
#[derive(Clone, Debug)]
pub struct CostTable {
    n_points: usize,
    n_centres: usize,
    units: Vec<Surd>,
    approx: Vec<f64>,
    penalties: Option<Vec<Surd>>,
    penalty_approx: Vec<f64>,
    multiplicity: Vec<u64>,
    rank: Vec<usize>,
}

impl CostTable {
    /// `units` is row-major by point.
    pub fn new(
        n_points: usize,
        n_centres: usize,
        units: Vec<Surd>,
        penalties: Option<Vec<Surd>>,
        multiplicity: Vec<u64>,
        rank: Vec<usize>,
    ) -> CostTable {
        assert_eq!(units.len(), n_points * n_centres);
        assert_eq!(multiplicity.len(), n_points);
        assert_eq!(rank.len(), n_centres);
        let approx = units.iter().map(Surd::to_f64).collect();
        let penalty_approx = match &penalties {
            Some(p) => p.iter().map(Surd::to_f64).collect(),
            None => vec![f64::INFINITY; n_points],
        };
        CostTable { n_points, n_centres, units, approx, penalties, penalty_approx, multiplicity, rank }
    }

    pub fn unit_ref(&self, j: usize, i: usize) -> &Surd {
        &self.units[j * self.n_centres + i]
    }

    pub fn penalty_ref(&self, j: usize) -> Option<&Surd> {
        self.penalties.as_ref().map(|p| &p[j])
    }

    pub fn has_penalties(&self) -> bool {
        self.penalties.is_some()
    }

    /// Largest unit cost over all point-centre pairs.
    pub fn max_unit(&self) -> f64 {
        self.approx.iter().cloned().fold(0.0, f64::max)
    }
}

impl CostSource for CostTable {
    fn n_points(&self) -> usize {
        self.n_points
    }

    fn n_centres(&self) -> usize {
        self.n_centres
    }

    fn unit(&self, j: usize, i: usize) -> Surd {
        self.unit_ref(j, i).clone()
    }

    fn unit_approx(&self, j: usize, i: usize) -> f64 {
        self.approx[j * self.n_centres + i]
    }

    fn penalty(&self, j: usize) -> Option<Surd> {
        self.penalty_ref(j).cloned()
    }

    fn penalty_approx(&self, j: usize) -> f64 {
        self.penalty_approx[j]
    }

    fn multiplicity(&self, j: usize) -> u64 {
        self.multiplicity[j]
    }

    fn rank(&self, i: usize) -> usize {
        self.rank[i]
    }
}

/// Nearest centre of `subset` to point `j`, ties broken by rank.
pub fn nearest<C: CostSource + ?Sized>(src: &C, j: usize, subset: &[usize]) -> (usize, Surd) {
    let mut iter = subset.iter();
    let first = *iter.next().expect("nearest centre of an empty set");
    let mut best = (first, src.unit(j, first));
    for &i in iter {
        let u = src.unit(j, i);
        if u < best.1 || (u == best.1 && src.rank(i) < src.rank(best.0)) {
            best = (i, u);
        }
    }
    best
}

/// Full exact evaluation of one centre subset.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Nearest open centre of each point, ignoring penalties.
    pub nearest: Vec<usize>,
    /// Unit cost to the nearest open centre.
    pub nearest_unit: Vec<Surd>,
    /// Whether the point pays its penalty (penalty strictly below the unit cost).
    pub penalised: Vec<bool>,
    /// Total cost including multiplicities.
    pub cost: RadicalSum,
}

impl Evaluation {
    /// Per-copy cost of point `j`.
    pub fn point_cost<C: CostSource + ?Sized>(&self, src: &C, j: usize) -> Surd {
        if self.penalised[j] {
            src.penalty(j).expect("penalised point without a penalty")
        } else {
            self.nearest_unit[j].clone()
        }
    }
}

pub fn evaluate<C: CostSource + ?Sized>(src: &C, subset: &[usize]) -> Evaluation {
    let n = src.n_points();
    let mut out = Evaluation {
        nearest: Vec::with_capacity(n),
        nearest_unit: Vec::with_capacity(n),
        penalised: Vec::with_capacity(n),
        cost: RadicalSum::zero(),
    };
    for j in 0..n {
        let (i, u) = nearest(src, j, subset);
        let pay = match src.penalty(j) {
            Some(p) if p < u => {
                out.cost.add_surd_times(&p, src.multiplicity(j));
                true
            }
            _ => {
                out.cost.add_surd_times(&u, src.multiplicity(j));
                false
            }
        };
        out.nearest.push(i);
        out.nearest_unit.push(u);
        out.penalised.push(pay);
    }
    out
}

/// Exact cost of a subset.
pub fn exact_cost<C: CostSource + ?Sized>(src: &C, subset: &[usize]) -> RadicalSum {
    let mut cost = RadicalSum::zero();
    for j in 0..src.n_points() {
        let (_, u) = nearest(src, j, subset);
        let c = match src.penalty(j) {
            Some(p) if p < u => p,
            _ => u,
        };
        cost.add_surd_times(&c, src.multiplicity(j));
    }
    cost
}

/// Floating-point cost of a subset, for prefiltering.
pub fn approx_cost<C: CostSource + ?Sized>(src: &C, subset: &[usize]) -> f64 {
    let mut total = 0.0;
    for j in 0..src.n_points() {
        let mut best = src.penalty_approx(j);
        for &i in subset {
            best = best.min(src.unit_approx(j, i));
        }
        total += best * src.multiplicity(j) as f64;
    }
    total
}

/// Relative slack applied to float costs before exact comparison. The float
/// path accumulates a relative error far below this.
pub const APPROX_SLACK: f64 = 1e-9;

/// True if a float cost might be within `APPROX_SLACK` of `best`.
pub fn near_min(cost: f64, best: f64) -> bool {
    cost <= best * (1.0 + APPROX_SLACK) + f64::MIN_POSITIVE
}
