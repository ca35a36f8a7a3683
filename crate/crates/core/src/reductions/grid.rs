//! Grid tiling and its reduction to Euclidean k^2-median with penalties in
//! the plane, plus the no-penalty variant under the cylinder metric.
//!
//! Cell `(i, j)` of a `k x k` tiling owns a subset of `[n] x [n]`. Its
//! candidate centres sit at `(2i - 1, 2j - 1) + eps * (u - 1, v - 1)` for
//! every `(u, v)` in the subset. Data points fill the square
//! `[0, 2k + eps (n - 1)]^2` at spacing `eps`, each with penalty 1.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, RadicalSum, Rational, Surd};
use crate::instance::{Instance, InstanceBuilder, Objective};
use crate::metric::{Metric, Point, Role};
use crate::oracle::solve_exact;

use super::{CertificateCheck, ReductionCertificate};

pub type Cell = (usize, usize);
pub type Pair = (usize, usize);

/// `k x k` cells, each holding a nonempty subset of `[n] x [n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridTilingInstance {
    pub n: usize,
    pub k: usize,
    pub sets: BTreeMap<Cell, BTreeSet<Pair>>,
}

impl GridTilingInstance {
    pub fn new(n: usize, k: usize, sets: BTreeMap<Cell, BTreeSet<Pair>>) -> Result<GridTilingInstance> {
        if n == 0 || k == 0 {
            return Err(Error::input("grid tiling needs n >= 1 and k >= 1"));
        }
        for i in 1..=k {
            for j in 1..=k {
                match sets.get(&(i, j)) {
                    None => return Err(Error::input(format!("cell ({i}, {j}) has no set"))),
                    Some(s) if s.is_empty() => return Err(Error::input(format!("cell ({i}, {j}) has an empty set"))),
                    Some(s) => {
                        if let Some(&(u, v)) = s.iter().find(|&&(u, v)| u == 0 || v == 0 || u > n || v > n) {
                            return Err(Error::input(format!("pair ({u}, {v}) of cell ({i}, {j}) is outside [{n}] x [{n}]")));
                        }
                    }
                }
            }
        }
        if sets.len() != k * k {
            return Err(Error::input("a set is given for a cell outside the k x k grid"));
        }
        Ok(GridTilingInstance { n, k, sets })
    }

    /// Every cell holds all of `[n] x [n]`.
    pub fn full(n: usize, k: usize) -> GridTilingInstance {
        let all: BTreeSet<Pair> = (1..=n).flat_map(|u| (1..=n).map(move |v| (u, v))).collect();
        let sets = cells(k).map(|c| (c, all.clone())).collect();
        GridTilingInstance { n, k, sets }
    }

    /// Every cell holds the single pair `(1, 1)`.
    pub fn anchored(n: usize, k: usize) -> GridTilingInstance {
        let sets = cells(k).map(|c| (c, BTreeSet::from([(1, 1)]))).collect();
        GridTilingInstance { n, k, sets }
    }

    /// Whether `selection` picks a member of every cell and is monotone: the
    /// first coordinate does not decrease from cell `(i, j)` to `(i + 1, j)`
    /// and the second does not decrease from `(i, j)` to `(i, j + 1)`.
    pub fn is_solution(&self, selection: &BTreeMap<Cell, Pair>) -> bool {
        cells(self.k).all(|c| selection.get(&c).is_some_and(|p| self.sets[&c].contains(p)))
            && cells(self.k).all(|(i, j)| {
                let (a, b) = selection[&(i, j)];
                (i == self.k || a <= selection[&(i + 1, j)].0) && (j == self.k || b <= selection[&(i, j + 1)].1)
            })
    }

    /// Product of the set sizes, saturating.
    pub fn search_space(&self) -> u128 {
        self.sets.values().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }
}

fn cells(k: usize) -> impl Iterator<Item = Cell> {
    (1..=k).flat_map(move |i| (1..=k).map(move |j| (i, j)))
}

/// Exhaustive search for a monotone selection. Returns the lexicographically
/// first one in row-major cell order, or `None`.
pub fn solve_grid_tiling(gt: &GridTilingInstance, budget: u128) -> Result<Option<BTreeMap<Cell, Pair>>> {
    let required = gt.search_space();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let order: Vec<Cell> = cells(gt.k).collect();
    let mut chosen: BTreeMap<Cell, Pair> = BTreeMap::new();
    fn go(gt: &GridTilingInstance, order: &[Cell], at: usize, chosen: &mut BTreeMap<Cell, Pair>) -> bool {
        let Some(&(i, j)) = order.get(at) else { return true };
        for &(a, b) in &gt.sets[&(i, j)] {
            if i > 1 && chosen[&(i - 1, j)].0 > a {
                continue;
            }
            if j > 1 && chosen[&(i, j - 1)].1 > b {
                continue;
            }
            chosen.insert((i, j), (a, b));
            if go(gt, order, at + 1, chosen) {
                return true;
            }
            chosen.remove(&(i, j));
        }
        false
    }
    Ok(go(gt, &order, 0, &mut chosen).then_some(chosen))
}

/// Parameters of the plane reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridReductionSpec {
    pub gt: GridTilingInstance,
    /// Lattice spacing; `1 / eps` must be an integer.
    pub eps: Rational,
    /// Number of lattice points, `(2k / eps + n)^2`.
    pub sigma_count: u64,
    /// Threshold: the cost of opening the anchored centre `(2i - 1, 2j - 1)`
    /// of every cell.
    pub nu: RadicalSum,
}

impl GridReductionSpec {
    pub fn new(gt: GridTilingInstance, eps: Rational) -> Result<GridReductionSpec> {
        if !eps.is_positive() || !(Rational::one() / &eps).is_integer() {
            return Err(Error::input(format!("grid spacing {eps} must be 1/q for a positive integer q")));
        }
        let side = lattice_side(&gt, &eps);
        let sigma_count = (side as u64).checked_mul(side as u64).ok_or_else(|| Error::input("lattice too large"))?;
        let mut spec = GridReductionSpec { gt, eps, sigma_count, nu: RadicalSum::zero() };
        let anchored = GridReductionSpec { gt: GridTilingInstance::anchored(spec.gt.n, spec.gt.k), ..spec.clone() };
        let inst = build_grid_instance(&anchored)?;
        let all: Vec<usize> = inst.centres().iter().map(|c| c.id).collect();
        spec.nu = inst.solution_cost(&all)?.cost;
        Ok(spec)
    }

    /// `k^2 * eps * (n - 1)`, the bijection-distance bound the construction
    /// is meant to certify.
    pub fn certified_beta(&self) -> Rational {
        let k = self.gt.k as i64;
        int(k * k) * &self.eps * int(self.gt.n as i64 - 1)
    }

    /// Lattice points per side.
    pub fn side(&self) -> usize {
        lattice_side(&self.gt, &self.eps)
    }
}

fn lattice_side(gt: &GridTilingInstance, eps: &Rational) -> usize {
    let per_unit = (Rational::one() / eps).to_integer().to_usize().expect("spacing checked");
    2 * gt.k * per_unit + gt.n
}

/// Candidate centres as `(centre id, cell, pair)`, ids assigned in cell
/// order and then pair order.
pub fn grid_centre_labels(gt: &GridTilingInstance) -> Vec<(usize, Cell, Pair)> {
    let mut out = Vec::new();
    for (cell, set) in &gt.sets {
        for &pair in set {
            out.push((out.len(), *cell, pair));
        }
    }
    out
}

fn centre_coords(spec: &GridReductionSpec, (i, j): Cell, (u, v): Pair) -> [Rational; 2] {
    let e = &spec.eps;
    [int(2 * i as i64 - 1) + e * int(u as i64 - 1), int(2 * j as i64 - 1) + e * int(v as i64 - 1)]
}

/// Lattice points as `(id, x, y)`, ids row by row from the origin.
fn lattice(spec: &GridReductionSpec) -> Vec<(usize, Rational, Rational)> {
    let side = spec.side();
    let mut out = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            out.push((y * side + x, &spec.eps * int(x as i64), &spec.eps * int(y as i64)));
        }
    }
    out
}

fn tiling_text(gt: &GridTilingInstance) -> String {
    gt.sets
        .iter()
        .map(|((i, j), s)| format!("{i},{j}:{}", s.iter().map(|(u, v)| format!("{u}.{v}")).collect::<Vec<_>>().join("|")))
        .collect::<Vec<_>>()
        .join(";")
}

fn grid_provenance(spec: &GridReductionSpec, source: &str) -> Vec<(String, String)> {
    vec![
        ("source".into(), source.into()),
        ("n".into(), spec.gt.n.to_string()),
        ("tiling_k".into(), spec.gt.k.to_string()),
        ("eps".into(), spec.eps.to_string()),
        ("sigma".into(), spec.sigma_count.to_string()),
        ("nu".into(), spec.nu.to_string()),
        ("certified_beta".into(), spec.certified_beta().to_string()),
        ("sets".into(), tiling_text(&spec.gt)),
    ]
}

/// The k^2-median instance with unit penalties in the plane.
pub fn build_grid_instance(spec: &GridReductionSpec) -> Result<Instance> {
    let k = spec.gt.k;
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, k * k);
    let mut penalties = BTreeMap::new();
    for (id, x, y) in lattice(spec) {
        b.points.push(Point::at(Role::Data, id, &[x, y]));
        penalties.insert(id, Surd::from_int(1));
    }
    b.penalties = Some(penalties);
    for (id, cell, pair) in grid_centre_labels(&spec.gt) {
        b.centres.push(Point::at(Role::Centre, id, &centre_coords(spec, cell, pair)));
    }
    Ok(b.build()?.with_provenance(grid_provenance(spec, "grid_tiling")))
}

/// The 3k^2-median instance without penalties under the cylinder metric.
/// The plane instance is lifted to height 0; each cell adds two sentinel
/// centres at `(2i - 1, 2j, 1)` and `(2i, 2j - 1, 1)`, each carrying
/// `sigma_count` co-located data points.
pub fn build_cylinder_instance(spec: &GridReductionSpec) -> Result<Instance> {
    let k = spec.gt.k;
    let zero = Rational::zero();
    let one = Rational::one();
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::CylinderMax, 3 * k * k);
    let pts = lattice(spec);
    let mut next_point = pts.len();
    for (id, x, y) in pts {
        b.points.push(Point::at(Role::Data, id, &[x, y, zero.clone()]));
    }
    let labels = grid_centre_labels(&spec.gt);
    let mut next_centre = labels.len();
    for (id, cell, pair) in labels {
        let [x, y] = centre_coords(spec, cell, pair);
        b.centres.push(Point::at(Role::Centre, id, &[x, y, zero.clone()]));
    }
    for (i, j) in cells(k) {
        let (i, j) = (i as i64, j as i64);
        for (x, y) in [(2 * i - 1, 2 * j), (2 * i, 2 * j - 1)] {
            let at = [int(x), int(y), one.clone()];
            b.centres.push(Point::at(Role::Centre, next_centre, &at));
            b.points.push(Point::at(Role::Data, next_point, &at).with_multiplicity(spec.sigma_count));
            next_centre += 1;
            next_point += 1;
        }
    }
    Ok(b.build()?.with_provenance(grid_provenance(spec, "grid_tiling_cylinder")))
}

/// Ids of the sentinel centres of a cylinder instance built from `spec`.
pub fn cylinder_sentinels(spec: &GridReductionSpec) -> Vec<usize> {
    let first = grid_centre_labels(&spec.gt).len();
    (first..first + 2 * spec.gt.k * spec.gt.k).collect()
}

/// Compares the tiling's solvability with the clustering optimum against
/// `nu`, and checks that every optimum opens one centre in each cell.
pub fn certify_grid_equivalence(spec: &GridReductionSpec, budget: u128) -> Result<ReductionCertificate> {
    let selection = solve_grid_tiling(&spec.gt, budget)?;
    let inst = build_grid_instance(spec)?;
    let optima = solve_exact(&inst, budget)?;
    let within = optima.optimal_cost <= spec.nu;
    let solvable = selection.is_some();
    let cell_of: BTreeMap<usize, Cell> = grid_centre_labels(&spec.gt).into_iter().map(|(id, c, _)| (id, c)).collect();
    let spread = optima.solutions.iter().all(|o| {
        let hit: BTreeSet<Cell> = o.iter().map(|id| cell_of[id]).collect();
        hit.len() == o.len()
    });
    let checks = vec![
        CertificateCheck::new(
            "threshold_equivalence",
            solvable == within,
            format!("tiling {}; optimum {} {} nu {}", if solvable { "solvable" } else { "unsolvable" }, optima.optimal_cost, if within { "<=" } else { ">" }, spec.nu),
        ),
        CertificateCheck::new("one_centre_per_cell", spread, format!("{} optima", optima.solutions.len())),
    ];
    let mut parameters = inst.provenance().to_vec();
    parameters.push(("source_answer".into(), if solvable { "yes" } else { "no" }.into()));
    parameters.push(("optimal_cost".into(), optima.optimal_cost.to_string()));
    parameters.push(("optimal_cost_approx".into(), format!("{:.6}", optima.optimal_cost.to_f64())));
    parameters.push(("nu_approx".into(), format!("{:.6}", spec.nu.to_f64())));
    Ok(ReductionCertificate { source: "grid_tiling".into(), parameters, checks })
}
