//! Partial vertex cover and its reductions to Euclidean k-median on the
//! moment curve: one in `R^4` with penalties, one in `R^6` without.
//!
//! Vertex `v` becomes a candidate centre on the curve. Each edge becomes a
//! data point at the centre of the sphere fitted to its two endpoints, lifted
//! along an extra axis so that it sits at the same distance `r_q` (the
//! largest fitted radius) from both endpoints. Every other vertex is then at
//! squared distance at least `r_q^2 + 1/4`, and the cost of a solution is an
//! affine function of the number of edges it covers.

use std::collections::BTreeMap;

use num::{One, Zero};
use rayon::prelude::*;

use crate::cost::exact_cost;
use crate::error::{Error, Result};
use crate::exact::{ceil_sqrt, floor_sqrt, int, rat, RadicalSum, Rational, Surd};
use crate::instance::{Instance, InstanceBuilder, Objective};
use crate::metric::{Coord, Metric, Point};
use crate::oracle::solve_exact;
use crate::subsets::{binomial, Colex};

use super::moment::{fit_sphere_3d, fit_sphere_4d, SphereFit};
use super::{CertificateCheck, ReductionCertificate};

/// A simple undirected graph on vertices `1..=n_vertices` with the cover
/// size `k` and the coverage target `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvcGraph {
    pub n_vertices: usize,
    /// Edges as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
    pub s: usize,
}

impl PvcGraph {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>, k: usize, s: usize) -> Result<PvcGraph> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::input(format!("self-loop at vertex {u}")));
            }
            if u == 0 || v == 0 || u > n_vertices || v > n_vertices {
                return Err(Error::input(format!("edge ({u}, {v}) leaves the vertex range 1..={n_vertices}")));
            }
            out.push((u.min(v), u.max(v)));
        }
        out.sort_unstable();
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("repeated edge ({}, {})", w[0].0, w[0].1)));
        }
        if k == 0 || k > n_vertices {
            return Err(Error::input(format!("cover size k = {k} must lie in [1, {n_vertices}]")));
        }
        Ok(PvcGraph { n_vertices, edges: out, k, s })
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges with at least one endpoint in `vertices`.
    pub fn coverage(&self, vertices: &[usize]) -> usize {
        self.edges.iter().filter(|(u, v)| vertices.contains(u) || vertices.contains(v)).count()
    }

    pub fn path(n: usize, k: usize, s: usize) -> Result<PvcGraph> {
        PvcGraph::new(n, (1..n).map(|v| (v, v + 1)), k, s)
    }

    pub fn cycle(n: usize, k: usize, s: usize) -> Result<PvcGraph> {
        PvcGraph::new(n, (1..=n).map(|v| (v, v % n + 1)), k, s)
    }

    pub fn star(leaves: usize, k: usize, s: usize) -> Result<PvcGraph> {
        PvcGraph::new(leaves + 1, (2..=leaves + 1).map(|v| (1, v)), k, s)
    }
}

/// Best coverage and every `k`-set of vertices achieving it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvcSolution {
    pub best_coverage: usize,
    /// Vertex sets, ascending within a set, sets in colex order.
    pub covers: Vec<Vec<usize>>,
}

impl PvcSolution {
    /// Whether some `k`-set covers at least `s` edges.
    pub fn admits(&self, s: usize) -> bool {
        self.best_coverage >= s
    }
}

/// Exhaustive maximum partial vertex cover.
pub fn solve_pvc(g: &PvcGraph, budget: u128) -> Result<PvcSolution> {
    let required = binomial(g.n_vertices, g.k);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut best = 0;
    let mut covers = Vec::new();
    for set in Colex::new(g.n_vertices, g.k) {
        let vs: Vec<usize> = set.iter().map(|&x| x + 1).collect();
        let c = g.coverage(&vs);
        if c > best || covers.is_empty() {
            best = c;
            covers.clear();
        }
        if c == best {
            covers.push(vs);
        }
    }
    Ok(PvcSolution { best_coverage: best, covers })
}

/// Which of the two constructions to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PvcVariant {
    /// `R^4`, penalties, `k` centres.
    Pvc4,
    /// `R^6`, no penalties, `k + 1` centres including the sentinel.
    Pvc6,
}

impl std::fmt::Display for PvcVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PvcVariant::Pvc4 => "pvc4",
            PvcVariant::Pvc6 => "pvc6",
        })
    }
}

impl std::str::FromStr for PvcVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<PvcVariant> {
        match s {
            "pvc4" => Ok(PvcVariant::Pvc4),
            "pvc6" => Ok(PvcVariant::Pvc6),
            _ => Err(Error::input(format!("unknown reduction variant `{s}`"))),
        }
    }
}

/// A generated instance with the constants of its construction.
#[derive(Clone, Debug)]
pub struct PvcReduction {
    pub variant: PvcVariant,
    pub graph: PvcGraph,
    pub instance: Instance,
    /// One fit per edge, in edge order.
    pub fits: Vec<SphereFit>,
    /// `r_q^2`, the largest squared fitted radius.
    pub radius_sq: Rational,
    /// Relative gap `sqrt((r_q^2 + 1/4) / r_q^2) - 1` between a covered and an
    /// uncovered edge.
    pub gap: RadicalSum,
    /// `gap / 2m`, the perturbation level the instance is stable under.
    pub stability_margin: RadicalSum,
    /// A rational strictly above `1 + stability_margin` and within a
    /// thousandth of the margin of it.
    pub alpha_bound: Rational,
    /// Centre id of the sentinel (`Pvc6` only).
    pub sentinel_centre: Option<usize>,
}

/// Smallest rational `q = c / 2^b` with `q >= sqrt(x)`.
fn sqrt_upper(x: &Rational, bits: u64) -> Rational {
    let scale = Rational::from_integer(num::BigInt::one() << bits);
    let r = ceil_sqrt(&(x * &scale * &scale));
    Rational::from_integer(r) / scale
}

fn sqrt_lower(x: &Rational, bits: u64) -> Rational {
    let scale = Rational::from_integer(num::BigInt::one() << bits);
    Rational::from_integer(floor_sqrt(&(x * &scale * &scale))) / scale
}

impl PvcReduction {
    pub fn m(&self) -> usize {
        self.graph.m()
    }

    /// `r_q * (m + (m - s) * gap)`, the cost of a solution covering `s` edges,
    /// written as `s * r_q + (m - s) * sqrt(r_q^2 + 1/4)`.
    pub fn threshold(&self, s: usize) -> RadicalSum {
        let m = self.m() as i64;
        let mut out = RadicalSum::zero();
        out.add_surd_times(&Surd::sqrt_of(self.radius_sq.clone()), s as u64);
        // For s > m the formula continues linearly with a negative coefficient.
        out.add_surd(&Surd::sqrt_of(&self.radius_sq + rat(1, 4)), &int(m - s as i64));
        out
    }

    /// Graph vertices of a clustering solution given as centre ids.
    pub fn vertices_of(&self, centre_ids: &[usize]) -> Vec<usize> {
        centre_ids.iter().copied().filter(|&c| Some(c) != self.sentinel_centre).collect()
    }

    /// Centre ids of the clustering solution for a vertex set.
    pub fn solution_for(&self, vertices: &[usize]) -> Vec<usize> {
        let mut out = vertices.to_vec();
        out.extend(self.sentinel_centre);
        out.sort_unstable();
        out
    }
}

fn shared_radius(fits: &[SphereFit]) -> Rational {
    fits.iter().map(|f| f.radius_sq.clone()).max().expect("nonempty edge set")
}

fn stability_constants(radius_sq: &Rational, m: usize) -> (RadicalSum, RadicalSum, Rational) {
    let ratio = (radius_sq + rat(1, 4)) / radius_sq;
    let mut gap = RadicalSum::from_int(-1);
    gap.add_surd(&Surd::sqrt_of(ratio.clone()), &Rational::one());
    let margin = gap.scale(&rat(1, 2 * m as i64));
    // Choose a dyadic precision fine enough that the rounding stays below a
    // thousandth of the margin.
    let lower_gap = sqrt_lower(&ratio, 64) - Rational::one();
    let mut bits = 64u64;
    let target = lower_gap / int(2000 * m as i64);
    while Rational::one() / Rational::from_integer(num::BigInt::one() << bits) > target {
        bits += 16;
    }
    let upper_gap = sqrt_upper(&ratio, bits) - Rational::one();
    let alpha = Rational::one() + upper_gap / int(2 * m as i64) + Rational::one() / Rational::from_integer(num::BigInt::one() << bits);
    (gap, margin, alpha)
}

fn provenance(red: &PvcReduction) -> Vec<(String, String)> {
    let g = &red.graph;
    let edges = g.edges.iter().map(|(u, v)| format!("{u}-{v}")).collect::<Vec<_>>().join(",");
    vec![
        ("source".into(), red.variant.to_string()),
        ("vertices".into(), g.n_vertices.to_string()),
        ("edges".into(), edges),
        ("cover_size".into(), g.k.to_string()),
        ("coverage_target".into(), g.s.to_string()),
        ("radius_sq".into(), red.radius_sq.to_string()),
        ("gap".into(), red.gap.to_string()),
        ("stability_margin".into(), red.stability_margin.to_string()),
        ("alpha_bound".into(), red.alpha_bound.to_string()),
    ]
}

fn require_edges(g: &PvcGraph) -> Result<()> {
    if g.edges.is_empty() {
        return Err(Error::input("the reduction needs at least one edge"));
    }
    Ok(())
}

/// The `R^4` instance with penalties: centres `(v, v^2, v^3, 0)`, one data
/// point per edge, every penalty `sqrt(r_q^2 + 1/4)`.
pub fn build_pvc4_instance(g: &PvcGraph) -> Result<PvcReduction> {
    require_edges(g)?;
    let fits: Vec<SphereFit> =
        g.edges.par_iter().map(|&(u, v)| fit_sphere_3d(&int(u as i64), &int(v as i64))).collect::<Result<_>>()?;
    let radius_sq = shared_radius(&fits);
    let penalty = Surd::sqrt_of(&radius_sq + rat(1, 4));

    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, g.k);
    for v in 1..=g.n_vertices {
        let t = int(v as i64);
        let mut coords: Vec<Coord> = super::moment::curve_point(&t, 3).into_iter().map(Coord::Exact).collect();
        coords.push(Coord::Exact(Rational::zero()));
        b.centres.push(Point::centre(v, coords));
    }
    let mut penalties = BTreeMap::new();
    for (e, fit) in fits.iter().enumerate() {
        let mut coords: Vec<Coord> = fit.centre.iter().cloned().map(Coord::Exact).collect();
        coords.push(Coord::root(&radius_sq - &fit.radius_sq));
        b.points.push(Point::data(e, coords));
        penalties.insert(e, penalty.clone());
    }
    b.penalties = Some(penalties);
    let (gap, margin, alpha) = stability_constants(&radius_sq, g.m());
    let mut red = PvcReduction {
        variant: PvcVariant::Pvc4,
        graph: g.clone(),
        instance: b.build()?,
        fits,
        radius_sq,
        gap,
        stability_margin: margin,
        alpha_bound: alpha,
        sentinel_centre: None,
    };
    red.instance = red.instance.clone().with_provenance(provenance(&red));
    Ok(red)
}

/// The `R^6` instance without penalties: centres `(w, w^2, w^3, w^4, 0, 0)`
/// with `w = v + 1`, a sentinel centre at `(1, 1, 1, 1, 0, 1/2)` carrying
/// `ceil(m * r_q)` co-located data points, and one data point per edge.
/// Opens `k + 1` centres.
pub fn build_pvc6_instance(g: &PvcGraph) -> Result<PvcReduction> {
    require_edges(g)?;
    let one = int(1);
    let fits: Vec<SphereFit> = g
        .edges
        .par_iter()
        .map(|&(u, v)| fit_sphere_4d(&one, &int(u as i64 + 1), &int(v as i64 + 1)))
        .collect::<Result<_>>()?;
    let radius_sq = shared_radius(&fits);
    let m = g.m();

    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, g.k + 1);
    for v in 1..=g.n_vertices {
        let t = int(v as i64 + 1);
        let mut coords: Vec<Coord> = super::moment::curve_point(&t, 4).into_iter().map(Coord::Exact).collect();
        coords.extend([Coord::Exact(Rational::zero()), Coord::Exact(Rational::zero())]);
        b.centres.push(Point::centre(v, coords));
    }
    let sentinel_id = g.n_vertices + 1;
    let sentinel: Vec<Coord> = [one.clone(), one.clone(), one.clone(), one.clone(), Rational::zero(), rat(1, 2)]
        .into_iter()
        .map(Coord::Exact)
        .collect();
    b.centres.push(Point::centre(sentinel_id, sentinel.clone()));
    for (e, fit) in fits.iter().enumerate() {
        let mut coords: Vec<Coord> = fit.centre.iter().cloned().map(Coord::Exact).collect();
        coords.push(Coord::root(&radius_sq - &fit.radius_sq));
        coords.push(Coord::Exact(Rational::zero()));
        b.points.push(Point::data(e, coords));
    }
    // ceil(m * r_q) = ceil(sqrt(m^2 * r_q^2))
    let copies = ceil_sqrt(&(int((m * m) as i64) * &radius_sq));
    let copies: u64 = copies.try_into().map_err(|_| Error::input("sentinel multiplicity overflows u64"))?;
    b.points.push(Point::data(m, sentinel).with_multiplicity(copies));

    let (gap, margin, alpha) = stability_constants(&radius_sq, m);
    let mut red = PvcReduction {
        variant: PvcVariant::Pvc6,
        graph: g.clone(),
        instance: b.build()?,
        fits,
        radius_sq,
        gap,
        stability_margin: margin,
        alpha_bound: alpha,
        sentinel_centre: Some(sentinel_id),
    };
    red.instance = red.instance.clone().with_provenance(provenance(&red));
    Ok(red)
}

pub fn build_pvc_instance(g: &PvcGraph, variant: PvcVariant) -> Result<PvcReduction> {
    match variant {
        PvcVariant::Pvc4 => build_pvc4_instance(g),
        PvcVariant::Pvc6 => build_pvc6_instance(g),
    }
}

/// Smallest squared distance from each edge point to a vertex that is not an
/// endpoint of its edge, minus `r_q^2`. `None` for edges whose endpoints are
/// the only vertices.
pub fn separation_margins(red: &PvcReduction) -> Result<Vec<Option<Rational>>> {
    let inst = &red.instance;
    let mut out = Vec::with_capacity(red.m());
    for (e, &(u, v)) in red.graph.edges.iter().enumerate() {
        let p = &inst.points()[inst.point_index(e)?];
        let mut best: Option<Rational> = None;
        for c in inst.centres() {
            if c.id == u || c.id == v || Some(c.id) == red.sentinel_centre {
                continue;
            }
            let d = inst.metric().squared_distance(p, c)? - &red.radius_sq;
            if best.as_ref().map_or(true, |b| d < *b) {
                best = Some(d);
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Checks the cost formula on every solution that opens `k` vertex centres
/// (plus the sentinel for `Pvc6`). Returns the number of solutions checked
/// and the first mismatch as a vertex set.
pub fn check_cost_formula(red: &PvcReduction, budget: u128) -> Result<(usize, Option<Vec<usize>>)> {
    let g = &red.graph;
    let required = binomial(g.n_vertices, g.k);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let sets: Vec<Vec<usize>> = Colex::new(g.n_vertices, g.k).map(|s| s.iter().map(|&x| x + 1).collect()).collect();
    let inst = &red.instance;
    let bad = sets
        .par_iter()
        .map(|vs| -> Result<Option<Vec<usize>>> {
            let idx = inst.centre_indices(&red.solution_for(vs))?;
            let cost = exact_cost(inst.cost_table(), &idx);
            Ok((cost != red.threshold(g.coverage(vs))).then(|| vs.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sets.len(), bad.into_iter().flatten().next()))
}

/// Builds the reduction and checks it against brute force on both sides:
/// exact sphere fits, lattice separation, the cost formula on every
/// solution, the coverage-threshold equivalence for every `s` in `[0, m]`,
/// and that the clustering optima are exactly the maximum covers.
pub fn certify_pvc_equivalence(g: &PvcGraph, variant: PvcVariant, budget: u128) -> Result<ReductionCertificate> {
    let red = build_pvc_instance(g, variant)?;
    certify_pvc_reduction(&red, budget)
}

/// [`certify_pvc_equivalence`] for an already built reduction.
pub fn certify_pvc_reduction(red: &PvcReduction, budget: u128) -> Result<ReductionCertificate> {
    let g = &red.graph;
    let m = g.m();
    let cover = solve_pvc(g, budget)?;
    let optima = solve_exact(&red.instance, budget)?;
    let mut checks = Vec::new();

    let bad_fits: Vec<usize> = red.fits.iter().enumerate().filter(|(_, f)| !f.residuals_vanish()).map(|(e, _)| e).collect();
    checks.push(CertificateCheck::new("sphere_fits_exact", bad_fits.is_empty(), format!("{} fits, nonzero residuals on edges {bad_fits:?}", red.fits.len())));

    let margins = separation_margins(red)?;
    let quarter = rat(1, 4);
    let worst = margins.iter().flatten().min().cloned();
    let separated = margins.iter().flatten().all(|d| *d >= quarter);
    checks.push(CertificateCheck::new(
        "vertex_separation",
        separated,
        format!("smallest excess over r_q^2 at a non-endpoint vertex: {}", worst.map_or("none".into(), |w| w.to_string())),
    ));

    if let Some(sid) = red.sentinel_centre {
        let inst = &red.instance;
        let s = &inst.centres()[inst.centre_index(sid)?];
        let v1 = &inst.centres()[inst.centre_index(1)?];
        let d = inst.metric().squared_distance(s, v1)?;
        checks.push(CertificateCheck::new("sentinel_distance", d >= int(4), format!("squared distance from sentinel to vertex 1 is {d}")));
    }

    let (count, mismatch) = check_cost_formula(red, budget)?;
    checks.push(CertificateCheck::new(
        "cost_formula",
        mismatch.is_none(),
        match &mismatch {
            None => format!("{count} solutions match r_q * (m + (m - s) * gap)"),
            Some(vs) => format!("solution on vertices {vs:?} deviates from the formula"),
        },
    ));

    let mut failures = Vec::new();
    for s in 0..=m {
        let source = cover.admits(s);
        let clustering = optima.optimal_cost <= red.threshold(s);
        if source != clustering {
            failures.push(s);
        }
    }
    checks.push(CertificateCheck::new(
        "threshold_equivalence",
        failures.is_empty(),
        format!("best coverage {} of {m}; thresholds disagreeing at s = {failures:?}", cover.best_coverage),
    ));

    let mapped: Option<Vec<Vec<usize>>> = optima
        .solutions
        .iter()
        .map(|o| match red.sentinel_centre {
            Some(sid) if !o.contains(&sid) => None,
            _ => Some(red.vertices_of(o)),
        })
        .collect();
    let matches = mapped.as_ref() == Some(&cover.covers);
    checks.push(CertificateCheck::new(
        "optima_are_maximum_covers",
        matches,
        format!("{} clustering optima, {} maximum covers", optima.solutions.len(), cover.covers.len()),
    ));

    let mut parameters = red.instance.provenance().to_vec();
    parameters.push(("best_coverage".into(), cover.best_coverage.to_string()));
    parameters.push(("source_answer".into(), if cover.admits(g.s) { "yes" } else { "no" }.into()));
    parameters.push(("optimal_cost".into(), optima.optimal_cost.to_string()));
    parameters.push(("threshold".into(), red.threshold(g.s).to_string()));
    Ok(ReductionCertificate { source: red.variant.to_string(), parameters, checks })
}
