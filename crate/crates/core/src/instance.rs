//! Clustering instances, solutions and costs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::Zero;

use crate::cost::{evaluate, CostSource, CostTable, Evaluation};
use crate::error::{Error, Result};
use crate::exact::{RadicalSum, Rational, Surd};
use crate::metric::{validate_metric, Coord, DistanceTable, Metric, Point, Role, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Sum of squared distances.
    KMeans,
    /// Sum of distances.
    KMedian,
}

impl Objective {
    /// Exponent applied to distances in the objective.
    pub fn power(self) -> u32 {
        match self {
            Objective::KMeans => 2,
            Objective::KMedian => 1,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::KMeans => "kmeans",
            Objective::KMedian => "kmedian",
        })
    }
}

/// Everything needed to build an [`Instance`]; [`InstanceBuilder::build`]
/// validates it.
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    pub objective: Objective,
    pub points: Vec<Point>,
    pub centres: Vec<Point>,
    pub metric: Metric,
    pub penalties: Option<BTreeMap<usize, Surd>>,
    pub k: usize,
    /// Tie-breaking order on centre ids; ascending ids when absent.
    pub centre_order: Option<Vec<usize>>,
    pub provenance: Vec<(String, String)>,
}

impl InstanceBuilder {
    pub fn new(objective: Objective, metric: Metric, k: usize) -> InstanceBuilder {
        InstanceBuilder {
            objective,
            points: Vec::new(),
            centres: Vec::new(),
            metric,
            penalties: None,
            k,
            centre_order: None,
            provenance: Vec::new(),
        }
    }

    pub fn build(self) -> Result<Instance> {
        Instance::from_builder(self, true)
    }
}

/// A clustering instance: data points, candidate centres, a metric, optional
/// penalties and the number of centres to open. Immutable once built.
#[derive(Clone, Debug)]
pub struct Instance {
    objective: Objective,
    points: Vec<Point>,
    centres: Vec<Point>,
    metric: Metric,
    penalties: Option<Vec<Surd>>,
    k: usize,
    centre_order: Vec<usize>,
    provenance: Vec<(String, String)>,
    table: CostTable,
}

fn check_ids(points: &[Point], what: &str) -> Result<()> {
    for w in points.windows(2) {
        if w[0].id == w[1].id {
            return Err(Error::instance(format!("duplicate {what} id {}", w[0].id)));
        }
    }
    Ok(())
}

impl Instance {
    fn from_builder(b: InstanceBuilder, validate: bool) -> Result<Instance> {
        let InstanceBuilder { objective, mut points, mut centres, metric, penalties, k, centre_order, provenance } = b;
        if centres.is_empty() {
            return Err(Error::instance("no candidate centres"));
        }
        if k == 0 || k > centres.len() {
            return Err(Error::instance(format!("k = {k} must lie in [1, {}]", centres.len())));
        }
        for p in &mut points {
            p.role = Role::Data;
            if p.multiplicity == 0 {
                return Err(Error::instance(format!("point {} has multiplicity 0", p.id)));
            }
        }
        for c in &mut centres {
            c.role = Role::Centre;
        }
        points.sort_by_key(|p| p.id);
        centres.sort_by_key(|c| c.id);
        check_ids(&points, "point")?;
        check_ids(&centres, "centre")?;
        let dim = centres[0].dim();
        for p in points.iter().chain(&centres) {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        if matches!(metric, Metric::CylinderMax) && dim != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: dim });
        }

        let penalties = match penalties {
            None => None,
            Some(map) => {
                let mut out = Vec::with_capacity(points.len());
                for p in &points {
                    let pen = map.get(&p.id).ok_or_else(|| Error::instance(format!("no penalty for point {}", p.id)))?;
                    if pen.is_zero() {
                        return Err(Error::instance(format!("penalty of point {} must be positive", p.id)));
                    }
                    if objective == Objective::KMeans && pen.as_rational().is_none() {
                        return Err(Error::instance(format!("k-means penalty of point {} must be rational", p.id)));
                    }
                    out.push(pen.clone());
                }
                if map.len() != points.len() {
                    return Err(Error::instance("penalty given for an unknown point"));
                }
                Some(out)
            }
        };

        let centre_order = match centre_order {
            None => centres.iter().map(|c| c.id).collect(),
            Some(order) => {
                let given: BTreeSet<usize> = order.iter().copied().collect();
                let ids: BTreeSet<usize> = centres.iter().map(|c| c.id).collect();
                if given != ids || order.len() != ids.len() {
                    return Err(Error::instance("centre order is not a permutation of the centre ids"));
                }
                order
            }
        };

        if validate {
            if let Metric::Explicit(t) = &metric {
                if !t.non_metric {
                    let mut all = points.clone();
                    all.extend(centres.iter().cloned());
                    let report = validate_metric(&metric, &all);
                    if let Some(v) = report.violations.iter().find(|v| !matches!(v, Violation::Unevaluable(..))) {
                        return Err(Error::instance(format!("explicit metric violates an axiom: {v:?}")));
                    }
                }
            }
        }

        let power = objective.power();
        let mut units = Vec::with_capacity(points.len() * centres.len());
        for p in &points {
            for c in &centres {
                units.push(metric.distance(p, c)?.powi(power));
            }
        }
        let mut rank = vec![0; centres.len()];
        for (pos, id) in centre_order.iter().enumerate() {
            let idx = centres.binary_search_by_key(id, |c| c.id).expect("validated order");
            rank[idx] = pos;
        }
        let table = CostTable::new(
            points.len(),
            centres.len(),
            units,
            penalties.clone(),
            points.iter().map(|p| p.multiplicity).collect(),
            rank,
        );
        Ok(Instance { objective, points, centres, metric, penalties, k, centre_order, provenance, table })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn power(&self) -> u32 {
        self.objective.power()
    }

    /// Data points sorted by id.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Candidate centres sorted by id.
    pub fn centres(&self) -> &[Point] {
        &self.centres
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dimension(&self) -> usize {
        self.centres[0].dim()
    }

    pub fn centre_order(&self) -> &[usize] {
        &self.centre_order
    }

    pub fn provenance(&self) -> &[(String, String)] {
        &self.provenance
    }

    pub fn has_penalties(&self) -> bool {
        self.penalties.is_some()
    }

    /// Penalty of the point at index `j`.
    pub fn penalty_at(&self, j: usize) -> Option<&Surd> {
        self.penalties.as_ref().map(|p| &p[j])
    }

    /// Penalties keyed by point id.
    pub fn penalties(&self) -> Option<BTreeMap<usize, Surd>> {
        self.penalties.as_ref().map(|p| self.points.iter().map(|x| x.id).zip(p.iter().cloned()).collect())
    }

    pub fn cost_table(&self) -> &CostTable {
        &self.table
    }

    /// Total number of data points counting multiplicity.
    pub fn total_multiplicity(&self) -> u64 {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn point_index(&self, id: usize) -> Result<usize> {
        self.points.binary_search_by_key(&id, |p| p.id).map_err(|_| Error::input(format!("unknown point id {id}")))
    }

    pub fn centre_index(&self, id: usize) -> Result<usize> {
        self.centres.binary_search_by_key(&id, |c| c.id).map_err(|_| Error::input(format!("unknown centre id {id}")))
    }

    /// Sorted centre indices of a set of centre ids.
    pub fn centre_indices(&self, ids: &[usize]) -> Result<Vec<usize>> {
        let mut idx = ids.iter().map(|&id| self.centre_index(id)).collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        let before = idx.len();
        idx.dedup();
        if idx.len() != before {
            return Err(Error::input("repeated centre id"));
        }
        Ok(idx)
    }

    /// Sorted centre ids of a set of centre indices.
    pub fn centre_ids(&self, idx: &[usize]) -> Vec<usize> {
        let mut ids: Vec<usize> = idx.iter().map(|&i| self.centres[i].id).collect();
        ids.sort_unstable();
        ids
    }

    /// The same instance with a different number of centres to open.
    pub fn with_k(&self, k: usize) -> Result<Instance> {
        if k == 0 || k > self.centres.len() {
            return Err(Error::instance(format!("k = {k} must lie in [1, {}]", self.centres.len())));
        }
        let mut out = self.clone();
        out.k = k;
        Ok(out)
    }

    /// The same instance with a different tie-breaking order.
    pub fn with_centre_order(&self, order: Vec<usize>) -> Result<Instance> {
        let mut b = self.to_builder();
        b.centre_order = Some(order);
        Instance::from_builder(b, false)
    }

    /// The same instance with extra provenance entries appended.
    pub fn with_provenance(mut self, entries: impl IntoIterator<Item = (String, String)>) -> Instance {
        self.provenance.extend(entries);
        self
    }

    pub fn to_builder(&self) -> InstanceBuilder {
        InstanceBuilder {
            objective: self.objective,
            points: self.points.clone(),
            centres: self.centres.clone(),
            metric: self.metric.clone(),
            penalties: self.penalties(),
            k: self.k,
            centre_order: Some(self.centre_order.clone()),
            provenance: self.provenance.clone(),
        }
    }

    /// Builds without re-validating the explicit metric. Used for derived
    /// instances whose tables are not metrics by design.
    pub(crate) fn build_unchecked(b: InstanceBuilder) -> Result<Instance> {
        Instance::from_builder(b, false)
    }

    /// Nearest centre of `s` to the point with id `point`, ties broken by the
    /// centre order.
    pub fn nearest_centre(&self, point: usize, s: &[usize]) -> Result<usize> {
        if s.is_empty() {
            return Err(Error::input("nearest centre of an empty set"));
        }
        let j = self.point_index(point)?;
        let idx = self.centre_indices(s)?;
        let (i, _) = crate::cost::nearest(&self.table, j, &idx);
        Ok(self.centres[i].id)
    }

    /// Builds the full solution for the centre ids `s`, which must have size k.
    pub fn solution_cost(&self, s: &[usize]) -> Result<Solution> {
        if s.len() != self.k {
            return Err(Error::input(format!("solution has {} centres, expected {}", s.len(), self.k)));
        }
        let idx = self.centre_indices(s)?;
        Ok(self.solution_from_indices(&idx))
    }

    /// Solution for sorted centre indices (no size check).
    pub fn solution_from_indices(&self, idx: &[usize]) -> Solution {
        let ev = evaluate(&self.table, idx);
        Solution::from_evaluation(self, idx, &ev)
    }

    /// Lifts a penalty instance to one without penalties; see
    /// [`AugmentedInstance`].
    pub fn lift_penalties(&self) -> Result<AugmentedInstance> {
        AugmentedInstance::new(self.clone())
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.objective == other.objective
            && self.points == other.points
            && self.centres == other.centres
            && self.metric == other.metric
            && self.penalties == other.penalties
            && self.k == other.k
            && self.centre_order == other.centre_order
            && self.provenance == other.provenance
    }
}

/// Where a data point is served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Assignment {
    Centre(usize),
    Penalty,
}

/// A feasible solution with its assignment and costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Open centre ids, ascending.
    pub centres: Vec<usize>,
    pub assignment: BTreeMap<usize, Assignment>,
    /// Cost of one copy of each point.
    pub per_point_cost: BTreeMap<usize, Surd>,
    /// Total cost, counting multiplicities.
    pub cost: RadicalSum,
}

impl Solution {
    fn from_evaluation(inst: &Instance, idx: &[usize], ev: &Evaluation) -> Solution {
        let mut assignment = BTreeMap::new();
        let mut per_point_cost = BTreeMap::new();
        for (j, p) in inst.points.iter().enumerate() {
            let a = if ev.penalised[j] { Assignment::Penalty } else { Assignment::Centre(inst.centres[ev.nearest[j]].id) };
            assignment.insert(p.id, a);
            per_point_cost.insert(p.id, ev.point_cost(&inst.table, j));
        }
        Solution { centres: inst.centre_ids(idx), assignment, per_point_cost, cost: ev.cost.clone() }
    }
}

/// Anything the search and the oracle can run on: an instance plus a set of
/// centres that every solution must contain.
pub trait ClusteringProblem: Sync {
    fn instance(&self) -> &Instance;
    /// Centre ids that must stay open.
    fn pinned(&self) -> Vec<usize> {
        Vec::new()
    }
}

impl ClusteringProblem for Instance {
    fn instance(&self) -> &Instance {
        self
    }
}

/// A penalty instance rewritten as an instance without penalties.
///
/// One extra centre (the dummy) is added. Its unit cost to each data point
/// equals that point's penalty and its distance to every original centre is
/// zero. The lifted instance opens `k + 1` centres with the dummy pinned, so
/// its solutions are in one-to-one correspondence with the base solutions and
/// have equal cost. The lifted table does not satisfy the triangle inequality.
#[derive(Clone, Debug)]
pub struct AugmentedInstance {
    pub base: Instance,
    pub dummy_id: usize,
    pub lifted: Instance,
}

impl AugmentedInstance {
    pub fn new(base: Instance) -> Result<AugmentedInstance> {
        let Some(pens) = base.penalties.clone() else {
            return Err(Error::instance("lifting needs an instance with penalties"));
        };
        let dummy_id = base.centres.last().map(|c| c.id + 1).unwrap_or(0);
        let dummy = Point { id: dummy_id, role: Role::Centre, multiplicity: 1, coords: vec![Coord::Exact(Rational::zero()); base.dimension()] };
        let dummy_site = dummy.site();

        let mut table = DistanceTable::new();
        table.non_metric = true;
        for (j, p) in base.points.iter().enumerate() {
            for c in &base.centres {
                table.insert(p.site(), c.site(), base.metric.distance(p, c)?);
            }
            let d = match base.objective {
                Objective::KMedian => pens[j].clone(),
                Objective::KMeans => Surd::sqrt_of(pens[j].as_rational().expect("validated rational").clone()),
            };
            table.insert(p.site(), dummy_site, d);
        }
        for (x, a) in base.centres.iter().enumerate() {
            table.insert(a.site(), dummy_site, Surd::zero());
            for b in &base.centres[x + 1..] {
                if let Ok(d) = base.metric.distance(a, b) {
                    table.insert(a.site(), b.site(), d);
                }
            }
        }

        let mut centres = base.centres.clone();
        centres.push(dummy);
        let mut order = base.centre_order.clone();
        order.push(dummy_id);
        let mut provenance = base.provenance.clone();
        provenance.push(("lifted_dummy_centre".into(), dummy_id.to_string()));
        let lifted = Instance::build_unchecked(InstanceBuilder {
            objective: base.objective,
            points: base.points.clone(),
            centres,
            metric: Metric::Explicit(table),
            penalties: None,
            k: base.k + 1,
            centre_order: Some(order),
            provenance,
        })?;
        Ok(AugmentedInstance { base, dummy_id, lifted })
    }

    /// Drops the dummy from a lifted solution's centre ids.
    pub fn restrict(&self, ids: &[usize]) -> Vec<usize> {
        ids.iter().copied().filter(|&i| i != self.dummy_id).collect()
    }

    /// Adds the dummy to a base solution's centre ids.
    pub fn extend(&self, ids: &[usize]) -> Vec<usize> {
        let mut out = ids.to_vec();
        out.push(self.dummy_id);
        out.sort_unstable();
        out
    }
}

impl ClusteringProblem for AugmentedInstance {
    fn instance(&self) -> &Instance {
        &self.lifted
    }

    fn pinned(&self) -> Vec<usize> {
        vec![self.dummy_id]
    }
}

/// Per-point data shared by the crossing-cost potentials and the partition.
struct PairView {
    s_near: Vec<usize>,
    o_near: Vec<usize>,
    s_unit: Vec<Surd>,
    o_unit: Vec<Surd>,
    s_set: BTreeSet<usize>,
    o_set: BTreeSet<usize>,
}

fn pair_view(inst: &Instance, s: &[usize], o: &[usize]) -> Result<PairView> {
    if s.is_empty() || o.is_empty() {
        return Err(Error::input("solutions must be nonempty"));
    }
    let si = inst.centre_indices(s)?;
    let oi = inst.centre_indices(o)?;
    let t = &inst.table;
    let mut v = PairView {
        s_near: Vec::new(),
        o_near: Vec::new(),
        s_unit: Vec::new(),
        o_unit: Vec::new(),
        s_set: si.iter().copied().collect(),
        o_set: oi.iter().copied().collect(),
    };
    for j in 0..t.n_points() {
        let (a, ua) = crate::cost::nearest(t, j, &si);
        let (b, ub) = crate::cost::nearest(t, j, &oi);
        v.s_near.push(a);
        v.o_near.push(b);
        v.s_unit.push(ua);
        v.o_unit.push(ub);
    }
    Ok(v)
}

impl PairView {
    /// Nearest centre in S is not in O and nearest centre in O is not in S.
    fn crossing(&self, j: usize) -> bool {
        !self.o_set.contains(&self.s_near[j]) && !self.s_set.contains(&self.o_near[j])
    }
}

/// Data points whose nearest centre in `s` lies outside `o` and whose nearest
/// centre in `o` lies outside `s`.
pub fn crossing_points(inst: &Instance, s: &[usize], o: &[usize]) -> Result<Vec<usize>> {
    let v = pair_view(inst, s, o)?;
    Ok((0..inst.points.len()).filter(|&j| v.crossing(j)).map(|j| inst.points[j].id).collect())
}

/// Sum over crossing points of the unit costs to the nearest centre in `s`
/// and in `o`, penalties ignored.
pub fn crossing_cost(inst: &Instance, s: &[usize], o: &[usize]) -> Result<RadicalSum> {
    let v = pair_view(inst, s, o)?;
    let mut sum = RadicalSum::zero();
    for j in 0..inst.points.len() {
        if v.crossing(j) {
            let m = inst.points[j].multiplicity;
            sum.add_surd_times(&v.s_unit[j], m);
            sum.add_surd_times(&v.o_unit[j], m);
        }
    }
    Ok(sum)
}

/// Penalty version of [`crossing_cost`]: only crossing points that pay a unit
/// cost strictly below their penalty in both solutions count.
pub fn crossing_cost_pen(inst: &Instance, s: &[usize], o: &[usize]) -> Result<RadicalSum> {
    let Some(pens) = &inst.penalties else {
        return Err(Error::instance("penalty crossing cost needs penalties"));
    };
    let v = pair_view(inst, s, o)?;
    let mut sum = RadicalSum::zero();
    for (j, p) in pens.iter().enumerate() {
        if v.crossing(j) && v.s_unit[j] < *p && v.o_unit[j] < *p {
            let m = inst.points[j].multiplicity;
            sum.add_surd_times(&v.s_unit[j], m);
            sum.add_surd_times(&v.o_unit[j], m);
        }
    }
    Ok(sum)
}

/// The crossing cost matching the instance's objective: the penalty version
/// when the instance has penalties.
pub fn crossing_cost_auto(inst: &Instance, s: &[usize], o: &[usize]) -> Result<RadicalSum> {
    if inst.has_penalties() {
        crossing_cost_pen(inst, s, o)
    } else {
        crossing_cost(inst, s, o)
    }
}

/// Partition of the data points for a pair of solutions `(s, o)` of a
/// penalty instance. Point ids in each part are ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointPartition {
    /// Served by a centre only in `s`, which is cheaper than the penalty,
    /// while `o` serves it from a shared centre or lets it pay its penalty
    /// where `s` does not.
    pub leaving: Vec<usize>,
    /// Served in `o` by a centre only in `o` cheaper than the penalty, while
    /// `s` serves it from a shared centre or lets it pay its penalty where
    /// `o` does not.
    pub joining: Vec<usize>,
    /// Both nearest centres are shared, or both solutions pay the penalty.
    pub unchanged: Vec<usize>,
    /// Crossing points served below the penalty in both solutions.
    pub crossing: Vec<usize>,
}

/// Splits the data points of a penalty instance into the four parts of
/// [`PointPartition`].
///
/// The four defining conditions taken literally miss two mixed cases, where
/// both nearest centres are unshared but exactly one of the two unit costs is
/// below the penalty. Points whose `s` cost is below the penalty go to
/// `leaving`, the others to `joining`. This keeps the perturbed-cost identity
/// exact (see the tests).
pub fn partition_points(inst: &Instance, s: &[usize], o: &[usize]) -> Result<PointPartition> {
    let Some(pens) = &inst.penalties else {
        return Err(Error::instance("partition needs penalties"));
    };
    let v = pair_view(inst, s, o)?;
    let mut out = PointPartition::default();
    for (j, p) in pens.iter().enumerate() {
        let id = inst.points[j].id;
        let s_shared = v.o_set.contains(&v.s_near[j]);
        let o_shared = v.s_set.contains(&v.o_near[j]);
        let s_below = v.s_unit[j] < *p;
        let o_below = v.o_unit[j] < *p;
        let part = if (s_shared && o_shared) || (!s_below && !o_below) {
            &mut out.unchanged
        } else if !s_shared && !o_shared {
            match (s_below, o_below) {
                (true, true) => &mut out.crossing,
                (true, false) => &mut out.leaving,
                _ => &mut out.joining,
            }
        } else if !s_shared {
            // o's nearest centre is shared, so o's cost is at least s's.
            &mut out.leaving
        } else {
            &mut out.joining
        };
        part.push(id);
    }
    Ok(out)
}

/// Unit cost of the nearest centre, or the penalty if smaller. Exposed for
/// tests and reports.
pub fn point_cost(inst: &Instance, point: usize, s: &[usize]) -> Result<Surd> {
    let j = inst.point_index(point)?;
    let idx = inst.centre_indices(s)?;
    let (_, u) = crate::cost::nearest(&inst.table, j, &idx);
    Ok(match inst.penalty_at(j) {
        Some(p) if *p < u => p.clone(),
        _ => u,
    })
}

/// Checks the stated solution invariants; used by tests and the CLI.
pub fn check_solution(inst: &Instance, sol: &Solution) -> std::result::Result<(), String> {
    if sol.centres.len() != inst.k {
        return Err("wrong number of centres".into());
    }
    let mut total = RadicalSum::zero();
    for (j, p) in inst.points.iter().enumerate() {
        let c = sol.per_point_cost.get(&p.id).ok_or("missing point cost")?;
        match sol.assignment.get(&p.id).ok_or("missing assignment")? {
            Assignment::Penalty => {
                let pen = inst.penalty_at(j).ok_or("penalty without penalties")?;
                if c != pen {
                    return Err(format!("point {} pays {c} but its penalty is {pen}", p.id));
                }
                for &i in &sol.centres {
                    let u = inst.metric.distance(p, &inst.centres[inst.centre_index(i).unwrap()]).unwrap().powi(inst.power());
                    if u <= *pen {
                        return Err(format!("point {} pays a penalty above its distance cost", p.id));
                    }
                }
            }
            Assignment::Centre(i) => {
                if !sol.centres.contains(i) {
                    return Err(format!("point {} assigned to a closed centre", p.id));
                }
                let u = inst.metric.distance(p, &inst.centres[inst.centre_index(*i).unwrap()]).unwrap().powi(inst.power());
                if &u != c {
                    return Err(format!("point {} cost mismatch", p.id));
                }
            }
        }
        total.add_surd_times(c, p.multiplicity);
    }
    if total != sol.cost {
        return Err("total cost mismatch".into());
    }
    Ok(())
}
