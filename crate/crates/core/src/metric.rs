//! Points and distance functions.
//!
//! Three metrics are supported: Euclidean distance in `R^d`, an explicit
//! table of point-to-centre (and centre-to-centre) distances, and the
//! cylinder metric `max(|planar difference|, |height difference|)` on `R^3`.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{rational_sqrt, RadicalSum, Rational, Surd};

/// Whether a point is a data point or a candidate centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Data,
    Centre,
}

/// A point identified by role and id. Data ids and centre ids live in
/// separate namespaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub role: Role,
    pub id: usize,
}

impl Site {
    pub fn data(id: usize) -> Site {
        Site { role: Role::Data, id }
    }

    pub fn centre(id: usize) -> Site {
        Site { role: Role::Centre, id }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::Data => write!(f, "p{}", self.id),
            Role::Centre => write!(f, "c{}", self.id),
        }
    }
}

/// One coordinate: a rational, or the positive square root of a rational.
///
/// Root coordinates appear when a point is lifted off a subspace so that it
/// sits at a prescribed distance from a set of points lying in that subspace.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    Exact(Rational),
    Root(Rational),
}

impl Coord {
    /// `+sqrt(square)`, stored exactly when `square` is a perfect square.
    pub fn root(square: Rational) -> Coord {
        assert!(!square.is_negative(), "root coordinate of a negative value");
        match rational_sqrt(&square) {
            Some(r) => Coord::Exact(r),
            None => Coord::Root(square),
        }
    }

    pub fn square(&self) -> Rational {
        match self {
            Coord::Exact(q) => q * q,
            Coord::Root(h) => h.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coord::Exact(q) => crate::exact::to_f64(q),
            Coord::Root(h) => crate::exact::to_f64(h).sqrt(),
        }
    }
}

impl From<Rational> for Coord {
    fn from(q: Rational) -> Self {
        Coord::Exact(q)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Exact(q) => write!(f, "{q}"),
            Coord::Root(h) => write!(f, "sqrt({h})"),
        }
    }
}

/// `(u - v)^2` as a rational, or `None` if it is irrational.
fn squared_difference(u: &Coord, v: &Coord) -> Option<Rational> {
    match (u, v) {
        (Coord::Exact(a), Coord::Exact(b)) => {
            let d = a - b;
            Some(&d * &d)
        }
        (Coord::Root(h), Coord::Exact(q)) | (Coord::Exact(q), Coord::Root(h)) => {
            if q.is_zero() {
                Some(h.clone())
            } else {
                None
            }
        }
        (Coord::Root(h1), Coord::Root(h2)) => {
            let cross = rational_sqrt(&(h1 * h2))?;
            Some(h1 + h2 - cross * Rational::from_integer(2.into()))
        }
    }
}

/// A point of an instance. `multiplicity` counts co-located copies and is
/// only meaningful for data points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub id: usize,
    pub role: Role,
    pub multiplicity: u64,
    pub coords: Vec<Coord>,
}

impl Point {
    pub fn data(id: usize, coords: Vec<Coord>) -> Point {
        Point { id, role: Role::Data, multiplicity: 1, coords }
    }

    pub fn centre(id: usize, coords: Vec<Coord>) -> Point {
        Point { id, role: Role::Centre, multiplicity: 1, coords }
    }

    /// Convenience constructor from rational coordinates.
    pub fn at(role: Role, id: usize, coords: &[Rational]) -> Point {
        Point { id, role, multiplicity: 1, coords: coords.iter().cloned().map(Coord::Exact).collect() }
    }

    pub fn with_multiplicity(mut self, m: u64) -> Point {
        self.multiplicity = m;
        self
    }

    pub fn site(&self) -> Site {
        Site { role: self.role, id: self.id }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Distance table for the explicit metric, keyed on unordered site pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DistanceTable {
    entries: BTreeMap<(Site, Site), Surd>,
    /// Set for tables that are not expected to be metrics, such as lifted or
    /// perturbed instances. Validation then skips the triangle inequality.
    pub non_metric: bool,
}

impl DistanceTable {
    pub fn new() -> DistanceTable {
        DistanceTable::default()
    }

    fn key(a: Site, b: Site) -> (Site, Site) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Sets `d(a, b) = d(b, a) = value`. Entries with `a == b` are ignored
    /// because the distance from a site to itself is always zero.
    pub fn insert(&mut self, a: Site, b: Site, value: Surd) {
        if a != b {
            self.entries.insert(Self::key(a, b), value);
        }
    }

    pub fn get(&self, a: Site, b: Site) -> Option<&Surd> {
        self.entries.get(&Self::key(a, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries with the smaller site first, in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (&(Site, Site), &Surd)> {
        self.entries.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Euclidean,
    Explicit,
    CylinderMax,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Explicit => "explicit",
            MetricKind::CylinderMax => "cylinder_max",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Explicit(DistanceTable),
    /// `max(||(x1, x2) - (y1, y2)||, |x3 - y3|)` on `R^3`.
    CylinderMax,
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::Explicit(_) => MetricKind::Explicit,
            Metric::CylinderMax => MetricKind::CylinderMax,
        }
    }

    /// Distance between two points, exact.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<Surd> {
        match self {
            Metric::Explicit(table) => {
                if a.site() == b.site() {
                    return Ok(Surd::zero());
                }
                table.get(a.site(), b.site()).cloned().ok_or(Error::MissingDistance(a.site(), b.site()))
            }
            _ => Ok(Surd::sqrt_of(self.squared_distance(a, b)?)),
        }
    }

    /// Squared distance between two points. For the explicit metric this is
    /// the square of the stored entry.
    pub fn squared_distance(&self, a: &Point, b: &Point) -> Result<Rational> {
        match self {
            Metric::Explicit(_) => Ok(self.distance(a, b)?.square().clone()),
            Metric::Euclidean => {
                check_dims(a, b, None)?;
                let mut sum = Rational::zero();
                for (u, v) in a.coords.iter().zip(&b.coords) {
                    sum += squared_difference(u, v).ok_or(Error::Inexact(a.site(), b.site()))?;
                }
                Ok(sum)
            }
            Metric::CylinderMax => {
                check_dims(a, b, Some(3))?;
                let inexact = || Error::Inexact(a.site(), b.site());
                let planar = squared_difference(&a.coords[0], &b.coords[0]).ok_or_else(inexact)?
                    + squared_difference(&a.coords[1], &b.coords[1]).ok_or_else(inexact)?;
                let height = squared_difference(&a.coords[2], &b.coords[2]).ok_or_else(inexact)?;
                Ok(if planar >= height { planar } else { height })
            }
        }
    }
}

fn check_dims(a: &Point, b: &Point, required: Option<usize>) -> Result<()> {
    let expected = required.unwrap_or(a.dim());
    if a.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: a.dim() });
    }
    if b.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: b.dim() });
    }
    Ok(())
}

/// A broken metric axiom found by [`validate_metric`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// `d(a, a) != 0`.
    Identity(Site),
    /// `d(a, b) != d(b, a)`.
    Symmetry(Site, Site),
    /// `d(a, c) > d(a, b) + d(b, c)`.
    Triangle { a: Site, b: Site, c: Site },
    /// The distance could not be evaluated.
    Unevaluable(Site, Site, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// True when the triangle check was skipped because of the size gate or
    /// because the table is flagged as non-metric.
    pub triangle_skipped: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Point count above which [`validate_metric`] skips the cubic triangle check
/// unless forced through [`validate_metric_with`].
pub const TRIANGLE_CHECK_LIMIT: usize = 200;

/// Checks identity, symmetry and the triangle inequality over `points`.
pub fn validate_metric(m: &Metric, points: &[Point]) -> ValidationReport {
    validate_metric_with(m, points, points.len() <= TRIANGLE_CHECK_LIMIT)
}

pub fn validate_metric_with(m: &Metric, points: &[Point], check_triangle: bool) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = points.len();
    // Pairwise distances; None where the pair cannot be evaluated (for
    // explicit tables, a missing entry just means the pair is unconstrained).
    let mut dist: Vec<Vec<Option<Surd>>> = vec![vec![None; n]; n];
    for (x, a) in points.iter().enumerate() {
        match m.distance(a, a) {
            Ok(d) if d.is_zero() => dist[x][x] = Some(d),
            Ok(_) => report.violations.push(Violation::Identity(a.site())),
            Err(e) => report.violations.push(Violation::Unevaluable(a.site(), a.site(), e.to_string())),
        }
        for (y, b) in points.iter().enumerate().skip(x + 1) {
            let ab = m.distance(a, b);
            let ba = m.distance(b, a);
            match (ab, ba) {
                (Ok(d1), Ok(d2)) => {
                    if d1 != d2 {
                        report.violations.push(Violation::Symmetry(a.site(), b.site()));
                    }
                    dist[x][y] = Some(d1);
                    dist[y][x] = Some(d2);
                }
                (Err(Error::MissingDistance(..)), _) | (_, Err(Error::MissingDistance(..))) => {}
                (Err(e), _) | (_, Err(e)) => {
                    report.violations.push(Violation::Unevaluable(a.site(), b.site(), e.to_string()))
                }
            }
        }
    }
    let non_metric = matches!(m, Metric::Explicit(t) if t.non_metric);
    if !check_triangle || non_metric {
        report.triangle_skipped = true;
        return report;
    }
    for x in 0..n {
        for z in (x + 1)..n {
            let Some(xz) = &dist[x][z] else { continue };
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let (Some(xy), Some(yz)) = (&dist[x][y], &dist[y][z]) else { continue };
                if !triangle_holds(xz, xy, yz) {
                    report.violations.push(Violation::Triangle {
                        a: points[x].site(),
                        b: points[y].site(),
                        c: points[z].site(),
                    });
                }
            }
        }
    }
    report
}

/// `long <= s1 + s2`, exactly.
fn triangle_holds(long: &Surd, s1: &Surd, s2: &Surd) -> bool {
    if long <= s1 || long <= s2 {
        return true;
    }
    let mut diff = RadicalSum::from_surd(s1);
    diff.add_surd(s2, &Rational::one());
    diff.add_surd(long, &-Rational::one());
    !diff.is_negative()
}

/// Checks on a finite sample that every sample point within distance `r` of
/// `centre` is within `r / 2` of some candidate. This is a witness check over
/// the sample, not a proof that the ball is covered.
pub fn doubling_ball_cover_check(m: &Metric, centre: &Point, r: &Rational, candidates: &[Point], sample: &[Point]) -> bool {
    uncovered_sample_point(m, centre, r, candidates, sample).is_none()
}

/// The first sample point inside the ball that no candidate covers.
pub fn uncovered_sample_point<'a>(
    m: &Metric,
    centre: &Point,
    r: &Rational,
    candidates: &[Point],
    sample: &'a [Point],
) -> Option<&'a Point> {
    let r2 = r * r;
    let half2 = &r2 / Rational::from_integer(4.into());
    sample.iter().find(|s| {
        let inside = matches!(m.squared_distance(centre, s), Ok(d) if d <= r2);
        inside && !candidates.iter().any(|c| matches!(m.squared_distance(c, s), Ok(d) if d <= half2))
    })
}
