//! Spheres fitted to the moment curve `t -> (t, t^2, ..., t^d)`.
//!
//! A fit is described by the parameters where the sphere meets the curve
//! (`through`) and the parameters where it is tangent to it (`tangent`). Both
//! conditions are linear in the centre, so every fit can be recomputed by
//! exact Gaussian elimination; the closed forms below are a second route used
//! by the reductions and cross-checked against the linear solve in tests.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, rat, Rational};

/// A sphere in `R^dim` centred at `centre` with squared radius `radius_sq`,
/// meeting the moment curve at `through` and tangent to it at `tangent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereFit {
    pub dim: usize,
    pub through: Vec<Rational>,
    pub tangent: Vec<Rational>,
    pub centre: Vec<Rational>,
    pub radius_sq: Rational,
}

/// `(t, t^2, ..., t^dim)`.
pub fn curve_point(t: &Rational, dim: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(dim);
    let mut p = t.clone();
    for _ in 0..dim {
        out.push(p.clone());
        p = &p * t;
    }
    out
}

/// Squared distance from the curve point at `t` to `centre`.
pub fn curve_distance_sq(centre: &[Rational], t: &Rational) -> Rational {
    curve_point(t, centre.len()).iter().zip(centre).map(|(x, c)| (x - c) * (x - c)).fold(Rational::zero(), |a, b| a + b)
}

/// Derivative in `t` of [`curve_distance_sq`].
pub fn curve_distance_sq_slope(centre: &[Rational], t: &Rational) -> Rational {
    let pts = curve_point(t, centre.len());
    let mut sum = Rational::zero();
    let mut tp = Rational::one();
    for (k, (x, c)) in pts.iter().zip(centre).enumerate() {
        // d/dt (t^(k+1) - c)^2 = 2 (k+1) t^k (t^(k+1) - c)
        sum += int(2 * (k as i64 + 1)) * &tp * (x - c);
        tp = &tp * t;
    }
    sum
}

impl SphereFit {
    /// Every contact parameter, ascending.
    pub fn t_values(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.through.iter().chain(&self.tangent).cloned().collect();
        v.sort();
        v
    }

    /// `|gamma(t) - centre|^2 - radius^2`: zero on the sphere, positive outside.
    pub fn gap(&self, t: &Rational) -> Rational {
        curve_distance_sq(&self.centre, t) - &self.radius_sq
    }

    pub fn slope(&self, t: &Rational) -> Rational {
        curve_distance_sq_slope(&self.centre, t)
    }

    /// The defining system evaluated at the fit: the gap at every contact
    /// parameter, then the slope at every tangent parameter. All entries are
    /// zero for a correct fit.
    pub fn residuals(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self.through.iter().chain(&self.tangent).map(|t| self.gap(t)).collect();
        out.extend(self.tangent.iter().map(|t| self.slope(t)));
        out
    }

    pub fn residuals_vanish(&self) -> bool {
        self.residuals().iter().all(Zero::is_zero)
    }

    /// True if `t` is one of the contact parameters.
    pub fn is_contact(&self, t: &Rational) -> bool {
        self.through.contains(t) || self.tangent.contains(t)
    }
}

fn ordered_positive(ts: &[&Rational]) -> Result<()> {
    if ts.iter().any(|t| !t.is_positive()) {
        return Err(Error::input("moment-curve parameters must be positive"));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("moment-curve parameters must be strictly increasing"));
    }
    Ok(())
}

/// The sphere in `R^3` tangent to the moment curve at `t1 < t2`, from its
/// closed form.
pub fn fit_sphere_3d(t1: &Rational, t2: &Rational) -> Result<SphereFit> {
    ordered_positive(&[t1, t2])?;
    let (i, j) = (t1, t2);
    let i2 = i * i;
    let j2 = j * j;
    let ij = i * j;
    let one = Rational::one();
    let a = &ij * (i + j) * (int(3) * &i2 + int(3) * &ij + int(3) * &j2 + &one);
    let b = -(int(3) * &i2 * &i2
        + int(12) * &i2 * &ij
        + int(15) * &i2 * &j2
        + &i2
        + int(12) * &ij * &j2
        + int(4) * &ij
        + int(3) * &j2 * &j2
        + &j2
        - &one)
        * rat(1, 2);
    let c = (i + j) * (int(2) * &i2 + &ij + int(2) * &j2 + &one);
    let centre = vec![a, b, c];
    let radius_sq = curve_distance_sq(&centre, i);
    Ok(SphereFit { dim: 3, through: Vec::new(), tangent: vec![i.clone(), j.clone()], centre, radius_sq })
}

/// The sphere in `R^4` through the moment curve at `t0` and tangent to it at
/// `t1 < t2`. Uses the closed form when `t0 = 1`, the linear solve otherwise.
pub fn fit_sphere_4d(t0: &Rational, t1: &Rational, t2: &Rational) -> Result<SphereFit> {
    ordered_positive(&[t0, t1, t2])?;
    if !t0.is_one() {
        return solve_sphere(4, std::slice::from_ref(t0), &[t1.clone(), t2.clone()]);
    }
    let (i, j) = (t1, t2);
    let p = |a: &Rational, e: usize| num::pow(a.clone(), e);
    let n = |v: i64| int(v);
    let (i2, i3, i4, i5) = (p(i, 2), p(i, 3), p(i, 4), p(i, 5));
    let (j2, j3, j4, j5) = (p(j, 2), p(j, 3), p(j, 4), p(j, 5));

    let a = -(i * j)
        * (i + j)
        * (n(2) * &i3 * j + n(4) * &i3 + &i2 * &j2 + n(6) * &i2 * j + n(3) * &i2 + n(2) * i * &j3 + n(6) * i * &j2
            + n(5) * i * j
            + n(4) * i
            + n(4) * &j3
            + n(3) * &j2
            + n(4) * j
            + n(2));
    let b = (n(8) * &i5 * j
        + n(4) * &i5
        + n(17) * &i4 * &j2
        + n(22) * &i4 * j
        + n(3) * &i4
        + n(20) * &i3 * &j3
        + n(34) * &i3 * &j2
        + n(20) * &i3 * j
        + n(4) * &i3
        + n(17) * &i2 * &j4
        + n(34) * &i2 * &j3
        + n(29) * &i2 * &j2
        + n(20) * &i2 * j
        + n(2) * &i2
        + n(8) * i * &j5
        + n(22) * i * &j4
        + n(20) * i * &j3
        + n(20) * i * &j2
        + n(8) * i * j
        + n(4) * &j5
        + n(3) * &j4
        + n(4) * &j3
        + n(2) * &j2
        + n(1))
        * rat(1, 2);
    let c = -(i + j)
        * (n(2) * &i4 + n(6) * &i3 * j + n(4) * &i3 + n(5) * &i2 * &j2 + n(6) * &i2 * j + n(4) * &i2
            + n(6) * i * &j3
            + n(6) * i * &j2
            + n(7) * i * j
            + n(4) * i
            + n(2) * &j4
            + n(4) * &j3
            + n(4) * &j2
            + n(4) * j
            + n(2));
    let d = (n(5) * &i4
        + n(8) * &i3 * j
        + n(4) * &i3
        + n(9) * &i2 * &j2
        + n(6) * &i2 * j
        + n(6) * &i2
        + n(8) * i * &j3
        + n(6) * i * &j2
        + n(8) * i * j
        + n(4) * i
        + n(5) * &j4
        + n(4) * &j3
        + n(6) * &j2
        + n(4) * j
        + n(3))
        * rat(1, 2);
    let centre = vec![a, b, c, d];
    let radius_sq = curve_distance_sq(&centre, t0);
    Ok(SphereFit { dim: 4, through: vec![t0.clone()], tangent: vec![i.clone(), j.clone()], centre, radius_sq })
}

/// Solves for the sphere in `R^dim` meeting the curve at every parameter in
/// `through` and `tangent` and tangent to it at every parameter in
/// `tangent`. The number of conditions must equal `dim` and the system must
/// be nonsingular.
pub fn solve_sphere(dim: usize, through: &[Rational], tangent: &[Rational]) -> Result<SphereFit> {
    let contacts: Vec<&Rational> = through.iter().chain(tangent).collect();
    if contacts.is_empty() || contacts.len() - 1 + tangent.len() != dim {
        return Err(Error::input(format!(
            "{} contact and {} tangency parameters do not determine a sphere in dimension {dim}",
            contacts.len(),
            tangent.len()
        )));
    }
    let mut sorted = contacts.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::input("contact parameters must be distinct"));
    }

    // Each row is [coefficients of the centre | right-hand side].
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(dim);
    // Tangency: sum_k 2(k+1) t^k (t^(k+1) - c_k) = 0.
    for t in tangent {
        let pts = curve_point(t, dim);
        let mut row = Vec::with_capacity(dim + 1);
        let mut rhs = Rational::zero();
        let mut tp = Rational::one();
        for (k, x) in pts.iter().enumerate() {
            let w = int(2 * (k as i64 + 1)) * &tp;
            row.push(w.clone());
            rhs += w * x;
            tp = &tp * t;
        }
        row.push(rhs);
        rows.push(row);
    }
    // Equidistance from the first contact: 2 c.(g(t) - g(t_0)) = |g(t)|^2 - |g(t_0)|^2.
    let base = curve_point(contacts[0], dim);
    let base_norm: Rational = base.iter().map(|x| x * x).fold(Rational::zero(), |a, b| a + b);
    for t in &contacts[1..] {
        let g = curve_point(t, dim);
        let mut row: Vec<Rational> = g.iter().zip(&base).map(|(x, y)| int(2) * (x - y)).collect();
        let norm: Rational = g.iter().map(|x| x * x).fold(Rational::zero(), |a, b| a + b);
        row.push(norm - &base_norm);
        rows.push(row);
    }
    let centre = gaussian_solve(rows).ok_or_else(|| Error::input("sphere conditions are singular"))?;
    let radius_sq = curve_distance_sq(&centre, contacts[0]);
    Ok(SphereFit { dim, through: through.to_vec(), tangent: tangent.to_vec(), centre, radius_sq })
}

/// Solves a square system given as augmented rows; `None` if singular.
fn gaussian_solve(mut rows: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, pivot);
        let inv = Rational::one() / &rows[col][col];
        for x in rows[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                let (src, dst) = if r < col {
                    let (lo, hi) = rows.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = rows.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= &f * s;
                }
            }
        }
    }
    Some(rows.into_iter().map(|r| r[n].clone()).collect())
}

/// Result of probing a fit for points of the curve on or inside the sphere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClearanceReport {
    /// Parameters evaluated (contact parameters in the grid are skipped).
    pub checked: usize,
    pub skipped: usize,
    /// Grid parameters where the curve is not strictly outside the sphere.
    pub failures: Vec<Rational>,
    /// Smallest gap found and the parameter where it occurs.
    pub min_gap: Option<(Rational, Rational)>,
}

impl ClearanceReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that the curve lies strictly outside the sphere at every grid
/// parameter other than the contact parameters.
pub fn sphere_curve_clearance(fit: &SphereFit, t_grid: &[Rational]) -> ClearanceReport {
    let mut report = ClearanceReport { checked: 0, skipped: 0, failures: Vec::new(), min_gap: None };
    for t in t_grid {
        if fit.is_contact(t) {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let g = fit.gap(t);
        if !g.is_positive() {
            report.failures.push(t.clone());
        }
        if report.min_gap.as_ref().map_or(true, |(m, _)| g < *m) {
            report.min_gap = Some((g, t.clone()));
        }
    }
    report
}

/// Step of the dense clearance grid.
pub const CLEARANCE_STEP: (i64, i64) = (1, 16);
/// How far past the last contact parameter the unbounded range is probed.
pub const CLEARANCE_TAIL: i64 = 10;

/// Parameters covering the ranges where the curve should avoid the sphere:
/// multiples of 1/16 strictly between consecutive contact parameters and up
/// to `CLEARANCE_TAIL` past the last one, plus every half-integer up to
/// `max_vertex + 1` in those ranges. A fit with no `through` parameter also
/// covers `(0, first contact)`.
pub fn clearance_grid(fit: &SphereFit, max_vertex: i64) -> Vec<Rational> {
    let contacts = fit.t_values();
    let mut bounds: Vec<Rational> = Vec::new();
    if fit.through.is_empty() {
        bounds.push(Rational::zero());
    }
    bounds.extend(contacts.iter().cloned());
    let last = contacts.last().cloned().unwrap_or_else(Rational::zero);
    bounds.push(&last + int(CLEARANCE_TAIL));
    let step = rat(CLEARANCE_STEP.0, CLEARANCE_STEP.1);
    let mut out: Vec<Rational> = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let mut t = (lo / &step).floor() * &step + &step;
        while t < *hi {
            if t > *lo {
                out.push(t.clone());
            }
            t += &step;
        }
        let half = rat(1, 2);
        let mut h = half.clone();
        while h <= int(max_vertex + 1) {
            if h > *lo && h < *hi {
                out.push(h.clone());
            }
            h += &half;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Smallest gap over integer parameters in `range` other than the contact
/// parameters, or `None` if there are none.
pub fn integer_separation(fit: &SphereFit, range: std::ops::RangeInclusive<i64>) -> Option<Rational> {
    range.map(int).filter(|t| !fit.is_contact(t)).map(|t| fit.gap(&t)).min()
}
