//! How well the lattice of data points approximates area near a centre.
//!
//! Counts lattice points `a + eps * Z^2` inside the closed disc of radius `r`
//! around `a` and sums their distances to `a`, then compares both with the
//! continuous quantities `pi r^2` and `2/3 pi r^3` rescaled by `1 / eps^2`.

use std::f64::consts::PI;

use num::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::metric::Point;

/// Absolute slack on the floating-point side of each comparison.
pub const MEASURE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport {
    pub centre: Point,
    pub r: Rational,
    pub eps: Rational,
    /// Lattice points in the disc.
    pub count: u64,
    /// `pi (r - eps)^2 / eps^2`, zero when `r < eps`.
    pub count_lower: f64,
    /// `pi (r + eps)^2 / eps^2`.
    pub count_upper: f64,
    /// Sum of distances from the lattice points in the disc to the centre.
    pub distance_sum: f64,
    /// `(2/3 pi (r + eps)^3 + eps pi (r + eps)^2) / eps^2`.
    pub distance_upper: f64,
}

impl MeasureReport {
    pub fn count_within(&self) -> bool {
        self.count_lower - MEASURE_TOLERANCE <= self.count as f64 && self.count as f64 <= self.count_upper + MEASURE_TOLERANCE
    }

    pub fn distance_within(&self) -> bool {
        self.distance_sum <= self.distance_upper + MEASURE_TOLERANCE
    }

    pub fn holds(&self) -> bool {
        self.count_within() && self.distance_within()
    }
}

/// Enumerates the lattice disc around `a`. The lattice is taken to extend
/// past the disc, as it does for centres well inside the square.
pub fn measure_approx_check(a: &Point, r: &Rational, eps: &Rational) -> Result<MeasureReport> {
    if !eps.is_positive() || r.is_negative() {
        return Err(Error::input("need eps > 0 and r >= 0"));
    }
    // Offsets (dx, dy) with dx^2 + dy^2 <= (r / eps)^2.
    let reach = r / eps;
    let limit = (&reach * &reach).floor().to_integer().to_i64().ok_or_else(|| Error::input("disc too large"))?;
    let span = reach.floor().to_integer().to_i64().expect("bounded by limit");
    let e = to_f64(eps);
    let mut count = 0u64;
    let mut distance_sum = 0.0;
    for dx in -span..=span {
        for dy in -span..=span {
            let s = dx * dx + dy * dy;
            if s <= limit {
                count += 1;
                distance_sum += e * (s as f64).sqrt();
            }
        }
    }
    let rf = to_f64(r);
    let lower_r = (rf - e).max(0.0);
    let upper_r = rf + e;
    Ok(MeasureReport {
        centre: a.clone(),
        r: r.clone(),
        eps: eps.clone(),
        count,
        count_lower: PI * lower_r * lower_r / (e * e),
        count_upper: PI * upper_r * upper_r / (e * e),
        distance_sum,
        distance_upper: (2.0 / 3.0 * PI * upper_r.powi(3) + e * PI * upper_r * upper_r) / (e * e),
    })
}
