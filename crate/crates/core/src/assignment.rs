//! Minimum-cost perfect matching on a square cost matrix.
//!
//! Classic O(n^3) shortest augmenting path method with row and column
//! potentials. The cost type only needs exact addition, subtraction and a
//! total order, so it runs unchanged over integers and radical sums.

use std::ops::{Add, Sub};

use crate::exact::RadicalSum;

pub trait AssignCost: Clone + Ord {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
}

impl AssignCost for RadicalSum {
    fn zero() -> Self {
        RadicalSum::zero()
    }
    fn add(&self, other: &Self) -> Self {
        <&RadicalSum as Add>::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        <&RadicalSum as Sub>::sub(self, other)
    }
}

impl AssignCost for i64 {
    fn zero() -> Self {
        0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
}

/// Returns the minimum total cost and `col[row]`, the column matched to each
/// row. Panics if the matrix is not square.
pub fn min_cost_assignment<T: AssignCost>(cost: &[Vec<T>]) -> (T, Vec<usize>) {
    let n = cost.len();
    for row in cost {
        assert_eq!(row.len(), n, "cost matrix must be square");
    }
    if n == 0 {
        return (T::zero(), Vec::new());
    }
    // 1-based internally; row/column 0 is the virtual start.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<T>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1].sub(&u[i0]).sub(&v[j]);
                if minv[j].as_ref().map_or(true, |m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().unwrap();
                if delta.as_ref().map_or(true, |d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]].add(&delta);
                    v[j] = v[j].sub(&delta);
                } else if let Some(m) = &minv[j] {
                    minv[j] = Some(m.sub(&delta));
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; n];
    for j in 1..=n {
        col[p[j] - 1] = j - 1;
    }
    let mut total = T::zero();
    for (r, &c) in col.iter().enumerate() {
        total = total.add(&cost[r][c]);
    }
    (total, col)
}
