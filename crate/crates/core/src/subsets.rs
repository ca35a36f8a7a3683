//! Fixed-size subsets in colexicographic order.
//!
//! Colex order on `r`-subsets of `{0, .., n-1}` compares the largest elements
//! first. Subsets can be unranked directly, which lets a parallel enumeration
//! split the rank range into contiguous chunks.

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The subset of rank `rank` in colex order.
pub fn unrank_colex(mut rank: u128, n: usize, r: usize) -> Vec<usize> {
    let mut out = vec![0; r];
    let mut hi = n;
    for slot in (0..r).rev() {
        // largest c < hi with C(c, slot + 1) <= rank
        let mut c = slot;
        while c + 1 < hi && binomial(c + 1, slot + 1) <= rank {
            c += 1;
        }
        rank -= binomial(c, slot + 1);
        out[slot] = c;
        hi = c;
    }
    out
}

/// Advances `s` (sorted, elements below `n`) to the next subset in colex
/// order. Returns false after the last subset.
pub fn next_colex(s: &mut [usize], n: usize) -> bool {
    let r = s.len();
    if r == 0 {
        return false;
    }
    for i in 0..r {
        let limit = if i + 1 < r { s[i + 1] } else { n };
        if s[i] + 1 < limit {
            s[i] += 1;
            for (k, v) in s.iter_mut().enumerate().take(i) {
                *v = k;
            }
            return true;
        }
    }
    false
}

/// Iterator over all `r`-subsets of `0..n` in colex order.
pub struct Colex {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Colex {
    pub fn new(n: usize, r: usize) -> Colex {
        Colex { n, cur: if r <= n { Some((0..r).collect()) } else { None } }
    }

    /// Starts at the subset of rank `start`.
    pub fn from_rank(n: usize, r: usize, start: u128) -> Colex {
        if r > n || start >= binomial(n, r) {
            return Colex { n, cur: None };
        }
        Colex { n, cur: Some(unrank_colex(start, n, r)) }
    }
}

impl Iterator for Colex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cur.as_mut()?;
        let out = cur.clone();
        if !next_colex(cur, self.n) {
            self.cur = None;
        }
        Some(out)
    }
}

/// Splits `0..total` into at most `parts` contiguous ranges.
pub fn chunks(total: u128, parts: usize) -> Vec<(u128, u128)> {
    if total == 0 {
        return Vec::new();
    }
    let parts = (parts.max(1) as u128).min(total);
    let step = total.div_ceil(parts);
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + step).min(total);
        out.push((start, end));
        start = end;
    }
    out
}
