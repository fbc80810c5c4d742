//! Binomial coefficients and colexicographic ranking of k-subsets.
//!
//! Colex order compares subsets by their largest element first, so the
//! subsets of `{0..m}` form a prefix of the subsets of `{0..m+1}`. The rank of
//! a sorted subset `c_0 < c_1 < ... < c_{k-1}` is `sum_i C(c_i, i + 1)`.

/// Exact binomial coefficient, `0` when `k > d`.
///
/// Exact for every `d <= 100`; panics if an intermediate product overflows `u128`.
pub fn binomial(d: u64, k: u64) -> u128 {
    if k > d {
        return 0;
    }
    let k = k.min(d - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // C(d, i) * (d - i) / (i + 1) = C(d, i + 1), always integral
        acc = acc
            .checked_mul((d - i) as u128)
            .unwrap_or_else(|| panic!("binomial({d}, {k}) overflows u128"))
            / (i as u128 + 1);
    }
    acc
}

/// `binomial` narrowed to `usize`, or `None` if it does not fit.
pub fn binomial_usize(d: usize, k: usize) -> Option<usize> {
    usize::try_from(binomial(d as u64, k as u64)).ok()
}

/// Colex rank of a strictly increasing subset.
pub fn colex_rank(subset: &[usize]) -> u128 {
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u64, i as u64 + 1))
        .sum()
}

/// The `rank`-th `k`-subset in colex order, sorted ascending.
pub fn colex_unrank(mut rank: u128, k: usize) -> Vec<usize> {
    let mut out = vec![0usize; k];
    for i in (0..k).rev() {
        // largest c with C(c, i + 1) <= rank
        let mut c = i;
        while binomial(c as u64 + 1, i as u64 + 1) <= rank {
            c += 1;
        }
        rank -= binomial(c as u64, i as u64 + 1);
        out[i] = c;
    }
    out
}

/// Iterator over all `k`-subsets of `{0..d}` in colex order.
#[derive(Debug, Clone)]
pub struct KSubsets {
    d: usize,
    current: Option<Vec<usize>>,
}

impl KSubsets {
    pub fn new(d: usize, k: usize) -> Self {
        let current = if k <= d { Some((0..k).collect()) } else { None };
        Self { d, current }
    }
}

impl Iterator for KSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        let k = next.len();
        // find the lowest position that can be incremented without colliding with its successor
        let mut advanced = false;
        for i in 0..k {
            let limit = if i + 1 < k { next[i + 1] } else { self.d };
            if next[i] + 1 < limit {
                next[i] += 1;
                for (j, slot) in next.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                advanced = true;
                break;
            }
        }
        if advanced {
            self.current = Some(next);
        }
        Some(cur)
    }
}
