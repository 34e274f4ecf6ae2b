//! Support enumeration for the exhaustive diagnostics and oracles.

/// C(n, k), saturating just above `cap` so callers can gate exhaustive
/// enumeration without overflow concerns.
pub(crate) fn binomial_capped(n: usize, k: usize, cap: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Exact at every step: acc = C(n, i+1) after the division.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

/// Lexicographic size-k subsets of 0..n.
pub(crate) struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        let state = if k <= n {
            Some((0..k).collect())
        } else {
            None
        };
        Combinations { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let state = self.state.as_mut()?;
        let out = state.clone();
        // Advance: rightmost index that can still move right.
        let k = self.k;
        let mut i = k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if state[i] + 1 <= self.n - (k - i) {
                state[i] += 1;
                for j in i + 1..k {
                    state[j] = state[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
