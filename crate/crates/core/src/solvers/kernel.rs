//! Table-driven transition terms shared by the (LO, OM) solvers.
//!
//! From `s_{i,j}` with radius `k`, outcomes are indexed by the number `k0`
//! of suffix zeros that flip:
//! - same level (bit `i + 1` untouched): `m = j + 2 k0 - k`,
//!   probability `C(n-j-1, k0) C(j-i, k-k0) / C(n,k)`;
//! - improving (bit `i + 1` flips): `m = j + 2 k0 - k + 2`, probability
//!   `A = C(n-j-1, k0) C(j-i, k-1-k0) / C(n,k)`, and the new level `l` is
//!   spread over `[i+1..m]` by `L(i,l,m) = C(n-l-1, m-l) / C(n-i-1, m-i-1)`.
//!
//! `G_i(m) = sum_l L(i,l,m) E[l,m]` folds the level spread into one value per
//! `m`, so an improving sum costs one pass over `k0`.

use alloc::vec::Vec;

use crate::combinatorics::BinomialTable;
use crate::state::index;

pub struct Kernel {
    n: usize,
    table: BinomialTable,
    fast: bool,
}

impl Kernel {
    pub fn new(n: usize) -> Self {
        let table = BinomialTable::new(n);
        let fast = table.get(n as i64, (n / 2) as i64).is_finite();
        Kernel { n, table, fast }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &BinomialTable {
        &self.table
    }

    /// `C(a,b) C(c,d) / C(e,f)` for in-range arguments.
    #[inline]
    fn ratio3(&self, a: usize, b: usize, c: usize, d: usize, e: usize, f: usize) -> f64 {
        let (a, b, c, d, e, f) = (a as i64, b as i64, c as i64, d as i64, e as i64, f as i64);
        if self.fast {
            // The numerator product never exceeds C(n,k), so it cannot
            // overflow when the table is finite.
            self.table.get(a, b) * self.table.get(c, d) / self.table.get(e, f)
        } else {
            libm::exp(
                self.table.ln(a, b).log_value() + self.table.ln(c, d).log_value()
                    - self.table.ln(e, f).log_value(),
            )
        }
    }

    /// `C(n-i-1, k-1) / C(n,k)`.
    #[inline]
    pub fn p_up(&self, i: usize, k: usize) -> f64 {
        if k > self.n - i {
            return 0.0;
        }
        self.ratio3(self.n - i - 1, k - 1, 0, 0, self.n, k)
    }

    /// `C(n-i-1, k) / C(n,k)`.
    #[inline]
    pub fn p_same_level(&self, i: usize, k: usize) -> f64 {
        if k > self.n - i - 1 {
            return 0.0;
        }
        self.ratio3(self.n - i - 1, k, 0, 0, self.n, k)
    }

    /// Same-level outcomes `(m, p)` from `(i, j)` with `p > 0`, in
    /// ascending `m`.
    #[inline]
    pub fn same_terms(
        &self,
        i: usize,
        j: usize,
        k: usize,
    ) -> impl Iterator<Item = (usize, f64)> + '_ {
        let zeros = self.n - j - 1;
        let ones = j - i;
        let lo = k.saturating_sub(ones);
        let hi = k.min(zeros);
        (lo..=hi).map(move |k0| {
            (
                j + 2 * k0 - k,
                self.ratio3(zeros, k0, ones, k - k0, self.n, k),
            )
        })
    }

    /// Improving outcomes `(m, A)` from `(i, j)`, before the level spread,
    /// in ascending `m`. The masses add up to [`p_up`](Self::p_up).
    #[inline]
    pub fn up_terms(
        &self,
        i: usize,
        j: usize,
        k: usize,
    ) -> impl Iterator<Item = (usize, f64)> + '_ {
        let zeros = self.n - j - 1;
        let ones = j - i;
        let lo = (k - 1).saturating_sub(ones);
        let hi = (k - 1).min(zeros);
        (lo..=hi).map(move |k0| {
            (
                j + 2 * k0 + 2 - k,
                self.ratio3(zeros, k0, ones, k - 1 - k0, self.n, k),
            )
        })
    }

    /// `L(i, l, m)`, with `L = 1` for `l = m = n`.
    #[inline]
    pub fn level_spread(&self, i: usize, l: usize, m: usize) -> f64 {
        let n = self.n;
        if l == n {
            return if m == n { 1.0 } else { 0.0 };
        }
        self.ratio3(n - l - 1, m - l, 0, 0, n - i - 1, m - i - 1)
    }

    /// `G_i(m)` for `m` in `0..=n` (zero below `i + 1`) from a runtime
    /// vector in dense (LO, OM) layout whose levels above `i` are final.
    pub fn level_g(&self, i: usize, e: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut g = alloc::vec![0.0; n + 1];
        for (m, gm) in g.iter_mut().enumerate().take(n).skip(i + 1) {
            let mut acc = 0.0;
            for l in (i + 1..=m).rev() {
                let v = e[index::of(n, l, m)];
                debug_assert!(!v.is_nan(), "read of unfinalised state ({l},{m})");
                acc += self.level_spread(i, l, m) * v;
            }
            *gm = acc;
        }
        g[n] = e[index::of(n, n, n)];
        g
    }
}
