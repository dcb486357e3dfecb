//! (LO, OM) fitness with strict selection and string-level radii. Every
//! accepted move is to a string in a lex-larger (LO, OM) class, so strings
//! are finalised class by class from the top.
//!
//! With `S_k(x)` the strictly better strings at Hamming distance `k` and
//! `c_k = |S_k(x)|`, the first-step equation gives
//! `E[T_x] = (C(n,k) + sum_{y in S_k(x)} E[T_y]) / c_k`.

use alloc::vec::Vec;

use super::better;
use crate::combinatorics::binomial;
use crate::policy::{Policy, Portfolio};
use crate::state::{index, mask_fitness, StateLoOm};
use crate::{CoreError, Result};

/// Default problem-size cap of the string solver (time grows as `4^n`).
pub const DEFAULT_BITS_CAP: usize = 16;
/// Largest cap that may be configured.
pub const HARD_BITS_CAP: usize = 20;

pub(crate) enum BitsChoice<'a> {
    Optimise(&'a Portfolio),
    Fixed(&'a Policy),
}

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(HARD_BITS_CAP);
    if n == 0 {
        return Err(CoreError::EmptyProblem);
    }
    if n > cap {
        return Err(CoreError::CapExceeded { n, cap });
    }
    Ok(())
}

/// Runtimes and radii indexed by mask; the optimum's radius slot is 0.
pub(crate) fn run(n: usize, choice: BitsChoice<'_>, cap: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    check_cap(n, cap)?;
    let size = 1usize << n;
    let key = |mask: usize| {
        let s = mask_fitness(n, mask as u64);
        s.i * (n + 1) + s.j
    };
    // Strings in descending class order, masks ascending within a class.
    let mut order: Vec<u32> = (0..size as u32).collect();
    order.sort_by(|&a, &b| key(b as usize).cmp(&key(a as usize)).then(a.cmp(&b)));
    let keys: Vec<usize> = order.iter().map(|&m| key(m as usize)).collect();

    let cnk: Vec<f64> = (0..=n)
        .map(|k| binomial(n as i64, k as i64).to_f64())
        .collect();
    let mut e_sorted = alloc::vec![f64::NAN; size];
    let mut e = alloc::vec![f64::NAN; size];
    let mut radii = alloc::vec![0usize; size];
    e_sorted[0] = 0.0;
    e[order[0] as usize] = 0.0;

    let mut class_start = 1;
    let mut sum = alloc::vec![0.0f64; n + 1];
    let mut cnt = alloc::vec![0u32; n + 1];
    for p in 1..size {
        if keys[p] != keys[p - 1] {
            class_start = p;
        }
        let x = order[p];
        sum.iter_mut().for_each(|s| *s = 0.0);
        cnt.iter_mut().for_each(|c| *c = 0);
        for (y, ey) in order[..class_start].iter().zip(&e_sorted[..class_start]) {
            let d = (x ^ y).count_ones() as usize;
            sum[d] += ey;
            cnt[d] += 1;
        }
        let value = |k: usize| (cnt[k] > 0).then(|| (cnk[k] + sum[k]) / cnt[k] as f64);
        let (k, v) = match &choice {
            BitsChoice::Optimise(portfolio) => {
                let mut best: Option<(usize, f64)> = None;
                for &k in portfolio.radii() {
                    if let Some(v) = value(k) {
                        if better(v, best.map(|b| b.1)) {
                            best = Some((k, v));
                        }
                    }
                }
                best.unwrap_or((portfolio.radii()[0], f64::INFINITY))
            }
            BitsChoice::Fixed(policy) => {
                let k = policy.radius_for_mask(x as u64)?;
                (k, value(k).unwrap_or(f64::INFINITY))
            }
        };
        e_sorted[p] = v;
        e[x as usize] = v;
        radii[x as usize] = k;
    }
    Ok((e, radii))
}

/// States containing a string whose optimal radius differs from the
/// state's radius in `loom_radii` (dense (LO, OM) layout), in descending
/// lex order.
pub(crate) fn differing_states(
    n: usize,
    string_radii: &[usize],
    loom_radii: &[usize],
) -> Vec<StateLoOm> {
    let mut differs = alloc::vec![false; index::non_optimal(n)];
    for (mask, &k) in string_radii.iter().enumerate().take((1 << n) - 1) {
        let s = mask_fitness(n, mask as u64);
        let idx = index::of(n, s.i, s.j);
        if loom_radii[idx] != k {
            differs[idx] = true;
        }
    }
    index::descending(n)
        .skip(1)
        .filter(|s| differs[index::of(n, s.i, s.j)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(n: usize) -> (Vec<f64>, Vec<usize>) {
        run(
            n,
            BitsChoice::Optimise(&Portfolio::full(n)),
            DEFAULT_BITS_CAP,
        )
        .unwrap()
    }

    #[test]
    fn one_zero_at_the_end() {
        for n in 1..=12 {
            let (e, r) = solve(n);
            let x = (1usize << (n - 1)) - 1;
            assert_eq!(r[x], 1);
            assert!((e[x] - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zeros_n4() {
        let (e, r) = solve(4);
        assert_eq!((e[0], r[0]), (1.0, 4));
    }

    #[test]
    fn cap_enforced() {
        assert_eq!(
            run(
                17,
                BitsChoice::Optimise(&Portfolio::full(17)),
                DEFAULT_BITS_CAP
            )
            .unwrap_err(),
            CoreError::CapExceeded { n: 17, cap: 16 }
        );
        assert_eq!(
            check_cap(21, 99).unwrap_err(),
            CoreError::CapExceeded {
                n: 21,
                cap: HARD_BITS_CAP
            }
        );
    }
}
