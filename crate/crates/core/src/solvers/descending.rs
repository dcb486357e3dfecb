//! Settings in which every accepted move leads to a lex-larger state:
//! (LO, OM) fitness with non-strict selection, and LeadingOnes fitness with
//! strict selection. One pass over the states in descending order finalises
//! each runtime from already-final values.

use alloc::vec::Vec;

use super::kernel::Kernel;
use super::{better, RadiusChoice};
use crate::state::index;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Acceptance {
    /// Improving moves plus same-level moves that raise OM.
    LoOmNonStrict,
    /// Improving moves only.
    LoStrict,
}

/// Runtimes (dense (LO, OM) layout) and chosen radii (optimum excluded).
pub(crate) fn run(
    kern: &Kernel,
    acceptance: Acceptance,
    choice: RadiusChoice<'_>,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let n = kern.n();
    let mut e = alloc::vec![f64::NAN; index::count(n)];
    e[index::of(n, n, n)] = 0.0;
    let mut radii = alloc::vec![0usize; index::non_optimal(n)];

    for i in (0..n).rev() {
        let g = kern.level_g(i, &e);
        for j in (i..n).rev() {
            let idx = index::of(n, i, j);
            let mut best: Option<(usize, f64)> = None;
            let consider = |k: usize| {
                let p_up = kern.p_up(i, k);
                let mut leave = p_up;
                let mut num = 1.0;
                for (m, a) in kern.up_terms(i, j, k) {
                    num += a * g[m];
                }
                if acceptance == Acceptance::LoOmNonStrict {
                    for (m, p) in kern.same_terms(i, j, k) {
                        if m > j {
                            let v = e[index::of(n, i, m)];
                            debug_assert!(!v.is_nan(), "read of unfinalised state ({i},{m})");
                            leave += p;
                            num += p * v;
                        }
                    }
                }
                (leave > 0.0).then(|| num / leave)
            };
            match choice {
                RadiusChoice::Optimise(portfolio) => {
                    for &k in portfolio.radii() {
                        if let Some(v) = consider(k) {
                            if better(v, best.map(|b| b.1)) {
                                best = Some((k, v));
                            }
                        }
                    }
                }
                RadiusChoice::Fixed(fixed) => {
                    let k = fixed[idx];
                    best = Some((k, consider(k).unwrap_or(f64::INFINITY)));
                }
            }
            let (k, v) = best.unwrap_or((
                match choice {
                    RadiusChoice::Optimise(p) => p.radii()[0],
                    RadiusChoice::Fixed(f) => f[idx],
                },
                f64::INFINITY,
            ));
            e[idx] = v;
            radii[idx] = k;
        }
    }
    Ok((e, radii))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Portfolio;

    fn solve(n: usize, acc: Acceptance) -> (Vec<f64>, Vec<usize>) {
        run(
            &Kernel::new(n),
            acc,
            RadiusChoice::Optimise(&Portfolio::full(n)),
        )
        .unwrap()
    }

    #[test]
    fn base_case_is_n() {
        for n in 1..10 {
            for acc in [Acceptance::LoOmNonStrict, Acceptance::LoStrict] {
                let (e, r) = solve(n, acc);
                let idx = index::of(n, n - 1, n - 1);
                assert_eq!(r[idx], 1);
                assert!((e[idx] - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn n4_loom_by_hand() {
        let (e, r) = solve(4, Acceptance::LoOmNonStrict);
        let at = |i, j| (e[index::of(4, i, j)], r[index::of(4, i, j)]);
        assert_eq!(at(0, 0), (1.0, 4));
        assert!((at(0, 1).0 - 5.0).abs() < 1e-12 && at(0, 1).1 == 4);
        assert!((at(0, 2).0 - 16.0 / 3.0).abs() < 1e-12 && at(0, 2).1 == 3);
        assert!((at(1, 1).0 - 4.0).abs() < 1e-12 && at(1, 1).1 == 3);
        assert!((at(1, 2).0 - 6.0).abs() < 1e-12 && at(1, 2).1 == 1);
        assert!((at(3, 3).0 - 4.0).abs() < 1e-12 && at(3, 3).1 == 1);
    }

    #[test]
    fn stuck_fixed_radius_is_infinite() {
        let n = 5;
        let mut fixed = alloc::vec![1usize; index::non_optimal(n)];
        fixed[index::of(n, n - 1, n - 1)] = 2;
        let (e, _) = run(
            &Kernel::new(n),
            Acceptance::LoOmNonStrict,
            RadiusChoice::Fixed(&fixed),
        )
        .unwrap();
        assert!(e[index::of(n, n - 1, n - 1)].is_infinite());
        // (n-2, n-2) reaches (n-1, n-1) with positive probability.
        assert!(e[index::of(n, n - 2, n - 2)].is_infinite());
        // 01..1 only moves by flipping its first bit.
        assert!((e[index::of(n, 0, n - 1)] - n as f64).abs() < 1e-12);
    }
}
