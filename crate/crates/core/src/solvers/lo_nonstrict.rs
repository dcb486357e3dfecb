//! LeadingOnes fitness with non-strict selection. Moves inside a level are
//! accepted in both OM directions, so each level is a linear system over its
//! `n - i` states; levels are solved from the top down.
//!
//! For a radius vector `k_j` the system reads
//! `(p_up + sum_{m != j} q_{j,m}) E_j - sum_{m != j} q_{j,m} E_m = 1 + U_j`
//! with `q` the same-level probabilities and `U_j` the improving sum over the
//! finished upper levels.

use alloc::vec::Vec;

use super::kernel::Kernel;
use super::linear::solve_linear_system;
use super::{better, RadiusChoice};
use crate::state::index;
use crate::{CoreError, Result};

/// Default sweep cap of the heuristic.
pub const DEFAULT_MAX_SWEEPS: usize = 50;

/// Same-level and improving data of one level, for one radius per state.
struct LevelRow {
    /// `(m, q)` for `m != j`.
    same: Vec<(usize, f64)>,
    p_up: f64,
    /// `sum_m A(m) G(m)`.
    up_sum: f64,
}

fn level_row(kern: &Kernel, g: &[f64], i: usize, j: usize, k: usize) -> LevelRow {
    let same = kern.same_terms(i, j, k).filter(|&(m, _)| m != j).collect();
    let up_sum = kern.up_terms(i, j, k).map(|(m, a)| a * g[m]).sum();
    LevelRow {
        same,
        p_up: kern.p_up(i, k),
        up_sum,
    }
}

/// Solves one level for fixed rows. States from which the level cannot be
/// left, or that reach an infinite value with positive probability, get
/// `+inf`; the rest are solved exactly. Returns values and the residual.
fn solve_rows(rows: &[LevelRow], i: usize) -> Result<(Vec<f64>, f64)> {
    let d = rows.len();
    // bad[t]: the state's runtime is infinite.
    let mut bad: Vec<bool> = rows.iter().map(|r| !r.up_sum.is_finite()).collect();
    // States that can escape to an upper level through same-level moves.
    let mut escapes: Vec<bool> = rows.iter().map(|r| r.p_up > 0.0).collect();
    loop {
        let mut changed = false;
        for t in 0..d {
            if !escapes[t] && rows[t].same.iter().any(|&(m, _)| escapes[m - i]) {
                escapes[t] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for t in 0..d {
        bad[t] |= !escapes[t];
    }
    loop {
        let mut changed = false;
        for t in 0..d {
            if !bad[t] && rows[t].same.iter().any(|&(m, _)| bad[m - i]) {
                bad[t] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let good: Vec<usize> = (0..d).filter(|&t| !bad[t]).collect();
    let mut pos = alloc::vec![usize::MAX; d];
    for (p, &t) in good.iter().enumerate() {
        pos[t] = p;
    }
    let dim = good.len();
    let mut a = alloc::vec![0.0; dim * dim];
    let mut b = alloc::vec![0.0; dim];
    for (p, &t) in good.iter().enumerate() {
        let row = &rows[t];
        let mut diag = row.p_up;
        for &(m, q) in &row.same {
            diag += q;
            a[p * dim + pos[m - i]] -= q;
        }
        a[p * dim + p] += diag;
        b[p] = 1.0 + row.up_sum;
    }
    let sol = solve_linear_system(&a, dim, &b)?;
    let mut out = alloc::vec![f64::INFINITY; d];
    for (p, &t) in good.iter().enumerate() {
        out[t] = sol.x[p];
    }
    Ok((out, sol.residual))
}

/// Runtimes of level `i` for the radius vector `k_vector` (indexed by
/// `j - i`), given final runtimes of all upper levels in dense layout.
pub fn solve_lo_level_system(
    n: usize,
    i: usize,
    k_vector: &[usize],
    upper_runtimes: &[f64],
) -> Result<Vec<f64>> {
    if i >= n {
        return Err(CoreError::InvalidState { n, i, j: i });
    }
    if k_vector.len() != n - i {
        return Err(CoreError::Unsupported(alloc::format!(
            "level {i} needs {} radii, got {}",
            n - i,
            k_vector.len()
        )));
    }
    if let Some(&k) = k_vector.iter().find(|&&k| !(1..=n).contains(&k)) {
        return Err(CoreError::InvalidRadius { n, k });
    }
    let kern = Kernel::new(n);
    let g = kern.level_g(i, upper_runtimes);
    let rows: Vec<LevelRow> = (i..n)
        .map(|j| level_row(&kern, &g, i, j, k_vector[j - i]))
        .collect();
    Ok(solve_rows(&rows, i)?.0)
}

/// Per-level bookkeeping of a level-system run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelTrace {
    /// Radius updates after the initial solve, per level (index `i`).
    pub iterations: Vec<usize>,
    /// Largest residual over the level's solves.
    pub residuals: Vec<f64>,
    /// Start-weighted level runtime after every solve.
    pub sweep_totals: Vec<Vec<f64>>,
}

pub(crate) struct LevelOutcome {
    pub runtimes: Vec<f64>,
    pub radii: Vec<usize>,
    pub trace: LevelTrace,
}

/// `sum_j C(n-i-1, j-i) E_j`, the level's share of the start-weighted total.
fn level_weighted(kern: &Kernel, n: usize, i: usize, t: &[f64]) -> f64 {
    t.iter()
        .enumerate()
        .map(|(d, v)| {
            let w = kern.table().get((n - i - 1) as i64, d as i64);
            if w > 0.0 {
                w * v
            } else {
                0.0
            }
        })
        .sum()
}

/// Top-down level solve. `Optimise` runs the sweep heuristic: start from
/// `k = 1`, solve, pick for every state the radius minimising its one-step
/// lookahead against the current level values, and repeat until the radius
/// vector stops changing.
pub(crate) fn run(
    kern: &Kernel,
    choice: RadiusChoice<'_>,
    max_sweeps: usize,
) -> Result<LevelOutcome> {
    let n = kern.n();
    let mut e = alloc::vec![f64::NAN; index::count(n)];
    e[index::of(n, n, n)] = 0.0;
    let mut radii = alloc::vec![0usize; index::non_optimal(n)];
    let mut trace = LevelTrace {
        iterations: alloc::vec![0; n],
        residuals: alloc::vec![0.0; n],
        sweep_totals: alloc::vec![Vec::new(); n],
    };

    for i in (0..n).rev() {
        let g = kern.level_g(i, &e);
        let d = n - i;
        let mut ks: Vec<usize> = match choice {
            RadiusChoice::Fixed(fixed) => (i..n).map(|j| fixed[index::of(n, i, j)]).collect(),
            // k = 1 whenever the portfolio has it.
            RadiusChoice::Optimise(portfolio) => alloc::vec![portfolio.radii()[0]; d],
        };
        // Rows for every candidate radius are reused across sweeps.
        let candidates: Vec<Vec<(usize, LevelRow)>> = match choice {
            RadiusChoice::Optimise(portfolio) => (i..n)
                .map(|j| {
                    portfolio
                        .radii()
                        .iter()
                        .map(|&k| (k, level_row(kern, &g, i, j, k)))
                        .collect()
                })
                .collect(),
            RadiusChoice::Fixed(_) => Vec::new(),
        };
        let rows_for = |ks: &[usize]| -> Vec<LevelRow> {
            (i..n)
                .map(|j| {
                    let k = ks[j - i];
                    match candidates
                        .get(j - i)
                        .and_then(|c| c.iter().find(|(kk, _)| *kk == k))
                    {
                        Some((_, r)) => LevelRow {
                            same: r.same.clone(),
                            p_up: r.p_up,
                            up_sum: r.up_sum,
                        },
                        None => level_row(kern, &g, i, j, k),
                    }
                })
                .collect()
        };

        let (mut t, mut residual) = solve_rows(&rows_for(&ks), i)?;
        trace.sweep_totals[i].push(level_weighted(kern, n, i, &t));
        if let RadiusChoice::Optimise(_) = choice {
            let mut sweeps = 0;
            loop {
                let mut next = ks.clone();
                for (jj, cands) in candidates.iter().enumerate() {
                    let mut best: Option<(usize, f64)> = None;
                    for (k, row) in cands {
                        let mut leave = row.p_up;
                        let mut num = 1.0 + row.up_sum;
                        for &(m, q) in &row.same {
                            leave += q;
                            num += q * t[m - i];
                        }
                        if leave > 0.0 && better(num / leave, best.map(|b| b.1)) {
                            best = Some((*k, num / leave));
                        }
                    }
                    if let Some((k, _)) = best {
                        next[jj] = k;
                    }
                }
                if next == ks {
                    break;
                }
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(CoreError::NoConvergence {
                        level: i,
                        max_sweeps,
                    });
                }
                ks = next;
                let (t2, r2) = solve_rows(&rows_for(&ks), i)?;
                t = t2;
                residual = residual.max(r2);
                trace.sweep_totals[i].push(level_weighted(kern, n, i, &t));
            }
            trace.iterations[i] = sweeps;
        }
        trace.residuals[i] = residual;
        for (jj, v) in t.iter().enumerate() {
            e[index::of(n, i, i + jj)] = *v;
            radii[index::of(n, i, i + jj)] = ks[jj];
        }
    }
    Ok(LevelOutcome {
        runtimes: e,
        radii,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Portfolio;

    fn upper(n: usize, choice: RadiusChoice<'_>) -> Vec<f64> {
        run(&Kernel::new(n), choice, DEFAULT_MAX_SWEEPS)
            .unwrap()
            .runtimes
    }

    #[test]
    fn top_level_is_n() {
        let e = upper(6, RadiusChoice::Optimise(&Portfolio::full(6)));
        let v = solve_lo_level_system(6, 5, &[1], &e).unwrap();
        assert!((v[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn n4_level2_all_ones() {
        // 1100 and 1101 swap through bit 4 before bit 3 improves:
        // E_A = 1 + 1 + E_B/4 + E_A/2, E_B = 1 + E_A/4 + E_B/2.
        let fixed = alloc::vec![1usize; index::non_optimal(4)];
        let e = upper(4, RadiusChoice::Fixed(&fixed));
        let v = solve_lo_level_system(4, 2, &[1, 1], &e).unwrap();
        assert!((v[0] - 20.0 / 3.0).abs() < 1e-12 && (v[1] - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn n4_level0_all_flip_from_zero() {
        let fixed = alloc::vec![1usize; index::non_optimal(4)];
        let e = upper(4, RadiusChoice::Fixed(&fixed));
        let v = solve_lo_level_system(4, 0, &[4, 4, 4, 4], &e).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_sublevel_is_infinite() {
        // k = 2 at the top level never improves.
        let fixed = alloc::vec![1usize; index::non_optimal(4)];
        let e = upper(4, RadiusChoice::Fixed(&fixed));
        let v = solve_lo_level_system(4, 3, &[2], &e).unwrap();
        assert!(v[0].is_infinite());
    }

    #[test]
    fn heuristic_is_monotone_and_converges() {
        for n in [4, 8, 16] {
            let out = run(
                &Kernel::new(n),
                RadiusChoice::Optimise(&Portfolio::full(n)),
                50,
            )
            .unwrap();
            for totals in &out.trace.sweep_totals {
                for w in totals.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-9));
                }
            }
            assert!(out.trace.residuals.iter().all(|r| *r <= 1e-6));
        }
    }
}
