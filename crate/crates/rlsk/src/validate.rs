//! Cross-checks of the solvers against brute force, grouped into families.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rlsk_core::combinatorics::{BinomialRatio, BinomialTable};
use rlsk_core::oracle::{
    self, enumerate_transitions, exhaustive_argmin, full_chain_hitting_times,
    level_averaged_transitions, rational_to_f64, state_averaged_transitions,
};
use rlsk_core::policy::{always_one_policy, compute_s_lo_optimal_policy};
use rlsk_core::runtime::total_with_convention;
use rlsk_core::solvers::{evaluate, solve};
use rlsk_core::state::{
    full_distribution, improving_ratio, index, lo_level_ratios, mask_fitness, same_level_ratio,
    start_probability_exact, trans_bitstring, trans_improving, trans_lo_level, trans_same_level,
};
use rlsk_core::{
    BitString, Portfolio, RuntimeTable, Setting, StateLoOm, StateSpace, TotalConvention,
};
use serde::Serialize;

use crate::Result;

const MAX_LISTED_FAILURES: usize = 20;
/// Float transition probabilities against exact enumeration.
pub const FLOAT_TOL: f64 = 1e-12;
/// Solver runtimes against full-chain hitting times, relative.
pub const RUNTIME_RTOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    /// Largest `n` for transitions and full-chain runtimes.
    pub max_n: usize,
    /// Largest `n` for the exhaustive per-state argmin (exact, slow).
    pub argmin_max_n: usize,
    /// Largest `n` for the normalisation scan over every state and radius.
    pub normalisation_max_n: usize,
    /// Largest `n` for the exact start-distribution sum.
    pub start_max_n: usize,
    /// Relative error injected into solver runtimes before comparing; a
    /// nonzero value must make the runtime families fail.
    pub perturbation: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            max_n: 8,
            argmin_max_n: 5,
            normalisation_max_n: 12,
            start_max_n: 20,
            perturbation: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub name: String,
    pub ok: bool,
    pub checks: u64,
    /// Largest observed error (absolute or relative, per family).
    pub max_error: f64,
    pub failures: Vec<String>,
    pub failure_count: u64,
}

impl FamilyReport {
    fn new(name: &str) -> Self {
        FamilyReport {
            name: name.into(),
            ok: true,
            checks: 0,
            max_error: 0.0,
            failures: Vec::new(),
            failure_count: 0,
        }
    }

    fn check(&mut self, ok: bool, error: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if error.is_finite() {
            self.max_error = self.max_error.max(error);
        }
        if !ok {
            self.ok = false;
            self.failure_count += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(what());
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub max_n: usize,
    pub perturbation: f64,
    pub families: Vec<FamilyReport>,
}

pub fn run(opts: &ValidateOptions) -> Result<ValidationReport> {
    let families = vec![
        transitions(opts.max_n)?,
        runtimes(opts.max_n, opts.perturbation)?,
        argmin(opts.argmin_max_n)?,
        small_totals(opts.perturbation)?,
        start_distribution(opts.start_max_n)?,
        normalisation(opts.normalisation_max_n)?,
    ];
    Ok(ValidationReport {
        ok: families.iter().all(|f| f.ok),
        max_n: opts.max_n,
        perturbation: opts.perturbation,
        families,
    })
}

fn exact(r: Option<BinomialRatio>) -> Result<BigRational> {
    Ok(match r {
        Some(r) => r.exact()?,
        None => BigRational::zero(),
    })
}

/// Every closed-form transition against flip-set enumeration: exactly in
/// rationals and within [`FLOAT_TOL`] in `f64`.
pub fn transitions(max_n: usize) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("transitions");
    for n in 1..=max_n.min(oracle::ENUMERATION_CAP) {
        for s in index::descending(n).skip(1) {
            for k in 1..=n {
                let d = state_averaged_transitions(n, s.i, s.j, k)?;
                let mut compare = |t: StateLoOm, want: BigRational, float: f64| {
                    let got = d.probability(&t);
                    let err = (float - rational_to_f64(&got)).abs();
                    f.check(got == want && err <= FLOAT_TOL, err, || {
                        format!(
                            "n={n} ({},{})->({},{}) k={k}: formula {want} vs enumeration {got}",
                            s.i, s.j, t.i, t.j
                        )
                    });
                };
                for m in s.i..n {
                    let want = exact(same_level_ratio(n, s.i, s.j, m, k)?)?;
                    compare(
                        StateLoOm::new_unchecked(s.i, m),
                        want,
                        trans_same_level(n, s.i, s.j, m, k)?,
                    );
                }
                for t in index::descending(n).filter(|t| t.i > s.i) {
                    let want = exact(improving_ratio(n, s.i, s.j, t.i, t.j, k)?)?;
                    compare(t, want, trans_improving(n, s.i, s.j, t.i, t.j, k)?);
                }
            }
        }
        for i in 0..n {
            for k in 1..=n {
                let d = level_averaged_transitions(n, i, k)?;
                let (up, same) = lo_level_ratios(n, i, k)?;
                let above = (i + 1..=n).fold(BigRational::zero(), |acc, l| acc + d.probability(&l));
                let (up, same) = (up.exact()?, same.exact()?);
                f.check(up == above, 0.0, || {
                    format!("n={n} level {i} k={k}: p_up {up} vs {above}")
                });
                let stay = d.probability(&i);
                f.check(same == stay, 0.0, || {
                    format!("n={n} level {i} k={k}: same {same} vs {stay}")
                });
                for l in i + 1..=n {
                    let got = rational_to_f64(&d.probability(&l));
                    let err = (trans_lo_level(n, i, l, k)? - got).abs();
                    f.check(err <= FLOAT_TOL, err, || {
                        format!("n={n} level {i}->{l} k={k}: error {err:e}")
                    });
                }
            }
        }
        // The string kernel, from a few fixed strings.
        for mask in [0u64, 0x5555_5555 & ((1 << n) - 1), (1 << (n - 1)) - 1] {
            let x = BitString::from_mask(n, mask);
            for k in 1..=n {
                let d = enumerate_transitions(&x, k)?;
                let mut by_state = std::collections::BTreeMap::<StateLoOm, f64>::new();
                for y in 0..1u64 << n {
                    *by_state.entry(mask_fitness(n, y)).or_default() +=
                        trans_bitstring(&x, &BitString::from_mask(n, y), k)?;
                }
                for (t, p) in by_state {
                    let err = (p - rational_to_f64(&d.probability(&t))).abs();
                    f.check(err <= FLOAT_TOL, err, || {
                        format!("n={n} x={x} k={k} -> ({},{})", t.i, t.j)
                    });
                }
            }
        }
    }
    Ok(f)
}

fn rel_error(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        return if a == b { 0.0 } else { f64::INFINITY };
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn perturbed(table: &RuntimeTable, perturbation: f64) -> Vec<f64> {
    table
        .values()
        .iter()
        .map(|v| v * (1.0 + perturbation))
        .collect()
}

/// Solver tables of the four benchmarks (and the level-policy setting)
/// against full-chain hitting times, within [`RUNTIME_RTOL`].
pub fn runtimes(max_n: usize, perturbation: f64) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("runtimes");
    for n in 1..=max_n.min(oracle::CHAIN_CAP) {
        let mut cases = Vec::new();
        for setting in Setting::BENCHMARKS {
            let r = solve(setting, n, &Portfolio::full(n))?;
            cases.push((setting, setting, r.policy, r.runtimes));
        }
        let (level_policy, _) = compute_s_lo_optimal_policy(n, &Portfolio::full(n))?;
        let table = evaluate(Setting::LO_NONSTRICT_LEVEL, n, &level_policy)?;
        cases.push((
            Setting::LO_NONSTRICT_LEVEL,
            Setting::LO_NONSTRICT,
            level_policy,
            table,
        ));

        for (label, chain_setting, policy, table) in cases {
            let chain = full_chain_hitting_times(n, chain_setting, &policy)?;
            // (LO, OM) values are means over a uniform member string.
            let want = match table.state_space() {
                StateSpace::Bits => chain,
                _ => chain.average_bits_into_loom()?,
            };
            for (t, (a, b)) in perturbed(&table, perturbation)
                .iter()
                .zip(want.values())
                .enumerate()
            {
                let err = rel_error(*a, *b);
                f.check(err <= RUNTIME_RTOL, err, || {
                    format!("{label} n={n} entry {t}: solver {a} vs chain {b}")
                });
            }
        }
    }
    Ok(f)
}

/// Solver radii against exhaustive per-state argmin in exact arithmetic.
pub fn argmin(max_n: usize) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("argmin");
    for n in 1..=max_n.min(oracle::EXACT_CHAIN_MAX) {
        for setting in [
            Setting::LOOM_NONSTRICT,
            Setting::LO_STRICT,
            Setting::LOOM_STRICT_X,
        ] {
            let report = solve(setting, n, &Portfolio::full(n))?;
            let brute = exhaustive_argmin(n, setting, &report.policy)?;
            let chosen: Vec<usize> = match setting.state_space {
                StateSpace::Bits => (0..(1u64 << n) - 1)
                    .map(|m| report.policy.radius_for_mask(m))
                    .collect::<std::result::Result<_, _>>()?,
                _ => report.policy.loom_radii()?,
            };
            for (u, (a, b)) in chosen.iter().zip(&brute).enumerate() {
                f.check(a == b, 0.0, || {
                    format!("{setting} n={n} unit {u}: solver k={a}, exhaustive k={b}")
                });
            }
        }
    }
    Ok(f)
}

/// The always-one total at n = 2 is 7/4, exactly by the chain and within
/// rounding by the solver.
pub fn small_totals(perturbation: f64) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("totals");
    let policy = always_one_policy(2)?;
    let e = oracle::full_chain_hitting_times_exact(2, Setting::LOOM_NONSTRICT, &policy)?;
    let sum = e
        .iter()
        .try_fold(BigRational::zero(), |acc, v| v.as_ref().map(|v| acc + v));
    let want = BigRational::new(7.into(), 4.into());
    let chain_total = sum.map(|s| s / BigRational::from_integer(4.into()));
    f.check(chain_total.as_ref() == Some(&want), 0.0, || {
        format!("chain total {chain_total:?}, want 7/4")
    });

    let table = evaluate(Setting::LOOM_NONSTRICT, 2, &policy)?;
    let total =
        total_with_convention(&table, TotalConvention::Uniform)?.value() * (1.0 + perturbation);
    let err = (total - 1.75).abs();
    f.check(err <= 1e-15, err, || {
        format!("solver total {total}, want 1.75")
    });
    Ok(f)
}

/// Start probabilities sum to exactly one.
pub fn start_distribution(max_n: usize) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("start_distribution");
    for n in 1..=max_n {
        let mut total = BigRational::zero();
        for s in index::descending(n) {
            total += start_probability_exact(n, s.i, s.j)?;
        }
        f.check(total.is_one(), 0.0, || format!("n={n}: sum {total}"));
    }
    Ok(f)
}

/// Every transition distribution sums to one within 1e-9 and targets only
/// acceptable states.
pub fn normalisation(max_n: usize) -> Result<FamilyReport> {
    let mut f = FamilyReport::new("normalisation");
    for n in 1..=max_n {
        let table = BinomialTable::new(n);
        for setting in Setting::BENCHMARKS {
            for s in index::descending(n).skip(1) {
                for k in 1..=n {
                    let d = full_distribution(setting, n, s, k, &table)?;
                    let sum: f64 =
                        d.entries.iter().map(|(_, p)| p).sum::<f64>() + d.stay_probability;
                    let in_range = d
                        .entries
                        .iter()
                        .all(|(t, p)| (0.0..=1.0).contains(p) && setting.accepts(s, *t));
                    let err = (sum - 1.0).abs();
                    f.check(err <= 1e-9 && in_range, err, || {
                        format!("{setting} n={n} ({},{}) k={k}: sum {sum}", s.i, s.j)
                    });
                }
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let opts = ValidateOptions {
            max_n: 4,
            argmin_max_n: 3,
            normalisation_max_n: 5,
            start_max_n: 8,
            perturbation: 0.0,
        };
        let report = run(&opts).unwrap();
        assert!(report.ok, "{report:#?}");
        assert!(report.families.len() >= 4);
    }

    #[test]
    fn perturbation_is_caught() {
        let f = runtimes(3, 1e-6).unwrap();
        assert!(!f.ok && f.failure_count > 0);
        assert!(!small_totals(1e-6).unwrap().ok);
    }
}
