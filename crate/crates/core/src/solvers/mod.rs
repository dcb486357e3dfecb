//! Optimal (or fixed-point) radius policies and fixed-policy evaluation for
//! every setting.

use alloc::vec::Vec;

use crate::policy::{compute_s_lo_optimal_policy, Policy, Portfolio};
use crate::runtime::{
    total_expected_runtime, total_with_convention, ExtReal, RuntimeTable, TotalConvention,
};
use crate::state::{FitnessKind, SelectionRule, Setting, StateLoOm, StateSpace};
use crate::{CoreError, Result};

pub mod bitstring;
mod descending;
pub mod kernel;
pub mod linear;
pub mod lo_nonstrict;

pub use bitstring::{DEFAULT_BITS_CAP, HARD_BITS_CAP};
pub use linear::{solve_linear_system, LinearSolution};
pub use lo_nonstrict::{solve_lo_level_system, LevelTrace, DEFAULT_MAX_SWEEPS};

use descending::Acceptance;
use kernel::Kernel;

/// Candidates within this relative distance of the best count as ties and
/// lose to the smaller radius.
pub const TIE_RTOL: f64 = 1e-12;

#[inline]
pub(crate) fn better(v: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) if !b.is_finite() => v < b,
        Some(b) => v < b - TIE_RTOL * b.abs(),
    }
}

#[derive(Clone, Copy)]
pub(crate) enum RadiusChoice<'a> {
    Optimise(&'a Portfolio),
    /// One radius per non-optimal state, dense (LO, OM) layout.
    Fixed(&'a [usize]),
}

/// Result of a solve: the policy, the per-state runtimes and the total.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub setting: Setting,
    pub policy: Policy,
    pub runtimes: RuntimeTable,
    /// Law-of-total-expectation runtime from a uniform start.
    pub total: ExtReal,
    /// Heuristic radius updates per level (level systems only).
    pub per_level_iterations: Option<Vec<usize>>,
    /// Largest linear-solve residual per level (level systems only).
    pub residuals: Option<Vec<f64>>,
    /// Start-weighted level runtime after every solve (heuristic only).
    pub sweep_totals: Option<Vec<Vec<f64>>>,
}

impl SolveReport {
    fn plain(setting: Setting, policy: Policy, runtimes: RuntimeTable) -> Result<Self> {
        let total = total_expected_runtime(&runtimes)?;
        Ok(SolveReport {
            setting,
            policy,
            runtimes,
            total,
            per_level_iterations: None,
            residuals: None,
            sweep_totals: None,
        })
    }

    pub fn total_with(&self, convention: TotalConvention) -> Result<ExtReal> {
        total_with_convention(&self.runtimes, convention)
    }

    fn check_finite(self, portfolio: &Portfolio) -> Result<Self> {
        if portfolio.contains(1) && !self.total.is_finite() {
            return Err(CoreError::InfiniteTotal);
        }
        Ok(self)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(CoreError::EmptyProblem)
    } else {
        Ok(())
    }
}

fn check_portfolio(n: usize, portfolio: &Portfolio) -> Result<()> {
    check_n(n)?;
    if let Some(&k) = portfolio.radii().iter().find(|&&k| k > n) {
        return Err(CoreError::InvalidRadius { n, k });
    }
    Ok(())
}

fn loom_report(setting: Setting, n: usize, e: Vec<f64>, radii: Vec<usize>) -> Result<SolveReport> {
    SolveReport::plain(
        setting,
        Policy::from_radii(n, StateSpace::LoOm, radii)?,
        RuntimeTable::new(n, StateSpace::LoOm, e)?,
    )
}

/// Radii of a (LO, OM) or level policy laid out over (LO, OM) states.
fn loom_radii_of(n: usize, policy: &Policy) -> Result<Vec<usize>> {
    if policy.n() != n {
        return Err(CoreError::LengthMismatch(n, policy.n()));
    }
    if policy.state_space() == StateSpace::Bits {
        return Err(CoreError::PolicyMismatch {
            expected: "loom or lo".into(),
            found: "x".into(),
        });
    }
    policy.loom_radii()
}

/// (LO, OM) fitness, non-strict selection: optimal radius per (LO, OM)
/// state by one pass in descending lex order.
pub fn solve_loom_nonstrict(n: usize, portfolio: &Portfolio) -> Result<SolveReport> {
    check_portfolio(n, portfolio)?;
    let (e, radii) = descending::run(
        &Kernel::new(n),
        Acceptance::LoOmNonStrict,
        RadiusChoice::Optimise(portfolio),
    )?;
    loom_report(Setting::LOOM_NONSTRICT, n, e, radii)?.check_finite(portfolio)
}

/// Runtimes of a fixed (LO, OM) or level policy under (LO, OM) fitness with
/// non-strict selection.
pub fn evaluate_policy_loom(n: usize, policy: &Policy) -> Result<RuntimeTable> {
    check_n(n)?;
    let fixed = loom_radii_of(n, policy)?;
    let (e, _) = descending::run(
        &Kernel::new(n),
        Acceptance::LoOmNonStrict,
        RadiusChoice::Fixed(&fixed),
    )?;
    RuntimeTable::new(n, StateSpace::LoOm, e)
}

/// LeadingOnes fitness, strict selection: optimal radius per (LO, OM)
/// state.
pub fn solve_lo_strict(n: usize, portfolio: &Portfolio) -> Result<SolveReport> {
    check_portfolio(n, portfolio)?;
    let (e, radii) = descending::run(
        &Kernel::new(n),
        Acceptance::LoStrict,
        RadiusChoice::Optimise(portfolio),
    )?;
    loom_report(Setting::LO_STRICT, n, e, radii)?.check_finite(portfolio)
}

pub fn evaluate_policy_lo_strict(n: usize, policy: &Policy) -> Result<RuntimeTable> {
    check_n(n)?;
    let fixed = loom_radii_of(n, policy)?;
    let (e, _) = descending::run(
        &Kernel::new(n),
        Acceptance::LoStrict,
        RadiusChoice::Fixed(&fixed),
    )?;
    RuntimeTable::new(n, StateSpace::LoOm, e)
}

/// LeadingOnes fitness, non-strict selection: the per-level sweep
/// heuristic. The result is a fixed point of the sweep, not a proven
/// optimum.
pub fn solve_lo_nonstrict_heuristic(
    n: usize,
    portfolio: &Portfolio,
    max_sweeps: usize,
) -> Result<SolveReport> {
    check_portfolio(n, portfolio)?;
    if max_sweeps == 0 {
        return Err(CoreError::Unsupported(
            "max_sweeps must be at least 1".into(),
        ));
    }
    let out = lo_nonstrict::run(
        &Kernel::new(n),
        RadiusChoice::Optimise(portfolio),
        max_sweeps,
    )?;
    let mut report = loom_report(Setting::LO_NONSTRICT, n, out.runtimes, out.radii)?;
    report.per_level_iterations = Some(out.trace.iterations);
    report.residuals = Some(out.trace.residuals);
    report.sweep_totals = Some(out.trace.sweep_totals);
    report.check_finite(portfolio)
}

/// Runtimes of a fixed (LO, OM) or level policy under LeadingOnes fitness
/// with non-strict selection.
pub fn evaluate_policy_lo_nonstrict(n: usize, policy: &Policy) -> Result<RuntimeTable> {
    check_n(n)?;
    let fixed = loom_radii_of(n, policy)?;
    let out = lo_nonstrict::run(
        &Kernel::new(n),
        RadiusChoice::Fixed(&fixed),
        DEFAULT_MAX_SWEEPS,
    )?;
    RuntimeTable::new(n, StateSpace::LoOm, out.runtimes)
}

/// (LO, OM) fitness, strict selection, one radius per string. Fails above
/// [`DEFAULT_BITS_CAP`].
pub fn solve_bitstring_strict(n: usize, portfolio: &Portfolio) -> Result<SolveReport> {
    solve_bitstring_strict_with_cap(n, portfolio, DEFAULT_BITS_CAP)
}

/// As [`solve_bitstring_strict`] with a configurable cap (at most
/// [`HARD_BITS_CAP`]).
pub fn solve_bitstring_strict_with_cap(
    n: usize,
    portfolio: &Portfolio,
    cap: usize,
) -> Result<SolveReport> {
    bitstring::check_cap(n, cap)?;
    check_portfolio(n, portfolio)?;
    let (e, mut radii) = bitstring::run(n, bitstring::BitsChoice::Optimise(portfolio), cap)?;
    radii.truncate((1 << n) - 1);
    SolveReport::plain(
        Setting::LOOM_STRICT_X,
        Policy::from_radii(n, StateSpace::Bits, radii)?,
        RuntimeTable::new(n, StateSpace::Bits, e)?,
    )?
    .check_finite(portfolio)
}

/// Runtimes of any policy under (LO, OM) fitness with strict selection,
/// per string.
pub fn evaluate_policy_bitstring(n: usize, policy: &Policy, cap: usize) -> Result<RuntimeTable> {
    bitstring::check_cap(n, cap)?;
    if policy.n() != n {
        return Err(CoreError::LengthMismatch(n, policy.n()));
    }
    let (e, _) = bitstring::run(n, bitstring::BitsChoice::Fixed(policy), cap)?;
    RuntimeTable::new(n, StateSpace::Bits, e)
}

/// (LO, OM) states holding a string whose optimal radius under strict
/// selection differs from the state's optimal radius under non-strict
/// selection, in descending lex order.
pub fn compare_bitstring_vs_loom(n: usize) -> Result<Vec<StateLoOm>> {
    compare_bitstring_vs_loom_with_cap(n, DEFAULT_BITS_CAP)
}

pub fn compare_bitstring_vs_loom_with_cap(n: usize, cap: usize) -> Result<Vec<StateLoOm>> {
    let bits = solve_bitstring_strict_with_cap(n, &Portfolio::full(n), cap)?;
    let loom = solve_loom_nonstrict(n, &Portfolio::full(n))?;
    Ok(compare_reports(&bits, &loom))
}

/// The comparison of [`compare_bitstring_vs_loom`] on existing reports.
pub fn compare_reports(bits: &SolveReport, loom: &SolveReport) -> Vec<StateLoOm> {
    let n = bits.policy.n();
    let string_radii: Vec<usize> = (0..(1u64 << n) - 1)
        .map(|m| {
            bits.policy
                .radius_for_mask(m)
                .expect("complete string policy")
        })
        .collect();
    let loom_radii = loom.policy.loom_radii().expect("complete (LO, OM) policy");
    bitstring::differing_states(n, &string_radii, &loom_radii)
}

/// Solves any supported setting with default options.
pub fn solve(setting: Setting, n: usize, portfolio: &Portfolio) -> Result<SolveReport> {
    match setting {
        s if s == Setting::LOOM_NONSTRICT => solve_loom_nonstrict(n, portfolio),
        s if s == Setting::LOOM_STRICT_X => solve_bitstring_strict(n, portfolio),
        s if s == Setting::LO_NONSTRICT => {
            solve_lo_nonstrict_heuristic(n, portfolio, DEFAULT_MAX_SWEEPS)
        }
        s if s == Setting::LO_STRICT => solve_lo_strict(n, portfolio),
        s if s == Setting::LO_NONSTRICT_LEVEL => {
            check_portfolio(n, portfolio)?;
            let (policy, _) = compute_s_lo_optimal_policy(n, portfolio)?;
            let runtimes = evaluate_policy_lo_nonstrict(n, &policy)?;
            SolveReport::plain(setting, policy, runtimes)?.check_finite(portfolio)
        }
        s => Err(CoreError::UnsupportedSetting(alloc::format!(
            "no solver for {s}"
        ))),
    }
}

/// Evaluates a fixed policy in any setting. A level policy may drive an
/// (LO, OM) setting (broadcast over OM) and any coarser policy may drive
/// the string setting; finer policies than the setting allows are
/// rejected.
pub fn evaluate(setting: Setting, n: usize, policy: &Policy) -> Result<RuntimeTable> {
    let fits = matches!(
        (setting.state_space, policy.state_space()),
        (StateSpace::Bits, _)
            | (StateSpace::LoOm, StateSpace::LoOm | StateSpace::Level)
            | (StateSpace::Level, StateSpace::Level)
    );
    if !fits {
        return Err(CoreError::PolicyMismatch {
            expected: setting.state_space.name().into(),
            found: policy.state_space().name().into(),
        });
    }
    match (setting.fitness, setting.selection, setting.state_space) {
        (FitnessKind::LoOm, SelectionRule::Strict, _) => {
            evaluate_policy_bitstring(n, policy, DEFAULT_BITS_CAP)
        }
        (FitnessKind::LoOm, SelectionRule::NonStrict, _) => evaluate_policy_loom(n, policy),
        (FitnessKind::LeadingOnes, SelectionRule::Strict, _) => {
            evaluate_policy_lo_strict(n, policy)
        }
        (FitnessKind::LeadingOnes, SelectionRule::NonStrict, _) => {
            evaluate_policy_lo_nonstrict(n, policy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::always_one_policy;

    #[test]
    fn tie_rule() {
        assert!(better(1.0, None));
        assert!(better(1.0, Some(f64::INFINITY)));
        assert!(!better(1.0, Some(1.0 + 1e-14)));
        assert!(better(1.0, Some(1.0 + 1e-9)));
    }

    #[test]
    fn n2_always_one_total() {
        let t = evaluate_policy_loom(2, &always_one_policy(2).unwrap()).unwrap();
        assert!((total_expected_runtime(&t).unwrap().value() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn n4_optimal_total_is_35_over_8() {
        let r = solve_loom_nonstrict(4, &Portfolio::full(4)).unwrap();
        assert!((r.total.value() - 35.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_policies_are_rejected() {
        let bits = Policy::constant(3, StateSpace::Bits, 1).unwrap();
        assert!(matches!(
            evaluate(Setting::LOOM_NONSTRICT, 3, &bits),
            Err(CoreError::PolicyMismatch { .. })
        ));
        let loom = always_one_policy(3).unwrap();
        assert!(evaluate(Setting::LO_NONSTRICT_LEVEL, 3, &loom).is_err());
        assert!(evaluate(Setting::LOOM_STRICT_X, 3, &loom).is_ok());
    }

    #[test]
    fn string_solver_matches_broadcast_on_coarse_policy() {
        // Evaluating an (LO, OM) policy per string and averaging into states
        // gives the same totals as a string table.
        let n = 6;
        let p = always_one_policy(n).unwrap();
        let t = evaluate_policy_bitstring(n, &p, DEFAULT_BITS_CAP).unwrap();
        let avg = t.average_bits_into_loom().unwrap();
        let a = total_expected_runtime(&t).unwrap().value();
        let b = total_expected_runtime(&avg).unwrap().value();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
