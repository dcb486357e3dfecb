//! Expected remaining runtimes per state and their aggregation into a total
//! over the uniform start distribution.

use alloc::vec::Vec;
use core::fmt;

use crate::state::{index, start_probability, StateLoOm, StateSpace};
use crate::{CoreError, Result};

/// A non-negative real or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    /// Panics on NaN or negative input.
    pub fn new(v: f64) -> Self {
        assert!(v >= 0.0, "expected runtime must be non-negative, got {v}");
        ExtReal(v)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

/// How a runtime table is weighted into one number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum TotalConvention {
    /// Law of total expectation over a uniformly random start string.
    Uniform,
    /// As `Uniform`, but the start strings `1^i 0^{n-i}` (`i < n`, the
    /// states `s_{i,i}`) contribute nothing. The published figure
    /// coordinates follow this convention.
    #[default]
    OmitZeroTail,
}

impl TotalConvention {
    pub fn name(self) -> &'static str {
        match self {
            TotalConvention::Uniform => "uniform",
            TotalConvention::OmitZeroTail => "omit-zero-tail",
        }
    }
}

/// Expected remaining runtime of every state of one state space.
///
/// Layout of `values`:
/// - `Level`: index `i` for levels `0..=n`;
/// - `LoOm`: [`index::of`];
/// - `Bits`: the string's mask (`n <= 64`).
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeTable {
    n: usize,
    space: StateSpace,
    values: Vec<f64>,
}

impl RuntimeTable {
    pub fn new(n: usize, space: StateSpace, values: Vec<f64>) -> Result<Self> {
        let expected = Self::len_for(n, space)?;
        if values.len() != expected {
            return Err(CoreError::Unsupported(alloc::format!(
                "runtime table for {space} at n = {n} needs {expected} values, got {}",
                values.len()
            )));
        }
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        Ok(RuntimeTable { n, space, values })
    }

    fn len_for(n: usize, space: StateSpace) -> Result<usize> {
        Ok(match space {
            StateSpace::Level => n + 1,
            StateSpace::LoOm => index::count(n),
            StateSpace::Bits => {
                if n > 30 {
                    return Err(CoreError::CapExceeded { n, cap: 30 });
                }
                1usize << n
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn state_space(&self) -> StateSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self, i: usize) -> ExtReal {
        assert_eq!(self.space, StateSpace::Level);
        ExtReal(self.values[i])
    }

    pub fn loom(&self, s: StateLoOm) -> ExtReal {
        assert_eq!(self.space, StateSpace::LoOm);
        ExtReal(self.values[index::of(self.n, s.i, s.j)])
    }

    pub fn bits(&self, mask: u64) -> ExtReal {
        assert_eq!(self.space, StateSpace::Bits);
        ExtReal(self.values[mask as usize])
    }

    /// The non-optimal (LO, OM) state with the largest expected runtime,
    /// lex-largest on ties.
    pub fn worst_state(&self) -> Option<(StateLoOm, ExtReal)> {
        if self.space != StateSpace::LoOm {
            return None;
        }
        let mut best: Option<(StateLoOm, f64)> = None;
        for s in index::descending(self.n).skip(1) {
            let v = self.values[index::of(self.n, s.i, s.j)];
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((s, v));
            }
        }
        best.map(|(s, v)| (s, ExtReal(v)))
    }

    /// Averages a string table into (LO, OM) states with uniform weights.
    pub fn average_bits_into_loom(&self) -> Result<RuntimeTable> {
        if self.space != StateSpace::Bits {
            return Err(CoreError::PolicyMismatch {
                expected: "x".into(),
                found: self.space.name().into(),
            });
        }
        let n = self.n;
        let mut sum = alloc::vec![0.0; index::count(n)];
        let mut cnt = alloc::vec![0u64; index::count(n)];
        for (mask, v) in self.values.iter().enumerate() {
            let s = crate::state::mask_fitness(n, mask as u64);
            let idx = index::of(n, s.i, s.j);
            sum[idx] += v;
            cnt[idx] += 1;
        }
        let values = sum.iter().zip(&cnt).map(|(s, c)| s / *c as f64).collect();
        RuntimeTable::new(n, StateSpace::LoOm, values)
    }
}

/// Expected runtime from a uniformly random start under the chosen
/// convention. Zero-weight states never contribute, so an infinite value
/// there does not poison the sum.
pub fn total_with_convention(table: &RuntimeTable, convention: TotalConvention) -> Result<ExtReal> {
    let n = table.n;
    let omit = convention == TotalConvention::OmitZeroTail;
    let mut total = 0.0;
    match table.space {
        StateSpace::LoOm => {
            for s in index::descending(n) {
                if omit && s.i == s.j && s.i < n {
                    continue;
                }
                let w = start_probability(n, s.i, s.j)?;
                let v = table.values[index::of(n, s.i, s.j)];
                if w > 0.0 {
                    total += w * v;
                }
            }
        }
        StateSpace::Bits => {
            let w = libm::exp2(-(n as f64));
            for (mask, v) in table.values.iter().enumerate() {
                if omit && (mask + 1).is_power_of_two() && mask + 1 < (1 << n) {
                    continue;
                }
                total += w * v;
            }
        }
        StateSpace::Level => {
            if omit {
                return Err(CoreError::Unsupported(
                    "the omit-zero-tail convention needs OM information; evaluate the level \
                     policy on (LO, OM) states instead"
                        .into(),
                ));
            }
            for (i, v) in table.values.iter().enumerate() {
                // P(LO = i) = 2^{-(i+1)} for i < n, 2^{-n} for the optimum.
                let w = libm::exp2(-((i + 1).min(n) as f64));
                total += w * v;
            }
        }
    }
    Ok(ExtReal(total))
}

/// Law-of-total-expectation runtime from a uniformly random start string.
pub fn total_expected_runtime(table: &RuntimeTable) -> Result<ExtReal> {
    total_with_convention(table, TotalConvention::Uniform)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_table_totals_zero() {
        for space in [StateSpace::Level, StateSpace::LoOm, StateSpace::Bits] {
            let len = RuntimeTable::len_for(5, space).unwrap();
            let t = RuntimeTable::new(5, space, alloc::vec![0.0; len]).unwrap();
            assert_eq!(total_expected_runtime(&t).unwrap(), ExtReal::ZERO);
        }
    }

    #[test]
    fn n2_always_one_by_hand() {
        // 00 -> 3, 01 and 10 -> 2, 11 -> 0; masks are little-endian.
        let t = RuntimeTable::new(2, StateSpace::Bits, alloc::vec![3.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(total_expected_runtime(&t).unwrap().value(), 1.75);
        let loom = t.average_bits_into_loom().unwrap();
        assert_eq!(loom.loom(StateLoOm::new_unchecked(0, 1)).value(), 2.0);
        assert_eq!(total_expected_runtime(&loom).unwrap().value(), 1.75);
        // Without 00 and 10.
        assert_eq!(
            total_with_convention(&t, TotalConvention::OmitZeroTail)
                .unwrap()
                .value(),
            0.5
        );
        assert_eq!(
            total_with_convention(&loom, TotalConvention::OmitZeroTail)
                .unwrap()
                .value(),
            0.5
        );
    }

    #[test]
    fn infinity_propagates_only_with_positive_weight() {
        let mut v = alloc::vec![1.0; index::count(3)];
        v[index::of(3, 1, 1)] = f64::INFINITY;
        let t = RuntimeTable::new(3, StateSpace::LoOm, v).unwrap();
        assert!(!total_expected_runtime(&t).unwrap().is_finite());
        assert!(total_with_convention(&t, TotalConvention::OmitZeroTail)
            .unwrap()
            .is_finite());
        assert_eq!(t.worst_state().unwrap().0, StateLoOm::new_unchecked(1, 1));
    }

    #[test]
    fn level_tables_reject_omit_convention() {
        let t = RuntimeTable::new(3, StateSpace::Level, alloc::vec![1.0; 4]).unwrap();
        assert!(total_with_convention(&t, TotalConvention::OmitZeroTail).is_err());
        assert_eq!(
            total_expected_runtime(&t).unwrap().value(),
            0.5 + 0.25 + 0.125 + 0.125
        );
    }

    #[test]
    fn display_uses_inf_literal() {
        assert_eq!(alloc::format!("{}", ExtReal::INFINITY), "inf");
        assert_eq!(alloc::format!("{}", ExtReal::new(2.5)), "2.5");
    }
}
