//! Binomial coefficients in three flavours: exact big integers (the oracle
//! path), natural logarithms, and a precomputed `f64` table for the solvers.
//!
//! Out-of-range arguments (`k < 0`, `k > n`, `n < 0`) give zero instead of an
//! error, so transition formulas collapse to probability zero on their own.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::{CoreError, Result};

/// Exact non-negative integer, used for binomials far beyond `u128`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactInteger(pub BigUint);

impl ExactInteger {
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest `f64`; `+inf` once the value leaves the `f64` range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Natural log, accurate for any magnitude. `-inf` for zero.
    pub fn ln(&self) -> f64 {
        ln_biguint(&self.0)
    }
}

impl From<u64> for ExactInteger {
    fn from(v: u64) -> Self {
        ExactInteger(BigUint::from(v))
    }
}

fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY));
    }
    // Keep 64 significant bits; the dropped tail only perturbs the mantissa.
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    libm::log(top) + shift as f64 * LN_2
}

/// Natural log of a non-negative quantity, with an explicit zero flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogProb {
    log_value: f64,
    is_zero: bool,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb {
        log_value: 0.0,
        is_zero: true,
    };
    pub const ONE: LogProb = LogProb {
        log_value: 0.0,
        is_zero: false,
    };

    pub fn from_ln(log_value: f64) -> Self {
        LogProb {
            log_value,
            is_zero: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// The stored logarithm. Meaningless when [`is_zero`](Self::is_zero).
    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    pub fn value(&self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            libm::exp(self.log_value)
        }
    }
}

/// `C(n, k)` exactly; zero when `k < 0`, `k > n` or `n < 0`.
pub fn binomial(n: i64, k: i64) -> ExactInteger {
    if n < 0 || k < 0 || k > n {
        return ExactInteger(BigUint::zero());
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    // acc = C(n - k + t, t) after step t; each division is exact.
    for t in 1..=k {
        acc *= n - k + t;
        acc /= t;
    }
    ExactInteger(acc)
}

/// `ln C(n, k)` via the exact value.
pub fn ln_binomial(n: i64, k: i64) -> LogProb {
    let c = binomial(n, k);
    if c.is_zero() {
        LogProb::ZERO
    } else {
        LogProb::from_ln(c.ln())
    }
}

/// `prod C(a,b) over numerator / prod C(a,b) over denominator`, computed in
/// log space.
///
/// Returns `0` as soon as a numerator factor vanishes. A vanishing
/// denominator with a non-zero numerator is an ill-formed ratio.
pub fn prob_ratio(numerator: &[(i64, i64)], denominator: &[(i64, i64)]) -> Result<f64> {
    let mut ln = 0.0;
    for &(a, b) in numerator {
        let t = ln_binomial(a, b);
        if t.is_zero() {
            return Ok(0.0);
        }
        ln += t.log_value();
    }
    for &(a, b) in denominator {
        let t = ln_binomial(a, b);
        if t.is_zero() {
            return Err(CoreError::ZeroDenominator);
        }
        ln -= t.log_value();
    }
    let p = libm::exp(ln);
    if p > 1.0 + 1e-9 {
        return Err(CoreError::NotAProbability(p));
    }
    Ok(p.min(1.0))
}

/// The same ratio as [`prob_ratio`], as an exact rational.
pub fn exact_ratio(numerator: &[(i64, i64)], denominator: &[(i64, i64)]) -> Result<BigRational> {
    let mut num = BigUint::one();
    for &(a, b) in numerator {
        num *= binomial(a, b).0;
    }
    if num.is_zero() {
        return Ok(BigRational::zero());
    }
    let mut den = BigUint::one();
    for &(a, b) in denominator {
        den *= binomial(a, b).0;
    }
    if den.is_zero() {
        return Err(CoreError::ZeroDenominator);
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// A product of at most three binomials over a product of at most two.
///
/// Unused slots hold `(0, 0)`, which is `C(0,0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinomialRatio {
    pub numerator: [(i64, i64); 3],
    pub denominator: [(i64, i64); 2],
}

impl BinomialRatio {
    pub fn new(numerator: &[(i64, i64)], denominator: &[(i64, i64)]) -> Self {
        assert!(numerator.len() <= 3 && denominator.len() <= 2);
        let mut r = BinomialRatio {
            numerator: [(0, 0); 3],
            denominator: [(0, 0); 2],
        };
        r.numerator[..numerator.len()].copy_from_slice(numerator);
        r.denominator[..denominator.len()].copy_from_slice(denominator);
        r
    }

    pub fn probability(&self) -> Result<f64> {
        prob_ratio(&self.numerator, &self.denominator)
    }

    pub fn exact(&self) -> Result<BigRational> {
        exact_ratio(&self.numerator, &self.denominator)
    }
}

/// Every `C(a, b)` with `0 <= b <= a <= max_n`, rounded once from the exact
/// integer, plus its natural log.
///
/// `C(n, k)` fits in an `f64` up to `n = 1029`; beyond that the value slot
/// holds `+inf` and [`ratio`](Self::ratio) switches to the log slots.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    max_n: usize,
    values: Vec<f64>,
    logs: Vec<f64>,
    all_finite: bool,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> Self {
        let len = (max_n + 1) * (max_n + 2) / 2;
        let mut values = Vec::with_capacity(len);
        let mut logs = Vec::with_capacity(len);
        let mut row: Vec<BigUint> = alloc::vec![BigUint::one()];
        for a in 0..=max_n {
            if a > 0 {
                let mut next = Vec::with_capacity(a + 1);
                next.push(BigUint::one());
                for b in 1..a {
                    next.push(&row[b - 1] + &row[b]);
                }
                next.push(BigUint::one());
                row = next;
            }
            for c in &row {
                values.push(c.to_f64().unwrap_or(f64::INFINITY));
                logs.push(ln_biguint(c));
            }
        }
        let all_finite = values.iter().all(|v| v.is_finite());
        BinomialTable {
            max_n,
            values,
            logs,
            all_finite,
        }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    #[inline]
    fn slot(a: usize, b: usize) -> usize {
        a * (a + 1) / 2 + b
    }

    /// `C(a, b)` as `f64`; zero out of range.
    #[inline]
    pub fn get(&self, a: i64, b: i64) -> f64 {
        if a < 0 || b < 0 || b > a {
            return 0.0;
        }
        debug_assert!(a as usize <= self.max_n, "binomial row {a} beyond table");
        self.values[Self::slot(a as usize, b as usize)]
    }

    pub fn ln(&self, a: i64, b: i64) -> LogProb {
        if a < 0 || b < 0 || b > a {
            return LogProb::ZERO;
        }
        LogProb::from_ln(self.logs[Self::slot(a as usize, b as usize)])
    }

    /// Evaluates a [`BinomialRatio`]; `0` if any numerator factor is zero.
    pub fn ratio(&self, r: &BinomialRatio) -> Result<f64> {
        if r.numerator.iter().any(|&(a, b)| self.get(a, b) == 0.0) {
            return Ok(0.0);
        }
        if r.denominator.iter().any(|&(a, b)| self.get(a, b) == 0.0) {
            return Err(CoreError::ZeroDenominator);
        }
        if self.all_finite {
            let [n0, n1, n2] = r.numerator;
            let [d0, d1] = r.denominator;
            // Divide early so intermediate products stay in range.
            let v = (self.get(n0.0, n0.1) / self.get(d0.0, d0.1))
                * (self.get(n1.0, n1.1) / self.get(d1.0, d1.1))
                * self.get(n2.0, n2.1);
            return Ok(v);
        }
        let mut ln = 0.0;
        for &(a, b) in &r.numerator {
            ln += self.ln(a, b).log_value();
        }
        for &(a, b) in &r.denominator {
            ln -= self.ln(a, b).log_value();
        }
        Ok(libm::exp(ln))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2), ExactInteger::from(10));
        assert_eq!(binomial(0, 0), ExactInteger::from(1));
        assert!(binomial(7, 9).is_zero());
        assert!(binomial(7, -1).is_zero());
        assert!(binomial(-1, 0).is_zero());
    }

    #[test]
    fn ln_binomial_examples() {
        let l = ln_binomial(5, 2);
        assert!(!l.is_zero());
        assert!((l.log_value() - libm::log(10.0)).abs() < 1e-15);
        assert!(ln_binomial(4, 5).is_zero());

        // ln C(256,128) against an independent product of ratios
        // prod_{t=1}^{128} (128 + t) / t accumulated in log space.
        let mut reference = 0.0;
        for t in 1..=128u32 {
            reference += libm::log((128 + t) as f64) - libm::log(t as f64);
        }
        let got = ln_binomial(256, 128).log_value();
        assert!(rel(got, reference) < 1e-12, "{got} vs {reference}");
    }

    #[test]
    fn exp_ln_matches_exact_up_to_64() {
        for n in 0..=64i64 {
            for k in 0..=n {
                let exact = binomial(n, k).to_f64();
                let via_ln = ln_binomial(n, k).value();
                assert!(rel(via_ln, exact) < 1e-12, "C({n},{k})");
            }
        }
    }

    #[test]
    fn pascal_identity_to_128() {
        for n in 1..=128i64 {
            for k in 1..=n {
                let lhs = binomial(n, k).0;
                let rhs = binomial(n - 1, k - 1).0 + binomial(n - 1, k).0;
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn ratio_examples() {
        let p = prob_ratio(&[(1, 1), (1, 1)], &[(4, 2)]).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(
            exact_ratio(&[(1, 1), (1, 1)], &[(4, 2)]).unwrap(),
            BigRational::new(1.into(), 6.into())
        );
        assert_eq!(prob_ratio(&[(3, 0)], &[(3, 0)]).unwrap(), 1.0);
        assert_eq!(prob_ratio(&[(2, 3)], &[(4, 1)]).unwrap(), 0.0);
        assert_eq!(
            prob_ratio(&[(2, 1)], &[(1, 3)]),
            Err(CoreError::ZeroDenominator)
        );
        assert!(matches!(
            prob_ratio(&[(10, 5)], &[(3, 1)]),
            Err(CoreError::NotAProbability(_))
        ));
    }

    #[test]
    fn table_agrees_with_exact() {
        let t = BinomialTable::new(300);
        for (a, b) in [(0, 0), (10, 3), (64, 32), (256, 128), (300, 150), (300, 1)] {
            let exact = binomial(a, b).to_f64();
            assert!(rel(t.get(a, b), exact) <= f64::EPSILON, "C({a},{b})");
            let (got, want) = (t.ln(a, b).log_value(), binomial(a, b).ln());
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
        }
        assert_eq!(t.get(5, 6), 0.0);
        assert_eq!(t.get(-1, 0), 0.0);
        let r = BinomialRatio::new(&[(255, 127), (1, 1)], &[(256, 128)]);
        assert!(rel(t.ratio(&r).unwrap(), 0.5) < 1e-14);
        assert!(rel(r.probability().unwrap(), 0.5) < 1e-12);
    }

    #[test]
    fn table_log_fallback_beyond_f64_range() {
        let t = BinomialTable::new(1100);
        assert!(t.get(1100, 550).is_infinite());
        let r = BinomialRatio::new(&[(1099, 549)], &[(1100, 550)]);
        assert!(rel(t.ratio(&r).unwrap(), 0.5) < 1e-10);
        let ln = binomial(1100, 550).ln();
        assert!(rel(t.ln(1100, 550).log_value(), ln) < 1e-14);
    }
}
