//! Bit strings, fitness, the three state spaces and the closed-form
//! transition probabilities between (LO, OM) states.
//!
//! A state `s_{i,j}` with `i < n` holds every string `1^i 0 z` whose suffix
//! `z` (length `n - i - 1`) carries `j - i` ones. Along a run the suffix is
//! uniform given the state, so every probability below is an average over
//! the strings of the source state.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_rational::BigRational;

use crate::combinatorics::{binomial, BinomialRatio, BinomialTable};
use crate::{CoreError, Result};

/// Fixed-length bit string. Position `p` (1-based, as in LeadingOnes) is bit
/// `p - 1` of the backing words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: alloc::vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut x = Self::zeros(len);
        for p in 0..len {
            x.set(p, true);
        }
        x
    }

    /// Builds a string of length `len` from the low bits of `mask`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= 64, "mask form only exists for n <= 64");
        let mut x = Self::zeros(len);
        if len > 0 {
            x.words[0] = if len == 64 {
                mask
            } else {
                mask & ((1u64 << len) - 1)
            };
        }
        x
    }

    /// The inverse of [`from_mask`](Self::from_mask), for strings of at most
    /// 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut x = Self::zeros(s.len());
        for (p, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => x.set(p, true),
                _ => return Err(CoreError::InvalidBits(s.to_string())),
            }
        }
        if x.len == 0 {
            return Err(CoreError::InvalidBits(s.to_string()));
        }
        Ok(x)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, p: usize, v: bool) {
        let w = &mut self.words[p / 64];
        if v {
            *w |= 1 << (p % 64);
        } else {
            *w &= !(1 << (p % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, p: usize) {
        self.words[p / 64] ^= 1 << (p % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// LeadingOnes counted from position `from` (0-based) onwards, assuming
    /// every earlier bit is one.
    pub fn leading_ones_from(&self, from: usize) -> usize {
        let mut p = from;
        while p < self.len {
            let w = self.words[p / 64] >> (p % 64);
            let run = (!w).trailing_zeros() as usize;
            let avail = 64 - p % 64;
            if run < avail {
                return (p + run).min(self.len);
            }
            p += avail;
        }
        self.len
    }

    pub fn leading_ones(&self) -> usize {
        self.leading_ones_from(0)
    }

    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(CoreError::LengthMismatch(self.len, other.len));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.len {
            f.write_str(if self.get(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// LeadingOnes and OneMax of a string whose bits are the low `n` bits of
/// `mask`.
#[inline]
pub fn mask_fitness(n: usize, mask: u64) -> StateLoOm {
    let lo = ((!mask).trailing_zeros() as usize).min(n);
    StateLoOm::new_unchecked(lo, mask.count_ones() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FitnessKind {
    /// LeadingOnes alone.
    LeadingOnes,
    /// (LeadingOnes, OneMax) compared lexicographically.
    LoOm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectionRule {
    /// Accept offspring that are at least as good.
    NonStrict,
    /// Accept strictly better offspring only.
    Strict,
}

/// What the radius policy may look at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateSpace {
    /// LeadingOnes value only.
    Level,
    /// (LeadingOnes, OneMax) pair.
    LoOm,
    /// The whole bit string.
    Bits,
}

impl StateSpace {
    pub fn name(self) -> &'static str {
        match self {
            StateSpace::Level => "lo",
            StateSpace::LoOm => "loom",
            StateSpace::Bits => "x",
        }
    }
}

impl core::str::FromStr for StateSpace {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lo" => Ok(StateSpace::Level),
            "loom" => Ok(StateSpace::LoOm),
            "x" => Ok(StateSpace::Bits),
            _ => Err(CoreError::Unsupported(alloc::format!(
                "unknown state space '{s}'"
            ))),
        }
    }
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A (LO, OM) state. Valid iff `i <= j < n`, or `i = j = n` for the optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLoOm {
    pub i: usize,
    pub j: usize,
}

impl StateLoOm {
    pub fn new(n: usize, i: usize, j: usize) -> Result<Self> {
        if is_valid_state(n, i, j) {
            Ok(StateLoOm { i, j })
        } else {
            Err(CoreError::InvalidState { n, i, j })
        }
    }

    pub const fn new_unchecked(i: usize, j: usize) -> Self {
        StateLoOm { i, j }
    }

    pub fn optimum(n: usize) -> Self {
        StateLoOm { i: n, j: n }
    }

    pub fn is_optimum(&self, n: usize) -> bool {
        self.i == n
    }
}

impl fmt::Display for StateLoOm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s({},{})", self.i, self.j)
    }
}

pub fn is_valid_state(n: usize, i: usize, j: usize) -> bool {
    (i <= j && j < n) || (i == n && j == n)
}

/// LeadingOnes and OneMax of `x`.
pub fn evaluate_fitness(x: &BitString) -> StateLoOm {
    StateLoOm::new_unchecked(x.leading_ones(), x.count_ones())
}

/// Lexicographic order on (LO, OM) pairs: LO first, then OM.
pub fn lex_compare(a: StateLoOm, b: StateLoOm) -> Ordering {
    a.i.cmp(&b.i).then(a.j.cmp(&b.j))
}

/// Dense indexing of the valid (LO, OM) states in ascending lex order; the
/// optimum is the last index.
pub mod index {
    use super::StateLoOm;

    /// Number of non-optimal states, `n (n + 1) / 2`.
    #[inline]
    pub const fn non_optimal(n: usize) -> usize {
        n * (n + 1) / 2
    }

    /// All states including the optimum.
    #[inline]
    pub const fn count(n: usize) -> usize {
        non_optimal(n) + 1
    }

    /// Index of the first state of level `i`.
    #[inline]
    pub const fn level_offset(n: usize, i: usize) -> usize {
        i * n - i * (i.saturating_sub(1)) / 2
    }

    #[inline]
    pub const fn of(n: usize, i: usize, j: usize) -> usize {
        if i == n {
            non_optimal(n)
        } else {
            level_offset(n, i) + (j - i)
        }
    }

    pub fn state(n: usize, idx: usize) -> StateLoOm {
        if idx == non_optimal(n) {
            return StateLoOm::optimum(n);
        }
        let mut i = 0;
        while level_offset(n, i + 1) <= idx {
            i += 1;
        }
        StateLoOm::new_unchecked(i, i + idx - level_offset(n, i))
    }

    /// All states in descending lex order, optimum first.
    pub fn descending(n: usize) -> impl Iterator<Item = StateLoOm> {
        core::iter::once(StateLoOm::optimum(n)).chain(
            (0..n)
                .rev()
                .flat_map(move |i| (i..n).rev().map(move |j| StateLoOm::new_unchecked(i, j))),
        )
    }
}

/// One benchmark configuration: fitness, selection and policy state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Setting {
    pub fitness: FitnessKind,
    pub selection: SelectionRule,
    pub state_space: StateSpace,
}

impl Setting {
    /// (LO, OM) fitness, non-strict selection, radius from (LO, OM).
    pub const LOOM_NONSTRICT: Setting = Setting {
        fitness: FitnessKind::LoOm,
        selection: SelectionRule::NonStrict,
        state_space: StateSpace::LoOm,
    };
    /// (LO, OM) fitness, strict selection, radius from the bit string.
    pub const LOOM_STRICT_X: Setting = Setting {
        fitness: FitnessKind::LoOm,
        selection: SelectionRule::Strict,
        state_space: StateSpace::Bits,
    };
    /// LeadingOnes fitness, non-strict selection, radius from (LO, OM).
    pub const LO_NONSTRICT: Setting = Setting {
        fitness: FitnessKind::LeadingOnes,
        selection: SelectionRule::NonStrict,
        state_space: StateSpace::LoOm,
    };
    /// LeadingOnes fitness, strict selection, radius from (LO, OM).
    pub const LO_STRICT: Setting = Setting {
        fitness: FitnessKind::LeadingOnes,
        selection: SelectionRule::Strict,
        state_space: StateSpace::LoOm,
    };
    /// (LO, OM) fitness driven by a LeadingOnes-only policy.
    pub const LOOM_NONSTRICT_LEVEL: Setting = Setting {
        fitness: FitnessKind::LoOm,
        selection: SelectionRule::NonStrict,
        state_space: StateSpace::Level,
    };
    /// LeadingOnes fitness driven by a LeadingOnes-only policy.
    pub const LO_NONSTRICT_LEVEL: Setting = Setting {
        fitness: FitnessKind::LeadingOnes,
        selection: SelectionRule::NonStrict,
        state_space: StateSpace::Level,
    };

    pub const ALL: [Setting; 6] = [
        Self::LOOM_NONSTRICT,
        Self::LOOM_STRICT_X,
        Self::LO_NONSTRICT,
        Self::LO_STRICT,
        Self::LOOM_NONSTRICT_LEVEL,
        Self::LO_NONSTRICT_LEVEL,
    ];

    /// The four benchmarks.
    pub const BENCHMARKS: [Setting; 4] = [
        Self::LOOM_NONSTRICT,
        Self::LOOM_STRICT_X,
        Self::LO_NONSTRICT,
        Self::LO_STRICT,
    ];

    pub fn new(
        fitness: FitnessKind,
        selection: SelectionRule,
        state_space: StateSpace,
    ) -> Result<Self> {
        let s = Setting {
            fitness,
            selection,
            state_space,
        };
        if Self::ALL.contains(&s) {
            Ok(s)
        } else {
            Err(CoreError::UnsupportedSetting(s.to_string()))
        }
    }

    /// CLI name of the setting.
    pub fn label(&self) -> String {
        let fit = match self.fitness {
            FitnessKind::LoOm => "loom",
            FitnessKind::LeadingOnes => "lo",
        };
        let sel = match self.selection {
            SelectionRule::NonStrict => "nonstrict",
            SelectionRule::Strict => "strict",
        };
        let mut s = alloc::format!("{fit}-{sel}");
        match self.state_space {
            StateSpace::Bits => s.push_str("-x"),
            StateSpace::Level => s.push_str("-level"),
            StateSpace::LoOm => {}
        }
        s
    }

    /// Whether an offspring in `to` replaces a parent in `from`.
    #[inline]
    pub fn accepts(&self, from: StateLoOm, to: StateLoOm) -> bool {
        match (self.fitness, self.selection) {
            (FitnessKind::LoOm, SelectionRule::NonStrict) => {
                lex_compare(to, from) != Ordering::Less
            }
            (FitnessKind::LoOm, SelectionRule::Strict) => {
                lex_compare(to, from) == Ordering::Greater
            }
            (FitnessKind::LeadingOnes, SelectionRule::NonStrict) => to.i >= from.i,
            (FitnessKind::LeadingOnes, SelectionRule::Strict) => to.i > from.i,
        }
    }
}

impl core::str::FromStr for Setting {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| CoreError::UnsupportedSetting(s.into()))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_source(n: usize, i: usize, j: usize) -> Result<()> {
    if i < n && is_valid_state(n, i, j) {
        Ok(())
    } else {
        Err(CoreError::InvalidState { n, i, j })
    }
}

fn check_radius(n: usize, k: usize) -> Result<()> {
    if (1..=n).contains(&k) {
        Ok(())
    } else {
        Err(CoreError::InvalidRadius { n, k })
    }
}

/// `p_{i,j}^{i,m}(k)` as a binomial ratio, `None` when `m - j + k` is odd
/// or the flip counts leave their ranges.
///
/// No bit of `1^i 0` may flip; `k0` zeros and `k1 = k - k0` ones of the
/// suffix flip with `k0 - k1 = m - j`.
pub fn same_level_ratio(
    n: usize,
    i: usize,
    j: usize,
    m: usize,
    k: usize,
) -> Result<Option<BinomialRatio>> {
    check_source(n, i, j)?;
    check_radius(n, k)?;
    if m < i || m >= n {
        return Err(CoreError::InvalidState { n, i, j: m });
    }
    let (n, i, j, m, k) = (n as i64, i as i64, j as i64, m as i64, k as i64);
    let twice_k0 = m - j + k;
    if twice_k0 % 2 != 0 || twice_k0 < 0 {
        return Ok(None);
    }
    let k0 = twice_k0 / 2;
    let k1 = k - k0;
    if k1 < 0 || k0 > n - j - 1 || k1 > j - i {
        return Ok(None);
    }
    Ok(Some(BinomialRatio::new(
        &[(n - j - 1, k0), (j - i, k1)],
        &[(n, k)],
    )))
}

/// `p_{i,j}^{l,m}(k)` for `l > i` as a binomial ratio.
///
/// Bit `i + 1` (a zero) flips, the other `k - 1` flips hit the suffix with
/// `k0 = (m - j + k - 2) / 2` zeros, and the new suffix must read
/// `1^{l-i-1} 0` at its front. For `l = n` the front condition is the whole
/// suffix and only `m = n` is possible.
pub fn improving_ratio(
    n: usize,
    i: usize,
    j: usize,
    l: usize,
    m: usize,
    k: usize,
) -> Result<Option<BinomialRatio>> {
    check_source(n, i, j)?;
    check_radius(n, k)?;
    if l <= i || !is_valid_state(n, l, m) {
        return Err(CoreError::InvalidState { n, i: l, j: m });
    }
    let (n, i, j, l, m, k) = (n as i64, i as i64, j as i64, l as i64, m as i64, k as i64);
    let twice_k0 = m - j + k - 2;
    if twice_k0 % 2 != 0 || twice_k0 < 0 {
        return Ok(None);
    }
    let k0 = twice_k0 / 2;
    let k1 = k - 1 - k0;
    if k1 < 0 || k0 > n - j - 1 || k1 > j - i {
        return Ok(None);
    }
    let front = if l == n {
        // C(0,0)/C(0,0): every suffix bit is one.
        [(0, 0), (0, 0)]
    } else {
        [(n - l - 1, m - l), (n - i - 1, m - i - 1)]
    };
    Ok(Some(BinomialRatio::new(
        &[(n - j - 1, k0), (j - i, k1), front[0]],
        &[(n, k), front[1]],
    )))
}

/// Probability that a `k`-flip from state `(i, j)` lands in `(i, m)`.
pub fn trans_same_level(n: usize, i: usize, j: usize, m: usize, k: usize) -> Result<f64> {
    match same_level_ratio(n, i, j, m, k)? {
        Some(r) => r.probability(),
        None => Ok(0.0),
    }
}

/// Probability that a `k`-flip from state `(i, j)` lands in `(l, m)`, `l > i`.
pub fn trans_improving(n: usize, i: usize, j: usize, l: usize, m: usize, k: usize) -> Result<f64> {
    match improving_ratio(n, i, j, l, m, k)? {
        Some(r) => r.probability(),
        None => Ok(0.0),
    }
}

/// `p_{x->y}(k)`: `1/C(n,k)` when `x` and `y` differ in exactly `k` bits.
pub fn trans_bitstring(x: &BitString, y: &BitString, k: usize) -> Result<f64> {
    let d = x.hamming(y)?;
    check_radius(x.len(), k)?;
    if d != k {
        return Ok(0.0);
    }
    Ok(1.0 / binomial(x.len() as i64, k as i64).to_f64())
}

/// Level-only outcome probabilities of one `k`-flip at LeadingOnes level `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelProbs {
    /// Bit `i + 1` flips and no prefix bit does.
    pub up: f64,
    /// Only suffix bits flip.
    pub same: f64,
    /// A prefix bit flips.
    pub down: f64,
}

pub fn lo_level_ratios(n: usize, i: usize, k: usize) -> Result<(BinomialRatio, BinomialRatio)> {
    if i >= n {
        return Err(CoreError::InvalidState { n, i, j: i });
    }
    check_radius(n, k)?;
    let (n, i, k) = (n as i64, i as i64, k as i64);
    Ok((
        BinomialRatio::new(&[(n - i - 1, k - 1)], &[(n, k)]),
        BinomialRatio::new(&[(n - i - 1, k)], &[(n, k)]),
    ))
}

pub fn lo_level_probs(n: usize, i: usize, k: usize) -> Result<LevelProbs> {
    let (up, same) = lo_level_ratios(n, i, k)?;
    let up = up.probability()?;
    let same = same.probability()?;
    Ok(LevelProbs {
        up,
        same,
        down: (1.0 - up - same).max(0.0),
    })
}

/// `p_i^{l}(k)`: from level `i` to level `l > i` under a LeadingOnes-only
/// view, where the suffix behind the first zero is uniform over all strings.
pub fn trans_lo_level(n: usize, i: usize, l: usize, k: usize) -> Result<f64> {
    if i >= n {
        return Err(CoreError::InvalidState { n, i, j: i });
    }
    if l <= i || l > n {
        return Err(CoreError::InvalidState { n, i: l, j: l });
    }
    let up = lo_level_probs(n, i, k)?.up;
    let exponent = if l < n { l - i } else { n - i - 1 };
    Ok(up * libm::exp2(-(exponent as f64)))
}

/// Probability of starting in `(i, j)` from a uniform string:
/// `C(n-i-1, j-i) / 2^n`, and `2^-n` for the optimum.
pub fn start_probability(n: usize, i: usize, j: usize) -> Result<f64> {
    if !is_valid_state(n, i, j) {
        return Err(CoreError::InvalidState { n, i, j });
    }
    let c = if i == n {
        1.0
    } else {
        binomial((n - i - 1) as i64, (j - i) as i64).to_f64()
    };
    Ok(c * libm::exp2(-(n as f64)))
}

/// Exact form of [`start_probability`].
pub fn start_probability_exact(n: usize, i: usize, j: usize) -> Result<BigRational> {
    if !is_valid_state(n, i, j) {
        return Err(CoreError::InvalidState { n, i, j });
    }
    let c = if i == n {
        num_bigint::BigUint::from(1u32)
    } else {
        binomial((n - i - 1) as i64, (j - i) as i64).0
    };
    let den = num_bigint::BigUint::from(1u32) << n;
    Ok(BigRational::new(c.into(), den.into()))
}

/// Accepted targets of one iteration from a state, plus the mass that leaves
/// the state unchanged (rejections and accepted moves inside the state).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDistribution {
    /// Targets in descending lex order.
    pub entries: Vec<(StateLoOm, f64)>,
    pub stay_probability: f64,
}

impl TransitionDistribution {
    pub fn probability_of(&self, s: StateLoOm) -> f64 {
        self.entries
            .iter()
            .find(|(t, _)| *t == s)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn leave_probability(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Full accepted-transition distribution of a state under `setting`.
pub fn full_distribution(
    setting: Setting,
    n: usize,
    source: StateLoOm,
    k: usize,
    table: &BinomialTable,
) -> Result<TransitionDistribution> {
    let (i, j) = (source.i, source.j);
    check_source(n, i, j)?;
    let mut entries = Vec::new();
    for l in (i + 1..=n).rev() {
        let ms: Vec<usize> = if l == n {
            alloc::vec![n]
        } else {
            (l..n).rev().collect()
        };
        for m in ms {
            let target = StateLoOm::new_unchecked(l, m);
            if !setting.accepts(source, target) {
                continue;
            }
            if let Some(r) = improving_ratio(n, i, j, l, m, k)? {
                let p = table.ratio(&r)?;
                if p > 0.0 {
                    entries.push((target, p));
                }
            }
        }
    }
    for m in (i..n).rev() {
        let target = StateLoOm::new_unchecked(i, m);
        if m == j || !setting.accepts(source, target) {
            continue;
        }
        if let Some(r) = same_level_ratio(n, i, j, m, k)? {
            let p = table.ratio(&r)?;
            if p > 0.0 {
                entries.push((target, p));
            }
        }
    }
    let leave: f64 = entries.iter().map(|(_, p)| p).sum();
    Ok(TransitionDistribution {
        entries,
        stay_probability: (1.0 - leave).max(0.0),
    })
}
