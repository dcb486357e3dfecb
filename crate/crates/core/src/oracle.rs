//! Brute-force ground truth, sharing no code path with the solvers beyond
//! fitness evaluation and acceptance.
//!
//! Transitions come from enumerating every flip set. Runtimes come from
//! first-step analysis on the chain over all `2^n` strings: accepted moves
//! never decrease the fitness class ((LO, OM) or LO, by setting), so the
//! chain is block upper-triangular in class order and each class is one
//! dense system, solved by Gaussian elimination in exact rationals or `f64`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{NumOps, One, Signed, ToPrimitive, Zero};

use crate::combinatorics::binomial;
use crate::policy::Policy;
use crate::runtime::RuntimeTable;
use crate::state::{index, mask_fitness, BitString, FitnessKind, Setting, StateLoOm, StateSpace};
use crate::{CoreError, Result};

/// Hard cap for flip-set enumeration.
pub const ENUMERATION_CAP: usize = 20;
/// Hard cap for full-chain solves.
pub const CHAIN_CAP: usize = 12;
/// Full-chain solves up to this size run in exact rationals.
pub const EXACT_CHAIN_MAX: usize = 6;

/// Exact probabilities over outcomes; they sum to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution<K: Ord> {
    pub entries: BTreeMap<K, BigRational>,
}

impl<K: Ord> ExactDistribution<K> {
    pub fn probability(&self, key: &K) -> BigRational {
        self.entries
            .get(key)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.entries
            .values()
            .fold(BigRational::zero(), |acc, v| acc + v)
    }
}

fn ratio(num: u64, den: &BigInt) -> BigRational {
    BigRational::new(BigInt::from(num), den.clone())
}

/// All `k`-subsets of `0..n` as bit masks, in increasing order.
fn subsets(n: usize, k: usize) -> Vec<u32> {
    if k == 0 || k > n {
        return alloc::vec![0; (k == 0) as usize];
    }
    let mut out = Vec::new();
    let mut s: u64 = (1 << k) - 1;
    while s < (1 << n) {
        out.push(s as u32);
        // Gosper's hack: next integer with the same popcount.
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

fn check_radius(n: usize, k: usize) -> Result<()> {
    if (1..=n).contains(&k) {
        Ok(())
    } else {
        Err(CoreError::InvalidRadius { n, k })
    }
}

/// Offspring (LO, OM) distribution of `x` under a `k`-flip, before
/// selection.
pub fn enumerate_transitions(x: &BitString, k: usize) -> Result<ExactDistribution<StateLoOm>> {
    let n = x.len();
    if n > ENUMERATION_CAP {
        return Err(CoreError::CapExceeded {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    check_radius(n, k)?;
    let mask = x.to_mask().expect("within cap");
    let mut counts: BTreeMap<StateLoOm, u64> = BTreeMap::new();
    for f in subsets(n, k) {
        *counts.entry(mask_fitness(n, mask ^ f as u64)).or_default() += 1;
    }
    let den = binomial(n as i64, k as i64).0.into();
    Ok(ExactDistribution {
        entries: counts
            .into_iter()
            .map(|(s, c)| (s, ratio(c, &den)))
            .collect(),
    })
}

/// Masks of all strings in state `(i, j)`.
pub fn state_members(n: usize, i: usize, j: usize) -> Result<Vec<u64>> {
    if !crate::state::is_valid_state(n, i, j) {
        return Err(CoreError::InvalidState { n, i, j });
    }
    if i == n {
        return Ok(alloc::vec![(1u64 << n) - 1]);
    }
    let prefix = (1u64 << i) - 1;
    let free = n - i - 1;
    Ok((0..1u64 << free)
        .filter(|z| z.count_ones() as usize == j - i)
        .map(|z| prefix | (z << (i + 1)))
        .collect())
}

/// Offspring (LO, OM) distribution averaged uniformly over the strings of
/// state `(i, j)`.
pub fn state_averaged_transitions(
    n: usize,
    i: usize,
    j: usize,
    k: usize,
) -> Result<ExactDistribution<StateLoOm>> {
    if n > ENUMERATION_CAP {
        return Err(CoreError::CapExceeded {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    check_radius(n, k)?;
    let members = state_members(n, i, j)?;
    let flips = subsets(n, k);
    let mut counts: BTreeMap<StateLoOm, u64> = BTreeMap::new();
    for &x in &members {
        for &f in &flips {
            *counts.entry(mask_fitness(n, x ^ f as u64)).or_default() += 1;
        }
    }
    let den: BigInt = BigInt::from(binomial(n as i64, k as i64).0) * BigInt::from(members.len());
    Ok(ExactDistribution {
        entries: counts
            .into_iter()
            .map(|(s, c)| (s, ratio(c, &den)))
            .collect(),
    })
}

/// Offspring LO distribution averaged over all strings with LO `i`.
pub fn level_averaged_transitions(
    n: usize,
    i: usize,
    k: usize,
) -> Result<ExactDistribution<usize>> {
    if n > ENUMERATION_CAP {
        return Err(CoreError::CapExceeded {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    if i >= n {
        return Err(CoreError::InvalidState { n, i, j: i });
    }
    check_radius(n, k)?;
    let prefix = (1u64 << i) - 1;
    let flips = subsets(n, k);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let suffixes = 1u64 << (n - i - 1);
    for z in 0..suffixes {
        let x = prefix | (z << (i + 1));
        for &f in &flips {
            *counts.entry(mask_fitness(n, x ^ f as u64).i).or_default() += 1;
        }
    }
    let den: BigInt = BigInt::from(binomial(n as i64, k as i64).0) * BigInt::from(suffixes);
    Ok(ExactDistribution {
        entries: counts
            .into_iter()
            .map(|(l, c)| (l, ratio(c, &den)))
            .collect(),
    })
}

/// Arithmetic the chain solver runs in.
pub trait Scalar: Clone + Zero + One + NumOps + Signed + PartialOrd {
    fn from_u64(v: u64) -> Self;
}

// (string, accepted counts per higher-class string, accepted counts per local index)
type Row = (u64, Vec<(u64, u64)>, Vec<(usize, u64)>);

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }
}

impl Scalar for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// Gaussian elimination with largest-magnitude pivots; `None` if singular.
fn gauss<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let d = b.len();
    for c in 0..d {
        let p = (c..d).filter(|&r| !a[r][c].is_zero()).max_by(|&r, &s| {
            a[r][c]
                .abs()
                .partial_cmp(&a[s][c].abs())
                .unwrap_or(Ordering::Equal)
        })?;
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..d {
            if a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone() / a[c][c].clone();
            let (top, rest) = a.split_at_mut(r);
            for (t, cell) in rest[0].iter_mut().enumerate().skip(c) {
                let v = f.clone() * top[c][t].clone();
                *cell = cell.clone() - v;
            }
            let v = f * b[c].clone();
            b[r] = b[r].clone() - v;
        }
    }
    let mut x = alloc::vec![T::zero(); d];
    for r in (0..d).rev() {
        let mut acc = b[r].clone();
        for t in r + 1..d {
            acc = acc - a[r][t].clone() * x[t].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}

/// The string chain of one setting, with precomputed fitness and classes.
pub struct Chain {
    n: usize,
    setting: Setting,
    fitness: Vec<StateLoOm>,
    /// Classes in descending order; the optimum's class first.
    classes: Vec<Vec<u64>>,
    class_of: Vec<usize>,
    flips: Vec<Vec<u32>>,
}

impl Chain {
    pub fn new(n: usize, setting: Setting) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyProblem);
        }
        if n > CHAIN_CAP {
            return Err(CoreError::CapExceeded { n, cap: CHAIN_CAP });
        }
        let size = 1usize << n;
        let fitness: Vec<StateLoOm> = (0..size as u64).map(|m| mask_fitness(n, m)).collect();
        let key = |s: StateLoOm| match setting.fitness {
            FitnessKind::LoOm => s.i * (n + 1) + s.j,
            FitnessKind::LeadingOnes if s.i == n => n * (n + 1) + n,
            FitnessKind::LeadingOnes => s.i * (n + 1),
        };
        let mut by_key: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for (m, s) in fitness.iter().enumerate() {
            by_key.entry(key(*s)).or_default().push(m as u64);
        }
        let classes: Vec<Vec<u64>> = by_key.into_values().rev().collect();
        let mut class_of = alloc::vec![0; size];
        for (c, members) in classes.iter().enumerate() {
            for &m in members {
                class_of[m as usize] = c;
            }
        }
        Ok(Chain {
            n,
            setting,
            fitness,
            classes,
            class_of,
            flips: (0..=n).map(|k| subsets(n, k)).collect(),
        })
    }

    /// Hitting times of the all-ones string for one radius per string
    /// (`radii[mask]`, the optimum's slot unused). `None` is infinite.
    pub fn hitting_times<T: Scalar>(&self, radii: &[usize]) -> Result<Vec<Option<T>>> {
        let size = 1usize << self.n;
        let mut e: Vec<Option<T>> = alloc::vec![None; size];
        e[size - 1] = Some(T::zero());
        for c in 1..self.classes.len() {
            self.solve_class(c, radii, &mut e)?;
        }
        Ok(e)
    }

    fn solve_class<T: Scalar>(&self, c: usize, radii: &[usize], e: &mut [Option<T>]) -> Result<()> {
        let members = &self.classes[c];
        let d = members.len();
        let local = |m: u64| members.binary_search(&m).ok();
        // Per member: accepted counts to higher classes and inside the class.
        let mut rows: Vec<Row> = Vec::with_capacity(d);
        for &x in members {
            let k = radii[x as usize];
            check_radius(self.n, k)?;
            let sx = self.fitness[x as usize];
            let mut up: BTreeMap<u64, u64> = BTreeMap::new();
            let mut inside: BTreeMap<usize, u64> = BTreeMap::new();
            for &f in &self.flips[k] {
                let y = x ^ f as u64;
                if !self.setting.accepts(sx, self.fitness[y as usize]) {
                    continue;
                }
                let cy = self.class_of[y as usize];
                match cy.cmp(&c) {
                    Ordering::Less => *up.entry(y).or_default() += 1,
                    Ordering::Equal => {
                        *inside.entry(local(y).expect("same class")).or_default() += 1
                    }
                    Ordering::Greater => {
                        return Err(CoreError::Unsupported(alloc::format!(
                            "accepted move to a lower class from {}",
                            BitString::from_mask(self.n, x)
                        )))
                    }
                }
            }
            let cnk = binomial(self.n as i64, k as i64)
                .0
                .to_u64()
                .expect("small n");
            rows.push((cnk, up.into_iter().collect(), inside.into_iter().collect()));
        }

        // Infinite: an accepted move reaches an infinite value, or the class
        // can never be left.
        let mut bad: Vec<bool> = rows
            .iter()
            .map(|(_, up, _)| up.iter().any(|(y, _)| e[*y as usize].is_none()))
            .collect();
        let mut escapes: Vec<bool> = rows.iter().map(|(_, up, _)| !up.is_empty()).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for t in 0..d {
                if !escapes[t] && rows[t].2.iter().any(|(u, _)| escapes[*u]) {
                    escapes[t] = true;
                    changed = true;
                }
            }
        }
        for t in 0..d {
            bad[t] |= !escapes[t];
        }
        changed = true;
        while changed {
            changed = false;
            for t in 0..d {
                if !bad[t] && rows[t].2.iter().any(|(u, _)| bad[*u]) {
                    bad[t] = true;
                    changed = true;
                }
            }
        }

        let good: Vec<usize> = (0..d).filter(|&t| !bad[t]).collect();
        let mut pos = alloc::vec![usize::MAX; d];
        for (p, &t) in good.iter().enumerate() {
            pos[t] = p;
        }
        let g = good.len();
        let mut a = alloc::vec![alloc::vec![T::zero(); g]; g];
        let mut b = alloc::vec![T::zero(); g];
        for (p, &t) in good.iter().enumerate() {
            let (cnk, up, inside) = &rows[t];
            // accepted * E_x - sum_inside c E_y = C(n,k) + sum_up c E_y
            let mut accepted = 0u64;
            let mut rhs = T::from_u64(*cnk);
            for (y, cnt) in up {
                accepted += cnt;
                let ey = e[*y as usize].clone().expect("finite upper value");
                rhs = rhs + T::from_u64(*cnt) * ey;
            }
            for (u, cnt) in inside {
                accepted += cnt;
                a[p][pos[*u]] = a[p][pos[*u]].clone() - T::from_u64(*cnt);
            }
            a[p][p] = a[p][p].clone() + T::from_u64(accepted);
            b[p] = rhs;
        }
        let x = gauss(a, b).ok_or(CoreError::SingularMatrix(0.0))?;
        for (p, &t) in good.iter().enumerate() {
            e[members[t] as usize] = Some(x[p].clone());
        }
        Ok(())
    }

    /// Radii per string for a policy of any flavour.
    pub fn radii_of(&self, policy: &Policy) -> Result<Vec<usize>> {
        if policy.n() != self.n {
            return Err(CoreError::LengthMismatch(self.n, policy.n()));
        }
        let size = 1u64 << self.n;
        let mut r: Vec<usize> = (0..size - 1)
            .map(|m| policy.radius_for_mask(m))
            .collect::<Result<_>>()?;
        r.push(1);
        Ok(r)
    }
}

fn to_f64_table(n: usize, e: Vec<Option<f64>>) -> Result<RuntimeTable> {
    RuntimeTable::new(
        n,
        StateSpace::Bits,
        e.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
    )
}

/// Exact hitting times per string (`None` = infinite).
pub fn full_chain_hitting_times_exact(
    n: usize,
    setting: Setting,
    policy: &Policy,
) -> Result<Vec<Option<BigRational>>> {
    let chain = Chain::new(n, setting)?;
    chain.hitting_times::<BigRational>(&chain.radii_of(policy)?)
}

/// Hitting times per string: exact rationals rounded once for
/// `n <= EXACT_CHAIN_MAX`, `f64` elimination above.
pub fn full_chain_hitting_times(
    n: usize,
    setting: Setting,
    policy: &Policy,
) -> Result<RuntimeTable> {
    let chain = Chain::new(n, setting)?;
    let radii = chain.radii_of(policy)?;
    if n <= EXACT_CHAIN_MAX {
        let e = chain.hitting_times::<BigRational>(&radii)?;
        to_f64_table(
            n,
            e.into_iter()
                .map(|v| v.map(|r| rational_to_f64(&r)))
                .collect(),
        )
    } else {
        to_f64_table(n, chain.hitting_times::<f64>(&radii)?)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact mean over the strings of every (LO, OM) state.
pub fn average_into_states(n: usize, e: &[Option<BigRational>]) -> Vec<Option<BigRational>> {
    index::descending(n)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .map(|s| {
            let members = state_members(n, s.i, s.j).expect("valid state");
            let mut acc = BigRational::zero();
            for m in &members {
                acc += e[*m as usize].clone()?;
            }
            Some(acc / BigRational::from_integer(BigInt::from(members.len())))
        })
        .collect()
}

fn better_exact(v: &Option<BigRational>, best: &Option<BigRational>) -> bool {
    match (v, best) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(a), Some(b)) => a < b,
    }
}

/// Per-unit radius minimising the unit's exact expected runtime, with
/// every other unit following `base`. Units are (LO, OM) states (dense
/// layout, optimum excluded) or strings (by mask, optimum excluded),
/// following the setting's state space. Smallest radius on ties.
///
/// Valid for settings in which a unit's runtime depends only on strictly
/// better units; each unit is optimised on top of `base`'s values above it.
pub fn exhaustive_argmin(n: usize, setting: Setting, base: &Policy) -> Result<Vec<usize>> {
    if n > EXACT_CHAIN_MAX {
        return Err(CoreError::CapExceeded {
            n,
            cap: EXACT_CHAIN_MAX,
        });
    }
    let chain = Chain::new(n, setting)?;
    let radii = chain.radii_of(base)?;
    let units: Vec<Vec<u64>> = match setting.state_space {
        StateSpace::Bits => (0..(1u64 << n) - 1).map(|m| alloc::vec![m]).collect(),
        _ => (0..index::non_optimal(n))
            .map(|idx| {
                let s = index::state(n, idx);
                state_members(n, s.i, s.j).expect("valid state")
            })
            .collect(),
    };
    let mut out = Vec::with_capacity(units.len());
    for members in &units {
        let mut best: (usize, Option<BigRational>) = (0, None);
        for k in 1..=n {
            let mut r = radii.clone();
            for &m in members {
                r[m as usize] = k;
            }
            let e = chain.hitting_times::<BigRational>(&r)?;
            let mut acc = Some(BigRational::zero());
            for &m in members {
                acc = match (acc, &e[m as usize]) {
                    (Some(a), Some(v)) => Some(a + v),
                    _ => None,
                };
            }
            if best.0 == 0 || better_exact(&acc, &best.1) {
                best = (k, acc);
            }
        }
        out.push(best.0);
    }
    Ok(out)
}
