//! Radius portfolios, policy tables and the baseline policies.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::combinatorics::BinomialTable;
use crate::runtime::RuntimeTable;
use crate::state::{index, lo_level_ratios, BitString, StateLoOm, StateSpace};
use crate::{CoreError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PortfolioLabel {
    Full,
    /// `{2^t : 2^t <= n}`.
    Pow2,
    /// `{1, 2, 3}`.
    First3,
    /// `{1, floor(n/3), floor(2n/3)}`.
    Thirds,
    Explicit(Vec<usize>),
}

impl fmt::Display for PortfolioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortfolioLabel::Full => f.write_str("full"),
            PortfolioLabel::Pow2 => f.write_str("pow2"),
            PortfolioLabel::First3 => f.write_str("first3"),
            PortfolioLabel::Thirds => f.write_str("thirds"),
            PortfolioLabel::Explicit(v) => {
                f.write_str("list:")?;
                for (t, k) in v.iter().enumerate() {
                    if t > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PortfolioLabel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => PortfolioLabel::Full,
            "pow2" => PortfolioLabel::Pow2,
            "first3" => PortfolioLabel::First3,
            "thirds" => PortfolioLabel::Thirds,
            _ => {
                let list = s.strip_prefix("list:").ok_or_else(|| {
                    CoreError::Unsupported(alloc::format!("unknown portfolio '{s}'"))
                })?;
                let radii = list
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<core::result::Result<Vec<_>, _>>()
                    .map_err(|e| {
                        CoreError::Unsupported(alloc::format!("bad portfolio list '{s}': {e}"))
                    })?;
                PortfolioLabel::Explicit(radii)
            }
        })
    }
}

/// The set of radii a policy may use, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Portfolio {
    n: usize,
    radii: Vec<usize>,
    label: PortfolioLabel,
}

impl Portfolio {
    pub fn radii(&self) -> &[usize] {
        &self.radii
    }

    pub fn label(&self) -> &PortfolioLabel {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, k: usize) -> bool {
        self.radii.binary_search(&k).is_ok()
    }

    pub fn full(n: usize) -> Self {
        make_portfolio(&PortfolioLabel::Full, n).expect("full portfolio of n >= 1")
    }
}

/// Builds the portfolio named by `label` for problem size `n`. Radii outside
/// `[1..n]` are dropped and duplicates collapse.
pub fn make_portfolio(label: &PortfolioLabel, n: usize) -> Result<Portfolio> {
    if n == 0 {
        return Err(CoreError::EmptyProblem);
    }
    let mut radii: Vec<usize> = match label {
        PortfolioLabel::Full => (1..=n).collect(),
        PortfolioLabel::Pow2 => core::iter::successors(Some(1usize), |k| k.checked_mul(2))
            .take_while(|&k| k <= n)
            .collect(),
        PortfolioLabel::First3 => alloc::vec![1, 2, 3],
        PortfolioLabel::Thirds => alloc::vec![1, n / 3, 2 * n / 3],
        PortfolioLabel::Explicit(v) => v.clone(),
    };
    radii.retain(|&k| (1..=n).contains(&k));
    radii.sort_unstable();
    radii.dedup();
    if radii.is_empty() {
        return Err(CoreError::EmptyPortfolio(n));
    }
    Ok(Portfolio {
        n,
        radii,
        label: label.clone(),
    })
}

/// Radius per non-optimal state. `None` marks a missing entry (only possible
/// for policies read from files).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyTable {
    /// Indexed by LO level `0..n`.
    Level(Vec<Option<u32>>),
    /// Indexed by [`index::of`], optimum excluded.
    LoOm(Vec<Option<u32>>),
    /// Indexed by string mask, the all-ones mask excluded.
    Bits(Vec<Option<u32>>),
}

/// One entry of a policy, as stored in files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyEntry {
    Level { i: usize, k: usize },
    LoOm { i: usize, j: usize, k: usize },
    Bits { x: BitString, k: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    n: usize,
    table: PolicyTable,
}

/// Hard limit for string-keyed policies held in memory.
pub const BITS_POLICY_CAP: usize = 24;

impl Policy {
    fn table_len(n: usize, space: StateSpace) -> Result<usize> {
        Ok(match space {
            StateSpace::Level => n,
            StateSpace::LoOm => index::non_optimal(n),
            StateSpace::Bits => {
                if n > BITS_POLICY_CAP {
                    return Err(CoreError::CapExceeded {
                        n,
                        cap: BITS_POLICY_CAP,
                    });
                }
                (1usize << n) - 1
            }
        })
    }

    /// A policy with every entry set to `k`.
    pub fn constant(n: usize, space: StateSpace, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyProblem);
        }
        if !(1..=n).contains(&k) {
            return Err(CoreError::InvalidRadius { n, k });
        }
        let v = alloc::vec![Some(k as u32); Self::table_len(n, space)?];
        Ok(Policy {
            n,
            table: match space {
                StateSpace::Level => PolicyTable::Level(v),
                StateSpace::LoOm => PolicyTable::LoOm(v),
                StateSpace::Bits => PolicyTable::Bits(v),
            },
        })
    }

    /// Builds a policy from a dense radius vector in the layout of
    /// [`PolicyTable`].
    pub fn from_radii(n: usize, space: StateSpace, radii: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyProblem);
        }
        let len = Self::table_len(n, space)?;
        if radii.len() != len {
            return Err(CoreError::Unsupported(alloc::format!(
                "{space} policy at n = {n} needs {len} radii, got {}",
                radii.len()
            )));
        }
        if let Some(&k) = radii.iter().find(|&&k| !(1..=n).contains(&k)) {
            return Err(CoreError::InvalidRadius { n, k });
        }
        let v = radii.into_iter().map(|k| Some(k as u32)).collect();
        Ok(Policy {
            n,
            table: match space {
                StateSpace::Level => PolicyTable::Level(v),
                StateSpace::LoOm => PolicyTable::LoOm(v),
                StateSpace::Bits => PolicyTable::Bits(v),
            },
        })
    }

    /// Builds a policy from file entries. Entries must all belong to
    /// `space`; later duplicates overwrite earlier ones; missing states stay
    /// missing.
    pub fn from_entries(n: usize, space: StateSpace, entries: &[PolicyEntry]) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyProblem);
        }
        let mut v: Vec<Option<u32>> = alloc::vec![None; Self::table_len(n, space)?];
        for e in entries {
            let (slot, k) = match (space, e) {
                (StateSpace::Level, PolicyEntry::Level { i, k }) if *i < n => (*i, *k),
                (StateSpace::LoOm, PolicyEntry::LoOm { i, j, k }) if *i <= *j && *j < n => {
                    (index::of(n, *i, *j), *k)
                }
                (StateSpace::Bits, PolicyEntry::Bits { x, k }) if x.len() == n => {
                    let mask = x.to_mask().expect("n within bits cap");
                    if mask as usize == v.len() {
                        return Err(CoreError::Unsupported(
                            "policy entry for the optimum".into(),
                        ));
                    }
                    (mask as usize, *k)
                }
                _ => {
                    return Err(CoreError::PolicyMismatch {
                        expected: space.name().into(),
                        found: alloc::format!("{e:?}"),
                    })
                }
            };
            if !(1..=n).contains(&k) {
                return Err(CoreError::InvalidRadius { n, k });
            }
            v[slot] = Some(k as u32);
        }
        Ok(Policy {
            n,
            table: match space {
                StateSpace::Level => PolicyTable::Level(v),
                StateSpace::LoOm => PolicyTable::LoOm(v),
                StateSpace::Bits => PolicyTable::Bits(v),
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }

    pub fn state_space(&self) -> StateSpace {
        match self.table {
            PolicyTable::Level(_) => StateSpace::Level,
            PolicyTable::LoOm(_) => StateSpace::LoOm,
            PolicyTable::Bits(_) => StateSpace::Bits,
        }
    }

    /// All present entries in table order.
    pub fn entries(&self) -> Vec<PolicyEntry> {
        let n = self.n;
        match &self.table {
            PolicyTable::Level(v) => v
                .iter()
                .enumerate()
                .filter_map(|(i, k)| k.map(|k| PolicyEntry::Level { i, k: k as usize }))
                .collect(),
            PolicyTable::LoOm(v) => v
                .iter()
                .enumerate()
                .filter_map(|(idx, k)| {
                    let s = index::state(n, idx);
                    k.map(|k| PolicyEntry::LoOm {
                        i: s.i,
                        j: s.j,
                        k: k as usize,
                    })
                })
                .collect(),
            PolicyTable::Bits(v) => v
                .iter()
                .enumerate()
                .filter_map(|(mask, k)| {
                    k.map(|k| PolicyEntry::Bits {
                        x: BitString::from_mask(n, mask as u64),
                        k: k as usize,
                    })
                })
                .collect(),
        }
    }

    pub fn is_complete(&self) -> bool {
        let v = match &self.table {
            PolicyTable::Level(v) | PolicyTable::LoOm(v) | PolicyTable::Bits(v) => v,
        };
        v.iter().all(Option::is_some)
    }

    /// Radius for a non-optimal (LO, OM) state. Level policies broadcast
    /// across OM; string policies cannot answer.
    pub fn radius_at(&self, s: StateLoOm) -> Result<usize> {
        let entry = match &self.table {
            PolicyTable::Level(v) => v.get(s.i).copied().flatten(),
            PolicyTable::LoOm(v) if s.i <= s.j && s.j < self.n => v[index::of(self.n, s.i, s.j)],
            PolicyTable::LoOm(_) => None,
            PolicyTable::Bits(_) => {
                return Err(CoreError::PolicyMismatch {
                    expected: "loom".into(),
                    found: "x".into(),
                })
            }
        };
        entry
            .map(|k| k as usize)
            .ok_or_else(|| CoreError::MissingPolicyEntry(s.to_string()))
    }

    /// Radius for the string with `mask`; any table flavour can answer.
    pub fn radius_for_mask(&self, mask: u64) -> Result<usize> {
        match &self.table {
            PolicyTable::Bits(v) => v
                .get(mask as usize)
                .copied()
                .flatten()
                .map(|k| k as usize)
                .ok_or_else(|| {
                    CoreError::MissingPolicyEntry(BitString::from_mask(self.n, mask).to_string())
                }),
            _ => self.radius_at(crate::state::mask_fitness(self.n, mask)),
        }
    }

    /// Radius for an arbitrary string (any length within the table).
    pub fn radius_for(&self, x: &BitString) -> Result<usize> {
        if x.len() != self.n {
            return Err(CoreError::LengthMismatch(self.n, x.len()));
        }
        match &self.table {
            PolicyTable::Bits(_) => self.radius_for_mask(x.to_mask().expect("bits cap")),
            _ => self.radius_at(crate::state::evaluate_fitness(x)),
        }
    }

    /// The radius table laid out for every (LO, OM) state, broadcasting a
    /// level policy. Fails on missing entries and string policies.
    pub fn loom_radii(&self) -> Result<Vec<usize>> {
        (0..index::non_optimal(self.n))
            .map(|idx| self.radius_at(index::state(self.n, idx)))
            .collect()
    }
}

/// `k = 1` everywhere on (LO, OM) states.
pub fn always_one_policy(n: usize) -> Result<Policy> {
    Policy::constant(n, StateSpace::LoOm, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoFormulaVariant {
    /// `k(i) = min(n, floor(n / i))`, with `k(0) = n`.
    Paper,
    /// `k(i) = max(1, floor(n / (i + 1)))`.
    PlusOne,
}

/// The fitness-dependent LeadingOnes radius formula as a level policy.
pub fn lo_formula_policy(n: usize, variant: LoFormulaVariant) -> Result<Policy> {
    let radii = (0..n)
        .map(|i| match variant {
            LoFormulaVariant::Paper if i == 0 => n,
            LoFormulaVariant::Paper => (n / i).min(n),
            LoFormulaVariant::PlusOne => (n / (i + 1)).max(1),
        })
        .collect();
    Policy::from_radii(n, StateSpace::Level, radii)
}

/// For each level, the radius with the largest improvement probability
/// (smallest on ties), and the level runtimes of the LeadingOnes-only chain.
///
/// Once an improvement happens, the new level is distributed independently
/// of `k`, so maximising the improvement probability is optimal per level.
pub fn compute_s_lo_optimal_policy(
    n: usize,
    portfolio: &Portfolio,
) -> Result<(Policy, RuntimeTable)> {
    if n == 0 {
        return Err(CoreError::EmptyProblem);
    }
    let table = BinomialTable::new(n);
    let mut radii = Vec::with_capacity(n);
    let mut p_up = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for &k in portfolio.radii() {
            let p = table.ratio(&lo_level_ratios(n, i, k)?.0)?;
            if p > 0.0 && best.is_none_or(|(_, b)| p > b) {
                best = Some((k, p));
            }
        }
        let (k, p) = best.ok_or(CoreError::NoImprovingRadius(i))?;
        radii.push(k);
        p_up.push(p);
    }

    // T_i = 1/p_up + S_i with S_i = sum_{i<l<n} 2^{-(l-i)} T_l, so
    // S_i = (T_{i+1} + S_{i+1}) / 2 and S_{n-1} = 0.
    let mut t = alloc::vec![0.0; n + 1];
    let mut tail = 0.0;
    for i in (0..n).rev() {
        let above = if i + 1 == n {
            0.0
        } else {
            0.5 * (t[i + 1] + tail)
        };
        t[i] = 1.0 / p_up[i] + above;
        tail = above;
    }
    Ok((
        Policy::from_radii(n, StateSpace::Level, radii)?,
        RuntimeTable::new(n, StateSpace::Level, t)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::lo_level_probs;

    #[test]
    fn portfolio_examples() {
        let p = make_portfolio(&PortfolioLabel::Pow2, 16).unwrap();
        assert_eq!(p.radii(), &[1, 2, 4, 8, 16]);
        let p = make_portfolio(&PortfolioLabel::Thirds, 16).unwrap();
        assert_eq!(p.radii(), &[1, 5, 10]);
        let p = make_portfolio(&PortfolioLabel::First3, 2).unwrap();
        assert_eq!(p.radii(), &[1, 2]);
        let p = make_portfolio(&PortfolioLabel::Thirds, 2).unwrap();
        assert_eq!(p.radii(), &[1]);
        assert!(make_portfolio(&PortfolioLabel::Explicit(alloc::vec![9]), 4).is_err());
        assert!(make_portfolio(&PortfolioLabel::Full, 0).is_err());
    }

    #[test]
    fn portfolio_labels_parse() {
        for s in ["full", "pow2", "first3", "thirds", "list:1,3,5"] {
            let l: PortfolioLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        assert!("list:1,x".parse::<PortfolioLabel>().is_err());
        assert!("halves".parse::<PortfolioLabel>().is_err());
    }

    #[test]
    fn baseline_policies() {
        let s = StateLoOm::new_unchecked;
        assert_eq!(always_one_policy(4).unwrap().radius_at(s(1, 2)).unwrap(), 1);
        assert_eq!(
            always_one_policy(128).unwrap().radius_at(s(0, 0)).unwrap(),
            1
        );
        assert_eq!(always_one_policy(8).unwrap().radius_at(s(7, 7)).unwrap(), 1);

        let p = lo_formula_policy(128, LoFormulaVariant::Paper).unwrap();
        assert_eq!(p.radius_at(s(64, 70)).unwrap(), 2);
        assert_eq!(p.radius_at(s(0, 5)).unwrap(), 128);
        let p = lo_formula_policy(8, LoFormulaVariant::PlusOne).unwrap();
        assert_eq!(p.radius_at(s(7, 7)).unwrap(), 1);
        assert_eq!(p.radius_at(s(0, 0)).unwrap(), 8);
    }

    #[test]
    fn lookups_and_missing_entries() {
        let p = Policy::from_entries(
            3,
            StateSpace::LoOm,
            &[PolicyEntry::LoOm { i: 1, j: 2, k: 2 }],
        )
        .unwrap();
        assert!(!p.is_complete());
        assert_eq!(p.radius_at(StateLoOm::new_unchecked(1, 2)).unwrap(), 2);
        assert!(matches!(
            p.radius_at(StateLoOm::new_unchecked(0, 0)),
            Err(CoreError::MissingPolicyEntry(_))
        ));
        // mask 0b011 is 110: LO 2, OM 2.
        let q = Policy::constant(3, StateSpace::Level, 3).unwrap();
        assert_eq!(q.radius_for_mask(0b011).unwrap(), 3);
        assert!(
            Policy::from_entries(3, StateSpace::Level, &[PolicyEntry::Level { i: 0, k: 4 }])
                .is_err()
        );
        assert!(Policy::from_entries(
            3,
            StateSpace::Level,
            &[PolicyEntry::LoOm { i: 0, j: 0, k: 1 }]
        )
        .is_err());
    }

    #[test]
    fn entries_round_trip() {
        for space in [StateSpace::Level, StateSpace::LoOm, StateSpace::Bits] {
            let len = Policy::table_len(5, space).unwrap();
            let radii: Vec<usize> = (0..len).map(|t| t % 5 + 1).collect();
            let p = Policy::from_radii(5, space, radii).unwrap();
            assert_eq!(Policy::from_entries(5, space, &p.entries()).unwrap(), p);
        }
    }

    #[test]
    fn s_lo_optimal_radii() {
        let (p, _) = compute_s_lo_optimal_policy(16, &Portfolio::full(16)).unwrap();
        let s = StateLoOm::new_unchecked;
        assert_eq!(p.radius_at(s(0, 0)).unwrap(), 16);
        assert_eq!(p.radius_at(s(15, 15)).unwrap(), 1);
        let (p, _) = compute_s_lo_optimal_policy(8, &Portfolio::full(8)).unwrap();
        assert_eq!(p.loom_radii().unwrap().len(), index::non_optimal(8));
        let levels: Vec<usize> = (0..8).map(|i| p.radius_at(s(i, i)).unwrap()).collect();
        assert_eq!(levels, [8, 4, 2, 2, 1, 1, 1, 1]);
    }

    #[test]
    fn s_lo_optimal_level_runtimes_match_direct_sum() {
        let n = 12;
        let (p, t) = compute_s_lo_optimal_policy(n, &Portfolio::full(n)).unwrap();
        for i in 0..n {
            let k = p.radius_at(StateLoOm::new_unchecked(i, i)).unwrap();
            let up = lo_level_probs(n, i, k).unwrap().up;
            let mut rhs = 1.0;
            for l in i + 1..=n {
                rhs += crate::state::trans_lo_level(n, i, l, k).unwrap() * t.level(l).value();
            }
            assert!((t.level(i).value() - rhs / up).abs() < 1e-9 * rhs / up);
        }
        assert_eq!(t.level(n).value(), 0.0);
    }

    #[test]
    fn s_lo_optimal_uses_portfolio_only() {
        let port = make_portfolio(&PortfolioLabel::Explicit(alloc::vec![2, 3]), 6).unwrap();
        // Level 5 can only improve with k = 1.
        assert_eq!(
            compute_s_lo_optimal_policy(6, &port).unwrap_err(),
            CoreError::NoImprovingRadius(5)
        );
    }
}
