//! Where a policy comes from on the command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rlsk_core::policy::{
    always_one_policy, compute_s_lo_optimal_policy, lo_formula_policy, LoFormulaVariant,
};
use rlsk_core::solvers::solve;
use rlsk_core::{Policy, Portfolio, Setting};

use crate::formats::read_policy_file;
use crate::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicySource {
    File(PathBuf),
    /// `k = 1` everywhere.
    One,
    /// `min(n, floor(n/i))`, `k(0) = n`.
    LoFormula,
    /// `max(1, floor(n/(i+1)))`.
    LoFormulaPlusOne,
    /// Largest improvement probability per LO level.
    LoOptimal,
    /// Whatever the setting's solver returns for the portfolio.
    Solver,
}

impl FromStr for PolicySource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "one" => PolicySource::One,
            "lo-formula" => PolicySource::LoFormula,
            "lo-formula-plus1" => PolicySource::LoFormulaPlusOne,
            "lo-optimal" => PolicySource::LoOptimal,
            "solver" => PolicySource::Solver,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => PolicySource::File(PathBuf::from(p)),
                _ => {
                    return Err(format!(
                        "unknown policy '{s}' (file:PATH, one, lo-formula, lo-formula-plus1, lo-optimal, solver)"
                    ))
                }
            },
        })
    }
}

impl PolicySource {
    pub fn load(&self, setting: Setting, n: usize, portfolio: &Portfolio) -> Result<Policy> {
        Ok(match self {
            PolicySource::File(path) => {
                let p = read_policy_file(Path::new(path))?;
                if p.n() != n {
                    return Err(CliError::Core(rlsk_core::CoreError::LengthMismatch(
                        n,
                        p.n(),
                    )));
                }
                p
            }
            PolicySource::One => always_one_policy(n)?,
            PolicySource::LoFormula => lo_formula_policy(n, LoFormulaVariant::Paper)?,
            PolicySource::LoFormulaPlusOne => lo_formula_policy(n, LoFormulaVariant::PlusOne)?,
            PolicySource::LoOptimal => compute_s_lo_optimal_policy(n, portfolio)?.0,
            PolicySource::Solver => solve(setting, n, portfolio)?.policy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        assert_eq!("one".parse::<PolicySource>().unwrap(), PolicySource::One);
        assert_eq!(
            "file:a/b.json".parse::<PolicySource>().unwrap(),
            PolicySource::File("a/b.json".into())
        );
        assert!("file:".parse::<PolicySource>().is_err());
        assert!("best".parse::<PolicySource>().is_err());
    }

    #[test]
    fn solver_source_matches_setting_space() {
        let p = PolicySource::Solver
            .load(Setting::LOOM_STRICT_X, 4, &Portfolio::full(4))
            .unwrap();
        assert_eq!(p.state_space(), rlsk_core::StateSpace::Bits);
        let p = PolicySource::LoOptimal
            .load(Setting::LO_NONSTRICT_LEVEL, 4, &Portfolio::full(4))
            .unwrap();
        assert_eq!(p.state_space(), rlsk_core::StateSpace::Level);
    }
}
