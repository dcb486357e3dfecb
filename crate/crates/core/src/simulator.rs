//! Seeded simulation of RLS_k itself.
//!
//! Run `r` of a batch draws from ChaCha8 keyed by `seed` on stream `r`, so
//! every run is reproducible on its own and batches do not depend on
//! scheduling.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::policy::{Policy, PolicyTable};
use crate::state::{index, BitString, Setting, StateLoOm, StateSpace};
use crate::{CoreError, Result};

pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Start {
    UniformRandom,
    Fixed(BitString),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub setting: Setting,
    pub policy: Policy,
    pub seed: u64,
    pub max_iterations: u64,
    pub start: Start,
    /// Record the visited states (costs memory on long runs).
    pub record_trajectory: bool,
}

impl RunConfig {
    pub fn new(setting: Setting, policy: Policy, seed: u64) -> Self {
        RunConfig {
            n: policy.n(),
            setting,
            policy,
            seed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            start: Start::UniformRandom,
            record_trajectory: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CoreError::EmptyProblem);
        }
        if self.max_iterations == 0 {
            return Err(CoreError::Unsupported(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.policy.n() != self.n {
            return Err(CoreError::LengthMismatch(self.n, self.policy.n()));
        }
        if let Start::Fixed(x) = &self.start {
            if x.len() != self.n {
                return Err(CoreError::LengthMismatch(self.n, x.len()));
            }
        }
        let ok = matches!(
            (self.setting.state_space, self.policy.state_space()),
            (StateSpace::Bits, _)
                | (StateSpace::LoOm, StateSpace::LoOm | StateSpace::Level)
                | (StateSpace::Level, StateSpace::Level)
        );
        if !ok {
            return Err(CoreError::PolicyMismatch {
                expected: self.setting.state_space.name().into(),
                found: self.policy.state_space().name().into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrajectoryPoint {
    pub iteration: u64,
    pub i: usize,
    pub j: usize,
}

/// The start state and every accepted move that changed the state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    /// Offspring evaluated until the optimum was created (or the cap).
    pub runtime: u64,
    pub hit_max_iterations: bool,
    pub trajectory: Trajectory,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub runs: u64,
    pub mean_runtime: f64,
    /// Sample standard deviation (zero for a single run).
    pub stddev: f64,
    /// Normal-approximation 95% half-width, `1.96 s / sqrt(runs)`.
    pub ci95_halfwidth: f64,
    pub hit_max_iterations: u64,
}

impl RunStats {
    pub fn stderr(&self) -> f64 {
        self.stddev / libm::sqrt(self.runs as f64)
    }
}

/// Radius lookup specialised per policy flavour.
enum Radii<'a> {
    Dense { n: usize, radii: Vec<usize> },
    Bits(&'a Policy),
}

impl Radii<'_> {
    fn new(policy: &Policy) -> Result<Radii<'_>> {
        Ok(match policy.table() {
            PolicyTable::Bits(_) => Radii::Bits(policy),
            _ => Radii::Dense {
                n: policy.n(),
                radii: policy.loom_radii()?,
            },
        })
    }

    #[inline]
    fn get(&self, x: &BitString, s: StateLoOm) -> Result<usize> {
        match self {
            Radii::Dense { n, radii } => Ok(radii[index::of(*n, s.i, s.j)]),
            Radii::Bits(p) => p.radius_for(x),
        }
    }
}

fn rng_for(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

fn simulate(config: &RunConfig, radii: &Radii<'_>, rng: &mut ChaCha8Rng) -> Result<RunOutcome> {
    let n = config.n;
    let mut x = match &config.start {
        Start::Fixed(x) => x.clone(),
        Start::UniformRandom => {
            let mut x = BitString::zeros(n);
            for p in 0..n {
                x.set(p, rng.random::<bool>());
            }
            x
        }
    };
    let mut s = StateLoOm::new_unchecked(x.leading_ones(), x.count_ones());
    let mut trajectory = Trajectory::default();
    if config.record_trajectory {
        trajectory.points.push(TrajectoryPoint {
            iteration: 0,
            i: s.i,
            j: s.j,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    while s.i < n {
        if t == config.max_iterations {
            return Ok(RunOutcome {
                runtime: t,
                hit_max_iterations: true,
                trajectory,
            });
        }
        let k = radii.get(&x, s)?;
        // Partial Fisher-Yates: perm[..k] is a uniform k-subset.
        let mut first_flipped = n;
        let mut om = s.j;
        for a in 0..k {
            let b = rng.random_range(a..n);
            perm.swap(a, b);
            let p = perm[a];
            if x.get(p) {
                om -= 1;
            } else {
                om += 1;
            }
            x.flip(p);
            first_flipped = first_flipped.min(p);
        }
        t += 1;
        let lo = if first_flipped < s.i {
            first_flipped
        } else {
            x.leading_ones_from(s.i)
        };
        let y = StateLoOm::new_unchecked(lo, om);
        if config.setting.accepts(s, y) {
            if config.record_trajectory && y != s {
                trajectory.points.push(TrajectoryPoint {
                    iteration: t,
                    i: y.i,
                    j: y.j,
                });
            }
            s = y;
        } else {
            for &p in &perm[..k] {
                x.flip(p);
            }
        }
    }
    Ok(RunOutcome {
        runtime: t,
        hit_max_iterations: false,
        trajectory,
    })
}

/// One run on stream 0 of `config.seed`.
pub fn run_once(config: &RunConfig) -> Result<RunOutcome> {
    run_stream(config, 0)
}

/// Run number `run` of a batch.
pub fn run_stream(config: &RunConfig, run: u64) -> Result<RunOutcome> {
    config.validate()?;
    let radii = Radii::new(&config.policy)?;
    simulate(config, &radii, &mut rng_for(config.seed, run))
}

/// Runs `0..runs` and aggregates in run order. `on_run` sees every outcome
/// (for trajectory export).
pub fn run_many_with(
    config: &RunConfig,
    runs: u64,
    mut on_run: impl FnMut(u64, &RunOutcome),
) -> Result<RunStats> {
    if runs == 0 {
        return Err(CoreError::Unsupported("runs must be at least 1".into()));
    }
    config.validate()?;
    let radii = Radii::new(&config.policy)?;
    // Welford's update keeps the variance stable over long batches.
    let (mut mean, mut m2, mut hits) = (0.0f64, 0.0f64, 0u64);
    for r in 0..runs {
        let out = simulate(config, &radii, &mut rng_for(config.seed, r))?;
        let v = out.runtime as f64;
        let delta = v - mean;
        mean += delta / (r + 1) as f64;
        m2 += delta * (v - mean);
        hits += out.hit_max_iterations as u64;
        on_run(r, &out);
    }
    let stddev = if runs > 1 {
        libm::sqrt(m2 / (runs - 1) as f64)
    } else {
        0.0
    };
    Ok(RunStats {
        runs,
        mean_runtime: mean,
        stddev,
        ci95_halfwidth: 1.96 * stddev / libm::sqrt(runs as f64),
        hit_max_iterations: hits,
    })
}

pub fn run_many(config: &RunConfig, runs: u64) -> Result<RunStats> {
    run_many_with(config, runs, |_, _| {})
}
