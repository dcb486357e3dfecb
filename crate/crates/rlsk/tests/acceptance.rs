//! Acceptance suite: ten criteria, one status line each.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails on any unexpected failure. A check listed as a known
//! failure prints FAIL with its reason and does not change the exit code;
//! if it ever starts to pass the run fails, so the list stays honest.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rlsk::validate::{self, ValidateOptions};
use rlsk_core::policy::{
    always_one_policy, lo_formula_policy, make_portfolio, LoFormulaVariant, PortfolioLabel,
};
use rlsk_core::runtime::total_with_convention;
use rlsk_core::simulator::{run_many, RunConfig};
use rlsk_core::solvers::{
    compare_bitstring_vs_loom, compare_bitstring_vs_loom_with_cap, evaluate_policy_loom, solve,
    solve_lo_nonstrict_heuristic, solve_lo_strict, solve_loom_nonstrict, SolveReport,
    DEFAULT_MAX_SWEEPS,
};
use rlsk_core::state::index;
use rlsk_core::{Portfolio, RuntimeTable, Setting, StateLoOm, TotalConvention};

const PUBLISHED: TotalConvention = TotalConvention::OmitZeroTail;

fn ln_norm(n: usize) -> f64 {
    n as f64 * (n as f64).ln()
}

fn sq_norm(n: usize) -> f64 {
    (n * n) as f64
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    known: Vec<String>,
    warnings: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    /// A check expected to fail for a documented reason.
    fn known_failure(&mut self, ok: bool, what: String, reason: &str) {
        if ok {
            self.failures
                .push(format!("{what} passes but is listed as a known failure"));
        } else {
            self.known.push(format!("{what} ({reason})"));
        }
    }

    fn warn(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.warnings.push(what());
        }
    }

    fn series(
        &mut self,
        label: &str,
        points: &[(usize, f64)],
        tol: f64,
        mut got: impl FnMut(usize) -> f64,
    ) {
        let mut worst = 0.0f64;
        for &(n, want) in points {
            let g = got(n);
            let e = rel(g, want);
            worst = worst.max(e);
            self.require(e <= tol, || {
                format!("{label} n={n}: {g} vs {want} (rel {e:.2e})")
            });
        }
        self.notes.push(format!("{label}: max rel {worst:.1e}"));
    }

    fn budget(&mut self, label: &str, took: Duration, limit: Duration) {
        self.require(took <= limit, || {
            format!("{label} took {took:.1?}, budget {limit:?}")
        });
        self.notes.push(format!("{label} {took:.1?}"));
    }
}

/// Expensive solves shared across criteria.
#[derive(Default)]
struct Cache {
    loom: BTreeMap<usize, SolveReport>,
    strict: BTreeMap<usize, SolveReport>,
    heuristic: BTreeMap<usize, SolveReport>,
}

impl Cache {
    fn loom(&mut self, n: usize) -> &SolveReport {
        self.loom
            .entry(n)
            .or_insert_with(|| solve_loom_nonstrict(n, &Portfolio::full(n)).expect("loom solve"))
    }

    fn strict(&mut self, n: usize) -> &SolveReport {
        self.strict
            .entry(n)
            .or_insert_with(|| solve_lo_strict(n, &Portfolio::full(n)).expect("strict solve"))
    }

    fn heuristic(&mut self, n: usize) -> &SolveReport {
        self.heuristic.entry(n).or_insert_with(|| {
            solve_lo_nonstrict_heuristic(n, &Portfolio::full(n), DEFAULT_MAX_SWEEPS)
                .expect("heuristic solve")
        })
    }
}

fn published(r: &SolveReport) -> f64 {
    r.total_with(PUBLISHED).unwrap().value()
}

fn published_table(t: &RuntimeTable) -> f64 {
    total_with_convention(t, PUBLISHED).unwrap().value()
}

const LOOM_OPTIMAL: [(usize, f64); 6] = [
    (4, 0.6199080253819765),
    (8, 0.8415295951187236),
    (16, 0.9068397341167463),
    (32, 0.9303317049752133),
    (64, 0.9436745578753213),
    (128, 0.9518070418038248),
];

fn optimal_loom_totals(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    c.loom(128);
    o.budget("n=128 solve", start.elapsed(), Duration::from_secs(120));
    o.series("optimal/(n ln n)", &LOOM_OPTIMAL, 1e-6, |n| {
        published(c.loom(n)) / ln_norm(n)
    });
    o
}

fn baseline_totals(_: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let one = [
        (4, 0.7213475204444817),
        (8, 0.9429489852754729),
        (16, 0.9691123046545619),
        (32, 0.9710341715398176),
        (64, 0.9739979802157617),
        (128, 0.9769106238426685),
        (256, 0.9794452633187157),
        (512, 0.9815727333924914),
        (1024, 0.9833450503559588),
    ];
    o.series("always-one/(n ln n)", &one, 1e-6, |n| {
        published_table(&evaluate_policy_loom(n, &always_one_policy(n).unwrap()).unwrap())
            / ln_norm(n)
    });
    let formula = [
        (4, 0.7889738504861519),
        (8, 1.1004459642365665),
        (16, 1.3198038019325313),
        (32, 1.5478443294861148),
        (64, 1.854223005957946),
        (128, 2.279597910929133),
        (256, 2.891750934952961),
        (512, 3.788092492330035),
    ];
    let eval = |n: usize, v: LoFormulaVariant| {
        published_table(&evaluate_policy_loom(n, &lo_formula_policy(n, v).unwrap()).unwrap())
            / ln_norm(n)
    };
    o.series("floor(n/(i+1)) formula/(n ln n)", &formula, 1e-6, |n| {
        eval(n, LoFormulaVariant::PlusOne)
    });
    let paper_finite = formula
        .iter()
        .any(|&(n, _)| eval(n, LoFormulaVariant::Paper).is_finite());
    o.notes.push(format!(
        "floor(n/i) formula {}",
        if paper_finite {
            "finite"
        } else {
            "infinite at every n (k > n-i near i = 1)"
        }
    ));
    o
}

fn lo_policy_totals(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let s_lo = [
        (4, 0.2994791666666667),
        (8, 0.3750065902693765),
        (16, 0.38596651471823235),
        (32, 0.3875143628368094),
        (64, 0.38803236473614383),
        (128, 0.3882592614981722),
    ];
    o.series("LO-optimal level policy/n^2", &s_lo, 1e-6, |n| {
        published(&solve(Setting::LO_NONSTRICT_LEVEL, n, &Portfolio::full(n)).unwrap()) / sq_norm(n)
    });
    let start = Instant::now();
    c.heuristic(256);
    o.budget(
        "n=256 heuristic",
        start.elapsed(),
        Duration::from_secs(30 * 60),
    );
    let heuristic = [
        (8, 0.3399544324444243),
        (16, 0.37944896466522865),
        (32, 0.38655490379539204),
        (64, 0.38790877308544774),
        (128, 0.3882423979647848),
        (256, 0.3883566447000756),
    ];
    o.series("(LO,OM) heuristic/n^2", &heuristic, 1e-5, |n| {
        published(c.heuristic(n)) / sq_norm(n)
    });
    o
}

fn strict_totals(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let strict = [
        (8, 0.2990749395461309),
        (16, 0.3316488202904247),
        (32, 0.3502670907258321),
        (64, 0.3642475244316819),
        (128, 0.37366356566874476),
        (256, 0.379750730734364),
    ];
    o.series("strict/n^2", &strict, 1e-6, |n| {
        published(c.strict(n)) / sq_norm(n)
    });
    o
}

fn worst_starts(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    for (label, report, want_state, want) in [
        (
            "strict",
            c.strict(128).clone(),
            StateLoOm::new_unchecked(41, 41),
            7469.51,
        ),
        (
            "standard",
            c.heuristic(128).clone(),
            StateLoOm::new_unchecked(3, 3),
            6362.68,
        ),
    ] {
        let (s, e) = report.runtimes.worst_state().unwrap();
        let e = e.value();
        o.require(s == want_state && (e - want).abs() <= 0.02, || {
            format!(
                "{label} worst start ({},{}) E={e:.4}, want ({},{}) E={want}",
                s.i, s.j, want_state.i, want_state.j
            )
        });
        o.notes.push(format!("{label} ({},{}) {e:.4}", s.i, s.j));
    }
    o
}

fn portfolio_totals(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let series: [(PortfolioLabel, [f64; 6]); 3] = [
        (
            PortfolioLabel::Pow2,
            [
                0.6424501353958665,
                0.8518724638923594,
                0.912055165165285,
                0.9343968939172913,
                0.9479737382389717,
                0.9562184961461839,
            ],
        ),
        (
            PortfolioLabel::First3,
            [
                0.6311790803889216,
                0.8914739518626114,
                0.9414098465768493,
                0.9518152887801266,
                0.9581812689781305,
                0.9629823554566624,
            ],
        ),
        (
            PortfolioLabel::Thirds,
            [
                0.6762633004167016,
                0.8748397954701824,
                0.9225242918350762,
                0.9406636769285354,
                0.9538927210276328,
                0.9633879669349147,
            ],
        ),
    ];
    let sizes = [4, 8, 16, 32, 64, 128];
    let mut totals: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (label, values) in &series {
        let points: Vec<(usize, f64)> = sizes.iter().copied().zip(values.iter().copied()).collect();
        o.series(&format!("{label}/(n ln n)"), &points, 1e-6, |n| {
            let p = make_portfolio(label, n).unwrap();
            published(&solve_loom_nonstrict(n, &p).unwrap()) / ln_norm(n)
        });
        for n in sizes {
            let p = make_portfolio(label, n).unwrap();
            totals.insert(
                (label.to_string(), n),
                published(&solve_loom_nonstrict(n, &p).unwrap()),
            );
        }
    }
    for n in sizes.into_iter().filter(|&n| n >= 32) {
        let full = published(c.loom(n));
        let pow2 = totals[&("pow2".to_string(), n)];
        let first3 = totals[&("first3".to_string(), n)];
        let thirds = totals[&("thirds".to_string(), n)];
        o.require(full <= pow2 && pow2 <= first3 && pow2 <= thirds, || {
            format!("ordering at n={n}: full {full}, pow2 {pow2}, first3 {first3}, thirds {thirds}")
        });
    }
    o
}

fn string_radii(_: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let small = compare_bitstring_vs_loom_with_cap(12, 12).unwrap();
    o.budget("n=12 scan", start.elapsed(), Duration::from_secs(60));
    o.notes.push(format!("n=12 count {}", small.len()));
    let start = Instant::now();
    let states = compare_bitstring_vs_loom(16).unwrap();
    o.budget("n=16 scan", start.elapsed(), Duration::from_secs(30 * 60));
    o.require(states.len() == 4, || {
        format!("n=16: {} differing states {states:?}", states.len())
    });
    let listed: Vec<String> = states
        .iter()
        .map(|s| format!("({},{})", s.i, s.j))
        .collect();
    o.notes.push(format!("n=16 {}", listed.join(" ")));
    o
}

fn oracle_agreement(_: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let opts = ValidateOptions {
        max_n: 10,
        argmin_max_n: 6,
        normalisation_max_n: 0,
        start_max_n: 0,
        perturbation: 0.0,
    };
    let report = validate::run(&opts).unwrap();
    for f in report.families.iter().filter(|f| f.checks > 0) {
        o.require(f.ok, || {
            format!(
                "{}: {} failures, first {:?}",
                f.name,
                f.failure_count,
                f.failures.first()
            )
        });
        o.notes.push(format!("{} {} checks", f.name, f.checks));
    }
    o
}

fn simulation_agreement(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    let n = 16;
    for (seed, setting) in Setting::BENCHMARKS.into_iter().enumerate() {
        let report = match setting {
            s if s == Setting::LOOM_NONSTRICT => c.loom(n).clone(),
            s if s == Setting::LO_STRICT => c.strict(n).clone(),
            s if s == Setting::LO_NONSTRICT => c.heuristic(n).clone(),
            s => solve(s, n, &Portfolio::full(n)).unwrap(),
        };
        let exact = report.total.value();
        let stats = run_many(
            &RunConfig::new(setting, report.policy, 1000 + seed as u64),
            100_000,
        )
        .unwrap();
        let z = (stats.mean_runtime - exact) / stats.stderr();
        o.require(z.abs() <= 3.0 && stats.hit_max_iterations == 0, || {
            format!(
                "{setting}: mean {} vs exact {exact} (z = {z:.2})",
                stats.mean_runtime
            )
        });
        o.notes.push(format!("{setting} z={z:+.2}"));
    }
    o
}

fn properties(c: &mut Cache) -> Outcome {
    let mut o = Outcome::default();
    for f in [
        validate::normalisation(12).unwrap(),
        validate::start_distribution(20).unwrap(),
    ] {
        o.require(f.ok, || format!("{}: {:?}", f.name, f.failures.first()));
    }

    // Under strict selection with k = 1 only the first zero may flip, so
    // every accepted move costs n expected steps and adds one to OM.
    let n = 128;
    let report = c.strict(n).clone();
    let zone: Vec<StateLoOm> = index::descending(n).skip(1).filter(|s| s.j >= 96).collect();
    let mut literal = true;
    for s in &zone {
        let k = report.policy.radius_at(*s).unwrap();
        let e = report.runtimes.loom(*s).value();
        o.require(k == 1, || format!("radius {k} at ({},{})", s.i, s.j));
        o.require(rel(e, ((n - s.j) * n) as f64) <= 1e-12, || {
            format!("E({},{}) = {e}, (n-j)n = {}", s.i, s.j, (n - s.j) * n)
        });
        literal &= rel(e, (s.j * n) as f64) <= 1e-12;
    }
    o.known_failure(
        literal,
        "E = j*n in the one-bit zone".into(),
        "first-step analysis gives (n-j)*n, which holds exactly; j*n at j=96 would exceed the worst start value",
    );

    for m in [8, 16, 32, 64, 128] {
        let sweeps = c.heuristic(m).per_level_iterations.clone().unwrap();
        let max = sweeps.iter().copied().max().unwrap_or(0);
        o.warn(max <= 5, || {
            format!("n={m}: up to {max} sweeps in one level")
        });
    }

    for m in [8, 16, 32, 64, 128, 256] {
        let (strict, standard) = (published(c.strict(m)), published(c.heuristic(m)));
        let (s_true, n_true) = (c.strict(m).total.value(), c.heuristic(m).total.value());
        o.require(strict < standard && s_true < n_true, || {
            format!("n={m}: strict {strict} vs standard {standard}")
        });
    }
    o
}

type Criterion = (&'static str, fn(&mut Cache) -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("optimal (LO,OM) totals", optimal_loom_totals),
        ("always-one and LO-formula totals", baseline_totals),
        ("LeadingOnes policy totals", lo_policy_totals),
        ("strict selection totals", strict_totals),
        ("worst start states at n=128", worst_starts),
        ("portfolio totals and ordering", portfolio_totals),
        ("string vs (LO,OM) radii", string_radii),
        ("oracle agreement", oracle_agreement),
        ("simulation agreement", simulation_agreement),
        ("structural properties", properties),
    ];
    let mut cache = Cache::default();
    let mut unexpected = 0;
    println!();
    for (t, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run(&mut cache);
        let status = match (o.failures.is_empty(), o.known.is_empty()) {
            (true, true) if o.warnings.is_empty() => "PASS",
            (true, true) => "PASS (with warnings)",
            (true, false) => "FAIL (known)",
            (false, _) => "FAIL",
        };
        unexpected += o.failures.len();
        println!(
            "criterion {:>2} {status}: {name} [{:.1?}] {}",
            t + 1,
            start.elapsed(),
            o.notes.join("; ")
        );
        for f in &o.failures {
            println!("    fail: {f}");
        }
        for f in &o.known {
            println!("    known failure: {f}");
        }
        for w in &o.warnings {
            println!("    warn: {w}");
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
