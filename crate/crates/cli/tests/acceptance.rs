//! Acceptance checks, one verdict line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Lines starting with `note` carry reference targets that are reported but
//! not asserted.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pinch_noma::{
    asymptotic_decoupled_power, equal_power_solve, evaluate_solution, fixed_point_solve, verify_standard_properties,
    ChannelTable, RateRequirements, SolverOptions, Termination, UpdateSchedule,
};
use pinch_noma_cli::config::{RateSpec, ScenarioConfig};
use pinch_noma_cli::summary::{summarize, Reduction, SummaryOptions};
use pinch_noma_cli::sweep::{config_at, run_sweep, Method, SweepParam, SweepSpec};
use pinch_noma_cli::verify::{oracle_check, uniqueness_gap};

const MAX_ITERATIONS: usize = 10;
const SOLVE_TIME_LIMIT: Duration = Duration::from_secs(1);
const RATIO_TARGETS: [(f64, f64); 3] = [(5e6, 0.515), (10e6, 0.573), (15e6, 0.940)];
const RATIO_BAND: f64 = 0.10;
const REQUIRED_REDUCTION: f64 = 0.50;
const REDUCTION_TARGET: f64 = 0.760;
const REDUCTION_BAND: f64 = 0.15;
const ORACLE_INSTANCES: usize = 5;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const PROPERTY_SAMPLES: usize = 1000;
const UNIQUENESS_TOLERANCE: f64 = 1e-8;
const RATE_TOLERANCE: f64 = 1e-6;
const ASYMPTOTE_GAP: f64 = 0.01;
const CLOSED_FORM_TOLERANCE: f64 = 1e-9;

const C: f64 = 299_792_458.0;

struct Verdicts {
    failed: Vec<&'static str>,
}

impl Verdicts {
    fn report(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn note(on_target: bool, detail: String) {
    println!("       note ({}): {detail}", if on_target { "on target" } else { "off target" });
}

fn context(detail: String) {
    println!("       note: {detail}");
}

fn scenario(n: usize, m: usize, rate: f64) -> ScenarioConfig {
    ScenarioConfig {
        num_waveguides: n,
        users_per_waveguide: m,
        rate: RateSpec::Uniform(rate),
        ..ScenarioConfig::default()
    }
}

fn max_shortfall(table: &ChannelTable, config: &ScenarioConfig) -> f64 {
    let req = config.requirements().unwrap();
    let (state, _) = fixed_point_solve(table, &req, &config.solver_options()).unwrap();
    let eval = evaluate_solution(table, &state, &req, None).unwrap();
    eval.relative_shortfall.iter().map(|s| s.abs()).fold(0.0, f64::max)
}

fn convergence(v: &mut Verdicts) {
    let mut worst_iter = 0;
    let mut worst_time = Duration::ZERO;
    let mut ok = true;
    for n in [2, 3] {
        for rate in [5e6, 10e6, 15e6] {
            let c = scenario(n, 2, rate);
            let start = Instant::now();
            let table = c.channel_table().unwrap();
            let (_, rep) = fixed_point_solve(&table, &c.requirements().unwrap(), &c.solver_options()).unwrap();
            let took = start.elapsed();
            ok &= rep.terminated_by == Termination::Tolerance && rep.iterations_used <= MAX_ITERATIONS;
            ok &= took < SOLVE_TIME_LIMIT;
            worst_iter = worst_iter.max(rep.iterations_used);
            worst_time = worst_time.max(took);
        }
    }
    let jacobi: Vec<String> = [2, 3]
        .iter()
        .flat_map(|&n| [5e6, 10e6, 15e6].map(|r| (n, r)))
        .map(|(n, rate)| {
            let c = ScenarioConfig { schedule: UpdateSchedule::Jacobi, ..scenario(n, 2, rate) };
            let table = c.channel_table().unwrap();
            let (_, rep) = fixed_point_solve(&table, &c.requirements().unwrap(), &c.solver_options()).unwrap();
            rep.iterations_used.to_string()
        })
        .collect();
    v.report(
        "1 convergence",
        ok,
        format!("6 scenarios, at most {worst_iter} iterations (limit {MAX_ITERATIONS}), slowest {worst_time:?}"),
    );
    context(format!("Jacobi schedule on the same scenarios: {} iterations", jacobi.join(" / ")));
}

fn proposed_total(c: &ScenarioConfig) -> f64 {
    let table = c.channel_table().unwrap();
    fixed_point_solve(&table, &c.requirements().unwrap(), &c.solver_options()).unwrap().0.total_power()
}

fn scaling_ratios(v: &mut Verdicts) {
    let ratios: Vec<f64> = RATIO_TARGETS
        .iter()
        .map(|&(rate, _)| proposed_total(&scenario(3, 2, rate)) / proposed_total(&scenario(2, 2, rate)) - 1.0)
        .collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
    v.report(
        "2 waveguide scaling",
        increasing,
        format!("N=2->3 increase at 5/10/15 Mbps = {}, strictly increasing", shown.join(" / ")),
    );
    for (&(rate, target), &r) in RATIO_TARGETS.iter().zip(&ratios) {
        note(
            (r - target).abs() <= RATIO_BAND,
            format!(
                "{} Mbps: {:.1}% vs reference {:.1}% +/- {:.0} pp",
                rate / 1e6,
                100.0 * r,
                100.0 * target,
                100.0 * RATIO_BAND
            ),
        );
    }
}

fn baseline(v: &mut Verdicts) {
    let opts = SolverOptions::default();
    let mut dominance = true;
    let mut ceiling_agrees = true;
    let mut checked = 0;
    let mut ceiling_points = 0;
    for m in [2, 3] {
        let ceiling = 10e6 * (1.0 + 1.0 / (m - 1) as f64).log2();
        for n in 1..=7 {
            for rate in [1e6, 3e6, 5e6, 5.8e6, 8e6, 10e6, 15e6] {
                let c = scenario(n, m, rate);
                let table = c.channel_table().unwrap();
                let req = c.requirements().unwrap();
                let eq = equal_power_solve(&table, &req, &opts).unwrap();
                ceiling_points += 1;
                ceiling_agrees &= eq.ceiling_violation.is_some() == (rate >= ceiling);
                if let Some(e) = eq.total_power() {
                    dominance &= fixed_point_solve(&table, &req, &opts).unwrap().0.total_power() <= e;
                    checked += 1;
                }
            }
        }
    }

    let rows = run_sweep(
        &scenario(2, 2, 10e6),
        &SweepSpec {
            param: SweepParam::RateTarget,
            values: vec![5e6, 10e6],
            methods: vec![Method::Proposed, Method::Equal],
        },
    )
    .unwrap();
    let s = summarize(&rows, None, &SummaryOptions::new(SweepParam::RateTarget));
    let at = |p: f64| s.reductions.iter().find(|(q, _)| *q == p).map(|(_, r)| *r);
    let at10 = at(10e6).expect("reduction at 10 Mbps");
    let required = at10.fraction() >= REQUIRED_REDUCTION;
    let label = match at10 {
        Reduction::Finite(r) => format!("{:.1}%", 100.0 * r),
        Reduction::EqualInfeasible => "100% (equal split cannot reach 10 Mbps at rank 1: gamma (M-1) = 1)".into(),
    };
    v.report(
        "3 baseline dominance",
        dominance && ceiling_agrees && required && checked > 0,
        format!(
            "proposed <= equal at {checked} feasible points; ceiling rule exact on {ceiling_points} points; reduction at N=2 M=2 10 Mbps = {label}"
        ),
    );
    note(
        (at10.fraction() - REDUCTION_TARGET).abs() <= REDUCTION_BAND,
        format!("reduction {:.1}% vs reference 76.0% +/- 15 pp", 100.0 * at10.fraction()),
    );
    if let Some(r) = at(5e6) {
        context(format!("reduction at 5 Mbps where the equal split is feasible = {:.1}%", 100.0 * r.fraction()));
    }
}

fn oracle(v: &mut Verdicts) {
    let opts = SolverOptions::default();
    let mut cases: Vec<(String, ChannelTable, RateRequirements)> = Vec::new();
    for (n, m, rate) in [(2, 2, 5e6), (1, 1, 10e6), (2, 1, 10e6), (1, 2, 5e6), (1, 3, 3e6), (4, 1, 5e6)] {
        let c = scenario(n, m, rate);
        cases.push((
            format!("default N={n} M={m} {} Mbps", rate / 1e6),
            c.channel_table().unwrap(),
            c.requirements().unwrap(),
        ));
    }
    let sym = ChannelTable::from_normalized(2, 1, vec![1e-5; 2], |_, _, _, _| 0.3).unwrap();
    cases.push(("symmetric N=2 M=1 g=0.3".into(), sym, RateRequirements::uniform(2, 1, 10e6, 10e6).unwrap()));

    let mut passed = 0;
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for (label, table, req) in &cases {
        let start = Instant::now();
        let check = oracle_check(table, req, &opts, None, 40).unwrap();
        let took = start.elapsed();
        slowest = slowest.max(took);
        if check.passed() && took < ORACLE_TIME_LIMIT {
            passed += 1;
        } else {
            failures.push(label.clone());
        }
    }
    v.report(
        "4 oracle optimality",
        failures.is_empty() && passed >= ORACLE_INSTANCES,
        format!(
            "{passed}/{} instances within 2*res*N*M of the grid optimum, slowest {slowest:?}{}",
            cases.len(),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    );
}

fn standard_function(v: &mut Verdicts) {
    let mut violations = 0;
    let mut samples = 0;
    for (seed, (n, m, rate)) in [(2, 2, 10e6), (3, 2, 15e6), (2, 3, 5e6)].into_iter().enumerate() {
        let c = scenario(n, m, rate);
        let rep = verify_standard_properties(
            &c.channel_table().unwrap(),
            &c.requirements().unwrap(),
            PROPERTY_SAMPLES,
            seed as u64,
        )
        .unwrap();
        samples += rep.samples;
        violations += rep.positivity_violations + rep.monotonicity_violations + rep.scalability_violations;
    }
    let mut gap: f64 = 0.0;
    for n in [2, 3] {
        for rate in [5e6, 10e6, 15e6] {
            let c = scenario(n, 2, rate);
            let g = uniqueness_gap(
                &c.channel_table().unwrap(),
                &c.requirements().unwrap(),
                &c.solver_options(),
                (1e-9, 1e-2),
            )
            .unwrap();
            gap = gap.max(g);
        }
    }
    v.report(
        "5 standard function",
        violations == 0 && gap <= UNIQUENESS_TOLERANCE,
        format!("{samples} samples x 3 properties, {violations} violations; start 1e-9 W vs 1e-2 W differ by {gap:.1e} (limit {UNIQUENESS_TOLERANCE:.0e})"),
    );
}

fn exact_rates(v: &mut Verdicts) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut configs = Vec::new();
    for n in 1..=7 {
        for m in [1, 2, 3] {
            for rate in [5e6, 10e6, 15e6] {
                configs.push(scenario(n, m, rate));
            }
        }
    }
    for d in [5.0, 7.75, 12.5, 20.0, 33.25, 40.0, 500.0] {
        configs.push(config_at(&scenario(2, 2, 10e6), SweepParam::IntervalD, d).unwrap());
    }
    for c in &configs {
        let table = c.channel_table().unwrap();
        let req = c.requirements().unwrap();
        let (_, rep) = fixed_point_solve(&table, &req, &c.solver_options()).unwrap();
        if rep.feasible {
            worst = worst.max(max_shortfall(&table, c));
            count += 1;
        }
    }
    v.report(
        "6 exact rates",
        count > 0 && worst <= RATE_TOLERANCE,
        format!("{count} fixed points, largest relative rate deviation {worst:.1e} (limit {RATE_TOLERANCE:.0e})"),
    );
}

fn large_d(v: &mut Verdicts) {
    let base = scenario(2, 2, 10e6);
    let far = config_at(&base, SweepParam::IntervalD, 500.0).unwrap();
    let total = proposed_total(&far);
    let asym =
        asymptotic_decoupled_power(&far.requirements().unwrap(), far.height, &far.params().unwrap(), far.noise_power)
            .unwrap();
    let gap = total / asym - 1.0;

    let spec = SweepSpec::parse("interval_D=1:40:0.25", "proposed").unwrap();
    let rows = run_sweep(&base, &spec).unwrap();
    let env = summarize(&rows, None, &SummaryOptions::new(SweepParam::IntervalD)).envelope.expect("envelope");
    let peaks: Vec<String> =
        env.window_peaks.iter().map(|(_, p)| p.map_or("-".into(), |p| format!("{p:.3e}"))).collect();
    v.report(
        "7 large-D behaviour",
        gap.abs() < ASYMPTOTE_GAP && env.nonincreasing,
        format!(
            "(a) gap to asymptote at D=500 m = {:+.3}% (limit 1%); (b) {} local maxima on [5, 40] m, 7 m window peaks {} W, nonincreasing = {}",
            100.0 * gap,
            env.maxima.len(),
            peaks.join(" "),
            env.nonincreasing
        ),
    );
}

fn closed_forms(v: &mut Verdicts) {
    let c = scenario(1, 1, 10e6);
    let (fc, d, sigma2) = (c.carrier_frequency, c.height, c.noise_power);
    let eta = C * C / (16.0 * std::f64::consts::PI.powi(2) * fc * fc);
    let gamma = 2f64.powf(10e6 / c.bandwidth) - 1.0;
    let expect_single = gamma * sigma2 * d * d / eta;
    let single = proposed_total(&c);
    let err_single = (single - expect_single).abs() / expect_single;

    let (noise, g) = (1.7e-5, 0.35);
    let table = ChannelTable::from_normalized(2, 1, vec![noise; 2], |_, _, _, _| g).unwrap();
    let req = RateRequirements::uniform(2, 1, 8e6, 10e6).unwrap();
    let gamma = 2f64.powf(0.8) - 1.0;
    let expect_pair = gamma * noise / (1.0 - gamma * g);
    let (state, _) = fixed_point_solve(&table, &req, &SolverOptions::default()).unwrap();
    let err_pair = state.powers().iter().map(|p| (p - expect_pair).abs() / expect_pair).fold(0.0, f64::max);

    v.report(
        "8 closed forms",
        err_single <= CLOSED_FORM_TOLERANCE && err_pair <= CLOSED_FORM_TOLERANCE,
        format!("single user {err_single:.1e}, symmetric pair {err_pair:.1e} relative error (limit {CLOSED_FORM_TOLERANCE:.0e})"),
    );
}

fn main() -> ExitCode {
    let mut v = Verdicts { failed: Vec::new() };
    convergence(&mut v);
    scaling_ratios(&mut v);
    baseline(&mut v);
    oracle(&mut v);
    standard_function(&mut v);
    exact_rates(&mut v);
    large_d(&mut v);
    closed_forms(&mut v);
    if v.failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing {}", v.failed.join(", "));
        ExitCode::FAILURE
    }
}
