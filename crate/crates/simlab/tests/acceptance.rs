//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use macoff_core::binary_offload::{
    full_ma_bounds, full_ma_point, mac_min_power, merge_first_slots, solve_binary, tdma_energy, tdma_rate_interval,
    BinaryParams,
};
use macoff_core::model::{exp2m1, local_dvs_energy, region_member};
use macoff_core::partial_offload::{solve_mixed, solve_partial, PartialFullMa, PartialParams, Variant};
use macoff_core::scalar_opt::CoordinateProblem;
use macoff_core::{Allocation, LocalComputeModel, Mode, RadioLink, Scenario, Scheme, Solution, TaskSpec};
use macoff_oracle::{oracle_mixed, oracle_solve, GridSpec};
use macoff_simlab::montecarlo::offloaded_fractions;
use macoff_simlab::sweep::{curve, onset};
use macoff_simlab::{run_montecarlo, run_sweep, Config, MonteCarloSpec, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TS: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(failures: &[String], summary: String) -> Self {
        let detail = if failures.is_empty() {
            summary
        } else {
            let shown: Vec<&str> = failures.iter().take(4).map(String::as_str).collect();
            format!("{summary}; {} failure(s): {}", failures.len(), shown.join(" | "))
        };
        Outcome {
            pass: failures.is_empty(),
            detail,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn energy(s: &Solution) -> f64 {
    if s.feasible {
        s.total_energy()
    } else {
        f64::INFINITY
    }
}

fn le(a: f64, b: f64, slack: f64) -> bool {
    a <= b || a <= b * (1.0 + slack)
}

fn config(name: &str) -> Config {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    Config::load(&p).unwrap()
}

/// Unit noise and symbol interval: gains are effective gains and deadlines
/// count channel uses.
fn binary_scenario(rng: &mut ChaCha8Rng, equal_gains: bool) -> Scenario {
    let bits = [rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0)];
    let l1 = rng.gen_range(1.0..3.0);
    let l2 = l1 + rng.gen_range(0.0..3.0);
    let a1 = rng.gen_range(0.2..5.0);
    let a2 = if equal_gains { a1 } else { rng.gen_range(0.2..5.0) };
    let budget = [rng.gen_range(0.5..20.0), rng.gen_range(0.5..20.0)];
    Scenario::new(
        TaskSpec::new(bits[0], l1),
        RadioLink::new(a1, budget[0]),
        TaskSpec::new(bits[1], l2),
        RadioLink::new(a2, budget[1]),
        1.0,
        1.0,
    )
    .unwrap()
}

fn binary_pool() -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..1000).map(|_| binary_scenario(&mut rng, false)).collect()
}

/// Divisible-task scenarios with dynamic-voltage-scaling local compute.
fn partial_scenario(rng: &mut ChaCha8Rng, equal_gains: bool) -> Scenario {
    let m = LocalComputeModel::new(1e-18, 0.0).unwrap();
    let task = |b: f64, l: f64| TaskSpec::new(b, l).with_downlink_time(0.2).with_local_model(m);
    let bits = [rng.gen_range(1e6..6e6), rng.gen_range(1e6..6e6)];
    let l1 = rng.gen_range(1.0..2.0);
    let l2 = l1 + rng.gen_range(0.0..1.5);
    let h1 = rng.gen_range(0.1..5.0);
    let h2 = if equal_gains { h1 } else { rng.gen_range(0.1..5.0) };
    let pbar = [rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)];
    Scenario::new(
        task(bits[0], l1),
        RadioLink::new(h1, pbar[0] * TS),
        task(bits[1], l2),
        RadioLink::new(h2, pbar[1] * TS),
        1e-3 * TS,
        TS,
    )
    .unwrap()
}

fn scaled_budgets(s: &Scenario, f: f64) -> Scenario {
    let u = *s.users();
    let mut l = *s.links();
    for link in &mut l {
        link.power_budget *= f;
    }
    Scenario::new(u[0], l[0], u[1], l[1], s.noise(), s.symbol_interval()).unwrap()
}

fn criterion_1() -> Outcome {
    let pool = binary_pool();
    let g = GridSpec::default();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let mut worst = 0.0f64;
    for scheme in Scheme::ALL {
        let (mut feasible, mut checked, mut margin_skips) = (0, 0, 0);
        for (i, s) in pool.iter().enumerate() {
            if feasible == 200 {
                break;
            }
            let sol = solve_binary(s, scheme).unwrap();
            let lo = solve_binary(&scaled_budgets(s, 1.0 - 1e-6), scheme).unwrap().feasible;
            let hi = solve_binary(&scaled_budgets(s, 1.0 + 1e-6), scheme).unwrap().feasible;
            if lo != hi {
                margin_skips += 1;
                continue;
            }
            let o = oracle_solve(s, scheme, Mode::Binary, &g).unwrap();
            checked += 1;
            if sol.feasible != o.feasible {
                failures.push(format!("{scheme} #{i}: solver feasible {} oracle {}", sol.feasible, o.feasible));
                continue;
            }
            if sol.feasible {
                feasible += 1;
                let r = rel(sol.total_energy(), o.total_energy());
                worst = worst.max(r);
                if r > 1e-3 {
                    failures.push(format!("{scheme} #{i}: solver {} oracle {}", sol.total_energy(), o.total_energy()));
                }
            }
        }
        if feasible < 200 {
            failures.push(format!("{scheme}: only {feasible} feasible scenarios in the pool"));
        }
        summary.push(format!("{scheme} {feasible} feasible/{checked} checked/{margin_skips} at margin"));
    }
    Outcome::new(&failures, format!("{}; worst rel diff {worst:.2e}", summary.join(", ")))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool: Vec<Scenario> = (0..100).map(|_| partial_scenario(&mut rng, false)).collect();
    let g = GridSpec::default();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut feasible = [0usize; 4];
    for (i, s) in pool.iter().enumerate() {
        let pairs = [
            (Scheme::FullMa, Mode::Partial),
            (Scheme::Tdma, Mode::Partial),
            (Scheme::FullMa, Mode::Mixed),
            (Scheme::Tdma, Mode::Mixed),
        ];
        for (j, (scheme, mode)) in pairs.into_iter().enumerate() {
            let (sol, o) = match mode {
                Mode::Partial => (solve_partial(s, scheme).unwrap(), oracle_solve(s, scheme, mode, &g).unwrap()),
                _ => (solve_mixed(s, scheme, 0).unwrap(), oracle_mixed(s, scheme, 0, &g).unwrap()),
            };
            if sol.feasible != o.feasible {
                failures.push(format!("{mode} {scheme} #{i}: solver feasible {} oracle {}", sol.feasible, o.feasible));
                continue;
            }
            if sol.feasible {
                feasible[j] += 1;
                let r = rel(sol.total_energy(), o.total_energy());
                worst = worst.max(r);
                if r > 1e-2 {
                    failures.push(format!("{mode} {scheme} #{i}: solver {} oracle {}", sol.total_energy(), o.total_energy()));
                }
            }
        }
    }
    Outcome::new(
        &failures,
        format!("100 scenarios; feasible partial FullMA/TDMA {}/{}, mixed {}/{}; worst rel diff {worst:.2e}", feasible[0], feasible[1], feasible[2], feasible[3]),
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let mut counted = 0;
    for (i, s) in binary_pool().iter().enumerate() {
        let [fm, sd, id, td] = [Scheme::FullMa, Scheme::Sdwts, Scheme::Id, Scheme::Tdma].map(|sch| energy(&solve_binary(s, sch).unwrap()));
        if !fm.is_finite() && !sd.is_finite() && !id.is_finite() && !td.is_finite() {
            continue;
        }
        counted += 1;
        let ok = le(fm, sd, 1e-9) && le(sd, id, 1e-9) && le(fm, td, 1e-9);
        if !ok {
            failures.push(format!("#{i}: FullMA {fm} SDwts {sd} ID {id} TDMA {td}"));
        }
    }
    Outcome::new(&failures, format!("{counted} scenarios with a feasible scheme"))
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let (mut n, mut worst) = (0, 0.0f64);
    for (i, s) in binary_pool().iter().enumerate() {
        if n == 100 {
            break;
        }
        let td = solve_binary(s, Scheme::Tdma).unwrap();
        if !td.feasible {
            continue;
        }
        n += 1;
        let id = energy(&solve_binary(s, Scheme::Id).unwrap());
        let r = (id - td.total_energy()).abs() / td.total_energy();
        worst = worst.max(r);
        if r > 1e-6 {
            failures.push(format!("#{i}: ID {id} TDMA {}", td.total_energy()));
        }
    }
    if n < 100 {
        failures.push(format!("only {n} TDMA-feasible scenarios"));
    }
    Outcome::new(&failures, format!("{n} TDMA-feasible scenarios; worst rel diff {worst:.2e}"))
}

fn room_in_budget(s: &Scenario, sol: &Solution) -> bool {
    let Some(a) = sol.allocation.filter(|_| sol.feasible) else {
        return false;
    };
    let b = s.budgets();
    a.p11 + a.p21 <= b[0].min(b[1])
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut n, mut draws, mut worst_e) = (0, 0, 0.0f64);
    while n < 100 && draws < 5000 {
        draws += 1;
        let s = binary_scenario(&mut rng, true);
        let fm = solve_binary(&s, Scheme::FullMa).unwrap();
        if !room_in_budget(&s, &fm) {
            continue;
        }
        n += 1;
        let td = energy(&solve_binary(&s, Scheme::Tdma).unwrap());
        let r = rel(fm.total_energy(), td);
        worst_e = worst_e.max(r);
        if r > 1e-6 {
            failures.push(format!("binary draw {draws}: FullMA {} TDMA {td}", fm.total_energy()));
        }
    }
    let binary = n;
    let (mut n, mut draws, mut worst_p, mut worst_g) = (0, 0, 0.0f64, 0.0f64);
    while n < 100 && draws < 5000 {
        draws += 1;
        let s = partial_scenario(&mut rng, true);
        let fm = solve_partial(&s, Scheme::FullMa).unwrap();
        if !room_in_budget(&s, &fm) {
            continue;
        }
        n += 1;
        let td = solve_partial(&s, Scheme::Tdma).unwrap();
        let r = rel(fm.total_energy(), energy(&td));
        worst_p = worst_p.max(r);
        if r > 1e-6 {
            failures.push(format!("partial draw {draws}: FullMA {} TDMA {}", fm.total_energy(), energy(&td)));
        }
        let (f, t) = (offloaded_fractions(&fm), offloaded_fractions(&td));
        let dg = (f.0 - t.0).abs().max((f.1 - t.1).abs());
        worst_g = worst_g.max(dg);
        if dg > 1e-6 {
            failures.push(format!("partial draw {draws}: fractions FullMA {f:?} TDMA {t:?}"));
        }
    }
    if binary < 100 || n < 100 {
        failures.push(format!("only {binary} binary and {n} partial qualifying scenarios"));
    }
    Outcome::new(
        &failures,
        format!("{binary} binary, {n} partial scenarios; worst rel diff {worst_e:.2e} / {worst_p:.2e}, worst fraction diff {worst_g:.2e}"),
    )
}

/// Indices where a curve of `(x, energy)` pairs rises by more than `slack`.
fn rises(points: &[(f64, f64)], slack: f64) -> Vec<String> {
    points
        .windows(2)
        .filter(|w| !le(w[1].1, w[0].1, slack))
        .map(|w| format!("{} -> {} at {} -> {}", w[0].1, w[1].1, w[0].0, w[1].0))
        .collect()
}

fn feasible_curve(points: &[macoff_simlab::SweepPoint], scheme: Scheme, mode: Mode) -> Vec<(f64, f64)> {
    curve(points, scheme, mode)
        .into_iter()
        .filter(|(_, s)| s.feasible)
        .map(|(v, s)| (v, s.total_energy()))
        .collect()
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let spec = SweepSpec::from_config(&config("weak-pair.toml"), 0).unwrap();
    let pts = run_sweep(&spec).unwrap();
    let elapsed = t.elapsed();
    let mut failures = Vec::new();
    let order = [Scheme::FullMa, Scheme::Sdwts, Scheme::Id, Scheme::Tdma];
    let onsets = order.map(|s| onset(&pts, s, Mode::Binary).unwrap_or(f64::INFINITY));
    if onsets.windows(2).any(|w| w[0] > w[1]) {
        failures.push(format!("onsets out of order: {onsets:?}"));
    }
    for scheme in order {
        for r in rises(&feasible_curve(&pts, scheme, Mode::Binary), 1e-9) {
            failures.push(format!("{scheme} rises {r}"));
        }
    }
    let (fm, sd) = (curve(&pts, Scheme::FullMa, Mode::Binary), curve(&pts, Scheme::Sdwts, Mode::Binary));
    let mut worst = (0.0f64, 0.0);
    for ((v, a), (_, b)) in fm.iter().zip(&sd) {
        if a.feasible && b.feasible {
            let r = rel(a.total_energy(), b.total_energy());
            if r > worst.0 {
                worst = (r, *v);
            }
            if r > 1e-3 {
                failures.push(format!("FullMA {} vs SDwts {} at h1_sq {v}", a.total_energy(), b.total_energy()));
            }
        }
    }
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("took {elapsed:?}"));
    }
    Outcome::new(
        &failures,
        format!(
            "onsets FullMA {:.2} SDwts {:.2} ID {:.2} TDMA {:.2}; FullMA/SDwts worst rel diff {:.2e} at h1_sq {:.2}; {elapsed:.1?}",
            onsets[0], onsets[1], onsets[2], onsets[3], worst.0, worst.1
        ),
    )
}

fn criterion_7() -> Outcome {
    let spec = SweepSpec::from_config(&config("latency-sweep.toml"), 0).unwrap();
    let pts = run_sweep(&spec).unwrap();
    let mut failures = Vec::new();
    for scheme in Scheme::ALL {
        let c = feasible_curve(&pts, scheme, Mode::Binary);
        if c.is_empty() {
            failures.push(format!("{scheme} never feasible"));
        }
        for r in rises(&c, 1e-9) {
            failures.push(format!("{scheme} rises {r}"));
        }
    }
    let fm = curve(&pts, Scheme::FullMa, Mode::Binary);
    let td = curve(&pts, Scheme::Tdma, Mode::Binary);
    let gap: Vec<(f64, f64)> = fm
        .iter()
        .zip(&td)
        .filter(|((_, a), (_, b))| a.feasible && b.feasible)
        .map(|((v, a), (_, b))| (*v, b.total_energy() - a.total_energy()))
        .collect();
    for &(v, g) in &gap {
        if g < -1e-9 * fm[0].1.total_energy().max(1.0) {
            failures.push(format!("TDMA below FullMA at L2 {v}"));
        }
    }
    for w in gap.windows(2) {
        let scale = fm.iter().find(|(v, _)| *v == w[1].0).map_or(1.0, |(_, s)| s.total_energy());
        if w[1].1 > w[0].1 + 1e-9 * scale {
            failures.push(format!("gap grows {} -> {} at L2 {} -> {}", w[0].1, w[1].1, w[0].0, w[1].0));
        }
    }
    let (first, last) = (gap.first().copied().unwrap_or_default(), gap.last().copied().unwrap_or_default());
    Outcome::new(
        &failures,
        format!("{} points; TDMA-FullMA gap {:.4} at L2 {} to {:.4} at L2 {}", pts.len(), first.1, first.0, last.1, last.0),
    )
}

fn criterion_8() -> Outcome {
    let c = config("partial-gain.toml");
    let spec = SweepSpec::from_config(&c, 0).unwrap();
    let pts = run_sweep(&spec).unwrap();
    let h2 = c.user2.gain;
    let mut failures = Vec::new();
    let e = |sch, mode| curve(&pts, sch, mode).into_iter().map(|(v, s)| (v, energy(s))).collect::<Vec<_>>();
    for scheme in [Scheme::FullMa, Scheme::Tdma] {
        for ((v, p), (_, b)) in e(scheme, Mode::Partial).iter().zip(e(scheme, Mode::Binary)) {
            if !p.is_finite() || !le(*p, b, 1e-9) {
                failures.push(format!("{scheme} partial {p} above binary {b} at h1_sq {v}"));
            }
        }
    }
    let mut meet = f64::NAN;
    for mode in [Mode::Binary, Mode::Partial] {
        let fm = e(Scheme::FullMa, mode);
        let td = e(Scheme::Tdma, mode);
        match fm.iter().zip(&td).find(|((v, _), _)| *v == h2) {
            Some(((_, a), (_, b))) => {
                let r = rel(*a, *b);
                meet = if meet.is_nan() { r } else { meet.max(r) };
                if r > 1e-6 {
                    failures.push(format!("{mode} FullMA {a} TDMA {b} at equal gains"));
                }
            }
            None => failures.push(format!("no grid point at h1_sq = {h2}")),
        }
    }
    let bin_fm = e(Scheme::FullMa, Mode::Binary);
    let par_td = e(Scheme::Tdma, Mode::Partial);
    let mut strong = 0;
    for ((v, b), (_, p)) in bin_fm.iter().zip(&par_td) {
        if *v >= 5.0 * h2 {
            strong += 1;
            if !(b < p) {
                failures.push(format!("binary FullMA {b} not below partial TDMA {p} at h1_sq {v}"));
            }
        }
    }
    if strong == 0 {
        failures.push("no grid point with h1_sq >= 5 h2_sq".into());
    }
    for scheme in [Scheme::FullMa, Scheme::Tdma] {
        let g: Vec<(f64, f64)> = curve(&pts, scheme, Mode::Partial)
            .into_iter()
            .map(|(v, s)| (v, offloaded_fractions(s).0))
            .collect();
        for w in g.windows(2) {
            if w[1].1 < w[0].1 - 1e-9 {
                failures.push(format!("{scheme} gamma11 drops {} -> {} at h1_sq {} -> {}", w[0].1, w[1].1, w[0].0, w[1].0));
            }
        }
    }
    Outcome::new(
        &failures,
        format!("{} points; equal-gain rel diff {meet:.2e}; {strong} points with h1_sq >= 5 h2_sq", pts.len()),
    )
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let base = config("fading.toml");
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let runs = [
        (Mode::Binary, vec![100.0, 300.0, 500.0, 700.0, 900.0]),
        (Mode::Partial, vec![100.0, 500.0, 900.0]),
    ];
    for (mode, d) in runs {
        let mut spec = MonteCarloSpec::from_config(&base).unwrap();
        spec.trials = 10_000;
        spec.modes = vec![mode];
        spec.schemes = vec![Scheme::FullMa, Scheme::Tdma];
        spec.distance1 = d.clone();
        let r = run_montecarlo(&spec).unwrap();
        let mut gaps = Vec::new();
        for &d1 in &d {
            let m = |sch| r.aggregate(d1, mode, sch).and_then(|a| a.mean_energy_norm);
            let (Some(fm), Some(td)) = (m(Scheme::FullMa), m(Scheme::Tdma)) else {
                failures.push(format!("{mode} d1 {d1}: no jointly feasible trial"));
                continue;
            };
            if !le(fm, td, 1e-9) {
                failures.push(format!("{mode} d1 {d1}: mean FullMA {fm} above TDMA {td}"));
            }
            gaps.push((d1, (td - fm) / fm));
        }
        let g = |d1: f64| gaps.iter().find(|(d, _)| *d == d1).map(|p| p.1);
        if let (Some(a), Some(b)) = (g(500.0), g(900.0)) {
            if !(a < b) {
                failures.push(format!("{mode}: gap at 500 m {a:.3e} not below gap at 900 m {b:.3e}"));
            }
            summary.push(format!("{mode} gap {a:.3e} at 500 m vs {b:.3e} at 900 m"));
        }
    }

    let mut spec = MonteCarloSpec::from_config(&base).unwrap();
    spec.trials = 1000;
    spec.modes = vec![Mode::Mixed];
    spec.schemes = vec![Scheme::FullMa, Scheme::Tdma];
    spec.distance1 = vec![500.0];
    spec.force_equal_gains = true;
    spec.keep_trials = true;
    let r = run_montecarlo(&spec).unwrap();
    let (mut used, mut worst) = (0, 0.0f64);
    for t in &r.trials {
        let s = spec.config_for(t.distance1, t.index).scenario().unwrap();
        let (fm, td) = (&t.solutions[0], &t.solutions[1]);
        if !room_in_budget(&s, fm) {
            continue;
        }
        used += 1;
        let d = rel(fm.total_energy(), energy(td));
        worst = worst.max(d);
        if d > 1e-6 {
            failures.push(format!("mixed trial {}: FullMA {} TDMA {}", t.index, fm.total_energy(), energy(td)));
        }
    }
    if used == 0 {
        failures.push("no equal-gain mixed trial with room in the budget".into());
    }
    summary.push(format!("mixed equal gains {used} trials, worst rel diff {worst:.2e}"));
    summary.push(format!("{:.1?}", t.elapsed()));
    if t.elapsed() > Duration::from_secs(180) {
        failures.push(format!("took {:?}", t.elapsed()));
    }
    Outcome::new(&failures, summary.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();

    // Cost per bit of a rate rises with the rate.
    let mut xs: Vec<f64> = (0..100).map(|_| rng.gen_range(1e-6..=30.0)).collect();
    xs.sort_by(f64::total_cmp);
    let f = |r: f64| exp2m1(r) / r;
    if xs.windows(2).any(|w| w[1] > w[0] && f(w[1]) <= f(w[0])) {
        failures.push("rate cost per bit not increasing".into());
    }

    // Shrinking a rate never leaves the region.
    let mut members = 0;
    for _ in 0..100 {
        let alpha = [rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)];
        let p = [rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)];
        let r = [rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)];
        for scheme in Scheme::ALL {
            if region_member(scheme, r, p, alpha, 0.0) {
                members += 1;
                let shrunk = [r[0] * rng.gen_range(0.0..1.0), r[1]];
                let shrunk2 = [r[0], r[1] * rng.gen_range(0.0..1.0)];
                if scheme != Scheme::Tdma && !(region_member(scheme, shrunk, p, alpha, 0.0) && region_member(scheme, shrunk2, p, alpha, 0.0)) {
                    failures.push(format!("{scheme}: shrinking {r:?} left the region"));
                }
            }
        }
    }

    // Local energy is strictly convex in the retained bits.
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(0.0..1e7), rng.gen_range(0.0..1e7));
        let l = rng.gen_range(0.1..3.0);
        let e = |x: f64| local_dvs_energy(1e-18, x, l);
        let gap = 0.5 * (e(a) + e(b)) - e(0.5 * (a + b));
        if (a - b).abs() > 1.0 && gap <= 1e-12 * 0.5 * (e(a) + e(b)) {
            failures.push(format!("local energy not strictly convex between {a} and {b}"));
        }
    }

    // Convex one-dimensional binary subproblems.
    let mut pairs_checked = 0;
    for _ in 0..40 {
        let bp = BinaryParams::new(
            [rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0)],
            {
                let l1 = rng.gen_range(1.0..3.0);
                [l1, l1 + rng.gen_range(0.0..3.0)]
            },
            [rng.gen_range(0.2..5.0), rng.gen_range(0.2..5.0)],
            [rng.gen_range(0.5..20.0), rng.gen_range(0.5..20.0)],
        )
        .unwrap();
        let b = full_ma_bounds(&bp);
        let fm = |t: f64| {
            let r = b.lower() + t * (b.upper() - b.lower());
            full_ma_point(&bp, b.slot1_rate, r).map(|(_, e, _)| e[0] + e[1])
        };
        let td = tdma_rate_interval(&bp);
        for _ in 0..50 {
            let (x, y) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            if b.feasible() && b.upper() > b.lower() {
                if let (Some(fx), Some(fy), Some(fm)) = (fm(x), fm(y), fm(0.5 * (x + y))) {
                    pairs_checked += 1;
                    if fm > 0.5 * (fx + fy) + 1e-9 * (fx + fy) {
                        failures.push(format!("full multiple access energy not convex in the shared rate for {bp:?}"));
                    }
                }
            }
            if let Some((lo, hi)) = td {
                let g = |t: f64| tdma_energy(&bp, lo + t * (hi - lo));
                let (gx, gy, gm) = (g(x), g(y), g(0.5 * (x + y)));
                if gx.is_finite() && gy.is_finite() {
                    pairs_checked += 1;
                    if gm > 0.5 * (gx + gy) + 1e-9 * (gx + gy) {
                        failures.push(format!("TDMA energy not convex in the first rate for {bp:?}"));
                    }
                }
            }
        }
    }

    // Partial full multiple access objective: no interior peak along any
    // coordinate.
    let m = LocalComputeModel::new(1e-18, 0.0).unwrap();
    let task = |b: f64, l: f64| TaskSpec::new(b, l).with_downlink_time(0.2).with_local_model(m);
    let mut slices = 0;
    for h1 in [0.3, 1.3, 4.0] {
        let s = Scenario::new(
            task(2e6, 1.5),
            RadioLink::new(h1, 0.5 * TS),
            task(6e6, 2.0),
            RadioLink::new(0.5, 0.5 * TS),
            1e-3 * TS,
            TS,
        )
        .unwrap();
        let (pp, _) = PartialParams::from_scenario(&s, [true, true]).unwrap();
        let fm = PartialFullMa::new(pp, Variant::Partial);
        let cap = [pp.capacity(0), pp.capacity(1)];
        let mut points = Vec::new();
        while points.len() < 20 {
            let x = vec![rng.gen_range(0.0..cap[0]), rng.gen_range(0.0..cap[1]), rng.gen_range(0.0..cap[1])];
            if fm.energy(&x).is_finite() {
                points.push(x);
            }
        }
        for x in &points {
            for i in 0..3 {
                let Some((lo, hi)) = fm.bounds(i, x) else { continue };
                slices += 1;
                let f: Vec<f64> = (0..200)
                    .map(|j| {
                        let mut y = x.clone();
                        y[i] = lo + (hi - lo) * j as f64 / 199.0;
                        fm.energy(&y)
                    })
                    .collect();
                if (1..199).any(|j| f[j] > f[j - 1] * (1.0 + 1e-12) && f[j] > f[j + 1] * (1.0 + 1e-12)) {
                    failures.push(format!("interior peak along coordinate {i} at {x:?} (h1_sq {h1})"));
                }
            }
        }
    }

    // Merging the first two slots keeps energy, bits and region membership.
    for _ in 0..200 {
        let alpha = [rng.gen_range(0.2..5.0), rng.gen_range(0.2..5.0)];
        let (r11, r21) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let (r12, r23) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let mac = mac_min_power(r11, r21, alpha, [1e9, 1e9]).unwrap();
        let a = Allocation {
            tau: [rng.gen_range(0.1..3.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)],
            r11,
            r21,
            r12,
            r23,
            p11: mac.p1,
            p21: mac.p2,
            p12: exp2m1(r12) / alpha[0],
            p23: exp2m1(r23) / alpha[1],
            ..Allocation::default()
        };
        let mg = merge_first_slots(&a);
        let ok = mg.tau[1] == 0.0
            && region_member(Scheme::FullMa, [mg.r11, mg.r21], [mg.p11, mg.p21], alpha, 1e-9)
            && (0..2).all(|k| {
                (rel(mg.transmit_energy(k), a.transmit_energy(k)) < 1e-9 || a.transmit_energy(k) < 1e-12)
                    && (rel(mg.offloaded_bits(k), a.offloaded_bits(k)) < 1e-9 || a.offloaded_bits(k) < 1e-12)
            });
        if !ok {
            failures.push(format!("slot merge changed {a:?}"));
        }
    }

    Outcome::new(
        &failures,
        format!("{members} region members shrunk, {pairs_checked} midpoint pairs, {slices} quasi-convexity slices, 200 slot merges"),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, f) in criteria {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} [{:.1?}] {}", t.elapsed(), out.detail);
        if !out.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
}
