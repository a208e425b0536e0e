//! Partial and mixed offloading: a fraction of each task is uploaded and
//! computed remotely, the rest locally with voltage scaling.
//!
//! Windows here are in seconds (`L - t_DL`) because the cloud execution
//! time grows with the number of offloaded bits. Offloaded fractions follow
//! from the rates through the deadline equalities, so every problem is
//! parametrised by rates (and by user 1's fraction under TDMA).

use crate::binary_offload::{full_ma_offload, mac_min_power, tdma_offload, BinaryParams, MacPowers};
use crate::error::{invalid, Result};
use crate::model::{
    exp2m1, local_dvs_energy, log2_1p, Allocation, Mode, Scenario, Scheme, Solution, BIT_TOL,
};
use crate::scalar_opt::{
    default_x_tol, finite_interval, minimize_scalar, multi_start, BracketedProblem,
    CoordinateProblem, DescentOptions, Shape,
};

const REL_SLACK: f64 = 1e-12;

/// Inputs of a partial or mixed problem, users ordered by window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialParams {
    pub bits: [f64; 2],
    /// `L - t_DL` in seconds, non-decreasing.
    pub window: [f64; 2],
    /// Full deadlines `L`, used by the local energy model.
    pub deadline: [f64; 2],
    pub alpha: [f64; 2],
    pub budget: [f64; 2],
    /// Local chip constants; zero for a user without a local model.
    pub chip: [f64; 2],
    pub cloud_time_per_bit: f64,
    pub symbol_interval: f64,
}

impl PartialParams {
    /// Parameters in window order and whether users were relabelled. Every
    /// user in `need_model` must carry a local compute model.
    pub fn from_scenario(s: &Scenario, need_model: [bool; 2]) -> Result<(Self, bool)> {
        let (s, swapped) = s.ordered_for(Mode::Partial)?;
        let need = if swapped {
            [need_model[1], need_model[0]]
        } else {
            need_model
        };
        let mut chip = [0.0; 2];
        for k in 0..2 {
            match s.user(k).local_model {
                Some(m) => chip[k] = m.chip_constant,
                None if need[k] => {
                    return Err(invalid("local_model", format!("user {} needs a local compute model", k + 1)))
                }
                None => {}
            }
        }
        let p = Self {
            bits: s.bits(),
            window: s.latencies(Mode::Partial)?,
            deadline: [s.user(0).latency, s.user(1).latency],
            alpha: s.alphas(),
            budget: s.budgets(),
            chip,
            cloud_time_per_bit: s.cloud_time_per_bit()?,
            symbol_interval: s.symbol_interval(),
        };
        Ok((p, swapped))
    }

    pub fn capacity(&self, k: usize) -> f64 {
        log2_1p(self.alpha[k] * self.budget[k])
    }

    /// Energy of computing the fraction `1 - gamma` of user `k`'s task locally.
    pub fn local_energy(&self, k: usize, gamma: f64) -> f64 {
        let retained = self.bits[k] * (1.0 - gamma.clamp(0.0, 1.0));
        local_dvs_energy(self.chip[k], retained, self.deadline[k])
    }

    /// Rate that lets user `k` upload its whole task by the deadline while
    /// spreading it over the full window, or `None` if the cloud time alone
    /// exceeds the window.
    pub fn whole_task_rate(&self, k: usize) -> Option<f64> {
        let room = self.window[k] - self.cloud_time_per_bit * self.bits[k];
        (room > 0.0).then(|| self.symbol_interval * self.bits[k] / room)
    }

    /// The equivalent binary problem: windows shrink by the cloud time of
    /// the whole task.
    pub fn as_binary(&self) -> Option<BinaryParams> {
        let ts = self.symbol_interval;
        let l = [
            (self.window[0] - self.cloud_time_per_bit * self.bits[0]) / ts,
            (self.window[1] - self.cloud_time_per_bit * self.bits[1]) / ts,
        ];
        if !(l[0] > 0.0 && l[1] >= l[0]) {
            return None;
        }
        BinaryParams::new(self.bits, l, self.alpha, self.budget).ok()
    }
}

/// Which users may keep part of their task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Both users split their tasks.
    Partial,
    /// User `k` (0 or 1) offloads its whole task, the other splits.
    Binary(usize),
}

/// Quantities at one point of the full multiple-access problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullMaPoint {
    pub rates: [f64; 3],
    pub tau1: f64,
    pub tau3: f64,
    pub gamma: [f64; 3],
    pub mac: MacPowers,
    pub p23: f64,
    pub transmit: [f64; 2],
    pub local: [f64; 2],
}

impl FullMaPoint {
    pub fn total(&self) -> f64 {
        self.transmit[0] + self.transmit[1] + self.local[0] + self.local[1]
    }
}

/// Full multiple access with user 1 spreading its offloaded bits over its
/// whole window in slot 1 and user 2 continuing alone in slot 3.
/// Free variables are `(R11, R21, R23)` minus whatever the variant fixes.
#[derive(Debug, Clone, Copy)]
pub struct PartialFullMa {
    pub params: PartialParams,
    pub variant: Variant,
    cap: [f64; 2],
    fixed_r11: f64,
}

impl PartialFullMa {
    pub fn new(params: PartialParams, variant: Variant) -> Self {
        let fixed_r11 = match variant {
            Variant::Binary(0) => params.whole_task_rate(0).unwrap_or(f64::INFINITY),
            _ => 0.0,
        };
        Self {
            params,
            variant,
            cap: [params.capacity(0), params.capacity(1)],
            fixed_r11,
        }
    }

    /// Full rate triple for the free coordinates `x`.
    pub fn rates(&self, x: &[f64]) -> Option<[f64; 3]> {
        let p = &self.params;
        match self.variant {
            Variant::Partial => Some([x[0], x[1], x[2]]),
            Variant::Binary(0) => Some([self.fixed_r11, x[0], x[1]]),
            Variant::Binary(_) => {
                let (r11, r21) = (x[0], x[1]);
                let ts = p.symbol_interval;
                let dc = p.cloud_time_per_bit;
                let tau1 = p.window[0] / (ts + dc * r11);
                let bits3 = p.bits[1] - tau1 * r21;
                if bits3 <= BIT_TOL * p.bits[1] {
                    return Some([r11, r21, 0.0]);
                }
                let tau3 = (p.window[1] - dc * p.bits[1]) / ts - tau1;
                (tau3 > 0.0).then(|| [r11, r21, bits3 / tau3])
            }
        }
    }

    pub fn point(&self, rates: [f64; 3]) -> Option<FullMaPoint> {
        let p = &self.params;
        let [r11, r21, r23] = rates;
        if !(r11 >= 0.0 && r21 >= 0.0 && r23 >= 0.0) || r23 > self.cap[1] * (1.0 + REL_SLACK) {
            return None;
        }
        let ts = p.symbol_interval;
        let dc = p.cloud_time_per_bit;
        let tau1 = p.window[0] / (ts + dc * r11);
        let g11 = tau1 * r11 / p.bits[0];
        let g21 = tau1 * r21 / p.bits[1];
        let rem = p.window[1] - tau1 * (ts + dc * r21);
        if g11 > 1.0 + REL_SLACK || g21 > 1.0 + REL_SLACK || rem < -REL_SLACK * p.window[1] {
            return None;
        }
        let tau3 = if r23 > 0.0 { rem.max(0.0) / (ts + dc * r23) } else { 0.0 };
        let g23 = tau3 * r23 / p.bits[1];
        if g21 + g23 > 1.0 + REL_SLACK {
            return None;
        }
        let mac = mac_min_power(r11, r21, p.alpha, p.budget)?;
        let p23 = (exp2m1(r23) / p.alpha[1]).min(p.budget[1]);
        let local = match self.variant {
            Variant::Partial => [p.local_energy(0, g11), p.local_energy(1, g21 + g23)],
            Variant::Binary(0) => [0.0, p.local_energy(1, g21 + g23)],
            Variant::Binary(_) => [p.local_energy(0, g11), 0.0],
        };
        Some(FullMaPoint {
            rates,
            tau1,
            tau3,
            gamma: [g11, g21, g23],
            mac,
            p23,
            transmit: [tau1 * mac.p1, tau1 * mac.p2 + tau3 * p23],
            local,
        })
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.rates(x)
            .and_then(|r| self.point(r))
            .map_or(f64::INFINITY, |pt| pt.total())
    }

    fn boxes(&self) -> [(f64, f64); 3] {
        match self.variant {
            Variant::Partial => [(0.0, self.cap[0]), (0.0, self.cap[1]), (0.0, self.cap[1])],
            Variant::Binary(0) => [(0.0, self.cap[1]), (0.0, self.cap[1]), (0.0, 0.0)],
            Variant::Binary(_) => [(0.0, self.cap[0]), (0.0, self.cap[1]), (0.0, 0.0)],
        }
    }

    /// Free coordinates that reproduce the rate triple `r`.
    fn coords(&self, r: [f64; 3]) -> Vec<f64> {
        match self.variant {
            Variant::Partial => r.to_vec(),
            Variant::Binary(0) => vec![r[1], r[2]],
            Variant::Binary(_) => vec![r[0], r[1]],
        }
    }

    pub fn initial_points(&self) -> Vec<Vec<f64>> {
        let p = &self.params;
        let mut cands: Vec<[f64; 3]> = vec![[self.fixed_r11, 0.0, 0.0]];
        if let Some(o) = p.as_binary().and_then(|b| full_ma_offload(&b)) {
            let a = o.allocation;
            cands.push([a.r11, a.r21, a.r23]);
        }
        // User 2 carried mostly in slot 1, user 1 local or fixed.
        let ts = p.symbol_interval;
        let dc = p.cloud_time_per_bit;
        let tau1 = p.window[0] / (ts + dc * self.fixed_r11);
        let tau3 = (p.window[1] - dc * p.bits[1]) / ts - tau1;
        let need = ((p.bits[1] - self.cap[1] * tau3.max(0.0)) / tau1).max(0.0);
        cands.push([self.fixed_r11, need * (1.0 + 1e-9), 0.0]);
        cands.push([self.fixed_r11.min(0.25 * self.cap[0]), 0.25 * self.cap[1], 0.5 * self.cap[1]]);
        if self.variant == Variant::Partial {
            let whole = |k: usize| p.whole_task_rate(k).unwrap_or(0.0);
            cands.push([(0.9 * self.cap[0]).min(whole(0)), 0.0, (0.9 * self.cap[1]).min(whole(1))]);
        }
        cands
            .into_iter()
            .map(|r| self.coords(r))
            .filter(|x| self.energy(x).is_finite())
            .collect()
    }

    pub fn allocation_at(&self, x: &[f64]) -> Option<(Allocation, [f64; 2], [f64; 2])> {
        let pt = self.point(self.rates(x)?)?;
        let [r11, r21, r23] = pt.rates;
        let a = Allocation {
            tau: [pt.tau1, 0.0, if pt.gamma[2] > 0.0 { pt.tau3 } else { 0.0 }],
            r11,
            r21,
            r23: if pt.gamma[2] > 0.0 { r23 } else { 0.0 },
            p11: pt.mac.p1,
            p21: pt.mac.p2,
            p23: if pt.gamma[2] > 0.0 { pt.p23 } else { 0.0 },
            gamma11: pt.gamma[0],
            gamma21: pt.gamma[1],
            gamma23: pt.gamma[2],
            ..Allocation::default()
        };
        let energy = [pt.transmit[0] + pt.local[0], pt.transmit[1] + pt.local[1]];
        Some((a, energy, pt.local))
    }
}

impl CoordinateProblem for PartialFullMa {
    fn dim(&self) -> usize {
        match self.variant {
            Variant::Partial => 3,
            Variant::Binary(_) => 2,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.energy(x)
    }

    fn bounds(&self, i: usize, x: &[f64]) -> Option<(f64, f64)> {
        let (lo, hi) = self.boxes()[i];
        finite_interval(|y| self.energy(y), i, x, lo, hi)
    }
}

/// Quantities at one point of the TDMA problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmaPoint {
    /// `(R1, R2, gamma1)`.
    pub vars: [f64; 3],
    pub t1: f64,
    pub t2: f64,
    pub gamma2: f64,
    pub power: [f64; 2],
    pub transmit: [f64; 2],
    pub local: [f64; 2],
}

impl TdmaPoint {
    pub fn total(&self) -> f64 {
        self.transmit[0] + self.transmit[1] + self.local[0] + self.local[1]
    }
}

/// User 2's offloaded fraction when it transmits at `r2` for everything
/// left of its window after user 1's `t1` channel uses.
pub fn tdma_gamma2(window2: f64, t1: f64, bits2: f64, r2: f64, symbol_interval: f64, cloud_time_per_bit: f64) -> f64 {
    if r2 <= 0.0 {
        return 0.0;
    }
    (window2 - symbol_interval * t1) / (bits2 * (symbol_interval / r2 + cloud_time_per_bit))
}

/// TDMA with user 1 first, over `(R1, R2, theta1)` minus whatever the
/// variant fixes, where `theta1` is the share of user 1's window spent
/// uploading.
#[derive(Debug, Clone, Copy)]
pub struct PartialTdma {
    pub params: PartialParams,
    pub variant: Variant,
    cap: [f64; 2],
}

impl PartialTdma {
    pub fn new(params: PartialParams, variant: Variant) -> Self {
        Self {
            params,
            variant,
            cap: [params.capacity(0), params.capacity(1)],
        }
    }

    /// User 1's fraction when it transmits at `r1` for the share `theta`
    /// of its window, capped at the whole task.
    pub fn gamma_from_share(&self, r1: f64, theta: f64) -> f64 {
        let p = &self.params;
        if r1 <= 0.0 || theta <= 0.0 {
            return 0.0;
        }
        let per_bit = p.symbol_interval / r1 + p.cloud_time_per_bit;
        (theta * p.window[0] / (p.bits[0] * per_bit)).min(1.0)
    }

    /// Inverse of [`Self::gamma_from_share`] below the cap.
    fn share_from_gamma(&self, r1: f64, g1: f64) -> f64 {
        let p = &self.params;
        if r1 <= 0.0 || g1 <= 0.0 {
            return 0.0;
        }
        let per_bit = p.symbol_interval / r1 + p.cloud_time_per_bit;
        (g1 * p.bits[0] * per_bit / p.window[0]).min(1.0)
    }

    /// `(R1, R2, gamma1)` for the free coordinates `x`. User 1's fraction
    /// enters through its share of the window, which keeps the deadline a
    /// box constraint.
    pub fn vars(&self, x: &[f64]) -> Option<[f64; 3]> {
        let p = &self.params;
        match self.variant {
            Variant::Partial => Some([x[0], x[1], self.gamma_from_share(x[0], x[2])]),
            Variant::Binary(0) => Some([x[0], x[1], 1.0]),
            Variant::Binary(_) => {
                let (r1, g1) = (x[0], self.gamma_from_share(x[0], x[1]));
                let ts = p.symbol_interval;
                let t1 = if g1 <= BIT_TOL {
                    0.0
                } else if r1 > 0.0 {
                    g1 * p.bits[0] / r1
                } else {
                    return None;
                };
                let room = p.window[1] - p.cloud_time_per_bit * p.bits[1] - ts * t1;
                (room > 0.0).then(|| [r1, ts * p.bits[1] / room, g1])
            }
        }
    }

    pub fn point(&self, vars: [f64; 3]) -> Option<TdmaPoint> {
        let p = &self.params;
        let [r1, r2, g1] = vars;
        let slack = 1.0 + REL_SLACK;
        if !(r1 >= 0.0 && r2 >= 0.0 && g1 >= 0.0) || g1 > slack {
            return None;
        }
        if r1 > self.cap[0] * slack || r2 > self.cap[1] * slack {
            return None;
        }
        let ts = p.symbol_interval;
        let dc = p.cloud_time_per_bit;
        let t1 = if g1 <= BIT_TOL {
            0.0
        } else if r1 > 0.0 {
            g1 * p.bits[0] / r1
        } else {
            return None;
        };
        if ts * t1 + dc * g1 * p.bits[0] > p.window[0] * slack {
            return None;
        }
        let rem = p.window[1] - ts * t1;
        if rem < -REL_SLACK * p.window[1] {
            return None;
        }
        let rem = rem.max(0.0);
        let g2 = tdma_gamma2(p.window[1], t1, p.bits[1], r2, ts, dc).max(0.0);
        if g2 > slack {
            return None;
        }
        let t2 = if r2 > 0.0 { rem / (ts + dc * r2) } else { 0.0 };
        let power = [
            (exp2m1(r1) / p.alpha[0]).min(p.budget[0]),
            (exp2m1(r2) / p.alpha[1]).min(p.budget[1]),
        ];
        let local = match self.variant {
            Variant::Partial => [p.local_energy(0, g1), p.local_energy(1, g2)],
            Variant::Binary(0) => [0.0, p.local_energy(1, g2)],
            Variant::Binary(_) => [p.local_energy(0, g1), 0.0],
        };
        Some(TdmaPoint {
            vars,
            t1,
            t2,
            gamma2: g2,
            power,
            transmit: [t1 * power[0], t2 * power[1]],
            local,
        })
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.vars(x)
            .and_then(|v| self.point(v))
            .map_or(f64::INFINITY, |pt| pt.total())
    }

    fn boxes(&self) -> [(f64, f64); 3] {
        match self.variant {
            Variant::Partial => [(0.0, self.cap[0]), (0.0, self.cap[1]), (0.0, 1.0)],
            Variant::Binary(0) => [(0.0, self.cap[0]), (0.0, self.cap[1]), (0.0, 0.0)],
            Variant::Binary(_) => [(0.0, self.cap[0]), (0.0, 1.0), (0.0, 0.0)],
        }
    }

    fn coords(&self, v: [f64; 3]) -> Vec<f64> {
        let theta = self.share_from_gamma(v[0], v[2]);
        match self.variant {
            Variant::Partial => vec![v[0], v[1], theta],
            Variant::Binary(0) => vec![v[0], v[1]],
            Variant::Binary(_) => vec![v[0], theta],
        }
    }

    pub fn initial_points(&self) -> Vec<Vec<f64>> {
        let p = &self.params;
        let mut cands: Vec<[f64; 3]> = vec![[0.0, 0.0, 0.0]];
        if let Some(o) = p.as_binary().and_then(|b| tdma_offload(&b)) {
            cands.push([o.allocation.r11, o.allocation.r23, 1.0]);
        }
        if let Some(r) = p.whole_task_rate(0) {
            cands.push([r, 0.0, 1.0]);
        }
        cands.push([0.5 * self.cap[0], 0.5 * self.cap[1], 0.5]);
        // Interior points sized to user 1's window: at gamma1 = 0 the rate
        // R1 is a flat direction, so descent from all-local cannot leave it.
        let ts = p.symbol_interval;
        let dc = p.cloud_time_per_bit;
        for f in [0.5, 0.9] {
            let r1 = f * self.cap[0];
            let g1 = (f * p.window[0] * r1 / (p.bits[0] * (ts + dc * r1))).min(1.0);
            let room = p.window[1] - dc * p.bits[1] - g1 * p.bits[0] * ts / r1;
            let whole2 = if room > 0.0 { ts * p.bits[1] / room } else { 0.0 };
            cands.push([r1, (f * self.cap[1]).min(whole2), g1]);
        }
        cands
            .into_iter()
            .map(|v| self.coords(v))
            .filter(|x| self.energy(x).is_finite())
            .collect()
    }

    pub fn allocation_at(&self, x: &[f64]) -> Option<(Allocation, [f64; 2], [f64; 2])> {
        let pt = self.point(self.vars(x)?)?;
        let [r1, r2, g1] = pt.vars;
        let sends = [pt.t1 > 0.0, pt.gamma2 > 0.0];
        let a = Allocation {
            tau: [pt.t1, 0.0, if sends[1] { pt.t2 } else { 0.0 }],
            r11: if sends[0] { r1 } else { 0.0 },
            r23: if sends[1] { r2 } else { 0.0 },
            p11: if sends[0] { pt.power[0] } else { 0.0 },
            p23: if sends[1] { pt.power[1] } else { 0.0 },
            gamma11: if sends[0] { g1 } else { 0.0 },
            gamma23: pt.gamma2,
            ..Allocation::default()
        };
        let energy = [pt.transmit[0] + pt.local[0], pt.transmit[1] + pt.local[1]];
        Some((a, energy, pt.local))
    }
}

impl CoordinateProblem for PartialTdma {
    fn dim(&self) -> usize {
        match self.variant {
            Variant::Partial => 3,
            Variant::Binary(_) => 2,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.energy(x)
    }

    fn bounds(&self, i: usize, x: &[f64]) -> Option<(f64, f64)> {
        let (lo, hi) = self.boxes()[i];
        finite_interval(|y| self.energy(y), i, x, lo, hi)
    }

    // Past the share at which user 1 sends its whole task the objective
    // goes flat, so the window share and R1 are only quasi-convex.
    fn shape(&self, i: usize) -> Shape {
        match (self.variant, i) {
            (Variant::Partial | Variant::Binary(0), 1) => Shape::Convex,
            _ => Shape::QuasiConvex,
        }
    }
}

/// Coordinate-descent options used by the partial and mixed solvers.
pub fn partial_options() -> DescentOptions {
    DescentOptions {
        rel_tol: 1e-12,
        max_iters: 500,
        extrapolate: true,
        warmup_sweeps: 3,
        survivors: 2,
    }
}

type Found = (Allocation, [f64; 2], [f64; 2], String);

fn descend_full_ma(p: &PartialParams, variant: Variant) -> Option<Found> {
    let problem = PartialFullMa::new(*p, variant);
    let r = multi_start(&problem, &problem.initial_points(), &partial_options()).ok()?;
    let (a, e, l) = problem.allocation_at(&r.minimizer)?;
    let status = if r.converged { "converged" } else { "max-iters" };
    Some((a, e, l, format!("FullMA/descent/{status}")))
}

fn descend_tdma(p: &PartialParams, variant: Variant) -> Option<Found> {
    let problem = PartialTdma::new(*p, variant);
    let r = multi_start(&problem, &problem.initial_points(), &partial_options()).ok()?;
    let (a, e, l) = problem.allocation_at(&r.minimizer)?;
    let status = if r.converged { "converged" } else { "max-iters" };
    Some((a, e, l, format!("TDMA/descent/{status}")))
}

fn found_to_solution(f: Option<Found>, scheme: Scheme, mode: Mode, ts: f64, swapped: bool) -> Solution {
    match f {
        Some((allocation, energy, local_energy, trace)) => Solution {
            scheme,
            mode,
            feasible: true,
            allocation: Some(allocation),
            energy,
            local_energy,
            symbol_interval: ts,
            users_swapped: false,
            case_trace: trace,
        },
        None => Solution::infeasible(scheme, mode, ts, "no feasible starting point"),
    }
    .mark_swapped(swapped)
}

fn check_scheme(scheme: Scheme) -> Result<()> {
    match scheme {
        Scheme::FullMa | Scheme::Tdma => Ok(()),
        _ => Err(invalid("scheme", format!("{scheme} is not supported for partial offloading"))),
    }
}

pub fn solve_partial_full_ma(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = PartialParams::from_scenario(scenario, [true, true])?;
    let f = descend_full_ma(&p, Variant::Partial);
    Ok(found_to_solution(f, Scheme::FullMa, Mode::Partial, p.symbol_interval, swapped != scenario.swapped()))
}

pub fn solve_partial_tdma(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = PartialParams::from_scenario(scenario, [true, true])?;
    let f = descend_tdma(&p, Variant::Partial);
    Ok(found_to_solution(f, Scheme::Tdma, Mode::Partial, p.symbol_interval, swapped != scenario.swapped()))
}

pub fn solve_partial(scenario: &Scenario, scheme: Scheme) -> Result<Solution> {
    check_scheme(scheme)?;
    match scheme {
        Scheme::FullMa => solve_partial_full_ma(scenario),
        _ => solve_partial_tdma(scenario),
    }
}

/// One user alone with partial offloading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleUserPartial {
    pub rate: f64,
    pub power: f64,
    pub gamma: f64,
    /// Transmission time in channel uses.
    pub duration: f64,
    pub transmit_energy: f64,
    pub local_energy: f64,
}

impl SingleUserPartial {
    pub fn total(&self) -> f64 {
        self.transmit_energy + self.local_energy
    }
}

/// Offloaded fraction when transmitting at `rate` for the whole window.
pub fn single_user_gamma(bits: f64, window: f64, rate: f64, symbol_interval: f64, cloud_time_per_bit: f64) -> f64 {
    window * rate / (bits * (symbol_interval + cloud_time_per_bit * rate))
}

/// Best split for a user alone on the channel. Always feasible: rate zero
/// keeps the whole task local.
pub fn solve_partial_single_user(
    bits: f64,
    window: f64,
    deadline: f64,
    alpha: f64,
    budget: f64,
    chip_constant: f64,
    cloud_time_per_bit: f64,
    symbol_interval: f64,
) -> SingleUserPartial {
    let ts = symbol_interval;
    let dc = cloud_time_per_bit;
    let cap = log2_1p(alpha * budget);
    let full = if window > dc * bits {
        ts * bits / (window - dc * bits)
    } else {
        f64::INFINITY
    };
    let hi = cap.min(full);
    let eval = |r: f64| {
        let g = single_user_gamma(bits, window, r, ts, dc).min(1.0);
        let duration = window / (ts + dc * r);
        let power = exp2m1(r) / alpha;
        let local = local_dvs_energy(chip_constant, bits * (1.0 - g), deadline);
        (g, duration, power, local)
    };
    let problem = BracketedProblem {
        objective: |r: f64| {
            let (_, d, p, l) = eval(r);
            d * p + l
        },
        lower: 0.0,
        upper: hi,
        shape: Shape::Convex,
    };
    let rate = minimize_scalar(&problem, default_x_tol(0.0, hi)).map_or(0.0, |m| m.argmin);
    let (gamma, duration, power, local) = eval(rate);
    let duration = if rate > 0.0 { duration } else { 0.0 };
    SingleUserPartial {
        rate,
        power: power.min(budget),
        gamma,
        duration,
        transmit_energy: duration * power,
        local_energy: local,
    }
}

/// Mixed offloading: `binary_user` (0 or 1, in scenario order) offloads
/// all or nothing, the other user splits its task. Returns the cheaper of
/// the offload and local branches for the binary user.
pub fn solve_mixed(scenario: &Scenario, scheme: Scheme, binary_user: usize) -> Result<Solution> {
    check_scheme(scheme)?;
    if binary_user > 1 {
        return Err(invalid("binary_user", "must be 0 or 1"));
    }
    let mut need = [true, true];
    need[binary_user] = false;
    let (p, swapped) = PartialParams::from_scenario(scenario, need)?;
    let b = if swapped { 1 - binary_user } else { binary_user };
    let other = 1 - b;
    let ts = p.symbol_interval;
    let sc = if swapped {
        scenario.swap_users()
    } else {
        scenario.clone()
    };

    let offload = match scheme {
        Scheme::FullMa => descend_full_ma(&p, Variant::Binary(b)),
        _ => descend_tdma(&p, Variant::Binary(b)),
    };

    let task = sc.user(b);
    let local_b = task
        .local_energy
        .value()
        .or_else(|| task.local_model.map(|m| m.energy(task.bits, task.latency)));
    let local = local_b.map(|eb| {
        let m = sc.user(other).local_model.map_or(0.0, |m| m.chip_constant);
        let s = solve_partial_single_user(
            p.bits[other],
            p.window[other],
            p.deadline[other],
            p.alpha[other],
            p.budget[other],
            m,
            p.cloud_time_per_bit,
            ts,
        );
        let mut a = Allocation::default();
        if s.duration > 0.0 {
            if other == 0 {
                a.tau[0] = s.duration;
                (a.r11, a.p11, a.gamma11) = (s.rate, s.power, s.gamma);
            } else {
                a.tau[2] = s.duration;
                (a.r23, a.p23, a.gamma23) = (s.rate, s.power, s.gamma);
            }
        }
        let mut energy = [0.0; 2];
        let mut local_energy = [0.0; 2];
        energy[b] = eb;
        local_energy[b] = eb;
        energy[other] = s.total();
        local_energy[other] = s.local_energy;
        (a, energy, local_energy, format!("user{}-local", b + 1))
    });

    let pick = match (offload, local) {
        (Some(o), Some(l)) => Some(if o.1[0] + o.1[1] <= l.1[0] + l.1[1] { o } else { l }),
        (o, l) => o.or(l),
    };
    let pick = pick.map(|(a, e, l, t)| {
        let t = if t.contains("local") {
            t
        } else {
            format!("user{}-offload; {t}", b + 1)
        };
        (a, e, l, t)
    });
    Ok(found_to_solution(pick, scheme, Mode::Mixed, ts, swapped != scenario.swapped()))
}

/// Dispatch on mode. Mixed mode takes user 1 as the binary user.
pub fn solve(scenario: &Scenario, scheme: Scheme, mode: Mode) -> Result<Solution> {
    match mode {
        Mode::Binary => crate::binary_offload::solve_binary(scenario, scheme),
        Mode::Partial => solve_partial(scenario, scheme),
        Mode::Mixed => solve_mixed(scenario, scheme, 0),
    }
}
