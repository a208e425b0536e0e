//! Binary offloading: each task is uploaded whole before its deadline or
//! computed locally.
//!
//! All solvers here work on [`BinaryParams`], where the upload windows are
//! counted in channel uses and `latency[0] <= latency[1]`. Slot 1 is shared,
//! slot 2 belongs to user 1 and ends at its deadline, slot 3 belongs to
//! user 2 and ends at its deadline.

use crate::error::{invalid, Result};
use crate::model::{
    exp2m1, log2_1p, Allocation, Mode, Scenario, Scheme, Solution, BIT_TOL,
};
use crate::scalar_opt::{
    default_x_tol, feasible_interval, finite_interval, minimize_scalar, multi_start, BracketedProblem,
    CoordinateProblem, DescentOptions, DescentReport, Shape,
};

const REL_SLACK: f64 = 1e-12;

/// Normalized inputs of a binary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryParams {
    pub bits: [f64; 2],
    /// Upload windows in channel uses, non-decreasing.
    pub latency: [f64; 2],
    pub alpha: [f64; 2],
    pub budget: [f64; 2],
}

impl BinaryParams {
    pub fn new(bits: [f64; 2], latency: [f64; 2], alpha: [f64; 2], budget: [f64; 2]) -> Result<Self> {
        for k in 0..2 {
            if !(bits[k] > 0.0 && bits[k].is_finite()) {
                return Err(invalid("bits", "must be finite and > 0"));
            }
            if !(latency[k] > 0.0 && latency[k].is_finite()) {
                return Err(invalid("latency", "must be finite and > 0"));
            }
            if !(alpha[k] > 0.0 && alpha[k].is_finite()) {
                return Err(invalid("alpha", "must be finite and > 0"));
            }
            if !(budget[k] > 0.0 && budget[k].is_finite()) {
                return Err(invalid("budget", "must be finite and > 0"));
            }
        }
        if latency[0] > latency[1] {
            return Err(invalid("latency", "user 1 must have the shorter window"));
        }
        Ok(Self {
            bits,
            latency,
            alpha,
            budget,
        })
    }

    /// Parameters in window order, plus whether the users were relabelled.
    pub fn from_scenario(s: &Scenario) -> Result<(Self, bool)> {
        let (s, swapped) = s.ordered_for(Mode::Binary)?;
        let p = Self::new(s.bits(), s.latencies(Mode::Binary)?, s.alphas(), s.budgets())?;
        Ok((p, swapped))
    }

    /// Single-user capacity `log2(1 + alpha_k Pbar_k)`.
    pub fn capacity(&self, k: usize) -> f64 {
        log2_1p(self.alpha[k] * self.budget[k])
    }

    /// Length of slot 3, `L2 - L1`.
    pub fn gap(&self) -> f64 {
        self.latency[1] - self.latency[0]
    }
}

/// Rates, powers and energies of a feasible offloading decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Offload {
    pub allocation: Allocation,
    pub energy: [f64; 2],
    pub trace: String,
}

impl Offload {
    pub fn total(&self) -> f64 {
        self.energy[0] + self.energy[1]
    }

    fn from_allocation(allocation: Allocation, trace: String) -> Self {
        let energy = [allocation.transmit_energy(0), allocation.transmit_energy(1)];
        Self {
            allocation,
            energy,
            trace,
        }
    }
}

pub(crate) fn to_solution(
    o: Option<Offload>,
    scheme: Scheme,
    mode: Mode,
    symbol_interval: f64,
    swapped: bool,
    infeasible_trace: &str,
) -> Solution {
    let s = match o {
        Some(o) => Solution {
            scheme,
            mode,
            feasible: true,
            allocation: Some(o.allocation),
            energy: o.energy,
            local_energy: [0.0; 2],
            symbol_interval,
            users_swapped: false,
            case_trace: o.trace,
        },
        None => Solution::infeasible(scheme, mode, symbol_interval, infeasible_trace),
    };
    s.mark_swapped(swapped)
}

/// One user alone on the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleUserOffload {
    pub rate: f64,
    pub power: f64,
    pub energy: f64,
}

/// Uploads `bits` over the whole window at constant rate; `None` if the
/// budget cannot sustain the rate.
pub fn solve_single_user(bits: f64, latency: f64, alpha: f64, budget: f64) -> Option<SingleUserOffload> {
    let rate = bits / latency;
    if !(latency > 0.0) || rate > log2_1p(alpha * budget) * (1.0 + REL_SLACK) {
        return None;
    }
    let power = (exp2m1(rate) / alpha).min(budget);
    Some(SingleUserOffload {
        rate,
        power,
        energy: latency * power,
    })
}

/// Which inner case of the shared-slot power problem is active.
///
/// `A` (user 1 has the weaker channel) puts user 1's power at its lowest
/// admissible value, `B` at its highest. `I` means the active bound is the
/// rate bound, `II` the other user's budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacCase {
    AI,
    AII,
    BI,
    BII,
}

impl MacCase {
    pub fn label(self) -> &'static str {
        match self {
            MacCase::AI => "A-I",
            MacCase::AII => "A-II",
            MacCase::BI => "B-I",
            MacCase::BII => "B-II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacPowers {
    pub p1: f64,
    pub p2: f64,
    pub case: MacCase,
}

/// Cheapest powers `(P1, P2)` (minimum `P1 + P2`) that reach rates
/// `(r1, r2)` in the full multiple-access region within the budgets.
pub fn mac_min_power(r1: f64, r2: f64, alpha: [f64; 2], budget: [f64; 2]) -> Option<MacPowers> {
    let [a1, a2] = alpha;
    let [b1, b2] = budget;
    let e1 = exp2m1(r1);
    let e2 = exp2m1(r2);
    let sum = exp2m1(r1 + r2);
    let lo_rate = e1 / a1;
    let lo_budget = (sum - a2 * b2) / a1;
    let hi_rate = (1.0 + e2) * e1 / a1;
    let lo = lo_rate.max(lo_budget);
    let hi = hi_rate.min(b1);
    if lo > hi * (1.0 + REL_SLACK) + f64::MIN_POSITIVE {
        return None;
    }
    let (p1, p2, case) = if a1 <= a2 {
        if lo_rate >= lo_budget {
            (lo_rate, (1.0 + e1) * e2 / a2, MacCase::AI)
        } else {
            (lo_budget, b2, MacCase::AII)
        }
    } else if hi_rate <= b1 {
        (hi_rate, e2 / a2, MacCase::BI)
    } else {
        (b1, (sum - a1 * b1) / a2, MacCase::BII)
    };
    Some(MacPowers {
        p1: p1.clamp(0.0, b1),
        p2: p2.clamp(0.0, b2),
        case,
    })
}

/// Feasibility bounds of the shared-slot rate of user 2 when user 1 uses
/// slot 1 alone for its whole window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullMaBounds {
    /// User 1's rate `B1 / L1`.
    pub slot1_rate: f64,
    /// User 2's single-user capacity.
    pub r_a: f64,
    /// Sum capacity left after user 1's rate.
    pub r_b: f64,
    /// Rate user 2 needs in slot 1 if slot 3 runs at capacity.
    pub r_c: f64,
    /// Unconstrained optimum when user 2's budget is slack and user 1 is weaker.
    pub stationary: f64,
    /// `log2((alpha2/alpha1)(2^s - 1) + 1)`.
    pub phi1: f64,
    user1_capacity: f64,
}

impl FullMaBounds {
    pub fn lower(&self) -> f64 {
        self.r_c.max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.r_a.min(self.r_b)
    }

    pub fn feasible(&self) -> bool {
        self.slot1_rate <= self.user1_capacity * (1.0 + REL_SLACK)
            && self.lower() <= self.upper() * (1.0 + REL_SLACK) + f64::MIN_POSITIVE
    }
}

pub fn full_ma_bounds(p: &BinaryParams) -> FullMaBounds {
    let [b1, b2] = p.bits;
    let [l1, l2] = p.latency;
    let [a1, a2] = p.alpha;
    let d = p.gap();
    let s = b1 / l1;
    let r_a = p.capacity(1);
    let r_b = log2_1p(a1 * p.budget[0] + a2 * p.budget[1]) - s;
    let r_c = (b2 - d * r_a) / l1;
    FullMaBounds {
        slot1_rate: s,
        r_a,
        r_b,
        r_c,
        stationary: (b2 - d * s) / l2,
        phi1: log2_1p(a2 / a1 * exp2m1(s)),
        user1_capacity: p.capacity(0),
    }
}

/// Energies when user 1 sends at `s` and user 2 at `r21` in slot 1, user 2
/// finishing alone in slot 3. `None` outside the region or the budgets.
pub fn full_ma_point(p: &BinaryParams, s: f64, r21: f64) -> Option<(Allocation, [f64; 2], MacCase)> {
    let [_, b2] = p.bits;
    let l1 = p.latency[0];
    let d = p.gap();
    let bits3 = b2 - l1 * r21;
    let r23 = if d > 0.0 {
        if bits3 < -1e-9 * b2 {
            return None;
        }
        let r = bits3.max(0.0) / d;
        if r > p.capacity(1) * (1.0 + REL_SLACK) {
            return None;
        }
        r
    } else {
        if bits3.abs() > 1e-9 * b2 {
            return None;
        }
        0.0
    };
    let mac = mac_min_power(s, r21, p.alpha, p.budget)?;
    let p23 = (exp2m1(r23) / p.alpha[1]).min(p.budget[1]);
    let tau3 = if r23 > 0.0 { d } else { 0.0 };
    let a = Allocation {
        tau: [l1, 0.0, tau3],
        r11: s,
        r21,
        r23,
        p11: mac.p1,
        p21: mac.p2,
        p23,
        gamma11: 1.0,
        gamma21: l1 * r21 / b2,
        gamma23: tau3 * r23 / b2,
        ..Allocation::default()
    };
    let e = [a.transmit_energy(0), a.transmit_energy(1)];
    Some((a, e, mac.case))
}

/// Full multiple access with both users offloading. User 1 spreads its
/// bits over its whole window in slot 1; user 2's slot-1 rate is the only
/// free variable and the objective is convex in it, so the minimum is
/// among the branch stationary points, the branch switch and the ends.
pub fn full_ma_offload(p: &BinaryParams) -> Option<Offload> {
    let bounds = full_ma_bounds(p);
    if !bounds.feasible() {
        return None;
    }
    let s = bounds.slot1_rate;
    let [b1, b2] = p.bits;
    let [l1, l2] = p.latency;
    let [a1, a2] = p.alpha;
    let d = p.gap();
    let _ = b1;

    if d <= 0.0 {
        let (a, _, case) = full_ma_point(p, s, b2 / l1)?;
        return Some(Offload::from_allocation(a, format!("{}/degenerate", case.label())));
    }

    let lo = bounds.lower();
    let hi = bounds.upper().min(b2 / l1);
    let hi = if hi < lo { lo } else { hi };
    let mut cands: Vec<(f64, &str)> = Vec::new();
    if a1 <= a2 {
        cands.push((bounds.stationary, "stationary"));
        cands.push(((b2 - d * (s + (a2 / a1).log2())) / l2, "stationary"));
        cands.push((log2_1p(a2 * p.budget[1] / s.exp2()), "kink"));
    }
    if a1 >= a2 {
        cands.push(((b2 - d * bounds.phi1) / l2, "stationary"));
        cands.push((bounds.stationary, "stationary"));
        let e1 = exp2m1(s);
        if e1 > 0.0 {
            cands.push(((a1 * p.budget[0] / e1).log2(), "kink"));
        }
    }
    cands.retain(|(r, _)| r.is_finite() && *r > lo && *r < hi);
    cands.push((lo, "lower"));
    cands.push((hi, "upper"));

    let mut best: Option<(f64, Allocation, String)> = None;
    for (r, origin) in cands {
        if let Some((a, e, case)) = full_ma_point(p, s, r) {
            let total = e[0] + e[1];
            if best.as_ref().map_or(true, |(b, _, _)| total < *b) {
                best = Some((total, a, format!("{}/{}", case.label(), origin)));
            }
        }
    }
    best.map(|(_, a, t)| Offload::from_allocation(a, t))
}

pub fn solve_full_ma(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = BinaryParams::from_scenario(scenario)?;
    Ok(to_solution(
        full_ma_offload(&p),
        Scheme::FullMa,
        Mode::Binary,
        scenario.symbol_interval(),
        swapped != scenario.swapped(),
        "infeasible: rates outside the capacity region",
    ))
}

/// User 2's rate when user 1 sends at `r1` first and user 2 fills the rest
/// of its window.
pub fn tdma_second_rate(b1: f64, b2: f64, l2: f64, r1: f64) -> f64 {
    b2 * r1 / (l2 * r1 - b1)
}

/// Admissible range of user 1's rate under TDMA.
pub fn tdma_rate_interval(p: &BinaryParams) -> Option<(f64, f64)> {
    let [b1, b2] = p.bits;
    let [l1, l2] = p.latency;
    let c1 = p.capacity(0);
    let c2 = p.capacity(1);
    if l2 * c2 <= b2 {
        return None;
    }
    let lo = (b1 / l1).max(b1 * c2 / (l2 * c2 - b2));
    if lo > c1 * (1.0 + REL_SLACK) {
        return None;
    }
    Some((lo.min(c1), c1))
}

/// Total TDMA energy as a function of user 1's rate; `+inf` outside the
/// admissible range.
pub fn tdma_energy(p: &BinaryParams, r1: f64) -> f64 {
    let [b1, b2] = p.bits;
    let l2 = p.latency[1];
    if !(r1 > 0.0) {
        return f64::INFINITY;
    }
    let t1 = b1 / r1;
    let t2 = l2 - t1;
    if !(t2 > 0.0) || t1 > p.latency[0] * (1.0 + REL_SLACK) {
        return f64::INFINITY;
    }
    let r2 = b2 / t2;
    if r1 > p.capacity(0) * (1.0 + REL_SLACK) || r2 > p.capacity(1) * (1.0 + REL_SLACK) {
        return f64::INFINITY;
    }
    t1 * exp2m1(r1) / p.alpha[0] + t2 * exp2m1(r2) / p.alpha[1]
}

/// TDMA with user 1 first. User 1 occupies slot 1 alone and user 2 slot 3.
pub fn tdma_offload(p: &BinaryParams) -> Option<Offload> {
    let (lo, hi) = tdma_rate_interval(p)?;
    let problem = BracketedProblem {
        objective: |r: f64| tdma_energy(p, r),
        lower: lo,
        upper: hi,
        shape: Shape::Convex,
    };
    let m = minimize_scalar(&problem, default_x_tol(lo, hi)).ok()?;
    if !m.value.is_finite() {
        return None;
    }
    let r1 = m.argmin;
    let t1 = p.bits[0] / r1;
    let t2 = p.latency[1] - t1;
    let r2 = p.bits[1] / t2;
    let a = Allocation {
        tau: [t1, 0.0, t2],
        r11: r1,
        r23: r2,
        p11: (exp2m1(r1) / p.alpha[0]).min(p.budget[0]),
        p23: (exp2m1(r2) / p.alpha[1]).min(p.budget[1]),
        gamma11: 1.0,
        gamma23: 1.0,
        ..Allocation::default()
    };
    let origin = if r1 == lo {
        "lower"
    } else if r1 == hi {
        "upper"
    } else {
        "interior"
    };
    Some(Offload::from_allocation(a, format!("TDMA/{origin}")))
}

pub fn solve_tdma(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = BinaryParams::from_scenario(scenario)?;
    Ok(to_solution(
        tdma_offload(&p),
        Scheme::Tdma,
        Mode::Binary,
        scenario.symbol_interval(),
        swapped != scenario.swapped(),
        "infeasible: no admissible user-1 rate",
    ))
}

/// Decoding rule in the shared slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOneDecoding {
    /// User 2 decoded first, user 1 then sees no interference.
    User1Clean,
    /// User 1 decoded first, user 2 then sees no interference.
    User2Clean,
    /// Each user decoded treating the other as noise.
    Independent,
}

impl SlotOneDecoding {
    fn label(self) -> &'static str {
        match self {
            SlotOneDecoding::User1Clean => "user1-clean",
            SlotOneDecoding::User2Clean => "user2-clean",
            SlotOneDecoding::Independent => "independent",
        }
    }
}

/// Smallest slot-1 powers reaching `(r11, r21)` under `decoding`, or `None`
/// when independent decoding cannot reach the pair at any power.
pub fn slot_one_powers(decoding: SlotOneDecoding, r11: f64, r21: f64, alpha: [f64; 2]) -> Option<(f64, f64)> {
    let e1 = exp2m1(r11);
    let e2 = exp2m1(r21);
    let [a1, a2] = alpha;
    match decoding {
        SlotOneDecoding::User1Clean => Some((e1 / a1, (1.0 + e1) * e2 / a2)),
        SlotOneDecoding::User2Clean => Some(((1.0 + e2) * e1 / a1, e2 / a2)),
        SlotOneDecoding::Independent => {
            let den = 1.0 - e1 * e2;
            if den > 0.0 {
                Some(((1.0 + e2) * e1 / (a1 * den), (1.0 + e1) * e2 / (a2 * den)))
            } else {
                None
            }
        }
    }
}

/// Energy of sending `bits` alone in a slot of `duration` channel uses;
/// `+inf` if the rate would exceed `cap`.
fn lone_slot_energy(bits: f64, task: f64, duration: f64, alpha: f64, cap: f64) -> f64 {
    if bits <= BIT_TOL * task {
        return 0.0;
    }
    if !(duration > 0.0) {
        return f64::INFINITY;
    }
    let r = bits / duration;
    if r > cap * (1.0 + REL_SLACK) {
        return f64::INFINITY;
    }
    duration * exp2m1(r) / alpha
}

/// How the slot-1 loads of a [`ThreeSlotProblem`] are coordinatised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOneCoords {
    /// `(R11, R21, tau1)`.
    Rates,
    /// `(gamma11, gamma21, tau1)`: fractions of each task sent in slot 1.
    /// A user's finish-alone constraint is then a bound on its own share,
    /// which rate coordinates can only follow jointly with `tau1`.
    Shares,
}

/// Three-slot problem: both users share slot 1 for `tau1` channel uses,
/// then finish alone.
#[derive(Debug, Clone, Copy)]
pub struct ThreeSlotProblem {
    pub params: BinaryParams,
    pub decoding: SlotOneDecoding,
    pub coords: SlotOneCoords,
    cap: [f64; 2],
}

impl ThreeSlotProblem {
    pub fn new(params: BinaryParams, decoding: SlotOneDecoding) -> Self {
        Self {
            params,
            decoding,
            coords: SlotOneCoords::Rates,
            cap: [params.capacity(0), params.capacity(1)],
        }
    }

    pub fn with_coords(mut self, coords: SlotOneCoords) -> Self {
        self.coords = coords;
        self
    }

    fn boxes(&self) -> [(f64, f64); 3] {
        let l1 = self.params.latency[0];
        match self.coords {
            SlotOneCoords::Rates => [(0.0, self.cap[0]), (0.0, self.cap[1]), (0.0, l1)],
            SlotOneCoords::Shares => [(0.0, 1.0), (0.0, 1.0), (0.0, l1)],
        }
    }

    /// `(R11, R21, tau1)` of a point, `None` for shares sent in an empty slot.
    pub fn rates(&self, x: &[f64]) -> Option<[f64; 3]> {
        match self.coords {
            SlotOneCoords::Rates => Some([x[0], x[1], x[2]]),
            SlotOneCoords::Shares if x[2] > 0.0 => {
                Some([x[0] * self.params.bits[0] / x[2], x[1] * self.params.bits[1] / x[2], x[2]])
            }
            SlotOneCoords::Shares => (x[0] == 0.0 && x[1] == 0.0).then_some([0.0, 0.0, 0.0]),
        }
    }

    fn from_rates(&self, r: [f64; 3]) -> Vec<f64> {
        match self.coords {
            SlotOneCoords::Rates => r.to_vec(),
            SlotOneCoords::Shares => {
                vec![r[2] * r[0] / self.params.bits[0], r[2] * r[1] / self.params.bits[1], r[2]]
            }
        }
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        match self.rates(x) {
            Some(r) => self.energy_at_rates(r),
            None => f64::INFINITY,
        }
    }

    fn energy_at_rates(&self, [r11, r21, tau]: [f64; 3]) -> f64 {
        let p = &self.params;
        if !(r11 >= 0.0 && r21 >= 0.0 && tau >= 0.0 && tau <= p.latency[0]) {
            return f64::INFINITY;
        }
        let bits1 = p.bits[0] - tau * r11;
        let bits2 = p.bits[1] - tau * r21;
        if bits1 < -REL_SLACK * p.bits[0] || bits2 < -REL_SLACK * p.bits[1] {
            return f64::INFINITY;
        }
        let Some((p11, p21)) = slot_one_powers(self.decoding, r11, r21, p.alpha) else {
            return f64::INFINITY;
        };
        if p11 > p.budget[0] * (1.0 + REL_SLACK) || p21 > p.budget[1] * (1.0 + REL_SLACK) {
            return f64::INFINITY;
        }
        let e2 = lone_slot_energy(bits1, p.bits[0], p.latency[0] - tau, p.alpha[0], self.cap[0]);
        let e3 = lone_slot_energy(bits2, p.bits[1], p.gap(), p.alpha[1], self.cap[1]);
        tau * (p11 + p21) + e2 + e3
    }

    /// Smallest slot-1 rates that let slots 2 and 3 run at capacity.
    fn min_rate_point(&self, tau: f64) -> [f64; 3] {
        let p = &self.params;
        if tau <= 0.0 {
            return [0.0, 0.0, 0.0];
        }
        let r11 = (p.bits[0] - self.cap[0] * (p.latency[0] - tau)) / tau;
        let r21 = (p.bits[1] - self.cap[1] * p.gap()) / tau;
        [r11.max(0.0), r21.max(0.0), tau]
    }

    /// Normalized feasibility margin of the minimum-rate point at `tau`.
    fn slack(&self, tau: f64) -> f64 {
        let p = &self.params;
        let x = self.min_rate_point(tau);
        if tau <= 0.0 {
            let ok = p.bits[0] <= self.cap[0] * p.latency[0] && p.bits[1] <= self.cap[1] * p.gap();
            return if ok { 1.0 } else { f64::NEG_INFINITY };
        }
        let Some((p11, p21)) = slot_one_powers(self.decoding, x[0], x[1], p.alpha) else {
            return f64::NEG_INFINITY;
        };
        let s = [
            1.0 - p11 / p.budget[0],
            1.0 - p21 / p.budget[1],
            1.0 - tau * x[0] / p.bits[0],
            1.0 - tau * x[1] / p.bits[1],
        ];
        s.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Deterministic feasible starting points, or none if no slot-1 length
    /// admits a feasible rate pair.
    pub fn initial_points(&self) -> Vec<Vec<f64>> {
        const N: usize = 256;
        let l1 = self.params.latency[0];
        let grid: Vec<f64> = (0..=N).map(|i| l1 * i as f64 / N as f64).collect();
        let slack: Vec<f64> = grid.iter().map(|&t| self.slack(t)).collect();
        let (ib, _) = slack
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let lo = grid[ib.saturating_sub(1)];
        let hi = grid[(ib + 1).min(N)];
        let refine = BracketedProblem {
            objective: |t: f64| -self.slack(t),
            lower: lo,
            upper: hi,
            shape: Shape::QuasiConvex,
        };
        let best = match minimize_scalar(&refine, default_x_tol(lo, hi)) {
            Ok(m) if -m.value >= slack[ib] => m.argmin,
            _ => grid[ib],
        };
        let feasible = |t: f64| self.energy_at_rates(self.min_rate_point(t)).is_finite();
        if !feasible(best) {
            return Vec::new();
        }
        let (t_lo, t_hi) = feasible_interval(feasible, 0.0, l1, best);
        [best, t_lo, t_hi, 0.5 * (t_lo + t_hi)]
            .into_iter()
            .map(|t| self.from_rates(self.min_rate_point(t)))
            .filter(|x| self.energy(x).is_finite())
            .collect()
    }

    /// Allocation and energies at a feasible point.
    pub fn offload_at(&self, x: &[f64], trace: String) -> Offload {
        let p = &self.params;
        let [mut r11, mut r21, tau] = self.rates(x).unwrap_or([0.0; 3]);
        let (mut p11, mut p21) = slot_one_powers(self.decoding, r11, r21, p.alpha).unwrap_or((0.0, 0.0));
        if tau <= 0.0 {
            (r11, r21, p11, p21) = (0.0, 0.0, 0.0, 0.0);
        }
        let bits1 = (p.bits[0] - tau * r11).max(0.0);
        let bits2 = (p.bits[1] - tau * r21).max(0.0);
        let tau2 = if bits1 > BIT_TOL * p.bits[0] { p.latency[0] - tau } else { 0.0 };
        let tau3 = if bits2 > BIT_TOL * p.bits[1] { p.gap() } else { 0.0 };
        let r12 = if tau2 > 0.0 { bits1 / tau2 } else { 0.0 };
        let r23 = if tau3 > 0.0 { bits2 / tau3 } else { 0.0 };
        let a = Allocation {
            tau: [tau, tau2, tau3],
            r11,
            r21,
            r12,
            r23,
            p11: p11.min(p.budget[0]),
            p21: p21.min(p.budget[1]),
            p12: (exp2m1(r12) / p.alpha[0]).min(p.budget[0]),
            p23: (exp2m1(r23) / p.alpha[1]).min(p.budget[1]),
            gamma11: tau * r11 / p.bits[0],
            gamma21: tau * r21 / p.bits[1],
            gamma23: tau3 * r23 / p.bits[1],
        };
        Offload::from_allocation(a, trace)
    }
}

impl CoordinateProblem for ThreeSlotProblem {
    fn dim(&self) -> usize {
        3
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.energy(x)
    }

    fn bounds(&self, i: usize, x: &[f64]) -> Option<(f64, f64)> {
        let (lo, hi) = self.boxes()[i];
        finite_interval(|y| self.energy(y), i, x, lo, hi)
    }

    fn shape(&self, _i: usize) -> Shape {
        Shape::Convex
    }
}

/// Coordinate-descent options used by the three-slot solvers.
pub fn three_slot_options() -> DescentOptions {
    DescentOptions {
        rel_tol: 1e-12,
        max_iters: 500,
        extrapolate: true,
        ..DescentOptions::default()
    }
}

/// The TDMA optimum written as a three-slot point: user 2 alone in slot 1
/// while user 1 waits, then user 1 alone in slot 2.
fn tdma_as_three_slot(p: &BinaryParams) -> Option<[f64; 3]> {
    let o = tdma_offload(p)?;
    let a = o.allocation;
    let tau = (p.latency[0] - a.tau[0]).max(0.0);
    Some([0.0, a.r23, tau])
}

/// Best descent over every slot-1 decoding and both coordinate systems.
fn solve_three_slot(p: &BinaryParams, decodings: &[SlotOneDecoding], scheme: Scheme) -> Option<Offload> {
    let tdma_start = tdma_as_three_slot(p);
    let mut best: Option<(DescentReport, ThreeSlotProblem)> = None;
    let problems = decodings.iter().flat_map(|&d| {
        [SlotOneCoords::Rates, SlotOneCoords::Shares].map(|c| ThreeSlotProblem::new(*p, d).with_coords(c))
    });
    for problem in problems {
        let mut inits = problem.initial_points();
        if let Some(t) = tdma_start.map(|t| problem.from_rates(t)) {
            if problem.energy(&t).is_finite() {
                inits.push(t);
            }
        }
        if let Ok(r) = multi_start(&problem, &inits, &three_slot_options()) {
            if best.as_ref().map_or(true, |(b, _)| r.final_objective < b.final_objective) {
                best = Some((r, problem));
            }
        }
    }
    let (r, problem) = best?;
    let status = if r.converged { "converged" } else { "max-iters" };
    let trace = format!("{}/{}/{}", scheme.name(), problem.decoding.label(), status);
    Some(problem.offload_at(&r.minimizer, trace))
}

/// Successive decoding with time sharing between the two decoding orders:
/// the best of the two corner-point problems.
pub fn sdwts_offload(p: &BinaryParams) -> Option<Offload> {
    solve_three_slot(
        p,
        &[SlotOneDecoding::User1Clean, SlotOneDecoding::User2Clean],
        Scheme::Sdwts,
    )
}

pub fn id_offload(p: &BinaryParams) -> Option<Offload> {
    solve_three_slot(p, &[SlotOneDecoding::Independent], Scheme::Id)
}

pub fn solve_sdwts(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = BinaryParams::from_scenario(scenario)?;
    Ok(to_solution(
        sdwts_offload(&p),
        Scheme::Sdwts,
        Mode::Binary,
        scenario.symbol_interval(),
        swapped != scenario.swapped(),
        "infeasible: no feasible slot-1 length",
    ))
}

pub fn solve_id(scenario: &Scenario) -> Result<Solution> {
    let (p, swapped) = BinaryParams::from_scenario(scenario)?;
    Ok(to_solution(
        id_offload(&p),
        Scheme::Id,
        Mode::Binary,
        scenario.symbol_interval(),
        swapped != scenario.swapped(),
        "infeasible: no feasible slot-1 length",
    ))
}

/// Both users offload under `scheme`.
pub fn offload_both(p: &BinaryParams, scheme: Scheme) -> Option<Offload> {
    match scheme {
        Scheme::FullMa => full_ma_offload(p),
        Scheme::Sdwts => sdwts_offload(p),
        Scheme::Id => id_offload(p),
        Scheme::Tdma => tdma_offload(p),
    }
}

pub fn solve_binary(scenario: &Scenario, scheme: Scheme) -> Result<Solution> {
    match scheme {
        Scheme::FullMa => solve_full_ma(scenario),
        Scheme::Sdwts => solve_sdwts(scenario),
        Scheme::Id => solve_id(scenario),
        Scheme::Tdma => solve_tdma(scenario),
    }
}

/// Outcome of choosing who offloads.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDecision {
    pub offload: [bool; 2],
    /// Total energy of (local, local), (user 1 offloads), (user 2 offloads)
    /// and (both offload); `None` where infeasible.
    pub case_energies: [Option<f64>; 4],
    pub solution: Solution,
}

/// Picks the cheapest of the four offload patterns. Ties go to the
/// pattern with fewer offloading users.
pub fn decide_binary(scenario: &Scenario, scheme: Scheme) -> Result<BinaryDecision> {
    let (p, swapped) = BinaryParams::from_scenario(scenario)?;
    let sc = if swapped {
        scenario.swap_users()
    } else {
        scenario.clone()
    };
    let ts = scenario.symbol_interval();
    let local = [sc.user(0).local_energy.value(), sc.user(1).local_energy.value()];
    let single = |k: usize| solve_single_user(p.bits[k], p.latency[k], p.alpha[k], p.budget[k]);

    let alone1 = single(0).map(|o| Allocation {
        tau: [0.0, p.latency[0], 0.0],
        r12: o.rate,
        p12: o.power,
        ..Allocation::default()
    });
    let alone2 = single(1).map(|o| Allocation {
        tau: [0.0, 0.0, p.latency[1]],
        r23: o.rate,
        p23: o.power,
        gamma23: 1.0,
        ..Allocation::default()
    });
    let both = offload_both(&p, scheme);

    // (allocation, per-user energy, local energy, trace) for each pattern.
    type Pattern = Option<(Allocation, [f64; 2], [f64; 2], String)>;
    let patterns: [Pattern; 4] = [
        local[0]
            .zip(local[1])
            .map(|(e1, e2)| (Allocation::default(), [e1, e2], [e1, e2], "local/local".into())),
        alone1.zip(local[1]).map(|(a, e2)| {
            (a, [a.transmit_energy(0), e2], [0.0, e2], "offload/local".into())
        }),
        alone2.zip(local[0]).map(|(a, e1)| {
            (a, [e1, a.transmit_energy(1)], [e1, 0.0], "local/offload".into())
        }),
        both.map(|o| (o.allocation, o.energy, [0.0; 2], format!("offload/offload; {}", o.trace))),
    ];
    let case_energies = patterns
        .clone()
        .map(|pat| pat.map(|(_, e, _, _)| e[0] + e[1]));
    let mut chosen: Option<usize> = None;
    for (i, e) in case_energies.iter().enumerate() {
        if let Some(e) = e {
            if chosen.map_or(true, |c| *e < case_energies[c].unwrap()) {
                chosen = Some(i);
            }
        }
    }
    let offload = match chosen {
        Some(1) => [true, false],
        Some(2) => [false, true],
        Some(3) => [true, true],
        _ => [false, false],
    };
    let solution = match chosen {
        Some(i) => {
            let (allocation, energy, local_energy, trace) = patterns[i].clone().unwrap();
            Solution {
                scheme,
                mode: Mode::Binary,
                feasible: true,
                allocation: Some(allocation),
                energy,
                local_energy,
                symbol_interval: ts,
                users_swapped: false,
                case_trace: trace,
            }
            .mark_swapped(swapped != scenario.swapped())
        }
        None => Solution::infeasible(scheme, Mode::Binary, ts, "no feasible pattern").mark_swapped(swapped != scenario.swapped()),
    };
    Ok(BinaryDecision {
        offload,
        case_energies,
        solution,
    })
}

/// Merges slots 1 and 2 of a three-slot allocation into a single shared
/// slot with time-averaged rates and powers. Energy and bits are unchanged.
pub fn merge_first_slots(a: &Allocation) -> Allocation {
    let g = a.tau[0] + a.tau[1];
    if g <= 0.0 {
        return *a;
    }
    let (w1, w2) = (a.tau[0] / g, a.tau[1] / g);
    Allocation {
        tau: [g, 0.0, a.tau[2]],
        r11: w1 * a.r11 + w2 * a.r12,
        r21: w1 * a.r21,
        r12: 0.0,
        r23: a.r23,
        p11: w1 * a.p11 + w2 * a.p12,
        p21: w1 * a.p21,
        p12: 0.0,
        p23: a.p23,
        gamma11: a.gamma11 + if a.tau[1] > 0.0 { 1.0 - a.gamma11 } else { 0.0 },
        gamma21: a.gamma21,
        gamma23: a.gamma23,
    }
}
