//! Domain types shared by every solver: tasks, radio links, scenarios,
//! allocations and solutions, plus the rate-region membership tests.
//!
//! Users are indexed `0` (the one with the tighter deadline) and `1`.
//! Energies are kept in the normalized unit `sum(P * tau)` where powers are
//! per-symbol energies and `tau` counts channel uses; multiplying by the
//! symbol interval gives joules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default relative feasibility tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Leftover bits below this fraction of a task count as nothing left to
/// send (a millionth of a bit for a megabit task).
pub const BIT_TOL: f64 = 1e-12;

/// `2^x - 1` without cancellation for small `x`.
#[inline]
pub fn exp2m1(x: f64) -> f64 {
    (x * std::f64::consts::LN_2).exp_m1()
}

/// `log2(1 + x)` without cancellation for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Multiple-access scheme used in the shared slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Full multiple access: any point of the capacity region.
    #[serde(rename = "FullMA")]
    FullMa,
    /// Successive decoding with time sharing restricted to the two corners.
    #[serde(rename = "SDwts")]
    Sdwts,
    /// Independent decoding, each user treating the other as noise.
    #[serde(rename = "ID")]
    Id,
    /// One user at a time.
    #[serde(rename = "TDMA")]
    Tdma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::FullMa, Scheme::Sdwts, Scheme::Id, Scheme::Tdma];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullMa => "FullMA",
            Scheme::Sdwts => "SDwts",
            Scheme::Id => "ID",
            Scheme::Tdma => "TDMA",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fullma" | "ma" => Ok(Scheme::FullMa),
            "sdwts" | "sd" => Ok(Scheme::Sdwts),
            "id" => Ok(Scheme::Id),
            "tdma" => Ok(Scheme::Tdma),
            _ => Err(invalid("scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

/// How much of each task may be offloaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each task is either offloaded whole or computed locally.
    Binary,
    /// Each task is split between local and remote computation.
    Partial,
    /// One user is binary, the other partial.
    Mixed,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Partial => "partial",
            Mode::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Mode::Binary),
            "partial" => Ok(Mode::Partial),
            "mixed" => Ok(Mode::Mixed),
            _ => Err(invalid("mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// Energy of computing a whole task locally, in the normalized unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum LocalEnergy {
    Finite(f64),
    /// The task cannot meet its deadline locally.
    #[default]
    Infeasible,
}

impl LocalEnergy {
    pub fn value(self) -> Option<f64> {
        match self {
            LocalEnergy::Finite(e) => Some(e),
            LocalEnergy::Infeasible => None,
        }
    }
}

/// Dynamic-voltage-scaled local CPU plus the cloud execution speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalComputeModel {
    /// Effective switched capacitance times cycles-per-bit cubed.
    pub chip_constant: f64,
    /// Cloud execution time per offloaded bit, in seconds.
    pub cloud_time_per_bit: f64,
}

impl LocalComputeModel {
    pub fn new(chip_constant: f64, cloud_time_per_bit: f64) -> Result<Self> {
        if !(chip_constant.is_finite() && chip_constant >= 0.0) {
            return Err(invalid("chip_constant", "must be finite and >= 0"));
        }
        if !(cloud_time_per_bit.is_finite() && cloud_time_per_bit >= 0.0) {
            return Err(invalid("cloud_time_per_bit", "must be finite and >= 0"));
        }
        Ok(Self {
            chip_constant,
            cloud_time_per_bit,
        })
    }

    /// Energy of computing `bits` locally within `latency` seconds.
    pub fn energy(&self, bits: f64, latency: f64) -> f64 {
        local_dvs_energy(self.chip_constant, bits, latency)
    }
}

/// `M b^3 / L^2`: the DVS-optimal energy for `b` bits in `L` seconds.
#[inline]
pub fn local_dvs_energy(chip_constant: f64, bits: f64, latency: f64) -> f64 {
    if bits <= 0.0 {
        return 0.0;
    }
    chip_constant * bits * bits * bits / (latency * latency)
}

/// One user's computation task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub bits: f64,
    /// Deadline in seconds.
    pub latency: f64,
    /// Cloud execution time in seconds (binary mode).
    pub exec_time: f64,
    /// Result download time in seconds.
    pub downlink_time: f64,
    pub local_energy: LocalEnergy,
    pub local_model: Option<LocalComputeModel>,
}

impl TaskSpec {
    pub fn new(bits: f64, latency: f64) -> Self {
        Self {
            bits,
            latency,
            exec_time: 0.0,
            downlink_time: 0.0,
            local_energy: LocalEnergy::Infeasible,
            local_model: None,
        }
    }

    pub fn with_exec_time(mut self, t: f64) -> Self {
        self.exec_time = t;
        self
    }

    pub fn with_downlink_time(mut self, t: f64) -> Self {
        self.downlink_time = t;
        self
    }

    pub fn with_local_energy(mut self, e: LocalEnergy) -> Self {
        self.local_energy = e;
        self
    }

    pub fn with_local_model(mut self, m: LocalComputeModel) -> Self {
        self.local_model = Some(m);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.bits.is_finite() && self.bits > 0.0) {
            return Err(invalid("bits", "must be finite and > 0"));
        }
        if !(self.latency.is_finite() && self.latency > 0.0) {
            return Err(invalid("latency", "must be finite and > 0"));
        }
        if !(self.exec_time.is_finite() && self.exec_time >= 0.0) {
            return Err(invalid("exec_time", "must be finite and >= 0"));
        }
        if !(self.downlink_time.is_finite() && self.downlink_time >= 0.0) {
            return Err(invalid("downlink_time", "must be finite and >= 0"));
        }
        if let LocalEnergy::Finite(e) = self.local_energy {
            if !(e.is_finite() && e >= 0.0) {
                return Err(invalid("local_energy", "must be finite and >= 0"));
            }
        }
        if let Some(m) = self.local_model {
            LocalComputeModel::new(m.chip_constant, m.cloud_time_per_bit)?;
        }
        Ok(())
    }
}

/// Uplink channel of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioLink {
    /// Squared channel magnitude `|h|^2`.
    pub gain: f64,
    /// Per-symbol energy budget.
    pub power_budget: f64,
}

impl RadioLink {
    pub fn new(gain: f64, power_budget: f64) -> Self {
        Self { gain, power_budget }
    }
}

/// `|h|^2 / sigma^2`.
pub fn effective_gain(link: &RadioLink, noise: f64) -> Result<f64> {
    if !(link.gain.is_finite() && link.gain > 0.0) {
        return Err(invalid("gain", "must be finite and > 0"));
    }
    if !(noise.is_finite() && noise > 0.0) {
        return Err(invalid("noise", "must be finite and > 0"));
    }
    Ok(link.gain / noise)
}

/// The window a user has for uploading.
///
/// Binary mode returns `(L - t_exe - t_DL) / T_s` in channel uses; partial
/// and mixed modes return `L - t_DL` in seconds, since the cloud time then
/// depends on how many bits are offloaded.
pub fn normalized_latency(task: &TaskSpec, symbol_interval: f64, mode: Mode) -> Result<f64> {
    let remainder = match mode {
        Mode::Binary => (task.latency - task.exec_time - task.downlink_time) / symbol_interval,
        Mode::Partial | Mode::Mixed => task.latency - task.downlink_time,
    };
    if remainder > 0.0 {
        Ok(remainder)
    } else {
        Err(Error::InfeasibleLatency { user: 0, remainder })
    }
}

/// A validated two-user instance, users ordered by deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    users: [TaskSpec; 2],
    links: [RadioLink; 2],
    noise: f64,
    symbol_interval: f64,
    swapped: bool,
}

impl Scenario {
    /// Validates the inputs and orders the users so that `L_1 <= L_2`.
    pub fn new(
        user1: TaskSpec,
        link1: RadioLink,
        user2: TaskSpec,
        link2: RadioLink,
        noise: f64,
        symbol_interval: f64,
    ) -> Result<Self> {
        user1.validate()?;
        user2.validate()?;
        if !(symbol_interval.is_finite() && symbol_interval > 0.0) {
            return Err(invalid("symbol_interval", "must be finite and > 0"));
        }
        for link in [&link1, &link2] {
            effective_gain(link, noise)?;
            if !(link.power_budget.is_finite() && link.power_budget > 0.0) {
                return Err(invalid("power_budget", "must be finite and > 0"));
            }
        }
        let s = Self {
            users: [user1, user2],
            links: [link1, link2],
            noise,
            symbol_interval,
            swapped: false,
        };
        Ok(if user1.latency > user2.latency {
            s.swap_users()
        } else {
            s
        })
    }

    /// The same instance with the user labels exchanged.
    pub fn swap_users(&self) -> Self {
        Self {
            users: [self.users[1], self.users[0]],
            links: [self.links[1], self.links[0]],
            noise: self.noise,
            symbol_interval: self.symbol_interval,
            swapped: !self.swapped,
        }
    }

    /// Reorders users so that the mode's normalized latencies are ordered.
    /// The flag tells whether a swap was needed.
    pub fn ordered_for(&self, mode: Mode) -> Result<(Self, bool)> {
        let l = self.latencies(mode)?;
        Ok(if l[0] > l[1] {
            (self.swap_users(), true)
        } else {
            (self.clone(), false)
        })
    }

    pub fn user(&self, k: usize) -> &TaskSpec {
        &self.users[k]
    }

    pub fn link(&self, k: usize) -> &RadioLink {
        &self.links[k]
    }

    pub fn users(&self) -> &[TaskSpec; 2] {
        &self.users
    }

    pub fn links(&self) -> &[RadioLink; 2] {
        &self.links
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn symbol_interval(&self) -> f64 {
        self.symbol_interval
    }

    /// True when the input order was reversed to put the tighter deadline first.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.links[k].gain / self.noise
    }

    pub fn alphas(&self) -> [f64; 2] {
        [self.alpha(0), self.alpha(1)]
    }

    pub fn budgets(&self) -> [f64; 2] {
        [self.links[0].power_budget, self.links[1].power_budget]
    }

    pub fn bits(&self) -> [f64; 2] {
        [self.users[0].bits, self.users[1].bits]
    }

    /// Normalized latency of user `k`.
    pub fn latency(&self, k: usize, mode: Mode) -> Result<f64> {
        normalized_latency(&self.users[k], self.symbol_interval, mode).map_err(|e| match e {
            Error::InfeasibleLatency { remainder, .. } => Error::InfeasibleLatency {
                user: k + 1,
                remainder,
            },
            e => e,
        })
    }

    pub fn latencies(&self, mode: Mode) -> Result<[f64; 2]> {
        Ok([self.latency(0, mode)?, self.latency(1, mode)?])
    }

    /// Cloud time per bit shared by both users, zero if no local model is set.
    pub fn cloud_time_per_bit(&self) -> Result<f64> {
        match (self.users[0].local_model, self.users[1].local_model) {
            (Some(a), Some(b)) if a.cloud_time_per_bit != b.cloud_time_per_bit => Err(invalid(
                "cloud_time_per_bit",
                "users disagree on the cloud speed",
            )),
            (Some(a), _) => Ok(a.cloud_time_per_bit),
            (None, Some(b)) => Ok(b.cloud_time_per_bit),
            (None, None) => Ok(0.0),
        }
    }

    pub fn with_gains(&self, g1: f64, g2: f64) -> Result<Self> {
        let mut s = self.clone();
        s.links[0].gain = g1;
        s.links[1].gain = g2;
        for link in &s.links {
            effective_gain(link, s.noise)?;
        }
        Ok(s)
    }
}

fn leq(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + (tol + 8.0 * f64::EPSILON) * rhs.abs().max(1.0)
}

/// Whether the slot rate pair `rates` is achievable with `powers` under
/// `scheme`. `tol` is relative to `max(1, |rhs|)` on each inequality.
pub fn region_member(
    scheme: Scheme,
    rates: [f64; 2],
    powers: [f64; 2],
    alpha: [f64; 2],
    tol: f64,
) -> bool {
    let [r1, r2] = rates;
    let [p1, p2] = powers;
    if r1 < -tol || r2 < -tol || p1 < 0.0 || p2 < 0.0 {
        return false;
    }
    let (s1, s2) = (alpha[0] * p1, alpha[1] * p2);
    let single1 = log2_1p(s1);
    let single2 = log2_1p(s2);
    let cross1 = log2_1p(s1 / (1.0 + s2));
    let cross2 = log2_1p(s2 / (1.0 + s1));
    match scheme {
        Scheme::FullMa => {
            leq(r1, single1, tol) && leq(r2, single2, tol) && leq(r1 + r2, log2_1p(s1 + s2), tol)
        }
        Scheme::Sdwts => {
            (leq(r1, single1, tol) && leq(r2, cross2, tol))
                || (leq(r1, cross1, tol) && leq(r2, single2, tol))
        }
        Scheme::Id => leq(r1, cross1, tol) && leq(r2, cross2, tol),
        Scheme::Tdma => {
            (r2.abs() <= tol && leq(r1, single1, tol)) || (r1.abs() <= tol && leq(r2, single2, tol))
        }
    }
}

/// Slot durations, rates, powers and offloaded fractions.
///
/// Slot 1 may carry both users, slot 2 only user 1 and slot 3 only user 2.
/// `tau` is in channel uses and `gamma_ki` is the fraction of user `k`'s
/// bits sent in slot `i`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Allocation {
    pub tau: [f64; 3],
    pub r11: f64,
    pub r21: f64,
    pub r12: f64,
    pub r23: f64,
    pub p11: f64,
    pub p21: f64,
    pub p12: f64,
    pub p23: f64,
    pub gamma11: f64,
    pub gamma21: f64,
    pub gamma23: f64,
}

impl Allocation {
    /// Bits user `k` sends, summed over its slots.
    pub fn offloaded_bits(&self, k: usize) -> f64 {
        match k {
            0 => self.tau[0] * self.r11 + self.tau[1] * self.r12,
            _ => self.tau[0] * self.r21 + self.tau[2] * self.r23,
        }
    }

    /// Transmit energy of user `k` in the normalized unit.
    pub fn transmit_energy(&self, k: usize) -> f64 {
        match k {
            0 => self.tau[0] * self.p11 + self.tau[1] * self.p12,
            _ => self.tau[0] * self.p21 + self.tau[2] * self.p23,
        }
    }
}

/// Outcome of one solver call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub scheme: Scheme,
    pub mode: Mode,
    pub feasible: bool,
    pub allocation: Option<Allocation>,
    /// Per-user energy (transmit plus local), normalized unit.
    pub energy: [f64; 2],
    /// Local part of `energy`.
    pub local_energy: [f64; 2],
    pub symbol_interval: f64,
    /// True when the allocation and energies list the users in the reverse
    /// of the order they were given in, whether the scenario reordered them
    /// on construction or the solver did for this mode.
    pub users_swapped: bool,
    /// Which analytic branch or search produced the answer.
    pub case_trace: String,
}

impl Solution {
    pub fn infeasible(scheme: Scheme, mode: Mode, symbol_interval: f64, trace: impl Into<String>) -> Self {
        Self {
            scheme,
            mode,
            feasible: false,
            allocation: None,
            energy: [f64::INFINITY; 2],
            local_energy: [0.0; 2],
            symbol_interval,
            users_swapped: false,
            case_trace: trace.into(),
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.energy[0] + self.energy[1]
    }

    pub fn total_energy_joules(&self) -> f64 {
        self.total_energy() * self.symbol_interval
    }

    pub fn energy_joules(&self, k: usize) -> f64 {
        self.energy[k] * self.symbol_interval
    }

    pub(crate) fn mark_swapped(mut self, swapped: bool) -> Self {
        if swapped {
            self.users_swapped = true;
            self.case_trace.push_str("; users relabelled");
        }
        self
    }

    /// Checks the allocation against the scenario: rate regions, power
    /// budgets, deadlines, bit conservation and energy bookkeeping.
    /// Returns a description of every violated condition.
    pub fn violations(&self, scenario: &Scenario, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !self.feasible {
            return out;
        }
        let Some(a) = self.allocation else {
            out.push("feasible solution without an allocation".into());
            return out;
        };
        // `users_swapped` is relative to the input order, which the
        // scenario may already have reversed.
        let sc = if self.users_swapped != scenario.swapped() {
            scenario.swap_users()
        } else {
            scenario.clone()
        };
        let alpha = sc.alphas();
        let budget = sc.budgets();
        let bits = sc.bits();
        let rel = |x: f64, y: f64| (x - y).abs() <= tol.max(1e-7) * x.abs().max(y.abs()).max(1.0);

        let values = [
            a.tau[0], a.tau[1], a.tau[2], a.r11, a.r21, a.r12, a.r23, a.p11, a.p21, a.p12, a.p23,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < -tol) {
            out.push(format!("negative or non-finite allocation entry: {a:?}"));
        }
        if a.tau[0] > 0.0
            && !region_member(self.scheme, [a.r11, a.r21], [a.p11, a.p21], alpha, tol)
        {
            out.push("slot-1 rates outside the rate region".into());
        }
        if a.tau[1] > 0.0 && !leq(a.r12, log2_1p(alpha[0] * a.p12), tol) {
            out.push("slot-2 rate above capacity".into());
        }
        if a.tau[2] > 0.0 && !leq(a.r23, log2_1p(alpha[1] * a.p23), tol) {
            out.push("slot-3 rate above capacity".into());
        }
        for (p, k) in [(a.p11, 0), (a.p12, 0), (a.p21, 1), (a.p23, 1)] {
            if !leq(p, budget[k], tol) {
                out.push(format!("user {} power {p} above budget {}", k + 1, budget[k]));
            }
        }
        for k in 0..2 {
            let tx = a.transmit_energy(k) + self.local_energy[k];
            if !rel(tx, self.energy[k]) {
                out.push(format!("user {} energy {} != {}", k + 1, self.energy[k], tx));
            }
        }

        let sent = [a.offloaded_bits(0), a.offloaded_bits(1)];
        let end1 = a.tau[0] + a.tau[1];
        let end2 = if a.tau[2] > 0.0 { end1 + a.tau[2] } else { a.tau[0] };
        match self.mode {
            Mode::Binary => {
                let Ok(l) = sc.latencies(Mode::Binary) else {
                    out.push("latency not positive".into());
                    return out;
                };
                for k in 0..2 {
                    if sent[k] > BIT_TOL * bits[k] && !rel(sent[k], bits[k]) {
                        out.push(format!("user {} sends {} of {} bits", k + 1, sent[k], bits[k]));
                    }
                }
                if sent[0] > BIT_TOL * bits[0] && !leq(end1, l[0], tol) {
                    out.push("user 1 misses its deadline".into());
                }
                if sent[1] > BIT_TOL * bits[1] && !leq(end2, l[1], tol) {
                    out.push("user 2 misses its deadline".into());
                }
            }
            Mode::Partial | Mode::Mixed => {
                let (Ok(l), Ok(dc)) = (sc.latencies(Mode::Partial), sc.cloud_time_per_bit()) else {
                    out.push("latency not positive".into());
                    return out;
                };
                let ts = sc.symbol_interval();
                let g = [
                    a.tau[0] * a.r11 / bits[0],
                    a.tau[0] * a.r21 / bits[1],
                    a.tau[2] * a.r23 / bits[1],
                ];
                for (gi, reported) in g.iter().zip([a.gamma11, a.gamma21, a.gamma23]) {
                    if (gi - reported).abs() > 1e-6 {
                        out.push(format!("offloaded fraction {reported} inconsistent with {gi}"));
                    }
                }
                if a.tau[1] > 0.0 {
                    out.push("slot 2 is unused in partial offloading".into());
                }
                if !leq(a.gamma11, 1.0, tol) || !leq(a.gamma21 + a.gamma23, 1.0, tol) {
                    out.push("offloaded fraction above one".into());
                }
                if sent[0] > BIT_TOL * bits[0] && !leq(ts * end1 + dc * sent[0], l[0], tol) {
                    out.push("user 1 misses its deadline".into());
                }
                if sent[1] > BIT_TOL * bits[1] && !leq(ts * end2 + dc * sent[1], l[1], tol) {
                    out.push("user 2 misses its deadline".into());
                }
            }
        }
        out
    }
}
