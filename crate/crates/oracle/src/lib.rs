//! Brute-force reference solver.
//!
//! Every problem is solved by exhaustive evaluation on a tensor grid over
//! its free variables, followed by zoomed refinement passes around the
//! incumbent. Dependent quantities (slot lengths, offloaded fractions,
//! powers) are recomputed here from the deadline, bit-count and capacity
//! constraints; nothing is shared with the analytic solvers beyond the
//! scenario types. Grid points that violate a constraint are scored by the
//! total normalized violation, so a search that has not yet found a
//! feasible point still zooms towards the feasible set.

use std::cmp::Ordering;

use macoff_core::{Allocation, Mode, Scenario, Scheme, Solution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{0} is not supported in {1} mode")]
    Unsupported(Scheme, Mode),
    #[error(transparent)]
    Model(#[from] macoff_core::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Grid resolution and refinement schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per variable; `None` picks 400 for problems with at most two
    /// variables and 120 for three.
    pub points: Option<usize>,
    /// Zoom passes after the first full-domain pass.
    pub refinements: usize,
    /// Each zoom keeps this fraction of the previous window per variable.
    pub shrink: f64,
    /// Extra zoom passes allowed while no feasible point has been seen.
    pub rescue: usize,
    /// Separate zoom chains started from the best distinct points of the
    /// first pass.
    pub leaders: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: None,
            refinements: 3,
            shrink: 0.1,
            rescue: 10,
            leaders: 4,
        }
    }
}

impl GridSpec {
    pub fn new(points: Option<usize>, refinements: usize, shrink: f64) -> Result<Self> {
        if let Some(n) = points {
            if n < 16 {
                return Err(OracleError::Grid(format!("need at least 16 points per variable, got {n}")));
            }
        }
        if !(shrink > 0.0 && shrink < 1.0) {
            return Err(OracleError::Grid(format!("shrink must lie in (0, 1), got {shrink}")));
        }
        Ok(Self {
            points,
            refinements,
            shrink,
            ..Self::default()
        })
    }

    pub fn resolution(&self, dims: usize) -> usize {
        self.points.unwrap_or(if dims <= 2 { 400 } else { 120 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Score {
    Feasible(f64),
    Violation(f64),
}

impl Score {
    fn of(value: f64, violation: f64) -> Self {
        if violation > 0.0 || value.is_nan() {
            Score::Violation(if violation > 0.0 { violation } else { f64::INFINITY })
        } else {
            Score::Feasible(value)
        }
    }

    fn beats(self, other: Score) -> bool {
        match (self, other) {
            (Score::Feasible(a), Score::Feasible(b)) => a < b,
            (Score::Feasible(_), Score::Violation(_)) => true,
            (Score::Violation(_), Score::Feasible(_)) => false,
            (Score::Violation(a), Score::Violation(b)) => a < b,
        }
    }
}

/// Positive part of `lhs - rhs`, relative to `scale`.
fn over(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let v = (lhs - rhs) / scale;
    if v > 1e-12 {
        v
    } else if v.is_nan() {
        f64::INFINITY
    } else {
        0.0
    }
}

fn pow2m1(x: f64) -> f64 {
    x.exp2() - 1.0
}

fn cap(alpha: f64, budget: f64) -> f64 {
    (1.0 + alpha * budget).log2()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

trait GridProblem<const N: usize> {
    fn domain(&self) -> [(f64, f64); N];

    /// Score of a single point.
    fn score(&self, x: &[f64; N]) -> Score;

    /// Offers every point of the tensor grid spanned by `axes`.
    fn scan(&self, axes: &[Vec<f64>; N], out: &mut Leaders<N>) {
        let mut idx = [0usize; N];
        'outer: loop {
            let mut x = [0.0; N];
            for d in 0..N {
                x[d] = axes[d][idx[d]];
            }
            let s = self.score(&x);
            out.offer(s, x);
            for d in (0..N).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
    }
}

/// The best few points of a scan, pairwise farther apart than `sep` in
/// some coordinate.
struct Leaders<const N: usize> {
    k: usize,
    sep: [f64; N],
    list: Vec<(Score, [f64; N])>,
}

impl<const N: usize> Leaders<N> {
    fn new(k: usize, sep: [f64; N]) -> Self {
        Self {
            k: k.max(1),
            sep,
            list: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, s: Score, x: [f64; N]) {
        if self.list.len() == self.k && !s.beats(self.list[self.k - 1].0) {
            return;
        }
        let near = self
            .list
            .iter()
            .position(|(_, y)| (0..N).all(|d| (x[d] - y[d]).abs() <= self.sep[d]));
        match near {
            Some(i) if !s.beats(self.list[i].0) => return,
            Some(i) => self.list[i] = (s, x),
            None => self.list.push((s, x)),
        }
        self.list.sort_by(|a, b| {
            if a.0.beats(b.0) {
                Ordering::Less
            } else if b.0.beats(a.0) {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        });
        self.list.truncate(self.k);
    }
}

/// Best feasible point, or `None` if every pass came up infeasible. The
/// first pass covers the whole domain; each of its leaders then seeds its
/// own chain of zoomed passes.
fn search<const N: usize, P: GridProblem<N>>(p: &P, grid: &GridSpec) -> Option<([f64; N], f64)> {
    let n = grid.resolution(N);
    let dom = p.domain();
    let axes: [Vec<f64>; N] = std::array::from_fn(|d| linspace(dom[d].0, dom[d].1, n));
    let mut first = Leaders::new(grid.leaders, std::array::from_fn(|d| 0.5 * grid.shrink * (dom[d].1 - dom[d].0)));
    p.scan(&axes, &mut first);
    let mut best = (Score::Violation(f64::INFINITY), [0.0; N]);
    for lead in first.list {
        let r = zoom(p, grid, dom, lead);
        if r.0.beats(best.0) {
            best = r;
        }
    }
    match best.0 {
        Score::Feasible(v) => Some((best.1, v)),
        Score::Violation(_) => None,
    }
}

fn zoom<const N: usize, P: GridProblem<N>>(
    p: &P,
    grid: &GridSpec,
    dom: [(f64, f64); N],
    mut best: (Score, [f64; N]),
) -> (Score, [f64; N]) {
    let n = grid.resolution(N);
    let mut win = dom;
    let mut pass = 1;
    loop {
        let found = matches!(best.0, Score::Feasible(_));
        if pass > grid.refinements && (found || pass > grid.refinements + grid.rescue) {
            break;
        }
        if matches!(best.0, Score::Violation(v) if v.is_infinite()) {
            break;
        }
        for d in 0..N {
            let half = 0.5 * grid.shrink * (win[d].1 - win[d].0);
            let c = best.1[d];
            win[d] = ((c - half).max(dom[d].0), (c + half).min(dom[d].1));
        }
        let axes: [Vec<f64>; N] = std::array::from_fn(|d| linspace(win[d].0, win[d].1, n));
        let mut out = Leaders::new(1, [0.0; N]);
        p.scan(&axes, &mut out);
        if let Some(&(s, x)) = out.list.first() {
            if s.beats(best.0) {
                best = (s, x);
            }
        }
        pass += 1;
    }
    best
}

/// Minimum of `P1 + P2` over the shared-slot power polygon for rates
/// `(r1, r2)`, by enumerating its vertices. Returns the powers, or the
/// amount by which the budgets fall short.
fn slot_lp(r1: f64, r2: f64, alpha: [f64; 2], budget: [f64; 2]) -> std::result::Result<(f64, f64), f64> {
    let need1 = pow2m1(r1);
    let need2 = pow2m1(r2);
    let need12 = pow2m1(r1 + r2);
    let shortfall = over(need1, alpha[0] * budget[0], 1.0 + need1)
        + over(need2, alpha[1] * budget[1], 1.0 + need2)
        + over(need12, alpha[0] * budget[0] + alpha[1] * budget[1], 1.0 + need12);
    if shortfall > 0.0 {
        return Err(shortfall);
    }
    // Constraints a . P >= b.
    let rows: [([f64; 2], f64); 5] = [
        ([alpha[0], 0.0], need1),
        ([0.0, alpha[1]], need2),
        ([alpha[0], alpha[1]], need12),
        ([-1.0, 0.0], -budget[0]),
        ([0.0, -1.0], -budget[1]),
    ];
    let ok = |p: [f64; 2]| {
        rows.iter().all(|(a, b)| {
            let lhs = a[0] * p[0] + a[1] * p[1];
            lhs >= b - 1e-10 * b.abs().max(lhs.abs()).max(1e-300)
        })
    };
    let mut best: Option<(f64, f64)> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (rows[i].0, rows[j].0);
            let det = a[0] * b[1] - a[1] * b[0];
            if det == 0.0 {
                continue;
            }
            let p1 = (rows[i].1 * b[1] - a[1] * rows[j].1) / det;
            let p2 = (a[0] * rows[j].1 - rows[i].1 * b[0]) / det;
            if ok([p1, p2]) && best.map_or(true, |(q1, q2)| p1 + p2 < q1 + q2) {
                best = Some((p1.max(0.0), p2.max(0.0)));
            }
        }
    }
    best.ok_or(1e-12)
}

struct Binary {
    bits: [f64; 2],
    lat: [f64; 2],
    alpha: [f64; 2],
    budget: [f64; 2],
}

impl Binary {
    fn from(s: &Scenario) -> Result<Self> {
        Ok(Self {
            bits: s.bits(),
            lat: s.latencies(Mode::Binary)?,
            alpha: s.alphas(),
            budget: s.budgets(),
        })
    }

    fn gap(&self) -> f64 {
        self.lat[1] - self.lat[0]
    }
}

/// User 1 alone in the shared slot for its whole window; user 2's slot-1
/// rate is the variable.
struct FullMaBinary<'a>(&'a Binary);

impl FullMaBinary<'_> {
    fn eval(&self, x: f64) -> (Score, Allocation) {
        let b = self.0;
        let s = b.bits[0] / b.lat[0];
        let d = b.gap();
        let rest = b.bits[1] - b.lat[0] * x;
        let mut viol = over(-rest, 0.0, b.bits[1]);
        let y = if d > 0.0 {
            rest.max(0.0) / d
        } else {
            viol += over(rest.abs(), 0.0, b.bits[1]);
            0.0
        };
        let q = pow2m1(y) / b.alpha[1];
        viol += over(q, b.budget[1], b.budget[1]);
        let (p1, p2) = match slot_lp(s, x, b.alpha, b.budget) {
            Ok(p) => p,
            Err(v) => {
                viol += v;
                (0.0, 0.0)
            }
        };
        let tau3 = if y > 0.0 { d } else { 0.0 };
        let a = Allocation {
            tau: [b.lat[0], 0.0, tau3],
            r11: s,
            r21: x,
            r23: y,
            p11: p1,
            p21: p2,
            p23: if y > 0.0 { q } else { 0.0 },
            gamma11: 1.0,
            gamma21: b.lat[0] * x / b.bits[1],
            gamma23: tau3 * y / b.bits[1],
            ..Allocation::default()
        };
        let e = b.lat[0] * (p1 + p2) + tau3 * q;
        (Score::of(e, viol), a)
    }
}

impl GridProblem<1> for FullMaBinary<'_> {
    fn domain(&self) -> [(f64, f64); 1] {
        [(0.0, self.0.bits[1] / self.0.lat[0])]
    }

    fn score(&self, x: &[f64; 1]) -> Score {
        self.eval(x[0]).0
    }
}

/// User 1 transmits alone first, then user 2; user 1's rate is the variable.
struct TdmaBinary<'a>(&'a Binary);

impl TdmaBinary<'_> {
    fn eval(&self, x: f64) -> (Score, Allocation) {
        let b = self.0;
        let t1 = b.bits[0] / x;
        let t2 = b.lat[1] - t1;
        let mut viol = over(t1, b.lat[0], b.lat[0]);
        let p1 = pow2m1(x) / b.alpha[0];
        viol += over(p1, b.budget[0], b.budget[0]);
        let (y, p2) = if t2 > 0.0 {
            let y = b.bits[1] / t2;
            (y, pow2m1(y) / b.alpha[1])
        } else {
            viol += 1.0 - t2 / b.lat[1];
            (0.0, 0.0)
        };
        viol += over(p2, b.budget[1], b.budget[1]);
        let a = Allocation {
            tau: [t1, 0.0, t2.max(0.0)],
            r11: x,
            r23: y,
            p11: p1,
            p23: p2,
            gamma11: 1.0,
            gamma23: 1.0,
            ..Allocation::default()
        };
        (Score::of(t1 * p1 + t2 * p2, viol), a)
    }
}

impl GridProblem<1> for TdmaBinary<'_> {
    fn domain(&self) -> [(f64, f64); 1] {
        let lo = self.0.bits[0] / self.0.lat[0];
        [(lo, cap(self.0.alpha[0], self.0.budget[0]).max(lo))]
    }

    fn score(&self, x: &[f64; 1]) -> Score {
        self.eval(x[0]).0
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Decoding {
    User1Clean,
    User2Clean,
    Independent,
}

/// Shared slot of variable length followed by two single-user slots.
struct ThreeSlot<'a> {
    b: &'a Binary,
    dec: Decoding,
}

impl ThreeSlot<'_> {
    /// Slot-1 powers and the violation of budgets / decodability.
    fn powers(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let b = self.b;
        let (a, c) = (pow2m1(x), pow2m1(y));
        let (u, v, mut viol) = match self.dec {
            // alpha1 P1 = a, alpha2 P2 = c (1 + alpha1 P1)
            Decoding::User1Clean => (a, c * (1.0 + a), 0.0),
            Decoding::User2Clean => (a * (1.0 + c), c, 0.0),
            Decoding::Independent => {
                let den = 1.0 - a * c;
                if den <= 0.0 {
                    (0.0, 0.0, 1.0 - den)
                } else {
                    (a * (1.0 + c) / den, c * (1.0 + a) / den, 0.0)
                }
            }
        };
        let (p1, p2) = (u / b.alpha[0], v / b.alpha[1]);
        viol += over(p1, b.budget[0], b.budget[0]) + over(p2, b.budget[1], b.budget[1]);
        (p1, p2, viol)
    }

    /// Energy and violation of a user finishing `rest` bits alone in a slot.
    fn lone(rest: f64, dur: f64, alpha: f64, budget: f64, bits: f64) -> (f64, f64) {
        if rest < 0.0 {
            return (0.0, -rest / bits);
        }
        if rest <= 1e-12 * bits {
            return (0.0, 0.0);
        }
        if dur <= 0.0 {
            return (0.0, rest / bits);
        }
        let p = pow2m1(rest / dur) / alpha;
        (dur * p, over(p, budget, budget))
    }

    fn eval(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let b = self.b;
        let (p1, p2, v1) = self.powers(x, y);
        let (e2, v2) = Self::lone(b.bits[0] - t * x, b.lat[0] - t, b.alpha[0], b.budget[0], b.bits[0]);
        let (e3, v3) = Self::lone(b.bits[1] - t * y, b.gap(), b.alpha[1], b.budget[1], b.bits[1]);
        (t * (p1 + p2) + e2 + e3, v1 + v2 + v3)
    }

    fn allocation(&self, x: f64, y: f64, t: f64) -> Allocation {
        let b = self.b;
        let (p1, p2, _) = self.powers(x, y);
        let rest1 = (b.bits[0] - t * x).max(0.0);
        let rest2 = (b.bits[1] - t * y).max(0.0);
        let tau2 = if rest1 > 1e-12 * b.bits[0] { b.lat[0] - t } else { 0.0 };
        let tau3 = if rest2 > 1e-12 * b.bits[1] { b.gap() } else { 0.0 };
        let r12 = if tau2 > 0.0 { rest1 / tau2 } else { 0.0 };
        let r23 = if tau3 > 0.0 { rest2 / tau3 } else { 0.0 };
        let shared = t > 0.0;
        Allocation {
            tau: [t, tau2, tau3],
            r11: if shared { x } else { 0.0 },
            r21: if shared { y } else { 0.0 },
            r12,
            r23,
            p11: if shared { p1 } else { 0.0 },
            p21: if shared { p2 } else { 0.0 },
            p12: pow2m1(r12) / b.alpha[0],
            p23: pow2m1(r23) / b.alpha[1],
            gamma11: t * x / b.bits[0],
            gamma21: t * y / b.bits[1],
            gamma23: tau3 * r23 / b.bits[1],
        }
    }
}

impl GridProblem<3> for ThreeSlot<'_> {
    fn domain(&self) -> [(f64, f64); 3] {
        let b = self.b;
        [
            (0.0, cap(b.alpha[0], b.budget[0])),
            (0.0, cap(b.alpha[1], b.budget[1])),
            (0.0, b.lat[0]),
        ]
    }

    fn score(&self, x: &[f64; 3]) -> Score {
        let (e, v) = self.eval(x[0], x[1], x[2]);
        Score::of(e, v)
    }

    fn scan(&self, axes: &[Vec<f64>; 3], out: &mut Leaders<3>) {
        let b = self.b;
        let [xs, ys, ts] = axes;
        let s: Vec<(f64, f64)> = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| {
                let (p1, p2, v) = self.powers(x, y);
                (p1 + p2, v)
            })
            .collect();
        let e2: Vec<(f64, f64)> = xs
            .iter()
            .flat_map(|&x| {
                ts.iter()
                    .map(move |&t| Self::lone(b.bits[0] - t * x, b.lat[0] - t, b.alpha[0], b.budget[0], b.bits[0]))
            })
            .collect();
        let e3: Vec<(f64, f64)> = ys
            .iter()
            .flat_map(|&y| {
                ts.iter()
                    .map(move |&t| Self::lone(b.bits[1] - t * y, b.gap(), b.alpha[1], b.budget[1], b.bits[1]))
            })
            .collect();
        let (nx, ny, nt) = (xs.len(), ys.len(), ts.len());
        for i in 0..nx {
            for j in 0..ny {
                let (sum, v1) = s[i * ny + j];
                for k in 0..nt {
                    let (a, v2) = e2[i * nt + k];
                    let (c, v3) = e3[j * nt + k];
                    let sc = Score::of(ts[k] * sum + a + c, v1 + v2 + v3);
                    out.offer(sc, [xs[i], ys[j], ts[k]]);
                }
            }
        }
    }
}

struct Partial {
    bits: [f64; 2],
    window: [f64; 2],
    deadline: [f64; 2],
    alpha: [f64; 2],
    budget: [f64; 2],
    chip: [f64; 2],
    dc: f64,
    ts: f64,
}

impl Partial {
    fn from(s: &Scenario) -> Result<Self> {
        let model = |k: usize| s.user(k).local_model;
        let dc = model(0).or(model(1)).map_or(0.0, |m| m.cloud_time_per_bit);
        Ok(Self {
            bits: s.bits(),
            window: s.latencies(Mode::Partial)?,
            deadline: [s.user(0).latency, s.user(1).latency],
            alpha: s.alphas(),
            budget: s.budgets(),
            chip: [0, 1].map(|k| model(k).map_or(0.0, |m| m.chip_constant)),
            dc,
            ts: s.symbol_interval(),
        })
    }

    fn cap(&self, k: usize) -> f64 {
        cap(self.alpha[k], self.budget[k])
    }

    /// Local energy of user `k` keeping the fraction `1 - g`.
    fn local(&self, k: usize, g: f64) -> f64 {
        let kept = self.bits[k] * (1.0 - g).max(0.0);
        self.chip[k] * kept.powi(3) / self.deadline[k].powi(2)
    }
}

/// Which user (if any) must offload its whole task.
#[derive(Clone, Copy, PartialEq)]
enum Whole {
    Neither,
    User(usize),
}

/// User 1 spreads over its window in slot 1, user 2 continues in slot 3.
struct FullMaPartial<'a> {
    p: &'a Partial,
    whole: Whole,
}

struct FullMaEval {
    energy: f64,
    viol: f64,
    alloc: Allocation,
    local: [f64; 2],
}

impl FullMaPartial<'_> {
    /// Slot-1 part: user-1 terms and user-2 slot-1 terms.
    /// Returns (slot-1 energy + user-1 local, violation, g21, remaining window, tau1, p1, p2).
    fn head(&self, x: f64, y: f64) -> (f64, f64, f64, f64, f64, f64, f64, f64) {
        let p = self.p;
        let tau1 = p.window[0] / (p.ts + p.dc * x);
        let g11 = tau1 * x / p.bits[0];
        let g21 = tau1 * y / p.bits[1];
        let rem = p.window[1] - tau1 * (p.ts + p.dc * y);
        let mut viol = over(g11, 1.0, 1.0) + over(g21, 1.0, 1.0) + over(-rem, 0.0, p.window[1]);
        let (p1, p2) = match slot_lp(x, y, p.alpha, p.budget) {
            Ok(q) => q,
            Err(v) => {
                viol += v;
                (0.0, 0.0)
            }
        };
        let loc1 = if self.whole == Whole::User(0) { 0.0 } else { p.local(0, g11) };
        (tau1 * (p1 + p2) + loc1, viol, g21, rem.max(0.0), tau1, p1, p2, g11)
    }

    fn eval(&self, x: f64, y: f64, z: f64) -> FullMaEval {
        let p = self.p;
        let (head, mut viol, g21, rem, tau1, p1, p2, g11) = self.head(x, y);
        let tau3 = rem / (p.ts + p.dc * z);
        let g23 = tau3 * z / p.bits[1];
        let p23 = pow2m1(z) / p.alpha[1];
        viol += over(p23, p.budget[1], p.budget[1]) + over(g21 + g23, 1.0, 1.0);
        let loc2 = if self.whole == Whole::User(1) { 0.0 } else { p.local(1, g21 + g23) };
        let loc1 = head - tau1 * (p1 + p2);
        let send3 = z > 0.0 && g23 > 0.0;
        FullMaEval {
            energy: head + tau3 * p23 + loc2,
            viol,
            alloc: Allocation {
                tau: [tau1, 0.0, if send3 { tau3 } else { 0.0 }],
                r11: x,
                r21: y,
                r23: if send3 { z } else { 0.0 },
                p11: p1,
                p21: p2,
                p23: if send3 { p23 } else { 0.0 },
                gamma11: g11,
                gamma21: g21,
                gamma23: g23,
                ..Allocation::default()
            },
            local: [loc1, loc2],
        }
    }

    /// User 1 offloads everything: its slot-1 rate follows from `g11 = 1`.
    fn whole_rate1(&self) -> Option<f64> {
        let p = self.p;
        let room = p.window[0] - p.dc * p.bits[0];
        (room > 0.0).then(|| p.bits[0] * p.ts / room)
    }

    /// User 2 offloads everything: its slot-3 rate follows from
    /// `g21 + g23 = 1`. `None` marks an impossible split.
    fn whole_rate3(&self, g21: f64, rem: f64) -> Option<f64> {
        let p = self.p;
        let need = (1.0 - g21) * p.bits[1];
        if need <= 1e-12 * p.bits[1] {
            return Some(0.0);
        }
        let den = rem - need * p.dc;
        (den > 0.0).then(|| need * p.ts / den)
    }
}

impl GridProblem<3> for FullMaPartial<'_> {
    fn domain(&self) -> [(f64, f64); 3] {
        let p = self.p;
        [(0.0, p.cap(0)), (0.0, p.cap(1)), (0.0, p.cap(1))]
    }

    fn score(&self, x: &[f64; 3]) -> Score {
        let e = self.eval(x[0], x[1], x[2]);
        Score::of(e.energy, e.viol)
    }

    fn scan(&self, axes: &[Vec<f64>; 3], out: &mut Leaders<3>) {
        let p = self.p;
        let [xs, ys, zs] = axes;
        let heads: Vec<_> = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.head(x, y))
            .collect();
        // Per slot-3 rate: energy per unit of remaining window, and
        // offloaded fraction per unit of remaining window.
        let per_z: Vec<(f64, f64, f64)> = zs
            .iter()
            .map(|&z| {
                let p23 = pow2m1(z) / p.alpha[1];
                let v = 1.0 / (p.ts + p.dc * z);
                (v * p23, v * z / p.bits[1], over(p23, p.budget[1], p.budget[1]))
            })
            .collect();
        let loc2 = p.chip[1] * p.bits[1].powi(3) / p.deadline[1].powi(2);
        for (ij, h) in heads.iter().enumerate() {
            let (head, v, g21, rem) = (h.0, h.1, h.2, h.3);
            for (k, &(w, u, vz)) in per_z.iter().enumerate() {
                let g = g21 + rem * u;
                let kept = (1.0 - g).max(0.0);
                let sc = Score::of(
                    head + rem * w + loc2 * kept * kept * kept,
                    v + vz + over(g, 1.0, 1.0),
                );
                out.offer(sc, [xs[ij / ys.len()], ys[ij % ys.len()], zs[k]]);
            }
        }
    }
}

/// Mixed variant of [`FullMaPartial`] with two free rates.
struct FullMaMixed<'a>(FullMaPartial<'a>);

impl FullMaMixed<'_> {
    fn rates(&self, x: &[f64; 2]) -> Option<[f64; 3]> {
        match self.0.whole {
            Whole::User(0) => Some([self.0.whole_rate1()?, x[0], x[1]]),
            _ => {
                let (_, _, g21, rem, ..) = self.0.head(x[0], x[1]);
                Some([x[0], x[1], self.0.whole_rate3(g21, rem)?])
            }
        }
    }

    fn eval(&self, x: &[f64; 2]) -> Option<FullMaEval> {
        let [a, b, c] = self.rates(x)?;
        Some(self.0.eval(a, b, c))
    }
}

impl GridProblem<2> for FullMaMixed<'_> {
    fn domain(&self) -> [(f64, f64); 2] {
        let p = self.0.p;
        match self.0.whole {
            Whole::User(0) => [(0.0, p.cap(1)), (0.0, p.cap(1))],
            _ => [(0.0, p.cap(0)), (0.0, p.cap(1))],
        }
    }

    fn score(&self, x: &[f64; 2]) -> Score {
        match self.eval(x) {
            Some(e) => {
                let mut v = e.viol;
                if self.0.whole == Whole::User(1) {
                    v += over((e.alloc.gamma21 + e.alloc.gamma23 - 1.0).abs(), 0.0, 1.0);
                }
                Score::of(e.energy, v)
            }
            None => Score::Violation(1.0),
        }
    }
}

/// User 1 first, then user 2; variables `(R1, R2, gamma1)`.
struct TdmaPartial<'a> {
    p: &'a Partial,
    whole: Whole,
}

struct TdmaEval {
    energy: f64,
    viol: f64,
    alloc: Allocation,
    local: [f64; 2],
}

impl TdmaPartial<'_> {
    /// User-1 part: (energy incl. local, violation, t1, remaining window for user 2, p1, local1).
    fn head(&self, x: f64, g: f64) -> (f64, f64, f64, f64, f64, f64) {
        let p = self.p;
        let bits = g * p.bits[0];
        let (t1, mut viol) = if bits <= 1e-12 * p.bits[0] {
            (0.0, 0.0)
        } else if x > 0.0 {
            (bits / x, 0.0)
        } else {
            (0.0, g)
        };
        viol += over(p.ts * t1 + p.dc * bits, p.window[0], p.window[0]);
        let rem = p.window[1] - p.ts * t1;
        viol += over(-rem, 0.0, p.window[1]);
        let p1 = pow2m1(x) / p.alpha[0];
        viol += over(p1, p.budget[0], p.budget[0]);
        let loc1 = if self.whole == Whole::User(0) { 0.0 } else { p.local(0, g) };
        (t1 * p1 + loc1, viol, t1, rem.max(0.0), p1, loc1)
    }

    fn eval(&self, x: f64, y: f64, g: f64) -> TdmaEval {
        let p = self.p;
        let (head, mut viol, t1, rem, p1, loc1) = self.head(x, g);
        let (t2, g2) = if y > 0.0 {
            let t2 = rem / (p.ts + p.dc * y);
            (t2, t2 * y / p.bits[1])
        } else {
            (0.0, 0.0)
        };
        let p2 = pow2m1(y) / p.alpha[1];
        viol += over(p2, p.budget[1], p.budget[1]) + over(g2, 1.0, 1.0);
        let loc2 = if self.whole == Whole::User(1) { 0.0 } else { p.local(1, g2) };
        let sends = [t1 > 0.0, g2 > 0.0];
        TdmaEval {
            energy: head + t2 * p2 + loc2,
            viol,
            alloc: Allocation {
                tau: [t1, 0.0, if sends[1] { t2 } else { 0.0 }],
                r11: if sends[0] { x } else { 0.0 },
                r23: if sends[1] { y } else { 0.0 },
                p11: if sends[0] { p1 } else { 0.0 },
                p23: if sends[1] { p2 } else { 0.0 },
                gamma11: if sends[0] { g } else { 0.0 },
                gamma23: g2,
                ..Allocation::default()
            },
            local: [loc1, loc2],
        }
    }
}

impl GridProblem<3> for TdmaPartial<'_> {
    fn domain(&self) -> [(f64, f64); 3] {
        [(0.0, self.p.cap(0)), (0.0, self.p.cap(1)), (0.0, 1.0)]
    }

    fn score(&self, x: &[f64; 3]) -> Score {
        let e = self.eval(x[0], x[1], x[2]);
        Score::of(e.energy, e.viol)
    }

    fn scan(&self, axes: &[Vec<f64>; 3], out: &mut Leaders<3>) {
        let p = self.p;
        let [xs, ys, gs] = axes;
        let heads: Vec<(f64, f64, f64)> = xs
            .iter()
            .flat_map(|&x| gs.iter().map(move |&g| (x, g)))
            .map(|(x, g)| {
                let h = self.head(x, g);
                (h.0, h.1, h.3)
            })
            .collect();
        let per_y: Vec<(f64, f64, f64)> = ys
            .iter()
            .map(|&y| {
                let p2 = pow2m1(y) / p.alpha[1];
                let v = 1.0 / (p.ts + p.dc * y);
                (v * p2, v * y / p.bits[1], over(p2, p.budget[1], p.budget[1]))
            })
            .collect();
        let loc2 = p.chip[1] * p.bits[1].powi(3) / p.deadline[1].powi(2);
        let ng = gs.len();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &(w, u, vy)) in per_y.iter().enumerate() {
                for k in 0..ng {
                    let (head, v, rem) = heads[i * ng + k];
                    let g2 = rem * u;
                    let kept = (1.0 - g2).max(0.0);
                    let sc = Score::of(head + rem * w + loc2 * kept * kept * kept, v + vy + over(g2, 1.0, 1.0));
                    out.offer(sc, [x, ys[j], gs[k]]);
                }
            }
        }
    }
}

/// Mixed variant of [`TdmaPartial`] with two free variables.
struct TdmaMixed<'a>(TdmaPartial<'a>);

impl TdmaMixed<'_> {
    fn vars(&self, x: &[f64; 2]) -> Option<[f64; 3]> {
        let p = self.0.p;
        match self.0.whole {
            Whole::User(0) => Some([x[0], x[1], 1.0]),
            _ => {
                // gamma2 = 1: rem * R2 = B2 (T_s + dc R2).
                let (_, _, _, rem, ..) = self.0.head(x[0], x[1]);
                let den = rem - p.bits[1] * p.dc;
                (den > 0.0).then(|| [x[0], p.bits[1] * p.ts / den, x[1]])
            }
        }
    }

    fn eval(&self, x: &[f64; 2]) -> Option<TdmaEval> {
        let [a, b, c] = self.vars(x)?;
        Some(self.0.eval(a, b, c))
    }
}

impl GridProblem<2> for TdmaMixed<'_> {
    fn domain(&self) -> [(f64, f64); 2] {
        let p = self.0.p;
        match self.0.whole {
            Whole::User(0) => [(0.0, p.cap(0)), (0.0, p.cap(1))],
            _ => [(0.0, p.cap(0)), (0.0, 1.0)],
        }
    }

    fn score(&self, x: &[f64; 2]) -> Score {
        match self.eval(x) {
            Some(e) => Score::of(e.energy, e.viol),
            None => Score::Violation(1.0),
        }
    }
}

struct SingleBinary {
    bits: f64,
    latency: f64,
    alpha: f64,
    budget: f64,
}

impl GridProblem<1> for SingleBinary {
    fn domain(&self) -> [(f64, f64); 1] {
        let lo = self.bits / self.latency;
        [(lo, cap(self.alpha, self.budget).max(lo))]
    }

    fn score(&self, x: &[f64; 1]) -> Score {
        let t = self.bits / x[0];
        let p = pow2m1(x[0]) / self.alpha;
        Score::of(t * p, over(t, self.latency, self.latency) + over(p, self.budget, self.budget))
    }
}

/// Minimum energy for one user uploading `bits` alone within `latency`
/// channel uses, or `None` if infeasible.
pub fn oracle_single_user(bits: f64, latency: f64, alpha: f64, budget: f64, grid: &GridSpec) -> Option<f64> {
    let p = SingleBinary {
        bits,
        latency,
        alpha,
        budget,
    };
    search(&p, grid).map(|(_, e)| e)
}

struct SinglePartial {
    bits: f64,
    window: f64,
    deadline: f64,
    alpha: f64,
    budget: f64,
    chip: f64,
    dc: f64,
    ts: f64,
}

impl SinglePartial {
    /// (energy, transmit energy, local energy, gamma, duration, violation)
    fn eval(&self, r: f64) -> (f64, f64, f64, f64, f64, f64) {
        let dur = self.window / (self.ts + self.dc * r);
        let g = dur * r / self.bits;
        let p = pow2m1(r) / self.alpha;
        let kept = (1.0 - g).max(0.0) * self.bits;
        let loc = self.chip * kept.powi(3) / self.deadline.powi(2);
        let viol = over(g, 1.0, 1.0) + over(p, self.budget, self.budget);
        let dur = if r > 0.0 { dur } else { 0.0 };
        (dur * p + loc, dur * p, loc, g, dur, viol)
    }
}

impl GridProblem<1> for SinglePartial {
    fn domain(&self) -> [(f64, f64); 1] {
        [(0.0, cap(self.alpha, self.budget))]
    }

    fn score(&self, x: &[f64; 1]) -> Score {
        let e = self.eval(x[0]);
        Score::of(e.0, e.5)
    }
}

/// Minimum energy for one user splitting its task alone on the channel.
#[allow(clippy::too_many_arguments)]
pub fn oracle_partial_single_user(
    bits: f64,
    window: f64,
    deadline: f64,
    alpha: f64,
    budget: f64,
    chip_constant: f64,
    cloud_time_per_bit: f64,
    symbol_interval: f64,
    grid: &GridSpec,
) -> f64 {
    let p = SinglePartial {
        bits,
        window,
        deadline,
        alpha,
        budget,
        chip: chip_constant,
        dc: cloud_time_per_bit,
        ts: symbol_interval,
    };
    search(&p, grid).map_or(f64::INFINITY, |(_, e)| e)
}

fn feasible(
    scheme: Scheme,
    mode: Mode,
    ts: f64,
    swapped: bool,
    alloc: Allocation,
    energy: [f64; 2],
    local: [f64; 2],
    trace: &str,
) -> Solution {
    Solution {
        scheme,
        mode,
        feasible: true,
        allocation: Some(alloc),
        energy,
        local_energy: local,
        symbol_interval: ts,
        users_swapped: swapped,
        case_trace: if swapped {
            format!("{trace}; users relabelled")
        } else {
            trace.into()
        },
    }
}

fn infeasible(scheme: Scheme, mode: Mode, ts: f64, swapped: bool) -> Solution {
    let mut s = Solution::infeasible(scheme, mode, ts, "oracle: no feasible grid point");
    s.users_swapped = swapped;
    s
}

fn split(a: &Allocation, local: [f64; 2]) -> [f64; 2] {
    [
        a.tau[0] * a.p11 + a.tau[1] * a.p12 + local[0],
        a.tau[0] * a.p21 + a.tau[2] * a.p23 + local[1],
    ]
}

/// Brute-force optimum of `scheme` in `mode`. Mixed mode treats user 1 as
/// the binary user; see [`oracle_mixed`] for the general case.
pub fn oracle_solve(scenario: &Scenario, scheme: Scheme, mode: Mode, grid: &GridSpec) -> Result<Solution> {
    match mode {
        Mode::Binary => oracle_binary(scenario, scheme, grid),
        Mode::Partial => oracle_partial(scenario, scheme, grid),
        Mode::Mixed => oracle_mixed(scenario, scheme, 0, grid),
    }
}

fn oracle_binary(scenario: &Scenario, scheme: Scheme, grid: &GridSpec) -> Result<Solution> {
    let (sc, swapped) = scenario.ordered_for(Mode::Binary)?;
    let b = Binary::from(&sc)?;
    let ts = sc.symbol_interval();
    let found = match scheme {
        Scheme::FullMa => {
            let p = FullMaBinary(&b);
            search(&p, grid).map(|(x, _)| p.eval(x[0]).1)
        }
        Scheme::Tdma => {
            let p = TdmaBinary(&b);
            search(&p, grid).map(|(x, _)| p.eval(x[0]).1)
        }
        Scheme::Sdwts | Scheme::Id => {
            let decs: &[Decoding] = if scheme == Scheme::Id {
                &[Decoding::Independent]
            } else {
                &[Decoding::User1Clean, Decoding::User2Clean]
            };
            let mut best: Option<(f64, Allocation)> = None;
            for &dec in decs {
                let p = ThreeSlot { b: &b, dec };
                if let Some((x, e)) = search(&p, grid) {
                    if best.as_ref().map_or(true, |(v, _)| e < *v) {
                        best = Some((e, p.allocation(x[0], x[1], x[2])));
                    }
                }
            }
            best.map(|(_, a)| a)
        }
    };
    Ok(match found {
        Some(a) => feasible(scheme, Mode::Binary, ts, swapped != scenario.swapped(), a, split(&a, [0.0; 2]), [0.0; 2], "oracle"),
        None => infeasible(scheme, Mode::Binary, ts, swapped != scenario.swapped()),
    })
}

fn oracle_partial(scenario: &Scenario, scheme: Scheme, grid: &GridSpec) -> Result<Solution> {
    let (sc, swapped) = scenario.ordered_for(Mode::Partial)?;
    let p = Partial::from(&sc)?;
    let ts = sc.symbol_interval();
    let found = match scheme {
        Scheme::FullMa => {
            let q = FullMaPartial { p: &p, whole: Whole::Neither };
            search(&q, grid).map(|(x, _)| {
                let e = q.eval(x[0], x[1], x[2]);
                (e.alloc, e.local)
            })
        }
        Scheme::Tdma => {
            let q = TdmaPartial { p: &p, whole: Whole::Neither };
            search(&q, grid).map(|(x, _)| {
                let e = q.eval(x[0], x[1], x[2]);
                (e.alloc, e.local)
            })
        }
        _ => return Err(OracleError::Unsupported(scheme, Mode::Partial)),
    };
    Ok(match found {
        Some((a, l)) => feasible(scheme, Mode::Partial, ts, swapped != scenario.swapped(), a, split(&a, l), l, "oracle"),
        None => infeasible(scheme, Mode::Partial, ts, swapped != scenario.swapped()),
    })
}

/// Brute-force optimum of mixed offloading where `binary_user` (0 or 1, in
/// scenario order) offloads all or nothing.
pub fn oracle_mixed(scenario: &Scenario, scheme: Scheme, binary_user: usize, grid: &GridSpec) -> Result<Solution> {
    let (sc, swapped) = scenario.ordered_for(Mode::Mixed)?;
    let b = if swapped { 1 - binary_user } else { binary_user };
    let p = Partial::from(&sc)?;
    let ts = sc.symbol_interval();
    let offload: Option<(Allocation, [f64; 2])> = match scheme {
        Scheme::FullMa => {
            let q = FullMaMixed(FullMaPartial { p: &p, whole: Whole::User(b) });
            search(&q, grid).and_then(|(x, _)| q.eval(&x)).map(|e| (e.alloc, e.local))
        }
        Scheme::Tdma => {
            let q = TdmaMixed(TdmaPartial { p: &p, whole: Whole::User(b) });
            search(&q, grid).and_then(|(x, _)| q.eval(&x)).map(|e| (e.alloc, e.local))
        }
        _ => return Err(OracleError::Unsupported(scheme, Mode::Mixed)),
    };

    let task = sc.user(b);
    let local_b = task
        .local_energy
        .value()
        .or_else(|| task.local_model.map(|m| m.chip_constant * task.bits.powi(3) / task.latency.powi(2)));
    let o = 1 - b;
    let local = local_b.map(|eb| {
        let q = SinglePartial {
            bits: p.bits[o],
            window: p.window[o],
            deadline: p.deadline[o],
            alpha: p.alpha[o],
            budget: p.budget[o],
            chip: p.chip[o],
            dc: p.dc,
            ts,
        };
        let r = search(&q, grid).map_or(0.0, |(x, _)| x[0]);
        let (_, _, loc, g, dur, _) = q.eval(r);
        let pw = pow2m1(r) / p.alpha[o];
        let mut a = Allocation::default();
        if dur > 0.0 {
            if o == 0 {
                a.tau[0] = dur;
                (a.r11, a.p11, a.gamma11) = (r, pw, g);
            } else {
                a.tau[2] = dur;
                (a.r23, a.p23, a.gamma23) = (r, pw, g);
            }
        }
        let mut l = [0.0; 2];
        l[b] = eb;
        l[o] = loc;
        (a, l)
    });
    let total = |x: &(Allocation, [f64; 2])| {
        let e = split(&x.0, x.1);
        e[0] + e[1]
    };
    let pick = match (offload, local) {
        (Some(a), Some(l)) => Some(if total(&a) <= total(&l) { a } else { l }),
        (a, l) => a.or(l),
    };
    Ok(match pick {
        Some((a, l)) => feasible(scheme, Mode::Mixed, ts, swapped != scenario.swapped(), a, split(&a, l), l, "oracle"),
        None => infeasible(scheme, Mode::Mixed, ts, swapped != scenario.swapped()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_matches_corner_when_user1_is_weaker() {
        // alpha1 < alpha2: user 1 takes its smallest admissible power.
        let (p1, p2) = slot_lp(1.0, 1.0, [1.0, 2.0], [100.0, 100.0]).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);
        assert!((p2 - 1.0).abs() < 1e-12, "{p2}");
    }

    #[test]
    fn lp_reports_shortfall() {
        assert!(slot_lp(3.0, 3.0, [1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(GridSpec::new(Some(2), 3, 0.1).is_err());
        assert!(GridSpec::new(None, 3, 1.5).is_err());
        assert_eq!(GridSpec::default().resolution(3), 120);
        assert_eq!(GridSpec::default().resolution(1), 400);
    }

    #[test]
    fn single_user_instance() {
        let e = oracle_single_user(1e6, 1e6, 1.0, 2.0, &GridSpec::default()).unwrap();
        assert!((e - 1e6).abs() <= 1e-6 * 1e6);
        assert!(oracle_single_user(1e6, 1e6, 1.0, 0.5, &GridSpec::default()).is_none());
    }
}
