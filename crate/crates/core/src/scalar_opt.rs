//! Bounded one-dimensional minimisation and a cyclic coordinate-descent
//! driver built on it.

use std::cell::RefCell;

use crate::error::{Error, Result};

/// What the caller knows about the objective on the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Convex and smooth: bisection on a finite-difference derivative.
    Convex,
    /// Unimodal: golden-section search.
    QuasiConvex,
}

/// A scalar objective on `[lower, upper]`. The objective may return
/// `+inf` to mark infeasible points.
pub struct BracketedProblem<F> {
    pub objective: F,
    pub lower: f64,
    pub upper: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub argmin: f64,
    pub value: f64,
}

/// Default argument tolerance for an interval.
pub fn default_x_tol(lower: f64, upper: f64) -> f64 {
    1e-12 * (upper - lower + 1.0)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_SCALAR_ITERS: usize = 400;

/// Minimises `p.objective` on its interval. Both endpoints are always
/// candidates; among equal values the smallest argument wins.
pub fn minimize_scalar<F: Fn(f64) -> f64>(p: &BracketedProblem<F>, x_tol: f64) -> Result<ScalarMinimum> {
    let (lo, hi) = (p.lower, p.upper);
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EmptyInterval { lower: lo, upper: hi });
    }
    let f = &p.objective;
    let x_tol = x_tol.max(0.0);
    let mut cands = vec![ScalarMinimum { argmin: lo, value: f(lo) }];
    if hi > lo {
        cands.push(ScalarMinimum { argmin: hi, value: f(hi) });
        if hi - lo > x_tol {
            cands.push(match p.shape {
                Shape::QuasiConvex => golden(f, lo, hi, x_tol),
                Shape::Convex => derivative_bisection(f, lo, hi, x_tol),
            });
        }
    }
    Ok(best_of(&cands))
}

fn best_of(cands: &[ScalarMinimum]) -> ScalarMinimum {
    let mut best = cands[0];
    for c in &cands[1..] {
        if c.value < best.value || (c.value == best.value && c.argmin < best.argmin) {
            best = *c;
        }
    }
    best
}

fn golden<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> ScalarMinimum {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = best_of(&[
        ScalarMinimum { argmin: c, value: fc },
        ScalarMinimum { argmin: d, value: fd },
    ]);
    for _ in 0..MAX_SCALAR_ITERS {
        if b - a <= x_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            best = best_of(&[best, ScalarMinimum { argmin: c, value: fc }]);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            best = best_of(&[best, ScalarMinimum { argmin: d, value: fd }]);
        }
    }
    best
}

fn derivative_bisection<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> ScalarMinimum {
    let slope = |x: f64| {
        let h = 1e-7 * x.abs().max(1.0);
        let (a, b) = ((x - h).max(lo), (x + h).min(hi));
        (f(b) - f(a)) / (b - a)
    };
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_SCALAR_ITERS {
        if b - a <= x_tol {
            break;
        }
        let m = 0.5 * (a + b);
        let s = slope(m);
        if s > 0.0 {
            b = m;
        } else if s < 0.0 {
            a = m;
        } else {
            // Flat, or infinite on both sides of m.
            if s.is_nan() {
                return golden(f, a, b, x_tol);
            }
            a = m;
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    ScalarMinimum { argmin: m, value: f(m) }
}

/// Largest interval inside `[lo, hi]` around `x0` on which `feasible`
/// holds, assuming the feasible set is an interval containing `x0`.
/// The ends are located by bisection and always lie on the feasible side.
pub fn feasible_interval<P: Fn(f64) -> bool>(feasible: P, lo: f64, hi: f64, x0: f64) -> (f64, f64) {
    let edge = |inside: f64, outside: f64| {
        if feasible(outside) {
            return outside;
        }
        let (mut a, mut b) = (inside, outside);
        let tol = 1e-14 * (hi - lo).abs().max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            if (b - a).abs() <= tol {
                break;
            }
            let m = 0.5 * (a + b);
            if feasible(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    (edge(x0, lo), edge(x0, hi))
}

/// Interval of coordinate `i` inside `[lo, hi]` on which `objective` stays
/// finite with the other coordinates fixed at `x`; `None` if `x` itself is
/// infeasible.
pub fn finite_interval<F: Fn(&[f64]) -> f64>(objective: F, i: usize, x: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let y = RefCell::new(x.to_vec());
    let feasible = |t: f64| {
        let mut y = y.borrow_mut();
        y[i] = t;
        objective(&y).is_finite()
    };
    let x0 = x[i].clamp(lo, hi);
    if !feasible(x0) {
        return None;
    }
    Some(feasible_interval(feasible, lo, hi, x0))
}

/// A problem for [`coordinate_descent`].
pub trait CoordinateProblem {
    fn dim(&self) -> usize;

    /// Objective, `+inf` outside the feasible set.
    fn objective(&self, x: &[f64]) -> f64;

    /// Feasible interval of coordinate `i` with the others fixed at `x`,
    /// or `None` if there is none.
    fn bounds(&self, i: usize, x: &[f64]) -> Option<(f64, f64)>;

    fn shape(&self, _i: usize) -> Shape {
        Shape::QuasiConvex
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
    /// After each sweep, probe further along the sweep's net displacement
    /// (doubling steps, kept only while the objective improves).
    pub extrapolate: bool,
    /// In [`multi_start`], sweeps every init gets before only the best
    /// `survivors` continue. Zero runs every init to the end.
    pub warmup_sweeps: usize,
    pub survivors: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            max_iters: 500,
            extrapolate: false,
            warmup_sweeps: 0,
            survivors: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    /// Number of full sweeps performed.
    pub iterations: usize,
    pub final_objective: f64,
    pub minimizer: Vec<f64>,
    pub converged: bool,
    /// Objective after each sweep.
    pub objective_trace: Vec<f64>,
}

/// Cyclic coordinate descent from a feasible `init`.
///
/// Each step minimises exactly along one coordinate over its feasible
/// interval and only moves if that improves the objective, so the trace
/// never increases. Stops once a sweep's relative decrease drops below
/// `rel_tol`, or after `max_iters` sweeps.
pub fn coordinate_descent<P: CoordinateProblem + ?Sized>(
    problem: &P,
    init: &[f64],
    opts: &DescentOptions,
) -> Result<DescentReport> {
    let n = problem.dim();
    if init.len() != n {
        return Err(Error::Infeasible(format!("init has {} coordinates, expected {n}", init.len())));
    }
    let mut x = init.to_vec();
    let mut fx = problem.objective(&x);
    // Decreases are measured against the larger of the sweep's start and
    // the initial objective, so a minimum at zero still terminates.
    let scale = fx.abs();
    if !fx.is_finite() {
        return Err(Error::Infeasible("initial point is infeasible".into()));
    }
    for i in 0..n {
        if problem.bounds(i, &x).is_none() {
            return Err(Error::Infeasible(format!("empty interval for coordinate {i} at init")));
        }
    }

    let scratch = RefCell::new(x.clone());
    let mut trace = Vec::new();
    let mut converged = false;
    for sweep in 1..=opts.max_iters {
        let start = fx;
        let origin = x.clone();
        for i in 0..n {
            let Some((lo, hi)) = problem.bounds(i, &x) else {
                continue;
            };
            let (lo, hi) = (lo.min(x[i]), hi.max(x[i]));
            scratch.borrow_mut().copy_from_slice(&x);
            let line = BracketedProblem {
                objective: |t: f64| {
                    let mut y = scratch.borrow_mut();
                    y[i] = t;
                    problem.objective(&y)
                },
                lower: lo,
                upper: hi,
                shape: problem.shape(i),
            };
            let m = minimize_scalar(&line, default_x_tol(lo, hi))?;
            if m.value < fx {
                x[i] = m.argmin;
                fx = m.value;
            }
        }
        if opts.extrapolate && fx < start {
            let d: Vec<f64> = x.iter().zip(&origin).map(|(a, b)| a - b).collect();
            let mut step = 1.0;
            while step <= 64.0 {
                let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                let fy = problem.objective(&y);
                if !(fy < fx) {
                    break;
                }
                x = y;
                fx = fy;
                step *= 2.0;
            }
        }
        trace.push(fx);
        if fx > start {
            return Err(Error::NonDescent { sweep, trace });
        }
        if start - fx <= opts.rel_tol * start.abs().max(scale) {
            converged = true;
            break;
        }
    }
    Ok(DescentReport {
        iterations: trace.len(),
        final_objective: fx,
        minimizer: x,
        converged,
        objective_trace: trace,
    })
}

/// Runs [`coordinate_descent`] from every feasible init and keeps the best
/// result; earlier inits win ties. Fails only if no init is usable.
pub fn multi_start<P: CoordinateProblem + ?Sized>(
    problem: &P,
    inits: &[Vec<f64>],
    opts: &DescentOptions,
) -> Result<DescentReport> {
    let prune = opts.warmup_sweeps > 0 && opts.warmup_sweeps < opts.max_iters && inits.len() > opts.survivors.max(1);
    let first = if prune {
        DescentOptions {
            max_iters: opts.warmup_sweeps,
            ..*opts
        }
    } else {
        *opts
    };
    let mut runs = Vec::new();
    let mut last_err = Error::Infeasible("no initial point".into());
    for init in inits {
        match coordinate_descent(problem, init, &first) {
            Ok(r) => runs.push(r),
            Err(e @ Error::NonDescent { .. }) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    if prune {
        // Stable sort keeps earlier inits ahead on ties.
        runs.sort_by(|a, b| a.final_objective.total_cmp(&b.final_objective));
        runs.truncate(opts.survivors.max(1));
        let rest = DescentOptions {
            max_iters: opts.max_iters - opts.warmup_sweeps,
            ..*opts
        };
        for r in runs.iter_mut().filter(|r| !r.converged) {
            let more = coordinate_descent(problem, &r.minimizer, &rest)?;
            r.iterations += more.iterations;
            r.objective_trace.extend(more.objective_trace);
            r.final_objective = more.final_objective;
            r.minimizer = more.minimizer;
            r.converged = more.converged;
        }
    }
    let mut best: Option<DescentReport> = None;
    for r in runs {
        if best.as_ref().map_or(true, |b| r.final_objective < b.final_objective) {
            best = Some(r);
        }
    }
    best.ok_or(last_err)
}

/// Closure-backed [`CoordinateProblem`].
pub struct FnProblem<F, B> {
    pub dim: usize,
    pub objective: F,
    pub bounds: B,
    pub shape: Shape,
}

impl<F, B> CoordinateProblem for FnProblem<F, B>
where
    F: Fn(&[f64]) -> f64,
    B: Fn(usize, &[f64]) -> Option<(f64, f64)>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    fn bounds(&self, i: usize, x: &[f64]) -> Option<(f64, f64)> {
        (self.bounds)(i, x)
    }

    fn shape(&self, _i: usize) -> Shape {
        self.shape
    }
}
