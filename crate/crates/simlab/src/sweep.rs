//! One-parameter sweeps over a base config.

use std::collections::BTreeMap;

use macoff_core::{Error as ModelError, Mode, Scenario, Scheme, Solution};
use rayon::prelude::*;

use crate::config::{Config, Param, SweepConfig};
use crate::error::{Result, SimError};
use crate::table::Row;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    /// Config the sweep starts from; its own sweep tables are ignored.
    pub base: Config,
    pub parameter: Param,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub modes: Vec<Mode>,
    pub overrides: BTreeMap<Param, f64>,
    pub path_loss_exponent: f64,
}

/// Solutions at one sweep point, in `(mode, scheme)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub scenario_id: String,
    pub value: f64,
    pub solutions: Vec<Solution>,
}

impl SweepSpec {
    pub fn from_config(base: &Config, index: usize) -> Result<Self> {
        let sw: &SweepConfig = base
            .sweeps
            .get(index)
            .ok_or_else(|| SimError::Config(format!("no sweep #{index}")))?;
        let values = match (&sw.values, &sw.range) {
            (Some(v), _) => v.clone(),
            (None, Some(r)) if r.steps == 1 => vec![r.start],
            (None, Some(r)) => (0..r.steps)
                .map(|i| r.start + (r.stop - r.start) * i as f64 / (r.steps - 1) as f64)
                .collect(),
            (None, None) => unreachable!("checked on load"),
        };
        let mut b = base.clone();
        b.sweeps.clear();
        b.montecarlo = None;
        Ok(Self {
            name: sw.name.clone().unwrap_or_else(|| format!("{}-{}", base.name(), sw.parameter)),
            base: b,
            parameter: sw.parameter,
            values,
            schemes: sw.schemes.clone(),
            modes: sw.modes.clone(),
            overrides: sw.overrides.clone(),
            path_loss_exponent: sw.path_loss_exponent,
        })
    }

    /// Every sweep of a config.
    pub fn all(base: &Config) -> Result<Vec<Self>> {
        (0..base.sweeps.len()).map(|i| Self::from_config(base, i)).collect()
    }

    pub fn scenario_id(&self, index: usize) -> String {
        format!("{}#{index}", self.name)
    }

    /// The config at swept value `value`.
    pub fn config_at(&self, value: f64) -> Config {
        let mut c = self.base.clone();
        for (&p, &v) in &self.overrides {
            c.set(p, v, self.path_loss_exponent);
        }
        c.set(self.parameter, value, self.path_loss_exponent);
        c
    }

    pub fn scenario_at(&self, value: f64) -> Result<Scenario> {
        self.config_at(value).scenario()
    }
}

/// Runs `scheme` in `mode`. A window that cannot hold the upload at all is
/// reported as an infeasible verdict rather than an error.
pub fn solve_one(s: &Scenario, scheme: Scheme, mode: Mode) -> Result<Solution> {
    match macoff_core::solve(s, scheme, mode) {
        Ok(sol) => Ok(sol),
        Err(e @ ModelError::InfeasibleLatency { .. }) => {
            Ok(Solution::infeasible(scheme, mode, s.symbol_interval(), e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Schemes a mode supports, in the order given.
pub fn supported(schemes: &[Scheme], mode: Mode) -> Vec<Scheme> {
    schemes
        .iter()
        .copied()
        .filter(|s| mode == Mode::Binary || matches!(s, Scheme::FullMa | Scheme::Tdma))
        .collect()
}

/// Solves every point; points run in parallel and come back in order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    spec.values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = spec.scenario_at(v)?;
            let mut solutions = Vec::new();
            for &mode in &spec.modes {
                for scheme in supported(&spec.schemes, mode) {
                    solutions.push(solve_one(&s, scheme, mode)?);
                }
            }
            Ok(SweepPoint {
                scenario_id: spec.scenario_id(i),
                value: v,
                solutions,
            })
        })
        .collect()
}

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<Row> {
    points
        .iter()
        .flat_map(|p| p.solutions.iter().map(|s| Row::new(p.scenario_id.clone(), Some(p.value), s)))
        .collect()
}

/// Smallest swept value at which `scheme` in `mode` is feasible.
pub fn onset(points: &[SweepPoint], scheme: Scheme, mode: Mode) -> Option<f64> {
    points
        .iter()
        .find(|p| p.solutions.iter().any(|s| s.scheme == scheme && s.mode == mode && s.feasible))
        .map(|p| p.value)
}

/// `(value, solution)` pairs for one scheme and mode, in sweep order.
pub fn curve(points: &[SweepPoint], scheme: Scheme, mode: Mode) -> Vec<(f64, &Solution)> {
    points
        .iter()
        .filter_map(|p| {
            p.solutions
                .iter()
                .find(|s| s.scheme == scheme && s.mode == mode)
                .map(|s| (p.value, s))
        })
        .collect()
}
