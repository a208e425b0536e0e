//! Fading Monte Carlo: users at fixed distances, gains drawn per trial.

use macoff_core::{Mode, Scheme, Solution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, trial_rng};
use crate::config::{Config, MonteCarloConfig};
use crate::error::{Result, SimError};
use crate::sweep::{solve_one, supported};
use crate::table::Row;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    /// Config supplying everything but the gains.
    pub base: Config,
    pub trials: usize,
    pub seed: u64,
    pub path_loss_exponent: f64,
    pub distance1: Vec<f64>,
    pub distance2: f64,
    pub schemes: Vec<Scheme>,
    pub modes: Vec<Mode>,
    pub feasibility_filter: bool,
    pub force_equal_gains: bool,
    /// Keep every trial's solutions in the report.
    pub keep_trials: bool,
}

impl MonteCarloSpec {
    pub fn from_config(base: &Config) -> Result<Self> {
        let mc: &MonteCarloConfig = base
            .montecarlo
            .as_ref()
            .ok_or_else(|| SimError::Config("no [montecarlo] table".into()))?;
        let mut b = base.clone();
        b.sweeps.clear();
        b.montecarlo = None;
        Ok(Self {
            base: b,
            trials: mc.trials,
            seed: mc.seed,
            path_loss_exponent: mc.path_loss_exponent,
            distance1: mc.distance1.clone(),
            distance2: mc.distance2,
            schemes: mc.schemes.clone(),
            modes: mc.modes.clone(),
            feasibility_filter: mc.feasibility_filter,
            force_equal_gains: mc.force_equal_gains,
            keep_trials: false,
        })
    }

    /// Gains of trial `trial` at user-1 distance `d1`. The underlying
    /// fading draws do not depend on `d1`.
    pub fn gains(&self, d1: f64, trial: usize) -> (f64, f64) {
        let mut rng = trial_rng(self.seed, trial as u64);
        let h1 = sample_channel(d1, self.path_loss_exponent, &mut rng);
        let h2 = sample_channel(self.distance2, self.path_loss_exponent, &mut rng);
        if self.force_equal_gains {
            (h1, h1)
        } else {
            (h1, h2)
        }
    }

    pub fn scenario_id(&self, d1: f64, trial: usize) -> String {
        let eq = if self.force_equal_gains { ":equal" } else { "" };
        format!("mc:seed={}:d1={d1}:trial={trial}{eq}", self.seed)
    }

    pub fn config_for(&self, d1: f64, trial: usize) -> Config {
        let (h1, h2) = self.gains(d1, trial);
        let mut c = self.base.clone();
        c.user1.gain = h1;
        c.user2.gain = h2;
        c
    }

    fn pairs(&self) -> Vec<(Mode, Scheme)> {
        self.modes
            .iter()
            .flat_map(|&m| supported(&self.schemes, m).into_iter().map(move |s| (m, s)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub distance1: f64,
    pub index: usize,
    pub gains: (f64, f64),
    /// One per `(mode, scheme)` pair, modes outermost.
    pub solutions: Vec<Solution>,
}

/// Averages for one `(distance, mode, scheme)` cell. Means are over the
/// trials that pass the filter and are `None` when no trial does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub distance1: f64,
    pub mode: String,
    pub scheme: String,
    pub trials: usize,
    /// Trials in which this scheme was feasible.
    pub feasible: usize,
    /// Trials averaged over.
    pub used: usize,
    /// Trials dropped by the joint-feasibility filter.
    pub filtered: usize,
    pub mean_energy_norm: Option<f64>,
    pub mean_energy_joules: Option<f64>,
    pub mean_gamma1: Option<f64>,
    pub mean_gamma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub aggregates: Vec<Aggregate>,
    /// Filled only with `keep_trials`.
    pub trials: Vec<Trial>,
}

impl MonteCarloReport {
    pub fn aggregate(&self, d1: f64, mode: Mode, scheme: Scheme) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.distance1 == d1 && a.mode == mode.name() && a.scheme == scheme.name())
    }
}

fn run_trial(spec: &MonteCarloSpec, pairs: &[(Mode, Scheme)], d1: f64, k: usize) -> Result<Trial> {
    let c = spec.config_for(d1, k);
    let s = c.scenario()?;
    let solutions = pairs
        .iter()
        .map(|&(m, sch)| solve_one(&s, sch, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trial {
        distance1: d1,
        index: k,
        gains: (c.user1.gain, c.user2.gain),
        solutions,
    })
}

/// Runs every trial at every distance. Trials run in parallel; results are
/// merged in trial order, so the output depends only on the spec.
pub fn run_montecarlo(spec: &MonteCarloSpec) -> Result<MonteCarloReport> {
    if spec.trials == 0 {
        return Err(SimError::Config("trials must be >= 1".into()));
    }
    let pairs = spec.pairs();
    let mut aggregates = Vec::new();
    let mut kept = Vec::new();
    for &d1 in &spec.distance1 {
        let trials: Vec<Trial> = (0..spec.trials)
            .into_par_iter()
            .map(|k| run_trial(spec, &pairs, d1, k))
            .collect::<Result<_>>()?;
        for &mode in &spec.modes {
            let cols: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].0 == mode).collect();
            let passes = |t: &Trial| !spec.feasibility_filter || cols.iter().all(|&i| t.solutions[i].feasible);
            for &i in &cols {
                let mut agg = Aggregate {
                    distance1: d1,
                    mode: mode.name().into(),
                    scheme: pairs[i].1.name().into(),
                    trials: spec.trials,
                    feasible: 0,
                    used: 0,
                    filtered: 0,
                    mean_energy_norm: None,
                    mean_energy_joules: None,
                    mean_gamma1: None,
                    mean_gamma2: None,
                };
                let (mut e, mut j, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0);
                for t in &trials {
                    let s = &t.solutions[i];
                    if s.feasible {
                        agg.feasible += 1;
                    }
                    if !passes(t) {
                        agg.filtered += 1;
                        continue;
                    }
                    if !s.feasible {
                        continue;
                    }
                    agg.used += 1;
                    e += s.total_energy();
                    j += s.total_energy_joules();
                    // Report fractions in the original user labels.
                    let (f1, f2) = offloaded_fractions(s);
                    g1 += f1;
                    g2 += f2;
                }
                if agg.used > 0 {
                    let n = agg.used as f64;
                    agg.mean_energy_norm = Some(e / n);
                    agg.mean_energy_joules = Some(j / n);
                    agg.mean_gamma1 = Some(g1 / n);
                    agg.mean_gamma2 = Some(g2 / n);
                }
                aggregates.push(agg);
            }
        }
        if spec.keep_trials {
            kept.extend(trials);
        }
    }
    Ok(MonteCarloReport {
        aggregates,
        trials: kept,
    })
}

/// Offloaded fractions `(user 1, user 2)` in the original labels. Binary
/// solutions count a whole offloaded task as one.
pub fn offloaded_fractions(s: &Solution) -> (f64, f64) {
    let Some(a) = s.allocation.filter(|_| s.feasible) else {
        return (0.0, 0.0);
    };
    let (f1, f2) = match s.mode {
        Mode::Binary => (
            if a.tau[0] + a.tau[1] > 0.0 && a.r11 + a.r12 > 0.0 { 1.0 } else { 0.0 },
            if a.tau[0] * a.r21 + a.tau[2] * a.r23 > 0.0 { 1.0 } else { 0.0 },
        ),
        _ => (a.gamma11, a.gamma21 + a.gamma23),
    };
    if s.users_swapped {
        (f2, f1)
    } else {
        (f1, f2)
    }
}

pub fn trial_rows(spec: &MonteCarloSpec, trials: &[Trial]) -> Vec<Row> {
    trials
        .iter()
        .flat_map(|t| {
            let id = spec.scenario_id(t.distance1, t.index);
            t.solutions.iter().map(move |s| Row::new(id.clone(), Some(t.distance1), s))
        })
        .collect()
}

pub fn write_aggregates_csv<W: std::io::Write>(aggs: &[Aggregate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for a in aggs {
        w.serialize(a).map_err(|e| SimError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}
