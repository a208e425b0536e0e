//! TOML experiment configs.
//!
//! A config holds the system constants, both users, and optionally any
//! number of `[[sweep]]` tables and one `[montecarlo]` table. Unknown keys
//! are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use macoff_core::{LocalComputeModel, LocalEnergy, Mode, RadioLink, Scenario, Scheme, TaskSpec};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SimError};

/// How power budgets and the noise variance are written in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerUnit {
    /// Values are in watts.
    #[default]
    Watts,
    /// Values are multiples of the symbol interval: `0.5` means `0.5 T_s`.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Seconds per channel use.
    #[serde(default = "default_symbol_interval")]
    pub symbol_interval: f64,
    /// Receiver noise variance, in `power_unit`.
    pub noise: f64,
    #[serde(default)]
    pub power_unit: PowerUnit,
    /// Cloud execution time per offloaded bit in partial and mixed modes.
    #[serde(default)]
    pub cloud_time_per_bit: f64,
}

fn default_symbol_interval() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub bits: f64,
    /// Deadline in seconds.
    pub latency: f64,
    /// Cloud execution time of the whole task in binary mode, seconds.
    #[serde(default)]
    pub exec_time: f64,
    #[serde(default)]
    pub downlink_time: f64,
    /// Squared channel magnitude.
    pub gain: f64,
    /// Transmit power budget, in `power_unit`.
    pub power_budget: f64,
    /// Energy of computing the whole task locally (binary decisions), in
    /// the normalized energy unit. Absent means local execution misses the
    /// deadline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_energy: Option<f64>,
    /// DVS chip constant `M`; required for partial and mixed modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_constant: Option<f64>,
}

/// Parameters a sweep can vary or override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    H1Sq,
    H2Sq,
    L1,
    L2,
    B1,
    B2,
    Pbar1,
    Pbar2,
    /// Distance of user 1 in metres; sets `h1_sq = d^-exponent`.
    Distance1,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::H1Sq,
        Param::H2Sq,
        Param::L1,
        Param::L2,
        Param::B1,
        Param::B2,
        Param::Pbar1,
        Param::Pbar2,
        Param::Distance1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::H1Sq => "h1_sq",
            Param::H2Sq => "h2_sq",
            Param::L1 => "L1",
            Param::L2 => "L2",
            Param::B1 => "B1",
            Param::B2 => "B2",
            Param::Pbar1 => "Pbar1",
            Param::Pbar2 => "Pbar2",
            Param::Distance1 => "distance1",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Param::ALL.iter().map(|p| p.name()).collect();
                SimError::Config(format!("unknown sweep parameter `{s}`, expected one of {}", names.join(", ")))
            })
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

pub(crate) mod names {
    //! Scheme and mode lists written with the lenient `FromStr` spellings.
    use super::*;

    pub fn schemes<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Scheme>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(de::Error::custom))
            .collect()
    }

    pub fn modes<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Mode>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(de::Error::custom))
            .collect()
    }
}

pub(crate) fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

pub(crate) fn binary_only() -> Vec<Mode> {
    vec![Mode::Binary]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    /// Number of points, both ends included.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub parameter: Param,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<RangeConfig>,
    #[serde(default = "all_schemes", deserialize_with = "names::schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "binary_only", deserialize_with = "names::modes")]
    pub modes: Vec<Mode>,
    /// Fixed parameter values applied before the swept one.
    #[serde(default)]
    pub overrides: BTreeMap<Param, f64>,
    /// Path-loss exponent used when sweeping `distance1`.
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
}

pub(crate) fn default_exponent() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    /// Distances of user 1 in metres, one aggregate row set per entry.
    pub distance1: Vec<f64>,
    pub distance2: f64,
    #[serde(default = "tdma_and_full_ma", deserialize_with = "names::schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "binary_only", deserialize_with = "names::modes")]
    pub modes: Vec<Mode>,
    /// Average only over trials where every scheme is feasible.
    #[serde(default = "yes")]
    pub feasibility_filter: bool,
    /// Give user 2 the same gain draw as user 1.
    #[serde(default)]
    pub force_equal_gains: bool,
}

fn tdma_and_full_ma() -> Vec<Scheme> {
    vec![Scheme::FullMa, Scheme::Tdma]
}

fn yes() -> bool {
    true
}

/// A whole experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemConfig,
    pub user1: UserConfig,
    pub user2: UserConfig,
    #[serde(default, rename = "sweep", skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloConfig>,
}

impl FromStr for Config {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| SimError::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimError::Config(format!("`{field}` must be finite and > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SimError::Config(format!("`{field}` must be finite and >= 0, got {v}")))
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        text.parse().map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level checks beyond what the scenario constructor does.
    fn check(&self) -> Result<()> {
        let s = &self.system;
        positive("system.symbol_interval", s.symbol_interval)?;
        positive("system.noise", s.noise)?;
        non_negative("system.cloud_time_per_bit", s.cloud_time_per_bit)?;
        for (tag, u) in [("user1", &self.user1), ("user2", &self.user2)] {
            positive(&format!("{tag}.bits"), u.bits)?;
            positive(&format!("{tag}.latency"), u.latency)?;
            non_negative(&format!("{tag}.exec_time"), u.exec_time)?;
            non_negative(&format!("{tag}.downlink_time"), u.downlink_time)?;
            positive(&format!("{tag}.gain"), u.gain)?;
            positive(&format!("{tag}.power_budget"), u.power_budget)?;
            if let Some(e) = u.local_energy {
                non_negative(&format!("{tag}.local_energy"), e)?;
            }
            if let Some(m) = u.chip_constant {
                non_negative(&format!("{tag}.chip_constant"), m)?;
            }
        }
        for (i, sw) in self.sweeps.iter().enumerate() {
            let tag = format!("sweep[{i}]");
            match (&sw.values, &sw.range) {
                (Some(v), None) if !v.is_empty() => {}
                (None, Some(r)) => {
                    if r.steps == 0 || !r.start.is_finite() || !r.stop.is_finite() {
                        return Err(SimError::Config(format!("{tag}.range needs finite ends and steps >= 1")));
                    }
                }
                _ => {
                    return Err(SimError::Config(format!(
                        "{tag} needs exactly one of a non-empty `values` list or a `range`"
                    )))
                }
            }
            if sw.schemes.is_empty() || sw.modes.is_empty() {
                return Err(SimError::Config(format!("{tag} needs at least one scheme and one mode")));
            }
            positive(&format!("{tag}.path_loss_exponent"), sw.path_loss_exponent)?;
        }
        if let Some(mc) = &self.montecarlo {
            if mc.trials == 0 {
                return Err(SimError::Config("`montecarlo.trials` must be >= 1".into()));
            }
            positive("montecarlo.path_loss_exponent", mc.path_loss_exponent)?;
            positive("montecarlo.distance2", mc.distance2)?;
            if mc.distance1.is_empty() {
                return Err(SimError::Config("`montecarlo.distance1` must not be empty".into()));
            }
            for &d in &mc.distance1 {
                positive("montecarlo.distance1", d)?;
            }
            if mc.schemes.is_empty() || mc.modes.is_empty() {
                return Err(SimError::Config("montecarlo needs at least one scheme and one mode".into()));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    /// Multiplier turning config power values into watts.
    pub fn power_scale(&self) -> f64 {
        match self.system.power_unit {
            PowerUnit::Watts => 1.0,
            PowerUnit::Normalized => self.system.symbol_interval,
        }
    }

    /// Non-fatal remarks about the config, such as users given out of
    /// deadline order.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.user1.latency > self.user2.latency {
            w.push(format!(
                "user latencies out of order (L1 = {} s > L2 = {} s): users are relabelled and solutions note it",
                self.user1.latency, self.user2.latency
            ));
        }
        w
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let k = self.power_scale();
        let dc = self.system.cloud_time_per_bit;
        let task = |u: &UserConfig| -> Result<TaskSpec> {
            let mut t = TaskSpec::new(u.bits, u.latency)
                .with_exec_time(u.exec_time)
                .with_downlink_time(u.downlink_time);
            if let Some(e) = u.local_energy {
                t = t.with_local_energy(LocalEnergy::Finite(e));
            }
            if let Some(m) = u.chip_constant {
                t = t.with_local_model(LocalComputeModel::new(m, dc)?);
            }
            Ok(t)
        };
        Ok(Scenario::new(
            task(&self.user1)?,
            RadioLink::new(self.user1.gain, self.user1.power_budget * k),
            task(&self.user2)?,
            RadioLink::new(self.user2.gain, self.user2.power_budget * k),
            self.system.noise * k,
            self.system.symbol_interval,
        )?)
    }

    /// Sets one parameter. Distances map to gains through `exponent`.
    pub fn set(&mut self, p: Param, value: f64, exponent: f64) {
        match p {
            Param::H1Sq => self.user1.gain = value,
            Param::H2Sq => self.user2.gain = value,
            Param::L1 => self.user1.latency = value,
            Param::L2 => self.user2.latency = value,
            Param::B1 => self.user1.bits = value,
            Param::B2 => self.user2.bits = value,
            Param::Pbar1 => self.user1.power_budget = value,
            Param::Pbar2 => self.user2.power_budget = value,
            Param::Distance1 => self.user1.gain = value.powf(-exponent),
        }
    }
}
