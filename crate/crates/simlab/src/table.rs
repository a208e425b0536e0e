//! Flat result rows and their CSV and JSON forms.

use std::io::{Read, Write};

use macoff_core::{Allocation, Mode, Scheme, Solution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Marker appended to the trace when a solver relabelled the users.
pub const SWAP_NOTE: &str = "users relabelled";

/// One solver outcome. Energies are per user in the solver's user order;
/// infeasible rows leave the numeric columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scenario_id: String,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub mode: String,
    pub feasible: bool,
    pub energy_total_norm: Option<f64>,
    pub energy_total_joules: Option<f64>,
    pub energy_u1: Option<f64>,
    pub energy_u2: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau3: Option<f64>,
    #[serde(rename = "R11")]
    pub r11: Option<f64>,
    #[serde(rename = "R21")]
    pub r21: Option<f64>,
    #[serde(rename = "R12")]
    pub r12: Option<f64>,
    #[serde(rename = "R23")]
    pub r23: Option<f64>,
    #[serde(rename = "P11")]
    pub p11: Option<f64>,
    #[serde(rename = "P21")]
    pub p21: Option<f64>,
    #[serde(rename = "P12")]
    pub p12: Option<f64>,
    #[serde(rename = "P23")]
    pub p23: Option<f64>,
    pub gamma11: Option<f64>,
    pub gamma21: Option<f64>,
    pub gamma23: Option<f64>,
    pub case_trace: String,
}

/// Column order of the CSV header.
pub const HEADER: [&str; 24] = [
    "scenario_id",
    "sweep_value",
    "scheme",
    "mode",
    "feasible",
    "energy_total_norm",
    "energy_total_joules",
    "energy_u1",
    "energy_u2",
    "tau1",
    "tau2",
    "tau3",
    "R11",
    "R21",
    "R12",
    "R23",
    "P11",
    "P21",
    "P12",
    "P23",
    "gamma11",
    "gamma21",
    "gamma23",
    "case_trace",
];

impl Row {
    pub fn new(scenario_id: impl Into<String>, sweep_value: Option<f64>, s: &Solution) -> Self {
        let a = s.allocation.filter(|_| s.feasible);
        let get = |f: fn(&Allocation) -> f64| a.as_ref().map(f);
        let ok = |v: f64| s.feasible.then_some(v);
        Row {
            scenario_id: scenario_id.into(),
            sweep_value,
            scheme: s.scheme.name().into(),
            mode: s.mode.name().into(),
            feasible: s.feasible,
            energy_total_norm: ok(s.total_energy()),
            energy_total_joules: ok(s.total_energy_joules()),
            energy_u1: ok(s.energy[0]),
            energy_u2: ok(s.energy[1]),
            tau1: get(|a| a.tau[0]),
            tau2: get(|a| a.tau[1]),
            tau3: get(|a| a.tau[2]),
            r11: get(|a| a.r11),
            r21: get(|a| a.r21),
            r12: get(|a| a.r12),
            r23: get(|a| a.r23),
            p11: get(|a| a.p11),
            p21: get(|a| a.p21),
            p12: get(|a| a.p12),
            p23: get(|a| a.p23),
            gamma11: get(|a| a.gamma11),
            gamma21: get(|a| a.gamma21),
            gamma23: get(|a| a.gamma23),
            case_trace: s.case_trace.clone(),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Ok(self.scheme.parse()?)
    }

    pub fn mode(&self) -> Result<Mode> {
        Ok(self.mode.parse()?)
    }

    /// Rebuilds the solution. Local energies are not stored, so they are
    /// recovered as the part of each user's energy not spent transmitting.
    pub fn to_solution(&self, symbol_interval: f64) -> Result<Solution> {
        let (scheme, mode) = (self.scheme()?, self.mode()?);
        if !self.feasible {
            return Ok(Solution::infeasible(scheme, mode, symbol_interval, self.case_trace.clone()));
        }
        let need = |v: Option<f64>, col: &str| {
            v.ok_or_else(|| SimError::Csv(format!("{}: feasible row without `{col}`", self.scenario_id)))
        };
        let a = Allocation {
            tau: [need(self.tau1, "tau1")?, need(self.tau2, "tau2")?, need(self.tau3, "tau3")?],
            r11: need(self.r11, "R11")?,
            r21: need(self.r21, "R21")?,
            r12: need(self.r12, "R12")?,
            r23: need(self.r23, "R23")?,
            p11: need(self.p11, "P11")?,
            p21: need(self.p21, "P21")?,
            p12: need(self.p12, "P12")?,
            p23: need(self.p23, "P23")?,
            gamma11: need(self.gamma11, "gamma11")?,
            gamma21: need(self.gamma21, "gamma21")?,
            gamma23: need(self.gamma23, "gamma23")?,
        };
        let energy = [need(self.energy_u1, "energy_u1")?, need(self.energy_u2, "energy_u2")?];
        let local = [
            (energy[0] - a.transmit_energy(0)).max(0.0),
            (energy[1] - a.transmit_energy(1)).max(0.0),
        ];
        Ok(Solution {
            scheme,
            mode,
            feasible: true,
            allocation: Some(a),
            energy,
            local_energy: local,
            symbol_interval,
            users_swapped: self.case_trace.contains(SWAP_NOTE),
            case_trace: self.case_trace.clone(),
        })
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(HEADER).map_err(|e| SimError::Csv(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| SimError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| SimError::Csv(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(SimError::Csv(format!("unexpected header, expected {}", HEADER.join(","))));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| SimError::Csv(e.to_string())))
        .collect()
}

pub fn to_json(rows: &[Row]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn from_json(text: &str) -> Result<Vec<Row>> {
    serde_json::from_str(text).map_err(|e| SimError::Csv(e.to_string()))
}
