//! Trajectory CSV and summary JSON.

use std::fs;
use std::io;
use std::path::Path;

use dampwave::{EnergyBreakdown, GParams, HypothesisReport, Outcome, Sample, TrajectoryRecord};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FORMAT_VERSION: u32 = 1;

/// Column order of the trajectory CSV. `pairing` (`(u, u_t)_rho`) trails the
/// rest so the discriminant check can be replayed from disk.
pub const COLUMNS: [&str; 17] = [
    "t",
    "dt",
    "E_total",
    "E_kin",
    "E_grad",
    "E_mass",
    "E_pot",
    "I",
    "norm_rho_sq",
    "vnorm_rho_sq",
    "u_inf",
    "diss_accum",
    "l2rho_accum",
    "G",
    "Gp",
    "Gpp",
    "pairing",
];

fn row(s: &Sample<f64>) -> [f64; 17] {
    let e = &s.energy;
    [
        s.t,
        s.dt,
        e.total,
        e.kinetic,
        e.gradient,
        e.mass,
        e.potential,
        s.nehari,
        s.norm_rho_sq,
        s.vnorm_rho_sq,
        s.u_inf,
        s.diss_accum,
        s.l2rho_accum,
        s.g,
        s.g_prime,
        s.g_second,
        s.pairing,
    ]
}

fn from_row(x: &[f64; 17]) -> Sample<f64> {
    Sample {
        t: x[0],
        dt: x[1],
        energy: EnergyBreakdown {
            total: x[2],
            kinetic: x[3],
            gradient: x[4],
            mass: x[5],
            potential: x[6],
        },
        nehari: x[7],
        norm_rho_sq: x[8],
        vnorm_rho_sq: x[9],
        u_inf: x[10],
        diss_accum: x[11],
        l2rho_accum: x[12],
        g: x[13],
        g_prime: x[14],
        g_second: x[15],
        pairing: x[16],
    }
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

pub fn write_trajectory(path: &Path, samples: &[Sample<f64>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(COLUMNS).map_err(csv_error)?;
    for s in samples {
        w.write_record(row(s).iter().map(|x| format!("{x:.16e}")))
            .map_err(csv_error)?;
    }
    w.flush()
}

pub fn read_trajectory(path: &Path) -> io::Result<Vec<Sample<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?;
    if !header.iter().eq(COLUMNS) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected trajectory header in {}", path.display()),
        ));
    }
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        let mut x = [0.0; 17];
        for (slot, field) in x.iter_mut().zip(record.iter()) {
            *slot = field.trim().parse().map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("bad value {field:?}: {e}"),
                )
            })?;
        }
        samples.push(from_row(&x));
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub u0_norm_sq: f64,
    pub pairing0: f64,
    /// Constants used for the `G` columns.
    pub gparams: Option<GParams<f64>>,
    /// True when the hypotheses failed and placeholder constants filled `G`.
    pub gparams_placeholder: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub samples: usize,
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub dampwave: String,
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            dampwave: env!("CARGO_PKG_VERSION").to_string(),
            format: FORMAT_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub outcome: Outcome<f64>,
    pub report: HypothesisReport<f64>,
    pub bound: Option<f64>,
    pub alpha: f64,
    pub run: RunInfo,
    pub config: RunConfig,
    pub versions: Versions,
}

impl Summary {
    /// Rebuilds the trajectory record from the summary and stored samples.
    pub fn record(&self, samples: Vec<Sample<f64>>) -> TrajectoryRecord<f64> {
        TrajectoryRecord {
            samples,
            outcome: self.outcome.clone(),
            gparams: self.run.gparams,
            u0_norm_sq: self.run.u0_norm_sq,
            pairing0: self.run.pairing0,
            accepted_steps: self.run.accepted_steps,
            rejected_steps: self.run.rejected_steps,
        }
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<D> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
