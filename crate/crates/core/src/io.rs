//! Field snapshots and output directories.
//!
//! A snapshot is one ASCII header line
//! `IFX1 d=<d> n=<n1[,n2]> L=<L> t=<t>\n` followed by little-endian `f64`
//! values, row-major, with vector components stored one plane after another.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::ModelParams;
use crate::continuation::SweepReport;
use crate::diagnostics::{
    energy_ledger_check, initial_bound_check, write_ledger, EnergyReport, InitialBoundCheck,
};
use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, ScalarField, VectorField};
use crate::solver::{initial_flux, RunStats, Scheme, Trajectory};

pub const MAGIC: &str = "IFX1";

/// A decoded snapshot; `planes` holds one value plane per component.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub grid: PeriodicGrid,
    pub t: f64,
    pub planes: Vec<Vec<f64>>,
}

impl FieldFile {
    pub fn into_scalar(self) -> Result<ScalarField> {
        match <[Vec<f64>; 1]>::try_from(self.planes) {
            Ok([values]) => ScalarField::from_values(self.grid, values),
            Err(p) => Err(Error::Format(format!(
                "expected one plane, found {}",
                p.len()
            ))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        VectorField::from_components(self.grid, self.planes)
    }
}

fn header(grid: &PeriodicGrid, t: f64) -> String {
    let counts: Vec<String> = grid.counts().iter().map(|n| n.to_string()).collect();
    format!(
        "{MAGIC} d={} n={} L={} t={}\n",
        grid.dim(),
        counts.join(","),
        grid.length(),
        t
    )
}

fn write_planes<W: Write>(
    out: &mut W,
    grid: &PeriodicGrid,
    t: f64,
    planes: &[&[f64]],
) -> Result<()> {
    out.write_all(header(grid, t).as_bytes())?;
    for plane in planes {
        for v in *plane {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_scalar<W: Write>(mut out: W, u: &ScalarField, t: f64) -> Result<()> {
    write_planes(&mut out, u.grid(), t, &[u.values()])
}

pub fn write_vector<W: Write>(mut out: W, q: &VectorField, t: f64) -> Result<()> {
    let planes: Vec<&[f64]> = (0..q.grid().dim()).map(|j| q.component(j)).collect();
    write_planes(&mut out, q.grid(), t, &planes)
}

fn parse_header(line: &str) -> Result<(PeriodicGrid, f64)> {
    let bad = |what: &str| Error::Format(format!("{what} in header `{}`", line.trim_end()));
    let mut parts = line.trim_end_matches('\n').split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(bad("missing magic"));
    }
    let mut field = |key: &str| -> Result<&str> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .ok_or_else(|| bad(&format!("missing `{key}`")))
    };
    let d: usize = field("d=")?.parse().map_err(|_| bad("bad d"))?;
    let n: Vec<usize> = field("n=")?
        .split(',')
        .map(|s| s.parse().map_err(|_| bad("bad n")))
        .collect::<Result<_>>()?;
    let length: f64 = field("L=")?.parse().map_err(|_| bad("bad L"))?;
    let t: f64 = field("t=")?.parse().map_err(|_| bad("bad t"))?;
    if n.len() != d {
        return Err(bad("n does not match d"));
    }
    let grid = PeriodicGrid::new(&n, length).map_err(|e| Error::Format(e.to_string()))?;
    Ok((grid, t))
}

pub fn read_field<R: Read>(input: R) -> Result<FieldFile> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let (grid, t) = parse_header(&line)?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    let plane_bytes = grid.len() * 8;
    if payload.is_empty() || payload.len() % plane_bytes != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of {plane_bytes}-byte planes",
            payload.len()
        )));
    }
    let planes = payload
        .chunks(plane_bytes)
        .map(|plane| {
            plane
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect::<Vec<Vec<f64>>>();
    if planes.len() != 1 && planes.len() != grid.dim() {
        return Err(Error::Format(format!(
            "{} planes on a {}-d grid",
            planes.len(),
            grid.dim()
        )));
    }
    Ok(FieldFile { grid, t, planes })
}

pub fn save_scalar(path: &Path, u: &ScalarField, t: f64) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_scalar(&mut out, u, t)?;
    out.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<FieldFile> {
    read_field(File::open(path)?)
}

// ---------------------------------------------------------------------------
// output directories

pub const LEDGER_FILE: &str = "ledger.csv";
pub const REPORT_FILE: &str = "report.json";
pub const FIELDS_DIR: &str = "fields";

/// `report.json` of a single run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub params: ModelParams,
    pub config: crate::solver::SolverConfig,
    pub grid: crate::continuation::GridEcho,
    pub stats: RunStats,
    pub final_time: f64,
    /// Only meaningful for the implicit scheme.
    pub energy: Option<EnergyReport>,
    /// Only computed when the scenario declares a gradient bound `0 < U < 1`.
    pub initial_bound: Option<InitialBoundCheck>,
    pub max_identity_defect: f64,
    pub fields: Vec<String>,
}

impl RunReport {
    /// `declared_u` is the scenario's bound on `|∇u₀|`.
    pub fn new(traj: &Trajectory, declared_u: Option<f64>) -> Result<Self> {
        let params = traj.params;
        let energy =
            (traj.config.scheme == Scheme::Implicit).then(|| energy_ledger_check(traj, &params));
        let initial_bound = match declared_u {
            Some(u) if u > 0.0 && u < 1.0 => {
                let p0 = ModelParams {
                    epsilon: 0.0,
                    u_bound: u,
                    ..params
                };
                let q0 = initial_flux(&traj.snapshots[0].state.u, &p0)?;
                Some(initial_bound_check(&q0, &p0))
            }
            _ => None,
        };
        let grid = traj.grid();
        Ok(Self {
            scenario_id: traj.scenario_id.clone(),
            params,
            config: traj.config,
            grid: crate::continuation::GridEcho {
                n: grid.counts().to_vec(),
                length: grid.length(),
            },
            stats: traj.stats,
            final_time: traj.final_state().t,
            energy,
            initial_bound,
            max_identity_defect: traj
                .snapshots
                .iter()
                .map(|s| s.state.constitutive_defect(&params))
                .fold(0.0, f64::max),
            fields: Vec::new(),
        })
    }
}

fn field_name(index: usize) -> String {
    format!("t_{index:06}.ifx")
}

/// Writes `ledger.csv`, `fields/t_<index>.ifx` and `report.json` into `dir`.
pub fn write_run(
    dir: &Path,
    traj: &Trajectory,
    declared_u: Option<f64>,
    fields: bool,
) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    let mut report = RunReport::new(traj, declared_u)?;
    let mut ledger = BufWriter::new(File::create(dir.join(LEDGER_FILE))?);
    write_ledger(&traj.diagnostics, &mut ledger)?;
    ledger.flush()?;
    if fields {
        let fdir = dir.join(FIELDS_DIR);
        fs::create_dir_all(&fdir)?;
        for (k, snap) in traj.snapshots.iter().enumerate() {
            let name = field_name(k);
            save_scalar(&fdir.join(&name), &snap.state.u, snap.state.t)?;
            report.fields.push(format!("{FIELDS_DIR}/{name}"));
        }
    }
    let mut out = BufWriter::new(File::create(dir.join(REPORT_FILE))?);
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.flush()?;
    Ok(report)
}

/// Writes the sweep report and the final field of every successful entry
/// into its own `eps_<m>/` subdirectory.
pub fn write_sweep(dir: &Path, report: &mut SweepReport, fields: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    if fields {
        let t_end = report.config.t_end;
        for (m, (entry, field)) in report
            .entries
            .iter_mut()
            .zip(&report.final_fields)
            .enumerate()
        {
            if let Some(u) = field {
                let sub = format!("eps_{m:02}");
                fs::create_dir_all(dir.join(&sub))?;
                let rel = format!("{sub}/final.ifx");
                save_scalar(&dir.join(&rel), u, t_end)?;
                entry.field_path = Some(rel);
            }
        }
    }
    let path = dir.join(REPORT_FILE);
    let mut out = BufWriter::new(File::create(&path)?);
    report.write_json(&mut out)?;
    out.flush()?;
    Ok(path)
}
