//! File formats.
//!
//! * Field CSV: one value per line in node order, no header.
//! * Field JSON: `{"d": .., "N": .., "values": [..]}`.
//! * Trajectory CSV: header `t,node_0,..,node_{M-1}`, one row per stored step,
//!   with a JSON manifest alongside.
//! * Schedule manifest: JSON describing the pieces, each referencing a field CSV.
//!
//! Floats in CSV are written with 17 significant digits; JSON uses the
//! shortest representation that round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid};
use crate::pde::{ControlSchedule, ScheduleDescription, Trajectory};

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_csv(field: &Field) -> String {
    let mut out = String::with_capacity(field.len() * 24);
    for v in field.values() {
        out.push_str(&format_float(*v));
        out.push('\n');
    }
    out
}

pub fn field_from_csv(text: &str, grid: SpatialGrid) -> Result<Field> {
    let values = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: '{l}': {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}

pub fn write_field_csv(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    Ok(fs::write(path, field_to_csv(field))?)
}

pub fn read_field_csv(path: impl AsRef<Path>, grid: SpatialGrid) -> Result<Field> {
    field_from_csv(&fs::read_to_string(path)?, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<f64>,
}

impl From<&Field> for FieldJson {
    fn from(f: &Field) -> Self {
        Self {
            d: f.grid().dim(),
            n: f.grid().n(),
            values: f.values().to_vec(),
        }
    }
}

impl TryFrom<FieldJson> for Field {
    type Error = Error;

    fn try_from(j: FieldJson) -> Result<Self> {
        Field::new(SpatialGrid::new(j.d, j.n)?, j.values)
    }
}

pub fn field_to_json(field: &Field) -> Result<String> {
    Ok(serde_json::to_string(&FieldJson::from(field))?)
}

pub fn field_from_json(text: &str) -> Result<Field> {
    serde_json::from_str::<FieldJson>(text)?.try_into()
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(fs::write(path, text)?)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn trajectory_to_csv(trajectory: &Trajectory) -> String {
    let m = trajectory.grid().len();
    let mut out = String::from("t");
    for i in 0..m {
        let _ = write!(out, ",node_{i}");
    }
    out.push('\n');
    for (t, y) in trajectory.times().iter().zip(trajectory.states()) {
        out.push_str(&format_float(*t));
        for v in y.values() {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl From<&SpatialGrid> for GridJson {
    fn from(g: &SpatialGrid) -> Self {
        Self {
            d: g.dim(),
            n: g.n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub grid: GridJson,
    pub dt: f64,
    pub steps: usize,
    pub start: f64,
    pub end: f64,
    pub nonlinearity: String,
    pub control: Option<ScheduleDescription>,
    pub data: String,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_trajectory(
    dir: impl AsRef<Path>,
    stem: &str,
    trajectory: &Trajectory,
    control: Option<&ControlSchedule>,
    nonlinearity: &str,
) -> Result<TrajectoryManifest> {
    let dir = dir.as_ref();
    let data = format!("{stem}.csv");
    fs::write(dir.join(&data), trajectory_to_csv(trajectory))?;
    let manifest = TrajectoryManifest {
        grid: trajectory.grid().into(),
        dt: trajectory.dt(),
        steps: trajectory.steps(),
        start: trajectory.start_time(),
        end: trajectory.end_time(),
        nonlinearity: nonlinearity.to_string(),
        control: control.map(ControlSchedule::describe),
        data,
    };
    write_json(dir.join(format!("{stem}.json")), &manifest)?;
    Ok(manifest)
}

/// Writes each piece as `<stem>_piece<k>.csv` and the manifest as `<stem>.json`.
pub fn write_schedule(
    dir: impl AsRef<Path>,
    stem: &str,
    schedule: &ControlSchedule,
) -> Result<ScheduleDescription> {
    let dir = dir.as_ref();
    let mut description = schedule.describe();
    for (k, (piece, desc)) in schedule
        .pieces()
        .iter()
        .zip(&mut description.pieces)
        .enumerate()
    {
        let name = format!("{stem}_piece{k}.csv");
        write_field_csv(dir.join(&name), &piece.field)?;
        desc.field = Some(name);
    }
    write_json(dir.join(format!("{stem}.json")), &description)?;
    Ok(description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{simulate, NonlinearitySpec};

    #[test]
    fn csv_round_trip_is_exact() {
        let g = SpatialGrid::new(2, 5).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 1e3).sin() / 3.0 + x[1] * 1e-300);
        let back = field_from_csv(&field_to_csv(&f), g).unwrap();
        assert_eq!(back, f);
        assert!(field_from_csv("1.0\n2.0\n", g).is_err());
        assert!(matches!(
            field_from_csv("x\n", SpatialGrid::new(1, 3).unwrap()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = SpatialGrid::new(1, 7).unwrap();
        let f = Field::from_fn(g, |x| 0.1 * x[0] + 1.0 / 7.0);
        let text = field_to_json(&f).unwrap();
        assert!(text.contains("\"N\":7"));
        assert_eq!(field_from_json(&text).unwrap(), f);
        assert!(field_from_json(r#"{"d":3,"N":3,"values":[]}"#).is_err());
    }

    #[test]
    fn trajectory_and_schedule_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(1, 4).unwrap();
        let c = ControlSchedule::constant(Field::constant(g, 0.5), 0.1).unwrap();
        let y0 = Field::constant(g, 1.0);
        let tr = simulate(&g, &y0, &c, &NonlinearitySpec::zero(), 0.1, 0.05).unwrap();
        let m = write_trajectory(dir.path(), "traj", &tr, Some(&c), "zero").unwrap();
        assert_eq!(m.steps, 2);
        let csv = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,node_0,node_1,node_2,node_3\n"));
        let back: TrajectoryManifest = read_json(dir.path().join("traj.json")).unwrap();
        assert_eq!(back, m);

        let d = write_schedule(dir.path(), "control", &c).unwrap();
        let name = d.pieces[0].field.clone().unwrap();
        assert_eq!(
            read_field_csv(dir.path().join(name), g).unwrap(),
            c.pieces()[0].field
        );
    }
}
