//! CSV readers and writers for the pipeline artifacts.
//!
//! Five files flow between stages: a planned path (`x,y,z,psi,q1..qM`), a
//! sampled trajectory (`t` plus position, velocity and acceleration blocks),
//! a simulation trace (planned vs simulated base pose and joints), a
//! compensated trajectory (same schema as the sampled trajectory), and an
//! error trace. Floats are written with the shortest decimal representation
//! that round-trips, so re-parsing an emitted file recovers every value bit
//! for bit and artifacts can serve as golden files.

use std::fmt::Write as _;

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::planner::{ControlSpacePoint, Path};
use crate::sim::FullState;
use crate::toppra::{ControlTrajectoryPoint, SampledTrajectory};

/// Failure reading or writing an artifact file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("no data rows")]
    Empty,
    #[error("bad header: expected `{expected}`, got `{got}`")]
    Header { expected: String, got: String },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}, column `{column}`: {message}")]
    BadNumber {
        line: usize,
        column: String,
        message: String,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least two samples to recover the control period")]
    TooShort,
    #[error("control-space rows need at least 4 coordinates, got {got}")]
    Dimension { got: usize },
}

/// One row of the error trace: end-effector pose error of the executed run
/// plus the z-component comparison between the two runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub translation_err: f64,
    pub rotation_err: f64,
    pub z_err_uncompensated: f64,
    pub z_err_compensated: f64,
}

/// One row of the simulation trace: the planned base pose and joints next
/// to what the closed-loop model actually flew.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTraceRow {
    pub t: f64,
    pub planned_p: Vector3<f64>,
    /// Planned attitude: zero roll and pitch, planned yaw.
    pub planned_theta: Vector3<f64>,
    pub planned_q: DVector<f64>,
    pub sim_p: Vector3<f64>,
    pub sim_theta: Vector3<f64>,
    pub sim_q: DVector<f64>,
}

impl SimTraceRow {
    /// Rebuilds the simulated rigid-body state. Velocities are not stored
    /// in the trace and come back zero; downstream pose reconstruction does
    /// not read them.
    pub fn to_state(&self) -> FullState {
        FullState {
            p_b: self.sim_p,
            v_b: Vector3::zeros(),
            theta_b: self.sim_theta,
            omega_b: Vector3::zeros(),
            q_m: self.sim_q.clone(),
            dq_m: DVector::zeros(self.sim_q.len()),
        }
    }
}

fn path_header(joints: usize) -> String {
    let mut h = String::from("x,y,z,psi");
    for j in 1..=joints {
        write!(h, ",q{j}").unwrap();
    }
    h
}

fn trajectory_header(joints: usize) -> String {
    let mut h = String::from("t");
    for prefix in ["", "d", "dd"] {
        write!(h, ",{prefix}x,{prefix}y,{prefix}z,{prefix}psi").unwrap();
        for j in 1..=joints {
            write!(h, ",{prefix}q{j}").unwrap();
        }
    }
    h
}

fn sim_trace_header(joints: usize) -> String {
    let mut h = String::from("t");
    for suffix in ["plan", "sim"] {
        write!(
            h,
            ",x_{suffix},y_{suffix},z_{suffix},roll_{suffix},pitch_{suffix},yaw_{suffix}"
        )
        .unwrap();
        for j in 1..=joints {
            write!(h, ",q{j}_{suffix}").unwrap();
        }
    }
    h
}

const ERRORS_HEADER: &str = "t,translation_err,rotation_err,z_err_uncompensated,z_err_compensated";

fn push_fields(row: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        write!(row, ",{v}").unwrap();
    }
}

/// Splits off and checks the header line, returning the data lines.
fn check_header<'a>(text: &'a str, expected: &str) -> Result<std::str::Lines<'a>, CsvError> {
    let mut lines = text.lines();
    let got = lines.next().unwrap_or("");
    if got != expected {
        return Err(CsvError::Header {
            expected: expected.to_string(),
            got: got.to_string(),
        });
    }
    Ok(lines)
}

/// Parses one data line against the header's column names. `line_no` is
/// 1-based within the file (the header is line 1).
fn parse_row(line: &str, columns: &[&str], line_no: usize) -> Result<Vec<f64>, CsvError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != columns.len() {
        return Err(CsvError::FieldCount {
            line: line_no,
            expected: columns.len(),
            got: fields.len(),
        });
    }
    fields
        .iter()
        .zip(columns)
        .map(|(field, column)| {
            field.parse::<f64>().map_err(|e| CsvError::BadNumber {
                line: line_no,
                column: (*column).to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes a planned path, one row per control-space point.
pub fn path_to_csv(path: &Path) -> Result<String, CsvError> {
    let Some(first) = path.points.first() else {
        return Err(CsvError::Empty);
    };
    let joints = first.q_m.len();
    let mut out = path_header(joints);
    out.push('\n');
    for p in &path.points {
        if p.q_m.len() != joints {
            return Err(CsvError::LengthMismatch {
                expected: joints,
                got: p.q_m.len(),
            });
        }
        let mut row = format!("{}", p.p_b.x);
        push_fields(&mut row, [p.p_b.y, p.p_b.z, p.psi]);
        push_fields(&mut row, p.q_m.iter().copied());
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

/// Reads a planned path written by [`path_to_csv`].
pub fn path_from_csv(text: &str) -> Result<Path, CsvError> {
    let first_line = text.lines().next().unwrap_or("");
    let n_cols = first_line.split(',').count();
    if n_cols < 4 {
        return Err(CsvError::Header {
            expected: path_header(0),
            got: first_line.to_string(),
        });
    }
    let expected = path_header(n_cols - 4);
    let lines = check_header(text, &expected)?;
    let columns: Vec<&str> = expected.split(',').collect();
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = parse_row(line, &columns, i + 2)?;
        points.push(ControlSpacePoint {
            p_b: Vector3::new(v[0], v[1], v[2]),
            psi: v[3],
            q_m: DVector::from_iterator(v.len() - 4, v[4..].iter().copied()),
        });
    }
    if points.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(Path { points })
}

/// Writes a sampled trajectory: per row `t`, then the position, velocity
/// and acceleration blocks, each ordered `x,y,z,psi,q1..qM`.
pub fn trajectory_to_csv(traj: &SampledTrajectory) -> Result<String, CsvError> {
    let Some(first) = traj.points.first() else {
        return Err(CsvError::Empty);
    };
    let dim = first.q.len();
    if dim < 4 {
        return Err(CsvError::Dimension { got: dim });
    }
    let mut out = trajectory_header(dim - 4);
    out.push('\n');
    for p in &traj.points {
        for block in [&p.q, &p.dq, &p.ddq] {
            if block.len() != dim {
                return Err(CsvError::LengthMismatch {
                    expected: dim,
                    got: block.len(),
                });
            }
        }
        let mut row = format!("{}", p.t);
        push_fields(&mut row, p.q.iter().copied());
        push_fields(&mut row, p.dq.iter().copied());
        push_fields(&mut row, p.ddq.iter().copied());
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

/// Reads a trajectory written by [`trajectory_to_csv`]. The control period
/// is recovered from the first two timestamps, so at least two samples are
/// required.
pub fn trajectory_from_csv(text: &str) -> Result<SampledTrajectory, CsvError> {
    let first_line = text.lines().next().unwrap_or("");
    let n_cols = first_line.split(',').count();
    if n_cols < 13 || (n_cols - 1) % 3 != 0 {
        return Err(CsvError::Header {
            expected: trajectory_header(0),
            got: first_line.to_string(),
        });
    }
    let dim = (n_cols - 1) / 3;
    let expected = trajectory_header(dim - 4);
    let lines = check_header(text, &expected)?;
    let columns: Vec<&str> = expected.split(',').collect();
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = parse_row(line, &columns, i + 2)?;
        let block = |b: usize| DVector::from_iterator(dim, v[1 + b * dim..1 + (b + 1) * dim].iter().copied());
        points.push(ControlTrajectoryPoint {
            t: v[0],
            q: block(0),
            dq: block(1),
            ddq: block(2),
        });
    }
    if points.len() < 2 {
        return Err(CsvError::TooShort);
    }
    let t_s = points[1].t - points[0].t;
    Ok(SampledTrajectory { points, t_s })
}

/// Writes the simulation trace: planned base pose and joints next to the
/// simulated ones, one row per trajectory sample.
pub fn sim_trace_to_csv(
    traj: &SampledTrajectory,
    states: &[FullState],
) -> Result<String, CsvError> {
    if traj.points.len() != states.len() {
        return Err(CsvError::LengthMismatch {
            expected: traj.points.len(),
            got: states.len(),
        });
    }
    let Some(first) = traj.points.first() else {
        return Err(CsvError::Empty);
    };
    let dim = first.q.len();
    if dim < 4 {
        return Err(CsvError::Dimension { got: dim });
    }
    let joints = dim - 4;
    let mut out = sim_trace_header(joints);
    out.push('\n');
    for (p, s) in traj.points.iter().zip(states) {
        if p.q.len() != dim || s.q_m.len() != joints {
            return Err(CsvError::LengthMismatch {
                expected: dim,
                got: p.q.len().min(s.q_m.len() + 4),
            });
        }
        let mut row = format!("{}", p.t);
        push_fields(&mut row, [p.q[0], p.q[1], p.q[2], 0.0, 0.0, p.q[3]]);
        push_fields(&mut row, p.q.iter().skip(4).copied());
        push_fields(&mut row, [s.p_b.x, s.p_b.y, s.p_b.z]);
        push_fields(&mut row, [s.theta_b.x, s.theta_b.y, s.theta_b.z]);
        push_fields(&mut row, s.q_m.iter().copied());
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

/// Reads a trace written by [`sim_trace_to_csv`].
pub fn sim_trace_from_csv(text: &str) -> Result<Vec<SimTraceRow>, CsvError> {
    let first_line = text.lines().next().unwrap_or("");
    let n_cols = first_line.split(',').count();
    if n_cols < 13 || (n_cols - 1) % 2 != 0 {
        return Err(CsvError::Header {
            expected: sim_trace_header(0),
            got: first_line.to_string(),
        });
    }
    let joints = (n_cols - 1) / 2 - 6;
    let expected = sim_trace_header(joints);
    let lines = check_header(text, &expected)?;
    let columns: Vec<&str> = expected.split(',').collect();
    let half = 6 + joints;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = parse_row(line, &columns, i + 2)?;
        let joint_vec = |start: usize| {
            DVector::from_iterator(joints, v[start..start + joints].iter().copied())
        };
        rows.push(SimTraceRow {
            t: v[0],
            planned_p: Vector3::new(v[1], v[2], v[3]),
            planned_theta: Vector3::new(v[4], v[5], v[6]),
            planned_q: joint_vec(7),
            sim_p: Vector3::new(v[1 + half], v[2 + half], v[3 + half]),
            sim_theta: Vector3::new(v[4 + half], v[5 + half], v[6 + half]),
            sim_q: joint_vec(7 + half),
        });
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

/// Writes the error trace. An empty row list still produces the header.
pub fn errors_to_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from(ERRORS_HEADER);
    out.push('\n');
    for r in rows {
        let mut row = format!("{}", r.t);
        push_fields(
            &mut row,
            [
                r.translation_err,
                r.rotation_err,
                r.z_err_uncompensated,
                r.z_err_compensated,
            ],
        );
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Reads an error trace written by [`errors_to_csv`].
pub fn errors_from_csv(text: &str) -> Result<Vec<ErrorRow>, CsvError> {
    let lines = check_header(text, ERRORS_HEADER)?;
    let columns: Vec<&str> = ERRORS_HEADER.split(',').collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = parse_row(line, &columns, i + 2)?;
        rows.push(ErrorRow {
            t: v[0],
            translation_err: v[1],
            rotation_err: v[2],
            z_err_uncompensated: v[3],
            z_err_compensated: v[4],
        });
    }
    Ok(rows)
}
