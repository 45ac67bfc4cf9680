//! Per-frame trace CSV and offline re-sensing of recorded factor streams.

use std::io::{Read, Write};
use std::path::Path;

use crate::degeneracy::{DegeneracyFactor, DegeneracySensor, SensingOptions, SensingResult};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};

pub const TRACE_VERSION_LINE: &str = "# degensense trace v1";
pub const TRACE_COLUMNS: [&str; 15] = [
    "frame", "timestamp", "s_rot", "s_trans", "rot_flag", "trans_flag", "rmse_before", "rmse_after", "tx", "ty",
    "tz", "qw", "qx", "qy", "qz",
];

/// One trace row; `pose` is the fused pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub frame: u64,
    pub timestamp: f64,
    pub s_rot: f64,
    pub s_trans: f64,
    pub rot_flag: bool,
    pub trans_flag: bool,
    pub rmse_before: f64,
    pub rmse_after: f64,
    pub pose: Pose,
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> Result<()> {
    writeln!(out, "{TRACE_VERSION_LINE}")?;
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for r in records {
        let t = r.pose.translation;
        let q = r.pose.rotation;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.frame,
            r.timestamp,
            r.s_rot,
            r.s_trans,
            u8::from(r.rot_flag),
            u8::from(r.trans_flag),
            r.rmse_before,
            r.rmse_after,
            t.x,
            t.y,
            t.z,
            q.w(),
            q.x(),
            q.y(),
            q.z()
        )?;
    }
    Ok(())
}

pub fn export_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trace(&mut f, records)?;
    f.flush()?;
    Ok(())
}

struct Table {
    columns: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let columns = reader.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, rec));
        }
        Ok(Self { columns, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("trace is missing column `{name}`")))
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, idx: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing value for `{name}`"),
    })?;
    raw.parse().map_err(|e| Error::Parse {
        line,
        message: format!("`{name}` = `{raw}`: {e}"),
    })
}

fn flag(rec: &csv::StringRecord, line: u64, idx: usize, name: &str) -> Result<bool> {
    match rec.get(idx) {
        Some("1") | Some("true") => Ok(true),
        Some("0") | Some("false") => Ok(false),
        other => Err(Error::Parse {
            line,
            message: format!("`{name}` must be 0 or 1, got {other:?}"),
        }),
    }
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let table = Table::read(input)?;
    let idx: Vec<usize> = TRACE_COLUMNS
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_>>()?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            let f = |k: usize| field::<f64>(rec, line, idx[k], TRACE_COLUMNS[k]);
            let rotation = Quaternion::try_new(f(11)?, f(12)?, f(13)?, f(14)?).ok_or(Error::Parse {
                line,
                message: "zero quaternion".into(),
            })?;
            Ok(TraceRecord {
                frame: field(rec, line, idx[0], "frame")?,
                timestamp: f(1)?,
                s_rot: f(2)?,
                s_trans: f(3)?,
                rot_flag: flag(rec, line, idx[4], "rot_flag")?,
                trans_flag: flag(rec, line, idx[5], "trans_flag")?,
                rmse_before: f(6)?,
                rmse_after: f(7)?,
                pose: Pose::new(rotation, Vec3::new(f(8)?, f(9)?, f(10)?)),
            })
        })
        .collect()
}

pub fn import_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    read_trace(std::fs::File::open(path)?)
}

/// Re-runs degeneracy sensing over the `s_rot` / `s_trans` columns of a
/// trace. Frame indices come from the `frame` column when present, else the
/// row number.
pub fn replay_from_reader<R: Read>(input: R, opts: &SensingOptions) -> Result<Vec<(u64, SensingResult)>> {
    let table = Table::read(input)?;
    let rot = table.column("s_rot")?;
    let trans = table.column("s_trans")?;
    let frame = table.column("frame").ok();
    let mut sensor = DegeneracySensor::new(*opts)?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(row, (line, rec))| {
            let frame_index = match frame {
                Some(c) => field(rec, *line, c, "frame")?,
                None => row as u64,
            };
            let factor = DegeneracyFactor {
                frame_index,
                timestamp: 0.0,
                s_rot: field(rec, *line, rot, "s_rot")?,
                s_trans: field(rec, *line, trans, "s_trans")?,
                no_constraints: false,
            };
            Ok((frame_index, sensor.sense(&factor)))
        })
        .collect()
}

pub fn replay_detect(trace_path: &Path, opts: &SensingOptions) -> Result<Vec<(u64, SensingResult)>> {
    replay_from_reader(std::fs::File::open(trace_path)?, opts)
}

pub fn write_flags<W: Write>(mut out: W, flags: &[(u64, SensingResult)]) -> Result<()> {
    writeln!(out, "frame,s_rot,s_trans,rot_flag,trans_flag")?;
    for (frame, r) in flags {
        writeln!(
            out,
            "{frame},{},{},{},{}",
            r.s_rot,
            r.s_trans,
            u8::from(r.rot_degenerate),
            u8::from(r.trans_degenerate)
        )?;
    }
    Ok(())
}
