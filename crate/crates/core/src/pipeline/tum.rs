//! TUM trajectory files: `timestamp tx ty tz qx qy qz qw`, one pose per line.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};
use crate::scenesim::TrajectorySample;

pub fn write_tum<W: Write>(mut out: W, samples: &[TrajectorySample]) -> Result<()> {
    for s in samples {
        let t = s.pose.translation;
        let q = s.pose.rotation;
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            s.timestamp,
            t.x,
            t.y,
            t.z,
            q.x(),
            q.y(),
            q.z(),
            q.w()
        )?;
    }
    Ok(())
}

pub fn save_tum(path: &Path, samples: &[TrajectorySample]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tum(&mut f, samples)?;
    f.flush()?;
    Ok(())
}

/// Blank lines and `#` comments are skipped.
pub fn read_tum<R: BufRead>(input: R) -> Result<Vec<TrajectorySample>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i as u64 + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<f64> = text
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("`{f}`: {e}"))))
            .collect::<Result<_>>()?;
        if fields.len() != 8 {
            return Err(parse_err(format!("expected 8 fields, found {}", fields.len())));
        }
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("non-finite value".into()));
        }
        let rotation = Quaternion::try_new(fields[7], fields[4], fields[5], fields[6])
            .ok_or_else(|| parse_err("zero quaternion".into()))?;
        out.push(TrajectorySample {
            timestamp: fields[0],
            pose: Pose::new(rotation, Vec3::new(fields[1], fields[2], fields[3])),
        });
    }
    Ok(out)
}

pub fn load_tum(path: &Path) -> Result<Vec<TrajectorySample>> {
    read_tum(std::io::BufReader::new(std::fs::File::open(path)?))
}
