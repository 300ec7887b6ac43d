//! Trajectory CSV: one row per vehicle and step, `uav,t,x,y,z,mode`.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use mtlplan::dynamics::STATE_DIM;
use mtlplan::{ModeId, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    uav: usize,
    t: usize,
    x: f64,
    y: f64,
    z: f64,
    mode: String,
}

/// Writes every trajectory; `mode` is the mode flown from step `t` on, and
/// the last row repeats the final mode.
pub fn write_trajectories<W: Write>(out: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, tr) in trajectories.iter().enumerate() {
        for (k, s) in tr.states.iter().enumerate() {
            let mode = tr.modes.get(k).or(tr.modes.last()).copied().unwrap_or(ModeId::Hover);
            w.serialize(Row { uav: i + 1, t: tr.start + k, x: s[0], y: s[1], z: s[2], mode: mode.to_string() })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the positions of one vehicle (1-based). Other state components are
/// zero. Steps must be consecutive.
pub fn read_trajectory<R: Read>(input: R, uav: usize, dt: f64) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().context("reading the CSV header")?.clone();
    let want = ["uav", "t", "x", "y", "z", "mode"];
    if header.iter().collect::<Vec<_>>() != want {
        bail!("schema error: header must be `{}`, found `{}`", want.join(","), header.iter().collect::<Vec<_>>().join(","));
    }
    let mut states = Vec::new();
    let mut modes = Vec::new();
    let mut start = None;
    for (line, rec) in r.deserialize::<Row>().enumerate() {
        let row = rec.with_context(|| format!("schema error in data row {}", line + 1))?;
        if row.uav != uav {
            continue;
        }
        let first = *start.get_or_insert(row.t);
        if row.t != first + states.len() {
            bail!("schema error: uav {uav} jumps to step {} after {} rows", row.t, states.len());
        }
        let mode: ModeId = row.mode.parse().with_context(|| format!("schema error: mode `{}`", row.mode))?;
        let mut x = vec![0.0; STATE_DIM];
        x[..3].copy_from_slice(&[row.x, row.y, row.z]);
        states.push(x);
        modes.push(mode);
    }
    let Some(start) = start else { bail!("no rows for uav {uav}") };
    modes.pop();
    let inputs = vec![vec![0.0; 3]; modes.len()];
    Ok(Trajectory { dt, start, states, inputs, modes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk() -> Trajectory {
        let states = (0..3).map(|k| {
            let mut x = vec![0.0; STATE_DIM];
            x[0] = k as f64 * 0.25;
            x[2] = 1.0;
            x
        });
        Trajectory { dt: 0.2, start: 0, states: states.collect(), inputs: vec![vec![0.0; 3]; 2], modes: vec![ModeId::Steer, ModeId::Hover] }
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &[walk()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("uav,t,x,y,z,mode\n1,0,0.0,0.0,1.0,Steer\n"));
        let back = read_trajectory(buf.as_slice(), 1, 0.2).unwrap();
        assert_eq!(back, walk());
    }

    #[test]
    fn truncated_rows_are_schema_errors() {
        let text = "uav,t,x,y,z,mode\n1,0,0.0,0.0,1.0,Steer\n1,1,0.25,0.0\n";
        let err = read_trajectory(text.as_bytes(), 1, 0.2).unwrap_err();
        assert!(format!("{err:#}").contains("schema error"));
    }

    #[test]
    fn gaps_are_schema_errors() {
        let text = "uav,t,x,y,z,mode\n1,0,0.0,0.0,1.0,Steer\n1,2,0.25,0.0,1.0,Steer\n";
        assert!(read_trajectory(text.as_bytes(), 1, 0.2).is_err());
    }
}
