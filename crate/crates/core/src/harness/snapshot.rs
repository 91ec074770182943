//! Gridded field snapshots reconstructed from an episode log.
//!
//! Every belief update is followed by a replan that records `Θ̂`, and between
//! updates the mean only evolves by `Θ̂ ← A Θ̂`, so the estimate at any tick is
//! `A^{t-r} Θ̂_r` for the last replan tick `r ≤ t`.

use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;

use super::io::{write_text, SNAPSHOT_HEADER};
use crate::engine::{EpisodeLog, Scenario, TruthTrajectory};
use crate::error::{Error, Result};
use crate::workspace::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotTime {
    /// Before the first measurement: prior mean, nothing planned.
    Start,
    /// End of the given tick.
    Tick(u64),
    /// End of the final tick.
    End,
}

impl SnapshotTime {
    pub fn label(&self) -> String {
        match self {
            SnapshotTime::Start => "start".into(),
            SnapshotTime::Tick(t) => format!("t{t}"),
            SnapshotTime::End => "end".into(),
        }
    }
}

impl FromStr for SnapshotTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "start" => Ok(SnapshotTime::Start),
            "end" => Ok(SnapshotTime::End),
            other => other
                .parse()
                .map(SnapshotTime::Tick)
                .map_err(|_| Error::InvalidArgument(format!("snapshot time {other:?} is not start, end or a tick"))),
        }
    }
}

/// Parses a comma-separated list such as `start,100,end`.
pub fn parse_times(list: &str) -> Result<Vec<SnapshotTime>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// State of the episode at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: SnapshotTime,
    pub tick: u64,
    /// `ĉ` at every vertex.
    pub estimated: Vec<f64>,
    /// `c` at every vertex.
    pub truth: Vec<f64>,
    pub traveled: Vec<VertexId>,
    pub planned: Vec<VertexId>,
    pub sensors: Vec<[f64; 2]>,
}

/// Reconstructs the episode state at `time`.
pub fn snapshot_at(log: &EpisodeLog, time: SnapshotTime) -> Result<Snapshot> {
    let final_tick = log.final_tick();
    let tick = match time {
        SnapshotTime::Start => 0,
        SnapshotTime::Tick(t) if t > final_tick => {
            return Err(Error::InvalidArgument(format!(
                "snapshot tick {t} is past the episode end at tick {final_tick}"
            )))
        }
        SnapshotTime::Tick(t) => t,
        SnapshotTime::End => final_tick,
    };
    let scenario = Scenario::from_config(&log.config)?;
    let grid = &scenario.grid;
    let mut truth_traj = TruthTrajectory::new(&scenario, log.config.seed);
    let theta = truth_traj.theta(tick).clone();
    let field = |th: &DVector<f64>| -> Vec<f64> {
        grid.coords()
            .iter()
            .map(|x| 1.0 + scenario.basis.basis_vector(x).dot(th))
            .collect()
    };

    let sample = log
        .samples
        .iter()
        .find(|s| s.tick == tick)
        .ok_or_else(|| Error::InvalidArgument(format!("log has no sample for tick {tick}")))?;

    if time == SnapshotTime::Start {
        return Ok(Snapshot {
            time,
            tick,
            estimated: vec![1.0; grid.vertex_count()],
            truth: field(&theta),
            traveled: vec![log.start],
            planned: Vec::new(),
            sensors: sample.sensors.clone(),
        });
    }

    let traveled: Vec<VertexId> = log
        .ego_arrivals
        .iter()
        .take_while(|a| a.tick <= tick)
        .map(|a| a.vertex)
        .collect();
    let replan = log
        .replans
        .iter()
        .rev()
        .find(|r| r.tick <= tick)
        .ok_or_else(|| Error::InvalidArgument("log has no plan".into()))?;
    let power = scenario.dynamics.transition().clone().pow((tick - replan.tick) as u32);
    let estimate = power * DVector::from_vec(replan.theta_hat.clone());

    // drop plan vertices the ego has reached since the plan was made
    let reached_since = log
        .ego_arrivals
        .iter()
        .filter(|a| a.tick > replan.tick && a.tick <= tick)
        .count();
    let mut planned: Vec<VertexId> = replan.path.iter().skip(reached_since).copied().collect();
    if traveled.last() == Some(&log.goal) {
        planned.clear();
    }

    Ok(Snapshot {
        time,
        tick,
        estimated: field(&estimate),
        truth: field(&theta),
        traveled,
        planned,
        sensors: sample.sensors.clone(),
    })
}

/// Writes `field_<label>.csv`, `path_<label>.csv` and `sensors_<label>.csv`
/// for each requested time.
pub fn export_field_snapshots(log: &EpisodeLog, times: &[SnapshotTime], dir: &FsPath) -> Result<Vec<PathBuf>> {
    let scenario = Scenario::from_config(&log.config)?;
    let grid = &scenario.grid;
    let mut written = Vec::new();
    for &time in times {
        let snap = snapshot_at(log, time)?;
        let label = time.label();
        let header = format!("{SNAPSHOT_HEADER} tick={}", snap.tick);

        let mut field = format!("{header}\nvertex,x,y,estimated,true\n");
        for v in grid.vertices() {
            let x = grid.coord(v);
            let _ = writeln!(field, "{},{},{},{},{}", v, x.x, x.y, snap.estimated[v.index()], snap.truth[v.index()]);
        }
        let mut path = format!("{header}\nkind,order,vertex,x,y\n");
        for (kind, vertices) in [("traveled", &snap.traveled), ("planned", &snap.planned)] {
            for (i, &v) in vertices.iter().enumerate() {
                let x = grid.coord(v);
                let _ = writeln!(path, "{kind},{i},{v},{},{}", x.x, x.y);
            }
        }
        let mut sensors = format!("{header}\nsensor,x,y\n");
        for (j, p) in snap.sensors.iter().enumerate() {
            let _ = writeln!(sensors, "{j},{},{}", p[0], p[1]);
        }

        for (prefix, text) in [("field", field), ("path", path), ("sensors", sensors)] {
            let file = dir.join(format!("{prefix}_{label}.csv"));
            write_text(&file, &text)?;
            written.push(file);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_parsing() {
        assert_eq!(
            parse_times("start, 100,end").unwrap(),
            vec![SnapshotTime::Start, SnapshotTime::Tick(100), SnapshotTime::End]
        );
        assert!(parse_times("soon").is_err());
        assert_eq!(SnapshotTime::Tick(7).label(), "t7");
    }
}
