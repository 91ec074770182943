//! Versioned on-disk formats.

use std::fs;
use std::path::Path as FsPath;

use crate::engine::EpisodeLog;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_episode, EpisodeSummary};

pub const LOG_HEADER: &str = "# acscp-episode-log v1";
pub const EXPOSURE_HEADER: &str = "# acscp-summary-exposure v1";
pub const EFFICIENCY_HEADER: &str = "# acscp-summary-efficiency v1";
pub const EPISODES_HEADER: &str = "# acscp-episodes v1";
pub const SNAPSHOT_HEADER: &str = "# acscp-snapshot v1";

pub fn write_text(path: &FsPath, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Header line followed by the log as JSON.
pub fn encode_log(log: &EpisodeLog) -> Result<String> {
    let body = serde_json::to_string(log).map_err(|e| Error::Numerical(format!("cannot encode log: {e}")))?;
    Ok(format!("{LOG_HEADER}\n{body}\n"))
}

pub fn write_log(path: &FsPath, log: &EpisodeLog) -> Result<()> {
    write_text(path, &encode_log(log)?)
}

pub fn read_log(path: &FsPath) -> Result<EpisodeLog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_log(&text).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

fn decode_log(text: &str) -> std::result::Result<EpisodeLog, String> {
    let (header, body) = text.split_once('\n').ok_or("missing header line")?;
    if header.trim_end() != LOG_HEADER {
        return Err(format!("expected header {LOG_HEADER:?}, found {header:?}"));
    }
    serde_json::from_str(body).map_err(|e| e.to_string())
}

/// Outcome of recomputing a log's metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub recomputed: EpisodeSummary,
    /// Human-readable differences; empty when everything matches exactly.
    pub mismatches: Vec<String>,
}

impl Verification {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recomputes S, U, 𝒥 and the benchmark metrics and diffs them against the log.
pub fn verify_log(log: &EpisodeLog) -> Result<Verification> {
    let recomputed = evaluate_episode(log)?;
    let mut mismatches = Vec::new();
    let mut check = |name: &str, stored: String, fresh: String| {
        if stored != fresh {
            mismatches.push(format!("{name}: stored {stored}, recomputed {fresh}"));
        }
    };
    check("S", log.placements.to_string(), recomputed.placements.to_string());
    check("U", log.unique_placements.to_string(), recomputed.unique_placements.to_string());
    check(
        "incurred cost",
        format!("{:?}", log.incurred_cost),
        format!("{:?}", recomputed.incurred_cost),
    );
    match &log.summary {
        None => mismatches.push("log has no stored summary".into()),
        Some(stored) => {
            if stored != &recomputed {
                let a = serde_json::to_value(stored).unwrap_or_default();
                let b = serde_json::to_value(&recomputed).unwrap_or_default();
                if let (Some(a), Some(b)) = (a.as_object(), b.as_object()) {
                    for (key, value) in a {
                        if b.get(key) != Some(value) {
                            check(&format!("summary.{key}"), value.to_string(), b[key].to_string());
                        }
                    }
                }
            }
        }
    }
    Ok(Verification {
        recomputed,
        mismatches,
    })
}
