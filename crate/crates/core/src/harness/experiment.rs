//! Ensemble execution over schemes, speed ratios and seeds.

use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentSpec;
use super::io::{write_log, write_text, EFFICIENCY_HEADER, EPISODES_HEADER, EXPOSURE_HEADER};
use crate::engine::{run_episode, EpisodeLog};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_episode, EpisodeSummary};

/// One finished `(scheme, ratio, seed)` cell.
#[derive(Clone, Debug)]
pub struct EpisodeRecord {
    pub scheme: String,
    pub ratio: f64,
    pub seed: u64,
    pub summary: EpisodeSummary,
    pub log: EpisodeLog,
}

impl EpisodeRecord {
    pub fn log_name(&self) -> String {
        format!("{}_r{}_s{}.log.json", self.scheme, self.ratio, self.seed)
    }
}

/// Mean normalized exposure for one scheme and ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct ExposureCell {
    pub scheme: String,
    pub ratio: f64,
    pub episodes: usize,
    /// Episodes whose benchmarks coincided and were left out of the mean.
    pub undefined: usize,
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
}

/// Placement counts and efficiency for one scheme at the reference ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyRow {
    pub scheme: String,
    pub ratio: f64,
    pub episodes: usize,
    pub mean_placements: f64,
    pub mean_unique: f64,
    pub mean_exposure: Option<f64>,
    pub mean_efficiency: Option<f64>,
    pub std_error_efficiency: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    /// Sorted by scheme order in the experiment spec, then ratio, then seed.
    pub records: Vec<EpisodeRecord>,
    pub exposure: Vec<ExposureCell>,
    pub efficiency: Vec<EfficiencyRow>,
}

impl ExperimentResult {
    pub fn records_for<'a>(&'a self, scheme: &'a str, ratio: f64) -> impl Iterator<Item = &'a EpisodeRecord> + 'a {
        self.records.iter().filter(move |r| r.scheme == scheme && r.ratio == ratio)
    }

    pub fn exposure_cell(&self, scheme: &str, ratio: f64) -> Option<&ExposureCell> {
        self.exposure.iter().find(|c| c.scheme == scheme && c.ratio == ratio)
    }
}

/// Runs every cell of the experiment spec. Nothing is written to disk.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut cells = Vec::new();
    for (s, scheme) in spec.schemes.iter().enumerate() {
        for (r, &ratio) in spec.ratios.iter().enumerate() {
            for &seed in &spec.seeds {
                cells.push((s, r, seed, spec.episode_config(scheme, ratio, seed)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut finished: Vec<((usize, usize, u64), EpisodeRecord)> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|(s, r, seed, cfg)| {
                let mut log = run_episode(cfg)?;
                let summary = evaluate_episode(&log)?;
                log.summary = Some(summary.clone());
                let record = EpisodeRecord {
                    scheme: spec.schemes[s].name.clone(),
                    ratio: spec.ratios[r],
                    seed,
                    summary,
                    log,
                };
                Ok(((s, r, seed), record))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    finished.sort_by_key(|(key, _)| *key);
    let records: Vec<EpisodeRecord> = finished.into_iter().map(|(_, r)| r).collect();

    let mut exposure = Vec::new();
    for scheme in &spec.schemes {
        for &ratio in &spec.ratios {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.scheme == scheme.name && r.ratio == ratio)
                .filter_map(|r| r.summary.exposure)
                .collect();
            let (mean, std_error) = mean_and_stderr(&values);
            exposure.push(ExposureCell {
                scheme: scheme.name.clone(),
                ratio,
                episodes: spec.seeds.len(),
                undefined: spec.seeds.len() - values.len(),
                mean,
                std_error,
            });
        }
    }

    let efficiency = spec
        .schemes
        .iter()
        .map(|scheme| {
            let group: Vec<&EpisodeRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme.name && r.ratio == spec.reference_ratio)
                .collect();
            let n = group.len() as f64;
            let exposures: Vec<f64> = group.iter().filter_map(|r| r.summary.exposure).collect();
            let etas: Vec<f64> = group.iter().filter_map(|r| r.summary.efficiency).collect();
            let (mean_efficiency, std_error_efficiency) = mean_and_stderr(&etas);
            EfficiencyRow {
                scheme: scheme.name.clone(),
                ratio: spec.reference_ratio,
                episodes: group.len(),
                mean_placements: group.iter().map(|r| r.summary.placements as f64).sum::<f64>() / n,
                mean_unique: group.iter().map(|r| r.summary.unique_placements as f64).sum::<f64>() / n,
                mean_exposure: mean_and_stderr(&exposures).0,
                mean_efficiency,
                std_error_efficiency,
            }
        })
        .collect();

    Ok(ExperimentResult {
        records,
        exposure,
        efficiency,
    })
}

/// Sample mean and standard error; the error needs at least two values.
pub fn mean_and_stderr(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

/// Scheme × ratio table of mean normalized exposure.
pub fn exposure_table(result: &ExperimentResult) -> String {
    let mut out = format!("{EXPOSURE_HEADER}\nscheme,ratio,episodes,undefined,mean_exposure,stderr_exposure\n");
    for c in &result.exposure {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.scheme,
            c.ratio,
            c.episodes,
            c.undefined,
            opt(c.mean),
            opt(c.std_error)
        );
    }
    out
}

/// Per-scheme S, U and η at the reference ratio.
pub fn efficiency_table(result: &ExperimentResult) -> String {
    let mut out = format!(
        "{EFFICIENCY_HEADER}\nscheme,ratio,episodes,mean_S,mean_U,mean_exposure,mean_eta,stderr_eta\n"
    );
    for r in &result.efficiency {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            r.ratio,
            r.episodes,
            r.mean_placements,
            r.mean_unique,
            opt(r.mean_exposure),
            opt(r.mean_efficiency),
            opt(r.std_error_efficiency)
        );
    }
    out
}

/// One row per episode.
pub fn episodes_table(result: &ExperimentResult) -> String {
    let mut out = format!(
        "{EPISODES_HEADER}\nscheme,ratio,seed,ticks,S,U,incurred,optimal,worst,exposure,eta,worst_heuristic\n"
    );
    for r in &result.records {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.ratio,
            r.seed,
            r.log.final_tick(),
            s.placements,
            s.unique_placements,
            s.incurred_cost,
            s.optimal_cost,
            s.worst_cost,
            opt(s.exposure),
            opt(s.efficiency),
            s.worst_heuristic
        );
    }
    out
}

/// Writes the three tables and every episode log under `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &FsPath) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, text) in [
        ("summary_exposure.csv", exposure_table(result)),
        ("summary_efficiency.csv", efficiency_table(result)),
        ("episodes.csv", episodes_table(result)),
    ] {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }
    for record in &result.records {
        let path = dir.join("logs").join(record.log_name());
        write_log(&path, &record.log)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_known_sample() {
        let (mean, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, Some(2.5));
        // sample variance 5/3, n = 4
        assert!((se.unwrap() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[7.0]), (Some(7.0), None));
        assert_eq!(mean_and_stderr(&[]), (None, None));
    }
}
