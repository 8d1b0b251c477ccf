use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

use super::study::RunResult;

pub const TRAJECTORY_HEADER: &str = "time_s,trial,node,algorithm,f_hat_hz,f_true_hz";
pub const SWEEP_HEADER: &str = "snr_db,node,algorithm,bias_hz,variance_hz2,trials";

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_error(path))
}

/// Writes every recorded trajectory, ordered by trial, node, algorithm, step.
/// Node ids are 1-based.
pub fn export_csv(result: &RunResult, path: &Path) -> Result<(), HarnessError> {
    let rate = result.config.sampling_rate_hz;
    write_file(path, |w| {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for trial in &result.trajectories {
            let nodes = trial.estimates.first().map_or(0, |(_, e)| e.len());
            for node in 0..nodes {
                for (alg, est) in &trial.estimates {
                    for (n, f) in est[node].iter().enumerate() {
                        writeln!(
                            w,
                            "{},{},{},{},{},{}",
                            n as f64 / rate,
                            trial.trial,
                            node + 1,
                            alg.name(),
                            f,
                            result.f_true[n]
                        )?;
                    }
                }
            }
        }
        Ok(())
    })
}

/// Writes steady-state bias and variance of one or more runs, each tagged
/// with its SNR (empty for noiseless runs).
pub fn export_metrics_csv(results: &[&RunResult], path: &Path) -> Result<(), HarnessError> {
    write_file(path, |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in results {
            let snr = r.config.snr_db.map_or(String::new(), |s| s.to_string());
            for a in &r.aggregates {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    snr,
                    a.node + 1,
                    a.algorithm.name(),
                    a.metrics.bias,
                    a.metrics.variance,
                    a.metrics.trials
                )?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ManifestEntry {
    label: String,
    config_hash: String,
    config_file: String,
    files: Vec<ManifestFile>,
}

#[derive(Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    run: Vec<ManifestEntry>,
}

/// Files written for a set of runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WrittenOutputs {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes each run's trajectories and metrics, its canonical config and a
/// `manifest.toml` tying every file to the config hash.
///
/// `combined_metrics` additionally writes all runs' metrics to one file.
pub fn write_outputs(
    dir: &Path,
    runs: &[(String, RunResult)],
    combined_metrics: Option<&str>,
) -> Result<WrittenOutputs, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut written = WrittenOutputs::default();
    let mut manifest = Manifest { run: Vec::new() };
    let digest = |p: &Path| -> Result<String, HarnessError> {
        let bytes = std::fs::read(p).map_err(io_error(p))?;
        Ok(hex::encode(Sha256::digest(bytes)))
    };
    for (label, result) in runs {
        let mut files = Vec::new();
        let config_file = format!("{label}.config.toml");
        let cpath = dir.join(&config_file);
        let toml = result.config.to_toml();
        write_file(&cpath, |w| w.write_all(toml.as_bytes()))?;
        written.files.push(cpath);
        if !result.trajectories.is_empty() {
            let name = format!("{label}_trajectories.csv");
            let p = dir.join(&name);
            export_csv(result, &p)?;
            files.push(ManifestFile { sha256: digest(&p)?, name });
            written.files.push(p);
        }
        let name = format!("{label}_metrics.csv");
        let p = dir.join(&name);
        export_metrics_csv(&[result], &p)?;
        files.push(ManifestFile { sha256: digest(&p)?, name });
        written.files.push(p);
        manifest.run.push(ManifestEntry {
            label: label.clone(),
            config_hash: result.config_hash.clone(),
            config_file,
            files,
        });
    }
    if let Some(name) = combined_metrics {
        let p = dir.join(name);
        let all: Vec<&RunResult> = runs.iter().map(|(_, r)| r).collect();
        export_metrics_csv(&all, &p)?;
        written.files.push(p);
    }
    let mpath = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serializes");
    write_file(&mpath, |w| w.write_all(text.as_bytes()))?;
    written.manifest = mpath;
    Ok(written)
}
