use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use moranrec::backward::{PartitionTrajectory, Variant};
use moranrec::expectation::{
    check_generator_duality, expected_sampling_all, fixation_2site, lde_conjugation_3site,
    lde_trajectory, IDENTITY_TOL,
};
use moranrec::forward::{EventMode, TrajectoryRecord};
use moranrec::measure::{format_weight, write_measure_csv};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Duality defects above this fail the check.
pub const DUALITY_FAIL: f64 = 1e-8;

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    files: Vec<FileEntry>,
    config: &'a RunConfig,
}

/// Collects the files of one run and writes the manifest last.
struct Outputs<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
    files: Vec<FileEntry>,
}

impl<'a> Outputs<'a> {
    fn new(cfg: &'a RunConfig, command: &'a str) -> CliResult<Self> {
        fs::create_dir_all(&cfg.output)
            .map_err(|e| CliError::io(format!("creating {}", cfg.output.display()), e))?;
        Ok(Outputs {
            cfg,
            command,
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut Vec<u8>) -> moranrec::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path: PathBuf = self.cfg.output.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("creating {}", parent.display()), e))?;
        }
        fs::write(&path, &buf).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
        });
        Ok(())
    }

    fn finish(self) -> CliResult<()> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.cfg.seed,
            config_hash: self.cfg.hash(),
            files: self.files,
            config: self.cfg,
        };
        let text = toml::to_string(&manifest).expect("serialisable");
        let path = self.cfg.output.join(format!("manifest-{}.toml", self.command));
        fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

fn csv_io(e: impl std::fmt::Display) -> moranrec::Error {
    moranrec::Error::Io(e.to_string())
}

pub fn simulate_forward(cfg: &RunConfig) -> CliResult<()> {
    let model = cfg.forward()?;
    let z0 = cfg.population()?;
    let mode = if cfg.exact_events {
        EventMode::Exact
    } else {
        EventMode::Thinned
    };
    let trajectories: Vec<TrajectoryRecord> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| model.simulate(&z0, cfg.t_end, cfg.seed, r, mode))
        .collect::<moranrec::Result<_>>()?;
    let mut out = Outputs::new(cfg, "simulate-forward")?;
    if cfg.write_trajectories {
        for t in &trajectories {
            out.write(&format!("forward/rep_{:05}.csv", t.replicate), |w| t.write_csv(w))?;
        }
    }
    let n = z0.size() as f64;
    let space = z0.space().clone();
    let times = if trajectories.is_empty() { vec![0.0] } else { cfg.times() };
    out.write("forward_summary.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["time", "type", "mean", "se"]).map_err(csv_io)?;
        let states: Vec<Vec<_>> = times
            .iter()
            .map(|&t| trajectories.iter().map(|tr| tr.state_at(t)).collect())
            .collect();
        for (t, at) in times.iter().zip(&states) {
            for x in 0..space.num_types() {
                let (mean, se) = if at.is_empty() {
                    (z0.count(x) as f64 / n, 0.0)
                } else {
                    mean_se(at.iter().map(|z| z.count(x) as f64 / n))
                };
                csv.write_record([format_weight(*t), space.format_type(x), format_weight(mean), format_weight(se)])
                    .map_err(csv_io)?;
            }
        }
        csv.flush().map_err(csv_io)
    })?;
    println!(
        "simulate-forward: {} replicates, summary in {}",
        cfg.replicates,
        cfg.output.join("forward_summary.csv").display()
    );
    out.finish()
}

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn simulate_backward(cfg: &RunConfig) -> CliResult<()> {
    let model = cfg.backward()?;
    let sigma0 = cfg.initial_partition()?;
    let paths: Vec<PartitionTrajectory> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| model.simulate(&sigma0, cfg.t_end, cfg.seed, r, cfg.exact_events))
        .collect::<moranrec::Result<_>>()?;
    let mut out = Outputs::new(cfg, "simulate-backward")?;
    if cfg.write_trajectories {
        for p in &paths {
            out.write(&format!("backward/rep_{:05}.csv", p.replicate), |w| p.write_csv(w))?;
        }
    }
    let times = if paths.is_empty() { vec![0.0] } else { cfg.times() };
    out.write("backward_summary.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["time", "partition", "frequency"]).map_err(csv_io)?;
        for &t in &times {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            if paths.is_empty() {
                counts.insert(sigma0.to_string(), 1);
            }
            for p in &paths {
                *counts.entry(p.state_at(t).to_string()).or_default() += 1;
            }
            let total: u64 = counts.values().sum();
            for (a, c) in counts {
                csv.write_record([format_weight(t), a, format_weight(c as f64 / total as f64)])
                    .map_err(csv_io)?;
            }
        }
        csv.flush().map_err(csv_io)
    })?;
    println!(
        "simulate-backward ({}): {} replicates, summary in {}",
        model.variant(),
        cfg.replicates,
        cfg.output.join("backward_summary.csv").display()
    );
    out.finish()
}

pub fn expectations(cfg: &RunConfig) -> CliResult<()> {
    let model = cfg.backward()?;
    let z0 = cfg.population()?;
    let traj = expected_sampling_all(&model, &z0, &cfg.times())?;
    let mut out = Outputs::new(cfg, "expectations")?;
    out.write("expectations.csv", |w| traj.write_csv(w))?;
    println!(
        "expectations ({}): {} partitions x {} times in {}",
        model.variant(),
        traj.partitions.len(),
        traj.times.len(),
        cfg.output.join("expectations.csv").display()
    );
    out.finish()
}

pub fn lde(cfg: &RunConfig) -> CliResult<()> {
    let model = cfg.backward()?;
    let mut out = Outputs::new(cfg, "lde")?;
    if cfg.initial_population.is_some() {
        let z0 = cfg.population()?;
        let traj = lde_trajectory(&model, &z0, cfg.lde_sites(), &cfg.times())?;
        out.write("lde.csv", |w| traj.write_csv(w))?;
    }
    if model.n_sites() == 3 {
        let tr = lde_conjugation_3site(&model)?;
        let report = tr.report();
        out.write("lde_report.txt", |w| w.write_all(report.as_bytes()).map_err(csv_io))?;
        print!("{report}");
    } else if cfg.initial_population.is_none() {
        return Err(CliError::Validation(
            "lde: give `initial_population` (the transform report needs exactly 3 sites)".into(),
        ));
    }
    out.finish()
}

pub fn duality_check(cfg: &RunConfig) -> CliResult<()> {
    if cfg.variant()? != Variant::FiniteN {
        return Err(CliError::Validation(
            "duality-check compares the population process with the finite-population partitioning process; use variant = \"finite\"".into(),
        ));
    }
    let forward = cfg.forward()?;
    let backward = cfg.backward()?;
    let rep = check_generator_duality(&forward, &backward, cfg.state_cap)?;
    let verdict = if rep.defect < IDENTITY_TOL {
        format!("defect < {IDENTITY_TOL:.0e}")
    } else {
        format!("defect >= {IDENTITY_TOL:.0e}")
    };
    let text = format!(
        "population states: {}\npartitions: {}\nmax defect: {:.3e}\n{verdict}\n",
        rep.n_states, rep.n_partitions, rep.defect
    );
    let mut out = Outputs::new(cfg, "duality-check")?;
    out.write("duality.txt", |w| w.write_all(text.as_bytes()).map_err(csv_io))?;
    out.finish()?;
    print!("{text}");
    if rep.defect > DUALITY_FAIL {
        return Err(CliError::CheckFailed(format!(
            "duality defect {:.3e} exceeds {DUALITY_FAIL:.0e}",
            rep.defect
        )));
    }
    Ok(())
}

pub fn fixation(cfg: &RunConfig) -> CliResult<()> {
    let forward = cfg.forward()?;
    let z0 = cfg.population()?;
    let fix = fixation_2site(&forward, &z0)?;
    let mut out = Outputs::new(cfg, "fixation")?;
    out.write("fixation.csv", |w| write_measure_csv(&fix, w))?;
    for x in 0..fix.len() {
        println!("{} {}", fix.format_type(x), format_weight(fix.weight(x)));
    }
    out.finish()
}
