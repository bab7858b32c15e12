//! Experiment orchestration and result files.
//!
//! Every command writes into the output directory:
//! - a results CSV with the columns in [`CSV_HEADER`],
//! - `resolved_config.toml`, which reproduces the run when fed back in,
//! - `manifest.json` with the seeds and files of the run.
//!
//! `run` also writes `cdf.csv` (`scheme,density,mbps,cdf`), the pooled
//! per-user throughput CDF. Sweep points are cached under `points/` keyed
//! by a hash of the configuration, so an interrupted sweep resumes where it
//! stopped.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use densewlan::association::Scheme;
use densewlan::simcore::{self, DynamicSummary, MonteCarlo, SchemeSummary};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

pub const CSV_HEADER: [&str; 12] = [
    "scheme", "density", "n_sta", "n_ap", "agg_mbps", "util_sum", "p10", "p50", "p90", "ci_lo", "ci_hi", "seed",
];

/// One row of the results table. `n_sta`/`n_ap` are means over
/// realizations; `ci_lo`/`ci_hi` bound the mean aggregate throughput.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub density: f64,
    pub n_sta: f64,
    pub n_ap: f64,
    pub agg_mbps: f64,
    pub util_sum: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_summary(s: &SchemeSummary, density: f64, seed: u64) -> Self {
        Self {
            scheme: s.scheme.name().to_string(),
            density,
            n_sta: s.mean_n_sta,
            n_ap: s.mean_n_ap,
            agg_mbps: s.agg_mbps.mean,
            util_sum: s.util_sum.mean,
            p10: s.p10.mean,
            p50: s.p50.mean,
            p90: s.p90.mean,
            ci_lo: s.agg_mbps.ci_lo,
            ci_hi: s.agg_mbps.ci_hi,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub scheme: String,
    pub density: f64,
    pub mbps: f64,
    pub cdf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Run,
    Sweep,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub density: f64,
    pub first_seed: u64,
    pub n_realizations: usize,
    pub file: PathBuf,
    pub resumed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub points: Vec<PointRecord>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gda_mismatched_epochs: Option<usize>,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let tmp = path.with_extension("csv.part");
    {
        let mut w = csv::Writer::from_path(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        anyhow::bail!("{} does not have the results header", path.display());
    }
    r.deserialize().map(|row| row.map_err(anyhow::Error::from)).collect()
}

/// Runs the Monte Carlo at one STA density.
pub fn run_point(cfg: &ScenarioConfig, density: f64) -> Result<MonteCarlo> {
    let mut params = cfg.scenario_params();
    params.intensities.eta_n = density;
    Ok(simcore::run_monte_carlo(
        &params,
        &cfg.schemes,
        &cfg.sim_params(),
        cfg.simulation.n_realizations,
        cfg.seed,
    )?)
}

pub fn rows_for(mc: &MonteCarlo, density: f64) -> Vec<ResultRow> {
    mc.summaries.iter().map(|s| ResultRow::from_summary(s, density, mc.base_seed)).collect()
}

pub fn cdf_rows(mc: &MonteCarlo, density: f64) -> Vec<CdfRow> {
    mc.summaries
        .iter()
        .flat_map(|s| {
            let c = simcore::per_user_cdf(&mc.pooled_users(s.scheme));
            let name = s.scheme.name().to_string();
            c.values
                .into_iter()
                .zip(c.probabilities)
                .map(move |(mbps, cdf)| CdfRow {
                    scheme: name.clone(),
                    density,
                    mbps,
                    cdf,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Hash of everything that determines a sweep point's results.
fn point_key(cfg: &ScenarioConfig, density: f64) -> u64 {
    let mut c = cfg.clone();
    c.out = PathBuf::new();
    c.sweep.densities.clear();
    c.dynamic = Default::default();
    c.topology.eta_n = density;
    let mut h = DefaultHasher::new();
    c.to_toml().hash(&mut h);
    h.finish()
}

pub fn dynamic_rows(cfg: &ScenarioConfig, summaries: &[DynamicSummary]) -> Vec<ResultRow> {
    summaries
        .iter()
        .flat_map(|e| {
            let density = e.mean_n_sta / cfg.topology.n_ref;
            e.per_scheme.iter().map(move |s| ResultRow::from_summary(s, density, cfg.seed))
        })
        .collect()
}

/// Executes `command` and writes its outputs under `cfg.out`.
pub fn run_experiment(cfg: &ScenarioConfig, command: Command) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = Vec::new();
    let mut points = Vec::new();
    let mut gda_mismatched_epochs = None;
    match command {
        Command::Run => {
            let d = cfg.topology.eta_n;
            let mc = run_point(cfg, d)?;
            let results = out.join("results.csv");
            write_rows(&results, &rows_for(&mc, d))?;
            let cdf = out.join("cdf.csv");
            write_rows(&cdf, &cdf_rows(&mc, d))?;
            points.push(PointRecord {
                density: d,
                first_seed: cfg.seed,
                n_realizations: cfg.simulation.n_realizations,
                file: results.clone(),
                resumed: false,
            });
            outputs.extend([results, cdf]);
        }
        Command::Sweep => {
            let dir = out.join("points");
            fs::create_dir_all(&dir)?;
            let mut all = Vec::new();
            for &d in &cfg.sweep.densities {
                let file = dir.join(format!("density_{d}_{:016x}.csv", point_key(cfg, d)));
                let cached = file.exists().then(|| read_rows(&file)).transpose().ok().flatten();
                let (rows, resumed) = match cached {
                    Some(rows) if rows.len() == cfg.schemes.len() => (rows, true),
                    _ => {
                        let rows = rows_for(&run_point(cfg, d)?, d);
                        write_rows(&file, &rows)?;
                        (rows, false)
                    }
                };
                all.extend(rows);
                points.push(PointRecord {
                    density: d,
                    first_seed: cfg.seed,
                    n_realizations: cfg.simulation.n_realizations,
                    file,
                    resumed,
                });
            }
            let sweep = out.join("sweep.csv");
            write_rows(&sweep, &all)?;
            outputs.push(sweep);
        }
        Command::Dynamic => {
            let summaries = simcore::run_dynamic_monte_carlo(
                &cfg.scenario_params(),
                &cfg.dynamic_params(),
                &cfg.dynamic.schemes,
                &cfg.sim_params(),
                cfg.dynamic.n_realizations,
                cfg.seed,
            )?;
            gda_mismatched_epochs = Some(summaries.iter().map(|s| s.gda_mismatches).sum());
            let file = out.join("dynamic.csv");
            write_rows(&file, &dynamic_rows(cfg, &summaries))?;
            outputs.push(file);
        }
    }
    let resolved = out.join("resolved_config.toml");
    fs::write(&resolved, cfg.to_toml())?;
    outputs.push(resolved);
    let manifest = Manifest {
        tool: "densewlan".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: cfg.seed,
        config: cfg.clone(),
        points,
        outputs,
        gda_mismatched_epochs,
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Dry-run report: the resolved configuration with every default filled
/// in, or the first validation error.
pub fn validate_report(cfg: &ScenarioConfig) -> Result<String> {
    cfg.validate()?;
    let p = cfg.scenario_params();
    let schemes: Vec<&str> = cfg.schemes.iter().map(|s: &Scheme| s.name()).collect();
    Ok(format!(
        "configuration OK\n# expected STAs {:.1}, APs {:.1}; carrier-sense range {:.1} m; schemes {}\n{}",
        p.intensities.eta_n * p.intensities.n_ref,
        p.intensities.eta_m * p.intensities.n_ref,
        p.radio.effective_csr_m(),
        schemes.join(","),
        cfg.to_toml()
    ))
}
