//! Parameter sweeps: a Cartesian grid over (source ratio, gap factor,
//! neighborhood size), repeated trials per cell, and aggregation to
//! per-cell means and sample standard deviations.
//!
//! Reproducibility contract: the spec plus `base_seed` determine every
//! output byte. Each trial's seed is a fixed hash of the base seed, the
//! cell's parameter bits, and the trial index, so trials are independent of
//! scheduling, of the `jobs` knob, and of which other cells the spec
//! contains.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::run_trial;
use crate::metrics::{self, compute_report, MetricsReport};
use crate::world::{
    broadcast_radius, sample_deployment, sources_from_ratio, WorldConfig, WorldError,
};

/// Default base seed for sweeps; override for independent replications.
pub const DEFAULT_BASE_SEED: u64 = 0x5EED_BA5E;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed results CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn default_unit() -> f64 {
    1.0
}

fn default_base_seed() -> u64 {
    DEFAULT_BASE_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: usize,
    #[serde(default = "default_unit")]
    pub disc_radius: f64,
    #[serde(default = "default_unit")]
    pub sink_power: f64,
    #[serde(default = "default_unit")]
    pub wave_speed: f64,
    /// Source ratios n*/n, each in (0, 1].
    pub ratios: Vec<f64>,
    pub f_values: Vec<f64>,
    pub n_r_values: Vec<f64>,
    /// Trials per grid cell.
    pub trials: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    /// Worker threads; 0 means one per core. Never affects output bytes.
    #[serde(default)]
    pub jobs: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let fail = |m: String| Err(SweepError::Invalid(m));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        for (name, v) in [
            ("disc_radius", self.disc_radius),
            ("sink_power", self.sink_power),
            ("wave_speed", self.wave_speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.ratios.is_empty() || self.f_values.is_empty() || self.n_r_values.is_empty() {
            return fail("ratios, f_values, and n_r_values must be nonempty".into());
        }
        for &ratio in &self.ratios {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return fail(format!("ratio must be in (0, 1], got {ratio}"));
            }
        }
        for &f in &self.f_values {
            if !(0.0..=1.0).contains(&f) {
                return fail(format!("f must be in [0, 1], got {f}"));
            }
        }
        for &n_r in &self.n_r_values {
            if !(n_r > 0.0 && n_r <= self.n as f64) {
                return fail(format!("n_r must be in (0, {}], got {n_r}", self.n));
            }
        }
        Ok(())
    }

    /// Grid cells in output order: ratio-major, then f, then n_r.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::with_capacity(self.ratios.len() * self.f_values.len() * self.n_r_values.len());
        for &ratio in &self.ratios {
            for &f in &self.f_values {
                for &n_r in &self.n_r_values {
                    cells.push(Cell { ratio, f, n_r });
                }
            }
        }
        cells
    }
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub ratio: f64,
    pub f: f64,
    pub n_r: f64,
}

/// The studied grid: n = 2000, ratios a*10^-b for a in {1,2,5} and
/// b in {1,2,3}, f in {0.1, 0.3, 0.5}, n_r in {9, 11, 13, 15}, 200 trials
/// per cell.
pub fn default_sweep_spec() -> SweepSpec {
    SweepSpec {
        n: 2000,
        disc_radius: 1.0,
        sink_power: 1.0,
        wave_speed: 1.0,
        ratios: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
        f_values: vec![0.1, 0.3, 0.5],
        n_r_values: vec![9.0, 11.0, 13.0, 15.0],
        trials: 200,
        base_seed: DEFAULT_BASE_SEED,
        jobs: 0,
    }
}

/// SplitMix64 finalizer; full avalanche on 64 bits.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A cell's seed key is a hash of its parameter bits, not of its position
/// in the grid, so removing cells from a spec leaves the others' trials
/// untouched.
pub fn cell_key(cell: &Cell) -> u64 {
    mix64(mix64(mix64(cell.ratio.to_bits()) ^ cell.f.to_bits()) ^ cell.n_r.to_bits())
}

/// Per-trial seed: chained SplitMix64 over (base seed, cell key, trial).
pub fn mix_seed(base_seed: u64, cell_key: u64, trial_index: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ cell_key) ^ trial_index)
}

/// One aggregated output row; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub f: f64,
    pub n_r: f64,
    /// Broadcast radius implied by n_r.
    pub r: f64,
    pub ratio: f64,
    pub n_star: usize,
    pub trials: usize,
    pub cf_mean: f64,
    pub cf_sd: f64,
    pub pr_mean: f64,
    pub pr_sd: f64,
    pub tr_mean: f64,
    pub tr_sd: f64,
    /// Mean power ratio rescaled by n_r.
    pub energy_index: f64,
}

/// One trial's indicators, for the optional per-trial dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub ratio: f64,
    pub f: f64,
    pub n_r: f64,
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

/// Welford's online mean and variance, pushed in trial order.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn sample_sd(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }
}

/// Run the sweep and aggregate. Rows come back in cell order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    Ok(run_sweep_full(spec)?.0)
}

/// Like [`run_sweep`] but also returns every trial's indicators in
/// deterministic (cell, trial) order.
pub fn run_sweep_full(spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<TrialRecord>), SweepError> {
    spec.validate()?;
    let cells = spec.cells();

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();

    let run_all = || -> Result<Vec<TrialRecord>, SweepError> {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(cell_index, trial)| {
                let cell = &cells[cell_index];
                let seed = mix_seed(spec.base_seed, cell_key(cell), trial as u64);
                let config = WorldConfig {
                    disc_radius: spec.disc_radius,
                    sink_power: spec.sink_power,
                    wave_speed: spec.wave_speed,
                    n_sensors: spec.n,
                    n_sources: sources_from_ratio(cell.ratio, spec.n)?,
                    gap_factor: cell.f,
                    expected_neighbors: cell.n_r,
                    seed,
                };
                let deployment = sample_deployment(&config)?;
                let outcome = run_trial(&deployment);
                Ok(TrialRecord {
                    ratio: cell.ratio,
                    f: cell.f,
                    n_r: cell.n_r,
                    trial,
                    seed,
                    metrics: compute_report(&outcome, config.n_sources),
                })
            })
            .collect()
    };

    let records = if spec.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| SweepError::Invalid(format!("cannot build a {} -thread pool: {e}", spec.jobs)))?
            .install(run_all)?
    } else {
        run_all()?
    };

    let mut rows = Vec::with_capacity(cells.len());
    for (cell_index, cell) in cells.iter().enumerate() {
        let mut cf = Accumulator::default();
        let mut pr = Accumulator::default();
        let mut tr = Accumulator::default();
        for record in &records[cell_index * spec.trials..(cell_index + 1) * spec.trials] {
            cf.push(record.metrics.connected_fraction);
            pr.push(record.metrics.power_ratio);
            tr.push(record.metrics.treeness);
        }
        rows.push(SweepRow {
            f: cell.f,
            n_r: cell.n_r,
            r: broadcast_radius(cell.n_r, spec.n, spec.disc_radius)?,
            ratio: cell.ratio,
            n_star: sources_from_ratio(cell.ratio, spec.n)?,
            trials: spec.trials,
            cf_mean: cf.mean(),
            cf_sd: cf.sample_sd(),
            pr_mean: pr.mean(),
            pr_sd: pr.sample_sd(),
            tr_mean: tr.mean(),
            tr_sd: tr.sample_sd(),
            energy_index: metrics::energy_index(pr.mean(), cell.n_r),
        });
    }
    Ok((rows, records))
}

/// CSV with the fixed header
/// `f,n_r,r,ratio,n_star,trials,cf_mean,cf_sd,pr_mean,pr_sd,tr_mean,tr_sd,energy_index`.
pub fn emit_csv(rows: &[SweepRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory CSV writes cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory CSV writes cannot fail"))
        .expect("CSV output is UTF-8")
}

/// Parse rows back from [`emit_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, SweepError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Result<Vec<SweepRow>, csv::Error> = reader.deserialize().collect();
    Ok(rows?)
}

const INDICATORS: [(&str, fn(&SweepRow) -> f64); 3] = [
    ("connected_fraction", |r| r.cf_mean),
    ("power_ratio", |r| r.pr_mean),
    ("treeness", |r| r.tr_mean),
];

/// Plot-ready data grouped the way results are read: one file per
/// (indicator, n_r), one column per f, the ratio on a log axis.
pub fn plot_data(rows: &[SweepRow]) -> Vec<(String, String)> {
    let mut n_r_values: Vec<f64> = rows.iter().map(|r| r.n_r).collect();
    n_r_values.sort_by(f64::total_cmp);
    n_r_values.dedup();
    let mut f_values: Vec<f64> = rows.iter().map(|r| r.f).collect();
    f_values.sort_by(f64::total_cmp);
    f_values.dedup();
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();

    let mut files = Vec::new();
    for (indicator, extract) in INDICATORS {
        for &n_r in &n_r_values {
            let mut content = format!(
                "# mean {indicator} vs source ratio at n_r = {n_r}; plot with a logarithmic ratio axis\n"
            );
            content.push_str("# ratio");
            for &f in &f_values {
                content.push_str(&format!(" f={f}"));
            }
            content.push('\n');
            for &ratio in &ratios {
                let mut line = format!("{ratio}");
                let mut any = false;
                for &f in &f_values {
                    let value = rows
                        .iter()
                        .find(|r| r.n_r == n_r && r.f == f && r.ratio == ratio)
                        .map(extract);
                    match value {
                        Some(v) => {
                            any = true;
                            line.push_str(&format!(" {v}"));
                        }
                        None => line.push_str(" nan"),
                    }
                }
                if any {
                    content.push_str(&line);
                    content.push('\n');
                }
            }
            files.push((format!("{indicator}_nr{n_r}.dat"), content));
        }
    }
    files
}

/// Write [`plot_data`] files under `dir`, creating it if needed.
pub fn write_plot_files(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SweepError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, content) in plot_data(rows) {
        let path = dir.join(name);
        let mut file = std::fs::File::create(&path).map_err(io_err(&path))?;
        file.write_all(content.as_bytes()).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
