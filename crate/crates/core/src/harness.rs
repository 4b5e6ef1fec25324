//! Monte Carlo accuracy sweeps over `(noise, dt, T)` cells.
//!
//! Every realization gets its own RNG stream derived from the plan's base
//! seed and the cell coordinates, so results do not depend on scheduling or
//! on which other cells are in the plan.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_f64_list, KvFile};
use crate::error::{Error, Result};
use crate::excursion::{classify, Class, ClassifierConfig, GridChoice};
use crate::systems::{mix64, simulate, Noise, SystemKind, SystemSpec};
use crate::trajectory::Label;

/// Every cell must hold at least this many samples per realization.
pub const MIN_SAMPLES_PER_CELL: f64 = 100.0;

pub const HIST_LO: f64 = -4.0;
pub const HIST_HI: f64 = 1.0;
pub const HIST_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub kind: SystemKind,
    /// Overrides of the kind's default parameters.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub dt_grid: Vec<f64>,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    pub noise_levels: Vec<Noise>,
    pub reps: usize,
    pub base_seed: u64,
    pub grid_points: usize,
}

impl SweepPlan {
    /// Plan with desk-scale default grids and 50 repetitions.
    pub fn new(kind: SystemKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
            dt_grid: vec![1e-3, 5e-3, 1e-2, 5e-2],
            t_grid: vec![10.0, 50.0, 100.0, 500.0],
            noise_levels: vec![if kind.is_stochastic() { Noise::R(1.0) } else { Noise::None }],
            reps: 50,
            base_seed: 0,
            grid_points: 24,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt_grid.is_empty() || self.t_grid.is_empty() || self.noise_levels.is_empty() {
            return Err(Error::invalid("dt, T and noise grids must be nonempty"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.grid_points < 8 {
            return Err(Error::invalid("grid_points must be at least 8"));
        }
        for &dt in &self.dt_grid {
            for &t in &self.t_grid {
                if !(dt > 0.0 && t >= MIN_SAMPLES_PER_CELL * dt) {
                    return Err(Error::invalid(format!(
                        "cell dt={dt}, T={t} violates T >= {MIN_SAMPLES_PER_CELL}*dt"
                    )));
                }
            }
        }
        for &noise in &self.noise_levels {
            self.spec_for(noise, self.dt_grid[0], self.t_grid[0], 0).validate()?;
        }
        Ok(())
    }

    /// Cells in output order: noise outermost, then dt, then T.
    pub fn cells(&self) -> Vec<(Noise, f64, f64)> {
        let mut out = Vec::new();
        for &noise in &self.noise_levels {
            for &dt in &self.dt_grid {
                for &t in &self.t_grid {
                    out.push((noise, dt, t));
                }
            }
        }
        out
    }

    fn spec_for(&self, noise: Noise, dt: f64, t_total: f64, seed: u64) -> SystemSpec {
        let mut spec = SystemSpec::new(self.kind, dt, t_total, seed).with_noise(noise);
        spec.params.extend(self.params.iter().map(|(k, v)| (k.clone(), *v)));
        spec
    }

    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            grid: GridChoice::Auto {
                points: self.grid_points,
            },
            ..ClassifierConfig::default()
        }
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let (kind_line, kind) = kv.require("kind")?;
        let kind = SystemKind::from_str(kind).map_err(|e| Error::parse(kind_line, e.to_string()))?;
        let mut plan = SweepPlan::new(kind);

        let list = |key: &str| -> Result<Option<Vec<f64>>> {
            kv.get(key)
                .map(|(line, v)| parse_f64_list(v).map_err(|m| Error::parse(line, format!("{key}: {m}"))))
                .transpose()
        };
        let int = |key: &str| -> Result<Option<u64>> {
            kv.get(key)
                .map(|(line, v)| {
                    v.parse::<u64>()
                        .map_err(|_| Error::parse(line, format!("{key}: '{v}' is not an unsigned integer")))
                })
                .transpose()
        };

        if let Some(v) = list("dt_grid")? {
            plan.dt_grid = v;
        }
        if let Some(v) = list("T_grid")? {
            plan.t_grid = v;
        }
        match (list("snr_db")?, list("R")?) {
            (Some(_), Some(_)) => {
                return Err(Error::parse(kv.line_of("R"), "give either snr_db or R, not both"))
            }
            (Some(s), None) => {
                plan.noise_levels = s
                    .into_iter()
                    .map(|v| if v == f64::INFINITY { Noise::None } else { Noise::SnrDb(v) })
                    .collect()
            }
            (None, Some(r)) => plan.noise_levels = r.into_iter().map(Noise::R).collect(),
            (None, None) => {}
        }
        if let Some(v) = int("reps")? {
            plan.reps = v as usize;
        }
        if let Some(v) = int("base_seed")? {
            plan.base_seed = v;
        }
        if let Some(v) = int("grid_points")? {
            plan.grid_points = v as usize;
        }
        let allowed = kind.default_params();
        for (line, key, value) in kv.with_prefix("param.") {
            if !allowed.contains_key(key) {
                return Err(Error::parse(line, format!("unknown parameter 'param.{key}' for {kind}")));
            }
            let v = crate::config::parse_f64(value).map_err(|m| Error::parse(line, format!("param.{key}: {m}")))?;
            plan.params.insert(key.to_string(), v);
        }
        kv.reject_unused()?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Seed of one realization; depends only on the base seed, the cell's
/// coordinates and the repetition index.
pub fn realization_seed(base_seed: u64, noise: Noise, dt: f64, t_total: f64, rep: usize) -> u64 {
    let noise_tag = match noise {
        Noise::None => 0,
        Noise::SnrDb(v) => mix64(1 ^ v.to_bits()),
        Noise::R(v) => mix64(2 ^ v.to_bits()),
    };
    let mut h = mix64(base_seed);
    for part in [noise_tag, dt.to_bits(), t_total.to_bits(), rep as u64] {
        h = mix64(h ^ part);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub noise: Noise,
    pub accuracy: f64,
    pub n_reps: usize,
    /// Realizations whose simulation failed; they count as incorrect.
    pub n_failed: usize,
    pub n_diffusive: usize,
    pub slope_mean: Option<f64>,
    pub slope_sd: Option<f64>,
    pub slopes: Vec<f64>,
}

impl CellRecord {
    pub fn n_correct(&self) -> usize {
        (self.accuracy * self.n_reps as f64).round() as usize
    }

    /// Fraction of realizations classified diffusive, whatever the truth.
    pub fn diffusive_fraction(&self) -> f64 {
        self.n_diffusive as f64 / self.n_reps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub cells: Vec<CellRecord>,
    pub elapsed_secs: f64,
}

impl SweepResult {
    pub fn any_failures(&self) -> bool {
        self.cells.iter().any(|c| c.n_failed > 0)
    }
}

/// Outcome of a single realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub class: Class,
    pub slope: Option<f64>,
    pub failed: bool,
}

pub fn run_realization(plan: &SweepPlan, config: &ClassifierConfig, noise: Noise, dt: f64, t_total: f64, rep: usize) -> Outcome {
    let seed = realization_seed(plan.base_seed, noise, dt, t_total, rep);
    let spec = plan.spec_for(noise, dt, t_total, seed);
    let failed = Outcome {
        class: Class::Indeterminate,
        slope: None,
        failed: true,
    };
    let Ok(series) = simulate(&spec) else {
        return failed;
    };
    match classify(&series.trajectory, config) {
        Ok(v) => Outcome {
            class: v.class,
            slope: v.slope(),
            failed: false,
        },
        Err(_) => failed,
    }
}

fn matches_truth(class: Class, truth: Label) -> bool {
    matches!(
        (class, truth),
        (Class::Diffusive, Label::Diffusive) | (Class::NonDiffusive, Label::Deterministic)
    )
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    run_sweep_with_progress(plan, |_, _, _| {})
}

/// Like [`run_sweep`], calling `progress(done, total, cell)` after each cell.
pub fn run_sweep_with_progress<F>(plan: &SweepPlan, mut progress: F) -> Result<SweepResult>
where
    F: FnMut(usize, usize, &CellRecord),
{
    plan.validate()?;
    let start = Instant::now();
    let config = plan.classifier();
    let truth = plan.kind.ground_truth();
    let cells = plan.cells();
    let total = cells.len();
    let mut records = Vec::with_capacity(total);

    for (i, &(noise, dt, t_total)) in cells.iter().enumerate() {
        let outcomes: Vec<Outcome> = (0..plan.reps)
            .into_par_iter()
            .map(|rep| run_realization(plan, &config, noise, dt, t_total, rep))
            .collect();
        let correct = outcomes.iter().filter(|o| matches_truth(o.class, truth)).count();
        let slopes: Vec<f64> = outcomes.iter().filter_map(|o| o.slope).collect();
        let (slope_mean, slope_sd) = mean_sd(&slopes);
        let record = CellRecord {
            dt,
            t_total,
            noise,
            accuracy: correct as f64 / plan.reps as f64,
            n_reps: plan.reps,
            n_failed: outcomes.iter().filter(|o| o.failed).count(),
            n_diffusive: outcomes.iter().filter(|o| o.class == Class::Diffusive).count(),
            slope_mean,
            slope_sd,
            slopes,
        };
        progress(i + 1, total, &record);
        records.push(record);
    }

    Ok(SweepResult {
        plan: plan.clone(),
        cells: records,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeHistogram {
    pub slopes: Vec<f64>,
    /// Counts per bin of width [`HIST_WIDTH`] starting at [`HIST_LO`].
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
    /// Realizations without a slope (failed simulation or no fit).
    pub missing: usize,
}

impl SlopeHistogram {
    pub fn n_bins() -> usize {
        ((HIST_HI - HIST_LO) / HIST_WIDTH).round() as usize
    }

    pub fn from_slopes(slopes: Vec<f64>, missing: usize) -> Self {
        let n_bins = Self::n_bins();
        let mut counts = vec![0; n_bins];
        let (mut below, mut above) = (0, 0);
        for &s in &slopes {
            if s < HIST_LO {
                below += 1;
            } else if s >= HIST_HI {
                above += 1;
            } else {
                let b = (((s - HIST_LO) / HIST_WIDTH).floor() as usize).min(n_bins - 1);
                counts[b] += 1;
            }
        }
        Self {
            slopes,
            counts,
            below,
            above,
            missing,
        }
    }

    /// `[lo, hi)` of bin `i`.
    pub fn bin_edges(i: usize) -> (f64, f64) {
        let lo = HIST_LO + i as f64 * HIST_WIDTH;
        (lo, lo + HIST_WIDTH)
    }

    /// Fullest bin, lowest index on ties; `None` if nothing was binned.
    pub fn mode_bin(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        if max == 0 {
            return None;
        }
        self.counts.iter().position(|&c| c == max)
    }

    /// Center of the fullest bin.
    pub fn mode(&self) -> Option<f64> {
        self.mode_bin().map(|i| {
            let (lo, hi) = Self::bin_edges(i);
            0.5 * (lo + hi)
        })
    }
}

/// Fitted slopes of `reps` realizations of one cell, binned.
pub fn slope_histogram(
    kind: SystemKind,
    noise: Noise,
    dt: f64,
    t_total: f64,
    reps: usize,
    base_seed: u64,
) -> Result<SlopeHistogram> {
    if reps < 30 {
        return Err(Error::invalid(format!("slope histogram needs reps >= 30, got {reps}")));
    }
    let plan = SweepPlan {
        dt_grid: vec![dt],
        t_grid: vec![t_total],
        noise_levels: vec![noise],
        reps,
        base_seed,
        ..SweepPlan::new(kind)
    };
    plan.validate()?;
    let config = plan.classifier();
    let outcomes: Vec<Outcome> = (0..reps)
        .into_par_iter()
        .map(|rep| run_realization(&plan, &config, noise, dt, t_total, rep))
        .collect();
    let slopes: Vec<f64> = outcomes.iter().filter_map(|o| o.slope).collect();
    let missing = reps - slopes.len();
    Ok(SlopeHistogram::from_slopes(slopes, missing))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::invalid(format!("unknown format '{other}'; expected csv or json"))),
        }
    }
}

pub const CSV_HEADER: &str = "dt,T,noise,accuracy,n_reps,slope_mean,slope_sd";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn noise_cell(n: Noise) -> String {
    n.value().map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// One row per cell; floats use the shortest round-trip representation.
pub fn results_to_csv(result: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for c in &result.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.dt,
            c.t_total,
            noise_cell(c.noise),
            c.accuracy,
            c.n_reps,
            opt(c.slope_mean),
            opt(c.slope_sd)
        );
    }
    s
}

pub fn results_to_json(result: &SweepResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn results_from_json(text: &str) -> Result<SweepResult> {
    Ok(serde_json::from_str(text)?)
}

pub fn export_results(result: &SweepResult, path: &Path, format: ExportFormat) -> Result<()> {
    let body = match format {
        ExportFormat::Csv => results_to_csv(result),
        ExportFormat::Json => results_to_json(result)? + "\n",
    };
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn import_results(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    results_from_json(&text)
}
