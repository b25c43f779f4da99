//! Experiment orchestration: configuration, single runs, amplitude sweeps,
//! run records and plot data.

mod config;
mod plot;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{canonical_text, load_config, parse_config, DataSpec, ExperimentConfig, Family, KEYS};
pub use plot::emit_plotdata;

use crate::classify::{
    blowup_monitor, classify_run, threshold_report, trapping_monitor, MonitorResult, RunVerdict, ThresholdReport,
    VerdictThresholds,
};
use crate::diagnostics::{read_csv, virial_rhs_shortcut, write_csv, DiagnosticsProbe, DiagnosticsSample, VirialWeight};
use crate::error::{InlsError, Result};
use crate::evolve::{evolve, HaltStatus};
use crate::field::{make_grid, write_snapshot, FieldState, Grid, SingularWeight};
use crate::groundstate::{constants_for, GroundStateProfile, VariationalConstants};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "INLS_THREADS";

/// Sizes the global rayon pool from `INLS_THREADS` when set. Returns the
/// pool size in effect.
pub fn init_threads() -> Result<usize> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| InlsError::Config(vec![format!("{THREADS_ENV} = {raw:?} is not a positive integer")]))?;
        // a pool built earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Variational constants keyed by (N, b), each computed at most once.
#[derive(Default)]
pub struct ConstantsCache {
    entries: Mutex<HashMap<(u32, u64), Arc<VariationalConstants>>>,
    computations: AtomicUsize,
}

impl ConstantsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dimension: u32, b: f64) -> Result<Arc<VariationalConstants>> {
        // held across the computation so concurrent runs share one result
        let mut map = self.entries.lock().expect("constants cache poisoned");
        if let Some(k) = map.get(&(dimension, b.to_bits())) {
            return Ok(k.clone());
        }
        let k = Arc::new(constants_for(dimension, b)?);
        self.computations.fetch_add(1, Ordering::SeqCst);
        map.insert((dimension, b.to_bits()), k.clone());
        Ok(k)
    }

    /// Number of quadrature computations performed so far.
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::SeqCst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub pass: bool,
    pub tolerance: f64,
    pub min_margin: f64,
}

impl From<&MonitorResult> for MonitorSummary {
    fn from(m: &MonitorResult) -> Self {
        Self {
            pass: m.pass,
            tolerance: m.tolerance,
            min_margin: m.margins.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    /// Explicit configuration entries as written.
    pub config: BTreeMap<String, String>,
    /// Configuration with every default filled in.
    pub resolved: ExperimentConfig,
    pub constants: Option<VariationalConstants>,
    pub threshold: Option<ThresholdReport>,
    pub trapping: Option<MonitorSummary>,
    pub blowup: Option<MonitorSummary>,
    pub halt: Option<HaltStatus>,
    pub verdict: RunVerdict,
    pub thresholds: VerdictThresholds,
    pub diagnostics_csv: Option<PathBuf>,
    pub steps: u64,
    pub halvings: u32,
    pub wall_time_s: f64,
    pub version: String,
    pub error: Option<String>,
}

impl RunRecord {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            config: cfg.entries.clone(),
            resolved: cfg.clone(),
            constants: None,
            threshold: None,
            trapping: None,
            blowup: None,
            halt: None,
            verdict: RunVerdict::Undetermined {
                reason: "not run".into(),
            },
            thresholds: cfg.thresholds,
            diagnostics_csv: None,
            steps: 0,
            halvings: 0,
            wall_time_s: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            error: None,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.resolved.data.amplitude
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }

    /// Exit code for the CLI: 0 success, 3 numerical failure, 4 blow-up halt.
    pub fn exit_code(&self) -> i32 {
        match (&self.halt, &self.error) {
            (_, Some(_)) | (Some(HaltStatus::NumericalFailure), _) => 3,
            (Some(h), _) if h.is_blowup() => 4,
            _ => 0,
        }
    }

    /// Diagnostics series read back from the CSV this record points to.
    pub fn load_series(&self) -> Result<Vec<DiagnosticsSample>> {
        let path = self
            .diagnostics_csv
            .as_ref()
            .ok_or_else(|| InlsError::InsufficientData("record has no diagnostics CSV".into()))?;
        read_csv(&fs::read_to_string(path)?)
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(RunRecord::from_json_line)
        .collect()
}

static RECORD_WRITER: Mutex<()> = Mutex::new(());

fn append_record(dir: &Path, rec: &RunRecord) -> Result<()> {
    let line = rec.to_json_line()?;
    let _guard = RECORD_WRITER.lock().expect("record writer poisoned");
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join("records.jsonl"))?;
    writeln!(f, "{line}")?;
    Ok(())
}

fn stem(cfg: &ExperimentConfig) -> String {
    cfg.hash()[..16].to_string()
}

/// Samples the configured initial-data family on `grid`.
pub fn initial_data(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> Result<FieldState> {
    let d = &cfg.data;
    let a = d.amplitude;
    let w2 = 2.0 * d.width * d.width;
    match d.family {
        Family::Gaussian => Ok(FieldState::from_fn(grid.clone(), |x| {
            Complex64::new(a * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w2).exp(), 0.0)
        })),
        Family::TranslatedGaussian => {
            grid.require_cartesian("a translated Gaussian")?;
            let mut x0 = d.x0;
            if d.random_offset > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let dims = grid.dims();
                let mut v = [0.0; 3];
                loop {
                    for c in v.iter_mut().take(dims) {
                        *c = rng.gen_range(-1.0..1.0);
                    }
                    if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
                        break;
                    }
                }
                for (c, s) in x0.iter_mut().zip(v) {
                    *c += d.random_offset * s;
                }
            }
            Ok(FieldState::from_fn(grid.clone(), |x| {
                let r2: f64 = (0..3).map(|k| (x[k] - x0[k]).powi(2)).sum();
                Complex64::new(a * (-r2 / w2).exp(), 0.0)
            }))
        }
        Family::Ring => Ok(FieldState::from_fn(grid.clone(), |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            Complex64::new(a * (-(r - d.ring_radius).powi(2) / w2).exp(), 0.0)
        })),
        Family::SampledW => {
            let profile = GroundStateProfile::new(cfg.dimension, cfg.b.value())?;
            let mut u = profile.sample_truncated(grid.clone(), d.cutoff.0, d.cutoff.1)?;
            u.scale(a);
            Ok(u)
        }
    }
}

struct Trajectory {
    samples: Vec<DiagnosticsSample>,
    status: HaltStatus,
    steps: u64,
    halvings: u32,
    final_state: FieldState,
    threshold: Option<ThresholdReport>,
    constants: Option<VariationalConstants>,
}

fn simulate(cfg: &ExperimentConfig, cache: &ConstantsCache) -> Result<Trajectory> {
    let params = cfg.params()?;
    let grid = make_grid(cfg.grid)?;
    let b = cfg.b.value();
    let constants = if cfg.dimension >= 3 && (0.0..2.0).contains(&b) {
        Some(*cache.get(cfg.dimension, b)?)
    } else {
        None
    };
    let u0 = initial_data(cfg, &grid)?;
    let sw = SingularWeight::new(grid.clone(), b, cfg.epsilon)?;
    let virial = cfg
        .virial_radius
        .map(|r| VirialWeight::quadratic(r, grid.clone()))
        .transpose()?;
    let bump = cfg
        .bump_radius
        .map(|r| VirialWeight::bump(r, grid.clone()))
        .transpose()?;
    let threshold = match (&constants, params.is_energy_critical()) {
        (Some(k), true) => Some(threshold_report(&u0, &sw, k, &params, cfg.thresholds.boundary_tol)?),
        _ => None,
    };
    let mut probe = DiagnosticsProbe::new(&params, &sw, virial.as_ref(), bump.as_ref());
    let outcome = evolve(u0, &cfg.evolve, &sw, &params, &mut probe)?;
    Ok(Trajectory {
        samples: probe.samples,
        status: outcome.status,
        steps: outcome.steps,
        halvings: outcome.halvings,
        final_state: outcome.state,
        threshold,
        constants,
    })
}

fn execute(cfg: &ExperimentConfig, cache: &ConstantsCache, rec: &mut RunRecord) -> Result<()> {
    let traj = simulate(cfg, cache)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let csv = cfg.output_dir.join(format!("{}.csv", stem(cfg)));
    let mut out = std::io::BufWriter::new(fs::File::create(&csv)?);
    write_csv(&mut out, &traj.samples)?;
    out.flush()?;
    rec.diagnostics_csv = Some(csv);
    if cfg.snapshots {
        write_snapshot(cfg.output_dir.join(format!("{}.field", stem(cfg))), &traj.final_state)?;
    }
    rec.constants = traj.constants;
    rec.steps = traj.steps;
    rec.halvings = traj.halvings;
    rec.verdict = classify_run(&traj.samples, &traj.status, cfg.evolve.t_end, &cfg.thresholds)?;
    if let Some(report) = &traj.threshold {
        if report.subthreshold {
            rec.trapping = Some((&trapping_monitor(&traj.samples, report)?).into());
        }
        if report.superthreshold {
            rec.blowup = Some((&blowup_monitor(&traj.samples, report)?).into());
        }
    }
    rec.threshold = traj.threshold;
    rec.halt = Some(traj.status);
    Ok(())
}

/// Runs one experiment, writes its diagnostics CSV, and appends the record
/// to `records.jsonl` in the output directory. Module errors end up in the
/// record; only failures to persist it are returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig, cache: &ConstantsCache) -> Result<RunRecord> {
    let start = Instant::now();
    let mut rec = RunRecord::new(cfg);
    if let Err(e) = execute(cfg, cache, &mut rec) {
        rec.verdict = RunVerdict::Undetermined {
            reason: format!("run failed: {e}"),
        };
        rec.error = Some(e.to_string());
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    fs::create_dir_all(&cfg.output_dir)?;
    append_record(&cfg.output_dir, &rec)?;
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub e0: f64,
    pub k0: f64,
    pub subthreshold: bool,
    pub boundary: bool,
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub records: Vec<RunRecord>,
    pub rows: Vec<SweepRow>,
    /// Adjacent amplitudes around the smallest BlowUp verdict.
    pub verdict_bracket: Option<(f64, f64)>,
    /// Adjacent amplitudes where K0 crosses c.
    pub threshold_bracket: Option<(f64, f64)>,
    /// Smallest spacing between consecutive amplitudes.
    pub step: f64,
}

impl SweepSummary {
    pub fn csv(&self) -> String {
        let mut s = String::from("A,E0,K0,subthreshold,verdict\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{}\n", r.amplitude, r.e0, r.k0, r.subthreshold, r.verdict);
        }
        s
    }

    /// Whether both brackets exist and lie within one sweep step of each other.
    pub fn brackets_agree(&self) -> bool {
        match (self.verdict_bracket, self.threshold_bracket) {
            (Some(v), Some(t)) => v.0.max(t.0) - v.1.min(t.1) <= self.step * (1.0 + 1e-9),
            _ => false,
        }
    }
}

/// One run per amplitude, executed concurrently; the summary CSV is written
/// to `sweep.csv` in the output directory.
pub fn sweep_amplitude(
    template: &ExperimentConfig,
    amplitudes: &[f64],
    cache: &ConstantsCache,
) -> Result<SweepSummary> {
    if amplitudes.is_empty() {
        return Err(InlsError::InsufficientData("sweep needs at least one amplitude".into()));
    }
    let mut amps = amplitudes.to_vec();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    let configs: Vec<ExperimentConfig> = amps
        .iter()
        .map(|a| template.with_entry("data.amplitude", &a.to_string()))
        .collect::<Result<_>>()?;
    let records: Vec<RunRecord> = configs
        .par_iter()
        .map(|c| run_experiment(c, cache))
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = records
        .iter()
        .map(|r| SweepRow {
            amplitude: r.amplitude(),
            e0: r.threshold.as_ref().map_or(f64::NAN, |t| t.e0),
            k0: r.threshold.as_ref().map_or(f64::NAN, |t| t.k0),
            subthreshold: r.threshold.as_ref().is_some_and(|t| t.subthreshold),
            boundary: r.threshold.as_ref().is_some_and(|t| t.boundary),
            verdict: r.verdict.label().to_string(),
        })
        .collect();
    let verdict_bracket = rows
        .iter()
        .position(|r| r.verdict == "BlowUp")
        .filter(|&i| i > 0)
        .map(|i| (rows[i - 1].amplitude, rows[i].amplitude));
    let c = records.iter().find_map(|r| r.constants.map(|k| k.c));
    let threshold_bracket = c.and_then(|c| {
        rows.windows(2)
            .find(|w| (w[0].k0 < c) != (w[1].k0 < c))
            .map(|w| (w[0].amplitude, w[1].amplitude))
    });
    let step = amps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let summary = SweepSummary {
        records,
        rows,
        verdict_bracket,
        threshold_bracket,
        step,
    };
    fs::create_dir_all(&template.output_dir)?;
    fs::write(template.output_dir.join("sweep.csv"), summary.csv())?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialRow {
    pub t: f64,
    /// Central difference of M_a across the neighbouring checkpoints.
    pub dma_dt: f64,
    pub virial_rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialCheck {
    pub rows: Vec<VirialRow>,
    pub max_residual: f64,
    /// |virial_rhs − 8(K − μP)-shortcut| / |shortcut| on the initial datum.
    pub shortcut_rel_diff: f64,
    pub status: HaltStatus,
}

/// Compares the central difference of M_a with the virial right side along
/// the configured run. Needs `diag.virial_R`.
pub fn virial_check(cfg: &ExperimentConfig, cache: &ConstantsCache) -> Result<VirialCheck> {
    if cfg.virial_radius.is_none() {
        return Err(InlsError::Config(vec!["virial-check needs diag.virial_R".into()]));
    }
    let params = cfg.params()?;
    let traj = simulate(cfg, cache)?;
    let s = &traj.samples;
    if s.len() < 3 {
        return Err(InlsError::InsufficientData(format!("{} checkpoints", s.len())));
    }
    let rows: Vec<VirialRow> = s
        .windows(3)
        .map(|w| {
            let dma_dt = (w[2].ma - w[0].ma) / (w[2].t - w[0].t);
            VirialRow {
                t: w[1].t,
                dma_dt,
                virial_rhs: w[1].virial_rhs,
                residual: (dma_dt - w[1].virial_rhs).abs(),
            }
        })
        .collect();
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let shortcut = virial_rhs_shortcut(s[0].kinetic, s[0].potential, &params);
    Ok(VirialCheck {
        rows,
        max_residual,
        shortcut_rel_diff: (s[0].virial_rhs - shortcut).abs() / shortcut.abs(),
        status: traj.status,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialRefinement {
    pub coarse: f64,
    pub fine: f64,
    /// coarse / fine.
    pub ratio: f64,
}

/// Virial residual at the coarse checkpoint times for `cfg` and for the
/// same run with dt halved and the grid spacing halved.
pub fn virial_refinement(cfg: &ExperimentConfig, cache: &ConstantsCache) -> Result<VirialRefinement> {
    let fine_cfg = cfg
        .with_entry("grid.points", &(2 * cfg.grid.points).to_string())?
        .with_entry("evolve.dt", &(cfg.evolve.dt / 2.0).to_string())?;
    let coarse = virial_check(cfg, cache)?;
    let fine = virial_check(&fine_cfg, cache)?;
    let tol = 1e-9 * cfg.evolve.dt;
    let at_coarse_times = |rows: &[VirialRow]| {
        rows.iter()
            .filter(|r| coarse.rows.iter().any(|c| (c.t - r.t).abs() <= tol))
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    };
    let c = coarse.max_residual;
    let f = at_coarse_times(&fine.rows);
    Ok(VirialRefinement {
        coarse: c,
        fine: f,
        ratio: c / f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(dir: &Path) -> String {
        format!(
            "N = 3\nb = 1\nmu = focusing\ngrid.points = 16\ngrid.L = 6\ndata.family = gaussian\n\
             data.amplitude = 0.3\nevolve.dt = 0.01\nevolve.t_end = 0.05\noutput.dir = {}\n",
            dir.display()
        )
    }

    #[test]
    fn zero_amplitude_scatters_trivially() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&base(dir.path()).replace("data.amplitude = 0.3", "data.amplitude = 0")).unwrap();
        let rec = run_experiment(&cfg, &ConstantsCache::new()).unwrap();
        assert_eq!(rec.verdict.label(), "Scattering", "{:?}", rec.verdict);
        assert_eq!(rec.exit_code(), 0);
    }

    #[test]
    fn record_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&base(dir.path())).unwrap();
        let rec = run_experiment(&cfg, &ConstantsCache::new()).unwrap();
        let back = RunRecord::from_json_line(&rec.to_json_line().unwrap()).unwrap();
        assert_eq!(back, rec);
        let stored = read_records(&dir.path().join("records.jsonl")).unwrap();
        assert_eq!(stored, vec![rec]);
    }

    #[test]
    fn cache_computes_once() {
        let cache = ConstantsCache::new();
        let a = cache.get(3, 1.0).unwrap();
        let b = cache.get(3, 1.0).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.computations(), 1);
    }

    #[test]
    fn failed_run_becomes_record() {
        let dir = tempfile::tempdir().unwrap();
        // bump weight reaching beyond the box fails inside the run
        let cfg = parse_config(&format!("{}diag.bump_R = 5\n", base(dir.path()))).unwrap();
        let rec = run_experiment(&cfg, &ConstantsCache::new()).unwrap();
        assert!(rec.error.is_some());
        assert_eq!(rec.exit_code(), 3);
    }
}
