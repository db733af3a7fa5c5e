//! Monte Carlo episodes, metric aggregation, parameter sweeps, and CSV output.
//!
//! An episode drops a terminal at a random spot, walks it through the room,
//! and runs one tracker over every timeslot of the resampled path. Episodes
//! are independent: episode `i` always uses RNG stream `i` of the scenario's
//! base seed, so results are bit-identical no matter how many threads run the
//! batch or in which order episodes finish.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::NoiseModel;
use crate::codebook::{build_codebook, ArrayConfig, Codebook};
use crate::geometry::{
    generate_random_walk, resample_path, sample_start_location, RoomConfig, WalkParams,
};
use crate::tracker::{track_step, LinkEnv, SlotResult, TrackerConfig, TrackerKind, TrackerState};
use crate::{Error, Result};

// ── Scenario ────────────────────────────────────────────────────────────────

/// Everything a Monte Carlo run needs.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub array: ArrayConfig,
    pub room: RoomConfig,
    pub walk: WalkParams,
    pub tracker: TrackerConfig,
    /// Pilot SNR in dB relative to an aligned full-aperture beam.
    pub snr_db: f64,
    /// When false, pilots are noiseless regardless of `snr_db`.
    pub noise_enabled: bool,
    pub episodes: usize,
    pub base_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            array: ArrayConfig::default(),
            room: RoomConfig::default(),
            walk: WalkParams::default(),
            tracker: TrackerConfig::defaults_for(ArrayConfig::default().levels()),
            snr_db: 10.0,
            noise_enabled: true,
            episodes: 1000,
            base_seed: 42,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.walk.validate()?;
        self.tracker.validate(self.array.levels())?;
        if self.episodes < 1 {
            return Err(Error::Config("episode count must be at least 1".into()));
        }
        Ok(())
    }

    fn noise(&self) -> NoiseModel {
        if self.noise_enabled {
            NoiseModel::new(self.snr_db)
        } else {
            NoiseModel::disabled()
        }
    }
}

// ── Episodes ────────────────────────────────────────────────────────────────

/// Everything one episode produced.
pub struct EpisodeOutcome {
    pub episode: u64,
    pub slots: u64,
    pub pilots: u64,
    /// Sum of squared angle errors over all slots, in rad^2.
    pub sq_err_sum: f64,
    pub restarts: u64,
    pub slot_results: Vec<SlotResult>,
}

#[derive(Debug, Clone, Copy)]
struct EpisodeSummary {
    slots: u64,
    pilots: u64,
    sq_err_sum: f64,
    restarts: u64,
}

impl EpisodeOutcome {
    fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            slots: self.slots,
            pilots: self.pilots,
            sq_err_sum: self.sq_err_sum,
            restarts: self.restarts,
        }
    }
}

/// Run one episode, building the codebook on the fly. Prefer
/// [`run_episode_with`] when running many episodes.
pub fn run_episode(sc: &ScenarioConfig, kind: TrackerKind, episode: u64) -> Result<EpisodeOutcome> {
    let codebook = build_codebook(&sc.array)?;
    run_episode_with(&codebook, sc, kind, episode)
}

/// Run one episode against a prebuilt codebook.
///
/// The episode index selects an independent, reproducible RNG stream, so the
/// same `(base_seed, episode)` pair always replays the identical walk, noise,
/// and estimates.
pub fn run_episode_with(
    codebook: &Codebook,
    sc: &ScenarioConfig,
    kind: TrackerKind,
    episode: u64,
) -> Result<EpisodeOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.base_seed);
    rng.set_stream(episode);

    let start = sample_start_location(&sc.room, &sc.walk, &mut rng)?;
    let walk = generate_random_walk(start, &sc.room, &sc.walk, &mut rng)?;
    let path = resample_path(&walk, sc.walk.q_i)?;
    let beta_phase = rng.gen::<f64>() * std::f64::consts::TAU;

    let env = LinkEnv {
        codebook,
        noise: sc.noise(),
        access_point: sc.room.ap_position,
        beta_phase,
    };
    let mut state = TrackerState::new(kind);
    let mut slot_results = Vec::with_capacity(path.timeslot_count());
    let mut sq_err_sum = 0.0;
    for t in 0..path.timeslot_count() {
        let slot = track_step(&env, &sc.tracker, &mut state, path.position(t), &mut rng)?;
        sq_err_sum += (slot.theta_est - slot.theta_true).powi(2);
        slot_results.push(slot);
    }

    // Accounting invariant: the per-slot totals must equal what the
    // measurement counter actually charged.
    let reported: u64 = slot_results.iter().map(|s| u64::from(s.pilots_used)).sum();
    assert_eq!(reported, state.pilots_used(), "pilot accounting drifted");

    Ok(EpisodeOutcome {
        episode,
        slots: slot_results.len() as u64,
        pilots: state.pilots_used(),
        sq_err_sum,
        restarts: state.restarts(),
        slot_results,
    })
}

// ── Aggregation ─────────────────────────────────────────────────────────────

/// Pooled metrics over a batch of episodes.
#[derive(Debug, Clone, Copy)]
pub struct RunMetrics {
    pub tracker: TrackerKind,
    pub episodes: u64,
    pub slots: u64,
    pub pilots: u64,
    pub restarts: u64,
    /// Mean squared angle error pooled over all slots, rad^2.
    pub mse_rad2: f64,
    /// 95% confidence half-width of the per-episode MSE mean.
    pub mse_ci95: f64,
    /// Pilots per slot pooled over all slots.
    pub avg_pilots: f64,
    /// 95% confidence half-width of the per-episode pilots-per-slot mean.
    pub avg_pilots_ci95: f64,
    /// Fraction of slots that interrupted the link.
    pub restart_rate: f64,
}

/// Mean squared value of a set of errors; zero for an empty set.
pub fn compute_mse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64
}

/// Pilots per slot.
pub fn compute_avg_pilots(pilots: u64, slots: u64) -> f64 {
    if slots == 0 {
        return 0.0;
    }
    pilots as f64 / slots as f64
}

/// 95% confidence half-width of the mean of `values`; zero below two samples.
fn mean_ci95(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

fn aggregate(kind: TrackerKind, episodes: &[EpisodeSummary]) -> RunMetrics {
    let slots: u64 = episodes.iter().map(|e| e.slots).sum();
    let pilots: u64 = episodes.iter().map(|e| e.pilots).sum();
    let restarts: u64 = episodes.iter().map(|e| e.restarts).sum();
    let sq_err: f64 = episodes.iter().map(|e| e.sq_err_sum).sum();
    let per_mse: Vec<f64> = episodes
        .iter()
        .map(|e| e.sq_err_sum / e.slots.max(1) as f64)
        .collect();
    let per_pilots: Vec<f64> = episodes
        .iter()
        .map(|e| compute_avg_pilots(e.pilots, e.slots))
        .collect();
    RunMetrics {
        tracker: kind,
        episodes: episodes.len() as u64,
        slots,
        pilots,
        restarts,
        mse_rad2: if slots > 0 {
            sq_err / slots as f64
        } else {
            0.0
        },
        mse_ci95: mean_ci95(&per_mse),
        avg_pilots: compute_avg_pilots(pilots, slots),
        avg_pilots_ci95: mean_ci95(&per_pilots),
        restart_rate: if slots > 0 {
            restarts as f64 / slots as f64
        } else {
            0.0
        },
    }
}

/// Run a full batch of episodes, in parallel, and pool the metrics.
///
/// Episodes fold in index order whatever the thread count, so the result is
/// bit-identical between serial and parallel runs.
pub fn run_many(sc: &ScenarioConfig, kind: TrackerKind) -> Result<RunMetrics> {
    let codebook = build_codebook(&sc.array)?;
    run_many_with(&codebook, sc, kind)
}

/// [`run_many`] against a prebuilt codebook.
pub fn run_many_with(
    codebook: &Codebook,
    sc: &ScenarioConfig,
    kind: TrackerKind,
) -> Result<RunMetrics> {
    sc.validate()?;
    let summaries: Result<Vec<EpisodeSummary>> = (0..sc.episodes as u64)
        .into_par_iter()
        .map(|i| run_episode_with(codebook, sc, kind, i).map(|o| o.summary()))
        .collect();
    Ok(aggregate(kind, &summaries?))
}

/// Sequential reference for [`run_many_with`]: same episodes, same fold
/// order, no thread pool. Exists so tests can assert the parallel batch is
/// bit-identical to a serial run.
pub fn run_many_serial_with(
    codebook: &Codebook,
    sc: &ScenarioConfig,
    kind: TrackerKind,
) -> Result<RunMetrics> {
    sc.validate()?;
    let summaries: Result<Vec<EpisodeSummary>> = (0..sc.episodes as u64)
        .map(|i| run_episode_with(codebook, sc, kind, i).map(|o| o.summary()))
        .collect();
    Ok(aggregate(kind, &summaries?))
}

// ── Sweeps ──────────────────────────────────────────────────────────────────

/// Scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Distance-estimator error std in meters.
    SigmaE,
    /// Timeslots per walk step (path resampling factor).
    QI,
    /// Candidates per level on every level below the two widest.
    PilotsPerLevel,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma-e" => Ok(SweepAxis::SigmaE),
            "qi" | "q-i" => Ok(SweepAxis::QI),
            "pilots-per-level" => Ok(SweepAxis::PilotsPerLevel),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected sigma-e, qi, or pilots-per-level)"
            ))),
        }
    }
}

/// One aggregated result row of a run or sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub q_i: u32,
    pub sigma_e_m: f64,
    pub snr_db: f64,
    pub metrics: RunMetrics,
}

fn as_positive_int(v: f64, what: &str) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > usize::MAX as f64 {
        return Err(Error::Config(format!(
            "{what} must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

/// Apply one sweep value to a scenario copy.
fn apply_axis(sc: &mut ScenarioConfig, axis: SweepAxis, value: f64) -> Result<()> {
    match axis {
        SweepAxis::SigmaE => {
            if value.is_nan() || value < 0.0 {
                return Err(Error::Config(format!(
                    "distance error std must be nonnegative, got {value}"
                )));
            }
            sc.tracker.sigma_e_m = value;
        }
        SweepAxis::QI => {
            sc.walk.q_i = u32::try_from(as_positive_int(value, "timeslots per step")?)
                .map_err(|_| Error::Config(format!("timeslots per step {value} is too large")))?;
        }
        SweepAxis::PilotsPerLevel => {
            let p = as_positive_int(value, "per-level candidate count")?;
            for entry in sc.tracker.pilots_per_level.iter_mut().skip(2) {
                *entry = p;
            }
        }
    }
    Ok(())
}

/// Run `trackers` at every value of the axis; rows are ordered value-major,
/// then tracker.
pub fn sweep(
    sc: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    trackers: &[TrackerKind],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() || trackers.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one value and tracker".into(),
        ));
    }
    let codebook = build_codebook(&sc.array)?;
    let mut rows = Vec::with_capacity(values.len() * trackers.len());
    for &value in values {
        let mut point = sc.clone();
        apply_axis(&mut point, axis, value)?;
        for &kind in trackers {
            let metrics = run_many_with(&codebook, &point, kind)?;
            rows.push(SweepRow {
                q_i: point.walk.q_i,
                sigma_e_m: point.tracker.sigma_e_m,
                snr_db: if point.noise_enabled {
                    point.snr_db
                } else {
                    f64::INFINITY
                },
                metrics,
            });
        }
    }
    Ok(rows)
}

/// The row a plain (non-sweep) run produces.
pub fn run_row(sc: &ScenarioConfig, kind: TrackerKind) -> Result<SweepRow> {
    let metrics = run_many(sc, kind)?;
    Ok(SweepRow {
        q_i: sc.walk.q_i,
        sigma_e_m: sc.tracker.sigma_e_m,
        snr_db: if sc.noise_enabled {
            sc.snr_db
        } else {
            f64::INFINITY
        },
        metrics,
    })
}

// ── Output ──────────────────────────────────────────────────────────────────

pub const CSV_HEADER: &str =
    "tracker,q_i,sigma_e_m,snr_db,episodes,mse_rad2,mse_ci95,avg_pilots,avg_pilots_ci95,restart_rate";

/// Write result rows as CSV with a fixed header and shortest-roundtrip floats.
pub fn write_csv(out: &mut (impl Write + ?Sized), rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let m = &row.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            m.tracker,
            row.q_i,
            row.sigma_e_m,
            row.snr_db,
            m.episodes,
            m.mse_rad2,
            m.mse_ci95,
            m.avg_pilots,
            m.avg_pilots_ci95,
            m.restart_rate
        )?;
    }
    Ok(())
}

/// Write one episode's per-slot trace as CSV.
pub fn write_trace(out: &mut (impl Write + ?Sized), slots: &[SlotResult]) -> io::Result<()> {
    writeln!(
        out,
        "timeslot,phase,pilots,theta_true_rad,theta_est_rad,interrupted"
    )?;
    for s in slots {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.timeslot,
            if s.initialization { "init" } else { "track" },
            s.pilots_used,
            s.theta_true,
            s.theta_est,
            u8::from(s.interrupted)
        )?;
    }
    Ok(())
}

// ── Tests ───────────────────────────────────────────────────────────────────
