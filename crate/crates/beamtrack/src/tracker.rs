//! Per-timeslot beam trackers: hierarchical descent with motion-assisted
//! refinement, a full-coverage scanning baseline, and a single-level ablation.
//!
//! All trackers share the same slot skeleton: the first three slots after a
//! (re)start are initialization slots that acquire the terminal from scratch;
//! every later slot is a tracking slot that spends a much smaller pilot budget
//! around a prediction of where the terminal moved. A slot whose final
//! estimate deviates from the true direction by more than the serving beam's
//! half-power width — or whose searches all fall below the detection floor —
//! interrupts the link, and the tracker re-initializes from the next slot.
//!
//! Pilot budgets are fixed per slot kind: search failures never spend extra
//! pilots, they only stop the estimate from being refined further.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{best_codeword, los_channel, LosChannel, NoiseModel, PilotCounter};
use crate::codebook::{Codebook, Codeword};
use crate::geometry::{true_polar, Point2D};
use crate::{Error, Result};

/// Number of consecutive initialization slots after a start or an interruption.
pub const INIT_SLOTS: u32 = 3;

/// Distance estimates are clamped to this floor (meters) so a location
/// estimate never collapses onto the access point.
const MIN_RANGE_M: f64 = 0.001;

// ── Tracker selection ───────────────────────────────────────────────────────

/// Which tracking algorithm drives the slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackerKind {
    /// Multi-level descent for initialization and for refinement around a
    /// motion-based prediction while tracking.
    Hierarchical,
    /// Initializes with a two-stage scan over the whole narrowest level and
    /// tracks with a narrow window around an angle extrapolation.
    FullCoverage,
    /// Initializes like the hierarchical tracker but tracks with a single
    /// narrowest-level window, spending the same budget in one level.
    SingleLevel,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 3] = [
        TrackerKind::Hierarchical,
        TrackerKind::FullCoverage,
        TrackerKind::SingleLevel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrackerKind::Hierarchical => "hierarchical",
            TrackerKind::FullCoverage => "full-coverage",
            TrackerKind::SingleLevel => "single-level",
        }
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hierarchical" => Ok(TrackerKind::Hierarchical),
            "full-coverage" => Ok(TrackerKind::FullCoverage),
            "single-level" => Ok(TrackerKind::SingleLevel),
            other => Err(Error::Config(format!(
                "unknown tracker '{other}' (expected hierarchical, full-coverage, or single-level)"
            ))),
        }
    }
}

// ── Configuration ───────────────────────────────────────────────────────────

/// Tunable parameters shared by the trackers.
#[derive(Debug, Clone)]
pub struct TrackerConfig {
    /// Candidates measured per level during a descent; one entry per level.
    pub pilots_per_level: Vec<usize>,
    /// How many levels above the narrowest a tracking descent starts:
    /// tracking refines levels `U-g ..= U`.
    pub refine_depth: u32,
    /// Standard deviation (meters) of the distance estimator.
    pub sigma_e_m: f64,
    /// Level whose half-power beamwidth defines the interruption bound;
    /// normally the narrowest level, i.e. the serving beam.
    pub restart_beamwidth_level: u32,
}

impl TrackerConfig {
    /// Defaults for a codebook with `levels` levels: two candidates on the
    /// two widest levels, four on every deeper level, refinement over the
    /// bottom four levels.
    pub fn defaults_for(levels: u32) -> Self {
        Self {
            pilots_per_level: (1..=levels).map(|u| if u <= 2 { 2 } else { 4 }).collect(),
            refine_depth: 3.min(levels.saturating_sub(3)).max(1),
            sigma_e_m: 0.0,
            restart_beamwidth_level: levels,
        }
    }

    pub fn validate(&self, levels: u32) -> Result<()> {
        if self.pilots_per_level.len() != levels as usize {
            return Err(Error::Config(format!(
                "pilot schedule has {} entries for {levels} levels",
                self.pilots_per_level.len()
            )));
        }
        for (i, &p) in self.pilots_per_level.iter().enumerate() {
            let level_size = 1usize << (i + 1);
            if p < 1 || p > level_size {
                return Err(Error::Config(format!(
                    "level {} schedule entry {p} outside 1..={level_size}",
                    i + 1
                )));
            }
        }
        if self.refine_depth < 1 || self.refine_depth + 3 > levels {
            return Err(Error::Config(format!(
                "refine depth {} outside 1..={} for {levels} levels",
                self.refine_depth,
                levels.saturating_sub(3)
            )));
        }
        if self.sigma_e_m.is_nan() || self.sigma_e_m < 0.0 {
            return Err(Error::Config(format!(
                "distance error std must be nonnegative, got {}",
                self.sigma_e_m
            )));
        }
        if self.restart_beamwidth_level < 1 || self.restart_beamwidth_level > levels {
            return Err(Error::Config(format!(
                "restart beamwidth level {} outside 1..={levels}",
                self.restart_beamwidth_level
            )));
        }
        Ok(())
    }

    /// Pilots one initialization descent spends: the whole schedule.
    pub fn init_pilot_budget(&self) -> usize {
        self.pilots_per_level.iter().sum()
    }

    /// Pilots one tracking slot spends: the schedule tail over the refined
    /// levels `U-g ..= U`.
    pub fn tracking_pilot_budget(&self) -> usize {
        let levels = self.pilots_per_level.len();
        let start = levels - self.refine_depth as usize - 1;
        self.pilots_per_level[start..].iter().sum()
    }
}

// ── Environment and state ───────────────────────────────────────────────────

/// Everything about the link that stays fixed within one episode.
pub struct LinkEnv<'a> {
    pub codebook: &'a Codebook,
    pub noise: NoiseModel,
    pub access_point: Point2D,
    /// Path phase for this episode's channel.
    pub beta_phase: f64,
}

/// Mutable tracker state carried across timeslots.
pub struct TrackerState {
    kind: TrackerKind,
    init_slots_done: u32,
    restart_pending: bool,
    restarts: u64,
    /// Recent location estimates, oldest first (up to three).
    loc_history: Vec<Point2D>,
    /// Recent angle estimates for the angle-extrapolating tracker (up to two).
    dir_history: Vec<f64>,
    last_theta_est: Option<f64>,
    pilots: PilotCounter,
    timeslot: u64,
}

impl TrackerState {
    pub fn new(kind: TrackerKind) -> Self {
        Self {
            kind,
            init_slots_done: 0,
            restart_pending: false,
            restarts: 0,
            loc_history: Vec::with_capacity(3),
            dir_history: Vec::with_capacity(2),
            last_theta_est: None,
            pilots: PilotCounter::new(),
            timeslot: 0,
        }
    }

    pub fn kind(&self) -> TrackerKind {
        self.kind
    }

    /// Number of interrupted slots so far.
    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    /// Total pilots spent so far, as counted at the measurement site.
    pub fn pilots_used(&self) -> u64 {
        self.pilots.used()
    }

    pub fn timeslots_run(&self) -> u64 {
        self.timeslot
    }

    /// Whether the next slot will run as an initialization slot.
    pub fn is_initializing(&self) -> bool {
        self.restart_pending || self.init_slots_done < INIT_SLOTS
    }

    /// Force re-initialization from the next slot, counted as an
    /// interruption; lets a caller model an externally detected outage.
    pub fn schedule_restart(&mut self) {
        if !self.restart_pending {
            self.restarts += 1;
            self.restart_pending = true;
        }
    }
}

/// What one timeslot produced.
#[derive(Debug, Clone, Copy)]
pub struct SlotResult {
    pub timeslot: u64,
    /// True when the slot ran as an initialization slot.
    pub initialization: bool,
    pub pilots_used: u32,
    pub theta_true: f64,
    pub theta_est: f64,
    /// Location estimate, for the trackers that form one.
    pub est_location: Option<Point2D>,
    /// Whether this slot interrupted the link and forced a restart.
    pub interrupted: bool,
    /// Whether every search in the slot fell below the detection floor.
    pub detection_failed: bool,
}

// ── Estimators ──────────────────────────────────────────────────────────────

/// Distance estimate: truth plus Gaussian error, floored away from zero.
pub fn estimate_distance(range_m: f64, sigma_e_m: f64, rng: &mut impl Rng) -> f64 {
    let est = if sigma_e_m > 0.0 {
        let err = Normal::new(0.0, sigma_e_m).expect("finite distance error std");
        range_m + err.sample(rng)
    } else {
        range_m
    };
    est.max(MIN_RANGE_M)
}

/// Location implied by an angle and distance estimate, relative to the
/// access point.
pub fn estimate_location(access_point: Point2D, theta_rad: f64, range_m: f64) -> Point2D {
    access_point + Point2D::new(range_m * theta_rad.cos(), range_m * theta_rad.sin())
}

/// One-step location extrapolation from the last three estimates (oldest
/// first): the newest point plus the average of the last two displacements.
/// Exact for uniform straight-line motion.
pub fn predict_location(history: &[Point2D]) -> Option<Point2D> {
    match history {
        [p0, _, p2] => Some(*p2 + (*p2 - *p0) * 0.5),
        _ => None,
    }
}

// ── Slot internals ──────────────────────────────────────────────────────────

struct SlotSearch {
    theta_est: f64,
    pilots_used: u32,
    detection_failed: bool,
}

/// Multi-level descent from `start_level` down to the narrowest level.
///
/// Each level measures the scheduled number of codewords nearest the current
/// direction estimate. A successful search narrows the estimate to the
/// winner's sector center; a failed one keeps the previous (wider) estimate,
/// so the next level's window still covers the trusted region. The reported
/// angle is the final level's strongest response whether or not it cleared
/// the detection floor — the interruption rule catches gross errors.
fn descend(
    env: &LinkEnv,
    channel: &LosChannel,
    cfg: &TrackerConfig,
    start_level: u32,
    psi_init: Option<f64>,
    rng: &mut impl Rng,
    pilots: &mut PilotCounter,
) -> Result<SlotSearch> {
    let config = env.codebook.config();
    let levels = env.codebook.num_levels();
    let mut psi_ref = psi_init.unwrap_or(0.0);
    let mut pilots_used = 0;
    let mut any_success = false;
    let mut theta_est = 0.0;
    for u in start_level..=levels {
        let k = cfg.pilots_per_level[(u - 1) as usize];
        let candidates = env.codebook.codewords_near(u, psi_ref, k)?;
        let out = best_codeword(config, channel, &candidates, &env.noise, rng, pilots)?;
        pilots_used += out.pilots_used;
        if out.success {
            any_success = true;
            psi_ref = out.winner.sector_center;
        }
        if u == levels {
            theta_est = out.winner.boresight_theta(config);
        }
    }
    Ok(SlotSearch {
        theta_est,
        pilots_used,
        detection_failed: !any_success,
    })
}

/// One narrowest-level window of `k` beams around `center_psi`.
fn window_scan(
    env: &LinkEnv,
    channel: &LosChannel,
    center_psi: f64,
    k: usize,
    rng: &mut impl Rng,
    pilots: &mut PilotCounter,
) -> Result<SlotSearch> {
    let config = env.codebook.config();
    let u = env.codebook.num_levels();
    let candidates = env.codebook.codewords_near(u, center_psi, k)?;
    let out = best_codeword(config, channel, &candidates, &env.noise, rng, pilots)?;
    Ok(SlotSearch {
        theta_est: out.winner.boresight_theta(config),
        pilots_used: out.pilots_used,
        detection_failed: !out.success,
    })
}

/// Two-stage full-coverage acquisition over the narrowest level: a coarse
/// pass over every fourth beam, then a fine pass over the quarter of the
/// level nearest the coarse winner. Spends half the level's size in pilots.
fn full_coverage_init(
    env: &LinkEnv,
    channel: &LosChannel,
    rng: &mut impl Rng,
    pilots: &mut PilotCounter,
) -> Result<SlotSearch> {
    let config = env.codebook.config();
    let u = env.codebook.num_levels();
    let level = env.codebook.level(u)?;
    let coarse: Vec<&Codeword> = level.iter().skip(1).step_by(4).collect();
    let a = best_codeword(config, channel, &coarse, &env.noise, rng, pilots)?;
    let fine = env
        .codebook
        .codewords_near(u, a.winner.sector_center, level.len() / 4)?;
    let b = best_codeword(config, channel, &fine, &env.noise, rng, pilots)?;
    Ok(SlotSearch {
        theta_est: b.winner.boresight_theta(config),
        pilots_used: a.pilots_used + b.pilots_used,
        detection_failed: !a.success && !b.success,
    })
}

/// Spatial direction toward a point, clamped into the array's field of view.
fn psi_toward(env: &LinkEnv, point: Point2D) -> Option<f64> {
    let polar = true_polar(point, env.access_point).ok()?;
    let theta = polar.theta_rad.clamp(-FRAC_PI_2, FRAC_PI_2);
    Some(env.codebook.config().spacing_ratio * theta.sin())
}

/// Where a tracking slot should center its search, from the location
/// extrapolation when available, else the last angle estimate.
fn tracking_center(env: &LinkEnv, state: &TrackerState) -> f64 {
    predict_location(&state.loc_history)
        .and_then(|p| psi_toward(env, p))
        .or_else(|| {
            state
                .last_theta_est
                .map(|t| env.codebook.config().spacing_ratio * t.sin())
        })
        .unwrap_or(0.0)
}

/// Angle extrapolation for the full-coverage tracker: linear continuation of
/// the last two angle estimates.
fn extrapolated_psi(env: &LinkEnv, dir_history: &[f64]) -> Option<f64> {
    let spacing = env.codebook.config().spacing_ratio;
    match dir_history {
        [prev, cur] => {
            let theta = (2.0 * cur - prev).clamp(-FRAC_PI_2, FRAC_PI_2);
            Some(spacing * theta.sin())
        }
        [only] => Some(spacing * only.sin()),
        _ => None,
    }
}

fn push_capped<T>(history: &mut Vec<T>, value: T, cap: usize) {
    if history.len() == cap {
        history.remove(0);
    }
    history.push(value);
}

// ── Per-slot driver ─────────────────────────────────────────────────────────

/// Run one timeslot of the tracker against the terminal's true position.
pub fn track_step(
    env: &LinkEnv,
    cfg: &TrackerConfig,
    state: &mut TrackerState,
    terminal: Point2D,
    rng: &mut impl Rng,
) -> Result<SlotResult> {
    let config = env.codebook.config();
    let channel = los_channel(config, terminal, env.access_point, env.beta_phase)?;

    if state.restart_pending {
        state.restart_pending = false;
        state.init_slots_done = 0;
        state.loc_history.clear();
        state.dir_history.clear();
    }
    let initialization = state.init_slots_done < INIT_SLOTS;

    let before = state.pilots.used();
    let levels = env.codebook.num_levels();
    let search = match (state.kind, initialization) {
        (TrackerKind::FullCoverage, true) => {
            full_coverage_init(env, &channel, rng, &mut state.pilots)?
        }
        (TrackerKind::FullCoverage, false) => {
            let center = extrapolated_psi(env, &state.dir_history).unwrap_or(0.0);
            window_scan(
                env,
                &channel,
                center,
                cfg.tracking_pilot_budget(),
                rng,
                &mut state.pilots,
            )?
        }
        (_, true) => descend(env, &channel, cfg, 1, None, rng, &mut state.pilots)?,
        (TrackerKind::Hierarchical, false) => {
            let center = tracking_center(env, state);
            descend(
                env,
                &channel,
                cfg,
                levels - cfg.refine_depth,
                Some(center),
                rng,
                &mut state.pilots,
            )?
        }
        (TrackerKind::SingleLevel, false) => {
            let center = tracking_center(env, state);
            window_scan(
                env,
                &channel,
                center,
                cfg.tracking_pilot_budget(),
                rng,
                &mut state.pilots,
            )?
        }
    };

    let theta_est = search.theta_est;
    state.last_theta_est = Some(theta_est);
    let est_location = match state.kind {
        TrackerKind::FullCoverage => {
            push_capped(&mut state.dir_history, theta_est, 2);
            None
        }
        _ => {
            let range_est = estimate_distance(channel.range_m, cfg.sigma_e_m, rng);
            let loc = estimate_location(env.access_point, theta_est, range_est);
            push_capped(&mut state.loc_history, loc, 3);
            Some(loc)
        }
    };

    let pilots_used = (state.pilots.used() - before) as u32;
    debug_assert_eq!(pilots_used, search.pilots_used);

    let psi_est = config.spacing_ratio * theta_est.sin();
    let bound = env
        .codebook
        .half_power_beamwidth_psi(cfg.restart_beamwidth_level)?;
    let interrupted = search.detection_failed || (psi_est - channel.psi).abs() > bound;
    if interrupted {
        state.restarts += 1;
        state.restart_pending = true;
    }

    if initialization {
        state.init_slots_done += 1;
    }
    let result = SlotResult {
        timeslot: state.timeslot,
        initialization,
        pilots_used,
        theta_true: channel.theta_rad,
        theta_est,
        est_location,
        interrupted,
        detection_failed: search.detection_failed,
    };
    state.timeslot += 1;
    Ok(result)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_codebook, ArrayConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn codebook() -> Codebook {
        build_codebook(&ArrayConfig::default()).unwrap()
    }

    fn env(cb: &Codebook, noise: NoiseModel) -> LinkEnv<'_> {
        LinkEnv {
            codebook: cb,
            noise,
            access_point: Point2D::new(0.0, 0.0),
            beta_phase: 0.9,
        }
    }

    fn terminal_at_theta(theta: f64, range: f64) -> Point2D {
        Point2D::new(range * theta.cos(), range * theta.sin())
    }

    #[test]
    fn default_schedule_budgets() {
        let cfg = TrackerConfig::defaults_for(8);
        assert_eq!(cfg.pilots_per_level, vec![2, 2, 4, 4, 4, 4, 4, 4]);
        assert_eq!(cfg.init_pilot_budget(), 28);
        assert_eq!(cfg.refine_depth, 3);
        assert_eq!(cfg.tracking_pilot_budget(), 16);
        assert!(cfg.validate(8).is_ok());
    }

    #[test]
    fn deeper_refinement_costs_more_pilots() {
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.refine_depth = 5;
        assert_eq!(cfg.tracking_pilot_budget(), 24);
        let all_two = TrackerConfig {
            pilots_per_level: vec![2; 8],
            ..TrackerConfig::defaults_for(8)
        };
        assert_eq!(all_two.init_pilot_budget(), 16);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.pilots_per_level = vec![2; 7];
        assert!(cfg.validate(8).is_err());
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.pilots_per_level[0] = 3; // level 1 only has 2 codewords
        assert!(cfg.validate(8).is_err());
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.refine_depth = 6;
        assert!(cfg.validate(8).is_err());
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.refine_depth = 0;
        assert!(cfg.validate(8).is_err());
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.sigma_e_m = -1.0;
        assert!(cfg.validate(8).is_err());
        let mut cfg = TrackerConfig::defaults_for(8);
        cfg.restart_beamwidth_level = 9;
        assert!(cfg.validate(8).is_err());
    }

    #[test]
    fn tracker_names_round_trip() {
        for kind in TrackerKind::ALL {
            assert_eq!(kind.name().parse::<TrackerKind>().unwrap(), kind);
        }
        assert!("noscan".parse::<TrackerKind>().is_err());
    }

    #[test]
    fn distance_estimate_is_exact_without_error() {
        let mut r = rng(1);
        assert_eq!(estimate_distance(3.25, 0.0, &mut r), 3.25);
    }

    #[test]
    fn distance_estimate_matches_error_model() {
        let mut r = rng(2);
        let (truth, sigma) = (4.0, 0.5);
        let reps = 100_000;
        let samples: Vec<f64> = (0..reps)
            .map(|_| estimate_distance(truth, sigma, &mut r))
            .collect();
        let mean = samples.iter().sum::<f64>() / reps as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / reps as f64;
        assert!((mean - truth).abs() < 0.01);
        assert!((var.sqrt() - sigma).abs() / sigma < 0.02);
    }

    #[test]
    fn distance_estimate_never_reaches_zero() {
        let mut r = rng(3);
        for _ in 0..10_000 {
            assert!(estimate_distance(0.05, 2.0, &mut r) >= MIN_RANGE_M);
        }
    }

    #[test]
    fn location_estimate_places_the_point() {
        let ap = Point2D::new(1.0, 2.0);
        let p = estimate_location(ap, 0.0, 3.0);
        assert!((p.x - 4.0).abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
        let p = estimate_location(ap, std::f64::consts::FRAC_PI_4, 2f64.sqrt());
        assert!((p.x - 2.0).abs() < 1e-12 && (p.y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_continues_uniform_motion_exactly() {
        let history = [
            Point2D::new(0.0, 0.0),
            Point2D::new(1.0, 2.0),
            Point2D::new(2.0, 4.0),
        ];
        let p = predict_location(&history).unwrap();
        assert!((p.x - 3.0).abs() < 1e-12 && (p.y - 6.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_averages_the_last_two_steps() {
        let history = [
            Point2D::new(1.0, 1.0),
            Point2D::new(5.0, -2.0),
            Point2D::new(3.0, 7.0),
        ];
        let p = predict_location(&history).unwrap();
        assert!((p.x - 4.0).abs() < 1e-12 && (p.y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_needs_three_points() {
        assert!(predict_location(&[]).is_none());
        assert!(predict_location(&[Point2D::new(0.0, 0.0); 2]).is_none());
    }

    #[test]
    fn hierarchical_init_slot_spends_the_full_schedule() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::new(10.0));
        let cfg = TrackerConfig::defaults_for(8);
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(5);
        for t in 0..INIT_SLOTS as u64 {
            let slot =
                track_step(&e, &cfg, &mut state, terminal_at_theta(0.4, 3.0), &mut r).unwrap();
            assert!(slot.initialization);
            assert_eq!(slot.pilots_used, 28);
            assert_eq!(slot.timeslot, t);
        }
        assert_eq!(state.pilots_used(), 3 * 28);
    }

    #[test]
    fn tracking_slots_spend_the_refinement_budget() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        for (kind, want) in [
            (TrackerKind::Hierarchical, 16),
            (TrackerKind::SingleLevel, 16),
            (TrackerKind::FullCoverage, 16),
        ] {
            let mut state = TrackerState::new(kind);
            let mut r = rng(6);
            for _ in 0..INIT_SLOTS {
                track_step(&e, &cfg, &mut state, terminal_at_theta(0.3, 3.0), &mut r).unwrap();
            }
            let slot =
                track_step(&e, &cfg, &mut state, terminal_at_theta(0.3, 3.0), &mut r).unwrap();
            assert!(!slot.initialization, "{kind}");
            assert_eq!(slot.pilots_used, want, "{kind}");
        }
    }

    #[test]
    fn deeper_refinement_spends_more_per_tracking_slot() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig {
            refine_depth: 5,
            ..TrackerConfig::defaults_for(8)
        };
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(7);
        for _ in 0..INIT_SLOTS {
            track_step(&e, &cfg, &mut state, terminal_at_theta(-0.2, 2.0), &mut r).unwrap();
        }
        let slot = track_step(&e, &cfg, &mut state, terminal_at_theta(-0.2, 2.0), &mut r).unwrap();
        assert_eq!(slot.pilots_used, 24);
    }

    #[test]
    fn full_coverage_init_scans_half_the_narrowest_level() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::new(10.0));
        let cfg = TrackerConfig::defaults_for(8);
        let mut state = TrackerState::new(TrackerKind::FullCoverage);
        let mut r = rng(8);
        let slot = track_step(&e, &cfg, &mut state, terminal_at_theta(0.8, 4.0), &mut r).unwrap();
        assert!(slot.initialization);
        assert_eq!(slot.pilots_used, 128);
        assert!(slot.est_location.is_none());
    }

    #[test]
    fn noiseless_init_lands_in_the_true_sector() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let width = cb.level(8).unwrap()[0].sector_width;
        for (seed, theta) in [(10u64, -1.1), (11, -0.37), (12, 0.0), (13, 0.52), (14, 1.3)] {
            let mut state = TrackerState::new(TrackerKind::Hierarchical);
            let mut r = rng(seed);
            let slot =
                track_step(&e, &cfg, &mut state, terminal_at_theta(theta, 3.0), &mut r).unwrap();
            let psi_true = 0.5 * theta.sin();
            let psi_est = 0.5 * slot.theta_est.sin();
            assert!(
                (psi_est - psi_true).abs() <= width / 2.0 + 1e-12,
                "theta {theta}: estimate off by {}",
                (psi_est - psi_true).abs()
            );
            assert!(!slot.interrupted);
            assert!(!slot.detection_failed);
        }
    }

    #[test]
    fn stationary_noiseless_tracking_is_exact_and_uninterrupted() {
        // Hierarchical initialization always descends through the sector that
        // contains the terminal, so a terminal parked exactly on a last-level
        // sector center is recovered exactly, every slot.
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let boresight = cb.codeword(8, 140).unwrap().boresight_theta(cb.config());
        let terminal = terminal_at_theta(boresight, 3.0);
        for kind in [TrackerKind::Hierarchical, TrackerKind::SingleLevel] {
            let mut state = TrackerState::new(kind);
            let mut r = rng(20);
            for _ in 0..8 {
                let slot = track_step(&e, &cfg, &mut state, terminal, &mut r).unwrap();
                assert!(
                    (slot.theta_est - boresight).abs() < 1e-12,
                    "{kind}: est {} vs boresight {boresight}, pilots {}",
                    slot.theta_est,
                    slot.pilots_used
                );
                assert!(!slot.interrupted, "{kind}");
            }
            assert_eq!(state.restarts(), 0, "{kind}");
        }
    }

    #[test]
    fn stationary_noiseless_full_coverage_locks_on() {
        // The full-coverage scan decimates the last level, so a terminal
        // sitting exactly on a sector center would land on the nulls of every
        // scanned beam (a measure-zero alignment where the coarse pass reads
        // all zeros). A generic off-center terminal exercises the realistic
        // case: lock-on within the containing sector, no interruptions.
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let cw = cb.codeword(8, 140).unwrap();
        let psi = cw.sector_center + 0.31 * cw.sector_width;
        let theta = crate::codebook::direction_angle(cb.config(), psi);
        let terminal = terminal_at_theta(theta, 3.0);
        let mut state = TrackerState::new(TrackerKind::FullCoverage);
        let mut r = rng(20);
        for _ in 0..8 {
            let slot = track_step(&e, &cfg, &mut state, terminal, &mut r).unwrap();
            assert!(
                (slot.theta_est - cw.boresight_theta(cb.config())).abs() < cw.sector_width,
                "est {} strayed from sector 140",
                slot.theta_est
            );
            assert!(!slot.interrupted);
        }
        assert_eq!(state.restarts(), 0);
    }

    #[test]
    fn noiseless_tracking_follows_uniform_motion() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let width = cb.level(8).unwrap()[0].sector_width;
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(21);
        for t in 0..50 {
            let pos = Point2D::new(3.0, -1.0 + 0.04 * t as f64);
            let slot = track_step(&e, &cfg, &mut state, pos, &mut r).unwrap();
            let psi_true = 0.5 * slot.theta_true.sin();
            let psi_est = 0.5 * slot.theta_est.sin();
            assert!(
                (psi_est - psi_true).abs() <= width / 2.0 + 1e-12,
                "slot {t} off by {}",
                (psi_est - psi_true).abs()
            );
        }
        assert_eq!(state.restarts(), 0);
    }

    #[test]
    fn scheduled_restart_replays_initialization() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(22);
        let terminal = terminal_at_theta(0.3, 3.0);
        for _ in 0..4 {
            track_step(&e, &cfg, &mut state, terminal, &mut r).unwrap();
        }
        state.schedule_restart();
        assert!(state.is_initializing());
        assert_eq!(state.restarts(), 1);
        for _ in 0..INIT_SLOTS {
            let slot = track_step(&e, &cfg, &mut state, terminal, &mut r).unwrap();
            assert!(slot.initialization);
            assert_eq!(slot.pilots_used, 28);
        }
    }

    #[test]
    fn hopeless_snr_keeps_the_tracker_in_initialization() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::new(-40.0));
        let cfg = TrackerConfig::defaults_for(8);
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(23);
        let mut interruptions = 0;
        for _ in 0..6 {
            let slot =
                track_step(&e, &cfg, &mut state, terminal_at_theta(0.6, 3.0), &mut r).unwrap();
            assert!(slot.initialization);
            if slot.interrupted {
                interruptions += 1;
            }
        }
        assert!(
            interruptions >= 5,
            "only {interruptions}/6 slots interrupted"
        );
        assert_eq!(state.restarts(), interruptions);
    }

    #[test]
    fn location_estimates_feed_the_history() {
        let cb = codebook();
        let e = env(&cb, NoiseModel::disabled());
        let cfg = TrackerConfig::defaults_for(8);
        let mut state = TrackerState::new(TrackerKind::Hierarchical);
        let mut r = rng(24);
        let terminal = terminal_at_theta(0.25, 2.0);
        for _ in 0..5 {
            let slot = track_step(&e, &cfg, &mut state, terminal, &mut r).unwrap();
            let loc = slot.est_location.unwrap();
            // Noiseless, zero distance error: the location sits at the true
            // range along the estimated boresight.
            assert!((loc.norm() - 2.0).abs() < 1e-12);
        }
        assert_eq!(state.loc_history.len(), 3);
    }
}
