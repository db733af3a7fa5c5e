//! Line-of-sight channel, pilot measurements, and thresholded beam search.
//!
//! The downlink is modeled as a single line-of-sight ray with a unit-magnitude
//! complex gain whose phase is drawn once per episode. Distance enters the
//! location estimate separately, so received pilot power is the beamforming
//! gain toward the terminal plus circularly-symmetric complex Gaussian noise.
//!
//! Noise is referenced per level: a pilot sent through a level-`u` beam sees
//! noise of variance `peak_gain(u) / 10^(snr/10)`, so a perfectly aligned beam
//! of any width is received at the configured SNR. This models a receiver
//! that integrates wide-aperture pilots proportionally longer, and it is the
//! regime in which a coarse-to-fine descent is actually usable: with a single
//! full-aperture noise reference instead, a bottom-level pilot at 10 dB would
//! sit 11 dB below the noise floor (gain 2/256 against variance 0.1), the
//! two-candidate argmax at the widest level would be near a coin flip, and
//! every tracker would collapse into a restart storm.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::codebook::{channel_response, level_peak_gain, ArrayConfig, Codeword};
use crate::geometry::{true_polar, Point2D};
use crate::{Error, Result};

/// Multiple of the pilot's own noise variance a search winner must clear to
/// count as a detection (~6 dB over the noise floor). Noiseless searches have
/// a zero floor and never fail.
pub const DETECTION_THRESHOLD_FACTOR: f64 = 4.0;

// ── Channel ─────────────────────────────────────────────────────────────────

/// Line-of-sight ray from the access point to the terminal.
#[derive(Debug, Clone, Copy)]
pub struct LosChannel {
    /// True distance in meters.
    pub range_m: f64,
    /// True angle in radians, in the array's field of view.
    pub theta_rad: f64,
    /// True spatial direction, `spacing_ratio * sin(theta)`.
    pub psi: f64,
    /// Unit-magnitude complex path gain.
    pub beta: Complex64,
}

/// Build the line-of-sight channel between a terminal and the access point.
pub fn los_channel(
    config: &ArrayConfig,
    terminal: Point2D,
    access_point: Point2D,
    beta_phase: f64,
) -> Result<LosChannel> {
    let polar = true_polar(terminal, access_point)?;
    let psi = crate::codebook::spatial_direction(config, polar.theta_rad)?;
    Ok(LosChannel {
        range_m: polar.range_m,
        theta_rad: polar.theta_rad,
        psi,
        beta: Complex64::from_polar(1.0, beta_phase),
    })
}

// ── Noise ───────────────────────────────────────────────────────────────────

/// Additive complex Gaussian noise level, set by the per-pilot SNR that a
/// perfectly aligned beam sees at its own peak gain.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub snr_db: f64,
    /// When false the channel is noiseless regardless of `snr_db`.
    pub enabled: bool,
}

impl NoiseModel {
    pub fn new(snr_db: f64) -> Self {
        Self {
            snr_db,
            enabled: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            snr_db: f64::INFINITY,
            enabled: false,
        }
    }

    /// Complex noise variance relative to a unit-gain reference.
    pub fn variance(&self) -> f64 {
        if self.enabled {
            10f64.powf(-self.snr_db / 10.0)
        } else {
            0.0
        }
    }

    /// Complex noise variance for a pilot sent through a level-`level` beam:
    /// the unit-gain variance scaled by that level's aligned peak gain, so the
    /// aligned-beam SNR is `snr_db` at every level.
    pub fn variance_at(&self, config: &ArrayConfig, level: u32) -> f64 {
        self.variance() * level_peak_gain(config, level)
    }
}

// ── Pilot measurements ──────────────────────────────────────────────────────

/// Running count of pilot symbols spent; every measurement charges it, so the
/// reported totals cannot drift from the measurements actually taken.
#[derive(Debug, Default, Clone, Copy)]
pub struct PilotCounter {
    used: u64,
}

impl PilotCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    fn charge(&mut self) {
        self.used += 1;
    }
}

/// Received power of one pilot symbol sent through `cw` over `channel`.
#[derive(Debug, Clone, Copy)]
pub struct PilotMeasurement {
    pub level: u32,
    pub index: u32,
    pub power: f64,
}

/// Transmit one pilot through a codeword and measure its received power.
pub fn measure_pilot(
    config: &ArrayConfig,
    channel: &LosChannel,
    cw: &Codeword,
    noise: &NoiseModel,
    rng: &mut impl Rng,
    pilots: &mut PilotCounter,
) -> PilotMeasurement {
    pilots.charge();
    let mut observed = channel.beta * channel_response(config, cw, channel.psi);
    let variance = noise.variance_at(config, cw.level);
    if variance > 0.0 {
        let component = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite noise std");
        observed += Complex64::new(component.sample(rng), component.sample(rng));
    }
    PilotMeasurement {
        level: cw.level,
        index: cw.index,
        power: observed.norm_sqr(),
    }
}

// ── Beam search ─────────────────────────────────────────────────────────────

/// Result of measuring a set of candidate codewords.
#[derive(Debug, Clone, Copy)]
pub struct SearchOutcome<'a> {
    /// Candidate with the highest measured power. Ties keep the earliest
    /// candidate in the given order.
    pub winner: &'a Codeword,
    pub winner_power: f64,
    /// Whether the winner's power clears the detection floor. Without noise
    /// the floor is zero and any nonzero measurement counts as detected.
    pub success: bool,
    pub pilots_used: u32,
}

/// Send one pilot per candidate and pick the strongest response, flagging
/// whether it clears the level's detection floor.
pub fn best_codeword<'a>(
    config: &ArrayConfig,
    channel: &LosChannel,
    candidates: &[&'a Codeword],
    noise: &NoiseModel,
    rng: &mut impl Rng,
    pilots: &mut PilotCounter,
) -> Result<SearchOutcome<'a>> {
    if candidates.is_empty() {
        return Err(Error::Config(
            "beam search needs at least one candidate".into(),
        ));
    }
    let level = candidates[0].level;
    debug_assert!(candidates.iter().all(|c| c.level == level));
    let mut winner = candidates[0];
    let mut winner_power = f64::NEG_INFINITY;
    for cw in candidates {
        let m = measure_pilot(config, channel, cw, noise, rng, pilots);
        if m.power > winner_power {
            winner = cw;
            winner_power = m.power;
        }
    }
    let floor = DETECTION_THRESHOLD_FACTOR * noise.variance_at(config, level);
    Ok(SearchOutcome {
        winner,
        winner_power,
        success: winner_power > floor,
        pilots_used: candidates.len() as u32,
    })
}

// ── Tests ───────────────────────────────────────────────────────────────────
