//! Scenario configuration from TOML files and command-line overrides.
//!
//! Values resolve in three layers: built-in defaults, then the optional TOML
//! file, then explicit command-line flags. Overriding the array size resets
//! the pilot schedule to the defaults for the new level count before any
//! explicit schedule override is applied, so partial overrides always leave a
//! consistent scenario.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::codebook::ArrayConfig;
use crate::sim::ScenarioConfig;
use crate::tracker::TrackerConfig;
use crate::{Error, Result};

/// Episode count selected by the `full_scale` switch.
pub const FULL_SCALE_EPISODES: usize = 10_000;

// ── File format ─────────────────────────────────────────────────────────────

/// Root of the TOML configuration file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub room: RoomSection,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Array elements; a power of two of at least 4.
    pub elements: Option<usize>,
    /// Element spacing over wavelength.
    pub spacing_ratio: Option<f64>,
    /// Carrier frequency in GHz.
    pub carrier_ghz: Option<f64>,
    pub snr_db: Option<f64>,
    /// Distance-estimator error std in meters.
    pub sigma_e: Option<f64>,
    /// Timeslots per walk step.
    pub qi: Option<u32>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    /// Default tracker for `run` and `trace`.
    pub tracker: Option<String>,
    pub pilots_per_level: Option<Vec<usize>>,
    pub refine_depth: Option<u32>,
    pub no_noise: Option<bool>,
    pub full_scale: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub width: Option<f64>,
    pub height: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub step_length: Option<f64>,
    pub num_original_steps: Option<usize>,
    pub start_disk_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

/// Parse a TOML configuration file.
pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

// ── Layered overrides ───────────────────────────────────────────────────────

/// Field-wise scenario overrides; `None` leaves the lower layer untouched.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub elements: Option<usize>,
    pub spacing_ratio: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub snr_db: Option<f64>,
    pub sigma_e_m: Option<f64>,
    pub qi: Option<u32>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub pilots_per_level: Option<Vec<usize>>,
    pub refine_depth: Option<u32>,
    pub no_noise: Option<bool>,
    pub full_scale: Option<bool>,
    pub room_width: Option<f64>,
    pub room_height: Option<f64>,
    pub step_length_m: Option<f64>,
    pub num_original_steps: Option<usize>,
    pub start_disk_radius_m: Option<f64>,
    pub tracker: Option<String>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// `top` wins field-wise over `self`.
    pub fn overlay(self, top: Overrides) -> Overrides {
        Overrides {
            elements: top.elements.or(self.elements),
            spacing_ratio: top.spacing_ratio.or(self.spacing_ratio),
            carrier_hz: top.carrier_hz.or(self.carrier_hz),
            snr_db: top.snr_db.or(self.snr_db),
            sigma_e_m: top.sigma_e_m.or(self.sigma_e_m),
            qi: top.qi.or(self.qi),
            episodes: top.episodes.or(self.episodes),
            seed: top.seed.or(self.seed),
            pilots_per_level: top.pilots_per_level.or(self.pilots_per_level),
            refine_depth: top.refine_depth.or(self.refine_depth),
            no_noise: top.no_noise.or(self.no_noise),
            full_scale: top.full_scale.or(self.full_scale),
            room_width: top.room_width.or(self.room_width),
            room_height: top.room_height.or(self.room_height),
            step_length_m: top.step_length_m.or(self.step_length_m),
            num_original_steps: top.num_original_steps.or(self.num_original_steps),
            start_disk_radius_m: top.start_disk_radius_m.or(self.start_disk_radius_m),
            tracker: top.tracker.or(self.tracker),
            out: top.out.or(self.out),
        }
    }
}

impl FileConfig {
    /// Flatten the file into the override layer.
    pub fn overrides(&self) -> Overrides {
        Overrides {
            elements: self.scenario.elements,
            spacing_ratio: self.scenario.spacing_ratio,
            carrier_hz: self.scenario.carrier_ghz.map(|g| g * 1e9),
            snr_db: self.scenario.snr_db,
            sigma_e_m: self.scenario.sigma_e,
            qi: self.scenario.qi,
            episodes: self.scenario.episodes,
            seed: self.scenario.seed,
            pilots_per_level: self.scenario.pilots_per_level.clone(),
            refine_depth: self.scenario.refine_depth,
            no_noise: self.scenario.no_noise,
            full_scale: self.scenario.full_scale,
            room_width: self.room.width,
            room_height: self.room.height,
            step_length_m: self.walk.step_length,
            num_original_steps: self.walk.num_original_steps,
            start_disk_radius_m: self.walk.start_disk_radius,
            tracker: self.scenario.tracker.clone(),
            out: self.output.path.clone(),
        }
    }
}

/// Resolve just the antenna-array fields of the override layer. This is all
/// `dump-codebook` needs, so it stays usable for array sizes too small to
/// carry a full tracking schedule.
pub fn build_array(o: &Overrides) -> Result<ArrayConfig> {
    let mut array = ArrayConfig::default();
    if let Some(n) = o.elements {
        array.n_elements = n;
    }
    if let Some(s) = o.spacing_ratio {
        array.spacing_ratio = s;
    }
    if let Some(f) = o.carrier_hz {
        array.carrier_frequency_hz = f;
    }
    array.validate()?;
    Ok(array)
}

/// Resolve the final scenario from defaults plus one merged override layer.
pub fn build_scenario(o: &Overrides) -> Result<ScenarioConfig> {
    let mut sc = ScenarioConfig {
        array: build_array(o)?,
        ..ScenarioConfig::default()
    };
    if o.elements.is_some() {
        // A new level count invalidates the default schedule; rebuild it
        // before any explicit schedule override lands on top.
        sc.tracker = TrackerConfig::defaults_for(sc.array.levels());
    }
    if let Some(v) = o.snr_db {
        sc.snr_db = v;
    }
    if let Some(v) = o.sigma_e_m {
        sc.tracker.sigma_e_m = v;
    }
    if let Some(v) = o.qi {
        sc.walk.q_i = v;
    }
    if let Some(p) = &o.pilots_per_level {
        sc.tracker.pilots_per_level = p.clone();
    }
    if let Some(g) = o.refine_depth {
        sc.tracker.refine_depth = g;
    }
    if o.no_noise == Some(true) {
        sc.noise_enabled = false;
    }
    if let Some(w) = o.room_width {
        sc.room = crate::geometry::RoomConfig::new(w, sc.room.height)?;
    }
    if let Some(h) = o.room_height {
        sc.room = crate::geometry::RoomConfig::new(sc.room.width, h)?;
    }
    if let Some(v) = o.step_length_m {
        sc.walk.step_length_m = v;
    }
    if let Some(v) = o.num_original_steps {
        sc.walk.num_original_steps = v;
    }
    if let Some(v) = o.start_disk_radius_m {
        sc.walk.start_disk_radius_m = v;
    }
    if o.full_scale == Some(true) {
        sc.episodes = FULL_SCALE_EPISODES;
    }
    if let Some(e) = o.episodes {
        sc.episodes = e;
    }
    if let Some(s) = o.seed {
        sc.base_seed = s;
    }
    sc.validate()?;
    Ok(sc)
}

// ── Tests ───────────────────────────────────────────────────────────────────
