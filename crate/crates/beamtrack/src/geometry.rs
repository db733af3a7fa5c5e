//! Room geometry, user mobility, and polar conversion.
//!
//! The access point sits at the midpoint of one wall with its array along the
//! y-axis and the boresight pointing into the room along +x; coordinates are
//! shifted so the access point is the origin. The room therefore spans
//! `[0, width]` in x and `[-height/2, height/2]` in y. An episode starts
//! uniformly on a disk around the room center and performs a fixed-step
//! random walk with uniform headings; the walk is then linearly resampled so
//! that `q_i` timeslots elapse per original step.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::ops::{Add, Mul, Sub};

use rand::Rng;

use crate::{Error, Result};

/// Headings are redrawn this many times before a blocked step gives up and
/// stays in place for one step.
const MAX_HEADING_REDRAWS: usize = 1000;

// ── Points and polar coordinates ────────────────────────────────────────────

/// A position in the room plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to `other`.
    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Distance from the origin.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, s: f64) -> Point2D {
        Point2D::new(self.x * s, self.y * s)
    }
}

/// Polar coordinates of a user as seen from the access point.
#[derive(Debug, Clone, Copy)]
pub struct Polar {
    /// Distance from the array, in metres.
    pub range_m: f64,
    /// Angle off boresight in radians, positive toward +y.
    pub theta_rad: f64,
}

impl Polar {
    /// Whether the position is strictly in front of the array. Points on the
    /// array axis itself (|theta| = pi/2) are outside the serviceable range.
    pub fn serviceable(&self) -> bool {
        self.theta_rad.abs() < FRAC_PI_2
    }
}

/// Polar coordinates of `ue` relative to `ap`, boresight along +x.
pub fn true_polar(ue: Point2D, ap: Point2D) -> Result<Polar> {
    let d = ue - ap;
    let range_m = d.norm();
    if range_m == 0.0 {
        return Err(Error::Geometry(
            "user position coincides with the access point".into(),
        ));
    }
    Ok(Polar {
        range_m,
        theta_rad: d.y.atan2(d.x),
    })
}

// ── Room ────────────────────────────────────────────────────────────────────

/// Rectangular room with the access point at the midpoint of one wall.
///
/// The room occupies `[ap.x, ap.x + width]` along the boresight and
/// `[ap.y - height/2, ap.y + height/2]` along the array axis.
#[derive(Debug, Clone, Copy)]
pub struct RoomConfig {
    /// Extent along the boresight (+x), in metres.
    pub width: f64,
    /// Extent along the array axis (y), in metres.
    pub height: f64,
    /// Access-point position; the origin by convention.
    pub ap_position: Point2D,
}

impl RoomConfig {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if width.is_nan() || width <= 0.0 || height.is_nan() || height <= 0.0 {
            return Err(Error::Config(format!(
                "room dimensions must be positive, got {width} x {height}"
            )));
        }
        Ok(Self {
            width,
            height,
            ap_position: Point2D::new(0.0, 0.0),
        })
    }

    /// Geometric center of the room.
    pub fn center(&self) -> Point2D {
        self.ap_position + Point2D::new(self.width / 2.0, 0.0)
    }

    /// Whether `p` lies inside the room (walls included).
    pub fn contains(&self, p: Point2D) -> bool {
        let d = p - self.ap_position;
        d.x >= 0.0 && d.x <= self.width && d.y.abs() <= self.height / 2.0
    }
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            width: 5.0,
            height: 5.0,
            ap_position: Point2D::new(0.0, 0.0),
        }
    }
}

// ── Mobility ────────────────────────────────────────────────────────────────

/// Mobility parameters for one episode.
#[derive(Debug, Clone)]
pub struct WalkParams {
    /// Length of each random-walk step, in metres.
    pub step_length_m: f64,
    /// Number of original walk steps before resampling.
    pub num_original_steps: usize,
    /// Timeslots per original step (resampling factor).
    pub q_i: u32,
    /// Radius of the uniform start disk around the room center, in metres.
    pub start_disk_radius_m: f64,
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if self.step_length_m.is_nan() || self.step_length_m <= 0.0 {
            return Err(Error::Config(format!(
                "step length must be positive, got {}",
                self.step_length_m
            )));
        }
        if self.q_i == 0 {
            return Err(Error::Config("q_i must be at least 1".into()));
        }
        if self.start_disk_radius_m.is_nan() || self.start_disk_radius_m < 0.0 {
            return Err(Error::Config(format!(
                "start disk radius must be non-negative, got {}",
                self.start_disk_radius_m
            )));
        }
        Ok(())
    }
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            step_length_m: 1.0,
            num_original_steps: 10,
            q_i: 10,
            start_disk_radius_m: 1.5,
        }
    }
}

/// Uniform sample on the start disk around the room center.
///
/// Errors if the disk is not fully contained in the room.
pub fn sample_start_location(
    room: &RoomConfig,
    params: &WalkParams,
    rng: &mut impl Rng,
) -> Result<Point2D> {
    let c = room.center();
    let radius = params.start_disk_radius_m;
    let d = c - room.ap_position;
    if d.x - radius < 0.0 || d.x + radius > room.width || d.y.abs() + radius > room.height / 2.0 {
        return Err(Error::Config(format!(
            "start disk of radius {radius} m does not fit inside the room"
        )));
    }
    // Uniform density on the disk: radius grows with the square root.
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = TAU * rng.gen::<f64>();
    Ok(c + Point2D::new(r * phi.cos(), r * phi.sin()))
}

/// Fixed-step random walk with uniform headings, confined to the room.
///
/// A step that would leave the room is redrawn; after [`MAX_HEADING_REDRAWS`]
/// failed attempts the user stays in place for that step. The returned path
/// has `num_original_steps + 1` points, starting with `start`.
pub fn generate_random_walk(
    start: Point2D,
    room: &RoomConfig,
    params: &WalkParams,
    rng: &mut impl Rng,
) -> Result<Vec<Point2D>> {
    if !room.contains(start) {
        return Err(Error::Config(format!(
            "walk start ({}, {}) is outside the room",
            start.x, start.y
        )));
    }
    let mut points = Vec::with_capacity(params.num_original_steps + 1);
    points.push(start);
    let mut prev = start;
    for _ in 0..params.num_original_steps {
        let mut next = prev;
        for _ in 0..MAX_HEADING_REDRAWS {
            let phi = TAU * rng.gen::<f64>();
            let cand = prev
                + Point2D::new(
                    params.step_length_m * phi.cos(),
                    params.step_length_m * phi.sin(),
                );
            if room.contains(cand) {
                next = cand;
                break;
            }
        }
        points.push(next);
        prev = next;
    }
    Ok(points)
}

// ── Resampling ──────────────────────────────────────────────────────────────

/// Per-timeslot positions of one episode.
///
/// Index 0 is the walk start (the timeslot where initialization begins); the
/// following `q_i * num_original_steps` entries are the resampled positions,
/// one per timeslot.
#[derive(Debug, Clone)]
pub struct MotionPath {
    positions: Vec<Point2D>,
}

impl MotionPath {
    /// Number of tracked timeslots (`q_i` per original walk step).
    pub fn timeslot_count(&self) -> usize {
        self.positions.len() - 1
    }

    /// Position at timeslot `t`; `t = 0` is the walk start.
    pub fn position(&self, t: usize) -> Point2D {
        self.positions[t]
    }

    pub fn positions(&self) -> &[Point2D] {
        &self.positions
    }
}

/// Linear interpolation of `q_i` timeslots into every original walk step.
pub fn resample_path(walk: &[Point2D], q_i: u32) -> Result<MotionPath> {
    if walk.is_empty() {
        return Err(Error::Config("cannot resample an empty walk".into()));
    }
    if q_i == 0 {
        return Err(Error::Config("q_i must be at least 1".into()));
    }
    let q = q_i as usize;
    let mut positions = Vec::with_capacity((walk.len() - 1) * q + 1);
    positions.push(walk[0]);
    for seg in walk.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for k in 1..=q {
            if k == q {
                // Land exactly on the original point, immune to rounding.
                positions.push(b);
            } else {
                let t = k as f64 / q as f64;
                positions.push(a + (b - a) * t);
            }
        }
    }
    Ok(MotionPath { positions })
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_radius_start_is_room_center() {
        let room = RoomConfig::default();
        let params = WalkParams {
            start_disk_radius_m: 0.0,
            ..WalkParams::default()
        };
        let mut r = rng(7);
        for _ in 0..10 {
            let p = sample_start_location(&room, &params, &mut r).unwrap();
            // (2.5, 0) here; (2.5, 2.5) in a corner-origin frame of the same room.
            assert_eq!(p, Point2D::new(2.5, 0.0));
        }
    }

    #[test]
    fn start_samples_stay_on_disk_and_average_to_center() {
        let room = RoomConfig::default();
        let params = WalkParams::default(); // radius 1.5
        let mut r = rng(11);
        let c = room.center();
        let n = 100_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let p = sample_start_location(&room, &params, &mut r).unwrap();
            assert!(p.distance(c) <= params.start_disk_radius_m + 1e-12);
            sx += p.x;
            sy += p.y;
        }
        let mean = Point2D::new(sx / n as f64, sy / n as f64);
        assert!(mean.distance(c) < 0.02, "disk mean drifted: {mean:?}");
    }

    #[test]
    fn start_radii_match_disk_cdf() {
        // Kolmogorov-Smirnov distance between the sampled radial CDF and the
        // uniform-disk law r^2 / R^2.
        let room = RoomConfig::default();
        let params = WalkParams::default();
        let rmax = params.start_disk_radius_m;
        let mut r = rng(13);
        let c = room.center();
        let n = 100_000;
        let mut radii: Vec<f64> = (0..n)
            .map(|_| {
                sample_start_location(&room, &params, &mut r)
                    .unwrap()
                    .distance(c)
            })
            .collect();
        radii.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, rad) in radii.iter().enumerate() {
            let f = (rad / rmax).powi(2);
            let hi = (i + 1) as f64 / n as f64;
            let lo = i as f64 / n as f64;
            ks = ks.max((hi - f).abs()).max((f - lo).abs());
        }
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn disk_poking_out_of_room_is_rejected() {
        let room = RoomConfig::new(2.0, 2.0).unwrap();
        let params = WalkParams {
            start_disk_radius_m: 1.5,
            ..WalkParams::default()
        };
        assert!(matches!(
            sample_start_location(&room, &params, &mut rng(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn walk_with_zero_steps_is_just_the_start() {
        let room = RoomConfig::default();
        let params = WalkParams {
            num_original_steps: 0,
            ..WalkParams::default()
        };
        let start = room.center();
        let walk = generate_random_walk(start, &room, &params, &mut rng(3)).unwrap();
        assert_eq!(walk, vec![start]);
    }

    #[test]
    fn walk_steps_have_exact_length() {
        let room = RoomConfig::default();
        let params = WalkParams::default();
        let mut r = rng(5);
        let start = sample_start_location(&room, &params, &mut r).unwrap();
        let walk = generate_random_walk(start, &room, &params, &mut r).unwrap();
        assert_eq!(walk.len(), params.num_original_steps + 1);
        for seg in walk.windows(2) {
            assert!((seg[0].distance(seg[1]) - params.step_length_m).abs() < 1e-12);
        }
    }

    #[test]
    fn walks_never_leave_the_room() {
        let room = RoomConfig::default();
        let params = WalkParams::default();
        let mut r = rng(17);
        for _ in 0..10_000 {
            let start = sample_start_location(&room, &params, &mut r).unwrap();
            let walk = generate_random_walk(start, &room, &params, &mut r).unwrap();
            for p in &walk {
                assert!(room.contains(*p), "escaped to {p:?}");
            }
        }
    }

    #[test]
    fn walk_start_outside_room_is_rejected() {
        let room = RoomConfig::default();
        let params = WalkParams::default();
        assert!(matches!(
            generate_random_walk(Point2D::new(-0.1, 0.0), &room, &params, &mut rng(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn resample_splits_one_step_in_half() {
        let walk = [Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0)];
        let path = resample_path(&walk, 2).unwrap();
        assert_eq!(path.timeslot_count(), 2);
        assert_eq!(
            path.positions(),
            &[
                Point2D::new(0.0, 0.0),
                Point2D::new(0.5, 0.0),
                Point2D::new(1.0, 0.0),
            ]
        );
    }

    #[test]
    fn resample_with_q1_is_identity() {
        let walk = [
            Point2D::new(0.0, 0.0),
            Point2D::new(0.6, 0.8),
            Point2D::new(1.6, 0.8),
        ];
        let path = resample_path(&walk, 1).unwrap();
        assert_eq!(path.positions(), &walk);
    }

    #[test]
    fn resample_spacing_is_uniform_within_a_segment() {
        let walk = [Point2D::new(0.0, 0.0), Point2D::new(0.0, 2.0)];
        let path = resample_path(&walk, 4).unwrap();
        assert_eq!(path.timeslot_count(), 4);
        for seg in path.positions().windows(2) {
            assert!((seg[0].distance(seg[1]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_preserves_endpoints_exactly() {
        let room = RoomConfig::default();
        let params = WalkParams::default();
        let mut r = rng(23);
        for _ in 0..100 {
            let start = sample_start_location(&room, &params, &mut r).unwrap();
            let walk = generate_random_walk(start, &room, &params, &mut r).unwrap();
            let path = resample_path(&walk, 7).unwrap();
            assert_eq!(path.position(0), walk[0]);
            assert_eq!(*path.positions().last().unwrap(), *walk.last().unwrap());
            assert_eq!(path.timeslot_count(), 7 * params.num_original_steps);
        }
    }

    #[test]
    fn polar_of_boresight_point() {
        let p = true_polar(Point2D::new(1.0, 0.0), Point2D::new(0.0, 0.0)).unwrap();
        assert!((p.range_m - 1.0).abs() < 1e-15);
        assert_eq!(p.theta_rad, 0.0);
        assert!(p.serviceable());
    }

    #[test]
    fn polar_of_diagonal_point() {
        let p = true_polar(Point2D::new(1.0, 1.0), Point2D::new(0.0, 0.0)).unwrap();
        assert!((p.range_m - 2f64.sqrt()).abs() < 1e-15);
        assert!((p.theta_rad - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn polar_on_array_axis_is_not_serviceable() {
        let p = true_polar(Point2D::new(0.0, 2.0), Point2D::new(0.0, 0.0)).unwrap();
        assert!((p.theta_rad - FRAC_PI_2).abs() < 1e-15);
        assert!(!p.serviceable());
    }

    #[test]
    fn polar_at_the_ap_is_degenerate() {
        assert!(matches!(
            true_polar(Point2D::new(0.0, 0.0), Point2D::new(0.0, 0.0)),
            Err(Error::Geometry(_))
        ));
    }
}
