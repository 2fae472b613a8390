//! Mechanical rotating LiDAR: beam pattern, ray casting against the scene
//! and droplet clusters, receiver drop-off and range-image projection.

mod cast;
mod grid;
mod projection;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::{Pose, Vec3};
use crate::rng::{substream, Domain, LazyRng};
use crate::scene::{Scene, WeatherClass};
use crate::semantics::SemanticClass;
use crate::spray::{DropletCluster, SprayParams};

pub use cast::{apply_dropoff, cast, interception_probability, RayTargets, TargetBox};
pub use grid::ClusterGrid;
pub use projection::{project_range_raster, sector_azimuth_index, RASTER_CHANNELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LidarModel {
    pub channels: u32,
    pub points_per_second: f64,
    pub rotation_hz: f64,
    pub max_range_m: f64,
    /// [lower, upper] elevation in degrees.
    pub vfov_deg: [f64; 2],
    pub mount_height_m: f64,
    /// Full-angle beam divergence.
    pub beam_divergence_rad: f64,
    pub drop_probability: f64,
    pub intercept_gain_kappa: f64,
}

impl Default for LidarModel {
    fn default() -> Self {
        Self {
            channels: 64,
            points_per_second: 1.6e6,
            rotation_hz: 10.0,
            max_range_m: 75.0,
            vfov_deg: [-17.6, 2.4],
            mount_height_m: 2.0,
            beam_divergence_rad: 2e-3,
            drop_probability: 0.08,
            intercept_gain_kappa: 12.0,
        }
    }
}

impl LidarModel {
    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        let err = |f: &str, r: &str| Err(ConfigError::new(format!("lidar.{f}"), r));
        if self.channels < 1 {
            return err("channels", "must be >= 1");
        }
        if !(self.points_per_second > 0.0 && self.rotation_hz > 0.0) {
            return err("points_per_second", "rates must be > 0");
        }
        if self.azimuth_steps() < 1 {
            return err("points_per_second", "fewer than one azimuth step per revolution");
        }
        if !(self.max_range_m > 0.0) {
            return err("max_range_m", "must be > 0");
        }
        let [lo, hi] = self.vfov_deg;
        if !(lo < hi && lo >= -90.0 && hi <= 90.0) {
            return err("vfov_deg", "must satisfy -90 <= lower < upper <= 90");
        }
        if !(self.mount_height_m > 0.0) {
            return err("mount_height_m", "must be > 0");
        }
        if !(self.beam_divergence_rad > 0.0) {
            return err("beam_divergence_rad", "must be > 0");
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return err("drop_probability", "must lie in [0, 1)");
        }
        if !(self.intercept_gain_kappa >= 0.0) {
            return err("intercept_gain_kappa", "must be >= 0");
        }
        Ok(())
    }

    /// Columns per revolution, `points_per_second / (rotation_hz · channels)`.
    pub fn azimuth_steps(&self) -> usize {
        (self.points_per_second / (self.rotation_hz * self.channels as f64)).round() as usize
    }

    pub fn rays_per_frame(&self) -> usize {
        self.channels as usize * self.azimuth_steps()
    }

    /// Elevation of a channel in radians; channel 0 is the lowest beam.
    pub fn elevation(&self, channel: usize) -> f64 {
        let [lo, hi] = self.vfov_deg;
        if self.channels == 1 {
            return lo.to_radians();
        }
        let t = channel as f64 / (self.channels - 1) as f64;
        (lo + t * (hi - lo)).to_radians()
    }

    /// Azimuth of a column in radians, counter-clockwise from the sensor +X.
    pub fn azimuth(&self, index: usize) -> f64 {
        std::f64::consts::TAU * index as f64 / self.azimuth_steps() as f64
    }

    /// Unit direction in the sensor frame.
    pub fn direction(&self, channel: usize, azimuth_index: usize) -> Vec3 {
        let (se, ce) = self.elevation(channel).sin_cos();
        let (sa, ca) = self.azimuth(azimuth_index).sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }

    /// Sensor origin for an ego pose.
    pub fn origin(&self, ego: &Pose) -> Vec3 {
        ego.to_world(Vec3::new(0.0, 0.0, self.mount_height_m))
    }
}

/// `(elevation, azimuth)` in radians for every ray of one revolution,
/// channel-major.
pub fn beam_pattern(model: &LidarModel) -> Vec<(f64, f64)> {
    let steps = model.azimuth_steps();
    (0..model.channels as usize)
        .flat_map(|c| (0..steps).map(move |a| (model.elevation(c), model.azimuth(a))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub channel: u32,
    pub azimuth_index: u32,
}

/// Intensity value meaning "not yet assigned".
pub const INTENSITY_SENTINEL: f32 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub range_m: f64,
    pub point: Vec3,
    pub class: SemanticClass,
    pub target_albedo: [f32; 3],
    pub target_id: Option<u32>,
    pub dropped: bool,
    pub intensity: f32,
}

impl Hit {
    pub fn none() -> Self {
        Self {
            range_m: 0.0,
            point: Vec3::zeros(),
            class: SemanticClass::None,
            target_albedo: [0.0; 3],
            target_id: None,
            dropped: false,
            intensity: INTENSITY_SENTINEL,
        }
    }

    pub fn is_return(&self) -> bool {
        self.class != SemanticClass::None
    }
}

/// One revolution of returns.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarFrame {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub ego_pose: Pose,
    pub sensor_origin: Vec3,
    pub weather_class: WeatherClass,
    pub channels: usize,
    pub azimuth_steps: usize,
    /// Channel-major `channels × azimuth_steps` grid, dropped hits included.
    pub hits: Vec<Hit>,
    /// Sensor-frame `(x, y, z, intensity)` of every non-dropped return.
    pub points: Vec<[f32; 4]>,
    pub classes: Vec<SemanticClass>,
    /// Grid cell of each point.
    pub point_cells: Vec<u32>,
}

impl LidarFrame {
    pub fn hit(&self, channel: usize, azimuth_index: usize) -> &Hit {
        &self.hits[channel * self.azimuth_steps + azimuth_index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy grid intensities into the point list.
    pub fn sync_point_intensities(&mut self) {
        for (p, &cell) in self.points.iter_mut().zip(&self.point_cells) {
            p[3] = self.hits[cell as usize].intensity;
        }
    }
}

/// Frame coordinates for the per-ray random substreams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanContext {
    pub seed: u64,
    pub frame_index: u64,
    pub timestamp_s: f64,
}

/// Cast every ray of one revolution from the ego mount, apply drop-off and
/// collect points. All rays share the frame timestamp.
pub fn scan_frame(
    scene: &Scene,
    clusters: &[DropletCluster],
    spray: &SprayParams,
    model: &LidarModel,
    ctx: ScanContext,
) -> LidarFrame {
    let origin = model.origin(&scene.ego.pose);
    let targets = RayTargets::new(scene, clusters, spray, model);
    let steps = model.azimuth_steps();
    let channels = model.channels as usize;
    let ego = scene.ego.pose;

    let mut hits = vec![Hit::none(); channels * steps];
    hits.par_chunks_mut(steps).enumerate().for_each(|(ch, row)| {
        for (az, slot) in row.iter_mut().enumerate() {
            let ray = Ray {
                origin,
                direction: ego.rotate(model.direction(ch, az)),
                channel: ch as u32,
                azimuth_index: az as u32,
            };
            let mut rng = LazyRng::new(
                ctx.seed,
                Domain::RayIntercept,
                ctx.frame_index,
                ch as u64,
                az as u64,
            );
            let mut hit = cast(&ray, &targets, model, &mut rng);
            if hit.is_return() && model.drop_probability > 0.0 {
                let mut drop_rng =
                    substream(ctx.seed, Domain::RayDrop, ctx.frame_index, ch as u64, az as u64);
                hit = apply_dropoff(hit, model.drop_probability, &mut drop_rng);
            }
            *slot = hit;
        }
    });

    let mut points = Vec::new();
    let mut classes = Vec::new();
    let mut point_cells = Vec::new();
    for (cell, hit) in hits.iter().enumerate() {
        if hit.is_return() && !hit.dropped {
            let p = ego.unrotate(hit.point - origin);
            points.push([p.x as f32, p.y as f32, p.z as f32, INTENSITY_SENTINEL]);
            classes.push(hit.class);
            point_cells.push(cell as u32);
        }
    }

    LidarFrame {
        frame_index: ctx.frame_index,
        timestamp_s: ctx.timestamp_s,
        ego_pose: ego,
        sensor_origin: origin,
        weather_class: scene.weather.weather_class,
        channels,
        azimuth_steps: steps,
        hits,
        points,
        classes,
        point_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pattern_has_160k_rays() {
        let m = LidarModel::default();
        assert_eq!(m.azimuth_steps(), 2500);
        assert_eq!(beam_pattern(&m).len(), 160_000);
        assert_eq!(m.rays_per_frame(), 160_000);
    }

    #[test]
    fn elevations_span_the_vertical_fov() {
        let m = LidarModel::default();
        assert!((m.elevation(0).to_degrees() + 17.6).abs() < 1e-12);
        assert!((m.elevation(63).to_degrees() - 2.4).abs() < 1e-12);
        let spacing = m.elevation(1).to_degrees() - m.elevation(0).to_degrees();
        assert!((spacing - 20.0 / 63.0).abs() < 1e-12);
        assert!((spacing - 0.31746).abs() < 1e-5);
    }

    #[test]
    fn azimuths_cover_a_half_open_turn() {
        let m = LidarModel::default();
        let pattern = beam_pattern(&m);
        assert_eq!(pattern[0].1, 0.0);
        let last = pattern[2499].1;
        assert!(last < std::f64::consts::TAU);
        assert!((std::f64::consts::TAU - last - std::f64::consts::TAU / 2500.0).abs() < 1e-12);
    }

    #[test]
    fn directions_are_unit() {
        let m = LidarModel::default();
        for ch in [0, 17, 63] {
            for az in [0, 1, 1249, 2499] {
                assert!((m.direction(ch, az).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        let mut m = LidarModel::default();
        m.vfov_deg = [2.4, -17.6];
        assert_eq!(m.validate().unwrap_err().field, "lidar.vfov_deg");
        let mut m = LidarModel::default();
        m.drop_probability = 1.0;
        assert_eq!(m.validate().unwrap_err().field, "lidar.drop_probability");
    }
}
