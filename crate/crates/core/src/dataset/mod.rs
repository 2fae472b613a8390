//! On-disk dataset: per-frame point clouds, labels and range rasters, the
//! manifest, and the frame-by-frame generation loop.
//!
//! ```text
//! manifest.json
//! frames/NNNNNN.bin   frames/NNNNNN.cls
//! labels/NNNNNN.json
//! rasters/NNNNNN.front.rr   rasters/NNNNNN.rear.rr
//! ```

mod pointcloud;
mod stats;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::geom::{Pose, Vec3};
use crate::intensity::{assign_intensities, IntensityMode};
use crate::lidar::{project_range_raster, scan_frame, LidarFrame, LidarModel, ScanContext};
use crate::raster::{RangeRaster, Sector};
use crate::scene::{build_scenario, ScenarioConfig, Scene, WeatherClass};
use crate::semantics::SemanticClass;
use crate::spray::{SprayFrameStats, SpraySystem};
use crate::GENERATOR_VERSION;

pub use pointcloud::{read_point_cloud, write_point_cloud, PointCloud};
pub use stats::{stats, ClassHistogram, DatasetStats, Histogram};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const LABELS_FORMAT_VERSION: u32 = 1;
pub const POINT_CLOUD_FORMAT: &str = "kitti-xyzi-f32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Columns per front/rear raster.
    pub raster_width: u32,
    pub write_rasters: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            raster_width: 1250,
            write_rasters: true,
        }
    }
}

impl OutputConfig {
    pub(crate) fn validate(&self, lidar: &LidarModel) -> Result<(), ConfigError> {
        let steps = lidar.azimuth_steps();
        if self.raster_width < 1 || self.raster_width as usize > steps {
            return Err(ConfigError::new(
                "output.raster_width",
                format!("must lie in 1..={steps} (azimuth steps per revolution)"),
            ));
        }
        Ok(())
    }
}

/// One vehicle box in the sensor frame (origin at the LiDAR, x forward
/// along the ego heading, z up).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxLabel {
    pub id: u32,
    pub class: SemanticClass,
    pub center: [f64; 3],
    /// Length, width, height.
    pub size: [f64; 3],
    pub yaw: f64,
    pub speed_m_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabels {
    pub format_version: u32,
    pub frame_index: u64,
    pub timestamp_s: f64,
    /// World pose of the ego vehicle.
    pub ego_pose: Pose,
    /// World position of the LiDAR.
    pub sensor_origin: [f64; 3],
    pub boxes: Vec<BoxLabel>,
    pub weather_class: WeatherClass,
    pub rain_rate_mm_per_h: f64,
    pub spray: SprayFrameStats,
}

impl FrameLabels {
    fn from_scene(scene: &Scene, frame: &LidarFrame, spray: SprayFrameStats) -> Self {
        let ego = scene.ego.pose;
        let origin = frame.sensor_origin;
        let boxes = scene
            .traffic
            .iter()
            .map(|v| {
                let b = v.bounding_box();
                let c = ego.unrotate(b.center - origin);
                BoxLabel {
                    id: v.id,
                    class: v.semantic_class,
                    center: [c.x, c.y, c.z],
                    size: v.box_size,
                    yaw: wrap_angle(v.pose.yaw - ego.yaw),
                    speed_m_per_s: v.speed,
                }
            })
            .collect();
        Self {
            format_version: LABELS_FORMAT_VERSION,
            frame_index: frame.frame_index,
            timestamp_s: frame.timestamp_s,
            ego_pose: ego,
            sensor_origin: [origin.x, origin.y, origin.z],
            boxes,
            weather_class: scene.weather.weather_class,
            rain_rate_mm_per_h: scene.weather.rain_rate_mm_per_h,
            spray,
        }
    }
}

impl FrameLabels {
    /// Pretty JSON with a trailing newline, as written to `labels/`.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Format(format!("bad labels: {e}")))
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let w = a.rem_euclid(t);
    if w > std::f64::consts::PI {
        w - t
    } else {
        w
    }
}

/// Relative paths of one frame's files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub index: u64,
    pub timestamp_s: f64,
    pub points: u64,
    pub cloud: String,
    pub classes: String,
    pub labels: String,
    pub rasters: Vec<String>,
}

impl FrameEntry {
    fn new(index: u64, timestamp_s: f64, points: u64, rasters: bool) -> Self {
        let stem = format!("{index:06}");
        Self {
            index,
            timestamp_s,
            points,
            cloud: format!("frames/{stem}.bin"),
            classes: format!("frames/{stem}.cls"),
            labels: format!("labels/{stem}.json"),
            rasters: if rasters {
                [Sector::Front, Sector::Rear]
                    .map(|s| format!("rasters/{stem}.{}.rr", s.name()))
                    .to_vec()
            } else {
                Vec::new()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatVersions {
    pub point_cloud: String,
    pub labels: u32,
    pub raster: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub generator: String,
    pub rng_seed: u64,
    pub frame_count: u64,
    /// False when generation stopped early; `error` then says why.
    pub complete: bool,
    pub error: Option<String>,
    pub formats: FormatVersions,
    pub config: serde_json::Value,
    pub frames: Vec<FrameEntry>,
}

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_slice(&text).map_err(|e| Error::Format(format!("bad manifest: {e}")))
    }
}

/// One simulated frame with intensities assigned.
#[derive(Debug, Clone)]
pub struct SimulatedFrame {
    pub frame: LidarFrame,
    pub labels: FrameLabels,
}

/// Scenario state stepped one LiDAR revolution at a time.
pub struct Simulation {
    config: ScenarioConfig,
    scene: Scene,
    spray: SpraySystem,
    next_frame: u64,
}

impl Simulation {
    /// Build the scenario and run the warm-up frames.
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let scene = build_scenario(config)?;
        let spray = SpraySystem::new(config.spray.clone(), config.rng_seed);
        let mut sim = Self {
            config: config.clone(),
            scene,
            spray,
            next_frame: 0,
        };
        for _ in 0..config.warmup_frames {
            sim.interval();
        }
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn spray(&self) -> &SpraySystem {
        &self.spray
    }

    fn interval(&mut self) {
        let dt = self.config.frame_interval_s();
        let start = self.scene.clone();
        self.spray.simulate_interval(&start, dt);
        self.scene.advance(dt);
        let origin = self.config.lidar.origin(&self.scene.ego.pose);
        self.spray.annihilate(&self.scene, origin);
    }

    /// Scan the current state without assigning intensities, then advance
    /// to the next frame.
    pub fn scan_next(&mut self) -> (LidarFrame, FrameLabels) {
        let index = self.next_frame;
        let ctx = ScanContext {
            seed: self.config.rng_seed,
            frame_index: index,
            timestamp_s: index as f64 * self.config.frame_interval_s(),
        };
        let frame = scan_frame(
            &self.scene,
            self.spray.clusters(),
            self.spray.params(),
            &self.config.lidar,
            ctx,
        );
        let labels = FrameLabels::from_scene(&self.scene, &frame, self.spray.stats());
        self.next_frame += 1;
        if self.next_frame < u64::from(self.config.duration_frames) {
            self.interval();
        }
        (frame, labels)
    }

    /// Scan, assign intensities with `mode`, and advance.
    pub fn next_frame(&mut self, mode: IntensityMode<'_>) -> Result<SimulatedFrame> {
        let weather = self.scene.weather.clone();
        let (mut frame, labels) = self.scan_next();
        assign_intensities(&mut frame, mode, &self.config.intensity, &weather, self.config.rng_seed)?;
        Ok(SimulatedFrame { frame, labels })
    }
}

/// Front and rear rasters of a frame with intensities assigned.
pub fn frame_rasters(frame: &LidarFrame, width: usize) -> Result<[RangeRaster; 2]> {
    Ok([
        project_range_raster(frame, width, Sector::Front)?,
        project_range_raster(frame, width, Sector::Rear)?,
    ])
}

fn predictor_paths(dir: &Path, index: u64) -> [PathBuf; 2] {
    [Sector::Front, Sector::Rear].map(|s| dir.join(format!("{index:06}.{}.int.rr", s.name())))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Run a scenario and write the dataset to `out_dir`. `config_json` is the
/// document recorded verbatim in the manifest; when `None` the parsed
/// config is serialized instead. The manifest is written last; if a frame
/// fails it lists the frames written so far, is marked incomplete, and the
/// error is returned.
pub fn generate(
    config: &ScenarioConfig,
    config_json: Option<&serde_json::Value>,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    config.validate()?;
    let snapshot = match config_json {
        Some(v) => v.clone(),
        None => serde_json::to_value(config).map_err(|e| Error::Format(e.to_string()))?,
    };
    for sub in ["frames", "labels", "rasters"] {
        create_dir(&out_dir.join(sub))?;
    }

    let mut manifest = DatasetManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        generator: GENERATOR_VERSION.to_string(),
        rng_seed: config.rng_seed,
        frame_count: 0,
        complete: false,
        error: None,
        formats: FormatVersions {
            point_cloud: POINT_CLOUD_FORMAT.to_string(),
            labels: LABELS_FORMAT_VERSION,
            raster: crate::raster::RASTER_FORMAT_VERSION,
        },
        config: snapshot,
        frames: Vec::new(),
    };

    let result = run_frames(config, out_dir, &mut manifest);
    manifest.frame_count = manifest.frames.len() as u64;
    match &result {
        Ok(()) => manifest.complete = true,
        Err(e) => manifest.error = Some(e.to_string()),
    }
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    result.map(|()| manifest)
}

fn run_frames(config: &ScenarioConfig, out_dir: &Path, manifest: &mut DatasetManifest) -> Result<()> {
    let mut sim = Simulation::new(config)?;
    let predictor_dir = config.intensity.predictor_rasters_dir.as_ref().map(PathBuf::from);
    let width = config.output.raster_width as usize;
    for _ in 0..config.duration_frames {
        let index = sim.next_frame;
        let predicted = match &predictor_dir {
            Some(dir) => {
                let [f, r] = predictor_paths(dir, index);
                Some((RangeRaster::read(&f)?, RangeRaster::read(&r)?))
            }
            None => None,
        };
        let mode = match &predicted {
            Some((front, rear)) => IntensityMode::FromPredictor { front, rear },
            None => IntensityMode::Physical,
        };
        let SimulatedFrame { frame, labels } = sim.next_frame(mode)?;
        let entry = FrameEntry::new(index, frame.timestamp_s, frame.len() as u64, config.output.write_rasters);
        write_point_cloud(&frame, &out_dir.join(&entry.cloud), &out_dir.join(&entry.classes))?;
        let labels_path = out_dir.join(&entry.labels);
        std::fs::write(&labels_path, labels.to_json_bytes()?).map_err(|e| Error::io(&labels_path, e))?;
        if config.output.write_rasters {
            for (raster, rel) in frame_rasters(&frame, width)?.iter().zip(&entry.rasters) {
                raster.write(&out_dir.join(rel))?;
            }
        }
        tracing::debug!(
            frame = index,
            points = frame.len(),
            alive = labels.spray.alive,
            "frame written"
        );
        manifest.frames.push(entry);
    }
    tracing::info!(frames = manifest.frames.len(), dir = %out_dir.display(), "dataset complete");
    Ok(())
}

/// Sensor-frame position of a world point for a given frame.
pub fn to_sensor_frame(labels: &FrameLabels, world: Vec3) -> Vec3 {
    let o = Vec3::from(labels.sensor_origin);
    labels.ego_pose.unrotate(world - o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_width_is_validated() {
        let out = OutputConfig {
            raster_width: 2501,
            write_rasters: true,
        };
        assert_eq!(out.validate(&LidarModel::default()).unwrap_err().field, "output.raster_width");
    }

    #[test]
    fn angles_wrap_to_pi() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI / 2.0) + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn entry_paths() {
        let e = FrameEntry::new(7, 0.7, 3, true);
        assert_eq!(e.cloud, "frames/000007.bin");
        assert_eq!(e.rasters, vec!["rasters/000007.front.rr", "rasters/000007.rear.rr"]);
    }
}
