//! World model: weather, road surface and straight-corridor highway traffic.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::OutputConfig;
use crate::error::{ConfigError, Error, Result};
use crate::geom::{OrientedBox, Pose, Rect, Vec3};
use crate::intensity::{self, IntensityConfig};
use crate::lidar::LidarModel;
use crate::rng::{substream, Domain, SimRng};
use crate::semantics::SemanticClass;
use crate::spray::SprayParams;

pub const KMH_TO_MS: f64 = 1.0 / 3.6;

/// Segment-level weather categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherClass {
    Clear,
    WetGround,
    LightRain,
    HeavyRain,
}

impl WeatherClass {
    pub const ALL: [WeatherClass; 4] = [
        WeatherClass::Clear,
        WeatherClass::WetGround,
        WeatherClass::LightRain,
        WeatherClass::HeavyRain,
    ];

    /// Integer id used in the `weather_id` raster plane.
    pub fn id(self) -> u8 {
        self as u8
    }

    /// Default class for a rain rate when the config does not name one.
    /// 7.6 mm/h is the conventional light/heavy rain boundary.
    pub fn from_rain_rate(rain_rate_mm_per_h: f64) -> Self {
        if rain_rate_mm_per_h <= 0.0 {
            WeatherClass::Clear
        } else if rain_rate_mm_per_h < 7.6 {
            WeatherClass::LightRain
        } else {
            WeatherClass::HeavyRain
        }
    }
}

/// Rain rate as configured: a fixed value or a range sampled once per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RainRateSpec {
    Fixed(f64),
    Range([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeatherSpec {
    pub rain_rate_mm_per_h: RainRateSpec,
    pub weather_class: Option<WeatherClass>,
    pub wind_velocity: [f64; 3],
    /// One-way extinction coefficient. Derived from the rain rate when absent.
    pub attenuation_alpha_per_m: Option<f64>,
}

impl Default for WeatherSpec {
    fn default() -> Self {
        Self {
            rain_rate_mm_per_h: RainRateSpec::Range([30.0, 60.0]),
            weather_class: None,
            wind_velocity: [0.0, 0.0, 0.0],
            attenuation_alpha_per_m: None,
        }
    }
}

impl WeatherSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.rain_rate_mm_per_h {
            RainRateSpec::Fixed(r) if !(r >= 0.0 && r.is_finite()) => {
                return Err(ConfigError::new(
                    "weather.rain_rate_mm_per_h",
                    "must be a finite value >= 0",
                ))
            }
            RainRateSpec::Range([lo, hi]) if !(lo >= 0.0 && hi >= lo && hi.is_finite()) => {
                return Err(ConfigError::new(
                    "weather.rain_rate_mm_per_h",
                    "range must satisfy 0 <= min <= max",
                ))
            }
            _ => {}
        }
        if let Some(a) = self.attenuation_alpha_per_m {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ConfigError::new(
                    "weather.attenuation_alpha_per_m",
                    "must be >= 0",
                ));
            }
        }
        if self.wind_velocity.iter().any(|w| !w.is_finite()) {
            return Err(ConfigError::new("weather.wind_velocity", "must be finite"));
        }
        Ok(())
    }

    /// Draw the scenario's rain rate and fill in derived fields.
    pub fn resolve(&self, rng: &mut SimRng) -> WeatherConfig {
        let rain = match self.rain_rate_mm_per_h {
            RainRateSpec::Fixed(r) => r,
            RainRateSpec::Range([lo, hi]) if hi > lo => rng.random_range(lo..=hi),
            RainRateSpec::Range([lo, _]) => lo,
        };
        WeatherConfig {
            rain_rate_mm_per_h: rain,
            weather_class: self
                .weather_class
                .unwrap_or_else(|| WeatherClass::from_rain_rate(rain)),
            wind_velocity: Vec3::from(self.wind_velocity),
            attenuation_alpha_per_m: self
                .attenuation_alpha_per_m
                .unwrap_or_else(|| intensity::alpha_from_rain_rate(rain)),
        }
    }
}

/// Resolved weather for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherConfig {
    pub rain_rate_mm_per_h: f64,
    pub weather_class: WeatherClass,
    pub wind_velocity: Vec3,
    pub attenuation_alpha_per_m: f64,
}

impl WeatherConfig {
    pub fn clear() -> Self {
        Self {
            rain_rate_mm_per_h: 0.0,
            weather_class: WeatherClass::Clear,
            wind_velocity: Vec3::zeros(),
            attenuation_alpha_per_m: 0.0,
        }
    }

    pub fn rain(rain_rate_mm_per_h: f64) -> Self {
        Self {
            rain_rate_mm_per_h,
            weather_class: WeatherClass::from_rain_rate(rain_rate_mm_per_h),
            wind_velocity: Vec3::zeros(),
            attenuation_alpha_per_m: intensity::alpha_from_rain_rate(rain_rate_mm_per_h),
        }
    }
}

/// Flat road plane at z = 0. `T`, `L`, `S` feed the water film formula and
/// are treated as opaque empirical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadSurface {
    #[serde(rename = "texture_depth_T")]
    pub texture_depth: f64,
    #[serde(rename = "drainage_length_L")]
    pub drainage_length: f64,
    #[serde(rename = "slope_S")]
    pub slope: f64,
    pub extent: Rect,
    pub albedo_rgb: [f64; 3],
    pub shoulder_albedo_rgb: [f64; 3],
}

impl Default for RoadSurface {
    fn default() -> Self {
        Self {
            texture_depth: 0.8,
            drainage_length: 3.5,
            slope: 0.02,
            extent: Rect {
                x_min: -200.0,
                x_max: 30_000.0,
                y_min: -7.0,
                y_max: 7.0,
            },
            albedo_rgb: [0.28, 0.28, 0.30],
            shoulder_albedo_rgb: [0.30, 0.42, 0.22],
        }
    }
}

impl RoadSurface {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(ConfigError::new(
                "road.slope_S",
                "must be > 0 (the water film formula is singular at S = 0)",
            ));
        }
        if !(self.texture_depth >= 0.0 && self.texture_depth.is_finite()) {
            return Err(ConfigError::new("road.texture_depth_T", "must be >= 0"));
        }
        if !(self.drainage_length > 0.0 && self.drainage_length.is_finite()) {
            return Err(ConfigError::new("road.drainage_length_L", "must be > 0"));
        }
        if self.extent.is_degenerate() {
            return Err(ConfigError::new(
                "road.extent",
                "must have x_max > x_min and y_max > y_min",
            ));
        }
        check_unit_rgb("road.albedo_rgb", &self.albedo_rgb)?;
        check_unit_rgb("road.shoulder_albedo_rgb", &self.shoulder_albedo_rgb)?;
        Ok(())
    }

    /// Albedo of the ground at a world XY position.
    pub fn albedo_at(&self, x: f64, y: f64) -> [f64; 3] {
        if self.extent.contains(x, y) {
            self.albedo_rgb
        } else {
            self.shoulder_albedo_rgb
        }
    }
}

/// Water film thickness on the road for rain rate `I`:
/// `WD = 6e-4 · T^0.09 · (L·I)^0.6 · S^-0.33`.
pub fn water_film_depth(road: &RoadSurface, rain_rate: f64) -> Result<f64> {
    if !(road.slope > 0.0) {
        return Err(Error::Domain(format!(
            "water film depth requires slope S > 0, got {}",
            road.slope
        )));
    }
    if !(rain_rate >= 0.0) || !(road.texture_depth >= 0.0) || !(road.drainage_length > 0.0) {
        return Err(Error::Domain(format!(
            "water film depth requires I >= 0, T >= 0, L > 0 (got I={rain_rate}, T={}, L={})",
            road.texture_depth, road.drainage_length
        )));
    }
    Ok(6e-4
        * road.texture_depth.powf(0.09)
        * (road.drainage_length * rain_rate).powf(0.6)
        * road.slope.powf(-0.33))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TireSpec {
    #[serde(rename = "groove_width_fraction_K")]
    pub groove_width_fraction: f64,
    /// Contact-patch width.
    #[serde(rename = "contact_width_b")]
    pub contact_width: f64,
    #[serde(rename = "groove_depth_h_groove")]
    pub groove_depth: f64,
    #[serde(rename = "film_depth_h_film")]
    pub film_depth: f64,
    pub radius_m: f64,
}

impl Default for TireSpec {
    fn default() -> Self {
        Self {
            groove_width_fraction: 0.3,
            contact_width: 0.25,
            groove_depth: 0.0035,
            film_depth: 0.001,
            radius_m: 0.33,
        }
    }
}

impl TireSpec {
    fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let f = |name: &str| format!("{prefix}.{name}");
        if !(self.groove_width_fraction > 0.0 && self.groove_width_fraction < 1.0) {
            return Err(ConfigError::new(f("groove_width_fraction_K"), "must lie in (0, 1)"));
        }
        if !(self.contact_width > 0.0) {
            return Err(ConfigError::new(f("contact_width_b"), "must be > 0"));
        }
        if !(self.groove_depth > 0.0) {
            return Err(ConfigError::new(f("groove_depth_h_groove"), "must be > 0"));
        }
        if !(self.film_depth >= 0.0 && self.film_depth <= self.groove_depth) {
            return Err(ConfigError::new(
                f("film_depth_h_film"),
                "must satisfy 0 <= h_film <= h_groove",
            ));
        }
        if !(self.radius_m > 0.0) {
            return Err(ConfigError::new(f("radius_m"), "must be > 0"));
        }
        Ok(())
    }
}

/// Geometry and appearance shared by spawned vehicles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleTemplate {
    /// (length, width, height) in metres.
    pub box_size: [f64; 3],
    pub tire: TireSpec,
    /// Rear wheel centres in the body frame, left then right.
    pub rear_wheel_offsets: [[f64; 2]; 2],
    pub albedo_rgb: [f64; 3],
}

impl Default for VehicleTemplate {
    fn default() -> Self {
        Self {
            box_size: [4.6, 1.9, 1.5],
            tire: TireSpec::default(),
            rear_wheel_offsets: [[-1.4, 0.8], [-1.4, -0.8]],
            albedo_rgb: [0.75, 0.75, 0.78],
        }
    }
}

impl VehicleTemplate {
    fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        if self.box_size.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(ConfigError::new(
                format!("{prefix}.box_size"),
                "all dimensions must be > 0",
            ));
        }
        self.tire.validate(&format!("{prefix}.tire"))?;
        let (hl, hw) = (0.5 * self.box_size[0], 0.5 * self.box_size[1]);
        for w in &self.rear_wheel_offsets {
            if w[0].abs() > hl || w[1].abs() > hw {
                return Err(ConfigError::new(
                    format!("{prefix}.rear_wheel_offsets"),
                    "rear wheels must lie inside the box footprint",
                ));
            }
        }
        if self.rear_wheel_offsets[0][1] <= self.rear_wheel_offsets[1][1] {
            return Err(ConfigError::new(
                format!("{prefix}.rear_wheel_offsets"),
                "first entry is the left wheel and must have the larger y",
            ));
        }
        check_unit_rgb(&format!("{prefix}.albedo_rgb"), &self.albedo_rgb)?;
        if luminance(self.albedo_rgb) <= 0.0 {
            return Err(ConfigError::new(
                format!("{prefix}.albedo_rgb"),
                "must not be pure black",
            ));
        }
        Ok(())
    }
}

/// Rec. 709 luminance.
pub fn luminance(rgb: [f64; 3]) -> f64 {
    0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]
}

fn check_unit_rgb(field: &str, rgb: &[f64; 3]) -> Result<(), ConfigError> {
    if rgb.iter().all(|c| (0.0..=1.0).contains(c)) {
        Ok(())
    } else {
        Err(ConfigError::new(field, "components must lie in [0, 1]"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u32,
    pub pose: Pose,
    /// m/s along the heading.
    pub speed: f64,
    pub box_size: [f64; 3],
    pub tire: TireSpec,
    pub rear_wheel_offsets: [[f64; 2]; 2],
    pub albedo_rgb: [f64; 3],
    pub semantic_class: SemanticClass,
}

impl VehicleState {
    pub fn from_template(id: u32, pose: Pose, speed: f64, t: &VehicleTemplate) -> Self {
        Self {
            id,
            pose,
            speed,
            box_size: t.box_size,
            tire: t.tire,
            rear_wheel_offsets: t.rear_wheel_offsets,
            albedo_rgb: t.albedo_rgb,
            semantic_class: SemanticClass::Vehicle,
        }
    }

    pub fn bounding_box(&self) -> OrientedBox {
        OrientedBox::from_pose(&self.pose, self.box_size)
    }

    pub fn velocity(&self) -> Vec3 {
        self.pose.heading() * self.speed
    }

    fn advance(&mut self, dt: f64) {
        let (s, c) = self.pose.yaw.sin_cos();
        self.pose.x += self.speed * c * dt;
        self.pose.y += self.speed * s * dt;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EgoConfig {
    pub speed_kmh: f64,
    pub lane_offset_m: f64,
    pub start_x_m: f64,
    pub vehicle: VehicleTemplate,
}

impl Default for EgoConfig {
    fn default() -> Self {
        Self {
            speed_kmh: 90.0,
            lane_offset_m: 0.0,
            start_x_m: 0.0,
            vehicle: VehicleTemplate::default(),
        }
    }
}

/// A traffic vehicle placed explicitly relative to the ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedVehicle {
    pub x_offset_m: f64,
    #[serde(default)]
    pub lane_offset_m: f64,
    pub speed_kmh: f64,
    #[serde(default)]
    pub vehicle: Option<VehicleTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Inclusive [min, max] number of non-ego vehicles.
    pub count: [u32; 2],
    pub speed_kmh: [f64; 2],
    pub lane_offsets_m: Vec<f64>,
    /// Corridor kept around the ego; vehicles leaving it respawn.
    pub corridor_ahead_m: f64,
    pub corridor_behind_m: f64,
    /// Minimum bumper-to-bumper gap when spawning in a lane.
    pub min_gap_m: f64,
    pub template: VehicleTemplate,
    /// Explicit initial placements. When non-empty they replace random spawning.
    pub vehicles: Vec<PlacedVehicle>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            count: [1, 6],
            speed_kmh: [80.0, 100.0],
            lane_offsets_m: vec![-3.5, 0.0, 3.5],
            corridor_ahead_m: 60.0,
            corridor_behind_m: 40.0,
            min_gap_m: 8.0,
            template: VehicleTemplate::default(),
            vehicles: Vec::new(),
        }
    }
}

impl TrafficConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let [lo, hi] = self.count;
        if lo > hi || hi > 64 {
            return Err(ConfigError::new(
                "traffic.count",
                "must satisfy min <= max <= 64",
            ));
        }
        let [vlo, vhi] = self.speed_kmh;
        if !(vlo >= 0.0 && vhi >= vlo && vhi.is_finite()) {
            return Err(ConfigError::new(
                "traffic.speed_kmh",
                "must satisfy 0 <= min <= max",
            ));
        }
        if self.lane_offsets_m.is_empty() {
            return Err(ConfigError::new("traffic.lane_offsets_m", "must not be empty"));
        }
        if !(self.corridor_ahead_m > 0.0 && self.corridor_behind_m > 0.0) {
            return Err(ConfigError::new(
                "traffic.corridor_ahead_m",
                "corridor lengths must be > 0",
            ));
        }
        if !(self.min_gap_m >= 0.0) {
            return Err(ConfigError::new("traffic.min_gap_m", "must be >= 0"));
        }
        self.template.validate("traffic.template")?;
        if !self.vehicles.is_empty() {
            let n = self.vehicles.len() as u32;
            if n < lo || n > hi {
                return Err(ConfigError::new(
                    "traffic.vehicles",
                    format!("{n} explicit vehicles outside count range [{lo}, {hi}]"),
                ));
            }
            for (i, v) in self.vehicles.iter().enumerate() {
                if !(v.speed_kmh >= 0.0) {
                    return Err(ConfigError::new(
                        format!("traffic.vehicles[{i}].speed_kmh"),
                        "must be >= 0",
                    ));
                }
                if let Some(t) = &v.vehicle {
                    t.validate(&format!("traffic.vehicles[{i}].vehicle"))?;
                }
            }
        }
        Ok(())
    }
}

/// Full declarative description of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub weather: WeatherSpec,
    pub road: RoadSurface,
    pub ego: EgoConfig,
    pub traffic: TrafficConfig,
    pub frame_rate_hz: f64,
    pub duration_frames: u32,
    /// Simulated frames before frame 0 so that spray reaches steady state.
    pub warmup_frames: u32,
    pub rng_seed: u64,
    pub lidar: LidarModel,
    pub spray: SprayParams,
    pub intensity: IntensityConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            weather: WeatherSpec::default(),
            road: RoadSurface::default(),
            ego: EgoConfig::default(),
            traffic: TrafficConfig::default(),
            frame_rate_hz: 10.0,
            duration_frames: 100,
            warmup_frames: 15,
            rng_seed: 0,
            lidar: LidarModel::default(),
            spray: SprayParams::default(),
            intensity: IntensityConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parse a JSON document. Unknown keys are rejected. The result is
    /// validated.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn frame_interval_s(&self) -> f64 {
        1.0 / self.frame_rate_hz
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return Err(ConfigError::new("frame_rate_hz", "must be > 0"));
        }
        if self.duration_frames < 1 {
            return Err(ConfigError::new("duration_frames", "must be >= 1"));
        }
        self.weather.validate()?;
        self.road.validate()?;
        if !(self.ego.speed_kmh >= 0.0 && self.ego.speed_kmh.is_finite()) {
            return Err(ConfigError::new("ego.speed_kmh", "must be >= 0"));
        }
        self.ego.vehicle.validate("ego.vehicle")?;
        self.traffic.validate()?;
        self.lidar.validate()?;
        self.spray.validate(self.frame_interval_s())?;
        self.intensity.validate()?;
        self.output.validate(&self.lidar)?;
        Ok(())
    }
}

/// Immutable-by-convention world snapshot. [`step`] returns a new value;
/// [`Scene::advance`] mutates in place.
#[derive(Debug, Clone)]
pub struct Scene {
    pub time_s: f64,
    pub weather: WeatherConfig,
    pub road: RoadSurface,
    pub ego: VehicleState,
    pub traffic: Vec<VehicleState>,
    traffic_cfg: TrafficConfig,
    next_id: u32,
    rng: SimRng,
}

/// Build the frame-0 scene. Identical config and seed give an identical scene.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scene> {
    config.validate()?;
    let mut rng = substream(config.rng_seed, Domain::Scene, 0, 0, 0);
    let weather = config.weather.resolve(&mut rng);
    let ego = VehicleState::from_template(
        0,
        Pose::new(config.ego.start_x_m, config.ego.lane_offset_m, 0.0, 0.0),
        config.ego.speed_kmh * KMH_TO_MS,
        &config.ego.vehicle,
    );
    let mut scene = Scene {
        time_s: 0.0,
        weather,
        road: config.road.clone(),
        ego,
        traffic: Vec::new(),
        traffic_cfg: config.traffic.clone(),
        next_id: 1,
        rng,
    };
    if config.traffic.vehicles.is_empty() {
        let [lo, hi] = config.traffic.count;
        let count = scene.rng.random_range(lo..=hi);
        for _ in 0..count {
            scene.spawn_random(SpawnZone::Anywhere);
        }
    } else {
        for placed in &config.traffic.vehicles {
            let template = placed.vehicle.as_ref().unwrap_or(&config.traffic.template);
            let pose = Pose::new(
                scene.ego.pose.x + placed.x_offset_m,
                placed.lane_offset_m,
                0.0,
                0.0,
            );
            let id = scene.alloc_id();
            scene.traffic.push(VehicleState::from_template(
                id,
                pose,
                placed.speed_kmh * KMH_TO_MS,
                template,
            ));
        }
    }
    Ok(scene)
}

/// Advance a copy of `scene` by `dt` seconds.
pub fn step(scene: &Scene, dt: f64) -> Scene {
    let mut next = scene.clone();
    next.advance(dt);
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SpawnZone {
    Anywhere,
    Front,
    Rear,
}

impl Scene {
    /// Build a scene directly from parts, without traffic spawning rules.
    pub fn from_parts(
        weather: WeatherConfig,
        road: RoadSurface,
        ego: VehicleState,
        traffic: Vec<VehicleState>,
        seed: u64,
    ) -> Self {
        let next_id = traffic.iter().map(|v| v.id).max().unwrap_or(0).max(ego.id) + 1;
        Self {
            time_s: 0.0,
            weather,
            road,
            ego,
            traffic,
            traffic_cfg: TrafficConfig {
                corridor_ahead_m: f64::INFINITY,
                corridor_behind_m: f64::INFINITY,
                ..TrafficConfig::default()
            },
            next_id,
            rng: substream(seed, Domain::Scene, 0, 0, 0),
        }
    }

    /// Ego first, then traffic in spawn order.
    pub fn vehicles(&self) -> impl Iterator<Item = &VehicleState> {
        std::iter::once(&self.ego).chain(self.traffic.iter())
    }

    pub fn water_film_depth(&self) -> f64 {
        // Slope was validated when the scene was built.
        water_film_depth(&self.road, self.weather.rain_rate_mm_per_h).unwrap_or(0.0)
    }

    /// Straight-lane kinematics followed by corridor respawning.
    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt > 0.0);
        self.ego.advance(dt);
        for v in &mut self.traffic {
            v.advance(dt);
        }
        self.time_s += dt;

        let ahead = self.traffic_cfg.corridor_ahead_m;
        let behind = self.traffic_cfg.corridor_behind_m;
        let mut i = 0;
        while i < self.traffic.len() {
            let rel = self.traffic[i].pose.x - self.ego.pose.x;
            let zone = if rel > ahead {
                Some(SpawnZone::Rear)
            } else if rel < -behind {
                Some(SpawnZone::Front)
            } else {
                None
            };
            match zone {
                Some(zone) => {
                    self.traffic.remove(i);
                    self.spawn_random(zone);
                }
                None => i += 1,
            }
        }
    }

    fn alloc_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn spawn_random(&mut self, zone: SpawnZone) {
        let cfg = &self.traffic_cfg;
        let ahead = cfg.corridor_ahead_m;
        let behind = cfg.corridor_behind_m;
        let len = cfg.template.box_size[0];
        let (lo, hi) = match zone {
            SpawnZone::Anywhere => (-behind + len, ahead - len),
            SpawnZone::Front => (ahead - 15.0, ahead - len),
            SpawnZone::Rear => (-behind + len, -behind + 15.0),
        };
        let (lo, hi) = if hi > lo { (lo, hi) } else { (hi, lo) };
        let [vlo, vhi] = cfg.speed_kmh;
        let lanes = cfg.lane_offsets_m.clone();
        let gap = cfg.min_gap_m + len;

        let mut chosen = None;
        for _ in 0..32 {
            let lane = lanes[self.rng.random_range(0..lanes.len())];
            let dx = if hi > lo {
                self.rng.random_range(lo..hi)
            } else {
                lo
            };
            let x = self.ego.pose.x + dx;
            let clear = self
                .vehicles()
                .filter(|v| (v.pose.y - lane).abs() < 1.0)
                .all(|v| (v.pose.x - x).abs() >= gap);
            if chosen.is_none() || clear {
                chosen = Some((x, lane));
            }
            if clear {
                break;
            }
        }
        let (x, lane) = chosen.expect("at least one spawn attempt");
        let speed_kmh = if vhi > vlo {
            self.rng.random_range(vlo..=vhi)
        } else {
            vlo
        };
        let id = self.alloc_id();
        let template = self.traffic_cfg.template.clone();
        self.traffic.push(VehicleState::from_template(
            id,
            Pose::new(x, lane, 0.0, 0.0),
            speed_kmh * KMH_TO_MS,
            &template,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_with_count(lo: u32, hi: u32, seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.traffic.count = [lo, hi];
        cfg.rng_seed = seed;
        cfg
    }

    #[test]
    fn forced_count_spawns_exactly_one() {
        let scene = build_scenario(&config_with_count(1, 1, 7)).unwrap();
        assert_eq!(scene.traffic.len(), 1);
    }

    #[test]
    fn same_seed_same_initial_poses() {
        let a = build_scenario(&config_with_count(1, 6, 42)).unwrap();
        let b = build_scenario(&config_with_count(1, 6, 42)).unwrap();
        assert_eq!(a.traffic, b.traffic);
        assert_eq!(a.weather, b.weather);
        for (va, vb) in a.traffic.iter().zip(&b.traffic) {
            assert_eq!(va.pose.x.to_bits(), vb.pose.x.to_bits());
        }
    }

    #[test]
    fn zero_slope_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.road.slope = 0.0;
        let err = build_scenario(&cfg).unwrap_err();
        match err {
            Error::Config(e) => assert_eq!(e.field, "road.slope_S"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_json_str(r#"{"road": {"slope": 0.02}}"#).unwrap_err();
        assert!(err.to_string().contains("slope"), "{err}");
        assert!(ScenarioConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn empty_document_yields_defaults() {
        let cfg = ScenarioConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn straight_line_kinematics() {
        let mut cfg = config_with_count(1, 1, 0);
        cfg.traffic.vehicles = vec![PlacedVehicle {
            x_offset_m: 0.0,
            lane_offset_m: 3.5,
            speed_kmh: 90.0,
            vehicle: None,
        }];
        cfg.ego.speed_kmh = 0.0;
        let scene = build_scenario(&cfg).unwrap();
        let next = step(&scene, 0.1);
        assert!((next.traffic[0].pose.x - 2.5).abs() < 1e-12);
        assert_eq!(next.ego.pose, scene.ego.pose);
    }

    #[test]
    fn hundred_steps_at_highway_speed() {
        let mut cfg = config_with_count(0, 0, 0);
        cfg.ego.speed_kmh = 100.0;
        let mut scene = build_scenario(&cfg).unwrap();
        scene.ego.speed = 27.78;
        for _ in 0..100 {
            scene.advance(0.1);
        }
        assert!((scene.ego.pose.x - 277.8).abs() < 1e-9);
    }

    #[test]
    fn water_film_zero_without_rain() {
        assert_eq!(water_film_depth(&RoadSurface::default(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn water_film_rejects_nonpositive_slope() {
        let road = RoadSurface {
            slope: -0.1,
            ..RoadSurface::default()
        };
        assert!(matches!(water_film_depth(&road, 30.0), Err(Error::Domain(_))));
    }

    #[test]
    fn default_road_floods_tire_grooves_in_heavy_rain() {
        let road = RoadSurface::default();
        let groove = TireSpec::default().groove_depth;
        for rain in [30.0, 45.0, 60.0] {
            assert!(water_film_depth(&road, rain).unwrap() > groove);
        }
    }

    #[test]
    fn traffic_count_is_preserved_by_respawn() {
        let cfg = config_with_count(2, 5, 11);
        let mut scene = build_scenario(&cfg).unwrap();
        let n = scene.traffic.len();
        assert!((2..=5).contains(&n));
        for _ in 0..2000 {
            scene.advance(0.1);
            assert_eq!(scene.traffic.len(), n);
            for v in &scene.traffic {
                let rel = v.pose.x - scene.ego.pose.x;
                assert!(rel <= cfg.traffic.corridor_ahead_m && rel >= -cfg.traffic.corridor_behind_m);
            }
        }
    }

    #[test]
    fn rain_range_is_sampled_within_bounds() {
        for seed in 0..50 {
            let scene = build_scenario(&config_with_count(1, 1, seed)).unwrap();
            let r = scene.weather.rain_rate_mm_per_h;
            assert!((30.0..=60.0).contains(&r), "{r}");
            assert_eq!(scene.weather.weather_class, WeatherClass::HeavyRain);
        }
    }

    #[test]
    fn wheels_outside_footprint_are_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.ego.vehicle.rear_wheel_offsets = [[-3.0, 0.8], [-1.4, -0.8]];
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.field, "ego.vehicle.rear_wheel_offsets");
    }
}
