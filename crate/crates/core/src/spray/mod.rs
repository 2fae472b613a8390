//! Tire spray: emission volume rates, droplet-cluster emission, in-flight
//! dynamics and the three annihilation triggers.

mod annihilation;
mod dynamics;
mod emission;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::Vec3;
use crate::scene::TireSpec;

pub use annihilation::{annihilate, annihilation_reason, AnnihilationCounts, AnnihilationReason};
pub use dynamics::{advance_cluster, drag_coefficient, integrate};
pub use emission::{
    emission_count, emit, wake_multipliers, wake_update, Emitted, EmissionState, WheelSide,
    WheelState,
};
pub use system::{SprayFrameStats, SpraySystem};

/// Emission direction ranges for one mechanism, in radians.
///
/// `n` is the angle of the horizontal velocity projection measured from the
/// vehicle's rearward axis (−X). `l` is the elevation of the velocity above
/// the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionCone {
    pub n_range_rad: [f64; 2],
    pub l_range_rad: [f64; 2],
}

impl EmissionCone {
    fn from_degrees(n: [f64; 2], l: [f64; 2]) -> Self {
        Self {
            n_range_rad: [n[0].to_radians(), n[1].to_radians()],
            l_range_rad: [l[0].to_radians(), l[1].to_radians()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SprayParams {
    pub droplet_diameter_m: f64,
    pub cluster_size: u32,
    pub cluster_radius_m: f64,
    pub weight_interval_s: f64,
    pub weight_range: [f64; 2],
    pub tread_pickup: EmissionCone,
    pub side_wave: EmissionCone,
    pub lateral_speed_init: f64,
    pub lateral_decay_tau_s: f64,
    pub wake_asymmetry_a: f64,
    pub wake_flip_mean_s: f64,
    pub max_age_s: f64,
    pub max_range_m: f64,
    pub substep_dt_s: f64,
    pub drag_cd: f64,
    pub air_density: f64,
    pub water_density: f64,
    pub gravity: f64,
    /// Multiplies the physical cluster rate. Physical rates are in the
    /// millions of clusters per second per wheel.
    pub emission_scale: f64,
    pub max_clusters_per_wheel_per_frame: u32,
    pub ego_emits: bool,
}

impl Default for SprayParams {
    fn default() -> Self {
        Self {
            droplet_diameter_m: 1e-3,
            cluster_size: 10,
            cluster_radius_m: 5e-3,
            weight_interval_s: 0.1,
            weight_range: [0.5, 1.5],
            tread_pickup: EmissionCone::from_degrees([-30.0, 30.0], [10.0, 60.0]),
            side_wave: EmissionCone::from_degrees([75.0, 105.0], [0.0, 20.0]),
            lateral_speed_init: 1.5,
            lateral_decay_tau_s: 0.5,
            wake_asymmetry_a: 0.3,
            wake_flip_mean_s: 1.0,
            max_age_s: 1.5,
            max_range_m: 75.0,
            substep_dt_s: 0.01,
            drag_cd: 0.47,
            air_density: 1.225,
            water_density: 1000.0,
            gravity: 9.81,
            emission_scale: 2e-4,
            max_clusters_per_wheel_per_frame: 300,
            ego_emits: true,
        }
    }
}

impl SprayParams {
    pub(crate) fn validate(&self, frame_interval_s: f64) -> Result<(), ConfigError> {
        let err = |f: &str, r: &str| Err(ConfigError::new(format!("spray.{f}"), r));
        if !(self.droplet_diameter_m > 0.0) {
            return err("droplet_diameter_m", "must be > 0");
        }
        if self.cluster_size < 1 {
            return err("cluster_size", "must be >= 1");
        }
        if !(self.cluster_radius_m >= 0.0) {
            return err("cluster_radius_m", "must be >= 0");
        }
        if !(self.weight_interval_s > 0.0) {
            return err("weight_interval_s", "must be > 0");
        }
        let [wlo, whi] = self.weight_range;
        if !(wlo >= 0.5 && whi <= 1.5 && wlo <= whi) {
            return err("weight_range", "must satisfy 0.5 <= min <= max <= 1.5");
        }
        for (name, cone) in [("tread_pickup", &self.tread_pickup), ("side_wave", &self.side_wave)] {
            if cone.n_range_rad[0] > cone.n_range_rad[1] || cone.l_range_rad[0] > cone.l_range_rad[1] {
                return err(name, "angle ranges must be [min, max]");
            }
            if cone.l_range_rad[0] < -std::f64::consts::FRAC_PI_2
                || cone.l_range_rad[1] > std::f64::consts::FRAC_PI_2
            {
                return err(name, "elevation must lie within [-90°, 90°]");
            }
        }
        if !(self.lateral_speed_init >= 0.0) {
            return err("lateral_speed_init", "must be >= 0");
        }
        if !(self.lateral_decay_tau_s > 0.0) {
            return err("lateral_decay_tau_s", "must be > 0");
        }
        if !(0.0..1.0).contains(&self.wake_asymmetry_a) {
            return err("wake_asymmetry_a", "must lie in [0, 1)");
        }
        if !(self.wake_flip_mean_s > 0.0) {
            return err("wake_flip_mean_s", "must be > 0");
        }
        if !(self.max_age_s > 0.0) {
            return err("max_age_s", "must be > 0");
        }
        if !(self.max_range_m > 0.0) {
            return err("max_range_m", "must be > 0");
        }
        if !(self.substep_dt_s > 0.0 && self.substep_dt_s <= frame_interval_s + 1e-12) {
            return err("substep_dt_s", "must satisfy 0 < substep <= frame interval");
        }
        if !(self.drag_cd >= 0.0 && self.air_density >= 0.0 && self.water_density > 0.0) {
            return err("drag_cd", "drag inputs must be non-negative, water density > 0");
        }
        if !(self.gravity >= 0.0) {
            return err("gravity", "must be >= 0");
        }
        if !(self.emission_scale >= 0.0 && self.emission_scale.is_finite()) {
            return err("emission_scale", "must be >= 0");
        }
        Ok(())
    }

    /// Volume of one droplet, (π/6)·d³.
    pub fn droplet_volume(&self) -> f64 {
        std::f64::consts::PI / 6.0 * self.droplet_diameter_m.powi(3)
    }

    pub fn cluster_volume(&self) -> f64 {
        self.droplet_volume() * self.cluster_size as f64
    }
}

/// Tread pickup volume rate, `K·b·v·h_groove` (m³/s).
pub fn volume_rate_tread_pickup(tire: &TireSpec, v: f64) -> f64 {
    tire.groove_width_fraction * tire.contact_width * v * tire.groove_depth
}

/// Side wave volume rate, `0.5·b·v·(WD − K·h_groove − (1−K)·h_film)`,
/// clamped at zero when the film is too shallow.
pub fn volume_rate_side_wave(tire: &TireSpec, v: f64, water_film_depth: f64) -> f64 {
    let k = tire.groove_width_fraction;
    let budget = water_film_depth - k * tire.groove_depth - (1.0 - k) * tire.film_depth;
    (0.5 * tire.contact_width * v * budget).max(0.0)
}

/// Which tire mechanism produced a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    TreadPickup,
    SideWave,
}

/// Wheel that emitted a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WheelId {
    pub vehicle_id: u32,
    pub side: WheelSide,
}

/// A rigid group of `cluster_size` droplets simulated as one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct DropletCluster {
    /// Central droplet position.
    pub position: Vec3,
    pub velocity: Vec3,
    /// Wake-induced sideways drift, decayed separately from the ballistic state.
    pub lateral_velocity: Vec3,
    pub age: f64,
    /// Positions of the other droplets relative to the centre.
    pub offsets: Vec<Vec3>,
    pub source: WheelId,
    pub mechanism: Mechanism,
}
