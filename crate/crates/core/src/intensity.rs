//! The fourth point feature.
//!
//! Solid returns use the echo power law `P_r = P_t·Ω·ρ·η_sys·η_atm` with
//! `Ω = π·D_rec²/(4R²)` and `η_atm = exp(−2αR)`, normalized so a perfect
//! reflector at `R0` in clear air scores 1. Spray returns are Gaussian
//! noise around a small mean. Predicted intensities can replace the
//! physical values for solid returns.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::lidar::{sector_azimuth_index, Hit, LidarFrame};
use crate::raster::{RangeRaster, Sector};
use crate::rng::{substream, Domain};
use crate::scene::{luminance, WeatherConfig};
use crate::semantics::SemanticClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EchoParams {
    #[serde(rename = "transmit_power_Pt")]
    pub transmit_power: f64,
    #[serde(rename = "receiver_diameter_Drec")]
    pub receiver_diameter_m: f64,
    #[serde(rename = "system_efficiency_eta_sys")]
    pub system_efficiency: f64,
    #[serde(rename = "normalization_range_R0")]
    pub normalization_range_m: f64,
}

impl Default for EchoParams {
    fn default() -> Self {
        Self {
            transmit_power: 1.0,
            receiver_diameter_m: 0.05,
            system_efficiency: 0.9,
            normalization_range_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SprayIntensityModel {
    pub mean: f64,
    pub sigma: f64,
    pub clamp: [f64; 2],
}

impl Default for SprayIntensityModel {
    fn default() -> Self {
        Self {
            mean: 0.0025,
            sigma: 0.0004,
            clamp: [0.0, 1.0],
        }
    }
}

/// Base reflectance per class, scaled by the luminance of the hit albedo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReflectanceTable {
    pub ground: f64,
    pub vehicle: f64,
}

impl Default for ReflectanceTable {
    fn default() -> Self {
        Self {
            ground: 0.12,
            vehicle: 0.35,
        }
    }
}

impl ReflectanceTable {
    pub fn base(&self, class: SemanticClass) -> Result<f64> {
        match class {
            SemanticClass::Ground => Ok(self.ground),
            SemanticClass::Vehicle => Ok(self.vehicle),
            other => Err(Error::UnknownClass(other)),
        }
    }

    pub fn effective(&self, class: SemanticClass, albedo: [f32; 3]) -> Result<f64> {
        let rgb = albedo.map(f64::from);
        Ok((self.base(class)? * luminance(rgb)).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensityConfig {
    pub echo: EchoParams,
    pub spray: SprayIntensityModel,
    pub reflectance: ReflectanceTable,
    /// Directory of predicted `NNNNNN.{front,rear}.int.rr` rasters. When set,
    /// solid-return intensities are imported instead of computed.
    pub predictor_rasters_dir: Option<String>,
}

impl IntensityConfig {
    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.echo;
        let err = |f: &str, r: &str| Err(ConfigError::new(format!("intensity.{f}"), r));
        if !(e.transmit_power > 0.0) {
            return err("echo.transmit_power_Pt", "must be > 0");
        }
        if !(e.receiver_diameter_m > 0.0) {
            return err("echo.receiver_diameter_Drec", "must be > 0");
        }
        if !(e.system_efficiency > 0.0 && e.system_efficiency <= 1.0) {
            return err("echo.system_efficiency_eta_sys", "must lie in (0, 1]");
        }
        if !(e.normalization_range_m > 0.0) {
            return err("echo.normalization_range_R0", "must be > 0");
        }
        let s = &self.spray;
        if !(s.mean > 0.0) {
            return err("spray.mean", "must be > 0");
        }
        if !(s.sigma > 0.0) {
            return err("spray.sigma", "must be > 0");
        }
        if !(0.0 <= s.clamp[0] && s.clamp[0] < s.clamp[1] && s.clamp[1] <= 1.0) {
            return err("spray.clamp", "must satisfy 0 <= lower < upper <= 1");
        }
        for (f, v) in [("reflectance.ground", self.reflectance.ground), ("reflectance.vehicle", self.reflectance.vehicle)] {
            if !(v > 0.0 && v <= 1.0) {
                return err(f, "must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

/// Default rain-rate to one-way extinction mapping, `0.01·(I/10)^0.6` per metre.
pub fn alpha_from_rain_rate(rain_rate_mm_per_h: f64) -> f64 {
    if rain_rate_mm_per_h <= 0.0 {
        return 0.0;
    }
    0.01 * (rain_rate_mm_per_h / 10.0).powf(0.6)
}

/// Receiver solid angle `π·D²/(4R²)` in steradians.
pub fn solid_angle(receiver_diameter_m: f64, range_m: f64) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::Domain(format!("solid angle needs range > 0, got {range_m}")));
    }
    Ok(std::f64::consts::PI * receiver_diameter_m * receiver_diameter_m / (4.0 * range_m * range_m))
}

/// Two-way atmospheric transmission `exp(−2αR)`.
pub fn atmospheric_eta(weather: &WeatherConfig, range_m: f64) -> f64 {
    (-2.0 * weather.attenuation_alpha_per_m * range_m).exp()
}

/// Raw echo power for a target of effective reflectance `rho` at `range_m`.
pub fn echo_power(echo: &EchoParams, rho: f64, range_m: f64, alpha: f64) -> Result<f64> {
    let omega = solid_angle(echo.receiver_diameter_m, range_m)?;
    Ok(echo.transmit_power * omega * rho * echo.system_efficiency * (-2.0 * alpha * range_m).exp())
}

/// Normalized intensity of a solid return.
pub fn physical_intensity(
    hit: &Hit,
    echo: &EchoParams,
    table: &ReflectanceTable,
    weather: &WeatherConfig,
) -> Result<f64> {
    let rho = table.effective(hit.class, hit.target_albedo)?;
    let raw = echo_power(echo, rho, hit.range_m, weather.attenuation_alpha_per_m)?;
    let anchor = echo_power(echo, 1.0, echo.normalization_range_m, 0.0)?;
    Ok((raw / anchor).clamp(0.0, 1.0))
}

pub fn spray_intensity<R: Rng + ?Sized>(model: &SprayIntensityModel, rng: &mut R) -> f64 {
    let normal = Normal::new(model.mean, model.sigma).expect("sigma validated > 0");
    normal.sample(rng).clamp(model.clamp[0], model.clamp[1])
}

/// Where solid-return intensities come from.
#[derive(Debug, Clone, Copy)]
pub enum IntensityMode<'a> {
    Physical,
    FromPredictor {
        front: &'a RangeRaster,
        rear: &'a RangeRaster,
    },
}

/// Fill the intensity of every return in the grid (dropped ones included)
/// and copy it into the point list. Spray returns always draw from the
/// spray model on a per-cell substream. In predictor mode, solid returns in
/// cells covered by neither sector keep the physical value.
pub fn assign_intensities(
    frame: &mut LidarFrame,
    mode: IntensityMode<'_>,
    config: &IntensityConfig,
    weather: &WeatherConfig,
    seed: u64,
) -> Result<()> {
    let steps = frame.azimuth_steps;
    let channels = frame.channels;
    let lookup = match mode {
        IntensityMode::Physical => None,
        IntensityMode::FromPredictor { front, rear } => {
            Some(PredictorLookup::new(front, rear, channels, steps)?)
        }
    };
    let frame_index = frame.frame_index;
    frame
        .hits
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(cell, hit)| -> Result<()> {
            if !hit.is_return() {
                return Ok(());
            }
            let ch = cell / steps;
            let az = cell % steps;
            let value = match hit.class {
                SemanticClass::Spray => {
                    let mut rng = substream(seed, Domain::SprayIntensity, frame_index, ch as u64, az as u64);
                    spray_intensity(&config.spray, &mut rng)
                }
                _ => match lookup.as_ref().and_then(|l| l.get(ch, az)) {
                    Some(v) => f64::from(v).clamp(0.0, 1.0),
                    None => physical_intensity(hit, &config.echo, &config.reflectance, weather)?,
                },
            };
            hit.intensity = value as f32;
            Ok(())
        })?;
    frame.sync_point_intensities();
    Ok(())
}

struct PredictorLookup<'a> {
    front: (&'a RangeRaster, usize),
    rear: (&'a RangeRaster, usize),
    channels: usize,
    /// For each azimuth, the (sector, column) that shows it.
    columns: Vec<Option<(Sector, usize)>>,
}

impl<'a> PredictorLookup<'a> {
    fn new(front: &'a RangeRaster, rear: &'a RangeRaster, channels: usize, steps: usize) -> Result<Self> {
        let check = |r: &'a RangeRaster, name: &str| -> Result<(&'a RangeRaster, usize)> {
            r.validate()?;
            let width_ok = r.width() >= 1 && r.width() <= steps;
            if r.height() != channels || !width_ok {
                return Err(Error::Shape {
                    expected: format!("{name} raster {channels} × (1..={steps})"),
                    found: format!("{} × {}", r.height(), r.width()),
                });
            }
            let plane = if r.channel_count() == 1 {
                0
            } else {
                r.channel_index("intensity").ok_or_else(|| Error::Shape {
                    expected: format!("{name} raster with an `intensity` channel"),
                    found: format!("channels {:?}", r.header.channels),
                })?
            };
            Ok((r, plane))
        };
        let front = check(front, "front")?;
        let rear = check(rear, "rear")?;
        let mut columns = vec![None; steps];
        for (sector, r) in [(Sector::Rear, rear.0), (Sector::Front, front.0)] {
            for col in 0..r.width() {
                columns[sector_azimuth_index(sector, col, r.width(), steps)] = Some((sector, col));
            }
        }
        Ok(Self {
            front,
            rear,
            channels,
            columns,
        })
    }

    fn get(&self, channel: usize, az: usize) -> Option<f32> {
        let (sector, col) = self.columns[az]?;
        let (r, plane) = match sector {
            Sector::Front => self.front,
            Sector::Rear => self.rear,
        };
        Some(r.get(plane, self.channels - 1 - channel, col))
    }
}
