use rayon::prelude::*;

use super::{DropletCluster, SprayParams};
use crate::geom::Vec3;
use crate::scene::WeatherConfig;

/// Quadratic drag factor `k = ρ_air·Cd·A / (2m)` for one droplet, with
/// `A = π(d/2)²` and `m = ρ_water·(π/6)·d³`. Acceleration is `k·|u|·u` for
/// air-relative velocity `u`.
pub fn drag_coefficient(params: &SprayParams) -> f64 {
    let d = params.droplet_diameter_m;
    let area = std::f64::consts::PI * 0.25 * d * d;
    let mass = params.water_density * params.droplet_volume();
    params.air_density * params.drag_cd * area / (2.0 * mass)
}

/// Advance one cluster by `duration` seconds in substeps no longer than
/// `substep_dt_s`.
///
/// Each substep applies the drag impulse from the current velocity, then
/// drifts under constant gravity in closed form, so drag-free flight is
/// exact. The wake drift `lateral_velocity` is added to the position and
/// decays as `exp(−h/τ)`.
pub fn advance_cluster(cluster: &mut DropletCluster, duration: f64, wind: Vec3, params: &SprayParams) {
    if duration <= 0.0 {
        return;
    }
    let n = (duration / params.substep_dt_s - 1e-9).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let k = drag_coefficient(params);
    let g = Vec3::new(0.0, 0.0, -params.gravity);
    let decay = (-h / params.lateral_decay_tau_s).exp();
    for _ in 0..n {
        let rel = wind - cluster.velocity;
        cluster.velocity += rel * (k * rel.norm() * h);
        cluster.position += cluster.velocity * h + g * (0.5 * h * h) + cluster.lateral_velocity * h;
        cluster.velocity += g * h;
        cluster.lateral_velocity *= decay;
    }
    cluster.age += duration;
}

/// Advance every cluster by one frame interval under the scenario wind.
pub fn integrate(clusters: &mut [DropletCluster], weather: &WeatherConfig, dt_frame: f64, params: &SprayParams) {
    debug_assert!(dt_frame > 0.0);
    let wind = weather.wind_velocity;
    clusters
        .par_iter_mut()
        .with_min_len(512)
        .for_each(|c| advance_cluster(c, dt_frame, wind, params));
}
