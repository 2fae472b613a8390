use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{
    volume_rate_side_wave, volume_rate_tread_pickup, DropletCluster, EmissionCone, Mechanism,
    SprayParams, WheelId,
};
use crate::geom::{Pose, Vec3};
use crate::rng::SimRng;
use crate::scene::{water_film_depth, RoadSurface, TireSpec, WeatherConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WheelSide {
    Left,
    Right,
}

impl WheelSide {
    pub fn index(self) -> usize {
        match self {
            WheelSide::Left => 0,
            WheelSide::Right => 1,
        }
    }

    /// +1 for the left wheel, −1 for the right, in the body y axis.
    pub fn outward(self) -> f64 {
        match self {
            WheelSide::Left => 1.0,
            WheelSide::Right => -1.0,
        }
    }
}

/// Per-vehicle emission bookkeeping carried across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionState {
    /// Fractional cluster carry-over, indexed `[wheel][mechanism]`.
    pub carry: [[f64; 2]; 2],
    /// Current water-volume weight w(t).
    pub weight: f64,
    pub next_weight_at: f64,
    /// +1 when the wake favours the left wheel.
    pub wake_sign: f64,
    pub next_flip_at: f64,
    pub clock: f64,
}

impl EmissionState {
    pub fn new(params: &SprayParams, rng: &mut SimRng) -> Self {
        let flip = Exp::new(1.0 / params.wake_flip_mean_s).expect("positive flip mean");
        Self {
            carry: [[0.0; 2]; 2],
            weight: sample_weight(params, rng),
            next_weight_at: params.weight_interval_s,
            wake_sign: if rng.random::<bool>() { 1.0 } else { -1.0 },
            next_flip_at: flip.sample(rng),
            clock: 0.0,
        }
    }
}

fn sample_weight(params: &SprayParams, rng: &mut SimRng) -> f64 {
    let [lo, hi] = params.weight_range;
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// `(left, right)` mass-flow multipliers for the current wake side.
pub fn wake_multipliers(state: &EmissionState, asymmetry: f64) -> [f64; 2] {
    [
        1.0 + asymmetry * state.wake_sign,
        1.0 - asymmetry * state.wake_sign,
    ]
}

/// Advance the wake and weight processes by `dt`. The wake side flips after
/// exponential holding times; w(t) is redrawn at every weight interval.
pub fn wake_update(state: &mut EmissionState, dt: f64, params: &SprayParams, rng: &mut SimRng) {
    debug_assert!(dt > 0.0);
    let flip = Exp::new(1.0 / params.wake_flip_mean_s).expect("positive flip mean");
    state.clock += dt;
    while state.clock >= state.next_flip_at {
        state.wake_sign = -state.wake_sign;
        state.next_flip_at += flip.sample(rng);
    }
    while state.clock >= state.next_weight_at {
        state.weight = sample_weight(params, rng);
        state.next_weight_at += params.weight_interval_s;
    }
}

/// Number of clusters for one mechanism over `dt`, updating the carry-over:
/// `floor(w · m · VR · dt · scale / (V_droplet · cluster_size) + carry)`.
pub fn emission_count(
    volume_rate: f64,
    dt: f64,
    weight: f64,
    multiplier: f64,
    params: &SprayParams,
    carry: &mut f64,
) -> u64 {
    let exact = weight * multiplier * volume_rate * dt * params.emission_scale
        / params.cluster_volume()
        + *carry;
    let n = exact.floor();
    *carry = exact - n;
    n as u64
}

/// Kinematic state of one rear wheel at the start of an emission interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelState {
    pub vehicle_id: u32,
    pub side: WheelSide,
    pub pose: Pose,
    pub speed: f64,
    pub tire: TireSpec,
    /// Wheel centre in the body frame (x, y).
    pub offset: [f64; 2],
}

/// A freshly emitted cluster and the part of the interval it still has to fly.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub cluster: DropletCluster,
    pub remaining_s: f64,
}

/// Emit clusters from one wheel over `[t, t + dt)`.
///
/// Birth times are spread uniformly over the interval; each cluster is
/// placed where the wheel was at its birth and reports the remaining flight
/// time. Tread pickup clusters leave the rear-top of the tire; side wave
/// clusters leave the outer edge of the contact patch. Emission speed
/// relative to the body equals the vehicle speed.
pub fn emit(
    wheel: &WheelState,
    weather: &WeatherConfig,
    road: &RoadSurface,
    params: &SprayParams,
    state: &mut EmissionState,
    dt: f64,
    rng: &mut SimRng,
) -> Vec<Emitted> {
    debug_assert!(dt > 0.0);
    let wd = water_film_depth(road, weather.rain_rate_mm_per_h).unwrap_or(0.0);
    let v = wheel.speed;
    // Grooves only carry what the film can fill.
    let groove_fill = (wd / wheel.tire.groove_depth).clamp(0.0, 1.0);
    let vr_tp = groove_fill * volume_rate_tread_pickup(&wheel.tire, v);
    let vr_sd = volume_rate_side_wave(&wheel.tire, v, wd);

    let mult = wake_multipliers(state, params.wake_asymmetry_a)[wheel.side.index()];
    let carry = &mut state.carry[wheel.side.index()];
    let mut n_tp = emission_count(vr_tp, dt, state.weight, mult, params, &mut carry[0]);
    let mut n_sd = emission_count(vr_sd, dt, state.weight, mult, params, &mut carry[1]);

    let cap = params.max_clusters_per_wheel_per_frame as u64;
    if n_tp + n_sd > cap {
        let total = n_tp + n_sd;
        n_tp = ((cap as f64) * (n_tp as f64) / (total as f64)).round() as u64;
        n_sd = cap - n_tp;
    }

    let wake_sign = state.wake_sign;
    let mut out = Vec::with_capacity((n_tp + n_sd) as usize);
    for _ in 0..n_tp {
        out.push(spawn(wheel, Mechanism::TreadPickup, wake_sign, params, dt, rng));
    }
    for _ in 0..n_sd {
        out.push(spawn(wheel, Mechanism::SideWave, wake_sign, params, dt, rng));
    }
    out
}

fn uniform(rng: &mut SimRng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Body-frame unit direction for azimuth `n` from −X and elevation `l`.
/// `lateral` is the sign applied to the y component.
fn cone_direction(cone: &EmissionCone, lateral: f64, rng: &mut SimRng) -> Vec3 {
    let n = uniform(rng, cone.n_range_rad);
    let l = uniform(rng, cone.l_range_rad);
    Vec3::new(-n.cos() * l.cos(), lateral * n.sin() * l.cos(), l.sin())
}

fn spawn(
    wheel: &WheelState,
    mechanism: Mechanism,
    wake_sign: f64,
    params: &SprayParams,
    dt: f64,
    rng: &mut SimRng,
) -> Emitted {
    let birth = rng.random::<f64>() * dt;
    let mut pose = wheel.pose;
    let (s, c) = pose.yaw.sin_cos();
    pose.x += wheel.speed * c * birth;
    pose.y += wheel.speed * s * birth;

    let r = wheel.tire.radius_m;
    let half_b = 0.5 * wheel.tire.contact_width;
    let [ox, oy] = wheel.offset;
    let (body_pos, body_dir) = match mechanism {
        Mechanism::TreadPickup => {
            let pos = Vec3::new(
                ox - r * FRAC_1_SQRT_2,
                oy + rng.random_range(-half_b..=half_b),
                r * (1.0 + FRAC_1_SQRT_2),
            );
            (pos, cone_direction(&params.tread_pickup, 1.0, rng))
        }
        Mechanism::SideWave => {
            let out = wheel.side.outward();
            let pos = Vec3::new(
                ox + rng.random_range(-0.5 * r..=0.5 * r),
                oy + out * half_b,
                0.03,
            );
            (pos, cone_direction(&params.side_wave, out, rng))
        }
    };

    let velocity = pose.heading() * wheel.speed + pose.rotate(body_dir) * wheel.speed;
    let lateral_velocity = pose.left() * (wake_sign * params.lateral_speed_init);
    let radius = params.cluster_radius_m;
    let offsets = (1..params.cluster_size)
        .map(|_| sample_in_ball(radius, rng))
        .collect();

    Emitted {
        cluster: DropletCluster {
            position: pose.to_world(body_pos),
            velocity,
            lateral_velocity,
            age: 0.0,
            offsets,
            source: WheelId {
                vehicle_id: wheel.vehicle_id,
                side: wheel.side,
            },
            mechanism,
        },
        remaining_s: dt - birth,
    }
}

fn sample_in_ball(radius: f64, rng: &mut SimRng) -> Vec3 {
    if radius <= 0.0 {
        return Vec3::zeros();
    }
    loop {
        let p = Vec3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if p.norm_squared() <= 1.0 {
            return p * radius;
        }
    }
}
