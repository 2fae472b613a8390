use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    advance_cluster, annihilate, emit, integrate, wake_update, AnnihilationCounts, DropletCluster,
    EmissionState, SprayParams, WheelSide, WheelState,
};
use crate::geom::Vec3;
use crate::rng::{substream, Domain, SimRng};
use crate::scene::Scene;

/// Running spray counters, exported per frame in dataset labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SprayFrameStats {
    pub emitted_total: u64,
    pub emitted_last_interval: u64,
    pub alive: u64,
    pub annihilated: AnnihilationCounts,
}

/// Owns the live clusters and per-vehicle emission state of a scenario.
#[derive(Debug, Clone)]
pub struct SpraySystem {
    params: SprayParams,
    clusters: Vec<DropletCluster>,
    states: BTreeMap<u32, EmissionState>,
    rng: SimRng,
    emitted_total: u64,
    emitted_last: u64,
    annihilated: AnnihilationCounts,
    /// Physical water volume represented by emitted clusters, per wheel side.
    emitted_volume: [f64; 2],
}

impl SpraySystem {
    pub fn new(params: SprayParams, seed: u64) -> Self {
        Self {
            params,
            clusters: Vec::new(),
            states: BTreeMap::new(),
            rng: substream(seed, Domain::Spray, 0, 0, 0),
            emitted_total: 0,
            emitted_last: 0,
            annihilated: AnnihilationCounts::default(),
            emitted_volume: [0.0; 2],
        }
    }

    pub fn params(&self) -> &SprayParams {
        &self.params
    }

    pub fn clusters(&self) -> &[DropletCluster] {
        &self.clusters
    }

    pub fn emitted_volume_by_side(&self) -> [f64; 2] {
        self.emitted_volume
    }

    pub fn stats(&self) -> SprayFrameStats {
        SprayFrameStats {
            emitted_total: self.emitted_total,
            emitted_last_interval: self.emitted_last,
            alive: self.clusters.len() as u64,
            annihilated: self.annihilated,
        }
    }

    /// `emitted = alive + annihilated` holds after every call.
    pub fn is_conserved(&self) -> bool {
        self.emitted_total == self.clusters.len() as u64 + self.annihilated.total()
    }

    /// Fly existing clusters over `[t, t + dt)` and emit new ones from the
    /// vehicles of `start` (the scene at time `t`).
    pub fn simulate_interval(&mut self, start: &Scene, dt: f64) {
        integrate(&mut self.clusters, &start.weather, dt, &self.params);

        let emitters: Vec<_> = start
            .vehicles()
            .filter(|v| self.params.ego_emits || v.id != start.ego.id)
            .collect();
        self.states
            .retain(|id, _| emitters.iter().any(|v| v.id == *id));
        let mut order: Vec<_> = emitters.iter().map(|v| v.id).collect();
        order.sort_unstable();
        for id in &order {
            if !self.states.contains_key(id) {
                let state = EmissionState::new(&self.params, &mut self.rng);
                self.states.insert(*id, state);
            }
        }

        let wind = start.weather.wind_velocity;
        let per_cluster = self.params.cluster_volume() / self.params.emission_scale.max(f64::MIN_POSITIVE);
        let mut emitted = 0u64;
        for id in order {
            let vehicle = emitters.iter().find(|v| v.id == id).expect("emitter present");
            let state = self.states.get_mut(&id).expect("state created above");
            wake_update(state, dt, &self.params, &mut self.rng);
            for side in [WheelSide::Left, WheelSide::Right] {
                let wheel = WheelState {
                    vehicle_id: id,
                    side,
                    pose: vehicle.pose,
                    speed: vehicle.speed,
                    tire: vehicle.tire,
                    offset: vehicle.rear_wheel_offsets[side.index()],
                };
                let batch = emit(
                    &wheel,
                    &start.weather,
                    &start.road,
                    &self.params,
                    state,
                    dt,
                    &mut self.rng,
                );
                emitted += batch.len() as u64;
                self.emitted_volume[side.index()] += batch.len() as f64 * per_cluster;
                for mut e in batch {
                    advance_cluster(&mut e.cluster, e.remaining_s, wind, &self.params);
                    self.clusters.push(e.cluster);
                }
            }
        }
        self.emitted_total += emitted;
        self.emitted_last = emitted;
    }

    /// Apply the annihilation triggers against `scene` at the end of an interval.
    pub fn annihilate(&mut self, scene: &Scene, lidar_origin: Vec3) -> AnnihilationCounts {
        let clusters = std::mem::take(&mut self.clusters);
        let (alive, counts) = annihilate(clusters, scene, lidar_origin, &self.params);
        self.clusters = alive;
        self.annihilated.add(&counts);
        counts
    }
}
