use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DropletCluster, SprayParams};
use crate::geom::{OrientedBox, Vec3};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnihilationReason {
    /// Touched the ground plane or a vehicle box.
    Collision,
    /// Farther than `max_range_m` from the sensor.
    Range,
    /// Older than `max_age_s`.
    Age,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnihilationCounts {
    pub collision: u64,
    pub range: u64,
    pub age: u64,
}

impl AnnihilationCounts {
    pub fn total(&self) -> u64 {
        self.collision + self.range + self.age
    }

    pub fn record(&mut self, reason: AnnihilationReason) {
        match reason {
            AnnihilationReason::Collision => self.collision += 1,
            AnnihilationReason::Range => self.range += 1,
            AnnihilationReason::Age => self.age += 1,
        }
    }

    pub fn add(&mut self, other: &AnnihilationCounts) {
        self.collision += other.collision;
        self.range += other.range;
        self.age += other.age;
    }
}

/// First trigger that applies to a cluster, checked in the order
/// collision, range, age.
pub fn annihilation_reason(
    cluster: &DropletCluster,
    boxes: &[OrientedBox],
    lidar_origin: Vec3,
    params: &SprayParams,
) -> Option<AnnihilationReason> {
    let p = cluster.position;
    if p.z <= 0.0 || boxes.iter().any(|b| b.contains(p, params.cluster_radius_m)) {
        Some(AnnihilationReason::Collision)
    } else if (p - lidar_origin).norm() > params.max_range_m {
        Some(AnnihilationReason::Range)
    } else if cluster.age > params.max_age_s {
        Some(AnnihilationReason::Age)
    } else {
        None
    }
}

/// Remove every cluster that meets a trigger. Survivors keep their order.
pub fn annihilate(
    clusters: Vec<DropletCluster>,
    scene: &Scene,
    lidar_origin: Vec3,
    params: &SprayParams,
) -> (Vec<DropletCluster>, AnnihilationCounts) {
    let boxes: Vec<OrientedBox> = scene.vehicles().map(|v| v.bounding_box()).collect();
    let reasons: Vec<Option<AnnihilationReason>> = clusters
        .par_iter()
        .with_min_len(512)
        .map(|c| annihilation_reason(c, &boxes, lidar_origin, params))
        .collect();
    let mut counts = AnnihilationCounts::default();
    let survivors = clusters
        .into_iter()
        .zip(reasons)
        .filter_map(|(c, r)| match r {
            Some(reason) => {
                counts.record(reason);
                None
            }
            None => Some(c),
        })
        .collect();
    (survivors, counts)
}
