use rand::Rng;

use super::{ClusterGrid, Hit, LidarModel, Ray, INTENSITY_SENTINEL};
use crate::geom::{intersect_ground, OrientedBox, Vec3};
use crate::rng::{LazyRng, SimRng};
use crate::scene::{RoadSurface, Scene};
use crate::semantics::SemanticClass;
use crate::spray::{DropletCluster, SprayParams};

#[derive(Debug, Clone, Copy)]
pub struct TargetBox {
    pub bbox: OrientedBox,
    pub id: u32,
    pub albedo: [f32; 3],
}

/// Everything a ray can hit in one frame. The ego vehicle carries the
/// sensor and is not a target.
pub struct RayTargets<'a> {
    pub boxes: Vec<TargetBox>,
    pub road: &'a RoadSurface,
    pub clusters: &'a [DropletCluster],
    pub grid: ClusterGrid,
    pub cluster_radius_m: f64,
    pub droplet_diameter_m: f64,
    pub cluster_size: u32,
}

impl<'a> RayTargets<'a> {
    pub fn new(
        scene: &'a Scene,
        clusters: &'a [DropletCluster],
        spray: &SprayParams,
        model: &LidarModel,
    ) -> Self {
        let boxes = scene
            .traffic
            .iter()
            .map(|v| TargetBox {
                bbox: v.bounding_box(),
                id: v.id,
                albedo: v.albedo_rgb.map(|c| c as f32),
            })
            .collect();
        let inflate = spray.cluster_radius_m + 0.5 * model.max_range_m * model.beam_divergence_rad;
        let centres: Vec<Vec3> = clusters.iter().map(|c| c.position).collect();
        Self {
            boxes,
            road: &scene.road,
            clusters,
            grid: ClusterGrid::build(&centres, inflate, 1.0),
            cluster_radius_m: spray.cluster_radius_m,
            droplet_diameter_m: spray.droplet_diameter_m,
            cluster_size: spray.cluster_size,
        }
    }
}

/// Probability that a cluster at range `r` stops the beam: the droplet
/// cross-section of the cluster divided by the beam footprint, scaled by
/// `kappa` and clamped to [0, 1].
pub fn interception_probability(
    kappa: f64,
    cluster_size: u32,
    droplet_diameter: f64,
    range: f64,
    divergence: f64,
) -> f64 {
    let droplets = cluster_size as f64 * std::f64::consts::PI * (0.5 * droplet_diameter).powi(2);
    let footprint = std::f64::consts::PI * (0.5 * range * divergence).powi(2);
    if footprint <= 0.0 {
        return 1.0;
    }
    (kappa * droplets / footprint).clamp(0.0, 1.0)
}

/// Cast one ray. Solid candidates (ground, vehicle boxes) are opaque.
/// Droplet clusters within the beam footprint are passed through in range
/// order, each stopping the beam with its interception probability. The
/// random stream is touched only if a droplet candidate exists.
pub fn cast(ray: &Ray, targets: &RayTargets<'_>, model: &LidarModel, rng: &mut LazyRng) -> Hit {
    let o = ray.origin;
    let d = ray.direction;

    let mut t_solid = f64::INFINITY;
    let mut solid: Option<(SemanticClass, [f32; 3], Option<u32>)> = None;
    if let Some(t) = intersect_ground(o, d) {
        let p = o + d * t;
        t_solid = t;
        solid = Some((
            SemanticClass::Ground,
            targets.road.albedo_at(p.x, p.y).map(|c| c as f32),
            None,
        ));
    }
    for b in &targets.boxes {
        if let Some((t0, _)) = b.bbox.intersect_ray(o, d) {
            if t0 > 0.0 && t0 < t_solid {
                t_solid = t0;
                solid = Some((SemanticClass::Vehicle, b.albedo, Some(b.id)));
            }
        }
    }
    let t_limit = t_solid.min(model.max_range_m);

    if !targets.grid.is_empty() {
        let half_div = 0.5 * model.beam_divergence_rad;
        let mut candidates: Vec<(f64, u32)> = Vec::new();
        targets.grid.traverse(o, d, t_limit, |idx| {
            let c = targets.clusters[idx as usize].position - o;
            let t = c.dot(&d);
            if t <= 0.0 || t > t_limit {
                return;
            }
            let perp2 = (c.norm_squared() - t * t).max(0.0);
            let reach = targets.cluster_radius_m + t * half_div;
            if perp2 <= reach * reach {
                candidates.push((t, idx));
            }
        });
        if !candidates.is_empty() {
            candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates.dedup_by_key(|c| c.1);
            let stream = rng.get();
            for (t, _) in candidates {
                let p = interception_probability(
                    model.intercept_gain_kappa,
                    targets.cluster_size,
                    targets.droplet_diameter_m,
                    t,
                    model.beam_divergence_rad,
                );
                if stream.random::<f64>() < p {
                    return Hit {
                        range_m: t,
                        point: o + d * t,
                        class: SemanticClass::Spray,
                        target_albedo: [0.0; 3],
                        target_id: None,
                        dropped: false,
                        intensity: INTENSITY_SENTINEL,
                    };
                }
            }
        }
    }

    match solid {
        Some((class, albedo, id)) if t_solid <= model.max_range_m => Hit {
            range_m: t_solid,
            point: o + d * t_solid,
            class,
            target_albedo: albedo,
            target_id: id,
            dropped: false,
            intensity: INTENSITY_SENTINEL,
        },
        _ => Hit::none(),
    }
}

/// Receiver drop-off: marks a return as dropped with probability `p`.
pub fn apply_dropoff(mut hit: Hit, p: f64, rng: &mut SimRng) -> Hit {
    if hit.is_return() && p > 0.0 && rng.random::<f64>() < p {
        hit.dropped = true;
    }
    hit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose;
    use crate::rng::{substream, Domain};
    use crate::scene::{VehicleState, VehicleTemplate, WeatherConfig};
    use crate::spray::{Mechanism, WheelId, WheelSide};

    fn scene_with(traffic: Vec<VehicleState>) -> Scene {
        let ego = VehicleState::from_template(
            0,
            Pose::new(0.0, 0.0, 0.0, 0.0),
            0.0,
            &VehicleTemplate::default(),
        );
        Scene::from_parts(WeatherConfig::clear(), crate::scene::RoadSurface::default(), ego, traffic, 0)
    }

    fn cluster_at(p: Vec3) -> DropletCluster {
        DropletCluster {
            position: p,
            velocity: Vec3::zeros(),
            lateral_velocity: Vec3::zeros(),
            age: 0.0,
            offsets: Vec::new(),
            source: WheelId {
                vehicle_id: 1,
                side: WheelSide::Left,
            },
            mechanism: Mechanism::TreadPickup,
        }
    }

    fn ray(model: &LidarModel, ch: usize, az: usize) -> Ray {
        Ray {
            origin: Vec3::new(0.0, 0.0, model.mount_height_m),
            direction: model.direction(ch, az),
            channel: ch as u32,
            azimuth_index: az as u32,
        }
    }

    #[test]
    fn lowest_beam_ground_range() {
        let model = LidarModel::default();
        let scene = scene_with(vec![]);
        let t = RayTargets::new(&scene, &[], &SprayParams::default(), &model);
        let mut rng = LazyRng::new(0, Domain::RayIntercept, 0, 0, 0);
        let hit = cast(&ray(&model, 0, 0), &t, &model, &mut rng);
        assert_eq!(hit.class, SemanticClass::Ground);
        let expected = 2.0 / 17.6f64.to_radians().sin();
        assert!((hit.range_m - expected).abs() < 1e-9);
        assert!((hit.range_m - 6.614).abs() < 1e-3);
        assert!(!rng.was_used());
    }

    #[test]
    fn top_beam_sees_empty_sky() {
        let model = LidarModel::default();
        let scene = scene_with(vec![]);
        let t = RayTargets::new(&scene, &[], &SprayParams::default(), &model);
        let mut rng = LazyRng::new(0, Domain::RayIntercept, 0, 63, 0);
        let hit = cast(&ray(&model, 63, 0), &t, &model, &mut rng);
        assert_eq!(hit.class, SemanticClass::None);
    }

    #[test]
    fn interception_worked_example() {
        let p = interception_probability(1.0, 10, 1e-3, 10.0, 2e-3);
        assert!((p - 0.025).abs() < 1e-15);
        assert_eq!(interception_probability(1.0, 10, 1e-3, 0.01, 2e-3), 1.0);
    }

    #[test]
    fn vehicle_in_front_of_ground() {
        let model = LidarModel::default();
        let lead = VehicleState::from_template(
            1,
            Pose::new(12.0, 0.0, 0.0, 0.0),
            0.0,
            &VehicleTemplate::default(),
        );
        let scene = scene_with(vec![lead]);
        let t = RayTargets::new(&scene, &[], &SprayParams::default(), &model);
        // Channel whose elevation is closest to -3 degrees hits the rear face.
        let ch = (0..64)
            .min_by(|&a, &b| {
                (model.elevation(a).to_degrees() + 3.0)
                    .abs()
                    .total_cmp(&(model.elevation(b).to_degrees() + 3.0).abs())
            })
            .unwrap();
        let mut rng = LazyRng::new(0, Domain::RayIntercept, 0, 0, 0);
        let hit = cast(&ray(&model, ch, 0), &t, &model, &mut rng);
        assert_eq!(hit.class, SemanticClass::Vehicle);
        assert_eq!(hit.target_id, Some(1));
        let rear = 12.0 - 2.3;
        assert!((hit.point.x - rear).abs() < 1e-9);
    }

    #[test]
    fn dense_cluster_wall_intercepts() {
        let model = LidarModel {
            intercept_gain_kappa: 1e6,
            ..LidarModel::default()
        };
        let scene = scene_with(vec![]);
        let ch = 55;
        let r = ray(&model, ch, 0);
        let clusters = vec![cluster_at(r.origin + r.direction * 5.0)];
        let t = RayTargets::new(&scene, &clusters, &SprayParams::default(), &model);
        let mut rng = LazyRng::new(0, Domain::RayIntercept, 0, ch as u64, 0);
        let hit = cast(&r, &t, &model, &mut rng);
        assert_eq!(hit.class, SemanticClass::Spray);
        assert!((hit.range_m - 5.0).abs() < 0.01);
        assert!(rng.was_used());
    }

    #[test]
    fn dropoff_extremes() {
        let mut rng = substream(0, Domain::RayDrop, 0, 0, 0);
        let mut hit = Hit::none();
        hit.class = SemanticClass::Ground;
        assert!(!apply_dropoff(hit, 0.0, &mut rng).dropped);
        let none = apply_dropoff(Hit::none(), 0.99, &mut rng);
        assert!(!none.dropped);
    }
}
