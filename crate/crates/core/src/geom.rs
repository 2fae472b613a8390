//! Small geometry kit: poses, oriented boxes and slab intersection.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Planar pose of a vehicle. `z` is the elevation of the box bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw }
    }

    pub fn heading(&self) -> Vec3 {
        Vec3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }

    /// Unit vector pointing to the vehicle's left.
    pub fn left(&self) -> Vec3 {
        Vec3::new(-self.yaw.sin(), self.yaw.cos(), 0.0)
    }

    /// Transform a body-frame point (x forward, y left, z up from box bottom)
    /// to world coordinates.
    pub fn to_world(&self, body: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(
            self.x + c * body.x - s * body.y,
            self.y + s * body.x + c * body.y,
            self.z + body.z,
        )
    }

    /// Rotate a body-frame direction to world coordinates.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    /// Inverse of [`Pose::rotate`].
    pub fn unrotate(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }
}

/// Axis-aligned rectangle in the world XY plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x_max > self.x_min && self.y_max > self.y_min)
    }
}

/// Box rotated about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub yaw: f64,
}

impl OrientedBox {
    /// Box of size `(length, width, height)` resting on its pose.
    pub fn from_pose(pose: &Pose, size: [f64; 3]) -> Self {
        Self {
            center: Vec3::new(pose.x, pose.y, pose.z + 0.5 * size[2]),
            half_extents: Vec3::new(0.5 * size[0], 0.5 * size[1], 0.5 * size[2]),
            yaw: pose.yaw,
        }
    }

    fn to_local(self, p: Vec3) -> Vec3 {
        let d = p - self.center;
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
    }

    fn dir_to_local(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    /// Point-in-box test with the box grown by `margin` on every face.
    pub fn contains(&self, p: Vec3, margin: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x + margin
            && l.y.abs() <= self.half_extents.y + margin
            && l.z.abs() <= self.half_extents.z + margin
    }

    /// Slab test. Returns the entry and exit parameters along the ray, or
    /// `None` if the ray misses. The entry may be negative when the origin
    /// is inside the box.
    pub fn intersect_ray(&self, origin: Vec3, dir: Vec3) -> Option<(f64, f64)> {
        let o = self.to_local(origin);
        let d = self.dir_to_local(dir);
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let h = self.half_extents[axis];
            if d[axis].abs() < 1e-15 {
                if o[axis].abs() > h {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[axis];
            let mut a = (-h - o[axis]) * inv;
            let mut b = (h - o[axis]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// The eight corners in world coordinates.
    pub fn corners(&self) -> [Vec3; 8] {
        let (s, c) = self.yaw.sin_cos();
        let h = self.half_extents;
        let mut out = [Vec3::zeros(); 8];
        for (i, corner) in out.iter_mut().enumerate() {
            let lx = if i & 1 == 0 { -h.x } else { h.x };
            let ly = if i & 2 == 0 { -h.y } else { h.y };
            let lz = if i & 4 == 0 { -h.z } else { h.z };
            *corner = self.center + Vec3::new(c * lx - s * ly, s * lx + c * ly, lz);
        }
        out
    }

    /// Footprint polygon (counter-clockwise) in world XY.
    pub fn footprint(&self) -> [Vector2<f64>; 4] {
        let c = self.corners();
        [
            Vector2::new(c[0].x, c[0].y),
            Vector2::new(c[1].x, c[1].y),
            Vector2::new(c[3].x, c[3].y),
            Vector2::new(c[2].x, c[2].y),
        ]
    }
}

/// Intersection parameter of a ray with the plane `z = 0`, if in front.
pub fn intersect_ground(origin: Vec3, dir: Vec3) -> Option<f64> {
    if dir.z >= 0.0 {
        return None;
    }
    let t = -origin.z / dir.z;
    (t > 0.0).then_some(t)
}
