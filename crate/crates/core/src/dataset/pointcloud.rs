//! KITTI-style `.bin` point clouds: `N × (x, y, z, intensity)` as `f32`
//! little-endian, with a `.cls` sidecar of `N` class ids (`u8`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::lidar::LidarFrame;
use crate::semantics::SemanticClass;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f32; 4]>,
    pub classes: Vec<SemanticClass>,
}

impl PointCloud {
    pub fn from_frame(frame: &LidarFrame) -> Self {
        Self {
            points: frame.points.clone(),
            classes: frame.classes.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Encode to `(bin, cls)` byte buffers.
    pub fn encode(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        if self.points.len() != self.classes.len() {
            return Err(Error::Shape {
                expected: format!("{} class ids", self.points.len()),
                found: format!("{}", self.classes.len()),
            });
        }
        let sentinels = self.points.iter().filter(|p| !(p[3] >= 0.0)).count();
        if sentinels > 0 {
            return Err(Error::SentinelIntensity { count: sentinels });
        }
        let mut bin = Vec::with_capacity(16 * self.points.len());
        for p in &self.points {
            for v in p {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        let cls = self.classes.iter().map(|c| c.id()).collect();
        Ok((bin, cls))
    }

    pub fn decode(bin: &[u8], cls: &[u8]) -> Result<Self> {
        if !bin.len().is_multiple_of(16) {
            return Err(Error::Format(format!(
                "point payload of {} bytes is not a multiple of 16",
                bin.len()
            )));
        }
        let n = bin.len() / 16;
        if cls.len() != n {
            return Err(Error::Shape {
                expected: format!("{n} class ids"),
                found: format!("{}", cls.len()),
            });
        }
        let points = bin
            .chunks_exact(16)
            .map(|c| {
                let f = |i: usize| f32::from_le_bytes(c[4 * i..4 * i + 4].try_into().expect("4 bytes"));
                [f(0), f(1), f(2), f(3)]
            })
            .collect();
        let classes = cls
            .iter()
            .map(|&id| {
                SemanticClass::from_id(id).ok_or_else(|| Error::Format(format!("unknown class id {id}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { points, classes })
    }
}

/// Write the non-dropped points of `frame`. Refuses if any intensity is
/// still unassigned.
pub fn write_point_cloud(frame: &LidarFrame, bin_path: &Path, cls_path: &Path) -> Result<()> {
    let (bin, cls) = PointCloud::from_frame(frame).encode()?;
    std::fs::write(bin_path, bin).map_err(|e| Error::io(bin_path, e))?;
    std::fs::write(cls_path, cls).map_err(|e| Error::io(cls_path, e))
}

pub fn read_point_cloud(bin_path: &Path, cls_path: &Path) -> Result<PointCloud> {
    let bin = std::fs::read(bin_path).map_err(|e| Error::io(bin_path, e))?;
    let cls = std::fs::read(cls_path).map_err(|e| Error::io(cls_path, e))?;
    PointCloud::decode(&bin, &cls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(n: usize) -> PointCloud {
        PointCloud {
            points: (0..n).map(|i| [i as f32, -(i as f32), 0.5, 0.25]).collect(),
            classes: (0..n).map(|i| SemanticClass::ALL[1 + i % 3]).collect(),
        }
    }

    #[test]
    fn three_points_take_48_bytes() {
        let (bin, cls) = cloud(3).encode().unwrap();
        assert_eq!(bin.len(), 48);
        assert_eq!(cls, vec![1, 2, 3]);
    }

    #[test]
    fn golden_bytes() {
        let c = PointCloud {
            points: vec![[1.0, -2.0, 0.5, 0.25]],
            classes: vec![SemanticClass::Spray],
        };
        let (bin, cls) = c.encode().unwrap();
        assert_eq!(
            bin,
            [
                0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0, 0x00, 0x00, 0x00, 0x3f, 0x00, 0x00,
                0x80, 0x3e
            ]
        );
        assert_eq!(cls, [3]);
    }

    #[test]
    fn empty_cloud_is_zero_bytes() {
        let (bin, cls) = cloud(0).encode().unwrap();
        assert!(bin.is_empty() && cls.is_empty());
        assert!(PointCloud::decode(&bin, &cls).unwrap().is_empty());
    }

    #[test]
    fn sentinel_is_refused() {
        let mut c = cloud(4);
        c.points[2][3] = -1.0;
        assert!(matches!(c.encode(), Err(Error::SentinelIntensity { count: 1 })));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let (bin, cls) = cloud(2).encode().unwrap();
        assert!(PointCloud::decode(&bin[..31], &cls).is_err());
        assert!(PointCloud::decode(&bin, &cls[..1]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            pts in prop::collection::vec((any::<f32>(), any::<f32>(), any::<f32>(), 0.0f32..=1.0, 1u8..4), 0..64)
        ) {
            let c = PointCloud {
                points: pts.iter().map(|p| [p.0, p.1, p.2, p.3]).collect(),
                classes: pts.iter().map(|p| SemanticClass::from_id(p.4).unwrap()).collect(),
            };
            let (bin, cls) = c.encode().unwrap();
            let back = PointCloud::decode(&bin, &cls).unwrap();
            prop_assert_eq!(&back.classes, &c.classes);
            for (a, b) in back.points.iter().zip(&c.points) {
                for k in 0..4 {
                    prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
                }
            }
        }
    }
}
