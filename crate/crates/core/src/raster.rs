//! Multi-channel range raster file format (`.rr`).
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `RRF1`                              |
//! | 4      | 4    | `u32` header length `n`                   |
//! | 8      | n    | compact UTF-8 JSON header                 |
//! | 8 + n  | 4·C·H·W | `f32` payload, planar, row-major       |
//!
//! The header carries `height`, `width`, the ordered channel names, the
//! dtype tag `"f32le"`, the frame index and the sector.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RASTER_MAGIC: [u8; 4] = *b"RRF1";
pub const RASTER_FORMAT_VERSION: u32 = 1;
pub const RASTER_DTYPE: &str = "f32le";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Front,
    Rear,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::Front => "front",
            Sector::Rear => "rear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub format_version: u32,
    pub height: u32,
    pub width: u32,
    pub channels: Vec<String>,
    pub dtype: String,
    pub frame_index: u64,
    pub sector: Sector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeRaster {
    pub header: RasterHeader,
    /// `channels × height × width`, planar.
    pub data: Vec<f32>,
}

impl RangeRaster {
    pub fn zeros(height: usize, width: usize, channels: &[&str], frame_index: u64, sector: Sector) -> Self {
        Self {
            header: RasterHeader {
                format_version: RASTER_FORMAT_VERSION,
                height: height as u32,
                width: width as u32,
                channels: channels.iter().map(|c| c.to_string()).collect(),
                dtype: RASTER_DTYPE.to_string(),
                frame_index,
                sector,
            },
            data: vec![0.0; channels.len() * height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.header.height as usize
    }

    pub fn width(&self) -> usize {
        self.header.width as usize
    }

    pub fn channel_count(&self) -> usize {
        self.header.channels.len()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.header.channels.iter().position(|c| c == name)
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.height() * self.width();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_by_name(&self, name: &str) -> Option<&[f32]> {
        self.channel_index(name).map(|c| self.plane(c))
    }

    #[inline]
    fn offset(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.height() + row) * self.width() + col
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[self.offset(channel, row, col)]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f32) {
        let i = self.offset(channel, row, col);
        self.data[i] = value;
    }

    /// Check the header against the payload.
    pub fn validate(&self) -> Result<()> {
        if self.header.dtype != RASTER_DTYPE {
            return Err(Error::Format(format!(
                "unsupported raster dtype {:?}, expected {RASTER_DTYPE:?}",
                self.header.dtype
            )));
        }
        let expected = self.channel_count() * self.height() * self.width();
        if self.data.len() != expected {
            return Err(Error::Shape {
                expected: format!("{expected} payload values"),
                found: format!("{}", self.data.len()),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(8 + header.len() + 4 * self.data.len());
        out.extend_from_slice(&RASTER_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || bytes[..4] != RASTER_MAGIC {
            return Err(Error::Format("missing RRF1 magic".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let header_end = 8usize
            .checked_add(n)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format("truncated raster header".into()))?;
        let header: RasterHeader = serde_json::from_slice(&bytes[8..header_end])
            .map_err(|e| Error::Format(format!("bad raster header: {e}")))?;
        let payload = &bytes[header_end..];
        let values = header.channels.len() * header.height as usize * header.width as usize;
        if payload.len() != 4 * values {
            return Err(Error::Shape {
                expected: format!(
                    "{} payload bytes ({} channels × {} × {})",
                    4 * values,
                    header.channels.len(),
                    header.height,
                    header.width
                ),
                found: format!("{} bytes", payload.len()),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let raster = Self { header, data };
        raster.validate()?;
        Ok(raster)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn golden_bytes() {
        let mut r = RangeRaster::zeros(1, 2, &["depth"], 7, Sector::Rear);
        r.set(0, 0, 0, 1.5);
        r.set(0, 0, 1, -2.0);
        let bytes = r.to_bytes().unwrap();
        let header = br#"{"format_version":1,"height":1,"width":2,"channels":["depth"],"dtype":"f32le","frame_index":7,"sector":"rear"}"#;
        let mut expected = b"RRF1".to_vec();
        expected.extend_from_slice(&(header.len() as u32).to_le_bytes());
        expected.extend_from_slice(header);
        expected.extend_from_slice(&[0x00, 0x00, 0xc0, 0x3f, 0x00, 0x00, 0x00, 0xc0]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn payload_length_is_checked() {
        let r = RangeRaster::zeros(2, 3, &["a", "b"], 0, Sector::Front);
        let mut bytes = r.to_bytes().unwrap();
        bytes.pop();
        assert!(matches!(RangeRaster::from_bytes(&bytes), Err(Error::Shape { .. })));
        assert!(matches!(RangeRaster::from_bytes(b"nope"), Err(Error::Format(_))));
    }

    #[test]
    fn planar_indexing() {
        let mut r = RangeRaster::zeros(2, 3, &["a", "b"], 0, Sector::Front);
        r.set(1, 1, 2, 9.0);
        assert_eq!(r.data[(1 * 2 + 1) * 3 + 2], 9.0);
        assert_eq!(r.plane_by_name("b").unwrap()[5], 9.0);
    }

    proptest! {
        #[test]
        fn byte_round_trip_is_exact(
            h in 1usize..6, w in 1usize..6, c in 1usize..4,
            seed in any::<u64>(), frame in any::<u64>(),
        ) {
            let names: Vec<String> = (0..c).map(|i| format!("ch{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut r = RangeRaster::zeros(h, w, &refs, frame, Sector::Front);
            for (i, v) in r.data.iter_mut().enumerate() {
                *v = f32::from_bits((seed.wrapping_mul(i as u64 + 1) >> 7) as u32 & 0x7f7f_ffff);
            }
            let back = RangeRaster::from_bytes(&r.to_bytes().unwrap()).unwrap();
            prop_assert_eq!(back.header, r.header);
            prop_assert!(back.data.iter().zip(&r.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
