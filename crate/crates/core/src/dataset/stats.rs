use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_point_cloud, DatasetManifest, FrameLabels};
use crate::error::Result;
use crate::raster::RangeRaster;
use crate::semantics::SemanticClass;

/// Fixed-width histogram over `[lo, hi)`; values outside land in the
/// under/overflow counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn add(&mut self, v: f64) {
        if v < self.lo {
            self.underflow += 1;
        } else if v >= self.hi {
            self.overflow += 1;
        } else {
            let last = self.counts.len() - 1;
            let i = ((v - self.lo) / self.bin_width()) as usize;
            self.counts[i.min(last)] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// `[lo, hi)` of the fullest bin, or `None` if every bin is empty.
    pub fn mode(&self) -> Option<(f64, f64)> {
        let (i, &n) = self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        if n == 0 {
            return None;
        }
        let w = self.bin_width();
        Some((self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w))
    }
}

/// Intensity histograms of one class: a fine one over `[0, 0.01)` that
/// resolves the spray distribution and a coarse one over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub fine: Histogram,
    pub coarse: Histogram,
}

impl Default for ClassHistogram {
    fn default() -> Self {
        Self {
            fine: Histogram::new(0.0, 0.01, 20),
            coarse: Histogram::new(0.0, 1.0 + 1e-9, 20),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub manifest_frames: u64,
    pub manifest_complete: bool,
    pub frames_read: u64,
    pub total_points: u64,
    pub class_counts: BTreeMap<String, u64>,
    pub spray_fraction: f64,
    pub intensity_histograms: BTreeMap<String, ClassHistogram>,
    pub frames_per_weather_class: BTreeMap<String, u64>,
    /// Files that failed to read or parse, with the reason.
    pub corrupt: Vec<String>,
}

/// Summarize a dataset directory. Unreadable files are listed in
/// `corrupt`; only a missing or unparsable manifest is an error.
pub fn stats(dir: &Path) -> Result<DatasetStats> {
    let manifest = DatasetManifest::load(dir)?;
    let mut s = DatasetStats {
        manifest_frames: manifest.frame_count,
        manifest_complete: manifest.complete,
        ..DatasetStats::default()
    };
    for class in [SemanticClass::Ground, SemanticClass::Vehicle, SemanticClass::Spray] {
        s.class_counts.insert(class.name().to_string(), 0);
        s.intensity_histograms.insert(class.name().to_string(), ClassHistogram::default());
    }

    for entry in &manifest.frames {
        match read_point_cloud(&dir.join(&entry.cloud), &dir.join(&entry.classes)) {
            Ok(cloud) => {
                s.frames_read += 1;
                for (p, c) in cloud.points.iter().zip(&cloud.classes) {
                    s.total_points += 1;
                    *s.class_counts.entry(c.name().to_string()).or_default() += 1;
                    let h = s.intensity_histograms.entry(c.name().to_string()).or_default();
                    h.fine.add(f64::from(p[3]));
                    h.coarse.add(f64::from(p[3]));
                }
            }
            Err(e) => s.corrupt.push(format!("{}: {e}", entry.cloud)),
        }
        let labels_path = dir.join(&entry.labels);
        let labels = std::fs::read(&labels_path)
            .map_err(|e| e.to_string())
            .and_then(|b| FrameLabels::from_json_bytes(&b).map_err(|e| e.to_string()));
        match labels {
            Ok(l) => {
                let name = serde_json::to_value(l.weather_class)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                *s.frames_per_weather_class.entry(name).or_default() += 1;
            }
            Err(e) => s.corrupt.push(format!("{}: {e}", entry.labels)),
        }
        for rel in &entry.rasters {
            if let Err(e) = RangeRaster::read(&dir.join(rel)) {
                s.corrupt.push(format!("{rel}: {e}"));
            }
        }
    }
    let spray = s.class_counts.get("spray").copied().unwrap_or(0);
    s.spray_fraction = if s.total_points == 0 {
        0.0
    } else {
        spray as f64 / s.total_points as f64
    };
    Ok(s)
}
