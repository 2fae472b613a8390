#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rainspray::dataset::Simulation;
use rainspray::intensity::IntensityMode;
use rainspray::scene::ScenarioConfig;
use rainspray::SemanticClass;
use serde_json::json;

/// Ego following a single leader 15 m ahead, both at 100 km/h.
pub fn following_config(rain: f64, frames: u32, seed: u64) -> ScenarioConfig {
    ScenarioConfig::from_value(json!({
        "weather": { "rain_rate_mm_per_h": rain },
        "ego": { "speed_kmh": 100.0 },
        "traffic": { "vehicles": [ { "x_offset_m": 15.0, "lane_offset_m": 0.0, "speed_kmh": 100.0 } ] },
        "duration_frames": frames,
        "rng_seed": seed,
    }))
    .expect("valid following config")
}

pub struct FrameCounts {
    pub spray: usize,
    /// Non-dropped Vehicle returns on the leader.
    pub leader: usize,
}

pub fn following_counts(rain: f64, frames: u32, seed: u64) -> Vec<FrameCounts> {
    let cfg = following_config(rain, frames, seed);
    let leader = 1;
    let mut sim = Simulation::new(&cfg).expect("scenario builds");
    (0..frames)
        .map(|_| {
            let f = sim.next_frame(IntensityMode::Physical).expect("frame");
            FrameCounts {
                spray: f.frame.classes.iter().filter(|&&c| c == SemanticClass::Spray).count(),
                leader: f
                    .frame
                    .hits
                    .iter()
                    .filter(|h| h.class == SemanticClass::Vehicle && !h.dropped && h.target_id == Some(leader))
                    .count(),
            }
        })
        .collect()
}

/// Every file under `dir` keyed by its relative path.
pub fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn golden(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
