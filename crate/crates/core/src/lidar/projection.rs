use super::LidarFrame;
use crate::error::{Error, Result};
use crate::raster::{RangeRaster, Sector};
use crate::semantics::SemanticClass;

/// Channel order of rasters written by the simulator.
pub const RASTER_CHANNELS: [&str; 9] = [
    "depth",
    "albedo_r",
    "albedo_g",
    "albedo_b",
    "semantic_id",
    "weather_id",
    "drop_mask",
    "rgb_valid",
    "intensity",
];

/// Azimuth index shown in raster column `col` of a sector `width` columns
/// wide. Columns run from the sensor's left to its right, so azimuth
/// decreases with the column; the sector is centred on +X (front) or −X
/// (rear).
pub fn sector_azimuth_index(sector: Sector, col: usize, width: usize, azimuth_steps: usize) -> usize {
    let centre = match sector {
        Sector::Front => 0,
        Sector::Rear => azimuth_steps / 2,
    };
    let a = centre as i64 + (width / 2) as i64 - col as i64;
    a.rem_euclid(azimuth_steps as i64) as usize
}

/// Project one sector of the hit grid into a range raster. Row 0 is the
/// top beam. Cells without a return are zero in every plane; dropped
/// returns keep their geometry and set `drop_mask`.
pub fn project_range_raster(frame: &LidarFrame, width: usize, sector: Sector) -> Result<RangeRaster> {
    if width == 0 || width > frame.azimuth_steps {
        return Err(Error::Shape {
            expected: format!("raster width in 1..={}", frame.azimuth_steps),
            found: format!("{width}"),
        });
    }
    let height = frame.channels;
    let mut r = RangeRaster::zeros(height, width, &RASTER_CHANNELS, frame.frame_index, sector);
    let weather = frame.weather_class.id() as f32;
    for row in 0..height {
        let channel = height - 1 - row;
        for col in 0..width {
            r.set(5, row, col, weather);
            let az = sector_azimuth_index(sector, col, width, frame.azimuth_steps);
            let hit = frame.hit(channel, az);
            if !hit.is_return() {
                continue;
            }
            r.set(0, row, col, hit.range_m as f32);
            let solid = matches!(hit.class, SemanticClass::Ground | SemanticClass::Vehicle);
            if solid {
                r.set(1, row, col, hit.target_albedo[0]);
                r.set(2, row, col, hit.target_albedo[1]);
                r.set(3, row, col, hit.target_albedo[2]);
                r.set(7, row, col, 1.0);
            }
            r.set(4, row, col, hit.class.id() as f32);
            r.set(6, row, col, if hit.dropped { 1.0 } else { 0.0 });
            r.set(8, row, col, hit.intensity.max(0.0));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_covers_half_a_turn() {
        let steps = 2500;
        let width = 1250;
        let mut front: Vec<usize> = (0..width)
            .map(|c| sector_azimuth_index(Sector::Front, c, width, steps))
            .collect();
        let mut rear: Vec<usize> = (0..width)
            .map(|c| sector_azimuth_index(Sector::Rear, c, width, steps))
            .collect();
        assert_eq!(front[width / 2], 0);
        assert_eq!(rear[width / 2], 1250);
        front.sort_unstable();
        front.dedup();
        rear.sort_unstable();
        rear.dedup();
        assert_eq!(front.len(), width);
        // Front and rear together tile the full revolution.
        let mut all = front.clone();
        all.extend(&rear);
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), steps);
        // 1250 columns of 360/2500 degrees each.
        assert!((width as f64 * 360.0 / steps as f64 - 180.0).abs() < 1e-12);
    }

    #[test]
    fn left_of_the_sensor_is_column_zero() {
        // Column 0 of the front sector looks 90 degrees to the left.
        assert_eq!(sector_azimuth_index(Sector::Front, 0, 1250, 2500), 625);
    }
}
