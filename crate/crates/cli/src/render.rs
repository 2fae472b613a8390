//! Static figures: a top-down SVG scatter of one frame with label boxes,
//! and PNG previews of its range-raster planes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, Rgb, RgbImage};
use rainspray::dataset::{read_point_cloud, DatasetManifest, FrameLabels, PointCloud};
use rainspray::raster::RangeRaster;
use rainspray::{Error, Result, SemanticClass};

pub struct RenderOptions {
    /// Half-width of the square view in metres, centred on the sensor.
    pub extent_m: f64,
    pub px_per_m: f64,
    /// Draw every n-th ground point.
    pub ground_stride: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            extent_m: 40.0,
            px_per_m: 10.0,
            ground_stride: 8,
        }
    }
}

const STYLE: &str = "circle.ground{fill:#b0b0b0}circle.vehicle{fill:#1f5fbf}\
circle.spray{fill:#e8431a}polygon.box{fill:none;stroke:#102a60;stroke-width:2}\
polygon.ego{fill:#2a2a2a}";

/// Pixel position of a sensor-frame point: +x (forward) points up the
/// image, +y (left) points left.
pub fn to_pixel(x: f64, y: f64, o: &RenderOptions) -> (f64, f64) {
    ((o.extent_m - y) * o.px_per_m, (o.extent_m - x) * o.px_per_m)
}

pub fn top_down_svg(cloud: &PointCloud, labels: &FrameLabels, o: &RenderOptions) -> String {
    let size = 2.0 * o.extent_m * o.px_per_m;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" data-extent-m="{}" data-px-per-m="{}">"#,
        o.extent_m, o.px_per_m
    );
    let _ = write!(s, "<style>{STYLE}</style><rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = write!(
        s,
        "<title>frame {} t={:.1}s {:?} {:.1} mm/h</title>",
        labels.frame_index, labels.timestamp_s, labels.weather_class, labels.rain_rate_mm_per_h
    );

    // Ground first so the other classes draw on top.
    let order = [SemanticClass::Ground, SemanticClass::Vehicle, SemanticClass::Spray];
    for class in order {
        let mut seen = 0usize;
        for (p, c) in cloud.points.iter().zip(&cloud.classes) {
            if *c != class {
                continue;
            }
            seen += 1;
            if class == SemanticClass::Ground && !(seen - 1).is_multiple_of(o.ground_stride.max(1)) {
                continue;
            }
            let (x, y) = (f64::from(p[0]), f64::from(p[1]));
            if x.abs() > o.extent_m || y.abs() > o.extent_m {
                continue;
            }
            let (px, py) = to_pixel(x, y, o);
            let r = if class == SemanticClass::Ground { 1.0 } else { 1.5 };
            let _ = write!(s, r#"<circle class="{}" cx="{px:.1}" cy="{py:.1}" r="{r}"/>"#, class.name());
        }
    }

    for b in &labels.boxes {
        let (sn, cs) = b.yaw.sin_cos();
        let (hl, hw) = (0.5 * b.size[0], 0.5 * b.size[1]);
        let pts: Vec<String> = [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)]
            .iter()
            .map(|&(u, v)| {
                let x = b.center[0] + u * cs - v * sn;
                let y = b.center[1] + u * sn + v * cs;
                let (px, py) = to_pixel(x, y, o);
                format!("{px:.1},{py:.1}")
            })
            .collect();
        let _ = write!(s, r#"<polygon class="box" data-id="{}" points="{}"/>"#, b.id, pts.join(" "));
    }
    let (cx, cy) = to_pixel(0.0, 0.0, o);
    let _ = write!(
        s,
        r#"<polygon class="ego" points="{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}"/>"#,
        cx,
        cy - 8.0,
        cx - 5.0,
        cy + 6.0,
        cx + 5.0,
        cy + 6.0
    );
    s.push_str("</svg>\n");
    s
}

fn palette(class_id: f32) -> Rgb<u8> {
    match SemanticClass::from_id(class_id.round() as u8) {
        Some(SemanticClass::Ground) => Rgb([120, 120, 120]),
        Some(SemanticClass::Vehicle) => Rgb([31, 95, 191]),
        Some(SemanticClass::Spray) => Rgb([232, 67, 26]),
        _ => Rgb([0, 0, 0]),
    }
}

fn gray_plane(r: &RangeRaster, plane: &[f32], f: impl Fn(f32) -> u8) -> GrayImage {
    GrayImage::from_fn(r.width() as u32, r.height() as u32, |x, y| {
        Luma([f(plane[y as usize * r.width() + x as usize])])
    })
}

/// Write PNG previews of the depth, intensity, semantic and drop planes.
/// Returns the files written.
pub fn raster_previews(r: &RangeRaster, out_stem: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut save = |suffix: &str, save: &dyn Fn(&Path) -> image::ImageResult<()>| -> Result<()> {
        let path = PathBuf::from(format!("{}.{suffix}.png", out_stem.display()));
        save(&path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io {
                path: path.clone(),
                source: io,
            },
            other => Error::Format(other.to_string()),
        })?;
        written.push(path);
        Ok(())
    };

    if let Some(depth) = r.plane_by_name("depth") {
        let img = gray_plane(r, depth, |d| {
            if d > 0.0 {
                (255.0 * (1.0 - d / 80.0)).clamp(32.0, 255.0) as u8
            } else {
                0
            }
        });
        save("depth", &|p| img.save(p))?;
    }
    if let Some(intensity) = r.plane_by_name("intensity") {
        let max = intensity.iter().copied().fold(0.0f32, f32::max).max(1e-6);
        let img = gray_plane(r, intensity, |v| (255.0 * (v / max).sqrt()) as u8);
        save("intensity", &|p| img.save(p))?;
    }
    if let Some(sem) = r.plane_by_name("semantic_id") {
        let img = RgbImage::from_fn(r.width() as u32, r.height() as u32, |x, y| {
            palette(sem[y as usize * r.width() + x as usize])
        });
        save("semantic", &|p| img.save(p))?;
    }
    if let Some(mask) = r.plane_by_name("drop_mask") {
        let img = gray_plane(r, mask, |v| if v > 0.5 { 255 } else { 0 });
        save("drop_mask", &|p| img.save(p))?;
    }
    Ok(written)
}

/// Render frame `index` of the dataset in `dataset_dir` into `out_dir`.
pub fn render_frame(dataset_dir: &Path, index: u64, out_dir: &Path, o: &RenderOptions) -> Result<Vec<PathBuf>> {
    let manifest = DatasetManifest::load(dataset_dir)?;
    let entry = manifest
        .frames
        .iter()
        .find(|e| e.index == index)
        .ok_or_else(|| Error::Format(format!("frame {index} is not listed in the manifest")))?;
    let cloud = read_point_cloud(&dataset_dir.join(&entry.cloud), &dataset_dir.join(&entry.classes))?;
    let labels_path = dataset_dir.join(&entry.labels);
    let bytes = std::fs::read(&labels_path).map_err(|e| Error::Io {
        path: labels_path.clone(),
        source: e,
    })?;
    let labels: FrameLabels =
        serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", labels_path.display())))?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let svg_path = out_dir.join(format!("{index:06}.svg"));
    std::fs::write(&svg_path, top_down_svg(&cloud, &labels, o)).map_err(|e| Error::Io {
        path: svg_path.clone(),
        source: e,
    })?;
    let mut written = vec![svg_path];
    for rel in &entry.rasters {
        let raster = RangeRaster::read(&dataset_dir.join(rel))?;
        let stem = out_dir.join(format!("{index:06}.{}", raster.header.sector.name()));
        written.extend(raster_previews(&raster, &stem)?);
    }
    Ok(written)
}
