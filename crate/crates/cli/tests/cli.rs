use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rainspray(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainspray"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn generate(dir: &Path, frames: u32, extra: &[&str]) -> Output {
    let frames = format!("duration_frames={frames}");
    let mut args = vec!["generate", "--seed", "42", "--set", frames.as_str(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    rainspray(&args)
}

#[test]
fn zero_slope_is_rejected_with_field_name() {
    let out = rainspray(&["--json", "validate-config", "--set", "road.slope_S=0"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["field"], "road.slope_S");
    assert_eq!(v["exit_code"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("road.slope_S"));
}

#[test]
fn valid_config_passes() {
    let out = rainspray(&["validate-config", "--set", "weather.rain_rate_mm_per_h=45"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn same_seed_gives_identical_manifests() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(generate(a.path(), 3, &[]).status.success());
    assert!(generate(b.path(), 3, &[]).status.success());
    let ma = std::fs::read(a.path().join("manifest.json")).unwrap();
    let mb = std::fs::read(b.path().join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
    let m: Value = serde_json::from_slice(&ma).unwrap();
    assert_eq!(m["rng_seed"], 42);
    assert_eq!(m["config"]["duration_frames"], 3);
    assert_eq!(m["complete"], true);
}

#[test]
fn stats_json_reports_spray() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), 2, &[]).status.success());
    let out = rainspray(&["--json", "stats", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["frames_read"], 2);
    assert!(v["class_counts"]["spray"].as_u64().unwrap() > 0);
    assert!(v["spray_fraction"].as_f64().unwrap() > 0.0);
}

#[test]
fn render_shows_spray_behind_a_vehicle() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("render");
    // Leader 15 m ahead: its spray trails toward the sensor.
    let out = generate(
        dir.path(),
        1,
        &[
            "--set",
            "weather.rain_rate_mm_per_h=60",
            "--set",
            "traffic.vehicles.0={\"x_offset_m\":15,\"lane_offset_m\":0,\"speed_kmh\":100}",
            "--set",
            "ego.speed_kmh=100",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rainspray(&["render", dir.path().to_str().unwrap(), "--frame", "0", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for name in ["000000.svg", "000000.front.depth.png", "000000.rear.intensity.png", "000000.front.semantic.png"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let svg = std::fs::read_to_string(out_dir.join("000000.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // Box y pixel range (x forward maps to y up), then look for a spray
    // circle just behind the box, i.e. at larger pixel y.
    let attr = |tag: &str, name: &str| -> Option<f64> {
        let start = tag.find(&format!(" {name}=\""))? + name.len() + 3;
        tag[start..].split('"').next()?.parse().ok()
    };
    let poly = svg.split("<polygon class=\"box\"").nth(1).expect("a box is drawn");
    let points = poly.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<f64> = points.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let xs: Vec<f64> = points.split(' ').map(|p| p.split(',').next().unwrap().parse().unwrap()).collect();
    let bottom = ys.iter().copied().fold(f64::MIN, f64::max);
    let (left, right) = (
        xs.iter().copied().fold(f64::MAX, f64::min),
        xs.iter().copied().fold(f64::MIN, f64::max),
    );
    let behind = svg
        .split("<circle class=\"spray\"")
        .skip(1)
        .filter_map(|t| Some((attr(t, "cx")?, attr(t, "cy")?)))
        .filter(|&(cx, cy)| cy > bottom && cy < bottom + 60.0 && cx > left - 20.0 && cx < right + 20.0)
        .count();
    assert!(behind > 0, "no spray drawn behind the box");
}

#[test]
fn beam_pattern_csv() {
    let out = rainspray(&["beam-pattern"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "channel,elevation_deg");
    assert_eq!(lines.len(), 65);
    let first: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = lines[64].split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 2.4).abs() < 1e-9 || (first + 17.6).abs() < 1e-9);
    assert!((first - last).abs() > 19.99);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(rainspray(&["generate", "--bogus"]).status.code(), Some(1));
    assert_eq!(rainspray(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rainspray(&["--help"]).status.code(), Some(0));
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = rainspray(&["stats", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = rainspray(&["--json", "validate-config", "--config", missing.join("c.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["exit_code"], 2);
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{ "weather": { "rain_rate_mm_per_h": 20 }, "duration_frames": 1 }"#).unwrap();
    let out = rainspray(&["validate-config", "-c", cfg.to_str().unwrap(), "--set", "lidar.channels=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lidar.channels"));
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = rainspray(&["validate-config", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
