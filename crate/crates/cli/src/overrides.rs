use serde_json::{Map, Value};

/// Apply one `dotted.key=value` override to a JSON document. The value is
/// parsed as JSON when possible (`3`, `true`, `[1,2]`) and taken as a
/// string otherwise. Missing containers along the path are created, as an
/// array when the next segment is numeric. Numeric segments index into
/// arrays; an index equal to the length appends.
pub fn apply(doc: &mut Value, spec: &str) -> Result<(), String> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form key=value"))?;
    if path.is_empty() {
        return Err(format!("override `{spec}` has an empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if let Value::Array(items) = node {
            let idx: usize = seg
                .parse()
                .map_err(|_| format!("`{path}`: `{seg}` is not an array index"))?;
            let len = items.len();
            if idx == len {
                items.push(Value::Null);
            }
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| format!("`{path}`: index {idx} out of bounds (len {len})"))?;
            if last {
                *slot = value;
                return Ok(());
            }
            node = slot;
            continue;
        }
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object ensured above");
        if last {
            map.insert(seg.to_string(), value);
            return Ok(());
        }
        let next_is_index = segments[i + 1].parse::<usize>().is_ok();
        node = map.entry(seg.to_string()).or_insert_with(|| {
            if next_is_index {
                Value::Array(Vec::new())
            } else {
                Value::Object(Map::new())
            }
        });
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_keys_are_created() {
        let mut doc = json!({});
        apply(&mut doc, "road.slope_S=0").unwrap();
        apply(&mut doc, "weather.rain_rate_mm_per_h=[30,60]").unwrap();
        apply(&mut doc, "ego.vehicle.albedo_rgb=[0.1,0.2,0.3]").unwrap();
        assert_eq!(doc["road"]["slope_S"], json!(0));
        assert_eq!(doc["weather"]["rain_rate_mm_per_h"], json!([30, 60]));
        assert_eq!(doc["ego"]["vehicle"]["albedo_rgb"][2], json!(0.3));
    }

    #[test]
    fn array_indices_and_strings() {
        let mut doc = json!({"traffic": {"vehicles": [{"x_offset_m": 10.0}]}});
        apply(&mut doc, "traffic.vehicles.0.x_offset_m=15").unwrap();
        apply(&mut doc, "name=highway").unwrap();
        assert_eq!(doc["traffic"]["vehicles"][0]["x_offset_m"], json!(15));
        assert_eq!(doc["name"], json!("highway"));
        assert!(apply(&mut doc, "traffic.vehicles.3.x=1").is_err());
        apply(&mut doc, "traffic.vehicles.1.x_offset_m=-20").unwrap();
        assert_eq!(doc["traffic"]["vehicles"][1]["x_offset_m"], json!(-20));
        apply(&mut doc, "lanes.0=1.5").unwrap();
        assert_eq!(doc["lanes"], json!([1.5]));
        assert!(apply(&mut doc, "nokey").is_err());
    }
}
