use serde_json::{Map, Value};

/// Applies `key.path=value` to `doc`.
///
/// The value is parsed as JSON when it parses and kept as a string otherwise.
/// Missing objects along the path are created; numeric segments index arrays,
/// and an index equal to the length appends.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form key=value"))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("override `{spec}` has an empty path segment"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    let (last, parents) = segments
        .split_last()
        .expect("path has at least one segment");
    let mut cur = doc;
    for (i, seg) in parents.iter().enumerate() {
        let next_is_index = segments[i + 1].parse::<usize>().is_ok();
        cur = child(cur, seg, key, || {
            if next_is_index {
                Value::Array(vec![])
            } else {
                Value::Object(Map::new())
            }
        })?;
    }
    *child(cur, last, key, || Value::Null)? = value;
    Ok(())
}

fn child<'a>(
    node: &'a mut Value,
    seg: &str,
    key: &str,
    fresh: impl FnOnce() -> Value,
) -> Result<&'a mut Value, String> {
    if node.is_null() {
        *node = Value::Object(Map::new());
    }
    match node {
        Value::Object(map) => Ok(map.entry(seg).or_insert_with(fresh)),
        Value::Array(items) => {
            let i: usize = seg
                .parse()
                .map_err(|_| format!("override `{key}`: `{seg}` does not index an array"))?;
            if i == items.len() {
                items.push(fresh());
            }
            let len = items.len();
            items
                .get_mut(i)
                .ok_or_else(|| format!("override `{key}`: index {i} out of range for length {len}"))
        }
        _ => Err(format!("override `{key}`: `{seg}` descends into a scalar")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sets_nested_numbers_and_strings() {
        let mut v = json!({"levels": {"min": 4, "max": 8}, "norm": "p_variation"});
        apply_override(&mut v, "levels.max=10").unwrap();
        apply_override(&mut v, "norm=sup").unwrap();
        apply_override(&mut v, "driver.kind=brownian").unwrap();
        assert_eq!(
            v,
            json!({"levels": {"min": 4, "max": 10}, "norm": "sup", "driver": {"kind": "brownian"}})
        );
    }

    #[test]
    fn indexes_and_appends_arrays() {
        let mut v = json!({"seeds": [1, 2], "y0": [0.5]});
        apply_override(&mut v, "seeds.1=7").unwrap();
        apply_override(&mut v, "seeds.2=9").unwrap();
        apply_override(&mut v, "y0=[1.0,2.0]").unwrap();
        assert_eq!(v, json!({"seeds": [1, 7, 9], "y0": [1.0, 2.0]}));
    }

    #[test]
    fn rejects_malformed_overrides() {
        let mut v = json!({"horizon": 1.0, "seeds": [1]});
        assert!(apply_override(&mut v, "horizon").is_err());
        assert!(apply_override(&mut v, "a..b=1").is_err());
        assert!(apply_override(&mut v, "horizon.x=1").is_err());
        assert!(apply_override(&mut v, "seeds.5=1").is_err());
        assert!(apply_override(&mut v, "seeds.x=1").is_err());
        assert_eq!(v, json!({"horizon": 1.0, "seeds": [1]}));
    }
}
