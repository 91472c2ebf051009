//! `--set key=value` edits applied to the run configuration.

use serde_json::Value;

use furrow_core::SimConfig;

/// Applies each `section.field=value` in order. Values are read as JSON and
/// fall back to a bare string, so `planner.heading_bins=null` and
/// `mpc.refine=false` both work.
pub fn apply(base: &SimConfig, sets: &[String]) -> Result<SimConfig, String> {
    let mut root = serde_json::to_value(base).map_err(|e| e.to_string())?;
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| format!("override {set:?} is not key=value"))?;
        let slot = key
            .split('.')
            .try_fold(&mut root, |node, part| node.as_object_mut()?.get_mut(part))
            .ok_or_else(|| format!("unknown configuration key {key:?}"))?;
        if slot.is_object() {
            return Err(format!("{key:?} names a section, not a field"));
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    }
    let config: SimConfig = serde_json::from_value(root).map_err(|e| format!("bad override value: {e}"))?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn dotted_keys_reach_nested_fields() {
        let c = apply(
            &SimConfig::default(),
            &sets(&[
                "planner.beta=0.5",
                "mpc.horizon=12",
                "planner.heading_bins=null",
                "sensor_range=20",
            ]),
        )
        .unwrap();
        assert_eq!(c.planner.beta, 0.5);
        assert_eq!(c.mpc.horizon, 12);
        assert_eq!(c.planner.heading_bins, None);
        assert_eq!(c.sensor_range, 20.0);
    }

    #[test]
    fn rejects_unknown_and_mistyped() {
        let base = SimConfig::default();
        assert!(apply(&base, &sets(&["planner.betta=1"]))
            .unwrap_err()
            .contains("unknown"));
        assert!(apply(&base, &sets(&["planner=1"])).is_err());
        assert!(apply(&base, &sets(&["mpc.horizon=many"])).is_err());
        assert!(apply(&base, &sets(&["mpc.horizon"])).is_err());
        assert!(apply(&base, &sets(&["planner.dt=0.2"])).is_err());
    }
}
