//! Scenario files: field outline, reference paths, vehicle and obstacles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{
    footprint_inside_field, polygon_polygon_collides, segments_properly_intersect, Point2, Polygon, Polyline,
};
use crate::planner::{goal_pose, start_pose};
use crate::vehicle::{footprint, VehicleParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub field: Polygon,
    pub reference_paths: Vec<Polyline>,
    pub vehicle: VehicleParams,
    pub obstacles: Vec<Polygon>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    #[serde(rename = "L")]
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    pub max_steer_deg: f64,
    pub max_accel: f64,
}

impl Default for VehicleFile {
    fn default() -> Self {
        VehicleFile::from(&VehicleParams::default())
    }
}

impl From<&VehicleParams> for VehicleFile {
    fn from(p: &VehicleParams) -> Self {
        VehicleFile {
            wheelbase: p.wheelbase,
            length: p.body_length,
            width: p.body_width,
            max_steer_deg: p.max_steer.to_degrees(),
            max_accel: p.max_accel,
        }
    }
}

/// On-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub field: Vec<[f64; 2]>,
    pub paths: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub vehicle: VehicleFile,
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub seed: u64,
}

fn points(raw: &[[f64; 2]]) -> Vec<Point2> {
    raw.iter().map(|p| Point2::new(p[0], p[1])).collect()
}

fn raw(pts: &[Point2]) -> Vec<[f64; 2]> {
    pts.iter().map(|p| [p.x, p.y]).collect()
}

impl Scenario {
    pub fn from_file(file: &ScenarioFile) -> Result<Scenario, HarnessError> {
        let schema = |m: String| HarnessError::Schema(m);
        let field = Polygon::new(points(&file.field)).map_err(|e| schema(format!("field: {e}")))?;
        let reference_paths = file
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| Polyline::new(points(p)).map_err(|e| schema(format!("paths[{i}]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let obstacles = file
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, p)| Polygon::new(points(p)).map_err(|e| schema(format!("obstacles[{i}]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let v = &file.vehicle;
        let vehicle = VehicleParams::new(
            v.wheelbase,
            v.length,
            v.width,
            v.max_steer_deg.to_radians(),
            v.max_accel,
        )
        .map_err(|e| schema(format!("vehicle: {e}")))?;
        let s = Scenario {
            field,
            reference_paths,
            vehicle,
            obstacles,
            rng_seed: file.seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            field: raw(self.field.vertices()),
            paths: self.reference_paths.iter().map(|p| raw(p.points())).collect(),
            vehicle: VehicleFile::from(&self.vehicle),
            obstacles: self.obstacles.iter().map(|o| raw(o.vertices())).collect(),
            seed: self.rng_seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Scenario, HarnessError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        Scenario::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    /// Paths inside the field with clear start and end footprints.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.reference_paths.is_empty() {
            return Err(HarnessError::Schema("scenario has no reference paths".into()));
        }
        for (i, r) in self.reference_paths.iter().enumerate() {
            let bad = |m: &str| Err(HarnessError::Schema(format!("paths[{i}]: {m}")));
            if r.points().iter().any(|p| !self.field.contains(*p)) {
                return bad("vertex outside the field");
            }
            for w in r.points().windows(2) {
                if self
                    .field
                    .edges()
                    .any(|(a, b)| segments_properly_intersect(w[0], w[1], a, b))
                {
                    return bad("segment leaves the field");
                }
            }
            for pose in [start_pose(r), goal_pose(r)] {
                let fp = footprint(&pose, &self.vehicle);
                if !footprint_inside_field(&fp, &self.field)
                    || self.obstacles.iter().any(|o| polygon_polygon_collides(&fp, o))
                {
                    return bad("start or end footprint is not clear");
                }
            }
        }
        Ok(())
    }
}
