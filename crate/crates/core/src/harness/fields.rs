//! Synthetic fields with parallel furrows and headland U-turns.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::streams::stream;
use super::Scenario;
use crate::geometry::{Point2, Polygon, Polyline};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldStyle {
    Rectangular,
    Convex,
    Notched,
}

impl FieldStyle {
    pub const ALL: [FieldStyle; 3] = [FieldStyle::Rectangular, FieldStyle::Convex, FieldStyle::Notched];
}

impl std::str::FromStr for FieldStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rectangular" => Ok(FieldStyle::Rectangular),
            "convex" => Ok(FieldStyle::Convex),
            "notched" => Ok(FieldStyle::Notched),
            other => Err(format!("unknown field style {other:?}")),
        }
    }
}

/// Clearance between the turn column and the field edge.
const HEADLAND: f64 = 12.0;
/// Clearance between the outer furrows and the side edges.
const SIDE: f64 = 8.0;

/// One field and one reference per pair of adjacent furrows: a pass along
/// the lower furrow, a headland turn and a pass back along the next one.
/// Turns alternate between the two ends.
pub fn generate_field(seed: u64, style: FieldStyle) -> Scenario {
    let mut rng = stream(seed, "field");
    let rows = rng.random_range(5..=8usize);
    let spacing = rng.random_range(7.0..12.0);
    let work = rng.random_range(55.0..80.0);
    let ys: Vec<f64> = (0..rows).map(|j| SIDE + j as f64 * spacing).collect();
    let height = 2.0 * SIDE + (rows - 1) as f64 * spacing;

    // right-hand turn column of each furrow, and the right boundary
    let mut ends: Vec<f64> = vec![work; rows];
    let outline: Vec<Point2>;
    match style {
        FieldStyle::Rectangular => {
            outline = vec![
                Point2::new(-HEADLAND, 0.0),
                Point2::new(work + HEADLAND, 0.0),
                Point2::new(work + HEADLAND, height),
                Point2::new(-HEADLAND, height),
            ];
        }
        FieldStyle::Convex => {
            // slanted right side and a chamfered lower-left corner
            let slope = rng.random_range(-25f64..25.0).to_radians().tan();
            let mid = height / 2.0;
            for (e, y) in ends.iter_mut().zip(&ys) {
                *e = work + slope * (y - mid);
            }
            let right = |y: f64| work + HEADLAND + slope * (y - mid);
            let cham = rng.random_range(2.0..SIDE - 1.0);
            outline = vec![
                Point2::new(-HEADLAND + cham, 0.0),
                Point2::new(right(0.0), 0.0),
                Point2::new(right(height), height),
                Point2::new(-HEADLAND, height),
                Point2::new(-HEADLAND, cham),
            ];
        }
        FieldStyle::Notched => {
            // a block cut from the upper right; furrows above it are shorter
            let notch_w = rng.random_range(10.0..20.0);
            let first_short = rng.random_range(2..rows);
            let y_cut = (ys[first_short - 1] + ys[first_short]) / 2.0;
            for e in ends.iter_mut().skip(first_short) {
                *e = work - notch_w;
            }
            outline = vec![
                Point2::new(-HEADLAND, 0.0),
                Point2::new(work + HEADLAND, 0.0),
                Point2::new(work + HEADLAND, y_cut),
                Point2::new(work - notch_w + HEADLAND, y_cut),
                Point2::new(work - notch_w + HEADLAND, height),
                Point2::new(-HEADLAND, height),
            ];
        }
    }

    let mut paths = Vec::with_capacity(rows - 1);
    for i in 0..rows - 1 {
        let out_len = rng.random_range(20.0..35.0);
        let back_len = rng.random_range(20.0..35.0);
        let (y0, y1) = (ys[i], ys[i + 1]);
        let pts = if i % 2 == 0 {
            let e = ends[i].min(ends[i + 1]);
            vec![
                Point2::new(e - out_len, y0),
                Point2::new(e, y0),
                Point2::new(e, y1),
                Point2::new(e - back_len, y1),
            ]
        } else {
            vec![
                Point2::new(out_len, y0),
                Point2::new(0.0, y0),
                Point2::new(0.0, y1),
                Point2::new(back_len, y1),
            ]
        };
        paths.push(pts);
    }

    // everything but the rectangle is turned to a random heading
    let turn = match style {
        FieldStyle::Rectangular => 0.0,
        _ => rng.random_range(0.0..std::f64::consts::TAU),
    };
    let place = |p: Point2| p.rotated(turn);
    let field = Polygon::new(outline.into_iter().map(place).collect()).expect("generated field is simple");
    let reference_paths = paths
        .into_iter()
        .map(|p| Polyline::new(p.into_iter().map(place).collect()).expect("generated path is valid"))
        .collect();
    Scenario {
        field,
        reference_paths,
        vehicle: VehicleParams::default(),
        obstacles: Vec::new(),
        rng_seed: seed,
    }
}

/// The first `count` (scenario, path index) pairs over consecutive seeds.
pub fn generated_paths(style: FieldStyle, count: usize, first_seed: u64) -> Vec<(Scenario, usize)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let s = generate_field(seed, style);
        for i in 0..s.reference_paths.len() {
            if out.len() < count {
                out.push((s.clone(), i));
            }
        }
        seed += 1;
    }
    out
}

/// A broad rectangular field with one long straight furrow pass through the
/// middle, leaving room on both sides for detours.
pub fn wide_field(seed: u64) -> Scenario {
    let mut rng = stream(seed, "wide-field");
    let length = rng.random_range(70.0..90.0);
    let width = rng.random_range(36.0..44.0);
    let mid = width / 2.0;
    let field = Polygon::rectangle(-HEADLAND, 0.0, length + HEADLAND, width).expect("rectangle");
    let path = Polyline::new(vec![Point2::new(0.0, mid), Point2::new(length, mid)]).expect("straight pass");
    Scenario {
        field,
        reference_paths: vec![path],
        vehicle: VehicleParams::default(),
        obstacles: Vec::new(),
        rng_seed: seed,
    }
}
