use crate::geometry::{footprint_inside_field, polygon_polygon_collides, Point2, Polygon, Pose};
use crate::reeds_shepp::{rs_sample, RsPath};
use crate::vehicle::{advance, footprint, VehicleParams};

/// Validity test used by the search for poses and swept motions.
pub trait CollisionModel {
    fn pose_free(&self, pose: &Pose) -> bool;

    /// Spacing between checked poses along a motion.
    fn check_spacing(&self) -> f64;

    /// Checks the swept motion at `check_spacing`, end pose included.
    fn motion_free(&self, from: &Pose, curvature: f64, signed_length: f64) -> bool {
        let len = signed_length.abs();
        let n = (len / self.check_spacing()).ceil().max(1.0) as usize;
        (1..=n).all(|i| {
            let s = signed_length * i as f64 / n as f64;
            self.pose_free(&advance(from, curvature, s))
        })
    }

    fn rs_free(&self, path: &RsPath, start: &Pose) -> bool {
        rs_sample(path, start, self.check_spacing())
            .iter()
            .all(|p| self.pose_free(p))
    }
}

/// Full vehicle body against the field boundary and obstacles.
pub struct FootprintModel<'a> {
    pub field: &'a Polygon,
    pub obstacles: &'a [Polygon],
    pub params: &'a VehicleParams,
    pub spacing: f64,
    obstacle_circles: Vec<(Point2, f64)>,
    reach: f64,
}

impl<'a> FootprintModel<'a> {
    pub fn new(field: &'a Polygon, obstacles: &'a [Polygon], params: &'a VehicleParams, spacing: f64) -> Self {
        FootprintModel {
            field,
            obstacles,
            params,
            spacing,
            obstacle_circles: obstacles.iter().map(|o| o.bounding_circle()).collect(),
            reach: params.bounding_radius(),
        }
    }
}

impl CollisionModel for FootprintModel<'_> {
    fn pose_free(&self, pose: &Pose) -> bool {
        let fp = footprint(pose, self.params);
        if !footprint_inside_field(&fp, self.field) {
            return false;
        }
        self.obstacles
            .iter()
            .zip(&self.obstacle_circles)
            .all(|(o, (c, r))| c.distance(pose.position) > r + self.reach || !polygon_polygon_collides(&fp, o))
    }

    fn check_spacing(&self) -> f64 {
        self.spacing
    }
}
