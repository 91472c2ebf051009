//! Best-first search over motion primitives with deviation-aware costs.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use crate::geometry::{segment_intersects_polygon, wrap_to_2pi, Polygon, Polyline, Pose};
use crate::reeds_shepp::{rs_shortest, RsPath};
use crate::vehicle::{primitive_set, Direction, MotionPrimitive, VehicleParams};

use super::collision::CollisionModel;
use super::trajectory::{Trajectory, TrajectoryBuilder};
use super::{e_cost_increment, e_pred_of, progress_along_reference, PlanError, PlannerConfig};

/// When a popped node attempts the analytic connection to the goal.
pub enum Trigger<'a> {
    /// Remaining arc length along the reference below the threshold.
    ProgressGap(f64),
    /// Straight segment to the goal clear of every listed obstacle.
    LineOfSight(&'a [Polygon]),
}

#[derive(Debug, Clone)]
pub(crate) enum Via {
    Start,
    Primitive(MotionPrimitive),
    Analytic(RsPath),
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub pose: Pose,
    pub direction: Direction,
    pub f: f64,
    pub e_cost: f64,
    pub e_pred: f64,
    pub path_len: f64,
    /// Length of the Reeds-Shepp connection to the goal used for `e_pred`.
    pub rs_len: f64,
    /// Arc length of the node's projection onto the reference, followed
    /// from the parent's projection.
    pub progress: f64,
    pub parent: Option<usize>,
    pub(crate) via: Via,
    pub is_target: bool,
}

/// Search result together with bookkeeping used by tests and reports.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Trajectory,
    pub expansions: usize,
    /// Evaluation value of the goal node that was returned.
    pub f: f64,
    /// Accumulated deviation cost along the returned trajectory.
    pub e_cost: f64,
}

#[derive(PartialEq)]
struct QueueEntry {
    f: f64,
    seq: usize,
    node: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on insertion order
        other.f.total_cmp(&self.f).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type CellKey = (i64, i64, Direction, i64);

pub(crate) struct Search<'a, C: CollisionModel> {
    pub reference: &'a Polyline,
    pub start: Pose,
    pub goal: Pose,
    pub params: &'a VehicleParams,
    pub config: &'a PlannerConfig,
    pub collision: &'a C,
    pub trigger: Trigger<'a>,
}

impl<C: CollisionModel> Search<'_, C> {
    fn radius(&self) -> f64 {
        self.params.turning_radius()
    }

    fn cell_key(&self, pose: &Pose, direction: Direction) -> CellKey {
        let g = self.config.grid_cell;
        let bin = match self.config.heading_bins {
            Some(n) if n > 0 => {
                ((wrap_to_2pi(pose.heading) / std::f64::consts::TAU) * n as f64).floor() as i64 % n as i64
            }
            _ => 0,
        };
        (
            (pose.position.x / g).floor() as i64,
            (pose.position.y / g).floor() as i64,
            direction,
            bin,
        )
    }

    fn evaluate(&self, node: &mut SearchNode) {
        let rs = rs_shortest(&node.pose, &self.goal, self.radius());
        node.e_pred = e_pred_of(&rs, &node.pose, self.reference, self.config.pred_spacing);
        node.rs_len = rs.length();
        node.f = self.config.alpha * node.e_cost
            + self.config.beta * node.e_pred
            + self.config.gamma * (node.path_len + node.rs_len);
    }

    /// Projection of `z` searched within a window around the parent's, so a
    /// node on one leg of a U-turn does not jump to the opposite leg.
    fn follow_progress(&self, z: crate::geometry::Point2, parent_progress: f64, step: f64) -> f64 {
        let w = 2.0 * step.max(self.config.arc_length);
        self.reference
            .project_within(z, parent_progress - w, parent_progress + w)
            .arc_length
    }

    fn in_vicinity(&self, node: &SearchNode) -> bool {
        match self.trigger {
            Trigger::ProgressGap(d0) => self.reference.length() - node.progress < d0,
            Trigger::LineOfSight(obstacles) => !obstacles
                .iter()
                .any(|o| segment_intersects_polygon(node.pose.position, self.goal.position, o)),
        }
    }

    pub fn children(&self, parent: &SearchNode, parent_index: usize, prims: &[MotionPrimitive]) -> Vec<SearchNode> {
        let mut out = Vec::with_capacity(prims.len());
        for mp in prims {
            if !self.config.allow_reverse && mp.direction == Direction::Reverse {
                continue;
            }
            let signed = mp.direction.sign() * mp.arc_length;
            if !self.collision.motion_free(&parent.pose, mp.curvature, signed) {
                continue;
            }
            let pose = crate::vehicle::apply_primitive(&parent.pose, mp);
            let step = pose.position.distance(parent.pose.position);
            let mut child = SearchNode {
                pose,
                direction: mp.direction,
                f: 0.0,
                e_cost: e_cost_increment(parent.e_cost, parent.pose.position, pose.position, self.reference),
                e_pred: 0.0,
                path_len: parent.path_len + step,
                rs_len: 0.0,
                progress: self.follow_progress(pose.position, parent.progress, step),
                parent: Some(parent_index),
                via: Via::Primitive(*mp),
                is_target: false,
            };
            self.evaluate(&mut child);
            out.push(child);
        }
        out
    }

    /// Splits an analytic connection into trajectory pieces: every segment
    /// boundary plus cuts every `arc_length` metres.
    fn analytic_pieces(&self, rs: &RsPath) -> Vec<(f64, f64)> {
        let step = self.config.arc_length;
        let mut pieces = Vec::new();
        for seg in &rs.segments {
            let k = rs.curvature(seg);
            let sign = seg.direction.sign();
            let n = ((seg.length / step) - 0.25).ceil().max(1.0) as usize;
            for _ in 0..n {
                pieces.push((k, sign * seg.length / n as f64));
            }
        }
        pieces
    }

    fn make_target(&self, p: &SearchNode, p_index: usize) -> SearchNode {
        let rs = rs_shortest(&p.pose, &self.goal, self.radius());
        let mut e_cost = p.e_cost;
        let mut path_len = p.path_len;
        let mut pose = p.pose;
        for (k, s) in self.analytic_pieces(&rs) {
            let next = crate::vehicle::advance(&pose, k, s);
            e_cost = e_cost_increment(e_cost, pose.position, next.position, self.reference);
            path_len += next.position.distance(pose.position);
            pose = next;
        }
        SearchNode {
            pose: self.goal,
            direction: rs.segments.last().map_or(p.direction, |s| s.direction),
            f: p.f,
            e_cost,
            e_pred: 0.0,
            path_len,
            rs_len: 0.0,
            progress: self.reference.length(),
            parent: Some(p_index),
            via: Via::Analytic(rs),
            is_target: true,
        }
    }

    pub fn run(&self) -> Result<PlanOutcome, PlanError> {
        self.run_audited(|_, _| {})
    }

    /// `audit` sees the node arena and liveness flags after every expansion.
    pub fn run_audited(&self, mut audit: impl FnMut(&[SearchNode], &[bool])) -> Result<PlanOutcome, PlanError> {
        let prims = primitive_set(self.params, self.config.n_curv, self.config.arc_length)
            .map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
        let mut nodes: Vec<SearchNode> = Vec::new();
        let mut alive: Vec<bool> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut slots: HashMap<CellKey, usize> = HashMap::new();
        let mut seq = 0usize;
        let mut target: Option<usize> = None;

        let mut start = SearchNode {
            pose: self.start,
            direction: Direction::Forward,
            f: 0.0,
            e_cost: 0.0,
            e_pred: 0.0,
            path_len: 0.0,
            rs_len: 0.0,
            progress: progress_along_reference(self.start.position, self.reference),
            parent: None,
            via: Via::Start,
            is_target: false,
        };
        self.evaluate(&mut start);
        slots.insert(self.cell_key(&start.pose, start.direction), 0);
        heap.push(QueueEntry {
            f: start.f,
            seq,
            node: 0,
        });
        nodes.push(start);
        alive.push(true);

        let mut expansions = 0usize;
        while let Some(entry) = heap.pop() {
            let pi = entry.node;
            if !alive[pi] {
                continue;
            }
            alive[pi] = false;
            if nodes[pi].is_target {
                return Ok(self.backtrack(&nodes, pi, expansions));
            }
            expansions += 1;
            if expansions > self.config.max_expansions {
                return Err(PlanError::NotFound { expansions });
            }

            let p = nodes[pi].clone();
            if self.in_vicinity(&p) {
                let rs = rs_shortest(&p.pose, &self.goal, self.radius());
                if self.collision.rs_free(&rs, &p.pose) {
                    if self.config.pruning {
                        if let Some(t) = target {
                            if p.f >= nodes[t].f {
                                // Pruning 1: a cheaper goal node already exists
                                continue;
                            }
                        }
                    }
                    let better = target.is_none_or(|t| p.f < nodes[t].f);
                    if better {
                        if let Some(t) = target {
                            alive[t] = false;
                        }
                        let t_node = self.make_target(&p, pi);
                        seq += 1;
                        heap.push(QueueEntry {
                            f: t_node.f,
                            seq,
                            node: nodes.len(),
                        });
                        target = Some(nodes.len());
                        nodes.push(t_node);
                        alive.push(true);
                    }
                }
            } else if target.is_some() && self.config.pruning {
                // Pruning 2: a goal node exists and this branch is far from it
                continue;
            }

            for child in self.children(&p, pi, &prims) {
                let key = self.cell_key(&child.pose, child.direction);
                let idx = nodes.len();
                match slots.entry(key) {
                    Entry::Occupied(mut e) => {
                        let old = *e.get();
                        if child.f >= nodes[old].f {
                            continue;
                        }
                        alive[old] = false;
                        e.insert(idx);
                    }
                    Entry::Vacant(e) => {
                        e.insert(idx);
                    }
                }
                seq += 1;
                heap.push(QueueEntry {
                    f: child.f,
                    seq,
                    node: idx,
                });
                nodes.push(child);
                alive.push(true);
            }
            audit(&nodes, &alive);
        }
        Err(PlanError::NotFound { expansions })
    }

    fn backtrack(&self, nodes: &[SearchNode], goal_index: usize, expansions: usize) -> PlanOutcome {
        let mut chain = Vec::new();
        let mut cur = Some(goal_index);
        while let Some(i) = cur {
            chain.push(i);
            cur = nodes[i].parent;
        }
        chain.reverse();
        let mut builder = TrajectoryBuilder::new(self.start);
        for &i in &chain[1..] {
            match &nodes[i].via {
                Via::Primitive(mp) => {
                    builder.push(mp.curvature, mp.direction.sign() * mp.arc_length);
                }
                Via::Analytic(rs) => {
                    for (k, s) in self.analytic_pieces(rs) {
                        builder.push(k, s);
                    }
                }
                Via::Start => {}
            }
        }
        let end = builder.last_pose();
        debug_assert!(end.approx_eq(&self.goal, 1e-6), "analytic end {end:?}");
        if end.approx_eq(&self.goal, 1e-6) {
            builder.snap_last(self.goal);
        }
        let goal = &nodes[goal_index];
        PlanOutcome {
            trajectory: builder.finish(self.config.v_ref, self.config.dt),
            expansions,
            f: goal.f,
            e_cost: goal.e_cost,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::geometry::Point2;
    use crate::planner::FootprintModel;

    fn corner_case() -> (Polyline, Polygon) {
        let r = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(25.0, 0.0),
            Point2::new(25.0, 25.0),
        ])
        .unwrap();
        (r, Polygon::rectangle(-15.0, -15.0, 40.0, 40.0).unwrap())
    }

    #[test]
    fn open_set_never_shares_a_slot() {
        let (r, field) = corner_case();
        let params = VehicleParams::default();
        let config = PlannerConfig::default();
        let model = FootprintModel::new(&field, &[], &params, config.check_spacing);
        let search = Search {
            reference: &r,
            start: super::super::start_pose(&r),
            goal: super::super::goal_pose(&r),
            params: &params,
            config: &config,
            collision: &model,
            trigger: Trigger::ProgressGap(config.d0),
        };
        let mut audits = 0;
        search
            .run_audited(|nodes, alive| {
                audits += 1;
                let mut seen = HashSet::new();
                for (n, _) in nodes.iter().zip(alive).filter(|(n, a)| **a && !n.is_target) {
                    assert!(seen.insert(search.cell_key(&n.pose, n.direction)));
                }
                assert!(nodes.iter().zip(alive).filter(|(n, a)| **a && n.is_target).count() <= 1);
            })
            .unwrap();
        assert!(audits > 0);
    }

    #[test]
    fn stored_f_recomputes_for_expanded_nodes() {
        let (r, field) = corner_case();
        let params = VehicleParams::default();
        let config = PlannerConfig::default();
        let model = FootprintModel::new(&field, &[], &params, config.check_spacing);
        let search = Search {
            reference: &r,
            start: super::super::start_pose(&r),
            goal: super::super::goal_pose(&r),
            params: &params,
            config: &config,
            collision: &model,
            trigger: Trigger::ProgressGap(config.d0),
        };
        search
            .run_audited(|nodes, _| {
                for n in nodes.iter().filter(|n| !n.is_target) {
                    let f = crate::planner::total_f(n, &config);
                    assert!((f - n.f).abs() <= 1e-9);
                }
            })
            .unwrap();
    }
}
