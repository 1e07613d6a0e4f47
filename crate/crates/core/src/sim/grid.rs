//! Known-map global planning: a 0.1 m occupancy grid rasterized from the
//! world plus deterministic integer A*, used to pull a waypoint toward the
//! goal for the local planner.

use super::world::World;
use crate::geometry::{Pose2, Vec2};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Grid resolution in meters.
const RESOLUTION: f64 = 0.1;
/// Cost of a cardinal move; diagonals cost 14 (integer approximation of
/// sqrt(2) * 10, keeping A* arithmetic exact and platform-independent).
const CARDINAL: u32 = 10;
const DIAGONAL: u32 = 14;

/// Boolean occupancy raster of a world for one robot radius. Cells whose
/// center comes within radius + half a cell of an obstacle or wall are
/// blocked, so any grid path keeps true clearance for the robot disc.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Vec2,
    nx: usize,
    ny: usize,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(w: &World, robot_radius: f64) -> Self {
        let origin = w.bounds.min;
        let nx = (w.bounds.width() / RESOLUTION).ceil() as usize;
        let ny = (w.bounds.height() / RESOLUTION).ceil() as usize;
        let clearance = robot_radius + 0.5 * RESOLUTION;
        let mut blocked = vec![false; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let c = origin
                    + Vec2::new((ix as f64 + 0.5) * RESOLUTION, (iy as f64 + 0.5) * RESOLUTION);
                let hit = w.bounds.wall_clearance(c) < clearance
                    || w.obstacles.iter().any(|o| o.distance_to_point(c) < clearance);
                blocked[iy * nx + ix] = hit;
            }
        }
        Self { origin, nx, ny, blocked }
    }

    pub fn resolution(&self) -> f64 {
        RESOLUTION
    }

    fn cell_of(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / RESOLUTION).floor() as i64,
            ((p.y - self.origin.y) / RESOLUTION).floor() as i64,
        )
    }

    fn center_of(&self, ix: i64, iy: i64) -> Vec2 {
        self.origin + Vec2::new((ix as f64 + 0.5) * RESOLUTION, (iy as f64 + 0.5) * RESOLUTION)
    }

    fn in_grid(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.nx && (iy as usize) < self.ny
    }

    fn is_free(&self, ix: i64, iy: i64) -> bool {
        self.in_grid(ix, iy) && !self.blocked[iy as usize * self.nx + ix as usize]
    }

    /// The free cell nearest to `p` in expanding square rings (row-major
    /// within a ring, so the choice is deterministic).
    fn nearest_free(&self, p: Vec2) -> Option<(i64, i64)> {
        let (cx, cy) = self.cell_of(p);
        let r_max = self.nx.max(self.ny) as i64;
        for r in 0..=r_max {
            let mut best: Option<((i64, i64), f64)> = None;
            for iy in cy - r..=cy + r {
                for ix in cx - r..=cx + r {
                    if (ix - cx).abs().max((iy - cy).abs()) != r || !self.is_free(ix, iy) {
                        continue;
                    }
                    let d = (self.center_of(ix, iy) - p).norm();
                    if best.map_or(true, |(_, bd)| d < bd - 1e-12) {
                        best = Some(((ix, iy), d));
                    }
                }
            }
            if let Some((cell, _)) = best {
                return Some(cell);
            }
        }
        None
    }

    /// Octile-heuristic A* between two free cells; integer costs keep the
    /// expansion order exactly reproducible. Diagonal moves require both
    /// adjacent cardinal cells free (no corner cutting). Returns the cell
    /// path including both endpoints, or None when disconnected.
    fn astar(&self, start: (i64, i64), goal: (i64, i64)) -> Option<Vec<(i64, i64)>> {
        let idx = |(ix, iy): (i64, i64)| iy as usize * self.nx + ix as usize;
        let h = |(ix, iy): (i64, i64)| -> u32 {
            let dx = (ix - goal.0).unsigned_abs() as u32;
            let dy = (iy - goal.1).unsigned_abs() as u32;
            CARDINAL * dx.abs_diff(dy) + DIAGONAL * dx.min(dy)
        };
        let mut g = vec![u32::MAX; self.nx * self.ny];
        let mut parent = vec![usize::MAX; self.nx * self.ny];
        let mut heap: BinaryHeap<Reverse<(u32, u64, (i64, i64))>> = BinaryHeap::new();
        let mut pushes: u64 = 0;
        g[idx(start)] = 0;
        heap.push(Reverse((h(start), pushes, start)));
        const STEPS: [(i64, i64, u32); 8] = [
            (1, 0, CARDINAL),
            (-1, 0, CARDINAL),
            (0, 1, CARDINAL),
            (0, -1, CARDINAL),
            (1, 1, DIAGONAL),
            (1, -1, DIAGONAL),
            (-1, 1, DIAGONAL),
            (-1, -1, DIAGONAL),
        ];
        while let Some(Reverse((f, _, cell))) = heap.pop() {
            let ci = idx(cell);
            if f > g[ci].saturating_add(h(cell)) {
                continue; // stale entry
            }
            if cell == goal {
                let mut path = vec![cell];
                let mut at = ci;
                while parent[at] != usize::MAX {
                    at = parent[at];
                    path.push(((at % self.nx) as i64, (at / self.nx) as i64));
                }
                path.reverse();
                return Some(path);
            }
            for (dx, dy, cost) in STEPS {
                let nb = (cell.0 + dx, cell.1 + dy);
                if !self.is_free(nb.0, nb.1) {
                    continue;
                }
                if dx != 0 && dy != 0 && !(self.is_free(cell.0 + dx, cell.1) && self.is_free(cell.0, cell.1 + dy)) {
                    continue;
                }
                let ng = g[ci] + cost;
                let ni = idx(nb);
                if ng < g[ni] {
                    g[ni] = ng;
                    parent[ni] = ci;
                    pushes += 1;
                    heap.push(Reverse((ng + h(nb), pushes, nb)));
                }
            }
        }
        None
    }
}

/// Waypoint toward the goal: the farthest point along the grid path that
/// is still within `horizon` of the robot. When that point is the path's
/// end the exact goal position is returned instead of its cell center.
/// `None` means the known map admits no path at all.
pub fn global_waypoint(
    grid: &OccupancyGrid,
    w: &World,
    pose: &Pose2,
    horizon: f64,
) -> Option<Vec2> {
    let position = pose.position();
    let start = grid.nearest_free(position)?;
    let goal = grid.nearest_free(w.goal)?;
    let path = grid.astar(start, goal)?;
    let mut pick = 0usize;
    for (i, &(ix, iy)) in path.iter().enumerate() {
        if (grid.center_of(ix, iy) - position).norm() <= horizon {
            pick = i;
        }
    }
    if pick + 1 == path.len() && (w.goal - position).norm() <= horizon {
        return Some(w.goal);
    }
    let (ix, iy) = path[pick];
    Some(grid.center_of(ix, iy))
}

#[cfg(test)]
mod tests {
    use super::super::world::{Bounds, Obstacle, World};
    use super::*;
    use crate::geometry::ConvexPolygon;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn open_world(goal: Vec2) -> World {
        World {
            bounds: Bounds { min: v(-8.0, -8.0), max: v(8.0, 8.0) },
            obstacles: Vec::new(),
            start: Pose2::new(0.0, 0.0, 0.0),
            goal,
        }
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Obstacle {
        Obstacle::Polygon(
            ConvexPolygon::new(vec![v(x0, y0), v(x1, y0), v(x1, y1), v(x0, y1)]).unwrap(),
        )
    }

    #[test]
    fn open_world_waypoint_sits_at_the_horizon_toward_the_goal() {
        let w = open_world(v(6.0, 0.0));
        let grid = OccupancyGrid::new(&w, 0.2);
        let wp = global_waypoint(&grid, &w, &Pose2::new(0.0, 0.0, 0.0), 3.0).unwrap();
        assert!((wp - v(3.0, 0.0)).norm() < 0.15, "waypoint {wp:?}");
        assert!(wp.norm() <= 3.0 + 1e-9);
    }

    #[test]
    fn goal_inside_the_horizon_is_returned_exactly() {
        let w = open_world(v(1.7, -0.9));
        let grid = OccupancyGrid::new(&w, 0.2);
        let wp = global_waypoint(&grid, &w, &Pose2::new(0.0, 0.0, 0.0), 3.0).unwrap();
        assert_eq!(wp, v(1.7, -0.9));
    }

    #[test]
    fn wall_with_a_side_opening_routes_the_waypoint_around() {
        let mut w = open_world(v(3.0, 0.0));
        // Wall ahead spanning all of y < 1; passage only above it.
        w.obstacles.push(rect(1.0, -8.0, 1.4, 1.0));
        let grid = OccupancyGrid::new(&w, 0.2);
        let wp = global_waypoint(&grid, &w, &Pose2::new(0.0, 0.0, 0.0), 2.5).unwrap();
        assert!(wp.y > 0.5, "waypoint {wp:?} should detour through the opening");
        // And the symmetric world detours the other way.
        let mut w2 = open_world(v(3.0, 0.0));
        w2.obstacles.push(rect(1.0, -1.0, 1.4, 8.0));
        let grid2 = OccupancyGrid::new(&w2, 0.2);
        let wp2 = global_waypoint(&grid2, &w2, &Pose2::new(0.0, 0.0, 0.0), 2.5).unwrap();
        assert!(wp2.y < -0.5, "waypoint {wp2:?}");
    }

    #[test]
    fn enclosed_goal_yields_no_waypoint() {
        let mut w = open_world(v(4.0, 0.0));
        w.obstacles.push(rect(3.0, -1.0, 5.0, -0.9));
        w.obstacles.push(rect(3.0, 0.9, 5.0, 1.0));
        w.obstacles.push(rect(3.0, -1.0, 3.1, 1.0));
        w.obstacles.push(rect(4.9, -1.0, 5.0, 1.0));
        let grid = OccupancyGrid::new(&w, 0.2);
        assert!(global_waypoint(&grid, &w, &Pose2::new(0.0, 0.0, 0.0), 3.0).is_none());
    }

    #[test]
    fn start_in_a_blocked_cell_recovers_to_the_nearest_free_cell() {
        let mut w = open_world(v(4.0, 0.0));
        w.obstacles.push(Obstacle::Disc(crate::geometry::Disc {
            center: v(0.0, 0.0),
            radius: 0.3,
        }));
        // Legal robot position hugging the obstacle: its cell is blocked
        // by the inflation, yet a waypoint is still produced.
        let pose = Pose2::new(0.0, -0.51, 0.0);
        let grid = OccupancyGrid::new(&w, 0.2);
        let wp = global_waypoint(&grid, &w, &pose, 3.0).unwrap();
        assert!((wp - pose.position()).norm() <= 3.0 + RESOLUTION);
    }

    #[test]
    fn grid_paths_keep_robot_clearance() {
        let mut w = open_world(v(6.0, 0.0));
        w.obstacles.push(Obstacle::Disc(crate::geometry::Disc {
            center: v(3.0, 0.0),
            radius: 0.6,
        }));
        let grid = OccupancyGrid::new(&w, 0.2);
        let start = grid.nearest_free(v(0.0, 0.0)).unwrap();
        let goal = grid.nearest_free(v(6.0, 0.0)).unwrap();
        let path = grid.astar(start, goal).unwrap();
        for &(ix, iy) in &path {
            let c = grid.center_of(ix, iy);
            assert!((c - v(3.0, 0.0)).norm() - 0.6 >= 0.2, "path cell {c:?} too close");
        }
    }
}
