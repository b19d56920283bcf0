//! Line of sight and the robot's visibility relation.
//!
//! Geometry runs in doubled integer coordinates: the center of cell `(x, y)`
//! is `(2x + 1, 2y + 1)` and its interior is the open box
//! `(2x, 2x + 2) × (2y, 2y + 2)`. A sight line is blocked only when the open
//! segment between two centers passes through the interior of an obstacle,
//! so grazing a corner or running along an edge does not block.

use std::cmp::Ordering;

use fixedbitset::FixedBitSet;

use super::scenario::{Cell, Scenario};

/// A non-negative rational `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: i64,
    den: i64,
}

impl Ratio {
    fn new(num: i64, den: i64) -> Ratio {
        if den < 0 {
            Ratio { num: -num, den: -den }
        } else {
            Ratio { num, den }
        }
    }

    fn cmp(self, other: Ratio) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// True iff the open segment `a + t·d`, `t ∈ (0, 1)`, meets the open box
/// `(lo_x, hi_x) × (lo_y, hi_y)`.
fn segment_meets_box(a: (i64, i64), d: (i64, i64), lo: (i64, i64), hi: (i64, i64)) -> bool {
    let mut enter = Ratio::new(0, 1);
    let mut leave = Ratio::new(1, 1);
    for (p, dp, l, h) in [(a.0, d.0, lo.0, hi.0), (a.1, d.1, lo.1, hi.1)] {
        if dp == 0 {
            if p <= l || p >= h {
                return false;
            }
            continue;
        }
        let (mut t0, mut t1) = (Ratio::new(l - p, dp), Ratio::new(h - p, dp));
        if t0.cmp(t1) == Ordering::Greater {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0.cmp(enter) == Ordering::Greater {
            enter = t0;
        }
        if t1.cmp(leave) == Ordering::Less {
            leave = t1;
        }
    }
    enter.cmp(leave) == Ordering::Less
}

/// True iff no obstacle interior meets the open segment between the centers
/// of `a` and `b`.
pub fn line_of_sight(scenario: &Scenario, a: Cell, b: Cell) -> bool {
    if a == b {
        return true;
    }
    let start = (2 * a.x as i64 + 1, 2 * a.y as i64 + 1);
    let d = (2 * (b.x as i64 - a.x as i64), 2 * (b.y as i64 - a.y as i64));
    let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
    let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
    // The segment never leaves the bounding box of the two cells.
    !scenario
        .obstacles
        .iter()
        .filter(|o| o.x >= x0 && o.x <= x1 && o.y >= y0 && o.y <= y1)
        .any(|o| {
            let lo = (2 * o.x as i64, 2 * o.y as i64);
            segment_meets_box(start, d, lo, (lo.0 + 2, lo.1 + 2))
        })
}

/// Cells the robot sees from `from`: free cells within L∞ distance
/// `view_range` with a clear sight line, every camera cell, and its own cell.
/// Orientation plays no role.
pub fn visible_cells(scenario: &Scenario, from: Cell) -> Vec<Cell> {
    let r = scenario.view_range;
    let mut out = Vec::new();
    for y in from.y.saturating_sub(r)..=(from.y + r).min(scenario.height - 1) {
        for x in from.x.saturating_sub(r)..=(from.x + r).min(scenario.width - 1) {
            let c = Cell::new(x, y);
            if c == from
                || scenario.cameras.contains(&c)
                || (!scenario.is_obstacle(c) && line_of_sight(scenario, from, c))
            {
                out.push(c);
            }
        }
    }
    for &c in &scenario.cameras {
        if c.chebyshev(from) > r {
            out.push(c);
        }
    }
    out.sort_by_key(|c| (c.y, c.x));
    out
}

/// Precomputed visibility lookup, one bit row per robot cell.
#[derive(Debug, Clone)]
pub struct VisibilityTable {
    width: usize,
    height: usize,
    rows: Vec<Option<FixedBitSet>>,
}

impl VisibilityTable {
    pub fn new(scenario: &Scenario) -> VisibilityTable {
        let n = scenario.width * scenario.height;
        let rows = (0..n)
            .map(|i| {
                let from = Cell::new(i % scenario.width, i / scenario.width);
                if scenario.is_obstacle(from) {
                    return None;
                }
                let mut bits = FixedBitSet::with_capacity(n);
                for c in visible_cells(scenario, from) {
                    bits.insert(c.y * scenario.width + c.x);
                }
                Some(bits)
            })
            .collect();
        VisibilityTable {
            width: scenario.width,
            height: scenario.height,
            rows,
        }
    }

    /// Whether `target` is visible to a robot standing on `from`.
    ///
    /// Panics if `from` is an obstacle or outside the grid.
    pub fn sees(&self, from: Cell, target: Cell) -> bool {
        self.row(from).contains(target.y * self.width + target.x)
    }

    pub fn visible_from(&self, from: Cell) -> Vec<Cell> {
        self.row(from)
            .ones()
            .map(|i| Cell::new(i % self.width, i / self.width))
            .collect()
    }

    fn row(&self, from: Cell) -> &FixedBitSet {
        assert!(from.x < self.width && from.y < self.height, "cell {from} outside grid");
        self.rows[from.y * self.width + from.x]
            .as_ref()
            .unwrap_or_else(|| panic!("no visibility row for obstacle {from}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn grid(w: usize, h: usize, obstacles: &[(usize, usize)], r: usize) -> Scenario {
        let mut s = Scenario::open_room(w, h, r, Cell::new(0, 0), Cell::new(w - 1, h - 1), Cell::new(w - 1, h - 1));
        s.obstacles = obstacles.iter().map(|&(x, y)| Cell::new(x, y)).collect();
        s
    }

    /// Separating-axis test on open sets: the open segment and the open box are
    /// disjoint iff their projections on x, y, or the segment normal are disjoint.
    fn blocked_by_sat(a: Cell, b: Cell, o: Cell) -> bool {
        let (ax, ay) = (2 * a.x as i64 + 1, 2 * a.y as i64 + 1);
        let (bx, by) = (2 * b.x as i64 + 1, 2 * b.y as i64 + 1);
        let (lx, ly) = (2 * o.x as i64, 2 * o.y as i64);
        let (hx, hy) = (lx + 2, ly + 2);
        let disjoint_on_axis = |p: i64, q: i64, lo: i64, hi: i64| -> bool {
            let (mn, mx) = (p.min(q), p.max(q));
            mx <= lo || mn >= hi
        };
        if disjoint_on_axis(ax, bx, lx, hx) || disjoint_on_axis(ay, by, ly, hy) {
            return false;
        }
        let (nx, ny) = (-(by - ay), bx - ax);
        let c = nx * ax + ny * ay;
        let corners = [(lx, ly), (lx, hy), (hx, ly), (hx, hy)].map(|(x, y)| nx * x + ny * y);
        let (mn, mx) = (*corners.iter().min().unwrap(), *corners.iter().max().unwrap());
        !(c <= mn || c >= mx)
    }

    fn oracle_los(s: &Scenario, a: Cell, b: Cell) -> bool {
        a == b || !s.obstacles.iter().any(|&o| blocked_by_sat(a, b, o))
    }

    #[test]
    fn zero_length_segment_is_clear() {
        let s = grid(3, 3, &[(1, 1)], 3);
        assert!(line_of_sight(&s, Cell::new(0, 0), Cell::new(0, 0)));
    }

    #[test]
    fn centered_obstacle_blocks() {
        let s = grid(3, 3, &[(1, 1)], 3);
        assert!(!line_of_sight(&s, Cell::new(0, 1), Cell::new(2, 1)));
        assert!(!line_of_sight(&s, Cell::new(0, 0), Cell::new(2, 2)));
    }

    #[test]
    fn edge_running_segment_is_clear() {
        let s = grid(3, 3, &[(1, 0)], 3);
        assert!(line_of_sight(&s, Cell::new(0, 1), Cell::new(2, 1)));
        assert!(oracle_los(&s, Cell::new(0, 1), Cell::new(2, 1)));
    }

    #[test]
    fn corner_grazing_does_not_block() {
        // From (0,0) to (2,2) the diagonal passes exactly through the corners
        // shared by (1,0) and (0,1).
        let s = grid(3, 3, &[(1, 0), (0, 1)], 3);
        assert!(line_of_sight(&s, Cell::new(0, 0), Cell::new(2, 2)));
    }

    #[test]
    fn empty_grid_visibility_is_linf_ball() {
        let s = grid(5, 5, &[], 3);
        let vis: BTreeSet<Cell> = visible_cells(&s, Cell::new(0, 0)).into_iter().collect();
        let ball: BTreeSet<Cell> = s.free_cells().into_iter().filter(|c| c.chebyshev(Cell::new(0, 0)) <= 3).collect();
        assert_eq!(vis, ball);
        assert_eq!(vis.len(), 16);
    }

    #[test]
    fn zero_range_sees_only_own_cell_and_cameras() {
        let mut s = grid(4, 4, &[], 0);
        assert_eq!(visible_cells(&s, Cell::new(1, 2)), vec![Cell::new(1, 2)]);
        s.cameras.insert(Cell::new(3, 3));
        let table = VisibilityTable::new(&s);
        for c in s.free_cells() {
            assert!(table.sees(c, c));
            assert!(table.sees(c, Cell::new(3, 3)));
        }
    }

    fn arb_scenario() -> impl Strategy<Value = Scenario> {
        (2usize..8, 2usize..8, 0usize..6).prop_flat_map(|(w, h, r)| {
            proptest::collection::vec((0..w, 0..h), 0..(w * h / 2)).prop_map(move |obs| {
                let mut s = grid(w, h, &[], r);
                s.obstacles = obs.into_iter().map(|(x, y)| Cell::new(x, y)).collect();
                s
            })
        })
    }

    proptest! {
        #[test]
        fn matches_separating_axis_oracle(s in arb_scenario(), ax in 0usize..8, ay in 0usize..8, bx in 0usize..8, by in 0usize..8) {
            let a = Cell::new(ax % s.width, ay % s.height);
            let b = Cell::new(bx % s.width, by % s.height);
            prop_assert_eq!(line_of_sight(&s, a, b), oracle_los(&s, a, b));
        }

        #[test]
        fn symmetric(s in arb_scenario(), ax in 0usize..8, ay in 0usize..8, bx in 0usize..8, by in 0usize..8) {
            let a = Cell::new(ax % s.width, ay % s.height);
            let b = Cell::new(bx % s.width, by % s.height);
            prop_assert_eq!(line_of_sight(&s, a, b), line_of_sight(&s, b, a));
        }

        #[test]
        fn monotone_in_range(s in arb_scenario(), extra in 1usize..4) {
            let mut wider = s.clone();
            wider.view_range += extra;
            for c in s.free_cells() {
                let small: BTreeSet<Cell> = visible_cells(&s, c).into_iter().collect();
                let big: BTreeSet<Cell> = visible_cells(&wider, c).into_iter().collect();
                prop_assert!(small.is_subset(&big));
            }
        }

        #[test]
        fn cameras_only_add(s in arb_scenario(), cx in 0usize..8, cy in 0usize..8) {
            let cam = Cell::new(cx % s.width, cy % s.height);
            prop_assume!(!s.is_obstacle(cam));
            let mut with = s.clone();
            with.cameras.insert(cam);
            for c in s.free_cells() {
                let before: BTreeSet<Cell> = visible_cells(&s, c).into_iter().collect();
                let after: BTreeSet<Cell> = visible_cells(&with, c).into_iter().collect();
                prop_assert!(before.is_subset(&after));
                prop_assert!(after.contains(&cam) && after.contains(&c));
            }
        }
    }
}
