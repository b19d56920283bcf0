//! Benchmark scenario families and the CSV table they produce.
//!
//! Every family uses view range 3, starts the robot in the top-left
//! corner facing east and places the opponent and the goal in the
//! bottom-right corner.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::Refinement;
use crate::error::Error;
use crate::gridworld::{Cell, Scenario};
use crate::pipeline::{run_pipeline, PipelineOptions};

pub const VIEW_RANGE: usize = 3;
pub const SC3_SIZE: usize = 25;
/// Layouts tried before the SC3 generator gives up.
pub const SC3_ATTEMPTS: usize = 10_000;
pub const CSV_HEADER: &str = "scenario,states,choices,transitions,pg_value,certified_value,mdp_bound,mc_estimate,build_s,solve_s";

fn corner_room(w: usize, h: usize) -> Scenario {
    Scenario::open_room(w, h, VIEW_RANGE, Cell::new(0, 0), Cell::new(w - 1, h - 1), Cell::new(w - 1, h - 1))
}

/// Empty `n×n` room.
pub fn sc1(n: usize) -> Result<Scenario, Error> {
    if n < 2 {
        return Err(Error::Bench(format!("sc1 needs n >= 2, got {n}")));
    }
    Ok(corner_room(n, n))
}

/// `n×n` room with a plus-shaped obstacle through the center whose arms
/// stop one cell short of the walls.
pub fn sc2(n: usize) -> Result<Scenario, Error> {
    if n < 5 {
        return Err(Error::Bench(format!("sc2 needs n >= 5, got {n}")));
    }
    let mut s = corner_room(n, n);
    let m = n / 2;
    for i in 2..n - 2 {
        s.obstacles.insert(Cell::new(m, i));
        s.obstacles.insert(Cell::new(i, m));
    }
    Ok(s)
}

/// Whether all free cells form one 4-connected component with no cell
/// lacking a free neighbor.
fn connected(s: &Scenario) -> bool {
    let free = s.free_cells();
    let Some(&first) = free.first() else { return false };
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    let mut queue = VecDeque::from([first]);
    seen.insert(first);
    while let Some(c) = queue.pop_front() {
        for d in crate::gridworld::Direction::ALL {
            if let Some(n) = c.step(d).filter(|&n| s.is_free(n)) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.len() == free.len() && free.len() > 1
}

/// 25×25 room with `obstacles` obstacle cells drawn uniformly by ChaCha8
/// from `seed`. Layouts that cover the start or goal cells or split the
/// free cells are rejected and redrawn.
pub fn sc3(obstacles: usize, seed: u64) -> Result<Scenario, Error> {
    let n = SC3_SIZE;
    if obstacles > n * n / 2 {
        return Err(Error::Bench(format!("sc3 supports at most {} obstacles", n * n / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = corner_room(n, n);
    let reserved = [base.robot_start, base.opponent_starts[0], Cell::new(1, 0), Cell::new(n - 2, n - 1)];
    for _ in 0..SC3_ATTEMPTS {
        let mut s = base.clone();
        while s.obstacles.len() < obstacles {
            let c = Cell::new(rng.gen_range(0..n), rng.gen_range(0..n));
            if !reserved.contains(&c) && !s.goal_cells.contains(&c) {
                s.obstacles.insert(c);
            }
        }
        if connected(&s) {
            return Ok(s);
        }
    }
    Err(Error::Bench(format!("no connected sc3 layout with {obstacles} obstacles")))
}

/// Two 8×10 rooms joined by a 4-cell passage along the bottom row, in a
/// 20×10 grid. With cameras, two cameras at the passage mouths observe
/// every free cell within distance 3 of either mouth.
pub fn sc4(cameras: bool) -> Scenario {
    let mut s = corner_room(20, 10);
    for x in 8..12 {
        for y in 0..9 {
            s.obstacles.insert(Cell::new(x, y));
        }
    }
    if cameras {
        let mouths = [Cell::new(8, 9), Cell::new(11, 9)];
        s.cameras = s
            .free_cells()
            .into_iter()
            .filter(|c| mouths.iter().any(|&m| c.chebyshev(m) <= VIEW_RANGE))
            .collect();
    }
    s
}

/// `4×length` corridor traversed top to bottom.
pub fn sc5(length: usize) -> Result<Scenario, Error> {
    if length < 2 {
        return Err(Error::Bench(format!("sc5 needs length >= 2, got {length}")));
    }
    Ok(corner_room(4, length))
}

/// One benchmark job: a named scenario and how to abstract it.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub scenario: Scenario,
    pub refinement: Refinement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: String,
    pub states: usize,
    pub choices: usize,
    pub transitions: usize,
    pub pg_value: f64,
    pub certified_value: f64,
    pub mdp_bound: f64,
    pub mc_estimate: Option<f64>,
    pub build_s: f64,
    pub solve_s: f64,
}

impl BenchRow {
    /// CSV line; timings are written as `-` when `timings` is false so the
    /// output is reproducible byte for byte.
    pub fn csv(&self, timings: bool) -> String {
        let mc = self.mc_estimate.map_or(String::new(), |v| format!("{v:.6}"));
        let t = |x: f64| if timings { format!("{x:.3}") } else { "-".to_string() };
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{},{},{}",
            self.scenario,
            self.states,
            self.choices,
            self.transitions,
            self.pg_value,
            self.certified_value,
            self.mdp_bound,
            mc,
            t(self.build_s),
            t(self.solve_s)
        )
    }
}

/// Builds the cases of a suite. `sizes` means grid sizes for sc1/sc2,
/// obstacle counts for sc3 and corridor lengths for sc5; sc4 ignores it.
pub fn suite(name: &str, sizes: &[usize], seed: u64) -> Result<Vec<BenchCase>, Error> {
    let one = |name: String, scenario: Scenario| BenchCase {
        name,
        scenario,
        refinement: Refinement::OneStep,
    };
    let mut cases = Vec::new();
    match name {
        "sc1" => {
            for &n in sizes {
                cases.push(one(format!("sc1-{n}x{n}"), sc1(n)?));
            }
        }
        "sc2" => {
            for &n in sizes {
                cases.push(one(format!("sc2-{n}x{n}"), sc2(n)?));
            }
        }
        "sc3" => {
            for &k in sizes {
                cases.push(one(format!("sc3-{k}obst-seed{seed}"), sc3(k, seed)?));
            }
        }
        "sc4" => {
            cases.push(one("sc4-no-cameras".into(), sc4(false)));
            cases.push(one("sc4-2-cameras".into(), sc4(true)));
        }
        "sc5" => {
            for &l in sizes {
                cases.push(one(format!("sc5-4x{l}"), sc5(l)?));
                cases.push(BenchCase {
                    name: format!("sc5-4x{l}+ref"),
                    scenario: sc5(l)?,
                    refinement: Refinement::Regions,
                });
            }
        }
        other => return Err(Error::Bench(format!("unknown suite {other}"))),
    }
    Ok(cases)
}

/// Default sizes per suite.
pub fn default_sizes(name: &str) -> Vec<usize> {
    match name {
        "sc1" => (3..=10).collect(),
        "sc2" => vec![11, 21],
        "sc3" => vec![10, 40, 60, 70],
        "sc5" => vec![40, 60, 80, 100],
        _ => Vec::new(),
    }
}

pub fn run_case(case: &BenchCase, base: &PipelineOptions) -> Result<BenchRow, Error> {
    let opts = PipelineOptions {
        refinement: case.refinement,
        ..base.clone()
    };
    let out = run_pipeline(&case.scenario, &opts)?;
    Ok(BenchRow {
        scenario: case.name.clone(),
        states: out.size.states,
        choices: out.size.choices,
        transitions: out.size.transitions,
        pg_value: out.report.pg_value,
        certified_value: out.report.certified_value,
        mdp_bound: out.report.mdp_upper_bound,
        mc_estimate: out.report.monte_carlo.map(|m| m.estimate),
        build_s: out.build_s,
        solve_s: out.solve_s,
    })
}

pub fn csv_table(rows: &[BenchRow], timings: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in rows {
        let _ = writeln!(out, "{}", r.csv(timings));
    }
    out
}
