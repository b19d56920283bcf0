//! Declarative grid-world scenarios and their text schema.
//!
//! A scenario is written as a TOML document:
//!
//! ```toml
//! width = 3
//! height = 3
//! view_range = 3
//! obstacles = [[1, 1]]
//! cameras = []
//! robot_start = [0, 0]
//! robot_start_orientation = "E"   # optional, defaults to "E"
//! opponent_starts = [[2, 2]]
//! goal_cells = [[2, 2]]
//! # regions = [[[0, 0], [1, 0]], [[2, 0], ...]]   # optional
//! ```
//!
//! Cells are `[x, y]` with the origin in the top-left corner and `y` growing
//! downward.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid cell, `x` to the right and `y` downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// L∞ distance.
    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    /// The neighbouring cell in `dir`, if it does not underflow the grid origin.
    pub fn step(self, dir: Direction) -> Option<Cell> {
        let (dx, dy) = dir.delta();
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        Some(Cell { x, y })
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.x, self.y)
    }
}

/// Compass heading. North is toward `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Direction {
    N,
    #[default]
    E,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 4]
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::N => (0, -1),
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
        }
    }

    /// Counter-clockwise quarter turn.
    pub fn left(self) -> Direction {
        Self::from_index(self.index() + 3)
    }

    /// Clockwise quarter turn.
    pub fn right(self) -> Direction {
        Self::from_index(self.index() + 1)
    }

    pub fn letter(self) -> char {
        match self {
            Direction::N => 'N',
            Direction::E => 'E',
            Direction::S => 'S',
            Direction::W => 'W',
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Syntax(String),
    #[error("grid must have positive width and height")]
    EmptyGrid,
    #[error("{field} cell {cell} lies outside the {width}x{height} grid")]
    OutOfBounds {
        field: &'static str,
        cell: Cell,
        width: usize,
        height: usize,
    },
    #[error("start-on-obstacle: {field} cell {cell} is an obstacle")]
    StartOnObstacle { field: &'static str, cell: Cell },
    #[error("{field} cell {cell} is an obstacle")]
    OnObstacle { field: &'static str, cell: Cell },
    #[error("scenario needs at least one opponent start cell")]
    MissingOpponent,
    #[error("opponent start {cell} coincides with the robot start")]
    OpponentOnRobot { cell: Cell },
    #[error("scenario needs at least one goal cell")]
    MissingGoal,
    #[error("region {index} is empty")]
    EmptyRegion { index: usize },
    #[error("cell {cell} belongs to more than one region")]
    RegionOverlap { cell: Cell },
    #[error("free cell {cell} is not covered by any region")]
    RegionGap { cell: Cell },
}

/// On-disk shape of a scenario; validated into [`Scenario`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    width: usize,
    height: usize,
    #[serde(default)]
    obstacles: Vec<Cell>,
    #[serde(default)]
    cameras: Vec<Cell>,
    view_range: usize,
    robot_start: Cell,
    #[serde(default)]
    robot_start_orientation: Direction,
    #[serde(default)]
    opponent_starts: Vec<Cell>,
    #[serde(default)]
    goal_cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions: Option<Vec<Vec<Cell>>>,
}

/// A validated grid-world scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub obstacles: BTreeSet<Cell>,
    /// Cells that are visible regardless of where the robot stands.
    pub cameras: BTreeSet<Cell>,
    /// L∞ viewing radius of the robot.
    pub view_range: usize,
    pub robot_start: Cell,
    pub robot_start_orientation: Direction,
    pub opponent_starts: Vec<Cell>,
    pub goal_cells: BTreeSet<Cell>,
    pub regions: Option<Vec<Vec<Cell>>>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    let scenario = Scenario {
        width: doc.width,
        height: doc.height,
        obstacles: doc.obstacles.into_iter().collect(),
        cameras: doc.cameras.into_iter().collect(),
        view_range: doc.view_range,
        robot_start: doc.robot_start,
        robot_start_orientation: doc.robot_start_orientation,
        opponent_starts: doc.opponent_starts,
        goal_cells: doc.goal_cells.into_iter().collect(),
        regions: doc.regions,
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    /// An empty `width x height` room with one opponent and the default heading.
    pub fn open_room(
        width: usize,
        height: usize,
        view_range: usize,
        robot_start: Cell,
        opponent_start: Cell,
        goal: Cell,
    ) -> Scenario {
        Scenario {
            width,
            height,
            obstacles: BTreeSet::new(),
            cameras: BTreeSet::new(),
            view_range,
            robot_start,
            robot_start_orientation: Direction::E,
            opponent_starts: vec![opponent_start],
            goal_cells: [goal].into_iter().collect(),
            regions: None,
        }
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.obstacles.contains(&c)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_obstacle(c)
    }

    /// Free cells in row-major order.
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !self.is_obstacle(*c))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.width == 0 || self.height == 0 {
            return Err(ScenarioError::EmptyGrid);
        }
        let bounds = |field: &'static str, cell: Cell| {
            if self.in_bounds(cell) {
                Ok(())
            } else {
                Err(ScenarioError::OutOfBounds {
                    field,
                    cell,
                    width: self.width,
                    height: self.height,
                })
            }
        };
        for &c in &self.obstacles {
            bounds("obstacle", c)?;
        }
        bounds("robot_start", self.robot_start)?;
        if self.is_obstacle(self.robot_start) {
            return Err(ScenarioError::StartOnObstacle {
                field: "robot_start",
                cell: self.robot_start,
            });
        }
        if self.opponent_starts.is_empty() {
            return Err(ScenarioError::MissingOpponent);
        }
        for &c in &self.opponent_starts {
            bounds("opponent_start", c)?;
            if self.is_obstacle(c) {
                return Err(ScenarioError::StartOnObstacle {
                    field: "opponent_start",
                    cell: c,
                });
            }
            if c == self.robot_start {
                return Err(ScenarioError::OpponentOnRobot { cell: c });
            }
        }
        if self.goal_cells.is_empty() {
            return Err(ScenarioError::MissingGoal);
        }
        for &c in &self.goal_cells {
            bounds("goal", c)?;
            if self.is_obstacle(c) {
                return Err(ScenarioError::OnObstacle { field: "goal", cell: c });
            }
        }
        for &c in &self.cameras {
            bounds("camera", c)?;
            if self.is_obstacle(c) {
                return Err(ScenarioError::OnObstacle { field: "camera", cell: c });
            }
        }
        if let Some(regions) = &self.regions {
            validate_regions(self, regions)?;
        }
        Ok(())
    }

    /// Serializes back into the TOML schema accepted by [`parse_scenario`].
    pub fn to_toml(&self) -> String {
        let doc = ScenarioDoc {
            width: self.width,
            height: self.height,
            obstacles: self.obstacles.iter().copied().collect(),
            cameras: self.cameras.iter().copied().collect(),
            view_range: self.view_range,
            robot_start: self.robot_start,
            robot_start_orientation: self.robot_start_orientation,
            opponent_starts: self.opponent_starts.clone(),
            goal_cells: self.goal_cells.iter().copied().collect(),
            regions: self.regions.clone(),
        };
        toml::to_string(&doc).expect("scenario serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Maximum number of grid steps between two cells, `width + height - 2`.
    pub fn diameter(&self) -> usize {
        self.width + self.height - 2
    }
}

/// Checks that `regions` partitions the free cells of `scenario`.
pub fn validate_regions(scenario: &Scenario, regions: &[Vec<Cell>]) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (index, block) in regions.iter().enumerate() {
        if block.is_empty() {
            return Err(ScenarioError::EmptyRegion { index });
        }
        for &c in block {
            if !scenario.in_bounds(c) {
                return Err(ScenarioError::OutOfBounds {
                    field: "region",
                    cell: c,
                    width: scenario.width,
                    height: scenario.height,
                });
            }
            if scenario.is_obstacle(c) {
                return Err(ScenarioError::OnObstacle { field: "region", cell: c });
            }
            if !seen.insert(c) {
                return Err(ScenarioError::RegionOverlap { cell: c });
            }
        }
    }
    if let Some(cell) = scenario.free_cells().into_iter().find(|c| !seen.contains(c)) {
        return Err(ScenarioError::RegionGap { cell });
    }
    Ok(())
}

/// Parses a standalone region file: a TOML document with a single `regions` array.
pub fn parse_regions(text: &str) -> Result<Vec<Vec<Cell>>, ScenarioError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RegionDoc {
        regions: Vec<Vec<Cell>>,
    }
    let doc: RegionDoc = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    Ok(doc.regions)
}

/// Serializes a region list into the format read by [`parse_regions`].
pub fn regions_to_toml(regions: &[Vec<Cell>]) -> String {
    #[derive(Serialize)]
    struct RegionDoc<'a> {
        regions: &'a [Vec<Cell>],
    }
    toml::to_string(&RegionDoc { regions }).expect("regions serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SC1_3X3: &str = r#"
        width = 3
        height = 3
        view_range = 3
        robot_start = [0, 0]
        opponent_starts = [[2, 2]]
        goal_cells = [[2, 2]]
    "#;

    #[test]
    fn parses_small_open_room() {
        let s = parse_scenario(SC1_3X3).unwrap();
        assert_eq!(s.width, 3);
        assert_eq!(s.view_range, 3);
        assert_eq!(s.robot_start_orientation, Direction::E);
        assert_eq!(s.opponent_starts, vec![Cell::new(2, 2)]);
        assert_eq!(s.free_cells().len(), 9);
    }

    #[test]
    fn missing_opponent_is_rejected() {
        let text = r#"
            width = 1
            height = 1
            view_range = 0
            robot_start = [0, 0]
            goal_cells = [[0, 0]]
        "#;
        assert_eq!(parse_scenario(text), Err(ScenarioError::MissingOpponent));
        let crowded = format!("{text}\nopponent_starts = [[0, 0]]");
        assert_eq!(
            parse_scenario(&crowded),
            Err(ScenarioError::OpponentOnRobot { cell: Cell::new(0, 0) })
        );
    }

    #[test]
    fn start_on_obstacle_names_the_cell() {
        let text = format!("{SC1_3X3}\nobstacles = [[0, 0]]");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::StartOnObstacle {
                field: "robot_start",
                cell: Cell::new(0, 0)
            }
        );
        assert!(err.to_string().contains("start-on-obstacle"));
        assert!(err.to_string().contains("[0, 0]"));
    }

    #[test]
    fn out_of_bounds_goal() {
        let text = SC1_3X3.replace("goal_cells = [[2, 2]]", "goal_cells = [[3, 1]]");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::OutOfBounds { field: "goal", .. })
        ));
    }

    #[test]
    fn unknown_fields_and_bad_headings_are_syntax_errors() {
        let text = format!("{SC1_3X3}\nspeed = 2");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Syntax(_))));
        let text = format!("{SC1_3X3}\nrobot_start_orientation = \"Q\"");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Syntax(_))));
    }

    #[test]
    fn region_partition_checks() {
        let base = parse_scenario(SC1_3X3).unwrap();
        let all = base.free_cells();
        assert!(validate_regions(&base, std::slice::from_ref(&all)).is_ok());
        assert_eq!(
            validate_regions(&base, &[all[..8].to_vec()]),
            Err(ScenarioError::RegionGap { cell: Cell::new(2, 2) })
        );
        assert_eq!(
            validate_regions(&base, &[all.clone(), vec![Cell::new(1, 1)]]),
            Err(ScenarioError::RegionOverlap { cell: Cell::new(1, 1) })
        );
        assert_eq!(
            validate_regions(&base, &[all, vec![]]),
            Err(ScenarioError::EmptyRegion { index: 1 })
        );
    }

    #[test]
    fn toml_round_trip() {
        let mut s = parse_scenario(SC1_3X3).unwrap();
        s.obstacles.insert(Cell::new(1, 1));
        s.cameras.insert(Cell::new(0, 2));
        s.robot_start_orientation = Direction::S;
        let back = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
    }

    #[test]
    fn turning_cycles() {
        for d in Direction::ALL {
            assert_eq!(d.left().right(), d);
            assert_eq!(d.left().left().left().left(), d);
        }
        assert_eq!(Direction::N.right(), Direction::E);
        assert_eq!(Direction::N.left(), Direction::W);
    }
}
