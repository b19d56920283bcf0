//! Grid-world scenarios, visibility, and agent graphs.

mod graph;
mod scenario;
mod sight;

pub use graph::{
    build_opponent_graph, build_robot_graph, build_world_graphs, GraphError, Position, WorldGraph,
    OPPONENT_MOVES, ROBOT_MOVES,
};
pub use scenario::{
    parse_regions, parse_scenario, regions_to_toml, validate_regions, Cell, Direction, Scenario,
    ScenarioError,
};
pub use sight::{line_of_sight, visible_cells, VisibilityTable};
