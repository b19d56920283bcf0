//! Where collisions happen under the optimal strategy pair.

use std::collections::BTreeMap;

use super::AbstractGame;
use crate::gridworld::{Cell, WorldGraph};
use crate::solver::{induced_chain, ValueResult};

const MASS_FLOOR: f64 = 1e-12;
const MAX_STEPS: usize = 200_000;

/// Robot cells ranked by the probability of colliding there when both
/// players follow the strategies in `result`. Cells with no collision mass
/// are omitted.
pub fn collision_hotspots(game: &AbstractGame, graphs: &[WorldGraph], result: &ValueResult) -> Vec<(Cell, f64)> {
    let mc = induced_chain(&game.model, &result.strategy);
    let n = mc.num_states();
    let mut mass = vec![0.0; n];
    mass[mc.initial] = 1.0;
    let mut per_cell: BTreeMap<Cell, f64> = BTreeMap::new();
    for _ in 0..MAX_STEPS {
        let mut next = vec![0.0; n];
        let mut live = 0.0;
        for s in 0..n {
            let m = mass[s];
            if m == 0.0 {
                continue;
            }
            for (t, p) in mc.transitions(mc.row_start[s]) {
                let x = m * p;
                if mc.labels[t].bad {
                    let cell = graphs[0].location_of(game.states[t].robot);
                    *per_cell.entry(cell).or_default() += x;
                } else if !mc.labels[t].goal {
                    next[t] += x;
                    live += x;
                }
            }
        }
        mass = next;
        if live < MASS_FLOOR {
            break;
        }
    }
    let mut ranked: Vec<(Cell, f64)> = per_cell.into_iter().filter(|&(_, m)| m > MASS_FLOOR).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}
