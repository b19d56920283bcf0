//! Abstract game read off an explicit POMDP: one Player-1 state per
//! observation class, one Player-2 choice per concrete member state.

use std::collections::{HashMap, VecDeque};

use super::AbstractionError;
use crate::model::{ExplicitModel, Interner, Labels, ModelBuilder, Player};

#[derive(Debug, Clone)]
pub struct ObservationGame {
    pub model: ExplicitModel,
    /// Observation id of each Player-1 state (Player-1 states come first).
    pub classes: Vec<u32>,
    /// `(Player-1 state, action id)` of each selector.
    pub selectors: Vec<(u32, u32)>,
}

/// Builds the reachable abstract game of a POMDP whose observation classes
/// are its abstract states.
pub fn build_abstract_pg(pomdp: &ExplicitModel) -> Result<ObservationGame, AbstractionError> {
    let obs = pomdp.observations.as_ref().ok_or(AbstractionError::NoObservations)?;
    let mut members: HashMap<u32, Vec<usize>> = HashMap::new();
    for (s, &o) in obs.iter().enumerate() {
        members.entry(o).or_default().push(s);
    }
    let obs_name = |o: u32| pomdp.observation_names.get(o as usize).cloned().unwrap_or_else(|| o.to_string());

    let mut classes: Interner<u32> = Interner::default();
    let mut queue = VecDeque::new();
    classes.intern(obs[pomdp.initial]);
    queue.push_back(0u32);

    struct Row {
        labels: Labels,
        actions: Vec<(u32, Vec<(String, Vec<(u32, f64)>)>)>,
    }
    let mut rows: Vec<Row> = Vec::new();
    while let Some(c) = queue.pop_front() {
        let o = *classes.value(c);
        let ms = &members[&o];
        let goal = ms.iter().all(|&s| pomdp.labels[s].goal);
        let bad = !goal && ms.iter().any(|&s| pomdp.labels[s].bad);
        let labels = Labels { goal, bad };
        let mut actions = Vec::new();
        if !labels.is_target() {
            let names = |s: usize| -> Vec<u32> { pomdp.choices(s).map(|c| pomdp.choice_action[c]).collect() };
            let first = names(ms[0]);
            if ms.iter().any(|&s| names(s) != first) {
                return Err(AbstractionError::UnequalActions { observation: obs_name(o) });
            }
            for (k, &a) in first.iter().enumerate() {
                let mut choices = Vec::with_capacity(ms.len());
                for &s in ms {
                    let mut dist: Vec<(u32, f64)> = Vec::new();
                    for (t, p) in pomdp.transitions(pomdp.row_start[s] + k) {
                        let (id, fresh) = classes.intern(obs[t]);
                        if fresh {
                            queue.push_back(id);
                        }
                        match dist.iter_mut().find(|(x, _)| *x == id) {
                            Some(e) => e.1 += p,
                            None => dist.push((id, p)),
                        }
                    }
                    dist.sort_by_key(|&(t, _)| t);
                    choices.push((format!("s{s}"), dist));
                }
                actions.push((a, choices));
            }
        }
        rows.push(Row { labels, actions });
    }

    let n1 = rows.len() as u32;
    let mut selectors = Vec::new();
    let mut b = ModelBuilder::new();
    for (c, row) in rows.iter().enumerate() {
        b.start_row(c, Player::One, row.labels)?;
        if row.actions.is_empty() {
            b.add_choice("absorb", &[(c as u32, 1.0)]);
        }
        for (a, _) in &row.actions {
            let name = &pomdp.action_names[*a as usize];
            b.add_choice(name, &[(n1 + selectors.len() as u32, 1.0)]);
            selectors.push((c as u32, *a));
        }
    }
    let mut s = n1 as usize;
    for row in &rows {
        for (_, choices) in &row.actions {
            b.start_row(s, Player::Two, Labels::NONE)?;
            for (name, dist) in choices {
                b.add_choice(name, dist);
            }
            s += 1;
        }
    }
    let model = b.finish(0);
    Ok(ObservationGame {
        model,
        classes: classes.into_values(),
        selectors,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_abstract_world_pg, AbstractionOptions, MemberSet, Refinement};
    use super::*;
    use crate::gridworld::{build_world_graphs, Cell, Scenario, VisibilityTable};
    use crate::solver::{solve_pg, Query, SolveOptions};
    use crate::worldmodel::{attach_observations, build_world_mdp, label_states, OpponentPolicy, WorldPomdp};

    fn pomdp(s: &Scenario) -> WorldPomdp {
        let g = build_world_graphs(s).unwrap();
        let mut w = build_world_mdp(&g, &[OpponentPolicy::Uniform]).unwrap();
        label_states(&mut w, s, &g);
        attach_observations(w, &g, &VisibilityTable::new(s)).unwrap()
    }

    fn solve(m: &ExplicitModel) -> f64 {
        solve_pg(m, &Query::reach_avoid(), &SolveOptions::with_tolerance(1e-10)).unwrap().initial_value(m)
    }

    fn scenarios() -> Vec<Scenario> {
        let mut walled = Scenario::open_room(5, 4, 2, Cell::new(0, 0), Cell::new(4, 3), Cell::new(4, 0));
        walled.obstacles = [Cell::new(2, 1), Cell::new(2, 2)].into_iter().collect();
        let mut cams = Scenario::open_room(6, 3, 1, Cell::new(0, 1), Cell::new(5, 2), Cell::new(5, 0));
        cams.cameras = [Cell::new(3, 1)].into_iter().collect();
        vec![
            Scenario::open_room(3, 3, 3, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2)),
            Scenario::open_room(4, 4, 1, Cell::new(0, 0), Cell::new(3, 3), Cell::new(3, 3)),
            Scenario::open_room(2, 7, 2, Cell::new(0, 0), Cell::new(1, 6), Cell::new(1, 6)),
            walled,
            cams,
        ]
    }

    #[test]
    fn direct_construction_matches_observation_classes() {
        for s in scenarios() {
            let w = pomdp(&s);
            let literal = build_abstract_pg(w.model()).unwrap();
            literal.model.validate().unwrap();
            let g = build_world_graphs(&s).unwrap();
            let opts = AbstractionOptions {
                refinement: Refinement::None,
                members: MemberSet::Reachable,
                merge_duplicate_choices: true,
            };
            let direct = build_abstract_world_pg(&s, &g, &VisibilityTable::new(&s), &OpponentPolicy::Uniform, None, &opts).unwrap();
            assert_eq!(literal.classes.len(), direct.num_player1(), "{}x{}", s.width, s.height);
            let (a, b) = (solve(&literal.model), solve(&direct.model));
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn classes_partition_reachable_states() {
        for s in scenarios() {
            let w = pomdp(&s);
            let game = build_abstract_pg(w.model()).unwrap();
            let m = w.model();
            let obs = m.observations.as_ref().unwrap();
            let mut seen = std::collections::HashSet::new();
            for &c in &game.classes {
                assert!(seen.insert(c));
            }
            // Every state reachable without passing a goal or bad state
            // lands in exactly one class.
            let mut reach = vec![false; m.num_states()];
            let mut stack = vec![m.initial];
            reach[m.initial] = true;
            while let Some(s) = stack.pop() {
                assert!(seen.contains(&obs[s]));
                if m.labels[s].is_target() {
                    continue;
                }
                for c in m.choices(s) {
                    for (t, _) in m.transitions(c) {
                        if !reach[t] {
                            reach[t] = true;
                            stack.push(t);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn selectors_conserve_mass_and_singletons_are_deterministic() {
        let s = Scenario::open_room(4, 4, 1, Cell::new(0, 0), Cell::new(3, 3), Cell::new(3, 3));
        let w = pomdp(&s);
        let game = build_abstract_pg(w.model()).unwrap();
        let m = &game.model;
        let n1 = game.classes.len();
        for (i, &(c, _)) in game.selectors.iter().enumerate() {
            let sel = n1 + i;
            for ch in m.choices(sel) {
                let mass: f64 = m.transitions(ch).map(|(_, p)| p).sum();
                assert!((mass - 1.0).abs() < 1e-12);
            }
            let o = game.classes[c as usize];
            let size = w.model().observations.as_ref().unwrap().iter().filter(|&&x| x == o).count();
            assert_eq!(m.choices(sel).len(), size);
            if w.observations[o as usize].opponent.is_some() {
                assert_eq!(size, 1);
            }
        }
    }

    #[test]
    fn fully_visible_game_equals_mdp() {
        let s = Scenario::open_room(3, 3, 3, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2));
        let w = pomdp(&s);
        let game = build_abstract_pg(w.model()).unwrap();
        let mdp = crate::solver::solve_mdp(&w.model().make_absorbing(), &Query::reach_avoid(), &SolveOptions::with_tolerance(1e-10))
            .unwrap()
            .initial_value(w.model());
        assert!((solve(&game.model) - mdp).abs() < 1e-8);
        assert!((mdp - 0.8323).abs() < 5e-5, "{mdp}");
    }

    #[test]
    fn missing_observations_rejected() {
        let s = Scenario::open_room(2, 2, 1, Cell::new(0, 0), Cell::new(1, 1), Cell::new(1, 1));
        let mut w = pomdp(&s);
        w.world.model.observations = None;
        assert_eq!(build_abstract_pg(&w.world.model).unwrap_err(), AbstractionError::NoObservations);
    }
}
