//! Best-effort emission in the PRISM language: games as `smg` with one
//! module per player, and the world POMDP as a robot process and an
//! opponent process with the visibility lookup inlined as a formula.

use std::fmt::Write;

use super::ExportError;
use crate::gridworld::{Scenario, VisibilityTable, WorldGraph};
use crate::model::{ExplicitModel, Player};
use crate::worldmodel::OpponentPolicy;

fn disjunction(terms: impl Iterator<Item = String>) -> String {
    let v: Vec<String> = terms.collect();
    if v.is_empty() {
        "false".to_string()
    } else {
        v.join(" | ")
    }
}

fn update(var: &str, t: usize, extra: &str) -> String {
    format!("({var}'={t}){extra}")
}

/// A game with every state owned by Player 1 or Player 2.
pub fn emit_prism_pg(pg: &ExplicitModel) -> Result<String, ExportError> {
    if let Some(s) = pg.players.iter().position(|&p| p == Player::Unassigned) {
        return Err(ExportError::Unsupported(format!("state {s} has no player")));
    }
    let n = pg.num_states();
    let owned = |who: Player| -> Vec<usize> { (0..n).filter(|&s| pg.players[s] == who).collect() };
    let (p1, p2) = (owned(Player::One), owned(Player::Two));
    let labels_of = |states: &[usize], prefix: &str| -> Vec<String> {
        let mut ids: Vec<u32> = states.iter().flat_map(|&s| pg.choices(s).map(|c| pg.choice_action[c])).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|a| format!("[{prefix}{a}]")).collect()
    };
    let mut out = String::from("// Reach-avoid query: <<robot>> Pmax=? [ !\"bad\" U \"goal\" ]\nsmg\n\n");
    for (i, a) in pg.action_names.iter().enumerate() {
        let _ = writeln!(out, "// action {i}: {a}");
    }
    let _ = writeln!(out, "\nplayer robot\n  player1{}\nendplayer", labels_of(&p1, "p1_").iter().map(|l| format!(", {l}")).collect::<String>());
    let _ = writeln!(out, "player adversary\n  player2{}\nendplayer\n", labels_of(&p2, "p2_").iter().map(|l| format!(", {l}")).collect::<String>());
    let _ = writeln!(out, "global s : [0..{}] init {};\n", n.saturating_sub(1), pg.initial);
    for (module, states, prefix) in [("player1", &p1, "p1_"), ("player2", &p2, "p2_")] {
        let _ = writeln!(out, "module {module}");
        for &s in states.iter() {
            for c in pg.choices(s) {
                let dist: Vec<String> = pg.transitions(c).map(|(t, p)| format!("{p}:{}", update("s", t, ""))).collect();
                let _ = writeln!(out, "  [{prefix}{}] s={s} -> {};", pg.choice_action[c], dist.join(" + "));
            }
        }
        let _ = writeln!(out, "endmodule\n");
    }
    let goal = disjunction((0..n).filter(|&s| pg.labels[s].goal).map(|s| format!("s={s}")));
    let bad = disjunction((0..n).filter(|&s| pg.labels[s].bad && !pg.labels[s].goal).map(|s| format!("s={s}")));
    let _ = writeln!(out, "label \"goal\" = {goal};\nlabel \"bad\" = {bad};");
    Ok(out)
}

/// The one-opponent world POMDP of a scenario.
pub fn emit_prism_pomdp(
    scenario: &Scenario,
    graphs: &[WorldGraph],
    vis: &VisibilityTable,
    policy: &OpponentPolicy,
) -> Result<String, ExportError> {
    if graphs.len() != 2 {
        return Err(ExportError::Unsupported(format!("{} opponents", graphs.len().saturating_sub(1))));
    }
    let (robot, opp) = (&graphs[0], &graphs[1]);
    let mut out = String::from("// Reach-avoid query: Pmax=? [ !\"bad\" U \"goal\" ]\npomdp\n\nobservables r, t endobservables\n\n");
    let _ = writeln!(out, "global t : [0..1] init 0;");
    let _ = writeln!(out, "// Robot position r encodes cell index * 4 + heading (N, E, S, W).");
    let _ = writeln!(out, "formula rc = floor(r/4);");
    let mut vis_terms = Vec::new();
    for c in 0..opp.len() as u32 {
        let from = opp.location_of(c);
        let seen: Vec<String> = (0..opp.len() as u32)
            .filter(|&v| vis.sees(from, opp.location_of(v)))
            .map(|v| format!("o={v}"))
            .collect();
        vis_terms.push(format!("(rc={c} & ({}))", disjunction(seen.into_iter())));
    }
    let _ = writeln!(out, "formula visible = {};", disjunction(vis_terms.into_iter()));
    let _ = writeln!(out, "observable \"opponent\" = visible ? o : -1;\n");

    let _ = writeln!(out, "module robot\n  r : [0..{}] init {};", robot.len() - 1, robot.initial);
    for v in 0..robot.len() as u32 {
        for &(m, t) in robot.enabled(v) {
            let _ = writeln!(
                out,
                "  [{}] t=0 & r={v} -> {};",
                robot.movement_name(m),
                update("r", t as usize, " & (t'=1)")
            );
        }
    }
    let _ = writeln!(out, "endmodule\n\nmodule opponent\n  o : [0..{}] init {};", opp.len() - 1, opp.initial);
    let row = |v0: u32, v: u32| -> String {
        policy
            .row(opp, v0, v)
            .into_iter()
            .filter_map(|(m, p)| opp.effect(v, m).map(|t| format!("{p}:{}", update("o", t as usize, " & (t'=0)"))))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    match policy {
        OpponentPolicy::Uniform => {
            for v in 0..opp.len() as u32 {
                let _ = writeln!(out, "  [] t=1 & o={v} -> {};", row(robot.initial, v));
            }
        }
        OpponentPolicy::Table(_) => {
            for v0 in 0..robot.len() as u32 {
                for v in 0..opp.len() as u32 {
                    let _ = writeln!(out, "  [] t=1 & r={v0} & o={v} -> {};", row(v0, v));
                }
            }
        }
    }
    let _ = writeln!(out, "endmodule\n");
    let goal = disjunction(
        scenario
            .goal_cells
            .iter()
            .filter_map(|&c| opp.position_id(c, None))
            .map(|c| format!("rc={c}")),
    );
    let _ = writeln!(out, "label \"goal\" = {goal};\nlabel \"bad\" = rc=o & !({goal});");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{build_world_graphs, Cell};
    use crate::model::{Labels, ModelBuilder};

    #[test]
    fn game_without_players_is_rejected() {
        let mut b = ModelBuilder::new();
        b.start_row(0, Player::Unassigned, Labels::NONE).unwrap();
        b.add_choice("loop", &[(0, 1.0)]);
        assert!(matches!(emit_prism_pg(&b.finish(0)), Err(ExportError::Unsupported(_))));
    }

    #[test]
    fn emission_is_stable() {
        let g = crate::solver::random_game(8, 10);
        let a = emit_prism_pg(&g).unwrap();
        assert_eq!(a, emit_prism_pg(&g).unwrap());
        assert!(a.starts_with("// Reach-avoid"));
        assert!(a.contains("module player2"));

        let s = Scenario::open_room(3, 3, 1, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2));
        let graphs = build_world_graphs(&s).unwrap();
        let vis = VisibilityTable::new(&s);
        let p = emit_prism_pomdp(&s, &graphs, &vis, &OpponentPolicy::Uniform).unwrap();
        assert_eq!(p, emit_prism_pomdp(&s, &graphs, &vis, &OpponentPolicy::Uniform).unwrap());
        assert_eq!(p.matches("[forward]").count(), 24);
        assert!(p.contains("label \"goal\" = rc=8;"));
    }
}
