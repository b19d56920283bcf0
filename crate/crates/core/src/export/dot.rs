//! Graphviz rendering of small models.

use std::fmt::Write;

use super::ExportError;
use crate::model::{ExplicitModel, Player};

pub const DEFAULT_MAX_STATES: usize = 5000;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Player-1 states are boxes, Player-2 states diamonds; goal states are
/// green and bad states red. Edges carry `action:probability`.
pub fn emit_dot(m: &ExplicitModel, max_states: usize) -> Result<String, ExportError> {
    if m.num_states() > max_states {
        return Err(ExportError::TooLarge {
            states: m.num_states(),
            limit: max_states,
        });
    }
    let mut out = String::from("digraph model {\n  node [fontname=\"monospace\"];\n");
    for s in 0..m.num_states() {
        let shape = match m.players[s] {
            Player::One => "box",
            Player::Two => "diamond",
            Player::Unassigned => "ellipse",
        };
        let l = m.labels[s];
        let mut attrs = format!("shape={shape}, label=\"{}\"", escape(&m.state_name(s)));
        if l.goal {
            attrs.push_str(", goal=true, style=filled, fillcolor=palegreen");
        } else if l.bad {
            attrs.push_str(", bad=true, style=filled, fillcolor=salmon");
        }
        if s == m.initial {
            attrs.push_str(", penwidth=2");
        }
        let _ = writeln!(out, "  s{s} [{attrs}];");
    }
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            for (t, p) in m.transitions(c) {
                let _ = writeln!(out, "  s{s} -> s{t} [label=\"{}:{p}\"];", escape(m.action_name(c)));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Labels, ModelBuilder};

    #[test]
    fn singleton_chain_has_one_node() {
        let mut b = ModelBuilder::new();
        b.start_row(0, Player::One, Labels { goal: true, bad: false }).unwrap();
        b.add_choice("loop", &[(0, 1.0)]);
        let text = emit_dot(&b.finish(0), 10).unwrap();
        assert_eq!(text.lines().filter(|l| l.contains("shape=")).count(), 1);
        assert!(text.contains("goal=true"));
    }

    #[test]
    fn size_limit_enforced() {
        let m = crate::solver::random_game(2, 20);
        assert_eq!(emit_dot(&m, 5).unwrap_err(), ExportError::TooLarge { states: 22, limit: 5 });
        assert_eq!(emit_dot(&m, 22).unwrap(), emit_dot(&m, 22).unwrap());
    }
}
