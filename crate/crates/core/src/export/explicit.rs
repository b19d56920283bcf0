//! Line-oriented explicit model format.
//!
//! ```text
//! explicit-model 1
//! states <n>
//! initial <s>
//! action <id> <name>
//! observation <id> <name>          (only for partially observable models)
//! state <id> <player> <labels> <observation|-> [name]
//! transition <source> <choice> <action> <target> <probability>
//! ```
//!
//! `player` is `1`, `2` or `-`; `labels` is `goal`, `bad`, `goal,bad` or
//! `-`. Names run to the end of the line. Probabilities use the shortest
//! decimal that parses back to the same `f64`.

use std::fmt::Write;

use super::ExportError;
use crate::model::{ExplicitModel, Labels, Player};

const HEADER: &str = "explicit-model 1";

fn labels_token(l: Labels) -> &'static str {
    match (l.goal, l.bad) {
        (true, true) => "goal,bad",
        (true, false) => "goal",
        (false, true) => "bad",
        (false, false) => "-",
    }
}

pub fn emit_explicit(m: &ExplicitModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "states {}", m.num_states());
    let _ = writeln!(out, "initial {}", m.initial);
    for (i, a) in m.action_names.iter().enumerate() {
        let _ = writeln!(out, "action {i} {a}");
    }
    if m.observations.is_some() {
        let _ = writeln!(out, "observations {}", m.observation_names.len());
        for (i, o) in m.observation_names.iter().enumerate() {
            let _ = writeln!(out, "observation {i} {o}");
        }
    }
    let _ = writeln!(out, "names {}", if m.state_names.is_some() { "yes" } else { "no" });
    for s in 0..m.num_states() {
        let obs = m.observations.as_ref().map_or("-".to_string(), |o| o[s].to_string());
        let _ = write!(out, "state {s} {} {} {obs}", m.players[s].tag(), labels_token(m.labels[s]));
        if let Some(names) = &m.state_names {
            let _ = write!(out, " {}", names[s]);
        }
        out.push('\n');
        for (k, c) in m.choices(s).enumerate() {
            for (t, p) in m.transitions(c) {
                let _ = writeln!(out, "transition {s} {k} {} {t} {p:?}", m.choice_action[c]);
            }
        }
    }
    out
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> ExportError {
        ExportError::Parse {
            line: self.line,
            message: msg.into(),
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T, ExportError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| self.err(format!("expected {what} in `{}`", self.text)))
    }
}

/// Splits off `n` whitespace-separated fields and returns them with the
/// remainder of the line (which may contain spaces).
fn fields(text: &str, n: usize) -> (Vec<&str>, Option<&str>) {
    let mut out = Vec::with_capacity(n);
    let mut rest = text;
    for _ in 0..n {
        rest = rest.trim_start_matches(' ');
        if rest.is_empty() {
            break;
        }
        let end = rest.find(' ').unwrap_or(rest.len());
        out.push(&rest[..end]);
        rest = &rest[end..];
    }
    let rest = rest.strip_prefix(' ');
    (out, rest)
}

pub fn parse_explicit(text: &str) -> Result<ExplicitModel, ExportError> {
    let mut lines = text.lines().enumerate().map(|(i, t)| Cursor { line: i + 1, text: t });
    let first = lines.next().ok_or(ExportError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    if first.text != HEADER {
        return Err(first.err(format!("expected `{HEADER}`")));
    }
    let mut m = ExplicitModel {
        players: Vec::new(),
        labels: Vec::new(),
        initial: 0,
        row_start: vec![0],
        choice_action: Vec::new(),
        choice_start: vec![0],
        targets: Vec::new(),
        probs: Vec::new(),
        action_names: Vec::new(),
        observations: None,
        observation_names: Vec::new(),
        state_names: None,
    };
    let mut declared_states = None;
    let mut observations: Vec<u32> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut with_names = false;
    // (state, local choice) of the last transition row.
    let mut last: Option<(usize, usize)> = None;
    for cur in lines {
        if cur.text.is_empty() {
            continue;
        }
        let (head, rest) = fields(cur.text, 1);
        let rest = rest.unwrap_or("");
        match head.first().copied() {
            Some("states") => declared_states = Some(cur.num::<usize>(Some(rest), "state count")?),
            Some("initial") => m.initial = cur.num(Some(rest), "initial state")?,
            Some("action") => {
                let (f, name) = fields(rest, 1);
                let id: usize = cur.num(f.first().copied(), "action id")?;
                if id != m.action_names.len() {
                    return Err(cur.err("action ids must be consecutive"));
                }
                m.action_names.push(name.unwrap_or("").to_string());
            }
            Some("observations") => {
                m.observations = Some(Vec::new());
            }
            Some("observation") => {
                let (f, name) = fields(rest, 1);
                let id: usize = cur.num(f.first().copied(), "observation id")?;
                if id != m.observation_names.len() {
                    return Err(cur.err("observation ids must be consecutive"));
                }
                m.observation_names.push(name.unwrap_or("").to_string());
            }
            Some("names") => with_names = rest == "yes",
            Some("state") => {
                let (f, name) = fields(rest, 4);
                if f.len() != 4 {
                    return Err(cur.err("state rows need id, player, labels, observation"));
                }
                let id: usize = cur.num(Some(f[0]), "state id")?;
                if id != m.players.len() {
                    return Err(cur.err("state ids must be consecutive"));
                }
                if id > 0 {
                    m.row_start.push(m.choice_action.len());
                }
                m.players.push(Player::from_tag(f[1]).ok_or_else(|| cur.err("bad player tag"))?);
                m.labels.push(match f[2] {
                    "-" => Labels::NONE,
                    "goal" => Labels { goal: true, bad: false },
                    "bad" => Labels { goal: false, bad: true },
                    "goal,bad" => Labels { goal: true, bad: true },
                    _ => return Err(cur.err("bad labels")),
                });
                if m.observations.is_some() {
                    observations.push(cur.num(Some(f[3]), "observation id")?);
                } else if f[3] != "-" {
                    return Err(cur.err("observation given for a fully observable model"));
                }
                if with_names {
                    names.push(name.unwrap_or("").to_string());
                }
                last = None;
            }
            Some("transition") => {
                let (f, _) = fields(rest, 5);
                if f.len() != 5 {
                    return Err(cur.err("transition rows need source, choice, action, target, probability"));
                }
                let s: usize = cur.num(Some(f[0]), "source")?;
                let k: usize = cur.num(Some(f[1]), "choice index")?;
                let a: u32 = cur.num(Some(f[2]), "action id")?;
                let t: u32 = cur.num(Some(f[3]), "target")?;
                let p: f64 = cur.num(Some(f[4]), "probability")?;
                if s + 1 != m.players.len() {
                    return Err(cur.err("transition outside its state block"));
                }
                let local = m.choice_action.len() - m.row_start[s];
                match last {
                    Some((ls, lk)) if ls == s && lk == k => {}
                    _ => {
                        if k != local {
                            return Err(cur.err("choice indices must be consecutive"));
                        }
                        if !m.choice_action.is_empty() {
                            m.choice_start.push(m.targets.len());
                        }
                        m.choice_action.push(a);
                    }
                }
                if *m.choice_action.last().expect("choice pushed") != a {
                    return Err(cur.err("action changes within a choice"));
                }
                m.targets.push(t);
                m.probs.push(p);
                last = Some((s, k));
            }
            _ => return Err(cur.err(format!("unknown record `{}`", cur.text))),
        }
    }
    if !m.choice_action.is_empty() {
        m.choice_start.push(m.targets.len());
    }
    m.row_start.push(m.choice_action.len());
    if let Some(n) = declared_states {
        if n != m.players.len() {
            return Err(ExportError::Parse {
                line: 0,
                message: format!("declared {n} states, found {}", m.players.len()),
            });
        }
    }
    if m.observations.is_some() {
        m.observations = Some(observations);
    }
    if with_names {
        m.state_names = Some(names);
    }
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;
    use crate::solver::random_game;
    use proptest::prelude::*;

    #[test]
    fn single_state_chain() {
        let mut b = ModelBuilder::new();
        b.start_row(0, Player::One, Labels::NONE).unwrap();
        b.add_choice("loop", &[(0, 1.0)]);
        let m = b.finish(0);
        let text = emit_explicit(&m);
        assert_eq!(text.lines().filter(|l| l.starts_with("state ")).count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("transition ")).count(), 1);
        assert_eq!(parse_explicit(&text).unwrap(), m);
    }

    #[test]
    fn names_and_observations_survive() {
        let mut m = random_game(4, 6);
        m.state_names = Some((0..m.num_states()).map(|s| format!("r(0,{s},E)|far|t0 x")).collect());
        m.observations = Some((0..m.num_states() as u32).collect());
        m.observation_names = (0..m.num_states()).map(|s| if s == 1 { String::new() } else { format!("o {s}") }).collect();
        assert_eq!(parse_explicit(&emit_explicit(&m)).unwrap(), m);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = emit_explicit(&random_game(1, 3)).replace("state 1 ", "state 7 ");
        assert!(matches!(parse_explicit(&text), Err(ExportError::Parse { .. })));
        assert!(parse_explicit("nonsense").is_err());
        let bad_prob = emit_explicit(&random_game(1, 3)).replacen("transition 0 0 0 ", "transition 0 0 0 x", 1);
        assert!(parse_explicit(&bad_prob).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(seed in any::<u64>(), size in 1usize..30) {
            let m = random_game(seed, size);
            prop_assert_eq!(parse_explicit(&emit_explicit(&m)).unwrap(), m);
        }
    }
}
