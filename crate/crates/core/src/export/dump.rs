//! Text dump of a lifted strategy: one `decoration -> action` row per
//! abstract state, preceded by `#` header lines that record how the
//! abstraction was built.

use std::collections::BTreeMap;

use super::ExportError;
use crate::abstraction::{MemberSet, Refinement};
use crate::gridworld::Cell;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyDump {
    pub refinement: Refinement,
    pub members: MemberSet,
    pub scenario_digest: String,
    pub regions: Option<Vec<Vec<Cell>>>,
    pub actions: BTreeMap<String, String>,
    /// Row order as written.
    pub order: Vec<String>,
}

impl StrategyDump {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# refinement {}\n# members {}\n# scenario {}\n",
            self.refinement,
            self.members.name(),
            self.scenario_digest
        );
        if let Some(blocks) = &self.regions {
            let b: Vec<String> = blocks
                .iter()
                .map(|cells| cells.iter().map(|c| format!("{},{}", c.x, c.y)).collect::<Vec<_>>().join(" "))
                .collect();
            out.push_str(&format!("# regions {}\n", b.join(";")));
        }
        for d in &self.order {
            out.push_str(&format!("{} -> {}\n", d, self.actions[d]));
        }
        out
    }

    pub fn parse(text: &str) -> Result<StrategyDump, ExportError> {
        let err = |line: usize, message: &str| ExportError::Parse {
            line,
            message: message.to_string(),
        };
        let mut refinement = None;
        let mut members = MemberSet::default();
        let mut digest = String::new();
        let mut regions = None;
        let mut actions = BTreeMap::new();
        let mut order = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if let Some(h) = line.strip_prefix("# ") {
                let (key, value) = h.split_once(' ').unwrap_or((h, ""));
                match key {
                    "refinement" => refinement = Some(Refinement::parse(value).ok_or_else(|| err(n, "unknown refinement"))?),
                    "members" => members = MemberSet::parse(value).ok_or_else(|| err(n, "unknown member set"))?,
                    "scenario" => digest = value.to_string(),
                    "regions" => {
                        let mut blocks = Vec::new();
                        for block in value.split(';') {
                            let mut cells = Vec::new();
                            for c in block.split_whitespace() {
                                let (x, y) = c.split_once(',').ok_or_else(|| err(n, "bad region cell"))?;
                                let x = x.parse().map_err(|_| err(n, "bad region cell"))?;
                                let y = y.parse().map_err(|_| err(n, "bad region cell"))?;
                                cells.push(Cell::new(x, y));
                            }
                            blocks.push(cells);
                        }
                        regions = Some(blocks);
                    }
                    _ => return Err(err(n, "unknown header")),
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (d, a) = line.split_once(" -> ").ok_or_else(|| err(n, "expected `state -> action`"))?;
            if actions.insert(d.to_string(), a.to_string()).is_some() {
                return Err(err(n, "duplicate state"));
            }
            order.push(d.to_string());
        }
        Ok(StrategyDump {
            refinement: refinement.ok_or_else(|| err(0, "missing refinement header"))?,
            members,
            scenario_digest: digest,
            regions,
            actions,
            order,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut actions = BTreeMap::new();
        actions.insert("r(0,0,E)|far|t0".to_string(), "forward".to_string());
        actions.insert("r(1,0,E)|o(2,2)|t1".to_string(), "opponent".to_string());
        let d = StrategyDump {
            refinement: Refinement::Regions,
            members: MemberSet::Reachable,
            scenario_digest: "abc".into(),
            regions: Some(vec![vec![Cell::new(0, 0), Cell::new(1, 0)], vec![Cell::new(0, 1)]]),
            order: actions.keys().cloned().collect(),
            actions,
        };
        assert_eq!(StrategyDump::parse(&d.to_text()).unwrap(), d);
        assert!(StrategyDump::parse("x -> y\n").is_err());
        assert!(StrategyDump::parse("# refinement none\nno arrow\n").is_err());
    }
}
