//! Region partitions of the opponent's cells.

use crate::gridworld::{validate_regions, Cell, Scenario, ScenarioError, WorldGraph};

/// Disjoint blocks covering every free cell, with block adjacency induced by
/// opponent moves.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    pub blocks: Vec<Vec<Cell>>,
    /// Opponent positions per block.
    pub members: Vec<Vec<u32>>,
    /// Block of each opponent position.
    pub block_of: Vec<u32>,
    /// Sorted neighbor blocks (excluding the block itself).
    pub adjacency: Vec<Vec<u32>>,
}

impl RegionPartition {
    pub fn new(scenario: &Scenario, blocks: Vec<Vec<Cell>>, opponent: &WorldGraph) -> Result<Self, ScenarioError> {
        validate_regions(scenario, &blocks)?;
        let mut block_of = vec![u32::MAX; opponent.len()];
        let mut members = vec![Vec::new(); blocks.len()];
        for (b, cells) in blocks.iter().enumerate() {
            for &c in cells {
                let v = opponent.position_id(c, None).expect("validated free cell");
                block_of[v as usize] = b as u32;
                members[b].push(v);
            }
            members[b].sort_unstable();
        }
        let mut adjacency = vec![Vec::new(); blocks.len()];
        for v in 0..opponent.len() as u32 {
            let a = block_of[v as usize];
            for &(_, t) in opponent.enabled(v) {
                let b = block_of[t as usize];
                if a != b {
                    adjacency[a as usize].push(b);
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(RegionPartition {
            blocks,
            members,
            block_of,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Flagged blocks plus all their neighbors.
    pub fn expand(&self, flags: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = flags.to_vec();
        for &b in flags {
            out.extend_from_slice(&self.adjacency[b as usize]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// One block holding every free cell.
pub fn single_block(scenario: &Scenario) -> Vec<Vec<Cell>> {
    vec![scenario.free_cells()]
}

/// One block per free cell.
pub fn singletons(scenario: &Scenario) -> Vec<Vec<Cell>> {
    scenario.free_cells().into_iter().map(|c| vec![c]).collect()
}

/// Horizontal stripes of `rows` grid rows each (free cells only); stripes
/// without free cells are dropped.
pub fn row_stripes(scenario: &Scenario, rows: usize) -> Vec<Vec<Cell>> {
    let rows = rows.max(1);
    let mut out: Vec<Vec<Cell>> = Vec::new();
    for y0 in (0..scenario.height).step_by(rows) {
        let block: Vec<Cell> = scenario
            .free_cells()
            .into_iter()
            .filter(|c| c.y >= y0 && c.y < y0 + rows)
            .collect();
        if !block.is_empty() {
            out.push(block);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::build_opponent_graph;

    #[test]
    fn stripes_and_adjacency() {
        let s = Scenario::open_room(4, 7, 3, Cell::new(0, 0), Cell::new(3, 6), Cell::new(3, 6));
        let g = build_opponent_graph(&s, 1).unwrap();
        let p = RegionPartition::new(&s, row_stripes(&s, 3), &g).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.blocks[2].len(), 4);
        assert_eq!(p.adjacency, vec![vec![1], vec![0, 2], vec![1]]);
        assert_eq!(p.expand(&[0]), vec![0, 1]);
        assert_eq!(p.expand(&[1]), vec![0, 1, 2]);
        // Every move stays in a block or crosses to an adjacent one.
        for v in 0..g.len() as u32 {
            for &(_, t) in g.enabled(v) {
                let (a, b) = (p.block_of[v as usize], p.block_of[t as usize]);
                assert!(a == b || p.adjacency[a as usize].contains(&b));
            }
        }
    }

    #[test]
    fn partition_must_cover() {
        let s = Scenario::open_room(2, 2, 3, Cell::new(0, 0), Cell::new(1, 1), Cell::new(1, 1));
        let g = build_opponent_graph(&s, 1).unwrap();
        assert!(RegionPartition::new(&s, vec![vec![Cell::new(0, 0)]], &g).is_err());
        assert_eq!(RegionPartition::new(&s, singletons(&s), &g).unwrap().len(), 4);
        assert_eq!(RegionPartition::new(&s, single_block(&s), &g).unwrap().adjacency, vec![Vec::<u32>::new()]);
    }
}
