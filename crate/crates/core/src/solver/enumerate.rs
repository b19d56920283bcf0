//! Exhaustive reference solutions for small models.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{induced_chain, SolverError, Strategy};
use crate::model::{ExplicitModel, Labels, ModelBuilder, Player};

/// Upper limit on strategy pairs visited by [`enumerate_optimal`].
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Reach-avoid probabilities of a Markov chain by a direct linear solve.
///
/// States that cannot reach a goal state get 0; the remaining system
/// `(I − A)x = b` is then nonsingular.
pub fn evaluate_mc_exact(mc: &ExplicitModel) -> Vec<f64> {
    let n = mc.num_states();
    let row = |s: usize| mc.transitions(mc.choices(s).start);
    let mut can_reach: Vec<bool> = mc.labels.iter().map(|l| l.goal).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can_reach[s] && !mc.labels[s].is_target() && row(s).any(|(t, _)| can_reach[t]) {
                can_reach[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can_reach[s] && !mc.labels[s].goal).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    let k = unknown.len();
    let mut out: Vec<f64> = mc.labels.iter().map(|l| if l.goal { 1.0 } else { 0.0 }).collect();
    if k == 0 {
        return out;
    }
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (i, &s) in unknown.iter().enumerate() {
        for (t, p) in row(s) {
            if mc.labels[t].goal {
                b[i] += p;
            } else if index[t] != usize::MAX {
                a[(i, index[t])] -= p;
            }
        }
    }
    let x = a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(k));
    for (i, &s) in unknown.iter().enumerate() {
        out[s] = x[i];
    }
    out
}

/// Value of the initial state by trying every memoryless deterministic
/// strategy pair: the maximum over Player-1 strategies of the minimum over
/// Player-2 strategies of the induced chain's exact value.
pub fn enumerate_optimal(pg: &ExplicitModel) -> Result<f64, SolverError> {
    let decisions = |who: Player| -> Vec<usize> {
        (0..pg.num_states())
            .filter(|&s| {
                let p = pg.players[s];
                let owner = if p == Player::Two { Player::Two } else { Player::One };
                owner == who && !pg.labels[s].is_target() && pg.choices(s).len() > 1
            })
            .collect()
    };
    let (p1, p2) = (decisions(Player::One), decisions(Player::Two));
    let count = |states: &[usize]| states.iter().map(|&s| pg.choices(s).len() as f64).product::<f64>();
    let combinations = count(&p1) * count(&p2);
    if combinations > ENUMERATION_LIMIT {
        return Err(SolverError::TooLarge {
            combinations,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut strategy = Strategy {
        choice: (0..pg.num_states()).map(|s| (pg.players[s] != Player::Two).then_some(0)).collect(),
        adversary_choice: (0..pg.num_states()).map(|s| (pg.players[s] == Player::Two).then_some(0)).collect(),
    };
    let mut best = f64::NEG_INFINITY;
    let mut odometer1 = vec![0usize; p1.len()];
    loop {
        for (i, &s) in p1.iter().enumerate() {
            strategy.choice[s] = Some(odometer1[i] as u32);
        }
        let mut worst = f64::INFINITY;
        let mut odometer2 = vec![0usize; p2.len()];
        loop {
            for (i, &s) in p2.iter().enumerate() {
                strategy.adversary_choice[s] = Some(odometer2[i] as u32);
            }
            let v = evaluate_mc_exact(&induced_chain(pg, &strategy))[pg.initial];
            worst = worst.min(v);
            if !advance(&mut odometer2, &p2, pg) {
                break;
            }
        }
        best = best.max(worst);
        if !advance(&mut odometer1, &p1, pg) {
            break;
        }
    }
    Ok(best)
}

fn advance(odometer: &mut [usize], states: &[usize], pg: &ExplicitModel) -> bool {
    for (digit, &s) in odometer.iter_mut().zip(states) {
        *digit += 1;
        if *digit < pg.choices(s).len() {
            return true;
        }
        *digit = 0;
    }
    false
}

/// A seeded random game with `size` undecided states followed by one
/// absorbing goal and one absorbing bad state. Each undecided state has one
/// to three choices over one to three successors.
pub fn random_game(seed: u64, size: usize) -> ExplicitModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size + 2;
    let mut b = ModelBuilder::new();
    for s in 0..size {
        let player = if rng.gen_bool(0.5) { Player::One } else { Player::Two };
        b.start_row(s, player, Labels::NONE).expect("rows in order");
        for a in 0..rng.gen_range(1..=3) {
            let mut row: Vec<(u32, f64)> = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let t = rng.gen_range(0..n) as u32;
                let w = rng.gen_range(1..=4) as f64;
                match row.iter_mut().find(|(x, _)| *x == t) {
                    Some(e) => e.1 += w,
                    None => row.push((t, w)),
                }
            }
            let total: f64 = row.iter().map(|(_, w)| w).sum();
            for e in &mut row {
                e.1 /= total;
            }
            b.add_choice(&format!("a{a}"), &row);
        }
    }
    b.start_row(size, Player::One, Labels { goal: true, bad: false }).expect("rows in order");
    b.add_choice("absorb", &[(size as u32, 1.0)]);
    b.start_row(size + 1, Player::One, Labels { goal: false, bad: true }).expect("rows in order");
    b.add_choice("absorb", &[(size as u32 + 1, 1.0)]);
    b.finish(0)
}
