//! Monte Carlo collision estimate of the order-2 Rényi entropy.
//!
//! Two independent n-step trajectories collide with probability
//! Σ_x ν_n(x)², so the collision frequency estimates exp(−H₂(ν_n))
//! without ever materializing the distribution.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Measure, Value, WalkError};
use crate::coset::{CosetKey, SubgroupOracle};
use crate::group::Elem;

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEstimate {
    pub h2: f64,
    /// 95% normal-approximation interval for H₂.
    pub ci: (f64, f64),
    pub collisions: u64,
    pub trials: u64,
}

/// Runs `trials` paired n-step walks with a seed-determined RNG and turns
/// the collision frequency into an H₂ estimate. With zero collisions only
/// a lower bound is available and the call errors out with it.
pub fn mc_collision_renyi2<V: Value>(
    oracle: &SubgroupOracle,
    mu: &Measure<V>,
    n: u32,
    trials: u64,
    seed: u64,
) -> Result<CollisionEstimate, WalkError> {
    if trials < 1000 {
        return Err(WalkError::InsufficientData {
            need: 1000,
            got: trials as usize,
        });
    }
    let steps: Vec<(&Elem, f64)> = mu.support().map(|(g, w)| (g, w.to_f64())).collect();
    let cumulative: Vec<f64> = steps
        .iter()
        .scan(0.0, |acc, (_, w)| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let base = oracle.base_point()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut collisions = 0u64;
    for _ in 0..trials {
        let x = walk_once(oracle, &steps, &cumulative, &base, n, &mut rng)?;
        let y = walk_once(oracle, &steps, &cumulative, &base, n, &mut rng)?;
        if x == y {
            collisions += 1;
        }
    }
    if collisions == 0 {
        return Err(WalkError::ZeroCollisions {
            trials,
            lower_bound: (trials as f64).ln(),
        });
    }
    let p_hat = collisions as f64 / trials as f64;
    let half_width = 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    let lo_p = p_hat - half_width;
    let hi_p = (p_hat + half_width).min(1.0);
    let upper = if lo_p > 0.0 { -lo_p.ln() } else { f64::INFINITY };
    Ok(CollisionEstimate {
        h2: -p_hat.ln(),
        ci: (-hi_p.ln(), upper),
        collisions,
        trials,
    })
}

fn walk_once(
    oracle: &SubgroupOracle,
    steps: &[(&Elem, f64)],
    cumulative: &[f64],
    base: &CosetKey,
    n: u32,
    rng: &mut ChaCha8Rng,
) -> Result<CosetKey, WalkError> {
    let mut x = base.clone();
    for _ in 0..n {
        let u: f64 = rng.gen();
        let idx = cumulative.partition_point(|&c| c < u).min(steps.len() - 1);
        x = oracle.coset_act(steps[idx].0, &x)?;
    }
    Ok(x)
}
