//! Random valid [`GameParams`] for randomized theorem checks.
//!
//! Powers are positive random integers normalised to sum to one; draws that
//! give some node at least `t` are rejected and redrawn. Rewards are
//! integers over a small random denominator, repaired into the required
//! ordering (`R_d < R_h`, `R_h < R_m`, `R_d' < R_m`, `R_h > 0`).

use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{validate_params, GameParams, PowerDistribution};
use crate::rational::{ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Largest integer weight used when drawing powers.
    pub max_weight: u32,
    /// Rewards are drawn from `[-reward_range, reward_range]` before repair.
    pub reward_range: i64,
    /// Lets `R_d` reach or exceed `R_h`. Only for mutation testing.
    pub corrupt_deviant_reward: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_min: 3,
            n_max: 8,
            max_weight: 20,
            reward_range: 20,
            corrupt_deviant_reward: false,
        }
    }
}

const MAX_POWER_ATTEMPTS: usize = 10_000;

/// Draws one parameter set. Unless the corruption flag is set the result
/// always passes [`validate_params`].
pub fn random_params<R: Rng>(rng: &mut R, config: &GeneratorConfig) -> GameParams {
    let n = rng.gen_range(config.n_min.max(3)..=config.n_max.max(config.n_min.max(3)));
    // t = 1/2 half the time so the boundary V = t is exercised often.
    let threshold = if rng.gen_bool(0.5) {
        ratio(1, 2)
    } else {
        ratio(20 + rng.gen_range(1..=10), 40)
    };
    let powers = random_powers(rng, n, config.max_weight, &threshold);

    let mut r_h = Vec::with_capacity(n);
    let mut r_d = Vec::with_capacity(n);
    let mut r_m = Vec::with_capacity(n);
    let mut r_dp = Vec::with_capacity(n);
    let range = config.reward_range.max(2);
    for _ in 0..n {
        let den = rng.gen_range(1..=4);
        let step = ratio(1, den);
        let draw = |rng: &mut R, lo: i64, hi: i64| ratio(rng.gen_range(lo..=hi), den);

        let honest = draw(rng, 1, range);
        let mut deviant = draw(rng, -range, range);
        if config.corrupt_deviant_reward {
            if deviant < honest {
                deviant = &honest + draw(rng, 0, range);
            }
        } else if deviant >= honest {
            deviant = &honest - &step - draw(rng, 0, range);
        }
        let mut malicious = draw(rng, 1, 2 * range);
        if malicious <= honest {
            malicious = &honest + &step + draw(rng, 0, range);
        }
        let mut deviant_vs_malicious = draw(rng, -range, range);
        if deviant_vs_malicious >= malicious {
            deviant_vs_malicious = &malicious - &step - draw(rng, 0, range);
        }
        r_h.push(honest);
        r_d.push(deviant);
        r_m.push(malicious);
        r_dp.push(deviant_vs_malicious);
    }

    let params = GameParams {
        powers,
        threshold,
        reward_honest: r_h,
        reward_deviant: r_d,
        reward_malicious: r_m,
        reward_deviant_vs_malicious: r_dp,
    };
    debug_assert!(config.corrupt_deviant_reward || validate_params(&params).is_empty());
    params
}

fn random_powers<R: Rng>(
    rng: &mut R,
    n: usize,
    max_weight: u32,
    t: &Rational,
) -> PowerDistribution {
    let max_weight = max_weight.max(2);
    for _ in 0..MAX_POWER_ATTEMPTS {
        let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=max_weight)).collect();
        let total: u64 = weights.iter().map(|&w| u64::from(w)).sum();
        let powers: Vec<Rational> = weights
            .iter()
            .map(|&w| Rational::new(BigInt::from(w), BigInt::from(total)))
            .collect();
        if powers.iter().all(|v| v < t) {
            return PowerDistribution::new_unchecked(powers);
        }
    }
    // n ≥ 3 equal shares are always below t ≥ 1/2.
    PowerDistribution::new_unchecked(vec![ratio(1, n as i64); n])
}
