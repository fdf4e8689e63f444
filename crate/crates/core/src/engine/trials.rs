//! Randomized instance generation and the parallel identity suite.

use rayon::prelude::*;

use crate::analysis::revenue::{check_identity, StrategyProfile};
use crate::auction::{AuctionFormat, Family};
use crate::distributions::ValueDistribution;
use crate::error::Result;
use crate::quantile::QuantileStrategy;
use crate::rng::{replica_seed, SimRng};

/// A uniform prior on a random subinterval or a random piecewise-linear CDF.
pub fn random_prior(rng: &mut SimRng) -> ValueDistribution {
    if rng.coin() {
        let a = rng.uniform_in(0.0, 0.6);
        let b = rng.uniform_in(a + 0.1, 1.0);
        ValueDistribution::uniform(a, b).expect("non-degenerate support")
    } else {
        ValueDistribution::random_piecewise(rng)
    }
}

/// A validated random table, or occasionally a random standard family.
pub fn random_format(n: usize, k: usize, rng: &mut SimRng) -> Result<AuctionFormat> {
    if rng.below(5) == 0 {
        let fams = [Family::FirstPrice, Family::SecondPrice, Family::AllPay, Family::PostedPrice];
        AuctionFormat::standard(fams[rng.below(4)], n, k, rng.below(k + 1))
    } else {
        AuctionFormat::random_valid_table(n, k, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTrial {
    pub id: u64,
    pub n: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// One trial seeded by `replica_seed(seed, id)`.
pub fn identity_trial(seed: u64, id: u64, max_n: usize, max_k: usize) -> Result<IdentityTrial> {
    let mut rng = SimRng::seed_from(replica_seed(seed, id));
    let n = 1 + rng.below(max_n.max(1));
    let k = 1 + rng.below(max_k.max(1));
    let format = random_format(n, k, &mut rng)?;
    let dists: Vec<ValueDistribution> = (0..n).map(|_| random_prior(&mut rng)).collect();
    let profile = StrategyProfile::new((0..n).map(|_| QuantileStrategy::random(k + 1, &mut rng)).collect())?;
    let c = check_identity(&format, &profile, &dists)?;
    Ok(IdentityTrial { id, n, k, lhs: c.lhs, rhs: c.rhs, diff: c.diff })
}

pub fn identity_suite(trials: u64, max_n: usize, max_k: usize, seed: u64) -> Result<Vec<IdentityTrial>> {
    (0..trials).into_par_iter().map(|id| identity_trial(seed, id, max_n, max_k)).collect()
}
