//! Seeded fixtures shared by the benchmarks.

use quantbid_core::analysis::StrategyProfile;
use quantbid_core::{AuctionFormat, Family, QuantileStrategy, SimRng, ValueDistribution};

pub struct Fixture {
    pub format: AuctionFormat,
    pub profile: StrategyProfile,
    pub dists: Vec<ValueDistribution>,
}

/// First-price auction with iid uniform priors and random strategies.
pub fn fixture(n: usize, k: usize, seed: u64) -> Fixture {
    let mut rng = SimRng::seed_from(seed);
    let format = AuctionFormat::standard(Family::FirstPrice, n, k, k / 4).expect("valid size");
    let profile = StrategyProfile::new((0..n).map(|_| QuantileStrategy::random(k + 1, &mut rng)).collect()).expect("same levels");
    let dists = vec![ValueDistribution::uniform(0.0, 1.0).expect("unit interval"); n];
    Fixture { format, profile, dists }
}

/// Reward vectors in `[-1, 1]`.
pub fn rewards(levels: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SimRng::seed_from(seed);
    (0..count).map(|_| (0..levels).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect()
}
