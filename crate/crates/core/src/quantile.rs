//! Quantile strategies and their induced monotone bidding strategies.
//!
//! A quantile strategy `π` puts mass `π_j` on the `j`-th quantile interval of
//! the bidder's prior, and the induced strategy bids `j/K` (0-based) for every
//! value in that interval. Utility and gradient are evaluated exactly through
//! the quantile integral `G(q) = ∫₀^q F⁻¹(z) dz`.

use crate::auction::{AuctionFormat, OwnBidCurve};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Absolute tolerance on the simplex constraints.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileStrategy {
    weights: Vec<f64>,
}

impl QuantileStrategy {
    /// Accepts weights within [`SIMPLEX_TOL`] of the simplex and renormalizes.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidStrategy(format!("need at least 2 levels, got {}", weights.len())));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidStrategy(format!("weight {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|&w| w < -SIMPLEX_TOL) {
            return Err(Error::InvalidStrategy(format!("weight {i} = {} is negative", weights[i])));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidStrategy(format!("weights sum to {total}")));
        }
        let mut weights: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    /// For weights already known to be on the simplex.
    pub(crate) fn new_unchecked(weights: Vec<f64>) -> Self {
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Self { weights }
    }

    pub fn uniform(levels: usize) -> Self {
        Self { weights: vec![1.0 / levels as f64; levels] }
    }

    /// All mass on one bid level.
    pub fn point(levels: usize, index: usize) -> Self {
        let mut weights = vec![0.0; levels];
        weights[index] = 1.0;
        Self { weights }
    }

    /// The strategy that always bids zero, `e = (1, 0, …, 0)`.
    pub fn zero_bid(levels: usize) -> Self {
        Self::point(levels, 0)
    }

    /// Uniformly random point of the simplex.
    pub fn random(levels: usize, rng: &mut SimRng) -> Self {
        let draws: Vec<f64> = (0..levels).map(|_| rng.exponential()).collect();
        let total: f64 = draws.iter().sum();
        Self { weights: draws.into_iter().map(|d| d / total).collect() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn levels(&self) -> usize {
        self.weights.len()
    }

    pub fn k(&self) -> usize {
        self.weights.len() - 1
    }

    /// Inclusive partial sums `τ_j`, with the last forced to exactly 1.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut tau: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc.min(1.0)
            })
            .collect();
        *tau.last_mut().unwrap() = 1.0;
        tau
    }

    /// Mass strictly above each level: `Σ_{k>j} π_k`.
    pub fn upper_tails(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.levels()];
        for j in (0..self.levels() - 1).rev() {
            tails[j] = tails[j + 1] + self.weights[j + 1];
        }
        tails
    }
}

/// Threshold strategy: bids level 0 on `[0, θ_0]` and level `j` on `(θ_{j-1}, θ_j]`
/// (0-based). Values above the last threshold bid the top level.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneBiddingStrategy {
    thresholds: Vec<f64>,
}

impl MonotoneBiddingStrategy {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidStrategy("need at least 2 thresholds".into()));
        }
        if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidStrategy("thresholds must lie in [0, 1]".into()));
        }
        if thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidStrategy("thresholds must be non-decreasing".into()));
        }
        Ok(Self { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn k(&self) -> usize {
        self.thresholds.len() - 1
    }

    /// 0-based index of the bid level for value `v`.
    pub fn bid_of(&self, v: f64) -> usize {
        // First threshold at or above v; everything above the last bids the top.
        self.thresholds.partition_point(|&t| t < v).min(self.k())
    }
}

pub fn induce_strategy(pi: &QuantileStrategy, dist: &ValueDistribution) -> MonotoneBiddingStrategy {
    let thresholds = pi.partial_sums().into_iter().map(|t| dist.quantile(t)).collect();
    MonotoneBiddingStrategy { thresholds }
}

/// Successive CDF increments of the thresholds; the top level absorbs the remainder.
pub fn strategy_to_quantile(s: &MonotoneBiddingStrategy, dist: &ValueDistribution) -> QuantileStrategy {
    let k = s.k();
    let mut weights = Vec::with_capacity(k + 1);
    let mut prev = 0.0;
    for (j, &t) in s.thresholds.iter().enumerate() {
        let c = if j == k { 1.0 } else { dist.cdf(t).max(prev) };
        weights.push(c - prev);
        prev = c;
    }
    QuantileStrategy { weights }
}

fn check_levels(pi: &QuantileStrategy, curve: &OwnBidCurve) {
    assert_eq!(pi.levels(), curve.levels(), "strategy and curve have different grids");
}

/// `q(π)` against a fixed own-bid curve.
pub fn utility_on_curve(pi: &QuantileStrategy, dist: &ValueDistribution, curve: &OwnBidCurve) -> f64 {
    check_levels(pi, curve);
    let mut g_prev = 0.0;
    let mut total = 0.0;
    for (j, tau) in pi.partial_sums().into_iter().enumerate() {
        let g = dist.quantile_integral(tau);
        total += curve.allocation[j] * (g - g_prev) - curve.payment[j] * pi.weights[j];
        g_prev = g;
    }
    total
}

/// `∇q(π)` against a fixed own-bid curve, with the top term taken as `x(1)`.
pub fn gradient_on_curve(pi: &QuantileStrategy, dist: &ValueDistribution, curve: &OwnBidCurve) -> Vec<f64> {
    check_levels(pi, curve);
    let k = pi.k();
    let tau = pi.partial_sums();
    let x = &curve.allocation;
    let mut grad = vec![0.0; k + 1];
    let mut suffix = 0.0;
    for j in (0..=k).rev() {
        if j < k {
            suffix += (x[j] - x[j + 1]) * dist.quantile(tau[j]);
        }
        grad[j] = suffix + x[k] - curve.payment[j];
    }
    grad
}

fn bidder_curve(
    pi: &QuantileStrategy,
    format: &AuctionFormat,
    bidder: usize,
    opp_bids: &[usize],
) -> Result<OwnBidCurve> {
    if pi.k() != format.k() {
        return Err(Error::DimensionMismatch { expected: format.k() + 1, actual: pi.levels() });
    }
    format.own_bid_curve(bidder, opp_bids)
}

/// Quantile utility of `bidder` when the others bid `opp_bids` (in bidder order).
pub fn quantile_utility(
    pi: &QuantileStrategy,
    dist: &ValueDistribution,
    format: &AuctionFormat,
    bidder: usize,
    opp_bids: &[usize],
) -> Result<f64> {
    Ok(utility_on_curve(pi, dist, &bidder_curve(pi, format, bidder, opp_bids)?))
}

pub fn quantile_gradient(
    pi: &QuantileStrategy,
    dist: &ValueDistribution,
    format: &AuctionFormat,
    bidder: usize,
    opp_bids: &[usize],
) -> Result<Vec<f64>> {
    Ok(gradient_on_curve(pi, dist, &bidder_curve(pi, format, bidder, opp_bids)?))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::Family;
    use proptest::prelude::*;

    fn u01() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn pi(w: &[f64]) -> QuantileStrategy {
        QuantileStrategy::new(w.to_vec()).unwrap()
    }

    #[test]
    fn strategy_construction() {
        assert!(QuantileStrategy::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(QuantileStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(QuantileStrategy::new(vec![1.1, -0.1]).is_err());
        let s = pi(&[0.25, 0.25, 0.5]);
        assert_eq!(s.partial_sums(), vec![0.25, 0.5, 1.0]);
        assert_eq!(s.upper_tails(), vec![0.75, 0.5, 0.0]);
    }

    #[test]
    fn induce_examples() {
        let s = induce_strategy(&pi(&[0.5, 0.25, 0.25]), &u01());
        assert_eq!(s.thresholds(), &[0.5, 0.75, 1.0]);
        let e = induce_strategy(&QuantileStrategy::zero_bid(4), &u01());
        assert!(e.thresholds().iter().all(|&t| t == 1.0));
        assert!((0..=10).all(|i| e.bid_of(i as f64 / 10.0) == 0));
        let narrow = ValueDistribution::uniform(0.99, 1.0).unwrap();
        let s = induce_strategy(&pi(&[0.5, 0.5]), &narrow);
        assert!((s.thresholds()[0] - 0.995).abs() < 1e-12 && s.thresholds()[1] == 1.0);
    }

    #[test]
    fn bid_of_examples() {
        let s = MonotoneBiddingStrategy::new(vec![0.5, 0.75, 1.0]).unwrap();
        assert_eq!(s.bid_of(0.5), 0);
        assert_eq!(s.bid_of(0.7), 1);
        assert_eq!(s.bid_of(0.75), 1);
        assert_eq!(s.bid_of(0.9), 2);
        let grid: Vec<usize> = (0..=1000).map(|i| s.bid_of(i as f64 / 1000.0)).collect();
        assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn strategy_to_quantile_examples() {
        let s = MonotoneBiddingStrategy::new(vec![0.5, 0.75, 1.0]).unwrap();
        let q = strategy_to_quantile(&s, &u01());
        for (a, b) in q.weights().iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let zero = MonotoneBiddingStrategy::new(vec![1.0; 3]).unwrap();
        assert_eq!(strategy_to_quantile(&zero, &u01()).weights(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn utility_examples() {
        let fp = AuctionFormat::standard(Family::FirstPrice, 1, 2, 0).unwrap();
        let u = quantile_utility(&pi(&[0.5, 0.25, 0.25]), &u01(), &fp, 0, &[]).unwrap();
        // E[v] minus expected bid: 0.5 - (0.25 * 0.5 + 0.25 * 1).
        assert!((u - 0.125).abs() < 1e-15);
        let fp_r = AuctionFormat::standard(Family::FirstPrice, 1, 2, 1).unwrap();
        let u = quantile_utility(&QuantileStrategy::zero_bid(3), &u01(), &fp_r, 0, &[]).unwrap();
        assert_eq!(u, 0.0);
        let fp2 = AuctionFormat::standard(Family::FirstPrice, 2, 2, 0).unwrap();
        let u = quantile_utility(&QuantileStrategy::zero_bid(3), &u01(), &fp2, 0, &[0]).unwrap();
        assert!((u - 0.25).abs() < 1e-15);
        assert!(matches!(
            quantile_utility(&QuantileStrategy::zero_bid(3), &u01(), &fp2, 0, &[]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let fp = AuctionFormat::standard(Family::FirstPrice, 1, 2, 0).unwrap();
        let mut rng = SimRng::seed_from(3);
        for _ in 0..20 {
            let g = quantile_gradient(&QuantileStrategy::random(3, &mut rng), &u01(), &fp, 0, &[]).unwrap();
            assert_eq!(g, vec![1.0, 0.5, 0.0]);
        }
        let null = AuctionFormat::null(1, 4).unwrap();
        assert_eq!(quantile_gradient(&QuantileStrategy::uniform(5), &u01(), &null, 0, &[]).unwrap(), vec![0.0; 5]);
    }

    fn smooth_priors() -> Vec<ValueDistribution> {
        vec![
            u01(),
            ValueDistribution::uniform(0.2, 0.9).unwrap(),
            ValueDistribution::truncated_exponential(3.0, 0.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn directional_finite_difference() {
        let mut rng = SimRng::seed_from(11);
        let h = 1e-5;
        for trial in 0..300 {
            let dist = &smooth_priors()[trial % 3];
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(5);
            let format = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            let bidder = rng.below(n);
            let opp: Vec<usize> = (1..n).map(|_| rng.below(k + 1)).collect();
            // Interior point with margin so the perturbation stays feasible.
            let base = QuantileStrategy::random(k + 1, &mut rng);
            let w: Vec<f64> = base.weights().iter().map(|w| 0.5 * w + 0.5 / (k + 1) as f64).collect();
            let p = QuantileStrategy::new(w.clone()).unwrap();
            let mut d: Vec<f64> = (0..=k).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter_mut().for_each(|x| *x -= mean);
            let shift = |s: f64| -> QuantileStrategy {
                QuantileStrategy { weights: w.iter().zip(&d).map(|(a, b)| a + s * b).collect() }
            };
            let curve = format.own_bid_curve(bidder, &opp).unwrap();
            let fd = (utility_on_curve(&shift(h), dist, &curve) - utility_on_curve(&shift(-h), dist, &curve)) / (2.0 * h);
            let g = gradient_on_curve(&p, dist, &curve);
            assert!((fd - dot(&g, &d)).abs() < 1e-6, "trial {trial}: fd {fd} vs {}", dot(&g, &d));
        }
    }

    #[test]
    fn gradient_bounds_and_telescoping() {
        let mut rng = SimRng::seed_from(12);
        let priors = smooth_priors();
        for trial in 0..1000 {
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(5);
            let format = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            let bidder = rng.below(n);
            let opp: Vec<usize> = (1..n).map(|_| rng.below(k + 1)).collect();
            let curve = format.own_bid_curve(bidder, &opp).unwrap();
            let dist = &priors[trial % priors.len()];
            let g = gradient_on_curve(&QuantileStrategy::random(k + 1, &mut rng), dist, &curve);
            assert!(g.iter().all(|c| (-1.0..=1.0).contains(c)), "{g:?}");
            assert_eq!(g[k], curve.allocation[k] - curve.payment[k]);
            assert_eq!(curve.payment[0], 0.0);
        }
    }

    #[test]
    fn concavity() {
        let mut rng = SimRng::seed_from(13);
        for trial in 0..500 {
            let dist = if trial % 2 == 0 {
                u01()
            } else {
                ValueDistribution::random_piecewise(&mut rng)
            };
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(5);
            let format = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            let opp: Vec<usize> = (1..n).map(|_| rng.below(k + 1)).collect();
            let curve = format.own_bid_curve(0, &opp).unwrap();
            let a = QuantileStrategy::random(k + 1, &mut rng);
            let b = QuantileStrategy::random(k + 1, &mut rng);
            let mid = QuantileStrategy {
                weights: a.weights().iter().zip(b.weights()).map(|(x, y)| 0.5 * (x + y)).collect(),
            };
            let lhs = utility_on_curve(&mid, &dist, &curve);
            let rhs = 0.5 * (utility_on_curve(&a, &dist, &curve) + utility_on_curve(&b, &dist, &curve));
            assert!(lhs >= rhs - 1e-9, "trial {trial}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn monte_carlo_utility() {
        let mut rng = SimRng::seed_from(14);
        let dist = ValueDistribution::truncated_exponential(2.0, 0.0, 1.0).unwrap();
        let format = AuctionFormat::standard(Family::SecondPrice, 2, 4, 1).unwrap();
        let p = pi(&[0.1, 0.2, 0.3, 0.25, 0.15]);
        let curve = format.own_bid_curve(0, &[2]).unwrap();
        let exact = utility_on_curve(&p, &dist, &curve);
        let s = induce_strategy(&p, &dist);
        let draws = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..draws {
            let v = dist.sample(&mut rng);
            let b = s.bid_of(v);
            let u = curve.allocation[b] * v - curve.payment[b];
            sum += u;
            sq += u * u;
        }
        let mean = sum / draws as f64;
        let se = ((sq / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "mc {mean} exact {exact} se {se}");
    }

    #[test]
    fn round_trip_preserves_utility() {
        let mut rng = SimRng::seed_from(15);
        for _ in 0..100 {
            let dist = ValueDistribution::random_piecewise(&mut rng);
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(5);
            let format = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            let opp: Vec<usize> = (1..n).map(|_| rng.below(k + 1)).collect();
            let curve = format.own_bid_curve(0, &opp).unwrap();
            let mut t: Vec<f64> = (0..k).map(|_| dist.sample(&mut rng)).collect();
            t.sort_by(f64::total_cmp);
            t.push(dist.support().1);
            let s = MonotoneBiddingStrategy::new(t).unwrap();
            // Direct evaluation: integrate x(b)v - p(b) interval by interval.
            let mut direct = 0.0;
            let mut lo = dist.support().0;
            for (j, &hi) in s.thresholds().iter().enumerate() {
                let mass = dist.cdf(hi) - dist.cdf(lo);
                // ∫ v dF = [vF] - ∫ F dv, trapezoid on the continuous CDF.
                let steps = 4000;
                let h = (hi - lo) / steps as f64;
                let area: f64 = (0..steps)
                    .map(|i| 0.5 * h * (dist.cdf(lo + i as f64 * h) + dist.cdf(lo + (i + 1) as f64 * h)))
                    .sum();
                let first_moment = hi * dist.cdf(hi) - lo * dist.cdf(lo) - area;
                direct += curve.allocation[j] * first_moment - curve.payment[j] * mass;
                lo = hi;
            }
            let q = strategy_to_quantile(&s, &dist);
            assert!((utility_on_curve(&q, &dist, &curve) - direct).abs() < 1e-7);
        }
    }

    proptest! {
        #[test]
        fn induced_bid_is_monotone(w in proptest::collection::vec(0.01f64..1.0, 2..7), vs in proptest::collection::vec(0.0f64..=1.0, 50)) {
            let total: f64 = w.iter().sum();
            let p = QuantileStrategy::new(w.iter().map(|x| x / total).collect()).unwrap();
            let s = induce_strategy(&p, &u01());
            let mut vs = vs;
            vs.sort_by(f64::total_cmp);
            let bids: Vec<usize> = vs.iter().map(|&v| s.bid_of(v)).collect();
            prop_assert!(bids.windows(2).all(|b| b[0] <= b[1]));
        }

        #[test]
        fn round_trip_weights(w in proptest::collection::vec(0.0f64..1.0, 2..7)) {
            let total: f64 = w.iter().sum::<f64>() + 1e-3;
            let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
            let last = 1.0 - w[..w.len() - 1].iter().sum::<f64>();
            *w.last_mut().unwrap() = last;
            let p = QuantileStrategy::new(w).unwrap();
            let back = strategy_to_quantile(&induce_strategy(&p, &u01()), &u01());
            for (a, b) in p.weights().iter().zip(back.weights()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
