//! Regret against the best fixed strategy in hindsight.
//!
//! With cumulative allocations `X_b` and payments `P_b` per own bid level, the
//! best strategy bids `argmax_b X_b v − P_b` at every value (largest index on
//! ties); its expected total utility integrates the upper envelope of those
//! lines against the prior.

use crate::auction::{AuctionFormat, OwnBidCurve};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::learners::project_simplex;
use crate::quantile::{gradient_on_curve, strategy_to_quantile, utility_on_curve, MonotoneBiddingStrategy, QuantileStrategy};

/// Iterations of projected gradient ascent for the simplex optimum.
pub const ASCENT_ITERATIONS: usize = 10_000;
/// Per-round tolerance for the three optima to agree.
pub const AGREEMENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePiece {
    pub from: f64,
    pub to: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HindsightEnvelope {
    pub totals: OwnBidCurve,
    pub pieces: Vec<EnvelopePiece>,
}

impl HindsightEnvelope {
    pub fn new(totals: OwnBidCurve) -> Self {
        let pieces = upper_envelope(&totals.allocation, &totals.payment);
        Self { totals, pieces }
    }

    pub fn value_at(&self, v: f64) -> f64 {
        let b = self.argmax(v);
        self.totals.allocation[b] * v - self.totals.payment[b]
    }

    pub fn argmax(&self, v: f64) -> usize {
        let v = v.clamp(0.0, 1.0);
        let i = self.pieces.partition_point(|p| p.to < v).min(self.pieces.len() - 1);
        self.pieces[i].level
    }

    /// `E_v[max_b X_b v − P_b]` under the prior, exact per linear piece.
    pub fn integrate(&self, dist: &ValueDistribution) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (a, b) = (dist.cdf(p.from), dist.cdf(p.to));
                self.totals.allocation[p.level] * dist.partial_expectation(a, b) - self.totals.payment[p.level] * (b - a)
            })
            .sum()
    }

    /// The optimal strategy as thresholds: `θ_j = sup { v : argmax(v) ≤ j }`.
    pub fn monotone_strategy(&self) -> MonotoneBiddingStrategy {
        let thresholds = (0..self.totals.levels())
            .map(|j| self.pieces.iter().filter(|p| p.level <= j).map(|p| p.to).fold(0.0, f64::max))
            .collect();
        MonotoneBiddingStrategy::new(thresholds).expect("envelope thresholds are ordered")
    }
}

/// Pieces of `max_b (x_b v − p_b)` on `[0, 1]`, largest maximizing index on ties.
pub fn upper_envelope(x: &[f64], p: &[f64]) -> Vec<EnvelopePiece> {
    let levels = x.len();
    let line = |b: usize, v: f64| x[b] * v - p[b];
    let better = |b: usize, c: usize, v: f64| {
        let (lb, lc) = (line(b, v), line(c, v));
        lb > lc || (lb == lc && (x[b] > x[c] || (x[b] == x[c] && b > c)))
    };
    let mut current = 0;
    for b in 1..levels {
        if better(b, current, 0.0) {
            current = b;
        }
    }
    let mut pieces = Vec::new();
    let mut start = 0.0;
    loop {
        // Next line to overtake: steeper, crossing soonest; steepest then largest index on ties.
        let mut next: Option<(f64, usize)> = None;
        for b in 0..levels {
            if x[b] <= x[current] {
                continue;
            }
            let cross = ((p[b] - p[current]) / (x[b] - x[current])).max(start);
            if cross >= 1.0 {
                continue;
            }
            let take = match next {
                None => true,
                Some((c, nb)) => cross < c || (cross == c && (x[b] > x[nb] || (x[b] == x[nb] && b > nb))),
            };
            if take {
                next = Some((cross, b));
            }
        }
        match next {
            Some((cross, b)) => {
                if cross > start {
                    pieces.push(EnvelopePiece { from: start, to: cross, level: current });
                }
                start = cross;
                current = b;
            }
            None => {
                pieces.push(EnvelopePiece { from: start, to: 1.0, level: current });
                return pieces;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rounds: u64,
    /// Expected utility of the best arbitrary strategy.
    pub envelope_value: f64,
    /// Value of the envelope's monotone strategy mapped to quantile space.
    pub monotone_value: f64,
    /// Best value found by projected gradient ascent over the simplex.
    pub simplex_value: f64,
    pub realized: f64,
    pub regret: f64,
    /// Largest pairwise gap between the three optima, per round.
    pub agreement_gap: f64,
    pub best_strategy: QuantileStrategy,
}

impl RegretReport {
    pub fn agrees(&self) -> bool {
        self.agreement_gap <= AGREEMENT_TOL
    }
}

/// Running totals for one bidder's hindsight benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct HindsightAccumulator {
    totals: OwnBidCurve,
    realized: f64,
    rounds: u64,
}

impl HindsightAccumulator {
    pub fn new(levels: usize) -> Self {
        Self { totals: OwnBidCurve::zeros(levels), realized: 0.0, rounds: 0 }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn totals(&self) -> &OwnBidCurve {
        &self.totals
    }

    pub fn realized(&self) -> f64 {
        self.realized
    }

    /// Adds a round given the (possibly expected) own-bid curve and the utility earned.
    pub fn add_curve(&mut self, curve: &OwnBidCurve, realized_utility: f64) {
        self.totals.add_scaled(curve, 1.0);
        self.realized += realized_utility;
        self.rounds += 1;
    }

    pub fn add_profile(&mut self, format: &AuctionFormat, bidder: usize, opp_bids: &[usize], realized_utility: f64) -> Result<()> {
        let curve = format.own_bid_curve(bidder, opp_bids)?;
        if curve.levels() != self.totals.levels() {
            return Err(Error::DimensionMismatch { expected: self.totals.levels(), actual: curve.levels() });
        }
        self.add_curve(&curve, realized_utility);
        Ok(())
    }

    pub fn envelope(&self) -> HindsightEnvelope {
        HindsightEnvelope::new(self.totals.clone())
    }

    pub fn report(&self, dist: &ValueDistribution) -> Result<RegretReport> {
        self.report_with(dist, ASCENT_ITERATIONS)
    }

    pub fn report_with(&self, dist: &ValueDistribution, iterations: usize) -> Result<RegretReport> {
        if self.rounds == 0 {
            return Err(Error::InvalidStrategy("hindsight needs at least one round".into()));
        }
        let envelope = self.envelope();
        let envelope_value = envelope.integrate(dist);
        let best = strategy_to_quantile(&envelope.monotone_strategy(), dist);
        let monotone_value = utility_on_curve(&best, dist, &self.totals);
        let simplex_value = simplex_optimum(dist, &self.totals, self.rounds, iterations)? * self.rounds as f64;
        let per_round = |a: f64, b: f64| (a - b).abs() / self.rounds as f64;
        let agreement_gap = per_round(envelope_value, monotone_value)
            .max(per_round(envelope_value, simplex_value))
            .max(per_round(monotone_value, simplex_value));
        Ok(RegretReport {
            rounds: self.rounds,
            envelope_value,
            monotone_value,
            simplex_value,
            realized: self.realized,
            regret: envelope_value - self.realized,
            agreement_gap,
            best_strategy: best,
        })
    }
}

/// Best per-round value of `Σ_t q_t(π) / T` found by projected gradient ascent
/// from the uniform point with step `1/√k`.
fn simplex_optimum(dist: &ValueDistribution, totals: &OwnBidCurve, rounds: u64, iterations: usize) -> Result<f64> {
    let scale = 1.0 / rounds as f64;
    let mut mean = OwnBidCurve::zeros(totals.levels());
    mean.add_scaled(totals, scale);
    let mut pi = QuantileStrategy::uniform(totals.levels());
    let mut best = utility_on_curve(&pi, dist, &mean);
    for it in 1..=iterations {
        let g = gradient_on_curve(&pi, dist, &mean);
        let step = 1.0 / (it as f64).sqrt();
        let y: Vec<f64> = pi.weights().iter().zip(&g).map(|(w, d)| w + step * d).collect();
        pi = project_simplex(&y)?;
        best = best.max(utility_on_curve(&pi, dist, &mean));
    }
    Ok(best)
}
