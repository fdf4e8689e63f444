//! Exact expected revenues under a profile of quantile strategies.
//!
//! Each bidder's bid is categorical with weights `π^{(i)}`, so every
//! functional here is a finite weighted sum over bid profiles.

use crate::auction::{next_profile, profile_count, AuctionFormat, OwnBidCurve, Scratch};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::quantile::{dot, gradient_on_curve, QuantileStrategy};

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<QuantileStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<QuantileStrategy>) -> Result<Self> {
        let Some(first) = strategies.first() else {
            return Err(Error::InvalidStrategy("profile needs at least one bidder".into()));
        };
        if let Some(s) = strategies.iter().find(|s| s.levels() != first.levels()) {
            return Err(Error::DimensionMismatch { expected: first.levels(), actual: s.levels() });
        }
        Ok(Self { strategies })
    }

    pub fn n(&self) -> usize {
        self.strategies.len()
    }

    pub fn levels(&self) -> usize {
        self.strategies[0].levels()
    }

    pub fn get(&self, i: usize) -> &QuantileStrategy {
        &self.strategies[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QuantileStrategy> {
        self.strategies.iter()
    }
}

fn check_inputs(format: &AuctionFormat, profile: &StrategyProfile, dists: Option<&[ValueDistribution]>) -> Result<()> {
    if profile.n() != format.n() {
        return Err(Error::DimensionMismatch { expected: format.n(), actual: profile.n() });
    }
    if profile.levels() != format.k() + 1 {
        return Err(Error::DimensionMismatch { expected: format.k() + 1, actual: profile.levels() });
    }
    if let Some(d) = dists {
        if d.len() != format.n() {
            return Err(Error::DimensionMismatch { expected: format.n(), actual: d.len() });
        }
    }
    profile_count(profile.levels(), format.n())?;
    Ok(())
}

/// Expected own-bid curve of `bidder`, averaging over the others' categorical bids.
pub fn expected_curve(format: &AuctionFormat, profile: &StrategyProfile, bidder: usize) -> Result<OwnBidCurve> {
    check_inputs(format, profile, None)?;
    Ok(expected_curve_unchecked(format, profile, bidder, &mut Scratch::new(format.n())))
}

pub(crate) fn expected_curve_unchecked(
    format: &AuctionFormat,
    profile: &StrategyProfile,
    bidder: usize,
    scratch: &mut Scratch,
) -> OwnBidCurve {
    let n = format.n();
    let levels = profile.levels();
    let opponents: Vec<&QuantileStrategy> = (0..n).filter(|&j| j != bidder).map(|j| profile.get(j)).collect();
    let mut total = OwnBidCurve::zeros(levels);
    let mut curve = OwnBidCurve::zeros(levels);
    let mut others = vec![0usize; n - 1];
    loop {
        let weight: f64 = opponents.iter().zip(&others).map(|(s, &b)| s.weights()[b]).product();
        if weight > 0.0 {
            format.own_bid_curve_into(bidder, &others, &mut curve, scratch);
            total.add_scaled(&curve, weight);
        }
        if !next_profile(&mut others, levels) {
            break;
        }
    }
    total
}

pub fn expected_curves(format: &AuctionFormat, profile: &StrategyProfile) -> Result<Vec<OwnBidCurve>> {
    check_inputs(format, profile, None)?;
    let mut scratch = Scratch::new(format.n());
    Ok((0..format.n()).map(|i| expected_curve_unchecked(format, profile, i, &mut scratch)).collect())
}

/// Expected total payment, enumerating full bid profiles.
pub fn conditional_revenue(format: &AuctionFormat, profile: &StrategyProfile) -> Result<f64> {
    check_inputs(format, profile, None)?;
    let n = format.n();
    let levels = profile.levels();
    let mut bids = vec![0usize; n];
    let mut alloc = vec![0.0; n];
    let mut pay = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let weight: f64 = profile.iter().zip(&bids).map(|(s, &b)| s.weights()[b]).product();
        if weight > 0.0 {
            format.outcome_into(&bids, &mut alloc, &mut pay);
            total += weight * pay.iter().sum::<f64>();
        }
        if !next_profile(&mut bids, levels) {
            break;
        }
    }
    Ok(total)
}

/// Myerson revenue from one bidder given an own-bid curve: each allocation
/// jump at threshold `F⁻¹(τ_j)` is paid by all mass above it.
pub fn aux_revenue_on_curve(pi: &QuantileStrategy, dist: &ValueDistribution, curve: &OwnBidCurve) -> f64 {
    let tau = pi.partial_sums();
    let tails = pi.upper_tails();
    let x = &curve.allocation;
    (0..pi.k())
        .map(|j| tails[j] * (x[j + 1] - x[j]) * dist.quantile(tau[j]))
        .sum()
}

/// Expected revenue of the auxiliary auction.
pub fn aux_revenue(format: &AuctionFormat, profile: &StrategyProfile, dists: &[ValueDistribution]) -> Result<f64> {
    check_inputs(format, profile, Some(dists))?;
    let curves = expected_curves(format, profile)?;
    Ok(profile
        .iter()
        .zip(dists)
        .zip(&curves)
        .map(|((pi, d), c)| aux_revenue_on_curve(pi, d, c))
        .sum())
}

/// Both sides of the gradient-revenue identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub conditional_revenue: f64,
    pub aux_revenue: f64,
    /// Per-bidder `∇q_i · (e − π_i)`.
    pub graddots: Vec<f64>,
}

/// `∇q(π) · (e − π)`.
pub fn graddot(pi: &QuantileStrategy, grad: &[f64]) -> f64 {
    grad[0] - dot(grad, pi.weights())
}

pub fn check_identity(format: &AuctionFormat, profile: &StrategyProfile, dists: &[ValueDistribution]) -> Result<IdentityCheck> {
    check_inputs(format, profile, Some(dists))?;
    let curves = expected_curves(format, profile)?;
    let cond = conditional_revenue(format, profile)?;
    Ok(identity_from_curves(profile, dists, &curves, cond))
}

pub(crate) fn identity_from_curves(
    profile: &StrategyProfile,
    dists: &[ValueDistribution],
    curves: &[OwnBidCurve],
    conditional_revenue: f64,
) -> IdentityCheck {
    let mut graddots = Vec::with_capacity(profile.n());
    let mut aux = 0.0;
    for ((pi, d), c) in profile.iter().zip(dists).zip(curves) {
        graddots.push(graddot(pi, &gradient_on_curve(pi, d, c)));
        aux += aux_revenue_on_curve(pi, d, c);
    }
    let lhs: f64 = graddots.iter().sum();
    let rhs = conditional_revenue - aux;
    IdentityCheck { lhs, rhs, diff: (lhs - rhs).abs(), conditional_revenue, aux_revenue: aux, graddots }
}
