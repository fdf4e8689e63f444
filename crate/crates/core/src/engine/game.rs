use rayon::prelude::*;

use crate::adversaries::{Auctioneer, PolicySpec};
use crate::analysis::hindsight::{HindsightAccumulator, RegretReport};
use crate::analysis::myerson::myerson_revenue;
use crate::analysis::revenue::{conditional_revenue, expected_curves, identity_from_curves, StrategyProfile};
use crate::analysis::swap::{SwapAccumulator, SwapRegretReport};
use crate::auction::OwnBidCurve;
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::learners::{Learner, MetaBidder};
use crate::quantile::{utility_on_curve, QuantileStrategy};
use crate::rng::{replica_seed, SimRng};

use super::config::{FeedbackMode, GameConfig};

/// Identity tolerance for expected-mode rounds.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRecord {
    pub revenue_aux: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub graddots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizedRound {
    pub values: Vec<f64>,
    pub bids: Vec<usize>,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based.
    pub round: u64,
    pub format: String,
    pub strategies: Vec<Vec<f64>>,
    pub revenue_cond: f64,
    pub identity: Option<IdentityRecord>,
    pub realized: Option<RealizedRound>,
}

#[derive(Debug, Clone)]
pub struct BidderTotals {
    pub hindsight: HindsightAccumulator,
    pub swap: SwapAccumulator,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: GameConfig,
    pub records: Vec<RoundRecord>,
    pub bidders: Vec<BidderTotals>,
}

impl Trajectory {
    pub fn total_conditional_revenue(&self) -> f64 {
        self.records.iter().map(|r| r.revenue_cond).sum()
    }

    pub fn total_realized_revenue(&self) -> Option<f64> {
        self.records.iter().map(|r| r.realized.as_ref().map(|x| x.revenue)).sum()
    }

    pub fn max_identity_diff(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.identity.as_ref())
            .map(|i| (i.lhs - i.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Plays the repeated game: bidders commit, the auctioneer picks a format
/// seeing the profile, then each bidder receives gradient feedback.
pub fn run_game(config: &GameConfig) -> Result<Trajectory> {
    config.validate()?;
    let n = config.n();
    let k = config.k;
    let dists = config.distributions()?;
    let mut bidders: Vec<MetaBidder> = config
        .bidders
        .iter()
        .zip(&dists)
        .map(|(b, d)| Ok(MetaBidder::new(Learner::from_spec(&b.learner, k, config.horizon)?, d.clone())))
        .collect::<Result<_>>()?;
    let mut auctioneer = Auctioneer::new(&config.auctioneer, n, k)?;
    let mut rng = SimRng::seed_from(config.seed);
    let mut totals: Vec<BidderTotals> = (0..n)
        .map(|_| BidderTotals { hindsight: HindsightAccumulator::new(k + 1), swap: SwapAccumulator::new(k + 1) })
        .collect();
    let mut records = Vec::with_capacity(config.horizon as usize);
    for t in 0..config.horizon {
        let mut pis = Vec::with_capacity(n);
        let mut strategies = Vec::with_capacity(n);
        for b in bidders.iter_mut() {
            let (pi, s) = b.meta_step();
            pis.push(pi.clone());
            strategies.push(s.clone());
        }
        let profile = StrategyProfile::new(pis)?;
        let format = auctioneer.choose_format(t, &profile, &dists)?;
        let revenue_cond = conditional_revenue(&format, &profile)?;
        let with_identity = config.feedback_mode == FeedbackMode::Expected || t % config.identity_stride == 0;
        let expected = if with_identity || config.feedback_mode == FeedbackMode::Expected {
            Some(expected_curves(&format, &profile)?)
        } else {
            None
        };
        let identity = match (&expected, with_identity) {
            (Some(curves), true) => {
                let c = identity_from_curves(&profile, &dists, curves, revenue_cond);
                Some(IdentityRecord { revenue_aux: c.aux_revenue, lhs: c.lhs, rhs: c.rhs, graddots: c.graddots })
            }
            _ => None,
        };
        let (feedback, realized): (Vec<OwnBidCurve>, Option<RealizedRound>) = match config.feedback_mode {
            FeedbackMode::Expected => (expected.expect("computed in expected mode"), None),
            FeedbackMode::Realized => {
                let values: Vec<f64> = dists.iter().map(|d| d.sample(&mut rng)).collect();
                let bids: Vec<usize> = strategies.iter().zip(&values).map(|(s, &v)| s.bid_of(v)).collect();
                let revenue = format.payment(&bids)?.iter().sum();
                let curves = (0..n)
                    .map(|i| {
                        let opp: Vec<usize> = bids.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &b)| b).collect();
                        format.own_bid_curve(i, &opp)
                    })
                    .collect::<Result<_>>()?;
                (curves, Some(RealizedRound { values, bids, revenue }))
            }
        };
        for (i, curve) in feedback.iter().enumerate() {
            let pi = profile.get(i);
            totals[i].hindsight.add_curve(curve, utility_on_curve(pi, &dists[i], curve));
            let grad = bidders[i].feed_curve(curve).map_err(|e| match e {
                Error::RewardOutOfRange { index, value } => Error::FormatRejected {
                    round: t,
                    detail: format!("bidder {} gradient coordinate {index} = {value} outside [-1, 1]", i + 1),
                },
                other => other,
            })?;
            totals[i].swap.add(pi.weights(), &grad)?;
        }
        records.push(RoundRecord {
            round: t + 1,
            format: format.digest(),
            strategies: profile.iter().map(|p| p.weights().to_vec()).collect(),
            revenue_cond,
            identity,
            realized,
        });
    }
    Ok(Trajectory { config: config.clone(), records, bidders: totals })
}

/// Config for replica `index`: the master seed (and any lower-bound seed) is split.
pub fn replica_config(config: &GameConfig, index: u64) -> GameConfig {
    let mut c = config.clone();
    c.seed = replica_seed(config.seed, index);
    if let PolicySpec::LowerBound { seed } = &mut c.auctioneer {
        *seed = replica_seed(*seed, index);
    }
    c
}

/// Independent replicas in parallel, returned in index order.
pub fn run_replicas(config: &GameConfig, count: u64) -> Vec<Result<Trajectory>> {
    (0..count).into_par_iter().map(|i| run_game(&replica_config(config, i))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub seed: u64,
    pub mode: FeedbackMode,
    pub rounds: u64,
    /// Conditional revenue in expected mode, realized payments in realized mode.
    pub total_revenue: f64,
    pub total_conditional_revenue: f64,
    /// `None` when some prior is irregular.
    pub mye_per_round: Option<f64>,
    pub regret: Vec<RegretReport>,
    pub swap: Vec<SwapRegretReport>,
    pub max_identity_diff: f64,
}

impl SummaryReport {
    pub fn mye_total(&self) -> Option<f64> {
        self.mye_per_round.map(|m| m * self.rounds as f64)
    }

    pub fn slack(&self) -> Option<f64> {
        self.mye_total().map(|m| self.total_revenue - m)
    }
}

pub fn summarize(traj: &Trajectory, dists: &[ValueDistribution]) -> Result<SummaryReport> {
    if traj.records.is_empty() {
        return Err(Error::Config("cannot summarize an empty trajectory".into()));
    }
    let mye_per_round = match myerson_revenue(dists) {
        Ok(r) => Some(r.revenue),
        Err(Error::IrregularPrior { .. }) => None,
        Err(e) => return Err(e),
    };
    let regret = traj.bidders.iter().zip(dists).map(|(b, d)| b.hindsight.report(d)).collect::<Result<_>>()?;
    let total_conditional_revenue = traj.total_conditional_revenue();
    Ok(SummaryReport {
        seed: traj.config.seed,
        mode: traj.config.feedback_mode,
        rounds: traj.records.len() as u64,
        total_revenue: traj.total_realized_revenue().unwrap_or(total_conditional_revenue),
        total_conditional_revenue,
        mye_per_round,
        regret,
        swap: traj.bidders.iter().map(|b| b.swap.report()).collect(),
        max_identity_diff: traj.max_identity_diff(),
    })
}

/// Replays the auctioneer against the logged profiles and returns the first
/// round whose format digest differs, if any.
pub fn replay_formats(traj: &Trajectory) -> Result<Option<u64>> {
    let config = &traj.config;
    let dists = config.distributions()?;
    let mut auctioneer = Auctioneer::new(&config.auctioneer, config.n(), config.k)?;
    for (t, rec) in traj.records.iter().enumerate() {
        let profile = StrategyProfile::new(rec.strategies.iter().map(|w| QuantileStrategy::new(w.clone())).collect::<Result<_>>()?)?;
        if auctioneer.choose_format(t as u64, &profile, &dists)?.digest() != rec.format {
            return Ok(Some(rec.round));
        }
    }
    Ok(None)
}
