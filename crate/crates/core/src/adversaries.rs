//! Auctioneer policies and adversarial reward sequences.

use serde::{Deserialize, Serialize};

use crate::analysis::hindsight::HindsightAccumulator;
use crate::analysis::revenue::{conditional_revenue, StrategyProfile};
use crate::analysis::swap::{SwapAccumulator, SwapRegretReport};
use crate::auction::{AuctionFormat, Family, FormatSpec};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerSpec, MetaBidder};
use crate::quantile::{utility_on_curve, QuantileStrategy};
use crate::rng::SimRng;

/// Config record: `{ kind = "static", format = {…} }`, `{ kind = "myopic_reserve", family = "first_price" }`
/// or `{ kind = "lower_bound", seed = 7 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Static { format: FormatSpec },
    MyopicReserve { family: Family },
    LowerBound { seed: u64 },
}

#[derive(Debug, Clone)]
enum Policy {
    Static(AuctionFormat),
    MyopicReserve { family: Family },
    LowerBound { rng: Box<SimRng> },
}

#[derive(Debug, Clone)]
pub struct Auctioneer {
    n: usize,
    k: usize,
    policy: Policy,
}

impl Auctioneer {
    pub fn new(spec: &PolicySpec, n: usize, k: usize) -> Result<Self> {
        let policy = match spec {
            PolicySpec::Static { format } => {
                let f = AuctionFormat::from_spec(format, n, k)?;
                require_valid(&f, 0)?;
                Policy::Static(f)
            }
            PolicySpec::MyopicReserve { family } => {
                for r in 0..=k {
                    require_valid(&AuctionFormat::standard(*family, n, k, r)?, 0)?;
                }
                Policy::MyopicReserve { family: *family }
            }
            PolicySpec::LowerBound { seed } => {
                if n != 1 {
                    return Err(Error::Config(format!("the lower-bound auctioneer needs exactly one bidder, got {n}")));
                }
                Policy::LowerBound { rng: Box::new(SimRng::seed_from(*seed)) }
            }
        };
        Ok(Self { n, k, policy })
    }

    pub fn static_format(format: AuctionFormat) -> Result<Self> {
        require_valid(&format, 0)?;
        Ok(Self { n: format.n(), k: format.k(), policy: Policy::Static(format) })
    }

    /// Picks this round's format after observing the committed profile.
    pub fn choose_format(&mut self, round: u64, observed: &StrategyProfile, _dists: &[ValueDistribution]) -> Result<AuctionFormat> {
        match &mut self.policy {
            Policy::Static(f) => Ok(f.clone()),
            Policy::MyopicReserve { family } => {
                let mut best: Option<(f64, AuctionFormat)> = None;
                for r in 0..=self.k {
                    let f = AuctionFormat::standard(*family, self.n, self.k, r)?;
                    let rev = conditional_revenue(&f, observed)?;
                    if best.as_ref().is_none_or(|(b, _)| rev > *b) {
                        best = Some((rev, f));
                    }
                }
                Ok(best.expect("at least one reserve").1)
            }
            Policy::LowerBound { rng } => {
                let r: Vec<bool> = (0..self.k).map(|_| rng.coin()).collect();
                let f = lower_bound_format(&r)?;
                require_valid(&f, round)?;
                Ok(f)
            }
        }
    }
}

fn require_valid(format: &AuctionFormat, round: u64) -> Result<()> {
    let report = format.validate()?;
    if !report.passed() {
        return Err(Error::FormatRejected { round, detail: report.summary() });
    }
    Ok(())
}

/// Single-bidder format: any nonzero bid wins, bid `i/K` pays `1 − r_i`.
pub fn lower_bound_format(r: &[bool]) -> Result<AuctionFormat> {
    let k = r.len();
    let mut allocation = vec![vec![0.0]];
    let mut payment = vec![vec![0.0]];
    for &ri in r {
        allocation.push(vec![1.0]);
        payment.push(vec![if ri { 0.0 } else { 1.0 }]);
    }
    AuctionFormat::table(1, k, allocation, payment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub rounds: u64,
    pub auction_regret: f64,
    pub online_regret: f64,
}

/// Runs a quantile-space learner against the lower-bound auctioneer with a
/// value prior on `[1 − 1/T, 1]` and reads off the induced online-learning regret
/// over the `K` actions (bids 0 and `1/K` both count as action 1).
pub fn run_lower_bound(spec: &LearnerSpec, k: usize, horizon: u64, seed: u64) -> Result<LowerBoundReport> {
    let dist = ValueDistribution::uniform(1.0 - 1.0 / horizon as f64, 1.0)?;
    let mut bidder = MetaBidder::new(Learner::from_spec(spec, k, horizon)?, dist.clone());
    let mut auctioneer = Auctioneer::new(&PolicySpec::LowerBound { seed }, 1, k)?;
    let mut hindsight = HindsightAccumulator::new(k + 1);
    let mut action_totals = vec![0.0; k];
    let mut online_earned = 0.0;
    for t in 0..horizon {
        let pi = bidder.meta_step().0.clone();
        let profile = StrategyProfile::new(vec![pi.clone()])?;
        let format = auctioneer.choose_format(t, &profile, std::slice::from_ref(&dist))?;
        let curve = format.own_bid_curve(0, &[])?;
        hindsight.add_curve(&curve, utility_on_curve(&pi, &dist, &curve));
        let w = pi.weights();
        for i in 0..k {
            let r = 1.0 - curve.payment[i + 1];
            action_totals[i] += r;
            // Action i + 1 collects bid level i + 1, and action 1 also bid zero.
            online_earned += r * if i == 0 { w[0] + w[1] } else { w[i + 1] };
        }
        bidder.feed_curve(&curve)?;
    }
    let best_action = action_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let auction = hindsight.report_with(&dist, 0)?;
    Ok(LowerBoundReport { rounds: horizon, auction_regret: auction.regret, online_regret: best_action - online_earned })
}

const INTEGRAL_TOL: f64 = 1e-9;

fn as_integer(x: f64, what: &str) -> Result<u64> {
    let r = x.round();
    if (x - r).abs() > INTEGRAL_TOL || r < 1.0 {
        return Err(Error::SwapInstance(format!("{what} = {x} must be a positive integer")));
    }
    Ok(r as u64)
}

/// The three-phase reward sequence on which agile OGD accumulates linear swap regret.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapInstance {
    pub eta: f64,
    /// Rounds per phase, `100/η`.
    pub alpha: u64,
    /// Number of batches, `ηT/300`.
    pub beta: u64,
    /// Steps to reach `(½, ½, 0)`, `3/(2η)`.
    pub settle_phase1: u64,
    /// Steps to reach `(0, 1, 0)`, `1/η`.
    pub settle_phase2: u64,
}

impl SwapInstance {
    pub fn new(eta: f64, horizon: u64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0 && eta <= 0.5) {
            return Err(Error::SwapInstance(format!("eta = {eta} must lie in (0, 1/2]")));
        }
        let half_inv = as_integer(1.0 / (2.0 * eta), "1/(2 eta)")?;
        let beta = as_integer(eta * horizon as f64 / 300.0, "eta T / 300")?;
        Ok(Self { eta, alpha: 200 * half_inv, beta, settle_phase1: 3 * half_inv, settle_phase2: 2 * half_inv })
    }

    pub fn with_batches(eta: f64, batches: u64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::SwapInstance(format!("eta = {eta} must be positive")));
        }
        let half_inv = as_integer(1.0 / (2.0 * eta), "1/(2 eta)")?;
        Self::new(eta, 3 * 200 * half_inv * batches)
    }

    pub fn horizon(&self) -> u64 {
        3 * self.alpha * self.beta
    }

    /// Batch, phase (0, 1, 2) and offset within the phase of a 0-based round.
    pub fn locate(&self, round: u64) -> (u64, usize, u64) {
        let batch_len = 3 * self.alpha;
        let within = round % batch_len;
        (round / batch_len, (within / self.alpha) as usize, within % self.alpha)
    }

    pub fn reward(&self, round: u64) -> [f64; 3] {
        match self.locate(round).1 {
            0 => [1.0, 1.0, 0.0],
            1 => [0.0, 1.0, 0.0],
            _ => [0.0, 0.0, 1.0],
        }
    }

    pub fn rewards(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.horizon()).map(|t| self.reward(t))
    }

    /// `1/(4η) + 1/4`: the mass on action 1 summed over one phase 2.
    pub fn phase2_mass(&self) -> f64 {
        0.25 / self.eta + 0.25
    }
}

pub fn swap_instance_rewards(inst: &SwapInstance) -> Vec<[f64; 3]> {
    inst.rewards().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapDemoReport {
    pub instance: SwapInstance,
    pub batches_checked: u64,
    pub checkpoints_passed: u64,
    pub phase2_mass: Vec<f64>,
    pub swap: SwapRegretReport,
    /// Gain of the fixed mapping 1→2, 2→2, 3→3.
    pub proof_mapping_value: f64,
    pub bound: f64,
}

const CHECK_TOL: f64 = 1e-9;

/// Runs agile OGD from the uniform start through `batches` batches, checking
/// the state at every checkpoint round.
pub fn verify_swap_trajectory(eta: f64, batches: u64) -> Result<SwapDemoReport> {
    let inst = SwapInstance::with_batches(eta, batches)?;
    let mut learner = Learner::new(crate::learners::LearnerKind::AgileOgd, 3, eta)?;
    let mut acc = SwapAccumulator::new(3);
    let mut phase2_mass = vec![0.0; batches as usize];
    let mut passed = 0;
    let check = |round: u64, pi: &QuantileStrategy, target: [f64; 3], what: &str| -> Result<()> {
        let w = pi.weights();
        if w.iter().zip(target).any(|(a, b)| (a - b).abs() > CHECK_TOL) {
            return Err(Error::Checkpoint { round, detail: format!("{what}: expected {target:?}, got {w:?}") });
        }
        Ok(())
    };
    for t in 0..inst.horizon() {
        let pi = learner.next();
        let (batch, phase, offset) = inst.locate(t);
        match phase {
            0 if offset >= inst.settle_phase1 => {
                check(t, &pi, [0.5, 0.5, 0.0], "phase 1 steady state")?;
                passed += 1;
            }
            1 => {
                phase2_mass[batch as usize] += pi.weights()[0];
                if offset >= inst.settle_phase2 {
                    check(t, &pi, [0.0, 1.0, 0.0], "phase 2 steady state")?;
                    passed += 1;
                }
            }
            _ => {}
        }
        let r = inst.reward(t);
        acc.add(pi.weights(), &r)?;
        learner.update(&r)?;
        if (t + 1) % (3 * inst.alpha) == 0 {
            check(t + 1, &learner.next(), [0.0, 0.0, 1.0], "batch end")?;
            passed += 1;
        }
    }
    for (b, m) in phase2_mass.iter().enumerate() {
        if (m - inst.phase2_mass()).abs() > 1e-9 * inst.alpha as f64 {
            return Err(Error::Checkpoint {
                round: (3 * b as u64 + 2) * inst.alpha,
                detail: format!("phase 2 mass {m}, expected {}", inst.phase2_mass()),
            });
        }
    }
    Ok(SwapDemoReport {
        instance: inst,
        batches_checked: batches,
        checkpoints_passed: passed,
        phase2_mass,
        proof_mapping_value: acc.value_of(&[1, 1, 2]),
        swap: acc.report(),
        bound: inst.horizon() as f64 / 1200.0,
    })
}
