//! Full-information learners over the simplex and the quantile-space wrapper.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionFormat, OwnBidCurve};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::quantile::{gradient_on_curve, induce_strategy, MonotoneBiddingStrategy, QuantileStrategy};

/// Slack allowed on the `[-1, 1]` reward contract before a run aborts.
pub const REWARD_TOL: f64 = 1e-9;

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(y: &[f64]) -> Result<QuantileStrategy> {
    Ok(QuantileStrategy::new_unchecked(project_raw(y)?))
}

fn project_raw(y: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = y.iter().map(|&v| (v - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Mwu,
    AgileOgd,
    LazyOgd,
}

/// Step size: a positive number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Eta {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Eta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Eta::Auto => s.serialize_str("auto"),
            Eta::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Eta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Eta::Fixed(v)),
            Raw::Int(v) => Ok(Eta::Fixed(v as f64)),
            Raw::Word(w) if w == "auto" => Ok(Eta::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("eta must be a number or \"auto\", got {w:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default)]
    pub eta: Eta,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, eta: Eta) -> Self {
        Self { kind, eta }
    }

    /// Concrete step size for a grid of size `k` and horizon `t`.
    pub fn resolve_eta(&self, k: usize, t: u64) -> Result<f64> {
        let eta = match self.eta {
            Eta::Fixed(v) => v,
            Eta::Auto => default_eta(self.kind, k, t),
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidLearner(format!("step size must be positive, got {eta}")));
        }
        Ok(eta)
    }
}

pub fn default_eta(kind: LearnerKind, k: usize, t: u64) -> f64 {
    let t = t.max(1) as f64;
    let actions = (k + 1) as f64;
    match kind {
        LearnerKind::Mwu => (actions.ln() / t).sqrt(),
        LearnerKind::AgileOgd | LearnerKind::LazyOgd => (2.0 / (actions * t)).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    kind: LearnerKind,
    eta: f64,
    /// Log-weights (MWU), the feasible iterate (agile) or the unconstrained iterate (lazy).
    state: Vec<f64>,
    rounds: u64,
}

impl Learner {
    pub fn new(kind: LearnerKind, levels: usize, eta: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidLearner(format!("need at least 2 actions, got {levels}")));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidLearner(format!("step size must be positive, got {eta}")));
        }
        let state = match kind {
            LearnerKind::Mwu => vec![0.0; levels],
            LearnerKind::AgileOgd | LearnerKind::LazyOgd => vec![1.0 / levels as f64; levels],
        };
        Ok(Self { kind, eta, state, rounds: 0 })
    }

    /// MWU started from the given log-weights.
    pub fn mwu_from_log_weights(log_weights: Vec<f64>, eta: f64) -> Result<Self> {
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidLearner("log-weights must be finite".into()));
        }
        let mut l = Self::new(LearnerKind::Mwu, log_weights.len(), eta)?;
        l.state = log_weights;
        Ok(l)
    }

    /// Agile OGD started from a given point of the simplex.
    pub fn agile_from(start: &QuantileStrategy, eta: f64) -> Result<Self> {
        let mut l = Self::new(LearnerKind::AgileOgd, start.levels(), eta)?;
        l.state = start.weights().to_vec();
        Ok(l)
    }

    pub fn from_spec(spec: &LearnerSpec, k: usize, horizon: u64) -> Result<Self> {
        Self::new(spec.kind, k + 1, spec.resolve_eta(k, horizon)?)
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn levels(&self) -> usize {
        self.state.len()
    }

    /// Raw internal state (see field docs).
    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn next(&self) -> QuantileStrategy {
        match self.kind {
            LearnerKind::Mwu => {
                let top = self.state.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = self.state.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = w.iter().sum();
                QuantileStrategy::new_unchecked(w.into_iter().map(|x| x / total).collect())
            }
            LearnerKind::AgileOgd => QuantileStrategy::new_unchecked(self.state.clone()),
            LearnerKind::LazyOgd => {
                QuantileStrategy::new_unchecked(project_raw(&self.state).expect("iterate stays finite"))
            }
        }
    }

    pub fn update(&mut self, reward: &[f64]) -> Result<()> {
        check_reward(reward, self.levels())?;
        let eta = self.eta;
        match self.kind {
            LearnerKind::Mwu | LearnerKind::LazyOgd => {
                self.state.iter_mut().zip(reward).for_each(|(s, r)| *s += eta * r);
            }
            LearnerKind::AgileOgd => {
                let stepped: Vec<f64> = self.state.iter().zip(reward).map(|(s, r)| s + eta * r).collect();
                self.state = project_raw(&stepped)?;
            }
        }
        self.rounds += 1;
        Ok(())
    }
}

fn check_reward(reward: &[f64], levels: usize) -> Result<()> {
    if reward.len() != levels {
        return Err(Error::DimensionMismatch { expected: levels, actual: reward.len() });
    }
    for (index, &value) in reward.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value.abs() > 1.0 + REWARD_TOL {
            return Err(Error::RewardOutOfRange { index, value });
        }
    }
    Ok(())
}

/// A bidder running a learner over quantile strategies of their own prior.
#[derive(Debug, Clone)]
pub struct MetaBidder {
    learner: Learner,
    dist: ValueDistribution,
    current: Option<(QuantileStrategy, MonotoneBiddingStrategy)>,
}

impl MetaBidder {
    pub fn new(learner: Learner, dist: ValueDistribution) -> Self {
        Self { learner, dist, current: None }
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn distribution(&self) -> &ValueDistribution {
        &self.dist
    }

    /// Queries the learner and induces this round's monotone strategy.
    pub fn meta_step(&mut self) -> (&QuantileStrategy, &MonotoneBiddingStrategy) {
        let pi = self.learner.next();
        let s = induce_strategy(&pi, &self.dist);
        let (pi, s) = self.current.insert((pi, s));
        (pi, s)
    }

    pub fn current(&self) -> Option<&(QuantileStrategy, MonotoneBiddingStrategy)> {
        self.current.as_ref()
    }

    /// Feeds the gradient at the cached strategy against a realized opponent profile.
    pub fn meta_feed(&mut self, format: &AuctionFormat, bidder: usize, opp_bids: &[usize]) -> Result<Vec<f64>> {
        let curve = format.own_bid_curve(bidder, opp_bids)?;
        self.feed_curve(&curve)
    }

    /// Feeds the gradient against an own-bid curve (an expectation over opponents, say).
    pub fn feed_curve(&mut self, curve: &OwnBidCurve) -> Result<Vec<f64>> {
        let (pi, _) = self
            .current
            .as_ref()
            .ok_or_else(|| Error::InvalidLearner("feed called before step".into()))?;
        if curve.levels() != pi.levels() {
            return Err(Error::DimensionMismatch { expected: pi.levels(), actual: curve.levels() });
        }
        let grad = gradient_on_curve(pi, &self.dist, curve);
        self.learner.update(&grad)?;
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::Family;
    use crate::rng::SimRng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fresh_learners_are_uniform() {
        for kind in [LearnerKind::Mwu, LearnerKind::AgileOgd, LearnerKind::LazyOgd] {
            let l = Learner::new(kind, 3, 0.1).unwrap();
            assert!(close(l.next().weights(), &[1.0 / 3.0; 3], 1e-15));
        }
        let l = Learner::mwu_from_log_weights(vec![2f64.ln(), 0.0, 0.0], 0.1).unwrap();
        assert!(close(l.next().weights(), &[0.5, 0.25, 0.25], 1e-15));
    }

    #[test]
    fn agile_update_examples() {
        let mut l = Learner::agile_from(&QuantileStrategy::point(3, 2), 0.1).unwrap();
        l.update(&[1.0, 1.0, 0.0]).unwrap();
        assert!(close(l.next().weights(), &[1.0 / 30.0, 1.0 / 30.0, 28.0 / 30.0], 1e-12));
        let mut l = Learner::agile_from(&QuantileStrategy::new(vec![0.5, 0.5, 0.0]).unwrap(), 0.1).unwrap();
        l.update(&[0.0, 1.0, 0.0]).unwrap();
        assert!(close(l.next().weights(), &[0.45, 0.55, 0.0], 1e-12));
        assert_eq!(l.rounds(), 1);
    }

    #[test]
    fn zero_reward_is_a_fixed_point() {
        let mut l = Learner::new(LearnerKind::Mwu, 4, 0.3).unwrap();
        let before = l.next();
        l.update(&[0.0; 4]).unwrap();
        assert_eq!(l.next(), before);
    }

    #[test]
    fn out_of_range_rewards_abort() {
        let mut l = Learner::new(LearnerKind::AgileOgd, 3, 0.1).unwrap();
        assert!(matches!(l.update(&[0.0, 1.5, 0.0]), Err(Error::RewardOutOfRange { index: 1, .. })));
        assert!(matches!(l.update(&[f64::NAN, 0.0, 0.0]), Err(Error::NonFinite { index: 0 })));
        assert!(l.update(&[1.0 + 1e-10, -1.0, 0.0]).is_ok());
        assert!(Learner::new(LearnerKind::Mwu, 3, 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert!(close(project_simplex(&[0.6, 0.6, 0.1]).unwrap().weights(), &[0.5, 0.5, 0.0], 1e-15));
        assert!(close(
            project_simplex(&[0.1, 0.1, 1.0]).unwrap().weights(),
            &[1.0 / 30.0, 1.0 / 30.0, 28.0 / 30.0],
            1e-15
        ));
        let p = [0.2, 0.3, 0.5];
        assert!(close(project_simplex(&p).unwrap().weights(), &p, 1e-15));
        assert!(project_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    /// Brute-force oracle: the threshold solving Σ max(y - θ, 0) = 1 by bisection.
    fn bisection_projection(y: &[f64]) -> Vec<f64> {
        let (mut lo, mut hi) = (y.iter().copied().fold(f64::INFINITY, f64::min) - 1.0, y.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s: f64 = y.iter().map(|v| (v - mid).max(0.0)).sum();
            if s > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y.iter().map(|v| (v - 0.5 * (lo + hi)).max(0.0)).collect()
    }

    #[test]
    fn projection_matches_oracle_and_is_optimal() {
        let mut rng = SimRng::seed_from(21);
        let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        for trial in 0..10_000 {
            let levels = 2 + rng.below(6);
            let y: Vec<f64> = (0..levels).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let p = project_simplex(&y).unwrap();
            assert!(close(p.weights(), &bisection_projection(&y), 1e-9));
            let d = dist2(p.weights(), &y);
            let others = if trial < 1000 { 1000 } else { 10 };
            for _ in 0..others {
                let q = QuantileStrategy::random(levels, &mut rng);
                assert!(d <= dist2(q.weights(), &y) + 1e-9);
            }
            // KKT: positive coordinates share the same offset y_i - π_i.
            let offsets: Vec<f64> = p.weights().iter().zip(&y).filter(|(w, _)| **w > 0.0).map(|(w, v)| v - w).collect();
            assert!(offsets.iter().all(|o| (o - offsets[0]).abs() < 1e-9));
        }
    }

    fn regret_harness(kind: LearnerKind, eta: f64, levels: usize, t: usize, seed: u64) -> f64 {
        let mut rng = SimRng::seed_from(seed);
        let mut l = Learner::new(kind, levels, eta).unwrap();
        let mut cumulative = vec![0.0; levels];
        let mut earned = 0.0;
        // Biased rewards so there is a best action to chase.
        let bias: Vec<f64> = (0..levels).map(|_| rng.uniform_in(-0.3, 0.3)).collect();
        for _ in 0..t {
            let r: Vec<f64> = bias.iter().map(|b| (b + rng.uniform_in(-0.7, 0.7)).clamp(-1.0, 1.0)).collect();
            let pi = l.next();
            earned += pi.weights().iter().zip(&r).map(|(p, x)| p * x).sum::<f64>();
            cumulative.iter_mut().zip(&r).for_each(|(c, x)| *c += x);
            l.update(&r).unwrap();
        }
        cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max) - earned
    }

    #[test]
    fn mwu_regret_bound() {
        let (t, levels) = (10_000usize, 10usize);
        let eta = default_eta(LearnerKind::Mwu, levels - 1, t as u64);
        let bound = 3.0 * (t as f64 * (levels as f64).ln()).sqrt();
        for seed in 0..100 {
            let reg = regret_harness(LearnerKind::Mwu, eta, levels, t, seed);
            assert!(reg <= bound, "seed {seed}: {reg} > {bound}");
        }
    }

    #[test]
    fn ogd_regret_bound() {
        let (t, levels) = (10_000usize, 10usize);
        let eta = default_eta(LearnerKind::AgileOgd, levels - 1, t as u64);
        let bound = 2.0 * (2.0 * levels as f64 * t as f64).sqrt();
        for seed in 0..100 {
            for kind in [LearnerKind::AgileOgd, LearnerKind::LazyOgd] {
                let reg = regret_harness(kind, eta, levels, t, seed);
                assert!(reg <= bound, "{kind:?} seed {seed}: {reg} > {bound}");
            }
        }
    }

    #[test]
    fn vertex_with_best_reward_is_fixed() {
        let mut l = Learner::agile_from(&QuantileStrategy::point(3, 2), 0.1).unwrap();
        for _ in 0..10 {
            l.update(&[0.0, 0.0, 1.0]).unwrap();
            assert_eq!(l.next().weights(), &[0.0, 0.0, 1.0]);
        }
        let mut l = Learner::agile_from(&QuantileStrategy::new(vec![0.0, 1.0, 0.0]).unwrap(), 0.1).unwrap();
        l.update(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(l.next().weights(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn meta_bidder_examples() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let mut meta = MetaBidder::new(Learner::new(LearnerKind::Mwu, 2, 0.1).unwrap(), u.clone());
        let (pi, s) = meta.meta_step();
        assert_eq!(pi.weights(), &[0.5, 0.5]);
        assert_eq!(s.thresholds(), &[0.5, 1.0]);

        // Null auction leaves the distribution unchanged.
        let null = AuctionFormat::null(1, 1).unwrap();
        assert_eq!(meta.meta_feed(&null, 0, &[]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(meta.meta_step().0.weights(), &[0.5, 0.5]);

        // First price with x = 1 always: gradient (1, 0.5, 0) pushes mass down.
        let fp = AuctionFormat::standard(Family::FirstPrice, 1, 2, 0).unwrap();
        let mut meta = MetaBidder::new(Learner::new(LearnerKind::AgileOgd, 3, 0.1).unwrap(), u.clone());
        meta.meta_step();
        let g = meta.meta_feed(&fp, 0, &[]).unwrap();
        assert_eq!(g, vec![1.0, 0.5, 0.0]);
        let third = 1.0 / 3.0;
        let expected = [third + 0.05, third, third - 0.05];
        let (pi, s) = meta.meta_step();
        assert!(close(pi.weights(), &expected, 1e-12));
        assert_eq!(s, &induce_strategy(pi, &u));

        // MWU log-weights move by exactly eta times the gradient.
        let mut meta = MetaBidder::new(Learner::new(LearnerKind::Mwu, 3, 0.25).unwrap(), u);
        meta.meta_step();
        let g = meta.meta_feed(&fp, 0, &[]).unwrap();
        assert!(close(meta.learner().state(), &g.iter().map(|x| 0.25 * x).collect::<Vec<_>>(), 0.0));
    }

    #[test]
    fn feed_before_step_is_an_error() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let mut meta = MetaBidder::new(Learner::new(LearnerKind::Mwu, 2, 0.1).unwrap(), u);
        let null = AuctionFormat::null(1, 1).unwrap();
        assert!(meta.meta_feed(&null, 0, &[]).is_err());
    }

    #[test]
    fn eta_parsing() {
        #[derive(Deserialize)]
        struct W {
            learner: LearnerSpec,
        }
        let w: W = toml::from_str("learner = { kind = \"mwu\", eta = \"auto\" }").unwrap();
        assert_eq!(w.learner, LearnerSpec::new(LearnerKind::Mwu, Eta::Auto));
        let w: W = toml::from_str("learner = { kind = \"lazy_ogd\", eta = 0.05 }").unwrap();
        assert_eq!(w.learner.eta, Eta::Fixed(0.05));
        let w: W = toml::from_str("learner = { kind = \"agile_ogd\", eta = 1 }").unwrap();
        assert_eq!(w.learner.eta, Eta::Fixed(1.0));
        assert!(toml::from_str::<W>("learner = { kind = \"mwu\", eta = \"fast\" }").is_err());
        assert!(toml::from_str::<W>("learner = { kind = \"sgd\" }").is_err());
        let auto = LearnerSpec::new(LearnerKind::Mwu, Eta::Auto).resolve_eta(9, 10_000).unwrap();
        assert!((auto - (10f64.ln() / 1e4).sqrt()).abs() < 1e-15);
    }
}
