//! Auxiliary auctions: a discrete format composed with monotone strategies,
//! turned into a direct mechanism with Myerson payments.

use crate::auction::{AuctionFormat, OwnBidCurve, Scratch};
use crate::distributions::ValueDistribution;
use crate::error::{Error, Result};
use crate::quantile::{induce_strategy, MonotoneBiddingStrategy};

use super::revenue::StrategyProfile;

/// A direct-revelation mechanism over values in `[0, 1]^n`.
pub trait DirectMechanism {
    fn n(&self) -> usize;
    /// Allocation and payment vectors for reported values.
    fn outcome(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// Values where bidder `i`'s allocation may jump.
    fn breakpoints(&self, bidder: usize) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct AuxiliaryAuction {
    format: AuctionFormat,
    strategies: Vec<MonotoneBiddingStrategy>,
}

impl AuxiliaryAuction {
    pub fn new(format: AuctionFormat, strategies: Vec<MonotoneBiddingStrategy>) -> Result<Self> {
        if strategies.len() != format.n() {
            return Err(Error::DimensionMismatch { expected: format.n(), actual: strategies.len() });
        }
        if let Some(s) = strategies.iter().find(|s| s.k() != format.k()) {
            return Err(Error::DimensionMismatch { expected: format.k() + 1, actual: s.k() + 1 });
        }
        Ok(Self { format, strategies })
    }

    pub fn from_profile(format: AuctionFormat, profile: &StrategyProfile, dists: &[ValueDistribution]) -> Result<Self> {
        if dists.len() != profile.n() {
            return Err(Error::DimensionMismatch { expected: profile.n(), actual: dists.len() });
        }
        let strategies = profile.iter().zip(dists).map(|(pi, d)| induce_strategy(pi, d)).collect();
        Self::new(format, strategies)
    }

    pub fn format(&self) -> &AuctionFormat {
        &self.format
    }

    pub fn strategies(&self) -> &[MonotoneBiddingStrategy] {
        &self.strategies
    }

    fn bids(&self, values: &[f64]) -> Vec<usize> {
        assert_eq!(values.len(), self.format.n(), "one value per bidder");
        self.strategies.iter().zip(values).map(|(s, &v)| s.bid_of(v)).collect()
    }

    pub fn allocation(&self, values: &[f64]) -> Vec<f64> {
        let bids = self.bids(values);
        self.format.outcome(&bids).expect("bids are on the grid").0
    }

    /// `p̃_i = x̃_i(v) v_i − ∫₀^{v_i} x̃_i(u, v_{-i}) du`, integrated exactly over the step function.
    pub fn payment(&self, values: &[f64]) -> Vec<f64> {
        self.outcome(values).1
    }

    fn own_curve(&self, bidder: usize, bids: &[usize], scratch: &mut Scratch) -> OwnBidCurve {
        let others: Vec<usize> = bids.iter().enumerate().filter(|&(j, _)| j != bidder).map(|(_, &b)| b).collect();
        let mut curve = OwnBidCurve::zeros(self.format.k() + 1);
        self.format.own_bid_curve_into(bidder, &others, &mut curve, scratch);
        curve
    }
}

/// `∫₀^v x[s(u)] du` for the step function defined by threshold strategy `s`.
pub fn step_integral(s: &MonotoneBiddingStrategy, levels: &[f64], v: f64) -> f64 {
    let t = s.thresholds();
    let k = s.k();
    let mut lo = 0.0;
    let mut total = 0.0;
    for j in 0..=k {
        let hi = t[j].min(v);
        if hi > lo {
            total += levels[j] * (hi - lo);
        }
        lo = lo.max(t[j]);
    }
    if v > lo {
        total += levels[k] * (v - lo);
    }
    total
}

impl DirectMechanism for AuxiliaryAuction {
    fn n(&self) -> usize {
        self.format.n()
    }

    fn outcome(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let bids = self.bids(values);
        let mut scratch = Scratch::new(self.format.n());
        let mut alloc = vec![0.0; self.format.n()];
        let mut pay = vec![0.0; self.format.n()];
        for i in 0..self.format.n() {
            let curve = self.own_curve(i, &bids, &mut scratch);
            alloc[i] = curve.allocation[bids[i]];
            pay[i] = alloc[i] * values[i] - step_integral(&self.strategies[i], &curve.allocation, values[i]);
        }
        (alloc, pay)
    }

    fn breakpoints(&self, bidder: usize) -> Vec<f64> {
        self.strategies[bidder].thresholds().to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcWitness {
    pub bidder: usize,
    pub values: Vec<f64>,
    pub misreport: f64,
    /// Utility gained by misreporting.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrWitness {
    pub bidder: usize,
    pub values: Vec<f64>,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcIrReport {
    pub pairs_checked: usize,
    pub ic: Option<IcWitness>,
    pub ir: Option<IrWitness>,
}

impl IcIrReport {
    pub fn passed(&self) -> bool {
        self.ic.is_none() && self.ir.is_none()
    }
}

const IC_TOL: f64 = 1e-9;
const STRADDLE: f64 = 1e-6;

fn own_grid(breaks: &[f64], resolution: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=resolution).map(|i| i as f64 / resolution as f64).collect();
    for &b in breaks {
        grid.extend([b - STRADDLE, b, b + STRADDLE].map(|x| x.clamp(0.0, 1.0)));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn representative_values(breaks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = breaks.iter().copied().chain([0.0, 1.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut reps = cuts.clone();
    reps.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    reps.sort_by(f64::total_cmp);
    reps
}

/// Mixed-radix odometer step; `false` once every combination was visited.
fn next_mixed(pick: &mut [usize], sizes: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator) -> bool {
    for (slot, size) in pick.iter_mut().zip(sizes).rev() {
        *slot += 1;
        if *slot < size {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Grid check of truthfulness and participation: own values and misreports on
/// a `resolution`-point grid plus every breakpoint and its ±1e-6 neighbours,
/// opponents on representative values of each allocation step.
pub fn check_ic_ir<M: DirectMechanism + ?Sized>(mech: &M, resolution: usize) -> IcIrReport {
    let n = mech.n();
    let reps: Vec<Vec<f64>> = (0..n).map(|j| representative_values(&mech.breakpoints(j))).collect();
    let mut report = IcIrReport { pairs_checked: 0, ic: None, ir: None };
    for i in 0..n {
        let grid = own_grid(&mech.breakpoints(i), resolution);
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut pick = vec![0usize; others.len()];
        loop {
            let mut values = vec![0.0; n];
            for (slot, &j) in others.iter().enumerate() {
                values[j] = reps[j][pick[slot]];
            }
            let outcomes: Vec<(f64, f64)> = grid
                .iter()
                .map(|&u| {
                    values[i] = u;
                    let (x, p) = mech.outcome(&values);
                    (x[i], p[i])
                })
                .collect();
            for (a, &v) in grid.iter().enumerate() {
                let truthful = outcomes[a].0 * v - outcomes[a].1;
                if truthful < -IC_TOL && report.ir.as_ref().is_none_or(|w| truthful < w.utility) {
                    values[i] = v;
                    report.ir = Some(IrWitness { bidder: i, values: values.clone(), utility: truthful });
                }
                let (best, w) = outcomes
                    .iter()
                    .enumerate()
                    .map(|(b, &(x, p))| (x * v - p, b))
                    .fold((f64::NEG_INFINITY, 0), |acc, c| if c.0 > acc.0 { c } else { acc });
                let gain = best - truthful;
                if gain > IC_TOL && report.ic.as_ref().is_none_or(|wit| gain > wit.gain) {
                    values[i] = v;
                    report.ic = Some(IcWitness { bidder: i, values: values.clone(), misreport: grid[w], gain });
                }
                report.pairs_checked += grid.len();
            }
            if !next_mixed(&mut pick, others.iter().map(|&j| reps[j].len())) {
                break;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::Family;
    use crate::quantile::QuantileStrategy;
    use crate::rng::SimRng;

    /// Single bidder, K = 2: allocation 1/4 at bid 0 and 1/2 from bid 1/2 on,
    /// strategy bids 1/2 once the value passes 1/2.
    fn two_bidder_auction() -> AuxiliaryAuction {
        let format = AuctionFormat::table(
            1,
            2,
            vec![vec![0.25], vec![0.5], vec![0.5]],
            vec![vec![0.0], vec![0.2], vec![0.3]],
        )
        .unwrap();
        let s = MonotoneBiddingStrategy::new(vec![0.5, 1.0, 1.0]).unwrap();
        AuxiliaryAuction::new(format, vec![s]).unwrap()
    }

    #[test]
    fn two_bidder_allocation_and_payment() {
        let aux = two_bidder_auction();
        assert_eq!(aux.allocation(&[0.3]), vec![0.25]);
        assert_eq!(aux.allocation(&[0.8]), vec![0.5]);
        assert!((aux.payment(&[0.8])[0] - 0.125).abs() < 1e-15);
        assert_eq!(aux.payment(&[0.3]), vec![0.0]);
        assert_eq!(aux.payment(&[0.0]), vec![0.0]);
    }

    #[test]
    fn two_bidder_passes_ic_ir() {
        let report = check_ic_ir(&two_bidder_auction(), 1000);
        assert!(report.passed(), "{report:?}");
        assert!(report.pairs_checked > 1_000_000);
    }

    #[test]
    fn constant_allocation_is_free() {
        let format = AuctionFormat::standard(Family::FirstPrice, 2, 3, 0).unwrap();
        let zero = MonotoneBiddingStrategy::new(vec![1.0; 4]).unwrap();
        let aux = AuxiliaryAuction::new(format, vec![zero.clone(), zero]).unwrap();
        for v in [0.0, 0.3, 0.9] {
            assert_eq!(aux.allocation(&[v, 0.5]), vec![0.5, 0.5]);
            assert_eq!(aux.payment(&[v, 0.5]), vec![0.0, 0.0]);
        }
        assert!(check_ic_ir(&aux, 50).passed());
    }

    struct Overcharge<'a>(&'a AuxiliaryAuction);

    impl DirectMechanism for Overcharge<'_> {
        fn n(&self) -> usize {
            self.0.n()
        }
        fn outcome(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
            let (x, mut p) = self.0.outcome(values);
            if values[0] >= 0.5 {
                p[0] += 0.01;
            }
            (x, p)
        }
        fn breakpoints(&self, bidder: usize) -> Vec<f64> {
            self.0.breakpoints(bidder)
        }
    }

    #[test]
    fn planted_overcharge_is_caught() {
        let aux = two_bidder_auction();
        let report = check_ic_ir(&Overcharge(&aux), 1000);
        let w = report.ic.expect("misreport below the threshold pays off");
        assert_eq!(w.bidder, 0);
        assert!(w.values[0] >= 0.5 && w.misreport < 0.5 && w.gain > 0.0);
    }

    #[test]
    fn random_aux_auctions() {
        let mut rng = SimRng::seed_from(31);
        for _ in 0..30 {
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(4);
            let format = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            let dists: Vec<ValueDistribution> = (0..n).map(|_| ValueDistribution::random_piecewise(&mut rng)).collect();
            let profile = StrategyProfile::new((0..n).map(|_| QuantileStrategy::random(k + 1, &mut rng)).collect()).unwrap();
            let aux = AuxiliaryAuction::from_profile(format, &profile, &dists).unwrap();
            assert!(check_ic_ir(&aux, 100).passed());
            // Own-value monotone allocation and 0 ≤ p̃ ≤ v.
            let others: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let mut prev = f64::NEG_INFINITY;
            for step in 0..=200 {
                let mut values = others.clone();
                values[0] = step as f64 / 200.0;
                let (x, p) = aux.outcome(&values);
                assert!(x[0] >= prev - 1e-15);
                prev = x[0];
                assert!(p[0] >= -1e-15 && p[0] <= values[0] + 1e-15);
            }
        }
    }

    #[test]
    fn step_integral_handles_empty_intervals() {
        let s = MonotoneBiddingStrategy::new(vec![0.2, 0.2, 0.6, 0.9]).unwrap();
        let x = [0.1, 0.5, 0.6, 1.0];
        let expect = 0.1 * 0.2 + 0.6 * 0.4 + 1.0 * 0.3 + 1.0 * 0.05;
        assert!((step_integral(&s, &x, 0.95) - expect).abs() < 1e-15);
        assert!((step_integral(&s, &x, 0.1) - 0.01).abs() < 1e-15);
    }
}
