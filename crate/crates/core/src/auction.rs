//! Discrete-bid auction formats.
//!
//! Bids live on the grid `{0, 1/K, …, 1}` and are passed around as indices
//! `0..=K`. A format maps a bid profile to an allocation vector (a
//! sub-distribution over bidders; the item may go unsold) and a vector of
//! expected payments. Formats are either one of the standard reserve-price
//! families or an explicit table over all `(K+1)^n` profiles.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Largest number of profiles a table may hold or an exhaustive routine may visit.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

const TOL: f64 = 1e-12;

/// The bid levels `j / K` for `j = 0..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BidGrid {
    k: usize,
}

impl BidGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidFormat("grid size K must be at least 1".into()));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of bid levels, `K + 1`.
    pub fn levels(&self) -> usize {
        self.k + 1
    }

    pub fn level(&self, index: usize) -> f64 {
        index as f64 / self.k as f64
    }
}

/// Number of profiles over `slots` bidders, or an error past the budget.
pub fn profile_count(levels: usize, slots: usize) -> Result<usize> {
    let size = (levels as u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { size, budget: ENUMERATION_BUDGET });
    }
    Ok(size as usize)
}

/// Steps `profile` to the next one in lexicographic order (last slot fastest).
/// Returns `false` after the last profile, leaving `profile` all zeros.
pub fn next_profile(profile: &mut [usize], levels: usize) -> bool {
    for slot in profile.iter_mut().rev() {
        *slot += 1;
        if *slot < levels {
            return true;
        }
        *slot = 0;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FirstPrice,
    SecondPrice,
    AllPay,
    PostedPrice,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::FirstPrice => "first_price",
            Family::SecondPrice => "second_price",
            Family::AllPay => "all_pay",
            Family::PostedPrice => "posted_price",
        }
    }
}

/// Configuration record for a format: `{ family = "first_price", reserve_index = 5 }`
/// or `{ family = "table", allocation = [[…], …], payment = [[…], …] }` with one
/// row per profile, lexicographic over bid indices with bidder 1 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormatSpec {
    FirstPrice {
        #[serde(default)]
        reserve_index: usize,
    },
    SecondPrice {
        #[serde(default)]
        reserve_index: usize,
    },
    AllPay {
        #[serde(default)]
        reserve_index: usize,
    },
    PostedPrice {
        #[serde(default)]
        reserve_index: usize,
    },
    Table {
        allocation: Vec<Vec<f64>>,
        payment: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Standard { family: Family, reserve: usize },
    /// Row-major `[profile][bidder]`.
    Table { alloc: Vec<f64>, pay: Vec<f64> },
}

/// A bidder's allocation and payment as functions of their own bid level,
/// with everyone else's bids held fixed (or averaged over).
#[derive(Debug, Clone, PartialEq)]
pub struct OwnBidCurve {
    pub allocation: Vec<f64>,
    pub payment: Vec<f64>,
}

impl OwnBidCurve {
    pub fn zeros(levels: usize) -> Self {
        Self { allocation: vec![0.0; levels], payment: vec![0.0; levels] }
    }

    pub fn levels(&self) -> usize {
        self.allocation.len()
    }

    pub fn add_scaled(&mut self, other: &OwnBidCurve, weight: f64) {
        for (a, b) in self.allocation.iter_mut().zip(&other.allocation) {
            *a += weight * b;
        }
        for (a, b) in self.payment.iter_mut().zip(&other.payment) {
            *a += weight * b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionFormat {
    n: usize,
    grid: BidGrid,
    repr: Repr,
}

impl AuctionFormat {
    pub fn standard(family: Family, n: usize, k: usize, reserve: usize) -> Result<Self> {
        let grid = BidGrid::new(k)?;
        if n == 0 {
            return Err(Error::InvalidFormat("need at least one bidder".into()));
        }
        if reserve > k {
            return Err(Error::ReserveOutOfRange { reserve, k });
        }
        Ok(Self { n, grid, repr: Repr::Standard { family, reserve } })
    }

    /// Explicit table with one row of `n` entries per profile.
    pub fn table(n: usize, k: usize, allocation: Vec<Vec<f64>>, payment: Vec<Vec<f64>>) -> Result<Self> {
        let grid = BidGrid::new(k)?;
        if n == 0 {
            return Err(Error::InvalidFormat("need at least one bidder".into()));
        }
        let rows = profile_count(grid.levels(), n)?;
        let flatten = |name: &str, table: Vec<Vec<f64>>| -> Result<Vec<f64>> {
            if table.len() != rows {
                return Err(Error::InvalidFormat(format!(
                    "{name} table has {} rows, expected (K+1)^n = {rows}",
                    table.len()
                )));
            }
            let mut flat = Vec::with_capacity(rows * n);
            for (r, row) in table.into_iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidFormat(format!(
                        "{name} row {r} has {} entries, expected n = {n}",
                        row.len()
                    )));
                }
                if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidFormat(format!("{name} row {r} entry {c} is not finite")));
                }
                flat.extend(row);
            }
            Ok(flat)
        };
        let alloc = flatten("allocation", allocation)?;
        let pay = flatten("payment", payment)?;
        Ok(Self { n, grid, repr: Repr::Table { alloc, pay } })
    }

    pub fn from_spec(spec: &FormatSpec, n: usize, k: usize) -> Result<Self> {
        match spec {
            FormatSpec::FirstPrice { reserve_index } => Self::standard(Family::FirstPrice, n, k, *reserve_index),
            FormatSpec::SecondPrice { reserve_index } => Self::standard(Family::SecondPrice, n, k, *reserve_index),
            FormatSpec::AllPay { reserve_index } => Self::standard(Family::AllPay, n, k, *reserve_index),
            FormatSpec::PostedPrice { reserve_index } => Self::standard(Family::PostedPrice, n, k, *reserve_index),
            FormatSpec::Table { allocation, payment } => Self::table(n, k, allocation.clone(), payment.clone()),
        }
    }

    /// Never allocates and never charges.
    pub fn null(n: usize, k: usize) -> Result<Self> {
        let rows = profile_count(k + 1, n)?;
        Self::table(n, k, vec![vec![0.0; n]; rows], vec![vec![0.0; n]; rows])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> BidGrid {
        self.grid
    }

    pub fn k(&self) -> usize {
        self.grid.k
    }

    pub fn family(&self) -> Option<(Family, usize)> {
        match self.repr {
            Repr::Standard { family, reserve } => Some((family, reserve)),
            Repr::Table { .. } => None,
        }
    }

    /// Short identifier: `first_price@r5`, or `table:` plus a content hash.
    pub fn digest(&self) -> String {
        match &self.repr {
            Repr::Standard { family, reserve } => format!("{}@r{reserve}", family.name()),
            Repr::Table { alloc, pay } => {
                let mut h = Sha256::new();
                h.update((self.n as u64).to_le_bytes());
                h.update((self.grid.k as u64).to_le_bytes());
                for v in alloc.iter().chain(pay) {
                    h.update(v.to_bits().to_le_bytes());
                }
                let bytes = h.finalize();
                let hex: String = bytes[..8].iter().map(|b| format!("{b:02x}")).collect();
                format!("table:{hex}")
            }
        }
    }

    fn row_index(&self, profile: &[usize]) -> usize {
        profile.iter().fold(0, |acc, &b| acc * self.grid.levels() + b)
    }

    fn check_profile(&self, profile: &[usize]) -> Result<()> {
        if profile.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: profile.len() });
        }
        if let Some(&b) = profile.iter().find(|&&b| b > self.grid.k) {
            return Err(Error::BidOutOfRange { index: b, k: self.grid.k });
        }
        Ok(())
    }

    /// Writes allocation and payment vectors for a profile already known to be valid.
    pub(crate) fn outcome_into(&self, profile: &[usize], alloc: &mut [f64], pay: &mut [f64]) {
        match &self.repr {
            Repr::Table { alloc: ta, pay: tp } => {
                let base = self.row_index(profile) * self.n;
                alloc.copy_from_slice(&ta[base..base + self.n]);
                pay.copy_from_slice(&tp[base..base + self.n]);
            }
            Repr::Standard { family, reserve } => {
                standard_outcome(*family, *reserve, self.grid, profile, alloc, pay)
            }
        }
    }

    pub fn allocate(&self, profile: &[usize]) -> Result<Vec<f64>> {
        Ok(self.outcome(profile)?.0)
    }

    pub fn payment(&self, profile: &[usize]) -> Result<Vec<f64>> {
        Ok(self.outcome(profile)?.1)
    }

    pub fn outcome(&self, profile: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_profile(profile)?;
        let mut alloc = vec![0.0; self.n];
        let mut pay = vec![0.0; self.n];
        self.outcome_into(profile, &mut alloc, &mut pay);
        Ok((alloc, pay))
    }

    /// Bidder `bidder`'s allocation and payment at each own bid, with the
    /// other bidders' bids `others` (length `n - 1`, in bidder order).
    pub fn own_bid_curve(&self, bidder: usize, others: &[usize]) -> Result<OwnBidCurve> {
        if bidder >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: bidder + 1 });
        }
        if others.len() + 1 != self.n {
            return Err(Error::DimensionMismatch { expected: self.n - 1, actual: others.len() });
        }
        if let Some(&b) = others.iter().find(|&&b| b > self.grid.k) {
            return Err(Error::BidOutOfRange { index: b, k: self.grid.k });
        }
        let mut curve = OwnBidCurve::zeros(self.grid.levels());
        self.own_bid_curve_into(bidder, others, &mut curve, &mut Scratch::new(self.n));
        Ok(curve)
    }

    pub(crate) fn own_bid_curve_into(&self, bidder: usize, others: &[usize], curve: &mut OwnBidCurve, scratch: &mut Scratch) {
        let Scratch { profile, alloc, pay } = scratch;
        profile[..bidder].copy_from_slice(&others[..bidder]);
        profile[bidder + 1..].copy_from_slice(&others[bidder..]);
        for b in 0..self.grid.levels() {
            profile[bidder] = b;
            self.outcome_into(profile, alloc, pay);
            curve.allocation[b] = alloc[bidder];
            curve.payment[b] = pay[bidder];
        }
    }

    /// Checks the format against the bid-format assumptions by visiting every profile.
    pub fn validate(&self) -> Result<ValidationReport> {
        let levels = self.grid.levels();
        let count = profile_count(levels, self.n)?;
        let mut report = ValidationReport { profiles_checked: count, violations: Vec::new() };
        let mut profile = vec![0usize; self.n];
        let mut alloc = vec![0.0; self.n];
        let mut pay = vec![0.0; self.n];
        let mut up_alloc = vec![0.0; self.n];
        let mut up_pay = vec![0.0; self.n];
        loop {
            self.outcome_into(&profile, &mut alloc, &mut pay);
            let total: f64 = alloc.iter().sum();
            if let Some(i) = alloc.iter().position(|&x| !(-TOL..=1.0 + TOL).contains(&x)) {
                report.record(Condition::AllocationRange, i, &profile, format!("x_{} = {}", i + 1, alloc[i]));
            } else if total > 1.0 + TOL {
                report.record(Condition::AllocationRange, 0, &profile, format!("allocations sum to {total}"));
            }
            if let Some(i) = pay.iter().position(|&p| !(-TOL..=1.0 + TOL).contains(&p)) {
                report.record(Condition::PaymentRange, i, &profile, format!("p_{} = {}", i + 1, pay[i]));
            }
            for i in 0..self.n {
                if profile[i] == 0 && pay[i].abs() > TOL {
                    report.record(
                        Condition::VoluntaryParticipation,
                        i,
                        &profile,
                        format!("p_{} = {} at a zero bid", i + 1, pay[i]),
                    );
                }
                if profile[i] + 1 < levels {
                    profile[i] += 1;
                    self.outcome_into(&profile, &mut up_alloc, &mut up_pay);
                    profile[i] -= 1;
                    if up_alloc[i] < alloc[i] - TOL {
                        report.record(
                            Condition::AllocationMonotonicity,
                            i,
                            &profile,
                            format!(
                                "x_{} drops from {} to {} when its bid rises from {} to {}",
                                i + 1,
                                alloc[i],
                                up_alloc[i],
                                profile[i],
                                profile[i] + 1
                            ),
                        );
                    }
                }
            }
            if !next_profile(&mut profile, levels) {
                break;
            }
        }
        Ok(report)
    }

    /// Validated random table: a mixture of a ratio-form allocation with
    /// non-decreasing bidder weights and a random standard family, plus
    /// random payments that vanish at a zero bid.
    pub fn random_valid_table(n: usize, k: usize, rng: &mut SimRng) -> Result<Self> {
        let grid = BidGrid::new(k)?;
        let levels = grid.levels();
        let rows = profile_count(levels, n)?;
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut w = Vec::with_capacity(levels);
                let mut acc = if rng.uniform() < 0.3 { 0.0 } else { rng.exponential() };
                w.push(acc);
                for _ in 1..levels {
                    if rng.uniform() < 0.75 {
                        acc += rng.exponential();
                    }
                    w.push(acc);
                }
                w
            })
            .collect();
        let no_sale = if rng.coin() { 0.0 } else { rng.exponential() };
        let scale = rng.uniform_in(0.5, 1.0);
        let mix = rng.uniform();
        let families = [Family::FirstPrice, Family::SecondPrice, Family::AllPay, Family::PostedPrice];
        let base = Self::standard(families[rng.below(4)], n, k, rng.below(levels))?;
        let mut allocation = Vec::with_capacity(rows);
        let mut payment = Vec::with_capacity(rows);
        let mut profile = vec![0usize; n];
        let mut bx = vec![0.0; n];
        let mut bp = vec![0.0; n];
        loop {
            base.outcome_into(&profile, &mut bx, &mut bp);
            let denom: f64 = no_sale + profile.iter().enumerate().map(|(i, &b)| weights[i][b]).sum::<f64>();
            let row: Vec<f64> = (0..n)
                .map(|i| {
                    let ratio = if denom > 0.0 { scale * weights[i][profile[i]] / denom } else { 0.0 };
                    mix * ratio + (1.0 - mix) * bx[i]
                })
                .collect();
            let pay: Vec<f64> = profile.iter().map(|&b| if b == 0 { 0.0 } else { rng.uniform() }).collect();
            allocation.push(row);
            payment.push(pay);
            if !next_profile(&mut profile, levels) {
                break;
            }
        }
        Self::table(n, k, allocation, payment)
    }

    /// Materializes any format as an explicit table.
    pub fn to_table(&self) -> Result<Self> {
        let levels = self.grid.levels();
        let rows = profile_count(levels, self.n)?;
        let mut allocation = Vec::with_capacity(rows);
        let mut payment = Vec::with_capacity(rows);
        let mut profile = vec![0usize; self.n];
        loop {
            let (x, p) = self.outcome(&profile)?;
            allocation.push(x);
            payment.push(p);
            if !next_profile(&mut profile, levels) {
                break;
            }
        }
        Self::table(self.n, self.grid.k, allocation, payment)
    }
}

/// Reusable buffers for hot loops.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    pub profile: Vec<usize>,
    pub alloc: Vec<f64>,
    pub pay: Vec<f64>,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Self { profile: vec![0; n], alloc: vec![0.0; n], pay: vec![0.0; n] }
    }
}

fn standard_outcome(family: Family, reserve: usize, grid: BidGrid, profile: &[usize], alloc: &mut [f64], pay: &mut [f64]) {
    alloc.fill(0.0);
    pay.fill(0.0);
    match family {
        Family::PostedPrice => {
            let floor = reserve.max(1);
            let winners = profile.iter().filter(|&&b| b >= floor).count();
            if winners > 0 {
                let share = 1.0 / winners as f64;
                for (i, &b) in profile.iter().enumerate() {
                    if b >= floor {
                        alloc[i] = share;
                        pay[i] = share * grid.level(reserve);
                    }
                }
            }
        }
        Family::FirstPrice | Family::SecondPrice | Family::AllPay => {
            let top = profile.iter().copied().filter(|&b| b >= reserve).max();
            if let Some(top) = top {
                let winners = profile.iter().filter(|&&b| b == top).count();
                let share = 1.0 / winners as f64;
                for (i, &b) in profile.iter().enumerate() {
                    if b == top {
                        alloc[i] = share;
                    }
                }
            }
            for (i, &b) in profile.iter().enumerate() {
                pay[i] = match family {
                    Family::FirstPrice => alloc[i] * grid.level(b),
                    Family::SecondPrice => {
                        if alloc[i] > 0.0 {
                            let runner_up = profile
                                .iter()
                                .enumerate()
                                .filter(|&(j, &bj)| j != i && bj >= reserve)
                                .map(|(_, &bj)| bj)
                                .max()
                                .unwrap_or(reserve)
                                .max(reserve);
                            alloc[i] * grid.level(runner_up)
                        } else {
                            0.0
                        }
                    }
                    _ => {
                        if b > 0 {
                            grid.level(b)
                        } else {
                            0.0
                        }
                    }
                };
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    AllocationRange,
    PaymentRange,
    AllocationMonotonicity,
    VoluntaryParticipation,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::AllocationRange => "allocation_range",
            Condition::PaymentRange => "payment_range",
            Condition::AllocationMonotonicity => "monotonicity",
            Condition::VoluntaryParticipation => "voluntary_participation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    /// Zero-based bidder index.
    pub bidder: usize,
    pub profile: Vec<usize>,
    pub detail: String,
}

/// First witness per failed condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub profiles_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn record(&mut self, condition: Condition, bidder: usize, profile: &[usize], detail: String) {
        if self.failure(condition).is_none() {
            self.violations.push(Violation { condition, bidder, profile: profile.to_vec(), detail });
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failure(&self, condition: Condition) -> Option<&Violation> {
        self.violations.iter().find(|v| v.condition == condition)
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return format!("pass ({} profiles)", self.profiles_checked);
        }
        self.violations
            .iter()
            .map(|v| format!("fail({}) at profile {:?}: {}", v.condition.name(), v.profile, v.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [Family; 4] = [Family::FirstPrice, Family::SecondPrice, Family::AllPay, Family::PostedPrice];

    #[test]
    fn first_price_examples() {
        let f = AuctionFormat::standard(Family::FirstPrice, 2, 2, 0).unwrap();
        assert_eq!(f.outcome(&[1, 2]).unwrap(), (vec![0.0, 1.0], vec![0.0, 1.0]));
        assert_eq!(f.outcome(&[1, 1]).unwrap(), (vec![0.5, 0.5], vec![0.25, 0.25]));
    }

    #[test]
    fn second_price_below_reserve_gets_nothing() {
        let f = AuctionFormat::standard(Family::SecondPrice, 1, 2, 1).unwrap();
        assert_eq!(f.outcome(&[0]).unwrap(), (vec![0.0], vec![0.0]));
        // Meeting the reserve alone pays the reserve.
        assert_eq!(f.outcome(&[2]).unwrap(), (vec![1.0], vec![0.5]));
    }

    #[test]
    fn allocate_examples() {
        let posted = AuctionFormat::standard(Family::PostedPrice, 1, 2, 1).unwrap();
        assert_eq!(posted.allocate(&[2]).unwrap(), vec![1.0]);
        let all_pay = AuctionFormat::standard(Family::AllPay, 2, 2, 1).unwrap();
        assert_eq!(all_pay.allocate(&[0, 0]).unwrap(), vec![0.0, 0.0]);
        let table = AuctionFormat::table(
            1,
            1,
            vec![vec![0.2], vec![0.7]],
            vec![vec![0.0], vec![0.3]],
        )
        .unwrap();
        assert_eq!(table.allocate(&[1]).unwrap(), vec![0.7]);
        assert_eq!(table.payment(&[1]).unwrap(), vec![0.3]);
    }

    #[test]
    fn payment_examples() {
        let all_pay = AuctionFormat::standard(Family::AllPay, 2, 2, 0).unwrap();
        assert_eq!(all_pay.payment(&[1, 2]).unwrap(), vec![0.5, 1.0]);
        let sp = AuctionFormat::standard(Family::SecondPrice, 2, 2, 0).unwrap();
        assert_eq!(sp.payment(&[1, 2]).unwrap(), vec![0.0, 0.5]);
        for fam in ALL {
            let f = AuctionFormat::standard(fam, 3, 4, 2).unwrap();
            for others in [[0, 0], [4, 1], [2, 3]] {
                assert_eq!(f.payment(&[0, others[0], others[1]]).unwrap()[0], 0.0);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            AuctionFormat::standard(Family::FirstPrice, 2, 3, 4),
            Err(Error::ReserveOutOfRange { reserve: 4, k: 3 })
        ));
        let f = AuctionFormat::standard(Family::FirstPrice, 2, 3, 0).unwrap();
        assert!(matches!(f.allocate(&[1]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(f.payment(&[1, 2, 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(f.allocate(&[1, 9]), Err(Error::BidOutOfRange { .. })));
        assert!(AuctionFormat::table(1, 1, vec![vec![0.0]], vec![vec![0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn standard_families_validate_exhaustively() {
        for fam in ALL {
            for n in 1..=3 {
                for k in 1..=10 {
                    for r in 0..=k {
                        let f = AuctionFormat::standard(fam, n, k, r).unwrap();
                        let report = f.validate().unwrap();
                        assert!(report.passed(), "{fam:?} n={n} k={k} r={r}: {}", report.summary());
                    }
                }
            }
        }
    }

    #[test]
    fn first_price_pays_allocation_times_bid() {
        let f = AuctionFormat::standard(Family::FirstPrice, 3, 5, 2).unwrap();
        let mut profile = vec![0; 3];
        loop {
            let (x, p) = f.outcome(&profile).unwrap();
            for i in 0..3 {
                assert!((p[i] - x[i] * profile[i] as f64 / 5.0).abs() < 1e-15);
            }
            if !next_profile(&mut profile, 6) {
                break;
            }
        }
    }

    #[test]
    fn planted_violations_are_reported() {
        let good = AuctionFormat::standard(Family::FirstPrice, 2, 2, 0).unwrap().to_table().unwrap();
        let Repr::Table { alloc, pay } = &good.repr else { unreachable!() };
        let rows = |flat: &Vec<f64>| flat.chunks(2).map(|c| c.to_vec()).collect::<Vec<_>>();

        let mut bad_pay = rows(pay);
        // Profile (0, 2): bidder 1 bids zero.
        bad_pay[2][0] = 0.1;
        let f = AuctionFormat::table(2, 2, rows(alloc), bad_pay).unwrap();
        let report = f.validate().unwrap();
        let v = report.failure(Condition::VoluntaryParticipation).expect("planted violation");
        assert_eq!((v.bidder, v.profile.clone()), (0, vec![0, 2]));

        let mut bad_alloc = rows(alloc);
        // Profile (2, 1): bidder 1 wins outright; lowering it below (1, 1) breaks monotonicity.
        bad_alloc[7][0] = 0.2;
        let f = AuctionFormat::table(2, 2, bad_alloc, rows(pay)).unwrap();
        let report = f.validate().unwrap();
        let v = report.failure(Condition::AllocationMonotonicity).expect("planted violation");
        assert_eq!((v.bidder, v.profile.clone()), (0, vec![1, 1]));
    }

    #[test]
    fn budget_refusal() {
        let f = AuctionFormat::standard(Family::FirstPrice, 8, 9, 0).unwrap();
        assert!(matches!(f.validate(), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn random_tables_validate() {
        let mut rng = SimRng::seed_from(77);
        for _ in 0..300 {
            let n = 1 + rng.below(3);
            let k = 1 + rng.below(5);
            let f = AuctionFormat::random_valid_table(n, k, &mut rng).unwrap();
            assert!(f.validate().unwrap().passed());
        }
    }

    #[test]
    fn digest_distinguishes_tables() {
        let mut rng = SimRng::seed_from(1);
        let a = AuctionFormat::random_valid_table(2, 2, &mut rng).unwrap();
        let b = AuctionFormat::random_valid_table(2, 2, &mut rng).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert!(a.digest().starts_with("table:"));
        assert_eq!(AuctionFormat::standard(Family::AllPay, 2, 4, 3).unwrap().digest(), "all_pay@r3");
    }

    #[test]
    fn own_bid_curve_matches_profiles() {
        let f = AuctionFormat::standard(Family::SecondPrice, 3, 3, 1).unwrap();
        let curve = f.own_bid_curve(1, &[2, 1]).unwrap();
        for b in 0..4 {
            let (x, p) = f.outcome(&[2, b, 1]).unwrap();
            assert_eq!(curve.allocation[b], x[1]);
            assert_eq!(curve.payment[b], p[1]);
        }
    }

    proptest! {
        #[test]
        fn symmetric_families_are_permutation_equivariant(
            fam in 0usize..4,
            reserve in 0usize..=4,
            bids in proptest::collection::vec(0usize..=4, 3),
            perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
        ) {
            let f = AuctionFormat::standard(ALL[fam], 3, 4, reserve).unwrap();
            let (x, p) = f.outcome(&bids).unwrap();
            let permuted: Vec<usize> = perm.iter().map(|&j| bids[j]).collect();
            let (px, pp) = f.outcome(&permuted).unwrap();
            for (slot, &j) in perm.iter().enumerate() {
                prop_assert_eq!(px[slot], x[j]);
                prop_assert_eq!(pp[slot], p[j]);
            }
        }
    }
}
