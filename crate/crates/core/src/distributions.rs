//! Continuous value priors on `[0, 1]`.
//!
//! Three families are supported: uniform on a subinterval, an exponential
//! truncated to a subinterval, and an arbitrary piecewise-linear CDF. Each
//! exposes the CDF, the generalized inverse CDF, the density, the virtual
//! value, and the quantile integral `G(q) = ∫₀^q F⁻¹(z) dz` in closed form,
//! which is what the exact utility and revenue computations integrate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Configuration record for a prior, e.g. `{ kind = "uniform", lo = 0.0, hi = 1.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    TruncatedExponential {
        rate: f64,
        #[serde(default = "zero")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    PiecewiseLinearCdf {
        knots: Vec<(f64, f64)>,
    },
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Uniform,
    /// `mass = 1 - exp(-rate (hi - lo))`.
    TruncatedExponential { rate: f64, mass: f64 },
    /// Knots `(v_i, p_i)` with strictly increasing coordinates, and the
    /// cumulative quantile integral at each knot.
    Piecewise { knots: Vec<(f64, f64)>, integral: Vec<f64> },
}

/// An atomless prior with strictly increasing CDF on its support `[lo, hi] ⊆ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution {
    kind: Kind,
    lo: f64,
    hi: f64,
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > 1.0 || lo >= hi {
        return Err(Error::InvalidDistribution(format!(
            "support [{lo}, {hi}] must be a non-degenerate subinterval of [0, 1]"
        )));
    }
    Ok(())
}

impl ValueDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_support(lo, hi)?;
        Ok(Self { kind: Kind::Uniform, lo, hi })
    }

    /// Exponential with the given rate, conditioned on `[lo, hi]`.
    pub fn truncated_exponential(rate: f64, lo: f64, hi: f64) -> Result<Self> {
        check_support(lo, hi)?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "rate must be positive and finite, got {rate}"
            )));
        }
        let mass = -(-rate * (hi - lo)).exp_m1();
        Ok(Self { kind: Kind::TruncatedExponential { rate, mass }, lo, hi })
    }

    /// CDF interpolating linearly between `(value, cumulative probability)` knots.
    ///
    /// The first knot must carry probability 0 and the last probability 1;
    /// both coordinates must be strictly increasing so the density is positive.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDistribution("need at least two knots".into()));
        }
        let (lo, p0) = knots[0];
        let (hi, p1) = knots[knots.len() - 1];
        check_support(lo, hi)?;
        if p0 != 0.0 || p1 != 1.0 {
            return Err(Error::InvalidDistribution(
                "first knot must have probability 0 and last knot probability 1".into(),
            ));
        }
        for (i, w) in knots.windows(2).enumerate() {
            let ((v0, q0), (v1, q1)) = (w[0], w[1]);
            if !(v1 > v0 && q1 > q0) || !v1.is_finite() || !q1.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "knots {i} and {} must be strictly increasing in value and probability",
                    i + 1
                )));
            }
        }
        let mut integral = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        integral.push(0.0);
        for w in knots.windows(2) {
            let ((v0, q0), (v1, q1)) = (w[0], w[1]);
            acc += (q1 - q0) * (v0 + v1) / 2.0;
            integral.push(acc);
        }
        Ok(Self { kind: Kind::Piecewise { knots, integral }, lo, hi })
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Uniform { lo, hi } => Self::uniform(*lo, *hi),
            DistributionSpec::TruncatedExponential { rate, lo, hi } => {
                Self::truncated_exponential(*rate, *lo, *hi)
            }
            DistributionSpec::PiecewiseLinearCdf { knots } => Self::piecewise_linear(knots.clone()),
        }
    }

    pub fn to_spec(&self) -> DistributionSpec {
        match &self.kind {
            Kind::Uniform => DistributionSpec::Uniform { lo: self.lo, hi: self.hi },
            Kind::TruncatedExponential { rate, .. } => DistributionSpec::TruncatedExponential {
                rate: *rate,
                lo: self.lo,
                hi: self.hi,
            },
            Kind::Piecewise { knots, .. } => DistributionSpec::PiecewiseLinearCdf { knots: knots.clone() },
        }
    }

    /// Random piecewise-linear prior with 2 to 5 segments, for randomized suites.
    pub fn random_piecewise(rng: &mut SimRng) -> Self {
        let segments = 2 + rng.below(4);
        let lo = if rng.coin() { 0.0 } else { rng.uniform_in(0.0, 0.3) };
        let hi = if rng.coin() { 1.0 } else { rng.uniform_in(0.7, 1.0) };
        let mut cuts: Vec<f64> = (0..segments - 1).map(|_| rng.uniform_in(0.05, 0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        let mut probs: Vec<f64> = (0..segments).map(|_| 0.1 + rng.exponential()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let mut knots = vec![(lo, 0.0)];
        let mut cum = 0.0;
        for (i, c) in cuts.iter().enumerate() {
            cum += probs[i];
            knots.push((lo + (hi - lo) * c, cum));
        }
        knots.push((hi, 1.0));
        // Cuts may collide in rare draws; fall back to a uniform in that case.
        Self::piecewise_linear(knots).unwrap_or_else(|_| Self::uniform(lo, hi).expect("valid support"))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if v <= self.lo {
            return 0.0;
        }
        if v >= self.hi {
            return 1.0;
        }
        match &self.kind {
            Kind::Uniform => (v - self.lo) / (self.hi - self.lo),
            Kind::TruncatedExponential { rate, mass } => -(-rate * (v - self.lo)).exp_m1() / mass,
            Kind::Piecewise { knots, .. } => {
                let i = knots.partition_point(|&(kv, _)| kv <= v) - 1;
                let ((v0, q0), (v1, q1)) = (knots[i], knots[i + 1]);
                q0 + (v - v0) * (q1 - q0) / (v1 - v0)
            }
        }
    }

    /// Generalized inverse `inf { v ∈ [lo, hi] : F(v) ≥ q }`, with `q` clamped to `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q <= 0.0 {
            return self.lo;
        }
        if q >= 1.0 {
            return self.hi;
        }
        let v = match &self.kind {
            Kind::Uniform => self.lo + (self.hi - self.lo) * q,
            Kind::TruncatedExponential { rate, mass } => self.lo - (-q * mass).ln_1p() / rate,
            Kind::Piecewise { knots, .. } => {
                let i = segment_of(knots, q);
                let ((v0, q0), (v1, q1)) = (knots[i], knots[i + 1]);
                v0 + (q - q0) * (v1 - v0) / (q1 - q0)
            }
        };
        v.clamp(self.lo, self.hi)
    }

    /// Density; right-continuous at piecewise knots, left limit at `hi`.
    /// Zero outside the support.
    pub fn pdf(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform => 1.0 / (self.hi - self.lo),
            Kind::TruncatedExponential { rate, mass } => rate * (-rate * (v - self.lo)).exp() / mass,
            Kind::Piecewise { knots, .. } => {
                let i = (knots.partition_point(|&(kv, _)| kv <= v) - 1).min(knots.len() - 2);
                let ((v0, q0), (v1, q1)) = (knots[i], knots[i + 1]);
                (q1 - q0) / (v1 - v0)
            }
        }
    }

    /// `φ(v) = v − (1 − F(v)) / f(v)` on the closed support.
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        let f = self.pdf(v);
        if f.is_nan() || f <= 0.0 {
            return Err(Error::ZeroDensity { value: v, lo: self.lo, hi: self.hi });
        }
        Ok(v - (1.0 - self.cdf(v)) / f)
    }

    /// Interior values where the density jumps (piecewise knots only).
    pub fn density_breaks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Piecewise { knots, .. } => knots[1..knots.len() - 1].iter().map(|&(v, _)| v).collect(),
            _ => Vec::new(),
        }
    }

    /// Virtual value just left of `v` (uses the density of the segment ending at `v`).
    pub(crate) fn virtual_value_left(&self, v: f64) -> f64 {
        match &self.kind {
            Kind::Piecewise { knots, .. } => {
                let i = knots.partition_point(|&(kv, _)| kv < v).saturating_sub(1).min(knots.len() - 2);
                let ((v0, q0), (v1, q1)) = (knots[i], knots[i + 1]);
                v - (1.0 - self.cdf(v)) * (v1 - v0) / (q1 - q0)
            }
            _ => self.virtual_value(v).expect("inside support"),
        }
    }

    /// Checks that the virtual value is non-decreasing on `points` evenly spaced
    /// support points and across every density discontinuity.
    pub fn check_regular(&self, points: usize) -> Result<()> {
        let points = points.max(2);
        let mut prev = f64::NEG_INFINITY;
        let mut prev_at = self.lo;
        for k in 0..points {
            let v = self.lo + (self.hi - self.lo) * k as f64 / (points - 1) as f64;
            let phi = self.virtual_value(v)?;
            if phi < prev - 1e-12 {
                return Err(Error::IrregularPrior { at: prev_at });
            }
            prev = phi;
            prev_at = v;
        }
        if let Kind::Piecewise { knots, .. } = &self.kind {
            for &(v, _) in &knots[1..knots.len() - 1] {
                let left = self.virtual_value_left(v);
                let right = self.virtual_value(v)?;
                if right < left - 1e-12 {
                    return Err(Error::IrregularPrior { at: v });
                }
            }
        }
        Ok(())
    }

    /// `G(q) = ∫₀^q F⁻¹(z) dz`, exact for every family.
    pub fn quantile_integral(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Uniform => self.lo * q + (self.hi - self.lo) * q * q / 2.0,
            Kind::TruncatedExponential { rate, mass } => {
                let x = q * mass;
                let w = (-x).ln_1p();
                self.lo * q + ((1.0 - x) * w + x) / (rate * mass)
            }
            Kind::Piecewise { knots, integral } => {
                if q <= 0.0 {
                    return 0.0;
                }
                let i = segment_of(knots, q);
                let (v0, q0) = knots[i];
                let vq = self.quantile(q);
                integral[i] + (q - q0) * (v0 + vq) / 2.0
            }
        }
    }

    /// `∫_a^b F⁻¹(z) dz` for quantiles `a ≤ b`; equals the prior mass of the
    /// value interval times its conditional mean.
    pub fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        self.quantile_integral(b) - self.quantile_integral(a)
    }

    pub fn mean(&self) -> f64 {
        self.quantile_integral(1.0)
    }

    /// Inverse-CDF sample.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.quantile(rng.uniform())
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, Kind::Uniform)
    }
}

/// Index `i` of the knot segment `[p_i, p_{i+1}]` holding probability `q ∈ (0, 1)`.
fn segment_of(knots: &[(f64, f64)], q: f64) -> usize {
    (knots.partition_point(|&(_, kq)| kq < q) - 1).min(knots.len() - 2)
}
