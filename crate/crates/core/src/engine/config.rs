use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversaries::{lower_bound_format, PolicySpec};
use crate::auction::{AuctionFormat, FormatSpec};
use crate::distributions::{DistributionSpec, ValueDistribution};
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Feed the gradient averaged over the opponents' strategies.
    #[default]
    Expected,
    /// Sample values, bid, and feed the gradient at the realized opponent bids.
    Realized,
}

impl FeedbackMode {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackMode::Expected => "expected",
            FeedbackMode::Realized => "realized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderSpec {
    pub distribution: DistributionSpec,
    pub learner: LearnerSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub rounds_csv: Option<String>,
    pub summary: Option<String>,
}

fn default_stride() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub bidders: Vec<BidderSpec>,
    pub auctioneer: PolicySpec,
    #[serde(default)]
    pub feedback_mode: FeedbackMode,
    /// Rounds between identity evaluations in realized mode.
    #[serde(default = "default_stride")]
    pub identity_stride: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

impl GameConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.bidders.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.bidders.is_empty() {
            return Err(Error::Config("at least one [[bidders]] entry is required".into()));
        }
        if self.identity_stride == 0 {
            return Err(Error::Config("identity_stride must be at least 1".into()));
        }
        for (i, b) in self.bidders.iter().enumerate() {
            ValueDistribution::from_spec(&b.distribution).map_err(|e| Error::Config(format!("bidders[{i}].distribution: {e}")))?;
            b.learner
                .resolve_eta(self.k, self.horizon)
                .map_err(|e| Error::Config(format!("bidders[{i}].learner: {e}")))?;
        }
        Ok(())
    }

    pub fn distributions(&self) -> Result<Vec<ValueDistribution>> {
        self.bidders.iter().map(|b| ValueDistribution::from_spec(&b.distribution)).collect()
    }
}

/// A bare format description: `n`, `K` and a `format` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatFile {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub format: FormatSpec,
}

/// Lower-bound policies with `K` up to this draw every reserve pattern when validated.
const EXHAUSTIVE_PATTERN_K: usize = 12;

/// Every format a config can put in front of bidders, labelled.
///
/// Accepts a game config or a [`FormatFile`]. The lower-bound policy is
/// covered exhaustively for small `K` and by 256 seeded patterns otherwise.
pub fn formats_to_validate(text: &str) -> Result<Vec<(String, AuctionFormat)>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if !table.contains_key("bidders") {
        let f: FormatFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let format = AuctionFormat::from_spec(&f.format, f.n, f.k)?;
        return Ok(vec![(format.digest(), format)]);
    }
    let c = GameConfig::from_toml_str(text)?;
    let (n, k) = (c.n(), c.k);
    match &c.auctioneer {
        PolicySpec::Static { format } => {
            let f = AuctionFormat::from_spec(format, n, k)?;
            Ok(vec![(f.digest(), f)])
        }
        PolicySpec::MyopicReserve { family } => (0..=k)
            .map(|r| AuctionFormat::standard(*family, n, k, r).map(|f| (f.digest(), f)))
            .collect(),
        PolicySpec::LowerBound { .. } if n != 1 => {
            Err(Error::Config(format!("the lower-bound auctioneer needs exactly one bidder, got {n}")))
        }
        PolicySpec::LowerBound { seed } => {
            let patterns: Vec<Vec<bool>> = if k <= EXHAUSTIVE_PATTERN_K {
                (0..1u64 << k).map(|m| (0..k).map(|i| m >> i & 1 == 1).collect()).collect()
            } else {
                let mut rng = crate::rng::SimRng::seed_from(*seed);
                (0..256).map(|_| (0..k).map(|_| rng.coin()).collect()).collect()
            };
            patterns
                .into_iter()
                .map(|r| {
                    let label: String = r.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    lower_bound_format(&r).map(|f| (format!("lower_bound[{label}]"), f))
                })
                .collect()
        }
    }
}
