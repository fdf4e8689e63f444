//! Repeated single-item auctions with bidders learning over quantile strategies.
//!
//! Start from [`engine::run_game`] for simulations, or use the building blocks
//! directly: [`auction`] formats, [`quantile`] strategies and their exact
//! utility and gradient, [`learners`], [`analysis`] for revenue identities and
//! regret, and [`adversaries`] for auctioneer policies.

pub mod adversaries;
pub mod analysis;
pub mod auction;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod learners;
pub mod quantile;
pub mod rng;

pub use adversaries::{Auctioneer, PolicySpec, SwapInstance};
pub use analysis::{IdentityCheck, StrategyProfile};
pub use auction::{AuctionFormat, BidGrid, Family, FormatSpec, OwnBidCurve};
pub use distributions::{DistributionSpec, ValueDistribution};
pub use engine::{FeedbackMode, GameConfig};
pub use error::{Error, Result};
pub use learners::{Eta, Learner, LearnerKind, LearnerSpec, MetaBidder};
pub use quantile::{MonotoneBiddingStrategy, QuantileStrategy};
pub use rng::SimRng;
