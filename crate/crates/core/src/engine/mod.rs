//! The repeated-game driver, configuration, and output files.

pub mod config;
pub mod game;
pub mod report;
pub mod trials;

pub use config::{formats_to_validate, BidderSpec, FeedbackMode, FormatFile, GameConfig, OutputSpec};
pub use game::{replay_formats, run_game, run_replicas, summarize, RoundRecord, SummaryReport, Trajectory};
pub use report::{parse_summary, read_rounds_csv, recompute, write_rounds_csv, write_summary};
pub use trials::{identity_suite, IdentityTrial};
