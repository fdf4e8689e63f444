//! Revenue functionals, the gradient-revenue identity, optimal revenue, and
//! regret measurements.

pub mod aux;
pub mod hindsight;
pub mod myerson;
pub mod revenue;
pub mod swap;

pub use aux::{check_ic_ir, AuxiliaryAuction, DirectMechanism, IcIrReport};
pub use hindsight::{HindsightAccumulator, HindsightEnvelope, RegretReport};
pub use myerson::{myerson_revenue, MyersonReport};
pub use revenue::{aux_revenue, check_identity, conditional_revenue, expected_curve, expected_curves, IdentityCheck, StrategyProfile};
pub use swap::{swap_regret, SwapAccumulator, SwapRegretReport};
