//! Planning and simulation toolkit for robust verification of qudit graph
//! states (and any state with a homogeneous test strategy).
//!
//! The analytic modules compute exact guaranteed infidelities and minimum
//! test counts for adversarial and i.i.d. preparation scenarios; the
//! simulation module runs seeded Monte Carlo stabilizer tests on small dense
//! states to validate those predictions end to end.
//!
//! - [`stats`]: binomial-tail, entropy, and monotone-search kernels.
//! - [`adversarial`]: exact guaranteed infidelity, certified bounds, and the
//!   minimum-test planner against arbitrarily correlated preparations.
//! - [`iid`]: the same planning surface for identical independent
//!   preparations, plus the coefficient machinery bounding its cost.
//! - [`baselines`]: cost formulas of earlier protocols for comparison tables.
//! - [`sim`]: dense qudit graph states, stabilizer tests, and protocol
//!   Monte Carlo with reproducible per-trial seeding.
//! - [`oracle`]: slow independent reference implementations for tests.

pub mod adversarial;
pub mod baselines;
pub mod error;
pub mod iid;
pub mod oracle;
pub mod sim;
pub mod stats;

pub use adversarial::{MixtureSpec, PlanResult, ProtocolSpec, Strategy};
pub use error::{Error, Result};
pub use iid::IidPlanResult;
pub use stats::Probability;
