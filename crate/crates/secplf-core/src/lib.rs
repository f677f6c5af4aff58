//! Deterministic simulation of a collateralized lending protocol (PLF), a
//! constant-product AMM that doubles as its price oracle, and a flash-loan
//! provider, together with:
//!
//! - a block/transaction ledger with all-or-nothing atomicity,
//! - a per-asset price guard that caps how fast the stored oracle price may
//!   grow within a block, rendering flash-loan oracle manipulation
//!   unprofitable,
//! - an adversary module that builds and executes the manipulation attack
//!   transaction and reports analytic vs realized profit,
//! - a minute-resolution risk analyzer for the price-discrepancy statistics
//!   (windowed max discrepancy, exceedance probability, `T_z`, CDF).
//!
//! The simulation core uses exact rational arithmetic so golden scenarios
//! reproduce without rounding drift; the analyzer uses `f64` over large
//! series. The crate is `no_std` + `alloc`; all IO lives in the companion
//! CLI crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod amm;
pub mod analyzer;
pub mod error;
pub mod flash;
pub mod guard;
pub mod ledger;
pub mod plf;
pub mod types;

pub use adversary::{build_attack, run_attack, AttackPlan, AttackReport};
pub use amm::Pool;
pub use analyzer::{PriceSeries, RiskParams};
pub use error::{AnalyzerError, SimError};
pub use guard::{GuardOutput, PriceState};
pub use ledger::{Step, Transaction, TxOutcome, WorldState};
pub use types::{AccountId, Amount, AssetId, BlockRef, PairId};
