//! Per-asset price guard: converts a raw oracle reading into a safe-to-use
//! price by capping how far the stored price may rise per block.
//!
//! The stored state is `(id, p)`: the block of the last update and the last
//! stored price. On a new block the state moves to
//! `(block, min(oracle, p * epsilon))`; within one block it never moves
//! again, so a transaction can distort the output price by at most a factor
//! of `epsilon` regardless of how hard it distorts the raw oracle.

use num_traits::Signed;

use crate::error::SimError;
use crate::types::{Amount, BlockRef};

/// Guard state for one asset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceState {
    /// Block index of the last state update.
    pub id: u64,
    /// Last stored USD price; positive after initialization.
    pub p: Amount,
}

/// Result of one guarded price query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardOutput {
    /// The price the PLF should use: `min(oracle, state.p)` after the
    /// (possible) state update.
    pub price: Amount,
    /// `oracle - state.p` after the update; positive only in the
    /// price-discrepancy case where the guard lags the market.
    pub discrepancy: Amount,
    /// Whether this query moved the state to a new block.
    pub updated: bool,
}

impl PriceState {
    /// Initializes the state from the first honest oracle reading.
    pub fn init(oracle: &Amount, block: BlockRef) -> Result<Self, SimError> {
        if !oracle.is_positive() {
            return Err(SimError::NonPositiveOracle);
        }
        Ok(PriceState {
            id: block.id,
            p: oracle.clone(),
        })
    }

    /// Applies one oracle reading received in `block`, mutating the state at
    /// most once per block, and returns the safe output price.
    pub fn guarded_price(
        &mut self,
        oracle: &Amount,
        block: BlockRef,
        epsilon: &Amount,
    ) -> Result<GuardOutput, SimError> {
        if !oracle.is_positive() {
            return Err(SimError::NonPositiveOracle);
        }
        if epsilon <= &Amount::from_integer(1.into()) {
            return Err(SimError::InvalidPlan("epsilon must exceed 1".into()));
        }
        if block.id < self.id {
            return Err(SimError::StaleBlock);
        }
        let mut updated = false;
        if block.id > self.id {
            let cap = &self.p * epsilon;
            self.p = if oracle < &cap { oracle.clone() } else { cap };
            self.id = block.id;
            updated = true;
        }
        let price = if oracle < &self.p {
            oracle.clone()
        } else {
            self.p.clone()
        };
        let discrepancy = oracle - &self.p;
        Ok(GuardOutput {
            price,
            discrepancy,
            updated,
        })
    }
}
