//! Constant-product AMM pool. The pool's reserve ratio is the spot-price
//! oracle the lending protocol consumes.

use num_traits::{One, Signed, Zero};

use crate::error::SimError;
use crate::types::{Amount, AssetId, PairId};

/// A two-asset pool maintaining `reserve_x * reserve_y == k` across swaps.
///
/// `fee_multiplier` scales the effective input amount; `1` means no fee.
/// With a fee the product grows slightly on every swap, never shrinks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pool {
    pub asset_x: AssetId,
    pub asset_y: AssetId,
    pub reserve_x: Amount,
    pub reserve_y: Amount,
    pub k: Amount,
    pub fee_multiplier: Amount,
}

impl Pool {
    /// Creates a zero-fee pool; `k` is fixed from the initial reserves.
    pub fn new(
        asset_x: AssetId,
        asset_y: AssetId,
        reserve_x: Amount,
        reserve_y: Amount,
    ) -> Result<Self, SimError> {
        Self::with_fee(asset_x, asset_y, reserve_x, reserve_y, Amount::one())
    }

    pub fn with_fee(
        asset_x: AssetId,
        asset_y: AssetId,
        reserve_x: Amount,
        reserve_y: Amount,
        fee_multiplier: Amount,
    ) -> Result<Self, SimError> {
        if !reserve_x.is_positive() || !reserve_y.is_positive() {
            return Err(SimError::ZeroAmount);
        }
        if !fee_multiplier.is_positive() || fee_multiplier > Amount::one() {
            return Err(SimError::InvalidPlan("fee multiplier must be in (0, 1]".into()));
        }
        let k = &reserve_x * &reserve_y;
        Ok(Pool {
            asset_x,
            asset_y,
            reserve_x,
            reserve_y,
            k,
            fee_multiplier,
        })
    }

    pub fn pair_id(&self) -> PairId {
        PairId::new(self.asset_x.clone(), self.asset_y.clone())
    }

    fn reserves(&self, asset: &AssetId) -> Result<(&Amount, &Amount), SimError> {
        if asset == &self.asset_x {
            Ok((&self.reserve_x, &self.reserve_y))
        } else if asset == &self.asset_y {
            Ok((&self.reserve_y, &self.reserve_x))
        } else {
            Err(SimError::UnknownAsset(asset.clone()))
        }
    }

    /// Swaps `amount_in` of `asset_in` for the other asset, returning the
    /// exact output. The reserve product is preserved bit-exactly in the
    /// zero-fee case: the new output reserve is computed as
    /// `k / (r_in + amount_in)` rather than by subtraction.
    pub fn swap_exact_in(&mut self, asset_in: &AssetId, amount_in: &Amount) -> Result<Amount, SimError> {
        if amount_in.is_zero() {
            return Err(SimError::ZeroAmount);
        }
        if amount_in.is_negative() {
            return Err(SimError::NegativeAmount);
        }
        let (r_in, r_out) = self.reserves(asset_in)?;
        let effective_in = amount_in * &self.fee_multiplier;
        let new_r_in = r_in + amount_in;
        // Fee stays in the pool, so the invariant is priced at the effective
        // input only.
        let new_r_out = (r_in + &effective_in)
            .recip()
            * (r_in * r_out);
        let amount_out = r_out - &new_r_out;
        if !amount_out.is_positive() || &amount_out >= r_out {
            return Err(SimError::DrainedPool(self.pair_id()));
        }
        if asset_in == &self.asset_x {
            self.reserve_x = new_r_in;
            self.reserve_y = &self.reserve_y - &amount_out;
        } else {
            self.reserve_y = new_r_in;
            self.reserve_x = &self.reserve_x - &amount_out;
        }
        Ok(amount_out)
    }

    /// Spot price of `priced` denominated in `numeraire`:
    /// `reserve_numeraire / reserve_priced`.
    pub fn spot_price(&self, priced: &AssetId, numeraire: &AssetId) -> Result<Amount, SimError> {
        if priced == numeraire {
            if self.pair_id().contains(priced) {
                return Ok(Amount::one());
            }
            return Err(SimError::UnknownAsset(priced.clone()));
        }
        let (r_priced, _) = self.reserves(priced)?;
        let (r_num, _) = self.reserves(numeraire)?;
        Ok(r_num / r_priced)
    }

    /// USD oracle value of `priced`: spot price in the numeraire times the
    /// numeraire's USD price.
    pub fn oracle_usd(
        &self,
        priced: &AssetId,
        numeraire: &AssetId,
        numeraire_price_usd: &Amount,
    ) -> Result<Amount, SimError> {
        if !numeraire_price_usd.is_positive() {
            return Err(SimError::NonPositiveOracle);
        }
        Ok(self.spot_price(priced, numeraire)? * numeraire_price_usd)
    }
}
