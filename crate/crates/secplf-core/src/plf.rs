//! Collateralized lending protocol with a pluggable price source: either the
//! raw AMM-derived oracle or the guard from [`crate::guard`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::error::SimError;
use crate::ledger::WorldState;
use crate::types::{AccountId, Amount, AssetId, PairId};

/// Where the USD price of an asset comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleSource {
    /// Fixed reference price, used for assets outside the manipulated pool.
    Fixed(Amount),
    /// Spot price from a pool, converted to USD via the numeraire's fixed
    /// reference price.
    Pool { pair: PairId, numeraire: AssetId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriceMode {
    RawOracle,
    SecPlfGuard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlfParams {
    /// Safe collateralization ratio; must exceed 1.
    pub epsilon: Amount,
    pub price_mode: PriceMode,
}

/// One user's collateral and outstanding loans. A position holds a single
/// collateral asset; collateral tokens are minted 1:1 with deposits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Position {
    pub collateral_asset: AssetId,
    pub collateral_amount: Amount,
    pub loans: BTreeMap<AssetId, Amount>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlfState {
    pub params: PlfParams,
    pub positions: BTreeMap<AccountId, Position>,
    /// Lendable reserves per asset.
    pub liquidity: BTreeMap<AssetId, Amount>,
}

impl PlfState {
    pub fn new(params: PlfParams) -> Self {
        PlfState {
            params,
            positions: BTreeMap::new(),
            liquidity: BTreeMap::new(),
        }
    }
}

/// Record of one guarded price query, for the transaction trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardQuery {
    pub asset: AssetId,
    pub block: u64,
    pub oracle: Amount,
    pub p_before: Amount,
    pub p_after: Amount,
    pub output: Amount,
    pub discrepancy: Amount,
    pub updated: bool,
}

/// Raw oracle reading in USD, ignoring the guard.
pub fn raw_oracle_usd(state: &WorldState, asset: &AssetId) -> Result<Amount, SimError> {
    match state
        .oracles
        .get(asset)
        .ok_or_else(|| SimError::UnknownAsset(asset.clone()))?
    {
        OracleSource::Fixed(p) => Ok(p.clone()),
        OracleSource::Pool { pair, numeraire } => {
            let numeraire_usd = match state
                .oracles
                .get(numeraire)
                .ok_or_else(|| SimError::UnknownAsset(numeraire.clone()))?
            {
                OracleSource::Fixed(p) => p.clone(),
                OracleSource::Pool { .. } => {
                    return Err(SimError::InvalidPlan(
                        "pool numeraire must have a fixed reference price".into(),
                    ))
                }
            };
            let pool = state
                .pools
                .get(pair)
                .ok_or_else(|| SimError::UnknownPool(pair.clone()))?;
            pool.oracle_usd(asset, numeraire, &numeraire_usd)
        }
    }
}

/// Price the PLF uses for `asset`, routed through the guard when the price
/// mode says so. Guard state mutations are recorded in `queries`.
pub fn plf_price_usd(
    state: &mut WorldState,
    asset: &AssetId,
    queries: &mut Vec<GuardQuery>,
) -> Result<Amount, SimError> {
    let raw = raw_oracle_usd(state, asset)?;
    match state.plf.params.price_mode {
        PriceMode::RawOracle => Ok(raw),
        PriceMode::SecPlfGuard => {
            let epsilon = state.plf.params.epsilon.clone();
            let block = state.current_block;
            let guard = state
                .guards
                .get_mut(asset)
                .ok_or_else(|| SimError::GuardNotInitialized(asset.clone()))?;
            let p_before = guard.p.clone();
            let out = guard.guarded_price(&raw, block, &epsilon)?;
            queries.push(GuardQuery {
                asset: asset.clone(),
                block: block.id,
                oracle: raw,
                p_before,
                p_after: guard.p.clone(),
                output: out.price.clone(),
                discrepancy: out.discrepancy,
                updated: out.updated,
            });
            Ok(out.price)
        }
    }
}

/// Deposits collateral, minting collateral tokens 1:1. No price is involved;
/// collateral is recorded in kind.
pub fn deposit(
    state: &mut WorldState,
    owner: &AccountId,
    asset: &AssetId,
    amount: &Amount,
) -> Result<(), SimError> {
    if amount.is_zero() {
        return Err(SimError::ZeroAmount);
    }
    if amount.is_negative() {
        return Err(SimError::NegativeAmount);
    }
    state.debit(owner, asset, amount)?;
    match state.plf.positions.get_mut(owner) {
        Some(pos) => {
            if &pos.collateral_asset != asset {
                return Err(SimError::CollateralAssetMismatch {
                    account: owner.clone(),
                    held: pos.collateral_asset.clone(),
                    offered: asset.clone(),
                });
            }
            pos.collateral_amount += amount;
        }
        None => {
            state.plf.positions.insert(
                owner.clone(),
                Position {
                    collateral_asset: asset.clone(),
                    collateral_amount: amount.clone(),
                    loans: BTreeMap::new(),
                },
            );
        }
    }
    Ok(())
}

/// USD value of the position's outstanding loans at the PLF's price source.
fn loans_value_usd(
    state: &mut WorldState,
    owner: &AccountId,
    queries: &mut Vec<GuardQuery>,
) -> Result<Amount, SimError> {
    let loans: Vec<(AssetId, Amount)> = state
        .plf
        .positions
        .get(owner)
        .ok_or_else(|| SimError::UnknownPosition(owner.clone()))?
        .loans
        .iter()
        .map(|(a, v)| (a.clone(), v.clone()))
        .collect();
    let mut total = Amount::zero();
    for (asset, amount) in loans {
        if amount.is_zero() {
            continue;
        }
        total += plf_price_usd(state, &asset, queries)? * amount;
    }
    Ok(total)
}

/// Remaining borrowing headroom in USD: collateral value over epsilon, minus
/// the value of existing loans, floored at zero.
pub fn borrow_limit_usd(
    state: &mut WorldState,
    owner: &AccountId,
    queries: &mut Vec<GuardQuery>,
) -> Result<Amount, SimError> {
    let (collateral_asset, collateral_amount) = {
        let pos = state
            .plf
            .positions
            .get(owner)
            .ok_or_else(|| SimError::UnknownPosition(owner.clone()))?;
        (pos.collateral_asset.clone(), pos.collateral_amount.clone())
    };
    let gross = if collateral_amount.is_zero() {
        Amount::zero()
    } else {
        let price = plf_price_usd(state, &collateral_asset, queries)?;
        price * collateral_amount / state.plf.params.epsilon.clone()
    };
    let used = loans_value_usd(state, owner, queries)?;
    let headroom = gross - used;
    Ok(if headroom.is_negative() {
        Amount::zero()
    } else {
        headroom
    })
}

/// Outcome of a borrow, kept for the transaction trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorrowOutcome {
    pub asset: AssetId,
    pub amount: Amount,
    pub value_usd: Amount,
    pub limit_usd: Amount,
    /// Price the PLF used for the collateral asset at this step.
    pub collateral_price_usd: Amount,
    /// Raw (unguarded) oracle reading for the collateral at this step.
    pub raw_collateral_oracle_usd: Amount,
}

/// Borrows an exact amount against the position. A zero request is a no-op.
pub fn borrow(
    state: &mut WorldState,
    owner: &AccountId,
    asset: &AssetId,
    amount: &Amount,
    queries: &mut Vec<GuardQuery>,
) -> Result<BorrowOutcome, SimError> {
    if amount.is_negative() {
        return Err(SimError::NegativeAmount);
    }
    let limit = borrow_limit_usd(state, owner, queries)?;
    let collateral_asset = state.plf.positions[owner].collateral_asset.clone();
    let collateral_price = plf_price_usd(state, &collateral_asset, queries)?;
    let raw_collateral = raw_oracle_usd(state, &collateral_asset)?;
    if amount.is_zero() {
        return Ok(BorrowOutcome {
            asset: asset.clone(),
            amount: Amount::zero(),
            value_usd: Amount::zero(),
            limit_usd: limit,
            collateral_price_usd: collateral_price,
            raw_collateral_oracle_usd: raw_collateral,
        });
    }
    let price = plf_price_usd(state, asset, queries)?;
    let value = &price * amount;
    if value > limit {
        return Err(SimError::OverLimit);
    }
    let liquidity = state
        .plf
        .liquidity
        .get(asset)
        .cloned()
        .unwrap_or_else(Amount::zero);
    if &liquidity < amount {
        return Err(SimError::InsufficientPlfLiquidity(asset.clone()));
    }
    state.plf.liquidity.insert(asset.clone(), liquidity - amount);
    state.credit(owner, asset, amount);
    let pos = state.plf.positions.get_mut(owner).unwrap();
    *pos.loans.entry(asset.clone()).or_insert_with(Amount::zero) += amount;
    Ok(BorrowOutcome {
        asset: asset.clone(),
        amount: amount.clone(),
        value_usd: value,
        limit_usd: limit,
        collateral_price_usd: collateral_price,
        raw_collateral_oracle_usd: raw_collateral,
    })
}

/// Borrows as much of `asset` as the position's limit and the PLF's
/// liquidity allow. May legitimately grant zero.
pub fn borrow_max(
    state: &mut WorldState,
    owner: &AccountId,
    asset: &AssetId,
    queries: &mut Vec<GuardQuery>,
) -> Result<BorrowOutcome, SimError> {
    let limit = borrow_limit_usd(state, owner, queries)?;
    let price = plf_price_usd(state, asset, queries)?;
    let liquidity = state
        .plf
        .liquidity
        .get(asset)
        .cloned()
        .unwrap_or_else(Amount::zero);
    let mut amount = limit / price;
    if amount > liquidity {
        amount = liquidity;
    }
    borrow(state, owner, asset, &amount, queries)
}

/// Liquidation check per the safe-collateralization rule: if collateral value
/// falls below epsilon times the loan value, the position is seized in full
/// and its loans cleared.
pub fn check_and_liquidate(
    state: &mut WorldState,
    owner: &AccountId,
    queries: &mut Vec<GuardQuery>,
) -> Result<bool, SimError> {
    let Some(pos) = state.plf.positions.get(owner) else {
        return Ok(false);
    };
    let (collateral_asset, collateral_amount) =
        (pos.collateral_asset.clone(), pos.collateral_amount.clone());
    let loans = loans_value_usd(state, owner, queries)?;
    if loans.is_zero() {
        return Ok(false);
    }
    let collateral_value = if collateral_amount.is_zero() {
        Amount::zero()
    } else {
        plf_price_usd(state, &collateral_asset, queries)? * collateral_amount
    };
    if collateral_value < state.plf.params.epsilon.clone() * loans {
        let pos = state.plf.positions.get_mut(owner).unwrap();
        pos.collateral_amount = Amount::zero();
        pos.loans.clear();
        Ok(true)
    } else {
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::test_support::{bare_state, fixed_oracle};
    use crate::types::{rat, ratio};

    fn acct(s: &str) -> AccountId {
        AccountId::new(s)
    }
    fn asset(s: &str) -> AssetId {
        AssetId::new(s)
    }

    fn lending_state(epsilon: Amount) -> WorldState {
        let mut s = bare_state();
        s.plf.params.epsilon = epsilon;
        fixed_oracle(&mut s, "B", rat(10));
        fixed_oracle(&mut s, "C", rat(1));
        s.credit(&acct("u"), &asset("B"), &rat(1_000));
        s.plf.liquidity.insert(asset("C"), rat(1_000_000));
        s
    }

    #[test]
    fn deposit_moves_balance_into_position() {
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(500)).unwrap();
        assert_eq!(s.balance(&acct("u"), &asset("B")), rat(500));
        assert_eq!(s.plf.positions[&acct("u")].collateral_amount, rat(500));
        assert_eq!(
            deposit(&mut s, &acct("u"), &asset("B"), &rat(0)),
            Err(SimError::ZeroAmount)
        );
    }

    #[test]
    fn two_deposits_add_up() {
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(250)).unwrap();
        deposit(&mut s, &acct("u"), &asset("B"), &rat(250)).unwrap();
        assert_eq!(s.plf.positions[&acct("u")].collateral_amount, rat(500));
    }

    #[test]
    fn borrow_limit_honest_price() {
        // 500 cB at $10, epsilon 5, no loans: (10 * 500) / 5 = $1,000.
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(500)).unwrap();
        let mut q = Vec::new();
        assert_eq!(borrow_limit_usd(&mut s, &acct("u"), &mut q).unwrap(), rat(1_000));
    }

    #[test]
    fn borrow_limit_scales_with_collateral_and_inverse_epsilon() {
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(500)).unwrap();
        let mut s2 = lending_state(rat(5));
        deposit(&mut s2, &acct("u"), &asset("B"), &rat(1_000)).unwrap();
        let mut q = Vec::new();
        let l1 = borrow_limit_usd(&mut s, &acct("u"), &mut q).unwrap();
        let l2 = borrow_limit_usd(&mut s2, &acct("u"), &mut q).unwrap();
        assert_eq!(l2, rat(2) * &l1);

        let mut s3 = lending_state(ratio(5, 2));
        deposit(&mut s3, &acct("u"), &asset("B"), &rat(500)).unwrap();
        let l3 = borrow_limit_usd(&mut s3, &acct("u"), &mut q).unwrap();
        assert_eq!(l3, rat(2) * &l1);
    }

    #[test]
    fn borrow_over_limit_rejected() {
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(500)).unwrap();
        let mut q = Vec::new();
        assert_eq!(
            borrow(&mut s, &acct("u"), &asset("C"), &rat(1_001), &mut q),
            Err(SimError::OverLimit)
        );
        let out = borrow(&mut s, &acct("u"), &asset("C"), &rat(1_000), &mut q).unwrap();
        assert_eq!(out.value_usd, rat(1_000));
        assert_eq!(s.balance(&acct("u"), &asset("C")), rat(1_000));
        // Headroom is now exhausted.
        assert_eq!(borrow_limit_usd(&mut s, &acct("u"), &mut q).unwrap(), rat(0));
    }

    #[test]
    fn borrow_zero_is_a_noop() {
        let mut s = lending_state(rat(5));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(500)).unwrap();
        let mut q = Vec::new();
        let out = borrow(&mut s, &acct("u"), &asset("C"), &rat(0), &mut q).unwrap();
        assert_eq!(out.amount, rat(0));
        assert!(s.plf.positions[&acct("u")].loans.is_empty());
    }

    #[test]
    fn liquidation_boundary() {
        // c = $1,000, l = $300, epsilon 1.25: safe (1000 >= 375).
        // c = $300, same loan: liquidated (300 < 375).
        let mut q = Vec::new();
        let mut s = lending_state(ratio(5, 4));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(100)).unwrap(); // $1,000
        borrow(&mut s, &acct("u"), &asset("C"), &rat(300), &mut q).unwrap();
        assert!(!check_and_liquidate(&mut s, &acct("u"), &mut q).unwrap());

        fixed_oracle(&mut s, "B", rat(3)); // collateral now worth $300
        assert!(check_and_liquidate(&mut s, &acct("u"), &mut q).unwrap());
        let pos = &s.plf.positions[&acct("u")];
        assert!(pos.collateral_amount.is_zero());
        assert!(pos.loans.is_empty());
    }

    #[test]
    fn no_loans_never_liquidates() {
        let mut q = Vec::new();
        let mut s = lending_state(ratio(5, 4));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(100)).unwrap();
        fixed_oracle(&mut s, "B", ratio(1, 100));
        assert!(!check_and_liquidate(&mut s, &acct("u"), &mut q).unwrap());
    }

    #[test]
    fn collateral_asset_is_exclusive() {
        let mut s = lending_state(rat(5));
        s.credit(&acct("u"), &asset("C"), &rat(10));
        deposit(&mut s, &acct("u"), &asset("B"), &rat(10)).unwrap();
        assert!(matches!(
            deposit(&mut s, &acct("u"), &asset("C"), &rat(10)),
            Err(SimError::CollateralAssetMismatch { .. })
        ));
    }
}
