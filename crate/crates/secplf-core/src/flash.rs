//! Flash-loan provider: lends any available amount inside a transaction and
//! requires repayment plus fee before the transaction may commit.

use alloc::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::SimError;
use crate::ledger::WorldState;
use crate::types::{AccountId, Amount, AssetId};

/// Provider reserves plus the loans currently open inside a transaction.
/// A committed state never contains an open loan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlashState {
    pub reserves: BTreeMap<AssetId, Amount>,
    /// Fraction of principal charged on top of repayment; 0 by default.
    pub fee_rate: Amount,
    /// (borrower, asset) -> amount due, i.e. principal * (1 + fee_rate).
    pub open: BTreeMap<(AccountId, AssetId), Amount>,
}

impl FlashState {
    pub fn new(reserves: BTreeMap<AssetId, Amount>, fee_rate: Amount) -> Self {
        FlashState {
            reserves,
            fee_rate,
            open: BTreeMap::new(),
        }
    }

    pub fn reserve(&self, asset: &AssetId) -> Amount {
        self.reserves.get(asset).cloned().unwrap_or_else(Amount::zero)
    }
}

/// Lends `amount` of `asset` to `borrower` and records the open loan.
pub fn flash_borrow(
    state: &mut WorldState,
    borrower: &AccountId,
    asset: &AssetId,
    amount: &Amount,
) -> Result<(), SimError> {
    if amount.is_zero() {
        return Err(SimError::ZeroAmount);
    }
    if amount.is_negative() {
        return Err(SimError::NegativeAmount);
    }
    let key = (borrower.clone(), asset.clone());
    if state.flash.open.contains_key(&key) {
        return Err(SimError::DuplicateLoan {
            account: borrower.clone(),
            asset: asset.clone(),
        });
    }
    let reserve = state.flash.reserve(asset);
    if &reserve < amount {
        return Err(SimError::InsufficientProviderReserve(asset.clone()));
    }
    state.flash.reserves.insert(asset.clone(), reserve - amount);
    state.credit(borrower, asset, amount);
    let due = amount * (Amount::one() + &state.flash.fee_rate);
    state.flash.open.insert(key, due);
    Ok(())
}

/// Amount currently due on an open loan, if any.
pub fn amount_due(state: &WorldState, borrower: &AccountId, asset: &AssetId) -> Option<Amount> {
    state
        .flash
        .open
        .get(&(borrower.clone(), asset.clone()))
        .cloned()
}

/// Repays an open loan with `amount`, which must cover principal plus fee.
/// Failure here is the enforcement point that makes an unprofitable attack
/// transaction revert.
pub fn flash_repay(
    state: &mut WorldState,
    borrower: &AccountId,
    asset: &AssetId,
    amount: &Amount,
) -> Result<(), SimError> {
    let key = (borrower.clone(), asset.clone());
    let due = state
        .flash
        .open
        .get(&key)
        .cloned()
        .ok_or(SimError::NoOpenLoan {
            account: borrower.clone(),
            asset: asset.clone(),
        })?;
    if amount < &due {
        return Err(SimError::InsufficientRepayment);
    }
    state.debit(borrower, asset, amount)?;
    let reserve = state.flash.reserve(asset);
    state.flash.reserves.insert(asset.clone(), reserve + amount);
    state.flash.open.remove(&key);
    Ok(())
}

/// Commit-time check: a transaction with any loan still open must revert.
pub fn assert_no_open_loans(state: &WorldState) -> Result<(), SimError> {
    if state.flash.open.is_empty() {
        Ok(())
    } else {
        Err(SimError::OpenLoanAtCommit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::test_support::bare_state;
    use crate::types::{rat, ratio};

    fn acct(s: &str) -> AccountId {
        AccountId::new(s)
    }
    fn asset(s: &str) -> AssetId {
        AssetId::new(s)
    }

    #[test]
    fn borrow_and_repay_round_trip() {
        let mut s = bare_state();
        s.flash.reserves.insert(asset("A"), rat(1_000_000));
        flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(10_000)).unwrap();
        assert_eq!(s.balance(&acct("adv"), &asset("A")), rat(10_000));
        assert_eq!(amount_due(&s, &acct("adv"), &asset("A")), Some(rat(10_000)));
        assert!(assert_no_open_loans(&s).is_err());
        flash_repay(&mut s, &acct("adv"), &asset("A"), &rat(10_000)).unwrap();
        assert_eq!(s.flash.reserve(&asset("A")), rat(1_000_000));
        assert!(assert_no_open_loans(&s).is_ok());
    }

    #[test]
    fn borrow_rejections() {
        let mut s = bare_state();
        s.flash.reserves.insert(asset("A"), rat(100));
        assert_eq!(
            flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(0)),
            Err(SimError::ZeroAmount)
        );
        assert_eq!(
            flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(101)),
            Err(SimError::InsufficientProviderReserve(asset("A")))
        );
        flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(50)).unwrap();
        assert!(matches!(
            flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(10)),
            Err(SimError::DuplicateLoan { .. })
        ));
    }

    #[test]
    fn repay_with_short_balance_fails() {
        let mut s = bare_state();
        s.flash.reserves.insert(asset("A"), rat(100_000));
        flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(10_000)).unwrap();
        s.debit(&acct("adv"), &asset("A"), &rat(100)).unwrap();
        assert!(matches!(
            flash_repay(&mut s, &acct("adv"), &asset("A"), &rat(10_000)),
            Err(SimError::InsufficientBalance { .. })
        ));
    }

    #[test]
    fn fee_raises_amount_due() {
        let mut s = bare_state();
        s.flash.fee_rate = ratio(1, 1000);
        s.flash.reserves.insert(asset("A"), rat(100_000));
        flash_borrow(&mut s, &acct("adv"), &asset("A"), &rat(10_000)).unwrap();
        assert_eq!(amount_due(&s, &acct("adv"), &asset("A")), Some(rat(10_010)));
        assert_eq!(
            flash_repay(&mut s, &acct("adv"), &asset("A"), &rat(10_000)),
            Err(SimError::InsufficientRepayment)
        );
        s.credit(&acct("adv"), &asset("A"), &rat(10));
        flash_repay(&mut s, &acct("adv"), &asset("A"), &rat(10_010)).unwrap();
        assert_eq!(s.flash.reserve(&asset("A")), rat(100_010));
    }
}
