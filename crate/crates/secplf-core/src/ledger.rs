//! Blockchain-like state machine: blocks, transactions composed of steps,
//! and all-or-nothing atomicity. A transaction either fully commits or
//! leaves the world state untouched, including guard state.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::amm::Pool;
use crate::error::SimError;
use crate::flash::{self, FlashState};
use crate::guard::PriceState;
use crate::plf::{self, GuardQuery, OracleSource, PlfParams, PlfState, PriceMode};
use crate::types::{rat, AccountId, Amount, AssetId, BlockRef, PairId};

/// Full snapshot of balances, pools, lending state, guard states, and oracle
/// wiring at a block height. Plain value semantics: cloning is snapshotting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldState {
    pub balances: BTreeMap<(AccountId, AssetId), Amount>,
    pub pools: BTreeMap<PairId, Pool>,
    pub plf: PlfState,
    pub flash: FlashState,
    pub guards: BTreeMap<AssetId, PriceState>,
    pub oracles: BTreeMap<AssetId, OracleSource>,
    pub current_block: BlockRef,
}

/// Opaque captured state; `restore` round-trips to an identical value.
#[derive(Clone, Debug)]
pub struct Snapshot(WorldState);

impl WorldState {
    pub fn new(params: PlfParams) -> Self {
        WorldState {
            balances: BTreeMap::new(),
            pools: BTreeMap::new(),
            plf: PlfState::new(params),
            flash: FlashState::new(BTreeMap::new(), Amount::zero()),
            guards: BTreeMap::new(),
            oracles: BTreeMap::new(),
            current_block: BlockRef::new(0),
        }
    }

    pub fn balance(&self, account: &AccountId, asset: &AssetId) -> Amount {
        self.balances
            .get(&(account.clone(), asset.clone()))
            .cloned()
            .unwrap_or_else(Amount::zero)
    }

    pub fn credit(&mut self, account: &AccountId, asset: &AssetId, amount: &Amount) {
        let key = (account.clone(), asset.clone());
        let entry = self.balances.entry(key).or_insert_with(Amount::zero);
        *entry += amount;
    }

    pub fn debit(
        &mut self,
        account: &AccountId,
        asset: &AssetId,
        amount: &Amount,
    ) -> Result<(), SimError> {
        let key = (account.clone(), asset.clone());
        let entry = self.balances.entry(key).or_insert_with(Amount::zero);
        if &*entry < amount {
            return Err(SimError::InsufficientBalance {
                account: account.clone(),
                asset: asset.clone(),
            });
        }
        *entry -= amount;
        Ok(())
    }

    /// Next-block state: the block id advances, nothing else changes.
    pub fn begin_block(&self) -> WorldState {
        let mut next = self.clone();
        next.current_block = BlockRef::new(self.current_block.id + 1);
        next
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot(self.clone())
    }

    pub fn restore(snap: Snapshot) -> WorldState {
        snap.0
    }

    /// Total supply of an asset across accounts, pools, flash reserves, PLF
    /// liquidity and locked collateral. Invariant under transfers and swaps.
    pub fn total_supply(&self, asset: &AssetId) -> Amount {
        let mut total = Amount::zero();
        for ((_, a), amount) in &self.balances {
            if a == asset {
                total += amount;
            }
        }
        for pool in self.pools.values() {
            if &pool.asset_x == asset {
                total += &pool.reserve_x;
            }
            if &pool.asset_y == asset {
                total += &pool.reserve_y;
            }
        }
        total += self.flash.reserve(asset);
        if let Some(l) = self.plf.liquidity.get(asset) {
            total += l;
        }
        for pos in self.plf.positions.values() {
            if &pos.collateral_asset == asset {
                total += &pos.collateral_amount;
            }
        }
        total
    }
}

/// One sub-transaction. Steps carrying `AllBalance` resolve amounts at
/// execution time, which is how the attack wires the output of one swap into
/// the next without knowing it in advance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Transfer {
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amount: Amount,
    },
    Swap {
        account: AccountId,
        pool: PairId,
        asset_in: AssetId,
        amount_in: Amount,
    },
    /// Swap the account's entire balance of `asset_in`.
    SwapAllBalance {
        account: AccountId,
        pool: PairId,
        asset_in: AssetId,
    },
    FlashBorrow {
        account: AccountId,
        asset: AssetId,
        amount: Amount,
    },
    /// Repay the open flash loan in full (principal plus fee).
    FlashRepay {
        account: AccountId,
        asset: AssetId,
    },
    Deposit {
        account: AccountId,
        asset: AssetId,
        amount: Amount,
    },
    /// Deposit the account's entire balance of `asset` as collateral.
    DepositAllBalance {
        account: AccountId,
        asset: AssetId,
    },
    Borrow {
        account: AccountId,
        asset: AssetId,
        amount: Amount,
    },
    /// Borrow up to the position's limit (and the PLF's liquidity).
    BorrowMax {
        account: AccountId,
        asset: AssetId,
    },
    /// Buy just enough of the flash-loaned asset to cover the open loan,
    /// paying with `pay_with` at fixed reference prices against a deep
    /// external venue. Buys as much as the account can afford.
    CoverShortfall {
        account: AccountId,
        loan_asset: AssetId,
        pay_with: AssetId,
        venue: AccountId,
    },
    CheckLiquidate {
        account: AccountId,
    },
}

/// Realized values of an executed step, for the trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepRecord {
    Transfer {
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amount: Amount,
    },
    Swap {
        asset_in: AssetId,
        amount_in: Amount,
        asset_out: AssetId,
        amount_out: Amount,
    },
    FlashBorrow {
        asset: AssetId,
        amount: Amount,
    },
    FlashRepay {
        asset: AssetId,
        amount: Amount,
    },
    Deposit {
        asset: AssetId,
        amount: Amount,
    },
    Borrow {
        asset: AssetId,
        amount: Amount,
        value_usd: Amount,
        limit_usd: Amount,
        collateral_price_usd: Amount,
        raw_collateral_oracle_usd: Amount,
    },
    CoverShortfall {
        loan_asset: AssetId,
        acquired: Amount,
        pay_with: AssetId,
        paid: Amount,
    },
    Liquidation {
        liquidated: bool,
    },
    /// Commit-time no-open-loan check, recorded when it fails.
    CommitCheck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub index: usize,
    pub record: StepRecord,
    pub guard_queries: Vec<GuardQuery>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TxOutcome {
    Success {
        trace: Vec<StepTrace>,
    },
    Reverted {
        step_index: usize,
        reason: SimError,
        /// Trace of the steps executed before (and including context of) the
        /// failure; the state they describe was discarded.
        trace: Vec<StepTrace>,
    },
}

impl TxOutcome {
    pub fn trace(&self) -> &[StepTrace] {
        match self {
            TxOutcome::Success { trace } => trace,
            TxOutcome::Reverted { trace, .. } => trace,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, TxOutcome::Success { .. })
    }
}

/// An atomic sequence of steps bound to one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub steps: Vec<Step>,
    pub block: BlockRef,
    pub sender: AccountId,
}

/// Executes a transaction against `state`. On any step failure the original
/// state is returned unchanged. A block mismatch rejects the transaction
/// without executing anything.
pub fn execute_transaction(
    state: &WorldState,
    tx: &Transaction,
) -> Result<(WorldState, TxOutcome), SimError> {
    if tx.block.id != state.current_block.id {
        return Err(SimError::BlockMismatch {
            expected: state.current_block.id,
            got: tx.block.id,
        });
    }
    let mut work = state.clone();
    let mut trace = Vec::with_capacity(tx.steps.len());
    for (index, step) in tx.steps.iter().enumerate() {
        let mut queries = Vec::new();
        match execute_step(&mut work, step, &mut queries) {
            Ok(record) => trace.push(StepTrace {
                index,
                record,
                guard_queries: queries,
            }),
            Err(reason) => {
                return Ok((
                    state.clone(),
                    TxOutcome::Reverted {
                        step_index: index,
                        reason,
                        trace,
                    },
                ));
            }
        }
    }
    if let Err(reason) = flash::assert_no_open_loans(&work) {
        return Ok((
            state.clone(),
            TxOutcome::Reverted {
                step_index: tx.steps.len(),
                reason,
                trace,
            },
        ));
    }
    Ok((work, TxOutcome::Success { trace }))
}

fn execute_step(
    state: &mut WorldState,
    step: &Step,
    queries: &mut Vec<GuardQuery>,
) -> Result<StepRecord, SimError> {
    match step {
        Step::Transfer {
            from,
            to,
            asset,
            amount,
        } => {
            if amount.is_negative() {
                return Err(SimError::NegativeAmount);
            }
            state.debit(from, asset, amount)?;
            state.credit(to, asset, amount);
            Ok(StepRecord::Transfer {
                from: from.clone(),
                to: to.clone(),
                asset: asset.clone(),
                amount: amount.clone(),
            })
        }
        Step::Swap {
            account,
            pool,
            asset_in,
            amount_in,
        } => do_swap(state, account, pool, asset_in, amount_in.clone()),
        Step::SwapAllBalance {
            account,
            pool,
            asset_in,
        } => {
            let amount = state.balance(account, asset_in);
            do_swap(state, account, pool, asset_in, amount)
        }
        Step::FlashBorrow {
            account,
            asset,
            amount,
        } => {
            flash::flash_borrow(state, account, asset, amount)?;
            Ok(StepRecord::FlashBorrow {
                asset: asset.clone(),
                amount: amount.clone(),
            })
        }
        Step::FlashRepay { account, asset } => {
            let due = flash::amount_due(state, account, asset).ok_or(SimError::NoOpenLoan {
                account: account.clone(),
                asset: asset.clone(),
            })?;
            flash::flash_repay(state, account, asset, &due)?;
            Ok(StepRecord::FlashRepay {
                asset: asset.clone(),
                amount: due,
            })
        }
        Step::Deposit {
            account,
            asset,
            amount,
        } => {
            plf::deposit(state, account, asset, amount)?;
            Ok(StepRecord::Deposit {
                asset: asset.clone(),
                amount: amount.clone(),
            })
        }
        Step::DepositAllBalance { account, asset } => {
            let amount = state.balance(account, asset);
            plf::deposit(state, account, asset, &amount)?;
            Ok(StepRecord::Deposit {
                asset: asset.clone(),
                amount,
            })
        }
        Step::Borrow {
            account,
            asset,
            amount,
        } => {
            let out = plf::borrow(state, account, asset, amount, queries)?;
            Ok(borrow_record(out))
        }
        Step::BorrowMax { account, asset } => {
            let out = plf::borrow_max(state, account, asset, queries)?;
            Ok(borrow_record(out))
        }
        Step::CoverShortfall {
            account,
            loan_asset,
            pay_with,
            venue,
        } => cover_shortfall(state, account, loan_asset, pay_with, venue),
        Step::CheckLiquidate { account } => {
            let liquidated = plf::check_and_liquidate(state, account, queries)?;
            Ok(StepRecord::Liquidation { liquidated })
        }
    }
}

fn borrow_record(out: plf::BorrowOutcome) -> StepRecord {
    StepRecord::Borrow {
        asset: out.asset,
        amount: out.amount,
        value_usd: out.value_usd,
        limit_usd: out.limit_usd,
        collateral_price_usd: out.collateral_price_usd,
        raw_collateral_oracle_usd: out.raw_collateral_oracle_usd,
    }
}

fn do_swap(
    state: &mut WorldState,
    account: &AccountId,
    pair: &PairId,
    asset_in: &AssetId,
    amount_in: Amount,
) -> Result<StepRecord, SimError> {
    state.debit(account, asset_in, &amount_in)?;
    let pool = state
        .pools
        .get_mut(pair)
        .ok_or_else(|| SimError::UnknownPool(pair.clone()))?;
    let asset_out = if asset_in == &pool.asset_x {
        pool.asset_y.clone()
    } else {
        pool.asset_x.clone()
    };
    let amount_out = pool.swap_exact_in(asset_in, &amount_in)?;
    state.credit(account, &asset_out, &amount_out);
    Ok(StepRecord::Swap {
        asset_in: asset_in.clone(),
        amount_in,
        asset_out,
        amount_out,
    })
}

/// Buys the flash-loaned asset at fixed reference prices from an external
/// venue account, spending at most the account's `pay_with` balance. A
/// partial cover is allowed; the subsequent repayment step then fails and
/// reverts the transaction.
fn cover_shortfall(
    state: &mut WorldState,
    account: &AccountId,
    loan_asset: &AssetId,
    pay_with: &AssetId,
    venue: &AccountId,
) -> Result<StepRecord, SimError> {
    let due = flash::amount_due(state, account, loan_asset).ok_or(SimError::NoOpenLoan {
        account: account.clone(),
        asset: loan_asset.clone(),
    })?;
    let held = state.balance(account, loan_asset);
    let needed = &due - &held;
    if !needed.is_positive() {
        return Ok(StepRecord::CoverShortfall {
            loan_asset: loan_asset.clone(),
            acquired: Amount::zero(),
            pay_with: pay_with.clone(),
            paid: Amount::zero(),
        });
    }
    let price_loan = plf::raw_oracle_usd(state, loan_asset)?;
    let price_pay = plf::raw_oracle_usd(state, pay_with)?;
    if !price_pay.is_positive() || !price_loan.is_positive() {
        return Err(SimError::NonPositiveOracle);
    }
    let full_cost = &needed * &price_loan / &price_pay;
    let budget = state.balance(account, pay_with);
    let paid = if budget < full_cost { budget } else { full_cost };
    let acquired = &paid * &price_pay / &price_loan;
    if paid.is_positive() {
        if state.balance(venue, loan_asset) < acquired {
            return Err(SimError::InsufficientBalance {
                account: venue.clone(),
                asset: loan_asset.clone(),
            });
        }
        state.debit(account, pay_with, &paid)?;
        state.credit(venue, pay_with, &paid);
        state.debit(venue, loan_asset, &acquired)?;
        state.credit(account, loan_asset, &acquired);
    }
    Ok(StepRecord::CoverShortfall {
        loan_asset: loan_asset.clone(),
        acquired,
        pay_with: pay_with.clone(),
        paid,
    })
}

/// Human-readable one-line rendering of a step record, used by trace output.
pub fn describe_record(record: &StepRecord) -> String {
    use crate::types::format_rat as fr;
    match record {
        StepRecord::Transfer {
            from,
            to,
            asset,
            amount,
        } => format!("transfer {} {asset} from {from} to {to}", fr(amount)),
        StepRecord::Swap {
            asset_in,
            amount_in,
            asset_out,
            amount_out,
        } => format!(
            "swap {} {asset_in} -> {} {asset_out}",
            fr(amount_in),
            fr(amount_out)
        ),
        StepRecord::FlashBorrow { asset, amount } => {
            format!("flash-borrow {} {asset}", fr(amount))
        }
        StepRecord::FlashRepay { asset, amount } => {
            format!("flash-repay {} {asset}", fr(amount))
        }
        StepRecord::Deposit { asset, amount } => {
            format!("deposit {} {asset} as collateral", fr(amount))
        }
        StepRecord::Borrow {
            asset,
            amount,
            limit_usd,
            collateral_price_usd,
            ..
        } => format!(
            "borrow {} {asset} (limit ${}, collateral priced ${})",
            fr(amount),
            fr(limit_usd),
            fr(collateral_price_usd)
        ),
        StepRecord::CoverShortfall {
            loan_asset,
            acquired,
            pay_with,
            paid,
        } => format!(
            "cover shortfall: {} {pay_with} -> {} {loan_asset}",
            fr(paid),
            fr(acquired)
        ),
        StepRecord::Liquidation { liquidated } => {
            if *liquidated {
                "liquidation: position seized".into()
            } else {
                "liquidation check: position safe".into()
            }
        }
        StepRecord::CommitCheck => "commit check".into(),
    }
}

#[doc(hidden)]
pub mod test_support {
    //! Minimal world builders shared by unit tests across modules.
    use super::*;

    pub fn bare_state() -> WorldState {
        WorldState::new(PlfParams {
            epsilon: rat(5),
            price_mode: PriceMode::RawOracle,
        })
    }

    pub fn fixed_oracle(state: &mut WorldState, symbol: &str, price: Amount) {
        state
            .oracles
            .insert(AssetId::new(symbol), OracleSource::Fixed(price));
    }
}
