//! Builds and executes the flash-loan-driven oracle-manipulation attack
//! transaction, and computes the analytic profit quantities for comparison
//! with realized outcomes.

use alloc::collections::BTreeSet;
use alloc::vec;

use num_traits::{One, Signed, Zero};

use crate::error::SimError;
use crate::ledger::{execute_transaction, Step, StepRecord, Transaction, TxOutcome, WorldState};
use crate::plf::raw_oracle_usd;
use crate::types::{AccountId, Amount, AssetId, PairId};

/// Parameters of one attack attempt.
///
/// The adversary flash-borrows `flash_amount` of `flash_asset`, spends
/// `collateral_swap_in` of it acquiring `deposit_asset` collateral, dumps the
/// remainder into the pool to distort the oracle, borrows `borrow_asset`
/// against the inflated collateral, unwinds the distortion swap, covers any
/// repayment shortfall at reference prices via `venue`, and repays the loan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackPlan {
    pub adversary: AccountId,
    pub venue: AccountId,
    pub flash_asset: AssetId,
    pub flash_amount: Amount,
    pub collateral_swap_in: Amount,
    pub target_pool: PairId,
    pub deposit_asset: AssetId,
    pub borrow_asset: AssetId,
}

/// What happened, analytically and actually.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackReport {
    /// Realized oracle distortion at the borrow step relative to the
    /// pre-attack oracle. Absent if the transaction failed before borrowing.
    pub theta: Option<Amount>,
    /// Borrow limit in USD at the borrow step.
    pub max_l_usd: Option<Amount>,
    /// Amount of `borrow_asset` actually borrowed.
    pub borrowed: Option<Amount>,
    /// Collateral actually deposited.
    pub deposited: Option<Amount>,
    /// Analytic gain `O_B * Y * (theta / epsilon - 1)`, which values the
    /// attack cost as the deposited collateral's market value.
    pub predicted_g_usd: Option<Amount>,
    /// Committed balance delta of the adversary valued at pre-attack USD
    /// prices. Charges what was actually spent, so it differs from the
    /// analytic gain; locked collateral counts as zero.
    pub realized_profit_usd: Amount,
    pub outcome: TxOutcome,
}

impl AttackReport {
    pub fn succeeded(&self) -> bool {
        self.outcome.is_success()
    }
}

/// Analytic gain of the attack: `o_b * y * (theta / epsilon - 1)`.
/// Negative when the achieved distortion is below the collateralization
/// ratio.
pub fn predicted_profit_usd(
    o_b: &Amount,
    y: &Amount,
    theta: &Amount,
    epsilon: &Amount,
) -> Amount {
    o_b * y * (theta / epsilon - Amount::one())
}

/// Upper bound on the gain, using the maximum attainable collateral and
/// distortion. Zero exactly when `max_theta == epsilon`.
pub fn max_profit_usd(
    o_b: &Amount,
    max_y: &Amount,
    max_theta: &Amount,
    epsilon: &Amount,
) -> Amount {
    predicted_profit_usd(o_b, max_y, max_theta, epsilon)
}

/// Assembles the eight-step attack transaction for the ledger's current
/// block. Amounts that depend on intermediate swap outputs are resolved at
/// execution time via the `AllBalance` step forms.
pub fn build_attack(plan: &AttackPlan, state: &WorldState) -> Result<Transaction, SimError> {
    if !plan.collateral_swap_in.is_positive() {
        return Err(SimError::InvalidPlan(
            "collateral swap amount must be positive; nothing to deposit".into(),
        ));
    }
    if plan.collateral_swap_in >= plan.flash_amount {
        return Err(SimError::InvalidPlan(
            "collateral swap must leave flash-loan funds for the distortion swap".into(),
        ));
    }
    if !plan.target_pool.contains(&plan.flash_asset)
        || !plan.target_pool.contains(&plan.deposit_asset)
    {
        return Err(SimError::InvalidPlan(
            "target pool must pair the flash asset with the deposit asset".into(),
        ));
    }
    if !state.pools.contains_key(&plan.target_pool) {
        return Err(SimError::UnknownPool(plan.target_pool.clone()));
    }
    for asset in [&plan.flash_asset, &plan.deposit_asset, &plan.borrow_asset] {
        if !state.oracles.contains_key(asset) {
            return Err(SimError::UnknownAsset(asset.clone()));
        }
    }
    let adv = plan.adversary.clone();
    let remainder = &plan.flash_amount - &plan.collateral_swap_in;
    let steps = vec![
        Step::FlashBorrow {
            account: adv.clone(),
            asset: plan.flash_asset.clone(),
            amount: plan.flash_amount.clone(),
        },
        Step::Swap {
            account: adv.clone(),
            pool: plan.target_pool.clone(),
            asset_in: plan.flash_asset.clone(),
            amount_in: plan.collateral_swap_in.clone(),
        },
        Step::DepositAllBalance {
            account: adv.clone(),
            asset: plan.deposit_asset.clone(),
        },
        Step::Swap {
            account: adv.clone(),
            pool: plan.target_pool.clone(),
            asset_in: plan.flash_asset.clone(),
            amount_in: remainder,
        },
        Step::BorrowMax {
            account: adv.clone(),
            asset: plan.borrow_asset.clone(),
        },
        Step::SwapAllBalance {
            account: adv.clone(),
            pool: plan.target_pool.clone(),
            asset_in: plan.deposit_asset.clone(),
        },
        Step::CoverShortfall {
            account: adv.clone(),
            loan_asset: plan.flash_asset.clone(),
            pay_with: plan.borrow_asset.clone(),
            venue: plan.venue.clone(),
        },
        Step::FlashRepay {
            account: adv,
            asset: plan.flash_asset.clone(),
        },
    ];
    Ok(Transaction {
        steps,
        block: state.current_block,
        sender: plan.adversary.clone(),
    })
}

/// Executes the attack and reports realized distortion, borrow quantities,
/// analytic gain, and committed profit at pre-attack prices. A revert is a
/// valid report, not an error.
pub fn run_attack(
    state: &WorldState,
    plan: &AttackPlan,
) -> Result<(WorldState, AttackReport), SimError> {
    let tx = build_attack(plan, state)?;
    let pre_oracle_b = raw_oracle_usd(state, &plan.deposit_asset)?;
    let (post, outcome) = execute_transaction(state, &tx)?;

    let mut theta = None;
    let mut max_l_usd = None;
    let mut borrowed = None;
    let mut deposited = None;
    for step in outcome.trace() {
        match &step.record {
            StepRecord::Borrow {
                amount,
                limit_usd,
                raw_collateral_oracle_usd,
                ..
            } => {
                theta = Some(raw_collateral_oracle_usd / &pre_oracle_b);
                max_l_usd = Some(limit_usd.clone());
                borrowed = Some(amount.clone());
            }
            StepRecord::Deposit { amount, .. } => deposited = Some(amount.clone()),
            _ => {}
        }
    }
    let predicted_g_usd = match (&theta, &deposited) {
        (Some(theta), Some(y)) => Some(predicted_profit_usd(
            &pre_oracle_b,
            y,
            theta,
            &state.plf.params.epsilon,
        )),
        _ => None,
    };
    let realized_profit_usd = balance_delta_usd(state, &post, &plan.adversary)?;
    Ok((
        post,
        AttackReport {
            theta,
            max_l_usd,
            borrowed,
            deposited,
            predicted_g_usd,
            realized_profit_usd,
            outcome,
        },
    ))
}

/// Net change of `account`'s balances between `pre` and `post`, valued at
/// `pre`'s raw oracle prices.
fn balance_delta_usd(
    pre: &WorldState,
    post: &WorldState,
    account: &AccountId,
) -> Result<Amount, SimError> {
    let mut assets: BTreeSet<AssetId> = BTreeSet::new();
    for source in [pre, post] {
        for (acct, asset) in source.balances.keys() {
            if acct == account {
                assets.insert(asset.clone());
            }
        }
    }
    let mut total = Amount::zero();
    for asset in assets {
        let delta = post.balance(account, &asset) - pre.balance(account, &asset);
        if delta.is_zero() {
            continue;
        }
        total += delta * raw_oracle_usd(pre, &asset)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::test_support::{bare_state, fixed_oracle};
    use crate::plf::OracleSource;
    use crate::types::{rat, ratio};
    use crate::Pool;

    fn acct(s: &str) -> AccountId {
        AccountId::new(s)
    }
    fn asset(s: &str) -> AssetId {
        AssetId::new(s)
    }

    /// The worked-example world: pool A/B at (100, 1000), prices
    /// $100/$10/$1, epsilon 5, deep flash and venue liquidity.
    pub fn fig1_world() -> WorldState {
        let mut s = bare_state();
        fixed_oracle(&mut s, "A", rat(100));
        fixed_oracle(&mut s, "C", rat(1));
        s.oracles.insert(
            asset("B"),
            OracleSource::Pool {
                pair: PairId::new(asset("A"), asset("B")),
                numeraire: asset("A"),
            },
        );
        let pool = Pool::new(asset("A"), asset("B"), rat(100), rat(1_000)).unwrap();
        s.pools.insert(pool.pair_id(), pool);
        s.flash.reserves.insert(asset("A"), rat(1_000_000));
        s.plf.liquidity.insert(asset("C"), rat(20_000_000));
        s.credit(&acct("venue"), &asset("A"), &rat(1_000_000));
        s.credit(&acct("venue"), &asset("C"), &rat(100_000_000));
        s.begin_block()
    }

    pub fn fig1_plan() -> AttackPlan {
        AttackPlan {
            adversary: acct("adversary"),
            venue: acct("venue"),
            flash_asset: asset("A"),
            flash_amount: rat(10_000),
            collateral_swap_in: rat(100),
            target_pool: PairId::new(asset("A"), asset("B")),
            deposit_asset: asset("B"),
            borrow_asset: asset("C"),
        }
    }

    #[test]
    fn build_attack_step_order() {
        let s = fig1_world();
        let tx = build_attack(&fig1_plan(), &s).unwrap();
        assert_eq!(tx.steps.len(), 8);
        assert!(matches!(tx.steps[0], Step::FlashBorrow { .. }));
        assert!(matches!(tx.steps[1], Step::Swap { .. }));
        assert!(matches!(tx.steps[2], Step::DepositAllBalance { .. }));
        assert!(matches!(tx.steps[3], Step::Swap { .. }));
        assert!(matches!(tx.steps[4], Step::BorrowMax { .. }));
        assert!(matches!(tx.steps[5], Step::SwapAllBalance { .. }));
        assert!(matches!(tx.steps[6], Step::CoverShortfall { .. }));
        assert!(matches!(tx.steps[7], Step::FlashRepay { .. }));
    }

    #[test]
    fn degenerate_plans_rejected() {
        let s = fig1_world();
        let mut plan = fig1_plan();
        plan.collateral_swap_in = rat(0);
        assert!(matches!(build_attack(&plan, &s), Err(SimError::InvalidPlan(_))));
        plan.collateral_swap_in = plan.flash_amount.clone();
        assert!(matches!(build_attack(&plan, &s), Err(SimError::InvalidPlan(_))));
    }

    #[test]
    fn analytic_profit_formula() {
        // Boundary: theta == epsilon means zero gain.
        assert_eq!(
            predicted_profit_usd(&rat(10), &rat(500), &rat(5), &rat(5)),
            rat(0)
        );
        // theta below epsilon: strictly unprofitable.
        assert!(predicted_profit_usd(&rat(10), &rat(500), &ratio(5, 2), &rat(5)).is_negative());
        assert_eq!(
            max_profit_usd(&rat(10), &rat(500), &rat(5), &rat(5)),
            rat(0)
        );
        assert_eq!(
            max_profit_usd(&rat(10), &rat(0), &rat(10_202), &rat(5)),
            rat(0)
        );
    }

    #[test]
    fn unguarded_attack_succeeds_with_exact_numbers() {
        let s = fig1_world();
        let (post, report) = run_attack(&s, &fig1_plan()).unwrap();
        assert!(report.succeeded());
        assert_eq!(report.theta, Some(rat(10_201)));
        assert_eq!(report.max_l_usd, Some(rat(10_201_000)));
        assert_eq!(report.borrowed, Some(rat(10_201_000)));
        assert_eq!(report.realized_profit_usd, rat(10_191_000));
        assert_eq!(
            post.balance(&acct("adversary"), &asset("C")),
            rat(10_191_000)
        );
    }

    #[test]
    fn realized_distortion_grows_with_distortion_swap() {
        let s = fig1_world();
        let mut small = fig1_plan();
        small.flash_amount = rat(5_000);
        let (_, report_small) = run_attack(&s, &small).unwrap();
        let (_, report_big) = run_attack(&s, &fig1_plan()).unwrap();
        assert!(report_big.theta.unwrap() > report_small.theta.unwrap());
    }

    #[test]
    fn borrowed_value_respects_limit() {
        let s = fig1_world();
        let (_, report) = run_attack(&s, &fig1_plan()).unwrap();
        let o_c = rat(1);
        assert!(report.borrowed.unwrap() * o_c <= report.max_l_usd.unwrap());
    }
}
