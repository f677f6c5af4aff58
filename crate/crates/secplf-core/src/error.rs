//! Error types for the simulation core and the risk analyzer.

use alloc::string::String;
use core::fmt;

use crate::types::{AccountId, AssetId, PairId};

/// Failure of a single simulation operation. Inside a transaction any
/// `SimError` aborts the step and reverts the whole transaction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimError {
    ZeroAmount,
    NegativeAmount,
    UnknownAsset(AssetId),
    UnknownAccount(AccountId),
    UnknownPool(PairId),
    UnknownPosition(AccountId),
    /// Swap output would consume the entire output reserve. Impossible under
    /// the constant-product formula; asserted anyway.
    DrainedPool(PairId),
    InsufficientBalance {
        account: AccountId,
        asset: AssetId,
    },
    InsufficientProviderReserve(AssetId),
    DuplicateLoan {
        account: AccountId,
        asset: AssetId,
    },
    NoOpenLoan {
        account: AccountId,
        asset: AssetId,
    },
    /// Repayment below principal plus fee.
    InsufficientRepayment,
    OpenLoanAtCommit,
    InsufficientPlfLiquidity(AssetId),
    /// Borrow request exceeding the collateral-implied limit.
    OverLimit,
    /// Guard mode is on but no state was initialized for this asset at
    /// deployment. Lazy initialization inside a transaction would let an
    /// attacker seed the guard with a distorted price.
    GuardNotInitialized(AssetId),
    /// A position holds a different collateral asset than the deposit.
    CollateralAssetMismatch {
        account: AccountId,
        held: AssetId,
        offered: AssetId,
    },
    NonPositiveOracle,
    /// Guard queried with a block older than its stored state; a ledger
    /// ordering bug, not an adversarial condition.
    StaleBlock,
    /// Transaction block id does not match the ledger's current block.
    BlockMismatch {
        expected: u64,
        got: u64,
    },
    InvalidPlan(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::ZeroAmount => write!(f, "amount must be positive"),
            SimError::NegativeAmount => write!(f, "amount must not be negative"),
            SimError::UnknownAsset(a) => write!(f, "unknown asset {a}"),
            SimError::UnknownAccount(a) => write!(f, "unknown account {a}"),
            SimError::UnknownPool(p) => write!(f, "unknown pool {p}"),
            SimError::UnknownPosition(a) => write!(f, "no position for account {a}"),
            SimError::DrainedPool(p) => write!(f, "swap would drain pool {p}"),
            SimError::InsufficientBalance { account, asset } => {
                write!(f, "insufficient {asset} balance for {account}")
            }
            SimError::InsufficientProviderReserve(a) => {
                write!(f, "flash provider reserve of {a} too low")
            }
            SimError::DuplicateLoan { account, asset } => {
                write!(f, "flash loan already open for {account} in {asset}")
            }
            SimError::NoOpenLoan { account, asset } => {
                write!(f, "no open flash loan for {account} in {asset}")
            }
            SimError::InsufficientRepayment => {
                write!(f, "flash loan repayment below principal plus fee")
            }
            SimError::OpenLoanAtCommit => write!(f, "open flash loan at commit"),
            SimError::InsufficientPlfLiquidity(a) => {
                write!(f, "PLF has insufficient {a} liquidity")
            }
            SimError::OverLimit => write!(f, "borrow exceeds collateral limit"),
            SimError::GuardNotInitialized(a) => {
                write!(f, "no guard state initialized for asset {a}")
            }
            SimError::CollateralAssetMismatch {
                account,
                held,
                offered,
            } => write!(
                f,
                "position of {account} holds {held} collateral, cannot deposit {offered}"
            ),
            SimError::NonPositiveOracle => write!(f, "oracle price must be positive"),
            SimError::StaleBlock => write!(f, "guard queried with stale block id"),
            SimError::BlockMismatch { expected, got } => {
                write!(f, "transaction block {got} does not match current block {expected}")
            }
            SimError::InvalidPlan(why) => write!(f, "invalid attack plan: {why}"),
        }
    }
}

/// Errors from the minute-series risk analyzer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnalyzerError {
    /// Row index (0-based, excluding the header) and a description.
    ParseError { row: usize, message: String },
    NonPositivePrice { row: usize },
    EmptySeries,
    SeriesTooShort { len: usize, needed: usize },
    OutOfRange { minute: usize, window: usize, len: usize },
    BadParams(String),
}

impl fmt::Display for AnalyzerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzerError::ParseError { row, message } => {
                write!(f, "row {row}: {message}")
            }
            AnalyzerError::NonPositivePrice { row } => {
                write!(f, "row {row}: close price must be positive")
            }
            AnalyzerError::EmptySeries => write!(f, "series has no data points"),
            AnalyzerError::SeriesTooShort { len, needed } => {
                write!(f, "series of {len} points too short, need more than {needed}")
            }
            AnalyzerError::OutOfRange { minute, window, len } => {
                write!(f, "minute {minute} out of range for window {window}, series length {len}")
            }
            AnalyzerError::BadParams(m) => write!(f, "bad parameters: {m}"),
        }
    }
}
