//! Scenario files: a JSON description of a world (assets, pools, accounts,
//! lending parameters, flash provider) plus one attack plan. Amounts travel
//! as decimal strings and are parsed into exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use secplf_core::adversary::AttackPlan;
use secplf_core::guard::PriceState;
use secplf_core::plf::{raw_oracle_usd, OracleSource, PlfParams, PriceMode};
use secplf_core::types::{parse_decimal, rat, AccountId, Amount, AssetId, PairId};
use secplf_core::{Pool, WorldState};

/// Configuration problem, carrying the path of the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Safe collateralization ratio, also the guard's per-block price cap.
    pub epsilon: String,
    pub price_mode: PriceModeConfig,
    pub assets: Vec<AssetConfig>,
    pub pools: Vec<PoolConfig>,
    #[serde(default)]
    pub accounts: Vec<AccountConfig>,
    pub flash_provider: FlashConfig,
    #[serde(default)]
    pub plf_liquidity: BTreeMap<String, String>,
    pub attack: AttackConfig,
    /// Seed for randomized sweeps that reuse this scenario.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub enum PriceModeConfig {
    RawOracle,
    SecPlfGuard,
}

impl From<PriceModeConfig> for PriceMode {
    fn from(m: PriceModeConfig) -> PriceMode {
        match m {
            PriceModeConfig::RawOracle => PriceMode::RawOracle,
            PriceModeConfig::SecPlfGuard => PriceMode::SecPlfGuard,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AssetConfig {
    pub symbol: String,
    pub price: PriceConfig,
}

/// Either a fixed USD reference price or a pool-derived spot price converted
/// through a numeraire's fixed price.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields, untagged)]
pub enum PriceConfig {
    Fixed { usd: String },
    FromPool { pool: [String; 2], numeraire: String },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PoolConfig {
    pub asset_x: String,
    pub asset_y: String,
    pub reserve_x: String,
    pub reserve_y: String,
    /// Effective-input multiplier in (0, 1]; omit for no fee.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_multiplier: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AccountConfig {
    pub id: String,
    pub balances: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FlashConfig {
    pub reserves: BTreeMap<String, String>,
    #[serde(default)]
    pub fee_rate: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AttackConfig {
    pub adversary: String,
    pub venue: String,
    pub flash_asset: String,
    pub flash_amount: String,
    pub collateral_swap_in: String,
    pub deposit_asset: String,
    pub borrow_asset: String,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(path.display().to_string(), format!("cannot read: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| err(path.display().to_string(), format!("invalid JSON: {e}")))
    }
}

fn parse_amount(field: &str, value: &str) -> Result<Amount, ConfigError> {
    parse_decimal(value).ok_or_else(|| err(field, format!("not a decimal amount: {value:?}")))
}

/// Builds the world and the attack plan from a scenario, optionally
/// overriding the price mode (the `--guarded`/`--unguarded` flags).
///
/// In guarded mode every asset's guard state is initialized from the honest
/// block-0 oracle reading before the world advances to block 1; lazily
/// initializing inside a transaction would let an attacker seed a distorted
/// price.
pub fn build_world(
    config: &ScenarioConfig,
    mode_override: Option<PriceMode>,
) -> Result<(WorldState, AttackPlan), ConfigError> {
    let epsilon = parse_amount("epsilon", &config.epsilon)?;
    if epsilon <= rat(1) {
        return Err(err("epsilon", "must exceed 1"));
    }
    let price_mode = mode_override.unwrap_or_else(|| config.price_mode.into());
    let mut state = WorldState::new(PlfParams {
        epsilon,
        price_mode,
    });

    let declared: BTreeMap<&str, usize> = config
        .assets
        .iter()
        .enumerate()
        .map(|(i, a)| (a.symbol.as_str(), i))
        .collect();
    if declared.len() != config.assets.len() {
        return Err(err("assets", "duplicate asset symbol"));
    }
    let check_asset = |field: String, symbol: &str| -> Result<AssetId, ConfigError> {
        if declared.contains_key(symbol) {
            Ok(AssetId::new(symbol))
        } else {
            Err(err(field, format!("asset {symbol:?} not declared")))
        }
    };

    for (i, asset) in config.assets.iter().enumerate() {
        let source = match &asset.price {
            PriceConfig::Fixed { usd } => {
                let p = parse_amount(&format!("assets[{i}].price.usd"), usd)?;
                OracleSource::Fixed(p)
            }
            PriceConfig::FromPool { pool, numeraire } => {
                let field = format!("assets[{i}].price.pool");
                let a = check_asset(field.clone(), &pool[0])?;
                let b = check_asset(field, &pool[1])?;
                let n = check_asset(format!("assets[{i}].price.numeraire"), numeraire)?;
                OracleSource::Pool {
                    pair: PairId::new(a, b),
                    numeraire: n,
                }
            }
        };
        state.oracles.insert(AssetId::new(&asset.symbol), source);
    }

    for (i, pool) in config.pools.iter().enumerate() {
        let x = check_asset(format!("pools[{i}].assetX"), &pool.asset_x)?;
        let y = check_asset(format!("pools[{i}].assetY"), &pool.asset_y)?;
        let rx = parse_amount(&format!("pools[{i}].reserveX"), &pool.reserve_x)?;
        let ry = parse_amount(&format!("pools[{i}].reserveY"), &pool.reserve_y)?;
        let fee = match &pool.fee_multiplier {
            Some(f) => parse_amount(&format!("pools[{i}].feeMultiplier"), f)?,
            None => rat(1),
        };
        let pool = Pool::with_fee(x, y, rx, ry, fee)
            .map_err(|e| err(format!("pools[{i}]"), e.to_string()))?;
        if state.pools.insert(pool.pair_id(), pool).is_some() {
            return Err(err(format!("pools[{i}]"), "duplicate pool pair"));
        }
    }

    for (i, account) in config.accounts.iter().enumerate() {
        let id = AccountId::new(&account.id);
        for (symbol, amount) in &account.balances {
            let field = format!("accounts[{i}].balances.{symbol}");
            let asset = check_asset(field.clone(), symbol)?;
            let amount = parse_amount(&field, amount)?;
            state.credit(&id, &asset, &amount);
        }
    }

    for (symbol, amount) in &config.flash_provider.reserves {
        let field = format!("flashProvider.reserves.{symbol}");
        let asset = check_asset(field.clone(), symbol)?;
        let amount = parse_amount(&field, amount)?;
        state.flash.reserves.insert(asset, amount);
    }
    if let Some(fee) = &config.flash_provider.fee_rate {
        state.flash.fee_rate = parse_amount("flashProvider.feeRate", fee)?;
    }

    for (symbol, amount) in &config.plf_liquidity {
        let field = format!("plfLiquidity.{symbol}");
        let asset = check_asset(field.clone(), symbol)?;
        let amount = parse_amount(&field, amount)?;
        state.plf.liquidity.insert(asset, amount);
    }

    let a = &config.attack;
    let plan = AttackPlan {
        adversary: AccountId::new(&a.adversary),
        venue: AccountId::new(&a.venue),
        flash_asset: check_asset("attack.flashAsset".into(), &a.flash_asset)?,
        flash_amount: parse_amount("attack.flashAmount", &a.flash_amount)?,
        collateral_swap_in: parse_amount("attack.collateralSwapIn", &a.collateral_swap_in)?,
        target_pool: PairId::new(
            check_asset("attack.flashAsset".into(), &a.flash_asset)?,
            check_asset("attack.depositAsset".into(), &a.deposit_asset)?,
        ),
        deposit_asset: check_asset("attack.depositAsset".into(), &a.deposit_asset)?,
        borrow_asset: check_asset("attack.borrowAsset".into(), &a.borrow_asset)?,
    };
    if !state.pools.contains_key(&plan.target_pool) {
        return Err(err(
            "attack.depositAsset",
            format!("no pool pairs {} with {}", a.flash_asset, a.deposit_asset),
        ));
    }
    if !config.accounts.iter().any(|acct| acct.id == a.venue) {
        return Err(err("attack.venue", format!("account {:?} not declared", a.venue)));
    }

    // Honest oracle readings seed the guards at block 0, then the attack
    // block begins.
    if price_mode == PriceMode::SecPlfGuard {
        let symbols: Vec<AssetId> = state.oracles.keys().cloned().collect();
        for asset in symbols {
            let oracle = raw_oracle_usd(&state, &asset)
                .map_err(|e| err(format!("assets ({asset})"), e.to_string()))?;
            let guard = PriceState::init(&oracle, state.current_block)
                .map_err(|e| err(format!("assets ({asset})"), e.to_string()))?;
            state.guards.insert(asset, guard);
        }
    }
    Ok((state.begin_block(), plan))
}
