//! Executes a scenario's attack and renders machine-readable reports.
//! Exact rational values travel as strings; an `approx` float is included
//! for human consumption only.

use serde::{Deserialize, Serialize};

use secplf_core::adversary::{run_attack, AttackReport};
use secplf_core::ledger::{describe_record, StepTrace, TxOutcome};
use secplf_core::plf::PriceMode;
use secplf_core::types::{format_rat, rat_to_f64, Amount};
use secplf_core::WorldState;

use crate::scenario::{build_world, ConfigError, ScenarioConfig};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct ExactValue {
    pub exact: String,
    pub approx: f64,
}

impl ExactValue {
    fn from_amount(a: &Amount) -> Self {
        ExactValue {
            exact: format_rat(a),
            approx: rat_to_f64(a),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct AttackReportJson {
    pub price_mode: String,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverted_at_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revert_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_l_usd: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub borrowed: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deposited: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_g_usd: Option<ExactValue>,
    pub realized_profit_usd: ExactValue,
    pub steps: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct GuardQueryJson {
    pub asset: String,
    pub block: u64,
    pub oracle: ExactValue,
    pub output: ExactValue,
    pub discrepancy: ExactValue,
    pub updated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct StepTraceJson {
    pub index: usize,
    pub description: String,
    pub guard_queries: Vec<GuardQueryJson>,
}

pub struct RunResult {
    pub pre_state: WorldState,
    pub post_state: WorldState,
    pub report: AttackReport,
    pub report_json: AttackReportJson,
    pub trace_json: Vec<StepTraceJson>,
}

fn mode_name(mode: PriceMode) -> &'static str {
    match mode {
        PriceMode::RawOracle => "rawOracle",
        PriceMode::SecPlfGuard => "secPlfGuard",
    }
}

fn trace_json(trace: &[StepTrace]) -> Vec<StepTraceJson> {
    trace
        .iter()
        .map(|t| StepTraceJson {
            index: t.index,
            description: describe_record(&t.record),
            guard_queries: t
                .guard_queries
                .iter()
                .map(|q| GuardQueryJson {
                    asset: q.asset.0.clone(),
                    block: q.block,
                    oracle: ExactValue::from_amount(&q.oracle),
                    output: ExactValue::from_amount(&q.output),
                    discrepancy: ExactValue::from_amount(&q.discrepancy),
                    updated: q.updated,
                })
                .collect(),
        })
        .collect()
}

pub fn report_json(mode: PriceMode, report: &AttackReport) -> AttackReportJson {
    let (outcome, reverted_at_step, revert_reason) = match &report.outcome {
        TxOutcome::Success { .. } => ("committed".to_string(), None, None),
        TxOutcome::Reverted {
            step_index, reason, ..
        } => ("reverted".to_string(), Some(*step_index), Some(reason.to_string())),
    };
    AttackReportJson {
        price_mode: mode_name(mode).to_string(),
        outcome,
        reverted_at_step,
        revert_reason,
        theta: report.theta.as_ref().map(ExactValue::from_amount),
        max_l_usd: report.max_l_usd.as_ref().map(ExactValue::from_amount),
        borrowed: report.borrowed.as_ref().map(ExactValue::from_amount),
        deposited: report.deposited.as_ref().map(ExactValue::from_amount),
        predicted_g_usd: report.predicted_g_usd.as_ref().map(ExactValue::from_amount),
        realized_profit_usd: ExactValue::from_amount(&report.realized_profit_usd),
        steps: report
            .outcome
            .trace()
            .iter()
            .map(|t| describe_record(&t.record))
            .collect(),
    }
}

/// Builds the world and runs the attack once. Simulation errors that are not
/// reverts (e.g. a degenerate plan) surface as config errors.
pub fn run_scenario(
    config: &ScenarioConfig,
    mode_override: Option<PriceMode>,
) -> Result<RunResult, ConfigError> {
    let (pre_state, plan) = build_world(config, mode_override)?;
    let mode = pre_state.plf.params.price_mode;
    let (post_state, report) = run_attack(&pre_state, &plan).map_err(|e| ConfigError {
        field: "attack".into(),
        message: e.to_string(),
    })?;
    let report_json = report_json(mode, &report);
    let trace_json = trace_json(report.outcome.trace());
    Ok(RunResult {
        pre_state,
        post_state,
        report,
        report_json,
        trace_json,
    })
}
