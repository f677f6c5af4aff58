//! Acceptance suite. Each test covers one numbered criterion and prints a
//! single `acceptance N: PASS ...` line (visible with `--nocapture`).
//!
//! Criterion 1 note: the golden scenario's headline figures are commonly
//! quoted rounded (distortion 10,202x, profit $10,192,000). Exact rational
//! evaluation of the same scenario gives distortion 10,201 and profit
//! $10,191,000 — the rounded figures come from truncating the post-swap
//! reserve to 9.9 before dividing. The suite asserts the exact values and
//! cross-checks the rounded ones within 2e-4 relative tolerance.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secplf_cli::runner::run_scenario;
use secplf_cli::scenario::{build_world, ScenarioConfig};
use secplf_cli::suite;
use secplf_core::adversary::build_attack;
use secplf_core::analyzer::{self, PriceSeries};
use secplf_core::error::SimError;
use secplf_core::ledger::{execute_transaction, Step, StepRecord, Transaction, TxOutcome};
use secplf_core::plf::PriceMode;
use secplf_core::types::{rat, rat_to_f64, ratio, AccountId, AssetId};
use secplf_core::{Pool, WorldState};

fn fig1() -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig1.json");
    ScenarioConfig::from_path(&path).unwrap()
}

fn close_to(actual: f64, quoted: f64) -> bool {
    ((actual - quoted) / quoted).abs() < 2e-4
}

#[test]
fn c1_unguarded_golden_attack_exact() {
    let started = Instant::now();
    let result = run_scenario(&fig1(), Some(PriceMode::RawOracle)).unwrap();
    let report = &result.report;
    assert!(result.report_json.outcome == "committed");

    // Swap outputs along the attack: 500 B, then 500 - 100000/10100 B.
    let swap_outs: Vec<_> = report
        .outcome
        .trace()
        .iter()
        .filter_map(|t| match &t.record {
            StepRecord::Swap {
                asset_out,
                amount_out,
                ..
            } if asset_out == &AssetId::new("B") => Some(amount_out.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(swap_outs, vec![rat(500), rat(500) - ratio(100_000, 10_100)]);

    let theta = report.theta.clone().unwrap();
    let max_l = report.max_l_usd.clone().unwrap();
    let borrowed = report.borrowed.clone().unwrap();
    let predicted = report.predicted_g_usd.clone().unwrap();
    assert_eq!(theta, rat(10_201));
    assert_eq!(max_l, rat(10_201_000));
    assert_eq!(borrowed, rat(10_201_000));
    assert_eq!(report.realized_profit_usd, rat(10_191_000));
    assert_eq!(predicted, rat(10_196_000));

    // Rounded headline figures, within tolerance.
    assert!(close_to(rat_to_f64(&theta), 10_202.0));
    assert!(close_to(rat_to_f64(&max_l), 10_202_000.0));
    assert!(close_to(rat_to_f64(&borrowed), 10_202_000.0));
    assert!(close_to(rat_to_f64(&report.realized_profit_usd), 10_192_000.0));
    assert!(close_to(rat_to_f64(&predicted), 10_197_000.0));

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "acceptance 1: PASS - unguarded golden attack exact \
         (distortion 10201, borrowed 10201000 C, profit $10191000, \
         analytic $10196000; rounded headline figures within 2e-4; {elapsed:?})"
    );
}

#[test]
fn c2_guarded_attack_reverts() {
    let started = Instant::now();
    let result = run_scenario(&fig1(), Some(PriceMode::SecPlfGuard)).unwrap();
    let report = &result.report;

    // The guard pins the collateral price to $50 (= $10 * 5) at the borrow
    // step, so the limit is $5,000 and only 5,000 C are granted.
    let borrow = report
        .outcome
        .trace()
        .iter()
        .find_map(|t| match &t.record {
            StepRecord::Borrow {
                amount,
                limit_usd,
                collateral_price_usd,
                ..
            } => Some((amount.clone(), limit_usd.clone(), collateral_price_usd.clone())),
            _ => None,
        })
        .unwrap();
    assert_eq!(borrow.2, rat(50));
    assert_eq!(borrow.1, rat(5_000));
    assert_eq!(borrow.0, rat(5_000));

    // The guard query at that step shows the capped output.
    let guard_outputs: Vec<_> = report
        .outcome
        .trace()
        .iter()
        .flat_map(|t| &t.guard_queries)
        .filter(|q| q.asset == AssetId::new("B"))
        .map(|q| q.output.clone())
        .collect();
    assert!(guard_outputs.contains(&rat(50)));

    // The flash repayment fails and the whole transaction reverts; the
    // final step of the eight-step attack is the repayment.
    match &report.outcome {
        TxOutcome::Reverted { step_index, reason, .. } => {
            assert_eq!(*step_index, 7);
            assert!(matches!(reason, SimError::InsufficientBalance { .. }));
        }
        other => panic!("expected revert, got {other:?}"),
    }
    assert_eq!(report.realized_profit_usd, rat(0));
    assert_eq!(result.post_state, result.pre_state);

    // Asking outright for the unguarded-scale borrow is rejected over-limit.
    let (state, plan) = build_world(&fig1(), Some(PriceMode::SecPlfGuard)).unwrap();
    let mut tx = build_attack(&plan, &state).unwrap();
    tx.steps[4] = Step::Borrow {
        account: plan.adversary.clone(),
        asset: AssetId::new("C"),
        amount: rat(10_202_000),
    };
    let (post, outcome) = execute_transaction(&state, &tx).unwrap();
    match outcome {
        TxOutcome::Reverted { step_index, reason, .. } => {
            assert_eq!(step_index, 4);
            assert_eq!(reason, SimError::OverLimit);
        }
        other => panic!("expected over-limit revert, got {other:?}"),
    }
    assert_eq!(post, state);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "acceptance 2: PASS - guarded attack capped at $50 / $5000 limit, \
         outsized borrow rejected, repayment fails, revert, profit $0 ({elapsed:?})"
    );
}

#[test]
fn c3_guard_updates_at_most_once_per_block() {
    let (line, failures) = suite::single_block_update_sweep(42, 1_000);
    assert!(failures.is_empty(), "{failures:?}");
    println!("acceptance 3: PASS - {line}");
}

#[test]
fn c4_guard_output_capped_with_boundary_hit() {
    let (line, failures, boundary) = suite::distortion_cap_sweep(42, 1_000, false);
    assert!(failures.is_empty(), "{failures:?}");
    assert!(boundary, "no trial reached the cap exactly");
    println!("acceptance 4: PASS - {line}");
}

#[test]
fn c5_randomized_guarded_attacks_unprofitable() {
    let (line, failures) = suite::guarded_attack_sweep(42, 500, false);
    assert!(failures.is_empty(), "{failures:?}");
    println!("acceptance 5: PASS - {line}");
}

/// Random walk with occasional upward jumps; the deterministic jumps bound
/// the largest safe window so the brute-force scan below stays cheap.
fn jumpy_series(rng: &mut ChaCha8Rng, n: usize, jump_prob: f64) -> Vec<f64> {
    let mut closes = Vec::with_capacity(n);
    let mut price = 100.0f64;
    for i in 0..n {
        let step: f64 = rng.gen_range(0.98..1.02);
        price *= step;
        if price < 1.0 {
            price = 1.0;
        }
        let forced_jump = i > 0 && i % (n / 5) == 0;
        if forced_jump || rng.gen_bool(jump_prob) {
            price *= 1.4;
        }
        closes.push(price);
    }
    closes
}

fn brute_max_delta(closes: &[f64], minute: usize, window: usize, epsilon: f64) -> f64 {
    let min = closes[minute - window..=minute]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    closes[minute] - epsilon * min
}

fn brute_probability(closes: &[f64], window: usize, epsilon: f64) -> f64 {
    let good = (window..closes.len())
        .filter(|&m| brute_max_delta(closes, m, window, epsilon) <= 0.0)
        .count();
    good as f64 / (closes.len() - window) as f64
}

/// Ascending linear scan with early exit at the first window failing `z`.
fn brute_tz(closes: &[f64], epsilon: f64, z: f64) -> usize {
    let mut best = 0;
    for t in 1..closes.len() {
        if brute_probability(closes, t, epsilon) >= z {
            best = t;
        } else {
            break;
        }
    }
    best
}

#[test]
fn c6_analyzer_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let epsilon = 1.25;
    let z = 0.99;
    let mut optimized_time = Duration::ZERO;
    for series_index in 0..50 {
        let jump_prob = 1.0 / rng.gen_range(500.0..5_000.0);
        let closes = jumpy_series(&mut rng, 10_000, jump_prob);
        let series = PriceSeries::from_closes(AssetId::new("X"), closes.clone()).unwrap();

        for window in [1usize, 10, 100, 600] {
            let t0 = Instant::now();
            let fast = analyzer::max_deltas(&series, window, epsilon).unwrap();
            optimized_time += t0.elapsed();
            for (j, v) in fast.iter().enumerate() {
                let brute = brute_max_delta(&closes, window + j, window, epsilon);
                assert_eq!(*v, brute, "series {series_index}, window {window}, offset {j}");
            }
        }

        let t0 = Instant::now();
        let fast_tz = analyzer::compute_tz(&series, epsilon, z).unwrap();
        optimized_time += t0.elapsed();
        let slow_tz = brute_tz(&closes, epsilon, z);
        assert_eq!(fast_tz, slow_tz, "series {series_index}");
    }
    assert!(
        optimized_time < Duration::from_secs(5),
        "optimized path took {optimized_time:?}"
    );
    println!(
        "acceptance 6: PASS - 50 series x 10000 points, windows {{1,10,100,600}} and \
         largest-safe-interval equal to brute force; optimized path {optimized_time:?}"
    );
}

#[test]
fn c7_analyzer_scale_invariance_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let epsilon = 1.25;
    let z = 0.99;
    for _ in 0..20 {
        let jump_prob = 1.0 / rng.gen_range(200.0..2_000.0);
        let closes = jumpy_series(&mut rng, 2_000, jump_prob);
        let scaled: Vec<f64> = closes.iter().map(|c| c * 7.3).collect();
        let s0 = PriceSeries::from_closes(AssetId::new("X"), closes).unwrap();
        let s1 = PriceSeries::from_closes(AssetId::new("X"), scaled).unwrap();
        assert_eq!(
            analyzer::compute_tz(&s0, epsilon, z).unwrap(),
            analyzer::compute_tz(&s1, epsilon, z).unwrap()
        );
        for window in [1usize, 10, 100] {
            let p0 = analyzer::exceedance_probability(&s0, window, epsilon).unwrap();
            let p1 = analyzer::exceedance_probability(&s1, window, epsilon).unwrap();
            assert_eq!(p0, p1);
        }
    }

    // Monotonicity grids. The window grid runs on series opening with a flat
    // stretch at the global minimum, where growing the window provably never
    // raises the probability.
    for round in 0..20 {
        let mut closes = vec![50.0f64; 700];
        for _ in 0..1_300 {
            closes.push(rng.gen_range(51.0..200.0));
        }
        let series = PriceSeries::from_closes(AssetId::new("X"), closes).unwrap();
        let mut prev = f64::INFINITY;
        for window in [1usize, 5, 20, 100, 300, 600] {
            let p = analyzer::exceedance_probability(&series, window, epsilon).unwrap();
            assert!(p <= prev, "round {round}: window {window} raised probability");
            prev = p;
        }
        let mut prev = -1.0f64;
        for eps in [1.05, 1.1, 1.25, 1.5, 2.0, 5.0] {
            let p = analyzer::exceedance_probability(&series, 100, eps).unwrap();
            assert!(p >= prev, "round {round}: epsilon {eps} lowered probability");
            prev = p;
        }
    }
    println!(
        "acceptance 7: PASS - 20 series scale-invariant under x7.3 (intervals and \
         probabilities equal); probability monotone in window and epsilon"
    );
}

#[test]
fn c8_real_data_checks_when_available() {
    let Some(dir) = std::env::var_os("SECPLF_DATA_DIR") else {
        println!(
            "acceptance 8: SKIP - no SECPLF_DATA_DIR; desk-scale reproduction needs \
             ~23.5M points of minute market data, criteria 6-7 stand in"
        );
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let series = secplf_cli::analysis::load_series_dir(&dir).unwrap();
    let epsilon = 1.25;
    let z = 1.0 - 1e-5;
    for (asset, s) in &series {
        let tz = analyzer::compute_tz(s, epsilon, z).unwrap();
        assert!(tz > 1_000, "{asset}: largest safe interval {tz} <= 1000");
        let p = analyzer::exceedance_probability(s, 600, epsilon).unwrap();
        assert!(
            p >= 1.0 - 2e-7,
            "{asset}: probability {p} below 1 - 2e-7 at window 600"
        );
    }
    println!(
        "acceptance 8: PASS - {} real series: safe interval > 1000 min and \
         non-exceedance >= 1-2e-7 at window 600",
        series.len()
    );
}

#[test]
fn c9_swap_product_and_atomicity_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = AssetId::new("A");
    let b = AssetId::new("B");

    // 10,000 swaps across 1,000 random pools: the reserve product is exact.
    for _ in 0..1_000 {
        let mut pool = Pool::new(
            a.clone(),
            b.clone(),
            ratio(rng.gen_range(1..100_000), rng.gen_range(1..100)),
            ratio(rng.gen_range(1..100_000), rng.gen_range(1..100)),
        )
        .unwrap();
        let k = pool.k.clone();
        for _ in 0..10 {
            let side = if rng.gen_bool(0.5) { &a } else { &b };
            let amount = ratio(rng.gen_range(1..10_000), rng.gen_range(1..100));
            pool.swap_exact_in(side, &amount).unwrap();
            assert_eq!(&pool.reserve_x * &pool.reserve_y, k);
        }
    }

    // 1,000 failing transactions leave the world bit-identical.
    let user = AccountId::new("u");
    for _ in 0..1_000 {
        let mut state = WorldState::new(secplf_core::plf::PlfParams {
            epsilon: rat(5),
            price_mode: PriceMode::RawOracle,
        });
        let balance = rat(rng.gen_range(1..1_000));
        state.credit(&user, &a, &balance);
        let pool = Pool::new(a.clone(), b.clone(), rat(1_000), rat(5_000)).unwrap();
        state.pools.insert(pool.pair_id(), pool);
        state.flash.reserves.insert(a.clone(), rat(1_000_000));

        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..4usize) {
            steps.push(Step::Swap {
                account: user.clone(),
                pool: secplf_core::PairId::new(a.clone(), b.clone()),
                asset_in: a.clone(),
                amount_in: ratio(1, rng.gen_range(2..50)),
            });
        }
        // One of two guaranteed failure shapes: an overdraft, or an open
        // flash loan at commit.
        if rng.gen_bool(0.5) {
            steps.push(Step::Transfer {
                from: user.clone(),
                to: AccountId::new("v"),
                asset: a.clone(),
                amount: &balance + rat(1),
            });
        } else {
            steps.push(Step::FlashBorrow {
                account: user.clone(),
                asset: a.clone(),
                amount: rat(rng.gen_range(1..1_000)),
            });
        }
        let tx = Transaction {
            steps,
            block: state.current_block,
            sender: user.clone(),
        };
        let (post, outcome) = execute_transaction(&state, &tx).unwrap();
        assert!(!outcome.is_success());
        assert_eq!(post, state);
    }
    println!(
        "acceptance 9: PASS - 10000 swaps preserve the reserve product exactly; \
         1000 failing transactions restore the pre-state exactly"
    );
}
