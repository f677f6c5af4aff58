//! Randomized invariant sweeps, runnable from the CLI and reused by the
//! acceptance tests:
//!
//! 1. guard state moves at most once per block, however many queries a
//!    transaction issues;
//! 2. the guarded output price never exceeds the previous stored price times
//!    epsilon, and the bound is tight (the boundary is hit);
//! 3. randomized oracle-manipulation attacks against a guarded PLF never
//!    realize a positive profit.
//!
//! `corrupt_guard` disables the epsilon cap in sweeps 2 and 3; it exists as a
//! negative control proving the sweeps can fail.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use secplf_core::adversary::{run_attack, AttackPlan};
use secplf_core::guard::PriceState;
use secplf_core::ledger::{execute_transaction, Step, Transaction};
use secplf_core::plf::{self, OracleSource, PlfParams, PriceMode};
use secplf_core::types::{rat, rat_to_f64, ratio, AccountId, Amount, AssetId, BlockRef, PairId};
use secplf_core::{Pool, WorldState};

pub struct SuiteReport {
    /// One line per sweep, e.g. "single-block-update sweep: 1000 trials, ok".
    pub lines: Vec<String>,
    /// Counterexamples, as one JSON document per failing trial.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn acct(s: &str) -> AccountId {
    AccountId::new(s)
}
fn asset(s: &str) -> AssetId {
    AssetId::new(s)
}

fn rand_rat(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_den: i64) -> Amount {
    ratio(rng.gen_range(lo..hi), rng.gen_range(1..=max_den))
}

fn epsilon_choices() -> [Amount; 3] {
    [ratio(5, 4), rat(2), rat(5)]
}

#[derive(Serialize)]
struct Counterexample<'a> {
    sweep: &'a str,
    trial: usize,
    seed: u64,
    detail: String,
}

fn counterexample(sweep: &str, trial: usize, seed: u64, detail: String) -> String {
    serde_json::to_string(&Counterexample {
        sweep,
        trial,
        seed,
        detail,
    })
    .expect("counterexample serializes")
}

/// A guarded world whose pool-priced asset is consistent with its reference
/// price, plus an attack plan with random sizing. Shared by the attack sweep
/// and the acceptance tests.
pub fn random_guarded_world(rng: &mut ChaCha8Rng, epsilon: Amount) -> (WorldState, AttackPlan) {
    let rx = rat(rng.gen_range(50..5_000));
    let ry = rat(rng.gen_range(50..5_000));
    let o_a = rand_rat(rng, 1, 1_000, 10);
    let o_c = rand_rat(rng, 1, 100, 10);

    let mut s = WorldState::new(PlfParams {
        epsilon,
        price_mode: PriceMode::SecPlfGuard,
    });
    s.oracles.insert(asset("A"), OracleSource::Fixed(o_a));
    s.oracles.insert(
        asset("B"),
        OracleSource::Pool {
            pair: PairId::new(asset("A"), asset("B")),
            numeraire: asset("A"),
        },
    );
    s.oracles.insert(asset("C"), OracleSource::Fixed(o_c));
    let pool = Pool::new(asset("A"), asset("B"), rx, ry).unwrap();
    s.pools.insert(pool.pair_id(), pool);

    let x = rat(rng.gen_range(100..100_000));
    let swap_in = &x * ratio(rng.gen_range(1..100), 100);
    s.flash.reserves.insert(asset("A"), x.clone());
    s.plf
        .liquidity
        .insert(asset("C"), rat(1_000_000_000_000));
    s.credit(&acct("venue"), &asset("A"), &(rat(10) * &x));
    s.credit(&acct("venue"), &asset("C"), &rat(1_000_000_000_000));

    for a in ["A", "B", "C"] {
        let oracle = plf::raw_oracle_usd(&s, &asset(a)).unwrap();
        let guard = PriceState::init(&oracle, s.current_block).unwrap();
        s.guards.insert(asset(a), guard);
    }
    let plan = AttackPlan {
        adversary: acct("adversary"),
        venue: acct("venue"),
        flash_asset: asset("A"),
        flash_amount: x,
        collateral_swap_in: swap_in,
        target_pool: PairId::new(asset("A"), asset("B")),
        deposit_asset: asset("B"),
        borrow_asset: asset("C"),
    };
    (s.begin_block(), plan)
}

/// Sweep 1: a transaction interleaving random swaps with price-querying
/// borrow probes records at most one guard state transition per asset.
pub fn single_block_update_sweep(seed: u64, trials: usize) -> (String, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let (state, _) = random_guarded_world(&mut rng, ratio(5, 4));
        // A depositor with a live position, so zero-amount borrows are legal
        // price probes.
        let mut state = state;
        state.credit(&acct("user"), &asset("B"), &rat(10));
        plf::deposit(&mut state, &acct("user"), &asset("B"), &rat(10)).unwrap();
        let state = state.begin_block();

        let probes = rng.gen_range(2..=10usize);
        let mut steps = Vec::new();
        for _ in 0..probes {
            // Trader swaps move the pool, changing the raw oracle the next
            // probe sees.
            let side = if rng.gen_bool(0.5) { "A" } else { "B" };
            steps.push(Step::Swap {
                account: acct("venue"),
                pool: PairId::new(asset("A"), asset("B")),
                asset_in: asset(side),
                amount_in: rand_rat(&mut rng, 1, 50, 10),
            });
            steps.push(Step::Borrow {
                account: acct("user"),
                asset: asset("C"),
                amount: rat(0),
            });
        }
        let mut state = state;
        // The venue needs B to swap with; top it up outside the transaction.
        state.credit(&acct("venue"), &asset("B"), &rat(1_000_000));
        let tx = Transaction {
            steps,
            block: state.current_block,
            sender: acct("user"),
        };
        let (_, outcome) = execute_transaction(&state, &tx).unwrap();
        let mut updates_b = 0usize;
        let mut updates_c = 0usize;
        let mut queries = 0usize;
        for step in outcome.trace() {
            for q in &step.guard_queries {
                queries += 1;
                if q.updated && q.asset == asset("B") {
                    updates_b += 1;
                }
                if q.updated && q.asset == asset("C") {
                    updates_c += 1;
                }
            }
        }
        if updates_b > 1 || updates_c > 1 || queries < 2 {
            failures.push(counterexample(
                "single-block-update",
                trial,
                seed,
                format!(
                    "updates B={updates_b} C={updates_c} over {queries} queries; expected <= 1 each"
                ),
            ));
        }
    }
    (
        format!("single-block-update sweep: {trials} trials, {} failures", failures.len()),
        failures,
    )
}

/// Sweep 2: guarded output <= previous stored price * epsilon, for random
/// in-block oracle sequences. Also reports whether any trial hit the bound
/// exactly, which the cap should make reachable.
pub fn distortion_cap_sweep(
    seed: u64,
    trials: usize,
    corrupt_guard: bool,
) -> (String, Vec<String>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut failures = Vec::new();
    let mut boundary_hit = false;
    for trial in 0..trials {
        let epsilon = epsilon_choices()[rng.gen_range(0..3)].clone();
        let p0 = rand_rat(&mut rng, 1, 10_000, 100);
        let mut guard = PriceState::init(&p0, BlockRef::new(0)).unwrap();
        let block = BlockRef::new(1);
        let cap = &p0 * &epsilon;
        let queries = rng.gen_range(1..=10usize);
        for _ in 0..queries {
            // Mix moderate readings with hard spikes so the cap is exercised.
            let oracle = if rng.gen_bool(0.3) {
                &p0 * rat(rng.gen_range(10..100_000))
            } else {
                rand_rat(&mut rng, 1, 20_000, 100)
            };
            let output = if corrupt_guard {
                // Negative control: cap disabled, the stored price tracks the
                // oracle directly.
                if block.id > guard.id {
                    guard.p = oracle.clone();
                    guard.id = block.id;
                }
                if oracle < guard.p { oracle.clone() } else { guard.p.clone() }
            } else {
                guard.guarded_price(&oracle, block, &epsilon).unwrap().price
            };
            if output == cap {
                boundary_hit = true;
            }
            if output > cap {
                failures.push(counterexample(
                    "distortion-cap",
                    trial,
                    seed,
                    format!(
                        "output {} exceeds cap {} (p0 {}, epsilon {})",
                        rat_to_f64(&output),
                        rat_to_f64(&cap),
                        rat_to_f64(&p0),
                        rat_to_f64(&epsilon)
                    ),
                ));
                break;
            }
        }
    }
    (
        format!(
            "distortion-cap sweep: {trials} trials, {} failures, boundary hit: {boundary_hit}",
            failures.len()
        ),
        failures,
        boundary_hit,
    )
}

/// Sweep 3: randomized attacks against a guarded PLF never realize a
/// positive committed profit.
pub fn guarded_attack_sweep(
    seed: u64,
    trials: usize,
    corrupt_guard: bool,
) -> (String, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut failures = Vec::new();
    for trial in 0..trials {
        let epsilon = epsilon_choices()[trial % 3].clone();
        let (mut state, plan) = random_guarded_world(&mut rng, epsilon.clone());
        if corrupt_guard {
            // Negative control: pretend the guard isn't there.
            state.plf.params.price_mode = PriceMode::RawOracle;
        }
        let (_, report) = run_attack(&state, &plan).unwrap();
        if report.realized_profit_usd > rat(0) {
            failures.push(counterexample(
                "guarded-attack",
                trial,
                seed,
                format!(
                    "positive profit {} (epsilon {}, X {}, swapIn {})",
                    rat_to_f64(&report.realized_profit_usd),
                    rat_to_f64(&epsilon),
                    rat_to_f64(&plan.flash_amount),
                    rat_to_f64(&plan.collateral_swap_in)
                ),
            ));
        }
    }
    (
        format!("guarded-attack sweep: {trials} trials, {} failures", failures.len()),
        failures,
    )
}

/// Runs all sweeps. `trials` applies to each sweep; the attack sweep runs
/// `trials / 2` rounds (it is the most expensive).
pub fn run_suite(seed: u64, trials: usize, corrupt_guard: bool) -> SuiteReport {
    let mut lines = Vec::new();
    let mut failures = Vec::new();

    let (line, fails) = single_block_update_sweep(seed, trials);
    lines.push(line);
    failures.extend(fails);

    let (line, fails, boundary) = distortion_cap_sweep(seed, trials, corrupt_guard);
    lines.push(line);
    failures.extend(fails);
    if !boundary && !corrupt_guard {
        failures.push(counterexample(
            "distortion-cap",
            trials,
            seed,
            "no trial reached the epsilon boundary; the bound was never exercised".into(),
        ));
    }

    let (line, fails) = guarded_attack_sweep(seed, trials.div_ceil(2).max(1), corrupt_guard);
    lines.push(line);
    failures.extend(fails);

    SuiteReport { lines, failures }
}
