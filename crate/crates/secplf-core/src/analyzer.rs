//! Minute-resolution arbitrage-risk statistics over close-price series:
//! windowed maximum price discrepancy, empirical non-exceedance probability,
//! the largest safe refresh interval `T_z`, and a normalized-discrepancy CDF.
//!
//! Unlike the simulation core this module works in `f64`; the statistics run
//! over millions of points and are tolerance-checked, not golden-valued. The
//! sign test `d_M - epsilon * min <= 0` is evaluated directly with no fudge
//! term.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::AnalyzerError;
use crate::types::AssetId;

/// Validated, gap-free minute series of positive close prices.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceSeries {
    pub asset: AssetId,
    /// Unix timestamp (seconds) of the first minute, when known.
    pub start_ts: Option<i64>,
    pub closes: Vec<f64>,
}

/// Analyzer parameters. Defaults: `epsilon = 1.25`, `z = 1 - 1e-5`,
/// `t = 600` minutes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskParams {
    pub epsilon: f64,
    pub z: f64,
    pub t: usize,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            epsilon: 1.25,
            z: 1.0 - 1e-5,
            t: 600,
        }
    }
}

impl PriceSeries {
    /// Builds a series from pre-parsed `(unix_seconds, close)` rows.
    /// Timestamps must be minute-aligned and strictly increasing; gaps are
    /// forward-filled from the last known close, which never invents a lower
    /// window minimum.
    pub fn from_rows(asset: AssetId, rows: &[(i64, f64)]) -> Result<Self, AnalyzerError> {
        if rows.is_empty() {
            return Err(AnalyzerError::EmptySeries);
        }
        let start_ts = rows[0].0;
        if start_ts % 60 != 0 {
            return Err(AnalyzerError::ParseError {
                row: 0,
                message: "timestamp not aligned to a minute boundary".into(),
            });
        }
        let mut closes: Vec<f64> = Vec::with_capacity(rows.len());
        let mut last_minute: i64 = -1;
        for (row, &(ts, close)) in rows.iter().enumerate() {
            if ts % 60 != 0 {
                return Err(AnalyzerError::ParseError {
                    row,
                    message: "timestamp not aligned to a minute boundary".into(),
                });
            }
            let minute = (ts - start_ts) / 60;
            if minute == last_minute {
                return Err(AnalyzerError::ParseError {
                    row,
                    message: "duplicate timestamp".into(),
                });
            }
            if minute < last_minute {
                return Err(AnalyzerError::ParseError {
                    row,
                    message: "timestamps not increasing".into(),
                });
            }
            if !(close.is_finite() && close > 0.0) {
                return Err(AnalyzerError::NonPositivePrice { row });
            }
            // Forward-fill skipped minutes.
            while (closes.len() as i64) < minute {
                let last = *closes.last().expect("gap before first row is impossible");
                closes.push(last);
            }
            closes.push(close);
            last_minute = minute;
        }
        Ok(PriceSeries {
            asset,
            start_ts: Some(start_ts),
            closes,
        })
    }

    /// Series directly from closes, minute indices implicit.
    pub fn from_closes(asset: AssetId, closes: Vec<f64>) -> Result<Self, AnalyzerError> {
        if closes.is_empty() {
            return Err(AnalyzerError::EmptySeries);
        }
        if let Some(row) = closes.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(AnalyzerError::NonPositivePrice { row });
        }
        Ok(PriceSeries {
            asset,
            start_ts: None,
            closes,
        })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Maximum possible discrepancy at minute `minute` assuming the stored price
/// refreshed at most `window` minutes ago:
/// `d_M - epsilon * min(d_{M-T} ..= d_M)`.
///
/// Direct evaluation; the bulk path is [`max_deltas`].
pub fn max_delta_t(
    series: &PriceSeries,
    minute: usize,
    window: usize,
    epsilon: f64,
) -> Result<f64, AnalyzerError> {
    if window == 0 {
        return Err(AnalyzerError::BadParams("window must be at least 1".into()));
    }
    if minute < window || minute >= series.len() {
        return Err(AnalyzerError::OutOfRange {
            minute,
            window,
            len: series.len(),
        });
    }
    let lo = minute - window;
    let min = series.closes[lo..=minute]
        .iter()
        .fold(f64::INFINITY, |a, &b| if b < a { b } else { a });
    Ok(series.closes[minute] - epsilon * min)
}

/// Windowed maxima of the discrepancy for every minute `M` in `[T, N)`, in
/// order, via a monotonic-deque sliding minimum. O(N) for any window size.
pub fn max_deltas(
    series: &PriceSeries,
    window: usize,
    epsilon: f64,
) -> Result<Vec<f64>, AnalyzerError> {
    if window == 0 {
        return Err(AnalyzerError::BadParams("window must be at least 1".into()));
    }
    let closes = &series.closes;
    let n = closes.len();
    if n <= window {
        return Err(AnalyzerError::SeriesTooShort {
            len: n,
            needed: window,
        });
    }
    let mut out = Vec::with_capacity(n - window);
    // Deque of indices with non-decreasing closes; front is the window min.
    let mut deque: VecDeque<usize> = VecDeque::new();
    for m in 0..n {
        while let Some(&back) = deque.back() {
            if closes[back] >= closes[m] {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(m);
        if let Some(&front) = deque.front() {
            if front + window < m {
                deque.pop_front();
            }
        }
        if m >= window {
            let min = closes[*deque.front().expect("deque holds current index")];
            out.push(closes[m] - epsilon * min);
        }
    }
    Ok(out)
}

/// Empirical probability that the windowed discrepancy stays non-positive:
/// the fraction of minutes `M` in `[T, N)` with `max_delta <= 0`. The first
/// `T` minutes are warm-up and excluded.
pub fn exceedance_probability(
    series: &PriceSeries,
    window: usize,
    epsilon: f64,
) -> Result<f64, AnalyzerError> {
    let deltas = max_deltas(series, window, epsilon)?;
    let good = deltas.iter().filter(|d| **d <= 0.0).count();
    Ok(good as f64 / deltas.len() as f64)
}

/// Largest refresh interval `T` (capped at `N - 1`) for which the
/// non-exceedance probability still meets the confidence `z`; `0` if no
/// `T >= 1` qualifies.
///
/// Galloping search from small `T` followed by a binary search inside the
/// bracketing interval. This finds the first `T` whose probability drops
/// below `z` (minus one), matching an ascending linear scan wherever the
/// probability is non-increasing in `T`; starting small keeps the search
/// away from the largest windows, where the shrinking evaluation domain
/// `[T, N)` makes the empirical probability noisy. The evaluated points are
/// cross-checked for monotonicity.
pub fn compute_tz(series: &PriceSeries, epsilon: f64, z: f64) -> Result<usize, AnalyzerError> {
    if !(0.0 < z && z < 1.0) {
        return Err(AnalyzerError::BadParams("z must be in (0, 1)".into()));
    }
    let n = series.len();
    if n < 2 {
        return Err(AnalyzerError::SeriesTooShort { len: n, needed: 1 });
    }
    let mut evaluated: Vec<(usize, f64)> = Vec::new();
    let mut eval = |t: usize| -> Result<f64, AnalyzerError> {
        let p = exceedance_probability(series, t, epsilon)?;
        evaluated.push((t, p));
        Ok(p)
    };
    let max_t = n - 1;
    if eval(1)? < z {
        return Ok(0);
    }
    // Gallop until a window fails the confidence bound.
    let mut lo = 1usize; // P(lo) >= z
    let mut hi = None;
    let mut probe = 2usize;
    while probe < max_t {
        if eval(probe)? >= z {
            lo = probe;
            probe *= 2;
        } else {
            hi = Some(probe);
            break;
        }
    }
    let mut hi = match hi {
        Some(h) => h,
        None => {
            if eval(max_t)? >= z {
                return Ok(max_t);
            }
            max_t
        }
    };
    // Invariant: P(lo) >= z > P(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? >= z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    evaluated.sort_by_key(|(t, _)| *t);
    for pair in evaluated.windows(2) {
        assert!(
            pair[0].1 >= pair[1].1,
            "non-exceedance probability increased from T={} to T={}; \
             search precondition violated",
            pair[0].0,
            pair[1].0
        );
    }
    Ok(lo)
}

/// Sampled empirical CDF of the normalized discrepancy
/// `max_delta / d_M` over `M` in `[T, N)`, as `(x, cumulative_probability)`
/// pairs on an evenly spaced grid.
pub fn cdf_report(
    series: &PriceSeries,
    window: usize,
    epsilon: f64,
    buckets: usize,
) -> Result<Vec<(f64, f64)>, AnalyzerError> {
    if buckets < 2 {
        return Err(AnalyzerError::BadParams("need at least 2 buckets".into()));
    }
    let deltas = max_deltas(series, window, epsilon)?;
    let mut normalized: Vec<f64> = deltas
        .iter()
        .zip(&series.closes[window..])
        .map(|(d, c)| d / c)
        .collect();
    normalized.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let total = normalized.len() as f64;
    let lo = normalized[0];
    let hi = normalized[normalized.len() - 1];
    if lo == hi {
        return Ok(alloc::vec![(lo, 1.0)]);
    }
    let mut out = Vec::with_capacity(buckets);
    for i in 0..buckets {
        let x = lo + (hi - lo) * i as f64 / (buckets - 1) as f64;
        let count = normalized.partition_point(|v| *v <= x);
        out.push((x, count as f64 / total));
    }
    Ok(out)
}
