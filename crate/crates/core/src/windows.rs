//! Summability windows `[alpha_n, beta_n]` and window densities of index sets.
//!
//! A [`WindowPair`] assigns to every index `n >= 1` a window of positive reals.
//! The density of an index set `K` at `n` is
//!
//! ```text
//! |{k integer : alpha_n <= k <= beta_n, k in K}| / (beta_n - alpha_n + 1)
//! ```
//!
//! with the normaliser taken literally, even when the endpoints are not
//! integers. A finite program cannot take the limit in `n`, so a trace is
//! summarised by a three-valued [`Verdict`] over its final stretch.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the largest window index enumerated by brute force.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;
/// Default tolerance for tail densities.
pub const DEFAULT_TOLERANCE: f64 = 1e-2;
/// Default trend window as a fraction of the horizon.
pub const DEFAULT_TREND_FRACTION: f64 = 0.25;
/// Default floor that `beta_N - alpha_N` must reach for the growth check.
pub const DEFAULT_GROWTH_FLOOR: f64 = 10.0;

pub type IndexFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
pub type MembershipFn = Arc<dyn Fn(u64) -> bool + Send + Sync>;
/// Closed-form count over an inclusive integer range `[lo, hi]`, `lo >= 1`.
pub type CountFn = Arc<dyn Fn(u64, u64) -> u64 + Send + Sync>;

/// Trend window used when a caller only supplies a horizon.
pub fn default_trend_window(horizon: u64) -> usize {
    ((horizon as f64 * DEFAULT_TREND_FRACTION).ceil() as usize).max(1)
}

/// Horizon and decision-rule settings shared by the classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ScanParams {
    pub horizon: u64,
    pub tolerance: f64,
    pub trend_window: usize,
    pub enumeration_cap: u64,
}

impl ScanParams {
    /// Defaults: tolerance `1e-2`, trend window a quarter of the horizon.
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            tolerance: DEFAULT_TOLERANCE,
            trend_window: default_trend_window(horizon),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_trend_window(mut self, trend_window: usize) -> Self {
        self.trend_window = trend_window;
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.enumeration_cap = cap;
        self
    }
}

/// A pair of index sequences `(alpha, beta)` defining the summability windows.
#[derive(Clone)]
pub struct WindowPair {
    label: String,
    alpha: IndexFn,
    beta: IndexFn,
}

impl fmt::Debug for WindowPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindowPair").field("label", &self.label).finish()
    }
}

fn int_pow(n: u64, exp: u32) -> f64 {
    match (n as u128).checked_pow(exp) {
        Some(v) => v as f64,
        None => (n as f64).powi(exp as i32),
    }
}

impl WindowPair {
    pub fn new(
        label: impl Into<String>,
        alpha: impl Fn(u64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), alpha: Arc::new(alpha), beta: Arc::new(beta) }
    }

    /// `[1, n]`: the windows of classical statistical convergence.
    pub fn classical() -> Self {
        Self::new("[1, n]", |_| 1.0, |n| n as f64)
    }

    /// `[a, n^b_exp]`.
    pub fn poly(a: f64, b_exp: u32) -> Self {
        Self::new(format!("[{a}, n^{b_exp}]"), move |_| a, move |n| int_pow(n, b_exp))
    }

    /// `[n^alpha_exp, n^alpha_exp + n^len_exp]`.
    pub fn shifted(alpha_exp: u32, len_exp: u32) -> Self {
        Self::new(
            format!("[n^{alpha_exp}, n^{alpha_exp} + n^{len_exp}]"),
            move |n| int_pow(n, alpha_exp),
            move |n| int_pow(n, alpha_exp) + int_pow(n, len_exp),
        )
    }

    /// `[n, n]`: single-index windows whose length never grows.
    pub fn diagonal() -> Self {
        Self::new("[n, n]", |n| n as f64, |n| n as f64)
    }

    /// Windows read from explicit tables; index `n` uses entry `n - 1`,
    /// and indices past the end repeat the last entry.
    pub fn table(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::invalid("window tables must be non-empty and of equal length"));
        }
        let pick = |v: &[f64], n: u64| v[((n.max(1) - 1) as usize).min(v.len() - 1)];
        let (a, b) = (Arc::new(alpha), Arc::new(beta));
        Ok(Self::new("table", move |n| pick(&a, n), move |n| pick(&b, n)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alpha(&self, n: u64) -> f64 {
        (self.alpha)(n)
    }

    pub fn beta(&self, n: u64) -> f64 {
        (self.beta)(n)
    }

    /// Both endpoints at `n`, rejecting non-finite values.
    pub fn bounds(&self, n: u64) -> Result<(f64, f64)> {
        let (a, b) = (self.alpha(n), self.beta(n));
        if !a.is_finite() {
            return Err(Error::NonFinite { what: "alpha", index: n });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite { what: "beta", index: n });
        }
        Ok((a, b))
    }

    /// Inclusive integer range `[ceil(alpha_n), floor(beta_n)]` clipped to `k >= 1`,
    /// or `None` when it holds no integer.
    pub fn integer_range(&self, n: u64) -> Result<Option<(u64, u64)>> {
        let (a, b) = self.bounds(n)?;
        let lo = a.ceil().max(1.0);
        let hi = b.floor();
        if hi < lo {
            return Ok(None);
        }
        Ok(Some((lo as u64, hi as u64)))
    }

    /// `beta_n - alpha_n + 1`.
    pub fn normalizer(&self, n: u64) -> Result<f64> {
        let (a, b) = self.bounds(n)?;
        Ok(b - a + 1.0)
    }
}

/// Parameters of the finite-horizon stand-in for the window conditions.
#[derive(Clone, Copy, Debug)]
pub struct ValidationConfig {
    pub growth_floor: f64,
    pub trend_fraction: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { growth_floor: DEFAULT_GROWTH_FLOOR, trend_fraction: DEFAULT_TREND_FRACTION }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub horizon: u64,
    /// Both sequences non-decreasing.
    pub p1: bool,
    /// `beta_n >= alpha_n`.
    pub p2: bool,
    /// Growth proxy for `beta_n - alpha_n -> infinity`.
    pub p3: bool,
    pub p1_violation: Option<u64>,
    pub p2_violation: Option<u64>,
    pub p3_violation: Option<u64>,
    pub final_length: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.p1 && self.p2 && self.p3
    }

    /// Smallest index at which any condition failed.
    pub fn first_violation(&self) -> Option<u64> {
        [self.p1_violation, self.p2_violation, self.p3_violation].into_iter().flatten().min()
    }
}

pub fn validate_window_pair(pair: &WindowPair, horizon: u64) -> Result<ValidationReport> {
    validate_window_pair_with(pair, horizon, &ValidationConfig::default())
}

pub fn validate_window_pair_with(pair: &WindowPair, horizon: u64, cfg: &ValidationConfig) -> Result<ValidationReport> {
    if horizon < 2 {
        return Err(Error::invalid("window validation needs horizon >= 2"));
    }
    let mut bounds = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        let (a, b) = pair.bounds(n)?;
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::invalid(format!("window endpoints must be positive, got [{a}, {b}] at n = {n}")));
        }
        bounds.push((a, b));
    }

    let mut p1_violation = None;
    let mut p2_violation = None;
    for (i, &(a, b)) in bounds.iter().enumerate() {
        let n = i as u64 + 1;
        if p2_violation.is_none() && b < a {
            p2_violation = Some(n);
        }
        if i > 0 && p1_violation.is_none() {
            let (pa, pb) = bounds[i - 1];
            if a < pa || b < pb {
                p1_violation = Some(n);
            }
        }
    }

    let lengths: Vec<f64> = bounds.iter().map(|&(a, b)| b - a).collect();
    let final_length = *lengths.last().expect("horizon >= 2");
    let trend = ((horizon as f64 * cfg.trend_fraction).ceil() as usize).clamp(1, lengths.len());
    let start = lengths.len() - trend;
    let mut p3_violation = lengths[start..].windows(2).position(|w| w[1] < w[0]).map(|i| (start + i + 2) as u64);
    if p3_violation.is_none() && final_length < cfg.growth_floor {
        p3_violation = Some(horizon);
    }

    Ok(ValidationReport {
        horizon,
        p1: p1_violation.is_none(),
        p2: p2_violation.is_none(),
        p3: p3_violation.is_none(),
        p1_violation,
        p2_violation,
        p3_violation,
        final_length,
    })
}

/// A set of positive integers given by a membership test, optionally with a
/// closed-form window count used as a certificate.
#[derive(Clone)]
pub struct IndexPredicate {
    label: String,
    test: MembershipFn,
    count: Option<CountFn>,
}

impl fmt::Debug for IndexPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexPredicate").field("label", &self.label).field("certified", &self.count.is_some()).finish()
    }
}

fn floor_log2(k: u64) -> u32 {
    63 - k.leading_zeros()
}

fn ceil_log2(k: u64) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

/// Number of `2^m` with `m >= 1` in `[lo, hi]`.
pub fn count_powers_of_two(lo: u64, hi: u64) -> u64 {
    let lo = lo.max(2);
    if hi < lo {
        return 0;
    }
    let first = ceil_log2(lo);
    let last = floor_log2(hi);
    (last + 1).saturating_sub(first) as u64
}

/// Number of perfect squares in `[lo, hi]`, `lo >= 1`.
pub fn count_squares(lo: u64, hi: u64) -> u64 {
    let lo = lo.max(1);
    if hi < lo {
        return 0;
    }
    hi.isqrt() - (lo - 1).isqrt()
}

pub fn is_power_of_two_exponent_ge1(k: u64) -> bool {
    k >= 2 && k.is_power_of_two()
}

pub fn is_perfect_square(k: u64) -> bool {
    let r = k.isqrt();
    r * r == k
}

impl IndexPredicate {
    pub fn new(label: impl Into<String>, test: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Self { label: label.into(), test: Arc::new(test), count: None }
    }

    /// Attaches a closed-form count over inclusive ranges.
    pub fn with_count(mut self, count: impl Fn(u64, u64) -> u64 + Send + Sync + 'static) -> Self {
        self.count = Some(Arc::new(count));
        self
    }

    /// `{2^m : m >= 1}`, so 1 is excluded.
    pub fn powers_of_two() -> Self {
        Self::new("powers of 2", is_power_of_two_exponent_ge1).with_count(count_powers_of_two)
    }

    pub fn perfect_squares() -> Self {
        Self::new("perfect squares", is_perfect_square).with_count(count_squares)
    }

    pub fn always(value: bool) -> Self {
        let label = if value { "all indices" } else { "no indices" };
        Self::new(label, move |_| value).with_count(move |lo, hi| if value && hi >= lo { hi - lo + 1 } else { 0 })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, k: u64) -> bool {
        (self.test)(k)
    }

    pub fn is_certified(&self) -> bool {
        self.count.is_some()
    }

    pub fn closed_form_count(&self, lo: u64, hi: u64) -> Option<u64> {
        self.count.as_ref().map(|c| c(lo, hi))
    }

    /// The complementary index set. A certificate carries over.
    pub fn negate(&self) -> Self {
        let test = Arc::clone(&self.test);
        let count = self.count.clone();
        Self {
            label: format!("not ({})", self.label),
            test: Arc::new(move |k| !test(k)),
            count: count
                .map(|c| -> CountFn { Arc::new(move |lo, hi| if hi < lo { 0 } else { (hi - lo + 1) - c(lo, hi) }) }),
        }
    }

    /// Drops the certificate, forcing enumeration.
    pub fn uncertified(&self) -> Self {
        Self { label: self.label.clone(), test: Arc::clone(&self.test), count: None }
    }
}

/// Exact number of integers `k` in the window at `n` with `pred(k)`.
///
/// Windows whose upper end is within `cap` are enumerated; if the predicate
/// also carries a closed form, the two counts must agree. Past the cap only a
/// certified predicate can be counted.
pub fn window_count(pred: &IndexPredicate, pair: &WindowPair, n: u64, cap: u64) -> Result<u64> {
    let Some((lo, hi)) = pair.integer_range(n)? else {
        return Ok(0);
    };
    let certificate = pred.closed_form_count(lo, hi);
    if hi > cap {
        return certificate.ok_or(Error::HorizonExceeded { n, upper: hi, cap });
    }
    let enumerated = (lo..=hi).filter(|&k| pred.contains(k)).count() as u64;
    match certificate {
        Some(c) if c != enumerated => Err(Error::CertificateMismatch { lo, hi, certificate: c, enumerated }),
        _ => Ok(enumerated),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub count: u64,
    pub density: f64,
}

/// Per-index window densities of one index set.
#[derive(Clone, Debug)]
pub struct DensityTrace {
    pub window_pair: WindowPair,
    pub entries: Vec<TraceEntry>,
    pub horizon: u64,
}

impl DensityTrace {
    pub fn densities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.density).collect()
    }

    pub fn density_at(&self, n: u64) -> Option<f64> {
        self.entries.get((n as usize).checked_sub(1)?).map(|e| e.density)
    }

    /// CSV with header `n,alpha,beta,count,density`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        wtr.write_record(["n", "alpha", "beta", "count", "density"]).map_err(io)?;
        for e in &self.entries {
            wtr.write_record([
                e.n.to_string(),
                e.alpha.to_string(),
                e.beta.to_string(),
                e.count.to_string(),
                e.density.to_string(),
            ])
            .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Densities of `pred` for `n = 1..=horizon`.
///
/// Certified predicates are counted in closed form and bypass `cap`. Otherwise
/// membership is evaluated once for every `k` up to the largest window end,
/// which must not exceed `cap`.
pub fn density_trace(pred: &IndexPredicate, pair: &WindowPair, horizon: u64, cap: u64) -> Result<DensityTrace> {
    let report = validate_window_pair(pair, horizon)?;
    if !report.all_pass() {
        return Err(Error::invalid(format!(
            "window pair {} fails validation at horizon {horizon} (first violation at n = {})",
            pair.label(),
            report.first_violation().unwrap_or(horizon)
        )));
    }

    let mut ranges = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        ranges.push(pair.integer_range(n)?);
    }

    let counts: Vec<u64> = if pred.is_certified() {
        ranges.iter().map(|r| r.map_or(0, |(lo, hi)| pred.closed_form_count(lo, hi).unwrap_or(0))).collect()
    } else {
        let max_hi = ranges.iter().flatten().map(|&(_, hi)| hi).max().unwrap_or(0);
        if max_hi > cap {
            let n = ranges.iter().position(|r| r.is_some_and(|(_, hi)| hi > cap)).map_or(horizon, |i| i as u64 + 1);
            return Err(Error::HorizonExceeded { n, upper: max_hi, cap });
        }
        // prefix[k] = |{j <= k : pred(j)}|
        let mut prefix = Vec::with_capacity(max_hi as usize + 1);
        prefix.push(0u64);
        let mut running = 0;
        for k in 1..=max_hi {
            running += u64::from(pred.contains(k));
            prefix.push(running);
        }
        ranges.iter().map(|r| r.map_or(0, |(lo, hi)| prefix[hi as usize] - prefix[lo as usize - 1])).collect()
    };

    let mut entries = Vec::with_capacity(horizon as usize);
    for (i, count) in counts.into_iter().enumerate() {
        let n = i as u64 + 1;
        let (alpha, beta) = pair.bounds(n)?;
        let density = count as f64 / (beta - alpha + 1.0);
        entries.push(TraceEntry { n, alpha, beta, count, density });
    }
    Ok(DensityTrace { window_pair: pair.clone(), entries, horizon })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    ConvergesToZero,
    DoesNotConverge,
    Inconclusive,
}

impl Outcome {
    pub fn is_positive(self) -> bool {
        self == Outcome::ConvergesToZero
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub final_density: f64,
    pub max_tail_density: f64,
    pub min_tail_density: f64,
    pub horizon: u64,
    pub trend_window: usize,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn is_positive(&self) -> bool {
        self.outcome.is_positive()
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Decision rule over the last `trend_window` values of a non-negative sequence.
///
/// The tail is split into an earlier and a later half.
/// * `ConvergesToZero`: every tail value is below `tolerance` and the later
///   half's maximum does not exceed the earlier half's.
/// * `DoesNotConverge`: every tail value is at least `tolerance` and the later
///   half's minimum has not dropped below the earlier half's.
/// * `Inconclusive` otherwise.
pub fn classify_tail(values: &[f64], horizon: u64, tolerance: f64, trend_window: usize) -> Result<Verdict> {
    if values.is_empty() {
        return Err(Error::invalid("cannot classify an empty trace"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if trend_window == 0 || trend_window > values.len() {
        return Err(Error::invalid(format!("trend window {trend_window} must lie in 1..={}", values.len())));
    }
    let tail = &values[values.len() - trend_window..];
    let (early, late) = tail.split_at(tail.len() / 2);
    let max_tail = max_of(tail);
    let min_tail = min_of(tail);

    let envelope_falls = early.is_empty() || max_of(late) <= max_of(early);
    let floor_holds = early.is_empty() || min_of(late) >= min_of(early);
    let outcome = if max_tail < tolerance && envelope_falls {
        Outcome::ConvergesToZero
    } else if min_tail >= tolerance && floor_holds {
        Outcome::DoesNotConverge
    } else {
        Outcome::Inconclusive
    };
    Ok(Verdict {
        outcome,
        evidence: Evidence {
            final_density: *values.last().expect("non-empty"),
            max_tail_density: max_tail,
            min_tail_density: min_tail,
            horizon,
            trend_window,
            tolerance,
        },
    })
}

pub fn verdict_converges_to_zero(trace: &DensityTrace, tolerance: f64, trend_window: usize) -> Result<Verdict> {
    classify_tail(&trace.densities(), trace.horizon, tolerance, trend_window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_and_square_windows_validate() {
        let r = validate_window_pair(&WindowPair::classical(), 100).unwrap();
        assert!(r.all_pass(), "{r:?}");
        let r = validate_window_pair(&WindowPair::poly(1.0, 2), 100).unwrap();
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn diagonal_windows_fail_growth() {
        let r = validate_window_pair(&WindowPair::diagonal(), 10).unwrap();
        assert!(r.p1 && r.p2);
        assert!(!r.p3);
        assert_eq!(r.p3_violation, Some(10));
    }

    #[test]
    fn decreasing_and_inverted_windows_are_flagged() {
        let pair = WindowPair::new("bad", |n| if n == 5 { 0.5 } else { 1.0 }, |n| n as f64);
        let r = validate_window_pair(&pair, 20).unwrap();
        assert_eq!(r.p1_violation, Some(5));
        let pair = WindowPair::new("inv", |_| 3.0, |n| n as f64);
        let r = validate_window_pair(&pair, 20).unwrap();
        assert_eq!(r.p2_violation, Some(1));
        assert_eq!(r.first_violation(), Some(1));
    }

    #[test]
    fn non_finite_endpoint_names_index() {
        let pair = WindowPair::new("nan", |_| 1.0, |n| if n == 7 { f64::NAN } else { n as f64 });
        match validate_window_pair(&pair, 10) {
            Err(Error::NonFinite { what: "beta", index: 7 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn horizon_below_two_is_rejected() {
        assert!(validate_window_pair(&WindowPair::classical(), 1).is_err());
    }

    #[test]
    fn powers_of_two_in_first_hundred() {
        let pair = WindowPair::classical();
        let c = window_count(&IndexPredicate::powers_of_two(), &pair, 100, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(c, 6);
        assert_eq!(count_powers_of_two(1, 1), 0);
        assert_eq!(count_powers_of_two(2, 2), 1);
        assert_eq!(count_powers_of_two(5, 7), 0);
    }

    #[test]
    fn squares_in_square_windows() {
        let pair = WindowPair::poly(1.0, 2);
        for n in 1..=40 {
            let c = window_count(&IndexPredicate::perfect_squares(), &pair, n, DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(c, n);
        }
    }

    #[test]
    fn empty_predicate_counts_zero() {
        let c = window_count(&IndexPredicate::always(false), &WindowPair::poly(1.0, 2), 30, 10_000).unwrap();
        assert_eq!(c, 0);
    }

    #[test]
    fn cap_applies_only_without_certificate() {
        let pair = WindowPair::poly(1.0, 2);
        let pred = IndexPredicate::perfect_squares();
        assert_eq!(window_count(&pred, &pair, 1000, 100).unwrap(), 1000);
        match window_count(&pred.uncertified(), &pair, 1000, 100) {
            Err(Error::HorizonExceeded { n: 1000, upper: 1_000_000, cap: 100 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(density_trace(&pred.uncertified(), &pair, 20, 100).is_err());
        assert!(density_trace(&pred, &pair, 20, 100).is_ok());
    }

    #[test]
    fn wrong_certificate_is_caught() {
        let pred = IndexPredicate::new("evens", |k| k % 2 == 0).with_count(|lo, hi| hi - lo);
        let err = window_count(&pred, &WindowPair::classical(), 10, 1000).unwrap_err();
        assert!(matches!(err, Error::CertificateMismatch { enumerated: 5, certificate: 9, .. }));
    }

    #[test]
    fn fractional_endpoints_use_literal_normalizer() {
        let pair = WindowPair::new("frac", |_| 1.5, |n| n as f64 + 0.5);
        let trace = density_trace(&IndexPredicate::always(true).uncertified(), &pair, 20, 1000).unwrap();
        // window at n = 20 is [1.5, 20.5]: integers 2..=20, normaliser 20.
        let e = &trace.entries[19];
        assert_eq!(e.count, 19);
        assert_eq!(e.density, 19.0 / 20.0);
    }

    #[test]
    fn powers_of_two_trace_at_hundred() {
        let trace =
            density_trace(&IndexPredicate::powers_of_two(), &WindowPair::poly(1.0, 2), 100, DEFAULT_ENUMERATION_CAP)
                .unwrap();
        assert_eq!(trace.entries[99].count, 13);
        assert_eq!(trace.density_at(100), Some(13.0 / 10_000.0));
    }

    #[test]
    fn full_window_has_density_one() {
        let trace = density_trace(&IndexPredicate::always(true), &WindowPair::shifted(2, 1), 30, 1000).unwrap();
        assert!(trace.densities().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn verdict_examples() {
        let trace =
            density_trace(&IndexPredicate::powers_of_two(), &WindowPair::poly(1.0, 2), 200, DEFAULT_ENUMERATION_CAP)
                .unwrap();
        let v = verdict_converges_to_zero(&trace, 0.01, 50).unwrap();
        assert_eq!(v.outcome, Outcome::ConvergesToZero);

        let ones = vec![1.0; 40];
        assert_eq!(classify_tail(&ones, 40, 0.5, 10).unwrap().outcome, Outcome::DoesNotConverge);

        let trace = density_trace(&IndexPredicate::perfect_squares(), &WindowPair::poly(1.0, 2), 10, 1000).unwrap();
        let v = verdict_converges_to_zero(&trace, 0.05, 8).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert_eq!(v.evidence.final_density, 0.1);
    }

    #[test]
    fn verdict_rejects_bad_parameters() {
        assert!(classify_tail(&[], 1, 0.1, 1).is_err());
        assert!(classify_tail(&[0.0; 4], 4, 0.0, 2).is_err());
        assert!(classify_tail(&[0.0; 4], 4, 0.1, 5).is_err());
        assert!(classify_tail(&[0.0; 4], 4, 0.1, 0).is_err());
    }

    #[test]
    fn rising_small_tail_is_not_convergent() {
        let vals: Vec<f64> = (1..=40).map(|n| n as f64 * 1e-4).collect();
        assert_eq!(classify_tail(&vals, 40, 0.01, 20).unwrap().outcome, Outcome::Inconclusive);
    }

    #[test]
    fn csv_header_and_rows() {
        let trace = density_trace(&IndexPredicate::perfect_squares(), &WindowPair::poly(1.0, 2), 4, 100).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,alpha,beta,count,density\n1,1,1,1,1\n2,1,4,2,0.5\n3,1,9,3,0.3333333333333333\n4,1,16,4,0.25\n"
        );
    }
}
