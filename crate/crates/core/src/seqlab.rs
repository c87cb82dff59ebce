//! Sequence families and their classifiers: window-statistical convergence,
//! divergence to infinity, maximizing sequences and partial continuity.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{farthest_distance, BoundedSet, NormedSpace, Point};
use crate::windows::{
    density_trace, is_perfect_square, is_power_of_two_exponent_ge1, verdict_converges_to_zero, DensityTrace,
    IndexPredicate, Outcome, ScanParams, Verdict, WindowPair,
};

/// Default `c` for the parametric example sequences.
pub const DEFAULT_C: f64 = 0.5;
/// Default bound grid for divergence checks.
pub const DEFAULT_BOUND_GRID: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// A real sequence `n -> x_n`, `n >= 1`.
#[derive(Clone)]
pub struct LabSequence {
    label: String,
    params: BTreeMap<String, f64>,
    term: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl fmt::Debug for LabSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LabSequence").field("label", &self.label).field("params", &self.params).finish()
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("c must lie in (0, 1), got {c}")))
    }
}

impl LabSequence {
    pub fn from_fn(label: impl Into<String>, term: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), params: BTreeMap::new(), term: Arc::new(term) }
    }

    fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    /// `-1 + c^n` at `n = 2^m` (`m >= 1`), 0 elsewhere.
    pub fn paper_sign_probe(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self::from_fn("paper_sign_probe", move |n| {
            if is_power_of_two_exponent_ge1(n) {
                -1.0 + c.powf(n as f64)
            } else {
                0.0
            }
        })
        .with_param("c", c))
    }

    /// 0 at `n = 2^m` (`m >= 1`), `1 - c^n` elsewhere.
    pub fn paper_mixed_maximizing(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self::from_fn("paper_mixed_maximizing", move |n| {
            if is_power_of_two_exponent_ge1(n) {
                0.0
            } else {
                1.0 - c.powf(n as f64)
            }
        })
        .with_param("c", c))
    }

    /// 0 at `n = 2^k` (`k >= 1`), `n` elsewhere.
    pub fn paper_divergence() -> Self {
        Self::from_fn("paper_divergence", |n| if is_power_of_two_exponent_ge1(n) { 0.0 } else { n as f64 })
    }

    /// 1 at perfect squares, 0 elsewhere.
    pub fn square_indicator() -> Self {
        Self::from_fn("square_indicator", |n| if is_perfect_square(n) { 1.0 } else { 0.0 })
    }

    pub fn constant(value: f64) -> Self {
        Self::from_fn("constant", move |_| value).with_param("value", value)
    }

    /// `(-1)^n`.
    pub fn alternating() -> Self {
        Self::from_fn("alternating", |n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// `center + scale / n`.
    pub fn harmonic(center: f64, scale: f64) -> Self {
        Self::from_fn("harmonic", move |n| center + scale / n as f64)
            .with_param("center", center)
            .with_param("scale", scale)
    }

    /// `x_n = n`.
    pub fn linear() -> Self {
        Self::from_fn("linear", |n| n as f64)
    }

    /// Entry `n - 1` of `values`; indices past the end repeat the last entry.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sequence table is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "sequence table", index: i as u64 + 1 });
        }
        let values = Arc::new(values);
        Ok(Self::from_fn("table", move |n| values[((n.max(1) - 1) as usize).min(values.len() - 1)]))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn term(&self, n: u64) -> f64 {
        (self.term)(n)
    }

    /// `n -> f(x_n)`.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let term = Arc::clone(&self.term);
        Self { label: label.into(), params: self.params.clone(), term: Arc::new(move |n| f(term(n))) }
    }

    /// `n -> a * x_n + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        self.map(format!("{a} * ({}) + {b}", self.label), move |v| a * v + b)
    }
}

/// A sequence of points in `R^d`.
#[derive(Clone)]
pub struct VecSequence {
    label: String,
    term: Arc<dyn Fn(u64) -> Point + Send + Sync>,
}

impl fmt::Debug for VecSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VecSequence").field("label", &self.label).finish()
    }
}

impl VecSequence {
    pub fn from_fn(label: impl Into<String>, term: impl Fn(u64) -> Point + Send + Sync + 'static) -> Self {
        Self { label: label.into(), term: Arc::new(term) }
    }

    /// One-dimensional points `[x_n]`.
    pub fn from_scalar(seq: &LabSequence) -> Self {
        let seq = seq.clone();
        Self::from_fn(seq.label().to_owned(), move |n| vec![seq.term(n)])
    }

    pub fn constant(point: Point) -> Self {
        Self::from_fn("constant", move |_| point.clone())
    }

    /// `target + direction / n`.
    pub fn converging(target: Point, direction: Point) -> Self {
        Self::from_fn("converging", move |n| target.iter().zip(&direction).map(|(t, d)| t + d / n as f64).collect())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn term(&self, n: u64) -> Point {
        (self.term)(n)
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        let term = Arc::clone(&self.term);
        let v = v.to_vec();
        Self::from_fn(self.label.clone(), move |n| term(n).iter().zip(&v).map(|(a, b)| a + b).collect())
    }

    /// `n -> ||x_n - x||`.
    pub fn distances_to(&self, x: &[f64], space: NormedSpace) -> LabSequence {
        let term = Arc::clone(&self.term);
        let x = x.to_vec();
        LabSequence::from_fn(format!("||{} - x||", self.label), move |n| space.dist(&term(n), &x))
    }
}

/// Index set `{k : |x_k - limit| >= eps}`. A non-finite term counts as a deviation.
pub fn deviation_predicate(seq: &LabSequence, limit: f64, eps: f64) -> IndexPredicate {
    let seq = seq.clone();
    IndexPredicate::new(format!("|x_k - {limit}| >= {eps}"), move |k| !((seq.term(k) - limit).abs() < eps))
}

/// A verdict together with the trace it was read from.
#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub trace: DensityTrace,
}

impl Classification {
    pub fn is_positive(&self) -> bool {
        self.verdict.is_positive()
    }

    pub fn outcome(&self) -> Outcome {
        self.verdict.outcome
    }
}

fn classify(pred: &IndexPredicate, pair: &WindowPair, params: &ScanParams) -> Result<Classification> {
    let trace = density_trace(pred, pair, params.horizon, params.enumeration_cap)?;
    let verdict = verdict_converges_to_zero(&trace, params.tolerance, params.trend_window)?;
    Ok(Classification { verdict, trace })
}

/// Window-statistical convergence of `seq` to `limit` at scale `eps`.
pub fn ab_stat_converges(
    seq: &LabSequence,
    limit: f64,
    eps: f64,
    pair: &WindowPair,
    params: &ScanParams,
) -> Result<Classification> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !limit.is_finite() {
        return Err(Error::invalid("limit must be finite"));
    }
    classify(&deviation_predicate(seq, limit, eps), pair, params)
}

#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub bound: f64,
    pub classification: Classification,
}

#[derive(Clone, Debug)]
pub struct DivergenceReport {
    pub per_bound: Vec<BoundCheck>,
    /// `ConvergesToZero` only if every bound's set `{x_k < M}` has density
    /// tending to zero; `DoesNotConverge` if any bound's does not.
    pub aggregate: Outcome,
    /// Smallest term over the final trend window of `1..=horizon`.
    pub tail_infimum: f64,
}

impl DivergenceReport {
    pub fn is_positive(&self) -> bool {
        self.aggregate.is_positive()
    }
}

/// Window-statistical divergence to `+inf`, checked on a grid of bounds.
pub fn ab_stat_diverges_to_inf(
    seq: &LabSequence,
    bound_grid: &[f64],
    pair: &WindowPair,
    params: &ScanParams,
) -> Result<DivergenceReport> {
    if bound_grid.is_empty() {
        return Err(Error::invalid("bound grid is empty"));
    }
    if let Some(m) = bound_grid.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(Error::invalid(format!("bounds must be positive and finite, got {m}")));
    }
    let mut per_bound = Vec::with_capacity(bound_grid.len());
    for &bound in bound_grid {
        let s = seq.clone();
        let pred = IndexPredicate::new(format!("x_k < {bound}"), move |k| !(s.term(k) >= bound));
        per_bound.push(BoundCheck { bound, classification: classify(&pred, pair, params)? });
    }
    let aggregate = if per_bound.iter().all(|b| b.classification.is_positive()) {
        Outcome::ConvergesToZero
    } else if per_bound.iter().any(|b| b.classification.outcome() == Outcome::DoesNotConverge) {
        Outcome::DoesNotConverge
    } else {
        Outcome::Inconclusive
    };
    let start = params.horizon.saturating_sub(params.trend_window as u64) + 1;
    let tail_infimum = (start..=params.horizon).map(|k| seq.term(k)).fold(f64::INFINITY, f64::min);
    Ok(DivergenceReport { per_bound, aggregate, tail_infimum })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximizingCheck {
    pub maximizing: bool,
    pub delta: f64,
    /// First index of the checked tail with `| ||x_n - x|| - delta | >= eps`.
    pub first_tail_violation: Option<u64>,
    pub tail_start: u64,
}

/// Ordinary maximizing check over the last half of `1..=horizon`.
///
/// Half the horizon, rather than the shorter trend window of the statistical
/// rule, keeps sparse exception sets such as `{2^m}` visible: every interval
/// `(N/2, N]` contains a power of two.
pub fn is_maximizing(
    seq: &VecSequence,
    x: &[f64],
    set: &BoundedSet,
    space: &NormedSpace,
    eps: f64,
    horizon: u64,
) -> Result<MaximizingCheck> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let delta = farthest_distance(x, set, space)?;
    let tail_start = horizon / 2 + 1;
    let mut first_tail_violation = None;
    for n in tail_start..=horizon {
        let xn = seq.term(n);
        space.check_point(&xn, "sequence term")?;
        if !((space.dist(&xn, x) - delta).abs() < eps) {
            first_tail_violation = Some(n);
            break;
        }
    }
    Ok(MaximizingCheck { maximizing: first_tail_violation.is_none(), delta, first_tail_violation, tail_start })
}

#[derive(Clone, Debug)]
pub struct StatMaximizing {
    pub delta: f64,
    pub classification: Classification,
}

impl StatMaximizing {
    pub fn is_positive(&self) -> bool {
        self.classification.is_positive()
    }
}

/// Window-statistical convergence of `||x_n - x||` to `delta(x, set)`.
pub fn is_ab_stat_maximizing(
    seq: &VecSequence,
    x: &[f64],
    set: &BoundedSet,
    space: &NormedSpace,
    eps: f64,
    pair: &WindowPair,
    params: &ScanParams,
) -> Result<StatMaximizing> {
    let delta = farthest_distance(x, set, space)?;
    let dists = seq.distances_to(x, *space);
    let classification = ab_stat_converges(&dists, delta, eps, pair, params)?;
    Ok(StatMaximizing { delta, classification })
}

/// Outcome of one partial-continuity witness.
#[derive(Clone, Debug)]
pub struct ContinuityWitness {
    pub probe: LabSequence,
    pub target: f64,
    pub preimage: Classification,
    pub image: Classification,
    /// Preimage convergence implies image convergence for this probe.
    pub continuous: bool,
}

impl ContinuityWitness {
    /// Both the probe and its image converge.
    pub fn both_converge(&self) -> bool {
        self.preimage.is_positive() && self.image.is_positive()
    }
}

/// Checks that `probe` is not eventually constant: it must take at least two
/// distinct values on the last half of the indices the windows reach.
pub fn check_not_eventually_constant(probe: &LabSequence, pair: &WindowPair, params: &ScanParams) -> Result<()> {
    let reach = (1..=params.horizon)
        .map(|n| pair.integer_range(n).map(|r| r.map_or(0, |(_, hi)| hi)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0)
        .max(params.horizon);
    let reach = reach.min(params.enumeration_cap.max(params.horizon));
    let start = reach / 2 + 1;
    let first = probe.term(start);
    let varies = (start + 1..=reach).any(|k| probe.term(k) != first);
    if varies {
        Ok(())
    } else {
        Err(Error::InvalidWitness(format!("probe {} is constant on indices {start}..={reach}", probe.label())))
    }
}

/// Evaluates one witness for partial window-statistical continuity of `f` at `x`.
pub fn partial_ab_stat_continuity(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x: f64,
    probe: &LabSequence,
    pair: &WindowPair,
    eps: f64,
    params: &ScanParams,
) -> Result<ContinuityWitness> {
    check_not_eventually_constant(probe, pair, params)?;
    let fx = f(x);
    let preimage = ab_stat_converges(probe, x, eps, pair, params)?;
    let image_seq = probe.map(format!("f({})", probe.label()), f);
    let image = ab_stat_converges(&image_seq, fx, eps, pair, params)?;
    let continuous = !preimage.is_positive() || image.is_positive();
    Ok(ContinuityWitness { probe: probe.clone(), target: x, preimage, image, continuous })
}

/// `-1`, `0` or `1` by sign.
pub fn sign(t: f64) -> f64 {
    if t < 0.0 {
        -1.0
    } else if t > 0.0 {
        1.0
    } else {
        0.0
    }
}
