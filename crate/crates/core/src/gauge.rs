//! Gauge functions (strictly increasing, continuous, vanishing at 0) and
//! checkers for the two gauge-based sufficient conditions for remotality.
//!
//! Both checkers work at a single point `x` with one approximating sequence
//! `x_n -> x` and one candidate `y in E`. When the hypothesis holds on every
//! candidate `z != y`, the conclusion to test is that `y` is a farthest point
//! of `E` from `x`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compactness::{random_cloud, random_space, BatteryReport, InstanceOutcome};
use crate::error::{Error, Result};
use crate::geometry::{default_eps_far, farthest_distance, BoundedSet, NormedSpace, Point};
use crate::seqlab::{ab_stat_diverges_to_inf, LabSequence, VecSequence, DEFAULT_BOUND_GRID};
use crate::windows::{
    density_trace, verdict_converges_to_zero, IndexPredicate, Outcome, ScanParams, Verdict, WindowPair,
};

/// Denominators closer than this to zero count as deviations.
pub const DENOMINATOR_GUARD: f64 = 1e-12;
/// Default tolerance for the ordinary convergence check on `x_n -> x`.
pub const DEFAULT_CONVERGENCE_EPS: f64 = 1e-2;

#[derive(Clone)]
pub struct GaugeFunction {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeFunction").field("label", &self.label).finish()
    }
}

/// `phi(t) = t^p`, `p >= 1`.
pub fn power_gauge(p: f64) -> Result<GaugeFunction> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("power gauge needs 1 <= p < inf, got {p}")));
    }
    Ok(GaugeFunction::new(format!("t^{p}"), move |t| {
        if p == 1.0 {
            t
        } else if p == 2.0 {
            t * t
        } else {
            t.powf(p)
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeReport {
    pub zero_at_origin: bool,
    pub strictly_increasing: bool,
    /// Bisecting any grid cell shrinks the increment below a small bound.
    pub continuity_proxy: bool,
    pub first_non_increase: Option<f64>,
}

impl GaugeReport {
    pub fn passes(&self) -> bool {
        self.zero_at_origin && self.strictly_increasing && self.continuity_proxy
    }
}

impl GaugeFunction {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), eval: Arc::new(eval) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Checks the class invariants on a 1000-point grid over `[0, 10 * scale]`.
    pub fn check_invariants(&self, scale: f64) -> GaugeReport {
        const POINTS: usize = 1000;
        let top = 10.0 * scale.abs().max(f64::MIN_POSITIVE);
        let grid: Vec<f64> = (0..POINTS).map(|i| top * i as f64 / (POINTS - 1) as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let first_non_increase = values.windows(2).position(|w| !(w[1] > w[0])).map(|i| grid[i + 1]);

        // Bisect each grid cell toward its larger half; a jump survives.
        let limit = 1e-3 * (1.0 + values[POINTS - 1].abs());
        let continuity_proxy = grid.windows(2).all(|cell| {
            let (mut a, mut b) = (cell[0], cell[1]);
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                let (fa, fm, fb) = (self.eval(a), self.eval(m), self.eval(b));
                if (fm - fa).abs() >= (fb - fm).abs() {
                    b = m;
                } else {
                    a = m;
                }
            }
            (self.eval(b) - self.eval(a)).abs() <= limit
        });

        GaugeReport {
            zero_at_origin: self.eval(0.0) == 0.0,
            strictly_increasing: first_non_increase.is_none(),
            continuity_proxy,
            first_non_increase,
        }
    }
}

/// Config form: `{"gauge": "power", "p": 2.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gauge", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    Power { p: f64 },
}

impl GaugeSpec {
    pub fn build(&self) -> Result<GaugeFunction> {
        match self {
            GaugeSpec::Power { p } => power_gauge(*p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HypothesisStatus {
    /// `x_n` does not converge to `x` at the horizon.
    PreconditionFailed,
    HypothesisFalse,
    ConclusionHolds,
    ConclusionViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZCheck {
    pub z_index: usize,
    pub z: Point,
    pub outcome: Outcome,
    /// Per-bound verdicts (divergence checker only).
    pub per_bound: Vec<(f64, Verdict)>,
    /// Divergence checker: smallest difference over the final trend window.
    pub margin: Option<f64>,
    /// Ratio checker: indices whose denominator was within the guard of zero.
    pub guarded_indices: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub status: HypothesisStatus,
    pub per_z: Vec<ZCheck>,
    pub skipped_z: Vec<usize>,
    pub delta: f64,
    pub y_distance: f64,
}

impl HypothesisReport {
    pub fn hypothesis_holds(&self) -> bool {
        matches!(self.status, HypothesisStatus::ConclusionHolds | HypothesisStatus::ConclusionViolated)
    }

    /// Smallest divergence margin across `z`.
    pub fn min_margin(&self) -> Option<f64> {
        self.per_z.iter().filter_map(|z| z.margin).reduce(f64::min)
    }
}

/// Indexed candidates other than `y`, and the indices equal to `y`.
type CandidateSplit = (Vec<(usize, Point)>, Vec<usize>);

/// Shared inputs of both checkers.
#[derive(Clone, Debug)]
pub struct RemotalityProbe<'a> {
    pub gauge: &'a GaugeFunction,
    pub x_seq: &'a VecSequence,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub set: &'a BoundedSet,
    pub space: &'a NormedSpace,
    pub pair: &'a WindowPair,
    pub params: ScanParams,
    pub convergence_eps: f64,
    pub eps_far: f64,
}

impl RemotalityProbe<'_> {
    fn check_inputs(&self) -> Result<()> {
        self.space.check_point(self.x, "x")?;
        self.space.check_point(self.y, "y")?;
        if !self.set.contains(self.y) {
            return Err(Error::invalid(format!("y = {:?} is not a member of E", self.y)));
        }
        Ok(())
    }

    /// `||x_n - x|| < convergence_eps` over the last half of the horizon.
    pub fn sequence_converges(&self) -> bool {
        let h = self.params.horizon;
        (h / 2 + 1..=h).all(|n| {
            let xn = self.x_seq.term(n);
            xn.len() == self.x.len() && self.space.dist(&xn, self.x) < self.convergence_eps
        })
    }

    /// Candidates of `E` other than `y`, with their candidate indices, and the
    /// indices skipped because they equal `y`.
    fn other_candidates(&self) -> Result<CandidateSplit> {
        let mut others = Vec::new();
        let mut skipped = Vec::new();
        for (i, z) in self.set.candidates()?.into_iter().enumerate() {
            if z.as_slice() == self.y {
                skipped.push(i);
            } else {
                others.push((i, z));
            }
        }
        Ok((others, skipped))
    }

    fn conclude(&self, per_z: Vec<ZCheck>, skipped_z: Vec<usize>) -> Result<HypothesisReport> {
        let delta = farthest_distance(self.x, self.set, self.space)?;
        let y_distance = self.space.dist(self.x, self.y);
        let status = if !per_z.iter().all(|z| z.outcome.is_positive()) {
            HypothesisStatus::HypothesisFalse
        } else if y_distance >= delta - self.eps_far {
            HypothesisStatus::ConclusionHolds
        } else {
            HypothesisStatus::ConclusionViolated
        };
        Ok(HypothesisReport { status, per_z, skipped_z, delta, y_distance })
    }

    fn precondition_failed(&self) -> Result<HypothesisReport> {
        Ok(HypothesisReport {
            status: HypothesisStatus::PreconditionFailed,
            per_z: Vec::new(),
            skipped_z: Vec::new(),
            delta: farthest_distance(self.x, self.set, self.space)?,
            y_distance: self.space.dist(self.x, self.y),
        })
    }
}

/// `n -> phi(||x_n - y||) - phi(||x_n - z||)`.
pub fn gauge_difference(
    gauge: &GaugeFunction,
    x_seq: &VecSequence,
    y: &[f64],
    z: &[f64],
    space: NormedSpace,
) -> LabSequence {
    let (g, s, y, z) = (gauge.clone(), x_seq.clone(), y.to_vec(), z.to_vec());
    LabSequence::from_fn("phi(|x_n - y|) - phi(|x_n - z|)", move |n| {
        let xn = s.term(n);
        g.eval(space.dist(&xn, &y)) - g.eval(space.dist(&xn, &z))
    })
}

/// Divergence-to-infinity hypothesis, checked for every candidate `z != y`
/// on the bound grid `bound_grid`.
pub fn remotality_hypothesis_div(probe: &RemotalityProbe<'_>, bound_grid: &[f64]) -> Result<HypothesisReport> {
    probe.check_inputs()?;
    if !probe.sequence_converges() {
        return probe.precondition_failed();
    }
    let (others, skipped) = probe.other_candidates()?;
    let mut per_z = Vec::with_capacity(others.len());
    for (z_index, z) in others {
        let diff = gauge_difference(probe.gauge, probe.x_seq, probe.y, &z, *probe.space);
        let rep = ab_stat_diverges_to_inf(&diff, bound_grid, probe.pair, &probe.params)?;
        per_z.push(ZCheck {
            z_index,
            z,
            outcome: rep.aggregate,
            per_bound: rep.per_bound.iter().map(|b| (b.bound, b.classification.verdict.clone())).collect(),
            margin: Some(rep.tail_infimum),
            guarded_indices: None,
        });
    }
    probe.conclude(per_z, skipped)
}

/// Ratio hypothesis: `phi(||x_n - x||) / (phi(||x_n - y||) - phi(||x_n - z||))`
/// converges to 0 for every candidate `z != y`. Absolute values are used, and
/// near-zero denominators count as deviations.
pub fn remotality_hypothesis_ratio(probe: &RemotalityProbe<'_>, eps: f64) -> Result<HypothesisReport> {
    probe.check_inputs()?;
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if !probe.sequence_converges() {
        return probe.precondition_failed();
    }
    let (others, skipped) = probe.other_candidates()?;
    let mut per_z = Vec::with_capacity(others.len());
    for (z_index, z) in others {
        let (g, s, x, y, zz, space) =
            (probe.gauge.clone(), probe.x_seq.clone(), probe.x.to_vec(), probe.y.to_vec(), z.clone(), *probe.space);
        // Some(ratio), or None when the denominator is guarded
        let ratio = Arc::new(move |k: u64| {
            let xk = s.term(k);
            let den = g.eval(space.dist(&xk, &y)) - g.eval(space.dist(&xk, &zz));
            if den.abs() < DENOMINATOR_GUARD {
                None
            } else {
                Some(g.eval(space.dist(&xk, &x)) / den)
            }
        });
        let r = Arc::clone(&ratio);
        let pred = IndexPredicate::new(format!("|ratio_k| >= {eps}"), move |k| r(k).is_none_or(|v| !(v.abs() < eps)));
        let trace = density_trace(&pred, probe.pair, probe.params.horizon, probe.params.enumeration_cap)?;
        let verdict = verdict_converges_to_zero(&trace, probe.params.tolerance, probe.params.trend_window)?;
        let reach = trace.entries.iter().map(|e| e.beta.floor() as u64).max().unwrap_or(0);
        let guarded = (1..=reach).filter(|&k| ratio(k).is_none()).count() as u64;
        per_z.push(ZCheck {
            z_index,
            z,
            outcome: verdict.outcome,
            per_bound: Vec::new(),
            margin: None,
            guarded_indices: Some(guarded),
        });
    }
    probe.conclude(per_z, skipped)
}

/// Instances with a positive divergence hypothesis and margin at least 1
/// must have `y` attaining `delta(x, E)`.
pub fn gauge_soundness_battery(seed: u64, instances: usize) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = WindowPair::classical();
    let params = ScanParams::new(200);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < instances {
        attempts += 1;
        if attempts > instances * 100 {
            return Err(Error::invalid("could not generate enough positive gauge instances"));
        }
        let space = random_space(&mut rng, 3);
        let pts = random_cloud(&mut rng, space.dim(), 20, 1e5);
        let set = BoundedSet::cloud(pts.clone())?;
        let gauge = power_gauge(if rng.gen_bool(0.5) { 1.0 } else { 2.0 })?;
        let x: Point = (0..space.dim()).map(|_| rng.gen_range(-1e4..1e4)).collect();
        let dir: Point = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_seq = VecSequence::converging(x.clone(), dir);
        let y = if rng.gen_bool(0.6) {
            pts.iter().max_by(|a, b| space.dist(&x, a).total_cmp(&space.dist(&x, b))).expect("non-empty").clone()
        } else {
            pts[rng.gen_range(0..pts.len())].clone()
        };
        let delta = farthest_distance(&x, &set, &space)?;
        let probe = RemotalityProbe {
            gauge: &gauge,
            x_seq: &x_seq,
            x: &x,
            y: &y,
            set: &set,
            space: &space,
            pair: &pair,
            params,
            convergence_eps: DEFAULT_CONVERGENCE_EPS,
            eps_far: default_eps_far(delta),
        };
        let rep = remotality_hypothesis_div(&probe, &DEFAULT_BOUND_GRID)?;
        if !rep.hypothesis_holds() || rep.min_margin().is_some_and(|m| m < 1.0) {
            continue;
        }
        let attains = rep.status == HypothesisStatus::ConclusionHolds;
        out.push(InstanceOutcome {
            instance: format!(
                "gauge#{} d={} p={} phi={} |E|={}",
                out.len(),
                space.dim(),
                space.p(),
                gauge.label(),
                pts.len()
            ),
            hypothesis_verdict: true,
            conclusion_flags: vec![("y attains delta".into(), attains)],
            reported_only: false,
            holds: attains,
        });
    }
    Ok(BatteryReport::new("gauge-soundness", seed, out, Vec::new()))
}

/// `E = {0, 2}`, `x = 0`, `y = 0`, `z = 2`, `x_n = 0`, `phi = t`: the ratio is
/// identically `0 / -2 = 0`, so the hypothesis holds while `y` is the nearest
/// point, not the farthest.
pub fn ratio_sign_subtlety(params: &ScanParams) -> Result<HypothesisReport> {
    let gauge = power_gauge(1.0)?;
    let set = BoundedSet::cloud(vec![vec![0.0], vec![2.0]])?;
    let space = NormedSpace::euclidean(1);
    let x_seq = VecSequence::constant(vec![0.0]);
    let probe = RemotalityProbe {
        gauge: &gauge,
        x_seq: &x_seq,
        x: &[0.0],
        y: &[0.0],
        set: &set,
        space: &space,
        pair: &WindowPair::classical(),
        params: *params,
        convergence_eps: DEFAULT_CONVERGENCE_EPS,
        eps_far: default_eps_far(2.0),
    };
    remotality_hypothesis_ratio(&probe, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::too_many_arguments)]
    fn probe_for<'a>(
        gauge: &'a GaugeFunction,
        x_seq: &'a VecSequence,
        x: &'a [f64],
        y: &'a [f64],
        set: &'a BoundedSet,
        space: &'a NormedSpace,
        pair: &'a WindowPair,
        horizon: u64,
    ) -> RemotalityProbe<'a> {
        RemotalityProbe {
            gauge,
            x_seq,
            x,
            y,
            set,
            space,
            pair,
            params: ScanParams::new(horizon),
            convergence_eps: DEFAULT_CONVERGENCE_EPS,
            eps_far: 1e-9,
        }
    }

    #[test]
    fn power_gauge_values() {
        assert_eq!(power_gauge(1.0).unwrap().eval(2.0), 2.0);
        assert_eq!(power_gauge(2.0).unwrap().eval(3.0), 9.0);
        assert_eq!(power_gauge(1.5).unwrap().eval(0.0), 0.0);
        assert!(matches!(power_gauge(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gauge_invariants() {
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(power_gauge(p).unwrap().check_invariants(1.0).passes());
        }
        let flat = GaugeFunction::new("flat", |t| t.min(1.0));
        let r = flat.check_invariants(1.0);
        assert!(!r.strictly_increasing);
        let shifted = GaugeFunction::new("shifted", |t| t + 1.0);
        assert!(!shifted.check_invariants(1.0).zero_at_origin);
        let jump = GaugeFunction::new("jump", |t| if t > 3.0 { t + 5.0 } else { t });
        assert!(!jump.check_invariants(1.0).continuity_proxy);
    }

    #[test]
    fn gauge_spec_parses() {
        let spec: GaugeSpec = serde_json::from_str(r#"{"gauge":"power","p":2.0}"#).unwrap();
        assert_eq!(spec.build().unwrap().eval(3.0), 9.0);
    }

    #[test]
    fn bounded_difference_is_not_divergent() {
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![0.0], vec![10.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::constant(vec![0.0]);
        let p = probe_for(&g, &xs, &[0.0], &[10.0], &set, &sp, &pair, 200);
        let rep = remotality_hypothesis_div(&p, &DEFAULT_BOUND_GRID).unwrap();
        assert_eq!(rep.status, HypothesisStatus::HypothesisFalse);
        assert_eq!(rep.per_z.len(), 1);
        assert_eq!(rep.per_z[0].margin, Some(10.0));
        assert_eq!(rep.skipped_z, vec![1]);
    }

    #[test]
    fn diverging_probe_fails_precondition() {
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![0.0], vec![1.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::from_fn("-n", |n| vec![-(n as f64)]);
        let p = probe_for(&g, &xs, &[0.0], &[1.0], &set, &sp, &pair, 200);
        assert_eq!(
            remotality_hypothesis_div(&p, &DEFAULT_BOUND_GRID).unwrap().status,
            HypothesisStatus::PreconditionFailed
        );
    }

    #[test]
    fn y_outside_set_is_rejected() {
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![0.0], vec![1.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::constant(vec![0.0]);
        let p = probe_for(&g, &xs, &[0.0], &[5.0], &set, &sp, &pair, 50);
        assert!(matches!(remotality_hypothesis_div(&p, &[1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_difference_never_diverges() {
        let g = power_gauge(2.0).unwrap();
        let xs = VecSequence::converging(vec![0.0, 0.0], vec![1.0, 1.0]);
        let diff = gauge_difference(&g, &xs, &[3.0, 1.0], &[3.0, 1.0], NormedSpace::euclidean(2));
        let rep = ab_stat_diverges_to_inf(&diff, &DEFAULT_BOUND_GRID, &WindowPair::classical(), &ScanParams::new(100))
            .unwrap();
        assert_eq!(rep.aggregate, Outcome::DoesNotConverge);
        assert_eq!(rep.tail_infimum, 0.0);
    }

    #[test]
    fn ratio_example_converges() {
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![-1.0], vec![1.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::converging(vec![0.5], vec![1.0]);
        let p = probe_for(&g, &xs, &[0.5], &[-1.0], &set, &sp, &pair, 2000);
        let rep = remotality_hypothesis_ratio(&p, 0.1).unwrap();
        assert_eq!(rep.status, HypothesisStatus::ConclusionHolds);
        assert_eq!(rep.y_distance, 1.5);
        assert_eq!(rep.per_z[0].guarded_indices, Some(0));
    }

    #[test]
    fn ratio_sign_subtlety_is_reported() {
        let rep = ratio_sign_subtlety(&ScanParams::new(200)).unwrap();
        assert_eq!(rep.status, HypothesisStatus::ConclusionViolated);
        assert!(rep.per_z.iter().all(|z| z.outcome.is_positive()));
    }

    #[test]
    fn ratio_with_true_farthest_point() {
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![0.0], vec![2.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::constant(vec![0.0]);
        let p = probe_for(&g, &xs, &[0.0], &[2.0], &set, &sp, &pair, 200);
        assert_eq!(remotality_hypothesis_ratio(&p, 0.1).unwrap().status, HypothesisStatus::ConclusionHolds);
    }

    #[test]
    fn guarded_denominators_are_counted() {
        // y and z equidistant from every x_n
        let (g, set, sp, pair) = (
            power_gauge(1.0).unwrap(),
            BoundedSet::cloud(vec![vec![-1.0], vec![1.0]]).unwrap(),
            NormedSpace::euclidean(1),
            WindowPair::classical(),
        );
        let xs = VecSequence::constant(vec![0.0]);
        let p = probe_for(&g, &xs, &[0.0], &[-1.0], &set, &sp, &pair, 40);
        let rep = remotality_hypothesis_ratio(&p, 0.1).unwrap();
        assert_eq!(rep.per_z[0].guarded_indices, Some(40));
        assert_eq!(rep.status, HypothesisStatus::HypothesisFalse);
    }

    #[test]
    fn small_soundness_battery() {
        let r = gauge_soundness_battery(3, 5).unwrap();
        assert!(r.passed);
        assert_eq!(r.positive_instances, 5);
    }
}
