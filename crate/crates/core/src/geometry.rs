//! Farthest distances, farthest-point sets, diameters and Chebyshev centers
//! in `(R^d, l_p)`.
//!
//! Sets are finite point clouds or axis-aligned boxes. Both have finitely many
//! extreme points ("candidates": the cloud itself, or the box vertices), and a
//! convex function such as `e -> ||x - e||` attains its maximum over the convex
//! hull at one of them. Every supremum here is therefore an exact maximum over
//! candidates rather than a sampled estimate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vec<f64>;

/// Largest box dimension for which the `2^d` vertices are enumerated.
pub const MAX_VERTEX_DIM: usize = 25;
/// Largest dimension accepted by the grid-based Chebyshev solver.
pub const MAX_CHEBYSHEV_DIM: usize = 6;

/// Attainer tolerance `1e-9 * (1 + delta)`.
pub fn default_eps_far(delta: f64) -> f64 {
    1e-9 * (1.0 + delta)
}

/// Uniqueness tolerance `1e-6 * (1 + delta)`.
pub fn default_delta_unique(delta: f64) -> f64 {
    1e-6 * (1.0 + delta)
}

/// `R^d` with the `l_p` norm, `1 <= p <= inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormedSpace {
    dim: usize,
    p: f64,
}

impl NormedSpace {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if p.is_nan() || p < 1.0 {
            return Err(Error::domain(format!("l_p norm needs p >= 1, got {p}")));
        }
        Ok(Self { dim, p })
    }

    pub fn l1(dim: usize) -> Self {
        Self { dim, p: 1.0 }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { dim, p: 2.0 }
    }

    pub fn linf(dim: usize) -> Self {
        Self { dim, p: f64::INFINITY }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        let p = self.p;
        if p == 1.0 {
            v.iter().map(|c| c.abs()).sum()
        } else if p == 2.0 {
            v.iter().map(|c| c * c).sum::<f64>().sqrt()
        } else if p.is_infinite() {
            v.iter().fold(0.0, |m, c| m.max(c.abs()))
        } else {
            // scale by the largest entry to keep |c|^p in range
            let m = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * v.iter().map(|c| (c.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&diff)
    }

    pub(crate) fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!("{what} has dimension {}, space has dimension {}", x.len(), self.dim)));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("{what} has a non-finite coordinate")));
        }
        Ok(())
    }
}

/// A non-empty bounded subset of `R^d` with exact extreme points.
///
/// Serialises as `{"cloud": [[...], ...]}` or `{"box": {"lo": [...], "hi": [...]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundedSet {
    Cloud(Vec<Point>),
    Box { lo: Point, hi: Point },
}

impl BoundedSet {
    pub fn cloud(points: Vec<Point>) -> Result<Self> {
        let set = BoundedSet::Cloud(points);
        set.validate()?;
        Ok(set)
    }

    pub fn axis_box(lo: Point, hi: Point) -> Result<Self> {
        let set = BoundedSet::Box { lo, hi };
        set.validate()?;
        Ok(set)
    }

    /// The closed interval `[lo, hi]` as a one-dimensional box.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::axis_box(vec![lo], vec![hi])
    }

    pub fn singleton(point: Point) -> Result<Self> {
        Self::cloud(vec![point])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundedSet::Cloud(points) => {
                let first = points.first().ok_or_else(|| Error::domain("point cloud is empty"))?;
                if first.is_empty() {
                    return Err(Error::invalid("points must have dimension >= 1"));
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != first.len() {
                        return Err(Error::invalid(format!(
                            "cloud point {i} has dimension {}, expected {}",
                            p.len(),
                            first.len()
                        )));
                    }
                    if p.iter().any(|c| !c.is_finite()) {
                        return Err(Error::invalid(format!("cloud point {i} is not finite")));
                    }
                }
            }
            BoundedSet::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::invalid("box bounds must be non-empty and of equal length"));
                }
                for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if !l.is_finite() || !h.is_finite() {
                        return Err(Error::invalid(format!("box axis {i} is not finite")));
                    }
                    if l > h {
                        return Err(Error::invalid(format!("box axis {i} has lo {l} > hi {h}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundedSet::Cloud(points) => points.first().map_or(0, Vec::len),
            BoundedSet::Box { lo, .. } => lo.len(),
        }
    }

    /// Extreme points: the cloud members, or the distinct vertices of the box.
    pub fn candidates(&self) -> Result<Vec<Point>> {
        match self {
            BoundedSet::Cloud(points) => Ok(points.clone()),
            BoundedSet::Box { lo, hi } => {
                let d = lo.len();
                if d > MAX_VERTEX_DIM {
                    return Err(Error::DimensionCap { dim: d, cap: MAX_VERTEX_DIM });
                }
                // degenerate axes contribute a single coordinate
                let mut vertices: Vec<Point> = vec![Vec::with_capacity(d)];
                for (l, h) in lo.iter().zip(hi) {
                    let choices: &[f64] = if l == h { &[*l] } else { &[*l, *h] };
                    vertices = vertices
                        .into_iter()
                        .flat_map(|v| {
                            choices.iter().map(move |&c| {
                                let mut w = v.clone();
                                w.push(c);
                                w
                            })
                        })
                        .collect();
                }
                Ok(vertices)
            }
        }
    }

    /// Membership: exact equality for clouds, bounds check for boxes.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            BoundedSet::Cloud(points) => points.iter().any(|p| p.as_slice() == x),
            BoundedSet::Box { lo, hi } => {
                x.len() == lo.len() && x.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| l <= c && c <= h)
            }
        }
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        let shift = |p: &Point| p.iter().zip(v).map(|(a, b)| a + b).collect::<Point>();
        match self {
            BoundedSet::Cloud(points) => BoundedSet::Cloud(points.iter().map(shift).collect()),
            BoundedSet::Box { lo, hi } => BoundedSet::Box { lo: shift(lo), hi: shift(hi) },
        }
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let mul = |p: &Point| p.iter().map(|a| a * lambda).collect::<Point>();
        match self {
            BoundedSet::Cloud(points) => BoundedSet::Cloud(points.iter().map(mul).collect()),
            BoundedSet::Box { lo, hi } => {
                let (a, b) = (mul(lo), mul(hi));
                let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
                let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
                BoundedSet::Box { lo, hi }
            }
        }
    }
}

fn check_compatible(x: &[f64], set: &BoundedSet, space: &NormedSpace) -> Result<()> {
    set.validate()?;
    if set.dim() != space.dim() {
        return Err(Error::invalid(format!("set has dimension {}, space has dimension {}", set.dim(), space.dim())));
    }
    space.check_point(x, "point")
}

/// Lexicographic order on points.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// `delta(x, set) = sup { ||x - e|| : e in set }`.
pub fn farthest_distance(x: &[f64], set: &BoundedSet, space: &NormedSpace) -> Result<f64> {
    check_compatible(x, set, space)?;
    Ok(set.candidates()?.iter().map(|e| space.dist(x, e)).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarthestResult {
    pub distance: f64,
    /// Candidates within `eps_far` of `distance`, sorted lexicographically.
    pub attainers: Vec<Point>,
    pub unique: bool,
}

/// Farthest points with the default uniqueness tolerance.
pub fn farthest_points(x: &[f64], set: &BoundedSet, space: &NormedSpace, eps_far: f64) -> Result<FarthestResult> {
    check_compatible(x, set, space)?;
    let delta = farthest_distance(x, set, space)?;
    farthest_points_with(x, set, space, eps_far, default_delta_unique(delta))
}

pub fn farthest_points_with(
    x: &[f64],
    set: &BoundedSet,
    space: &NormedSpace,
    eps_far: f64,
    delta_unique: f64,
) -> Result<FarthestResult> {
    check_compatible(x, set, space)?;
    if !(eps_far >= 0.0) || !(delta_unique >= 0.0) {
        return Err(Error::invalid("tolerances must be non-negative"));
    }
    let candidates = set.candidates()?;
    let dists: Vec<f64> = candidates.iter().map(|e| space.dist(x, e)).collect();
    let delta = dists.iter().copied().fold(0.0, f64::max);
    let mut attainers: Vec<Point> =
        candidates.into_iter().zip(&dists).filter(|(_, &d)| (delta - d).abs() <= eps_far).map(|(e, _)| e).collect();
    attainers.sort_by(|a, b| lex_cmp(a, b));
    attainers.dedup();
    let unique = diameter_of_points(&attainers, space) <= delta_unique;
    Ok(FarthestResult { distance: delta, attainers, unique })
}

/// Largest pairwise distance; 0 for empty and single-point lists.
pub fn diameter_of_points(points: &[Point], space: &NormedSpace) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(space.dist(a, b));
        }
    }
    best
}

pub fn diameter(set: &BoundedSet, space: &NormedSpace) -> Result<f64> {
    set.validate()?;
    if set.dim() != space.dim() {
        return Err(Error::invalid("set and space dimensions differ"));
    }
    if let BoundedSet::Box { lo, hi } = set {
        // the farthest pair of a box is a pair of opposite vertices
        return Ok(space.dist(lo, hi));
    }
    Ok(diameter_of_points(&set.candidates()?, space))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChebyshevCenter {
    pub center: Point,
    pub radius: f64,
}

/// Grid points per axis keeping the coarse search near `2e5` evaluations.
pub fn default_grid_resolution(dim: usize) -> usize {
    let per_axis = (2e5f64).powf(1.0 / dim.max(1) as f64).floor() as usize;
    let per_axis = per_axis.clamp(3, 201);
    per_axis | 1
}

fn max_dist(x: &[f64], candidates: &[Point], space: &NormedSpace) -> f64 {
    candidates.iter().map(|e| space.dist(x, e)).fold(0.0, f64::max)
}

/// Best point of a `res^d` grid over `[lo, hi]`, seeded with `(best, best_val)`.
fn grid_search(
    lo: &[f64],
    hi: &[f64],
    res: usize,
    candidates: &[Point],
    space: &NormedSpace,
    best: &mut Point,
    best_val: &mut f64,
) -> Result<()> {
    let d = lo.len();
    let total = res.checked_pow(d as u32).ok_or_else(|| Error::Unsupported(format!("grid of {res}^{d} points")))?;
    let spacing: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / (res - 1) as f64).collect();
    let mut point = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..d {
            point[i] = lo[i] + (rem % res) as f64 * spacing[i];
            rem /= res;
        }
        let v = max_dist(&point, candidates, space);
        if v < *best_val {
            *best_val = v;
            best.copy_from_slice(&point);
        }
    }
    Ok(())
}

/// Grid points per axis of each zoom stage.
const ZOOM_RESOLUTION: usize = 21;
const ZOOM_STAGES: usize = 12;
/// Temperatures of the smoothed descent, relative to `1 + diam`.
const SMOOTHING: [f64; 8] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];

/// `tau * log(sum exp(||x - e|| / tau))`, an upper bound on the farthest
/// distance exceeding it by at most `tau * log(#candidates)`.
fn smoothed_max_dist(x: &[f64], candidates: &[Point], space: &NormedSpace, tau: f64) -> f64 {
    let dists: Vec<f64> = candidates.iter().map(|e| space.dist(x, e)).collect();
    let m = dists.iter().copied().fold(0.0, f64::max);
    m + tau * dists.iter().map(|v| ((v - m) / tau).exp()).sum::<f64>().ln()
}

/// Compass search on `f` over `{-1, 0, 1}^d` moves; the step halves when no
/// move improves, at most `halvings` times or until it drops below `floor`.
fn pattern_descent(f: impl Fn(&[f64]) -> f64, best: &mut Point, step: &mut [f64], halvings: usize, floor: f64) {
    let d = best.len();
    let directions: Vec<Vec<f64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let c = (code % 3) as f64 - 1.0;
                    code /= 3;
                    c
                })
                .collect::<Vec<f64>>()
        })
        .filter(|v| v.iter().any(|&c| c != 0.0))
        .collect();
    let mut best_val = f(best);
    let mut done = 0;
    while done < halvings && step.iter().fold(0.0f64, |m, s| m.max(*s)) >= floor {
        let mut improved: Option<(Point, f64)> = None;
        for dir in &directions {
            let trial: Point = best.iter().zip(dir).zip(step.iter()).map(|((b, c), s)| b + c * s).collect();
            let v = f(&trial);
            if v < improved.as_ref().map_or(best_val, |(_, w)| *w) {
                improved = Some((trial, v));
            }
        }
        match improved {
            Some((p, v)) => {
                *best = p;
                best_val = v;
            }
            None => {
                step.iter_mut().for_each(|s| *s *= 0.5);
                done += 1;
            }
        }
    }
}

/// Minimiser of `x -> delta(x, set)` by grid search plus shrinking-step
/// descent.
///
/// The coarse grid spans the bounding box of the set inflated by its
/// diameter, with `grid_resolution` points per axis; zoom stages then regrid
/// a window of four cells around the incumbent. Compass search stalls on the
/// ridges of a maximum, so the descent first runs on log-sum-exp smoothings
/// of the objective with falling temperature, then on the objective itself.
/// `refine_iters` bounds the step halvings of each descent.
pub fn chebyshev_center(
    set: &BoundedSet,
    space: &NormedSpace,
    grid_resolution: usize,
    refine_iters: usize,
) -> Result<ChebyshevCenter> {
    set.validate()?;
    let d = set.dim();
    if d != space.dim() {
        return Err(Error::invalid("set and space dimensions differ"));
    }
    if d > MAX_CHEBYSHEV_DIM {
        return Err(Error::Unsupported(format!("Chebyshev grid search in dimension {d} (max {MAX_CHEBYSHEV_DIM})")));
    }
    let candidates = set.candidates()?;
    if candidates.iter().all(|c| c == &candidates[0]) {
        return Ok(ChebyshevCenter { center: candidates[0].clone(), radius: 0.0 });
    }
    let res = grid_resolution.max(2);
    let diam = diameter_of_points(&candidates, space);
    let lo: Vec<f64> = (0..d).map(|i| candidates.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min) - diam).collect();
    let hi: Vec<f64> =
        (0..d).map(|i| candidates.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max) + diam).collect();
    let mut best = lo.clone();
    let mut best_val = f64::INFINITY;
    grid_search(&lo, &hi, res, &candidates, space, &mut best, &mut best_val)?;

    let mut step: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / (res - 1) as f64).collect();
    let zoom_res = ZOOM_RESOLUTION.min(res.max(3)) | 1;
    for _ in 0..ZOOM_STAGES {
        let wlo: Vec<f64> = best.iter().zip(&step).map(|(b, s)| b - 2.0 * s).collect();
        let whi: Vec<f64> = best.iter().zip(&step).map(|(b, s)| b + 2.0 * s).collect();
        grid_search(&wlo, &whi, zoom_res, &candidates, space, &mut best, &mut best_val)?;
        step.iter_mut().for_each(|s| *s *= 4.0 / (zoom_res - 1) as f64);
    }

    let scale = 1.0 + diam;
    let floor = 1e-13 * scale;
    for rel in SMOOTHING {
        let tau = rel * scale;
        let mut trial = best.clone();
        let mut trial_step = vec![tau.max(floor); d];
        pattern_descent(
            |x| smoothed_max_dist(x, &candidates, space, tau),
            &mut trial,
            &mut trial_step,
            refine_iters,
            0.1 * tau,
        );
        let v = max_dist(&trial, &candidates, space);
        if v < best_val {
            best = trial;
            best_val = v;
        }
    }
    let mut step = vec![floor * 1e3; d];
    pattern_descent(|x| max_dist(x, &candidates, space), &mut best, &mut step, refine_iters, floor);
    best_val = max_dist(&best, &candidates, space);
    Ok(ChebyshevCenter { center: best, radius: best_val })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemotalityScan {
    pub results: Vec<FarthestResult>,
    /// Every probe has a farthest point. Always true for clouds and boxes.
    pub remotal_on_probes: bool,
    pub uniquely_remotal_on_probes: bool,
}

pub fn remotality_scan(
    set: &BoundedSet,
    space: &NormedSpace,
    probes: &[Point],
    eps_far: f64,
    delta_unique: f64,
) -> Result<RemotalityScan> {
    if probes.is_empty() {
        return Err(Error::invalid("remotality scan needs at least one probe"));
    }
    let results = probes
        .iter()
        .map(|x| farthest_points_with(x, set, space, eps_far, delta_unique))
        .collect::<Result<Vec<_>>>()?;
    let remotal_on_probes = results.iter().all(|r| !r.attainers.is_empty());
    let uniquely_remotal_on_probes = remotal_on_probes && results.iter().all(|r| r.unique);
    Ok(RemotalityScan { results, remotal_on_probes, uniquely_remotal_on_probes })
}
