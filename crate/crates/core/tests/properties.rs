use proptest::prelude::*;

use remotal_lab::compactness::SlabGeometry;
use remotal_lab::gauge::power_gauge;
use remotal_lab::geometry::{
    chebyshev_center, default_grid_resolution, farthest_distance, farthest_points_with, BoundedSet, NormedSpace, Point,
};
use remotal_lab::seqlab::{ab_stat_converges, LabSequence};
use remotal_lab::windows::{
    count_powers_of_two, count_squares, density_trace, window_count, IndexPredicate, ScanParams, WindowPair,
};

const CAP: u64 = 10_000_000;

fn pair_strategy() -> impl Strategy<Value = WindowPair> {
    prop_oneof![
        Just(WindowPair::classical()),
        (1u32..=3).prop_map(|b| WindowPair::poly(1.0, b)),
        (1u32..=2, 1u32..=2).prop_map(|(a, l)| WindowPair::shifted(a, l)),
    ]
}

fn space_strategy(dim: usize) -> impl Strategy<Value = NormedSpace> {
    prop_oneof![Just(1.0), Just(2.0), Just(3.0), Just(f64::INFINITY)]
        .prop_map(move |p| NormedSpace::new(dim, p).unwrap())
}

fn point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

fn cloud(dim: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(point(dim), 1..25)
}

/// Indices in a residue class, an arbitrary uncertified predicate.
fn residue(m: u64, r: u64) -> IndexPredicate {
    IndexPredicate::new(format!("k = {r} mod {m}"), move |k| k % m == r % m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_identity(pair in pair_strategy(), n in 1u64..60, m in 1u64..7, r in 0u64..7) {
        let p = residue(m, r);
        if let Some((lo, hi)) = pair.integer_range(n).unwrap() {
            let a = window_count(&p, &pair, n, CAP).unwrap();
            let b = window_count(&p.negate(), &pair, n, CAP).unwrap();
            prop_assert_eq!(a + b, hi - lo + 1);
        }
    }

    #[test]
    fn density_is_monotone_in_the_predicate(pair in pair_strategy(), m in 1u64..7) {
        // multiples of 2m are a subset of multiples of m
        let small = residue(2 * m, 0);
        let big = residue(m, 0);
        let a = density_trace(&small, &pair, 30, CAP).unwrap();
        let b = density_trace(&big, &pair, 30, CAP).unwrap();
        for (x, y) in a.entries.iter().zip(&b.entries) {
            prop_assert!(x.density <= y.density);
            prop_assert!((0.0..=1.0).contains(&x.density));
        }
    }

    #[test]
    fn certificates_agree_with_enumeration(lo in 1u64..5000, len in 0u64..5000) {
        let hi = lo + len;
        let pow = (lo..=hi).filter(|&k| k >= 2 && k.is_power_of_two()).count() as u64;
        let sq = (lo..=hi).filter(|&k| { let r = k.isqrt(); r * r == k }).count() as u64;
        prop_assert_eq!(count_powers_of_two(lo, hi), pow);
        prop_assert_eq!(count_squares(lo, hi), sq);
        prop_assert_eq!(IndexPredicate::powers_of_two().closed_form_count(lo, hi), Some(pow));
        prop_assert_eq!(IndexPredicate::perfect_squares().closed_form_count(lo, hi), Some(sq));
    }

    #[test]
    fn classical_windows_match_prefix_counts(bits in prop::collection::vec(any::<bool>(), 40..120)) {
        let table = bits.clone();
        let pred = IndexPredicate::new("table", move |k| table[(k - 1) as usize]);
        let horizon = bits.len() as u64;
        let trace = density_trace(&pred, &WindowPair::classical(), horizon, CAP).unwrap();
        let mut prefix = 0u64;
        for (i, e) in trace.entries.iter().enumerate() {
            prefix += u64::from(bits[i]);
            prop_assert_eq!(e.count, prefix);
            prop_assert_eq!(e.density, prefix as f64 / (i + 1) as f64);
        }
    }

    #[test]
    fn norm_axioms(space in space_strategy(3), a in point(3), b in point(3), lambda in -5.0f64..5.0) {
        let na = space.norm(&a);
        prop_assert!(na >= 0.0);
        prop_assert_eq!(space.norm(&[0.0, 0.0, 0.0]), 0.0);
        let sum: Point = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!(space.norm(&sum) <= na + space.norm(&b) + 1e-12 * (1.0 + na));
        let scaled: Point = a.iter().map(|x| lambda * x).collect();
        prop_assert!((space.norm(&scaled) - lambda.abs() * na).abs() <= 1e-12 * (1.0 + lambda.abs() * na));
        prop_assert!((space.dist(&a, &b) - space.dist(&b, &a)).abs() == 0.0);
    }

    #[test]
    fn farthest_distance_bounds(space in space_strategy(2), pts in cloud(2), x in point(2), y in point(2)) {
        let set = BoundedSet::cloud(pts.clone()).unwrap();
        let dx = farthest_distance(&x, &set, &space).unwrap();
        for e in &pts {
            prop_assert!(space.dist(&x, e) <= dx);
        }
        // 1-Lipschitz in x
        let dy = farthest_distance(&y, &set, &space).unwrap();
        prop_assert!((dx - dy).abs() <= space.dist(&x, &y) * (1.0 + 1e-12) + 1e-12);
        let fr = farthest_points_with(&x, &set, &space, 0.0, 0.0).unwrap();
        prop_assert!(!fr.attainers.is_empty());
        prop_assert!(fr.attainers.iter().all(|a| space.dist(&x, a) == dx));
    }

    #[test]
    fn farthest_distance_scaling_and_translation(
        space in space_strategy(3),
        pts in cloud(3),
        x in point(3),
        lambda in 0.1f64..10.0,
        v in point(3),
    ) {
        let set = BoundedSet::cloud(pts).unwrap();
        let d = farthest_distance(&x, &set, &space).unwrap();
        let xs: Point = x.iter().map(|c| -lambda * c).collect();
        let ds = farthest_distance(&xs, &set.scale(-lambda), &space).unwrap();
        prop_assert!((ds - lambda * d).abs() <= 1e-12 * (1.0 + lambda * d));
        let xt: Point = x.iter().zip(&v).map(|(a, b)| a + b).collect();
        let dt = farthest_distance(&xt, &set.translate(&v), &space).unwrap();
        prop_assert!((dt - d).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn slab_monotonicity(space in space_strategy(2), pts in cloud(2), x in point(2), t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let set = BoundedSet::cloud(pts).unwrap();
        let geo = SlabGeometry::new(&x, &set, &space).unwrap();
        let (t, u) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = geo.slab(t).unwrap();
        let b = geo.slab(u).unwrap();
        prop_assert!(a.iter().all(|p| b.contains(p)));
        prop_assert!(geo.slab_diameter(t).unwrap() <= geo.slab_diameter(u).unwrap());
        prop_assert!(geo.slab(0.0).unwrap().is_empty());
        prop_assert_eq!(geo.slab_diameter(0.0).unwrap(), 0.0);
    }

    #[test]
    fn box_slabs_match_vertex_enumeration(lo in point(2), side in prop::collection::vec(0.1f64..5.0, 2), x in point(2), t in 0.0f64..8.0) {
        let hi: Point = lo.iter().zip(&side).map(|(l, s)| l + s).collect();
        let set = BoundedSet::axis_box(lo.clone(), hi.clone()).unwrap();
        let space = NormedSpace::euclidean(2);
        let verts = [
            vec![lo[0], lo[1]], vec![lo[0], hi[1]], vec![hi[0], lo[1]], vec![hi[0], hi[1]],
        ];
        let delta = verts.iter().map(|v| space.dist(&x, v)).fold(0.0, f64::max);
        let expected = verts.iter().filter(|v| space.dist(&x, v) > delta - t).count();
        let geo = SlabGeometry::new(&x, &set, &space).unwrap();
        prop_assert_eq!(geo.slab_size(t).unwrap(), expected);
    }

    #[test]
    fn classifier_scale_shift_covariance(
        values in prop::collection::vec(-64i32..64, 1..40),
        exp in -3i32..4,
        negative in any::<bool>(),
        shift in -100i32..100,
        limit in -8i32..8,
        pair in pair_strategy(),
    ) {
        // dyadic values and power-of-two scales keep every comparison exact
        let table: Vec<f64> = values.iter().map(|v| *v as f64 / 8.0).collect();
        let a = if negative { -(2f64.powi(exp)) } else { 2f64.powi(exp) };
        let b = shift as f64;
        let seq = LabSequence::table(table).unwrap();
        let moved = seq.affine(a, b);
        let params = ScanParams::new(20);
        let x = limit as f64 / 4.0;
        let v1 = ab_stat_converges(&seq, x, 0.5, &pair, &params).unwrap();
        let v2 = ab_stat_converges(&moved, a * x + b, a.abs() * 0.5, &pair, &params).unwrap();
        prop_assert_eq!(v1.outcome(), v2.outcome());
        prop_assert_eq!(v1.trace.densities(), v2.trace.densities());
    }

    #[test]
    fn finite_exceptions_converge_for_every_pair(spikes in prop::collection::vec(1u64..20, 0..5), which in 0usize..5) {
        // horizons where 5 exceptions stay under tolerance * shortest tail window
        let (pair, horizon) = [
            (WindowPair::classical(), 800),
            (WindowPair::poly(1.0, 2), 800),
            (WindowPair::poly(1.0, 3), 200),
            (WindowPair::shifted(1, 1), 800),
            (WindowPair::shifted(2, 1), 800),
        ][which].clone();
        let seq = LabSequence::from_fn("spiky", move |n| if spikes.contains(&n) { 9.0 } else { 0.0 });
        let v = ab_stat_converges(&seq, 0.0, 0.5, &pair, &ScanParams::new(horizon).with_cap(CAP)).unwrap();
        prop_assert!(v.is_positive(), "{:?}", v.verdict);
    }

    #[test]
    fn gauge_monotonicity_transfer(p in 1.0f64..4.0, a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let g = power_gauge(p).unwrap();
        prop_assert_eq!(g.eval(a) >= g.eval(b), a >= b);
        prop_assert_eq!(g.eval(0.0), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linf_chebyshev_radius_is_half_the_widest_side(pts in cloud(3)) {
        let set = BoundedSet::cloud(pts.clone()).unwrap();
        let widest = (0..3)
            .map(|i| {
                let lo = pts.iter().map(|q| q[i]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|q| q[i]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        let cc = chebyshev_center(&set, &NormedSpace::linf(3), default_grid_resolution(3), 60).unwrap();
        prop_assert!((cc.radius - widest / 2.0).abs() <= 1e-9 * (1.0 + widest));
    }
}
