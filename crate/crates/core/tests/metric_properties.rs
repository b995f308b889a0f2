use dcov_core::metric::{check_triangle, check_weak_triangle, discrete_embedding, validate_space};
use dcov_core::{seed, Point, Space};
use proptest::prelude::*;

fn real_point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-50.0f64..50.0, dim).prop_map(Point::vector)
}

fn triple(dim: usize) -> impl Strategy<Value = (Point, Point, Point)> {
    (real_point(dim), real_point(dim), real_point(dim))
}

proptest! {
    #[test]
    fn distance_is_symmetric_and_non_negative(
        dim in 1usize..5,
        beta in 0.05f64..=2.0,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = seed::rng(seed);
        let space = Space::euclidean(dim).with_beta(beta).unwrap();
        let p = Point::vector((0..dim).map(|_| rng.random_range(-10.0..10.0)).collect::<Vec<f64>>());
        let q = Point::vector((0..dim).map(|_| rng.random_range(-10.0..10.0)).collect::<Vec<f64>>());
        let d = space.distance(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, space.distance(&q, &p).unwrap());
        prop_assert_eq!(space.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn discrete_and_hilbert_distances_are_metrics(a in 0u32..20, b in 0u32..20, beta in 0.1f64..=2.0) {
        let s = Space::discrete(20).with_beta(beta).unwrap();
        let d = s.distance(&Point::symbol(a), &Point::symbol(b)).unwrap();
        prop_assert_eq!(d, if a == b { 0.0 } else { 1.0 });

        let h = Space::hilbert_l2(4).with_beta(beta).unwrap();
        let p = Point::vector(vec![a as f64, 1.0]);
        let q = Point::vector(vec![b as f64, 1.0, 0.0, 0.0]);
        prop_assert_eq!(h.distance(&p, &q).unwrap(), h.distance(&q, &p).unwrap());
        prop_assert!(h.distance(&p, &q).unwrap() >= 0.0);
    }

    #[test]
    fn powers_compose(a in 0.1f64..=2.0, b in 0.1f64..=2.0, p in real_point(3), q in real_point(3)) {
        prop_assume!(a * b <= 2.0);
        let base = Space::euclidean(3);
        let twice = base.with_beta(a).unwrap().with_beta(b).unwrap();
        let once = base.with_beta(a * b).unwrap();
        let (d1, d2) = (twice.distance(&p, &q).unwrap(), once.distance(&p, &q).unwrap());
        prop_assert!((d1 - d2).abs() <= 1e-12 * d2.max(1.0), "{} vs {}", d1, d2);
    }

    #[test]
    fn sub_unit_powers_satisfy_the_triangle_inequality(beta in 0.05f64..=1.0, t in prop::collection::vec(triple(2), 1..20)) {
        let space = Space::euclidean(2).with_beta(beta).unwrap();
        let report = check_triangle(&space, &t).unwrap();
        prop_assert_eq!(report.violations, 0);
    }

    #[test]
    fn super_unit_powers_satisfy_the_weak_triangle_inequality(beta in 1.0f64..=2.0, t in prop::collection::vec(triple(2), 1..20)) {
        let space = Space::euclidean(2).with_beta(beta).unwrap();
        let report = check_weak_triangle(&space, &t).unwrap();
        prop_assert_eq!(report.violations, 0);
    }
}

#[test]
fn weak_triangle_is_refused_below_one() {
    let space = Space::euclidean(1).with_beta(0.5).unwrap();
    assert!(check_weak_triangle(&space, &[]).is_err());
}

#[test]
fn weak_triangle_on_thousand_planar_triples() {
    use rand::Rng;
    let mut rng = seed::rng(11);
    let space = Space::euclidean(2).with_beta(1.5).unwrap();
    let mut pt = || {
        Point::vector(vec![
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ])
    };
    let triples: Vec<_> = (0..1000).map(|_| (pt(), pt(), pt())).collect();
    let report = check_weak_triangle(&space, &triples).unwrap();
    assert_eq!(report.checked, 1000);
    assert_eq!(report.violations, 0);
}

#[test]
fn embedding_reproduces_discrete_metric_for_all_small_alphabets() {
    for m in 1..=16u32 {
        let e = discrete_embedding(&Space::discrete(m)).unwrap();
        assert_eq!(e.dim(), m as usize);
        for i in 0..m {
            for j in 0..m {
                let (u, v) = (
                    e.map(&Point::symbol(i)).unwrap(),
                    e.map(&Point::symbol(j)).unwrap(),
                );
                let sq: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                let want = if i == j { 0.0 } else { 1.0 };
                assert!((sq - want).abs() <= 1e-15, "m={m} ({i},{j}): {sq}");
            }
        }
    }
}

#[test]
fn embedding_needs_plain_discrete_space() {
    assert!(discrete_embedding(&Space::euclidean(2)).is_err());
    assert!(discrete_embedding(&Space::discrete(3).with_beta(0.5).unwrap()).is_err());
}

#[test]
fn validation_flags_a_broken_user_metric() {
    let asym = Space::user_defined("skewed", |p: &Point, q: &Point| {
        let (a, b) = (p.as_real().unwrap()[0], q.as_real().unwrap()[0]);
        if a < b {
            2.0 * (b - a)
        } else {
            a - b
        }
    });
    let points: Vec<Point> = (0..10).map(|i| Point::scalar(i as f64)).collect();
    let mut rng = seed::rng(5);
    let report = validate_space(&asym, &points, 200, 200, &mut rng).unwrap();
    assert!(report.asymmetric > 0);
    assert!(!report.is_clean());

    let fine = Space::user_defined("abs", |p: &Point, q: &Point| {
        (p.as_real().unwrap()[0] - q.as_real().unwrap()[0]).abs()
    });
    let report = validate_space(&fine, &points, 200, 200, &mut rng).unwrap();
    assert!(report.is_clean());
}
