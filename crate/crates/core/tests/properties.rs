use mcfsing::cone::{cone_constant, half_cone_level, Direction};
use mcfsing::spacetime::{greedy_cover, parabolic_ball_volume, parabolic_distance};
use mcfsing::{PointCloud, SpaceTimePoint, TimeSlicePlane};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(dim: usize) -> impl Strategy<Value = SpaceTimePoint> {
    (prop::collection::vec(-5.0..5.0f64, dim), -5.0..5.0f64).prop_map(|(x, t)| SpaceTimePoint::new(x, t))
}

fn triple() -> impl Strategy<Value = (SpaceTimePoint, SpaceTimePoint, SpaceTimePoint)> {
    (1usize..4).prop_flat_map(|d| (point(d), point(d), point(d)))
}

fn cloud() -> impl Strategy<Value = PointCloud> {
    (1usize..3, 2usize..25)
        .prop_flat_map(|(d, n)| prop::collection::vec(point(d), n))
        .prop_map(|pts| PointCloud::new(pts).unwrap())
}

fn d(p: &SpaceTimePoint, q: &SpaceTimePoint) -> f64 {
    parabolic_distance(p, q).unwrap()
}

proptest! {
    #[test]
    fn metric_axioms((p, q, s) in triple()) {
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &q) >= 0.0);
        prop_assert!(d(&p, &s) <= d(&p, &q) + d(&q, &s) + 1e-12);
    }

    #[test]
    fn dilation_scales_distance((p, q, c) in triple(), lambda in 0.01..50.0f64) {
        let a = d(&p.dilate_about(&c, lambda), &q.dilate_about(&c, lambda));
        prop_assert!((a - lambda * d(&p, &q)).abs() <= 1e-12 * lambda * (1.0 + d(&p, &q)));
    }

    #[test]
    fn projection_round_trips((b, p, _) in triple(), seed in 0u64..1000) {
        let dim = b.dim();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let dir: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        prop_assume!(dir.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let v = TimeSlicePlane::new(b, vec![dir]).unwrap();
        let back = v.reconstruct(&v.project(&p).unwrap());
        // the time part of dist_P is a square root, so compare components
        let dx = back.x.iter().zip(&p.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dx < 1e-12 && (back.t - p.t).abs() < 1e-12);
    }

    #[test]
    fn half_cone_levels_equal_full_level(c in cloud(), r0 in 0.5..20.0f64) {
        let full = cone_constant(&c, r0).map(|g| g.gamma).unwrap_or(0.0);
        prop_assert_eq!(half_cone_level(&c, r0, Direction::Forward), full);
        prop_assert_eq!(half_cone_level(&c, r0, Direction::Backward), full);
    }

    #[test]
    fn greedy_cover_is_a_net(c in cloud(), r in 0.1..5.0f64) {
        let centers = greedy_cover(&c, r);
        for p in c.points() {
            prop_assert!(centers.iter().any(|&i| d(p, c.point(i)) < r));
        }
        for (a, &i) in centers.iter().enumerate() {
            for &j in &centers[a + 1..] {
                prop_assert!(d(c.point(i), c.point(j)) >= r);
            }
        }
    }
}

#[test]
fn ball_volume_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in 1..=3 {
        let r: f64 = 0.7;
        let center = SpaceTimePoint::origin(dim);
        // bounding box [−r, r]^dim × [−r², r²]
        let box_vol = (2.0 * r).powi(dim as i32) * 2.0 * r * r;
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| {
                let x = (0..dim).map(|_| rng.random_range(-r..r)).collect();
                let t = rng.random_range(-r * r..r * r);
                d(&SpaceTimePoint::new(x, t), &center) < r
            })
            .count();
        let mc = box_vol * hits as f64 / n as f64;
        let exact = parabolic_ball_volume(dim, r);
        assert!((mc - exact).abs() < 0.01 * exact, "dim {dim}: {mc} vs {exact}");
        let ratio = parabolic_ball_volume(dim, 2.0 * r) / exact;
        assert!((ratio - 2f64.powi(dim as i32 + 2)).abs() < 1e-12);
    }
}
