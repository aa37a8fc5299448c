use eucfpp_core::geodesic::{passage_time, EnvironmentView};
use eucfpp_core::geometry::{distance, traverse_segment, BoxIndex, GridSpec, PhiParams, Window};
use eucfpp_core::point_process::{decode_poisson_count, encode_poisson_count, Environment, ThinningSpec};
use eucfpp_core::rng::MasterSeed;
use eucfpp_core::stats::{mean, pairwise_sum, sample_variance};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -20.0..20.0f64
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn poisson_code_round_trips(k in 0usize..16) {
        let bits = encode_poisson_count(k).unwrap();
        prop_assert_eq!(decode_poisson_count(&bits).unwrap(), k);
        // any continuation of the prefix decodes to the same count
        let mut ones = bits.clone();
        ones.extend([true; 8]);
        prop_assert_eq!(decode_poisson_count(&ones).unwrap(), k);
    }

    #[test]
    fn box_of_contains_the_point(p in point()) {
        let b = GridSpec::new(2).unwrap().box_of(&p);
        let c = b.center();
        prop_assert!(p.iter().zip(&c).all(|(x, m)| *x >= m - 0.5 && *x < m + 0.5));
    }

    #[test]
    fn window_indexing_round_trips(lo in prop::collection::vec(-5i64..5, 3), ext in prop::collection::vec(0i64..4, 3), pick in 0usize..1000) {
        let hi: Vec<i64> = lo.iter().zip(&ext).map(|(a, e)| a + e).collect();
        let w = Window::new(BoxIndex::new(&lo), BoxIndex::new(&hi)).unwrap();
        let i = pick % w.num_boxes();
        let b = w.box_at(i);
        prop_assert!(w.contains_box(&b));
        prop_assert_eq!(w.linear_index(&b), Some(i));
    }

    #[test]
    fn traversal_is_a_face_connected_walk(p in point(), q in point()) {
        let grid = GridSpec::new(2).unwrap();
        let boxes = traverse_segment(&grid, &p, &q);
        prop_assert_eq!(boxes.first().unwrap(), &grid.box_of(&p));
        prop_assert_eq!(boxes.last().unwrap(), &grid.box_of(&q));
        prop_assert!(boxes.windows(2).all(|w| w[0].is_face_adjacent(&w[1])));
        let l1: i64 = grid.box_of(&p).coords().iter().zip(grid.box_of(&q).coords()).map(|(a, b)| (a - b).abs()).sum();
        prop_assert_eq!(boxes.len() as i64, l1 + 1);
    }

    #[test]
    fn phi_cost_is_increasing_and_convex(alpha in 1.1..4.0f64, n in 1.0..200.0f64, s in 0.0..50.0f64, t in 0.0..50.0f64) {
        let params = PhiParams::new(alpha, 4.0, 8.0, n).unwrap();
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        prop_assert!(params.cost(lo) <= params.cost(hi));
        prop_assert!(params.slope(lo) <= params.slope(hi) * (1.0 + 1e-12));
        prop_assert!(params.cost(0.0) == 0.0 && params.cost(lo) >= 0.0);
        // convexity at the midpoint
        let mid = 0.5 * (lo + hi);
        prop_assert!(params.cost(mid) <= 0.5 * (params.cost(lo) + params.cost(hi)) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn stats_helpers_agree_with_naive_sums(xs in prop::collection::vec(-1e3..1e3f64, 2..200)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0));
        let m = mean(&xs);
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
        prop_assert!((sample_variance(&xs) - v).abs() <= 1e-9 * v.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn thinning_keeps_a_subset(replicate in 0u64..10_000, k in prop::sample::select(vec![1u64, 3, 5])) {
        let grid = GridSpec::new(2).unwrap();
        let w = Window::around_segment(2, 8.0, 3, 3).unwrap();
        let env = Environment::sample(grid, w, MasterSeed(4), replicate).unwrap();
        let thinned = env.thin(&ThinningSpec::new(k, 8.0).unwrap());
        prop_assert!(thinned.num_points() <= env.num_points());
        let all = env.all_points();
        prop_assert!(thinned.all_points().iter().all(|p| all.contains(p)));
        let again = thinned.thin(&ThinningSpec::new(k, 8.0).unwrap());
        prop_assert_eq!(again.all_points(), thinned.all_points());
    }

    #[test]
    fn passage_time_is_symmetric_and_below_the_direct_cost(replicate in 0u64..10_000, x in 0.5..6.0f64, y in -2.0..2.0f64) {
        let grid = GridSpec::new(2).unwrap();
        let w = Window::around_segment(2, 8.0, 3, 3).unwrap();
        let env = Environment::sample(grid, w, MasterSeed(6), replicate).unwrap();
        let params = PhiParams::new(2.0, 8.0, 8.0, 8.0).unwrap();
        let view = EnvironmentView::phi(&env, params);
        let (a, b) = (vec![0.0, 0.0], vec![x, y]);
        let ab = passage_time(&view, &a, &b).unwrap();
        let ba = passage_time(&view, &b, &a).unwrap();
        prop_assert!((ab.passage_time - ba.passage_time).abs() <= 1e-12 * ab.passage_time.max(1.0));
        prop_assert!(ab.passage_time <= params.cost(distance(&a, &b)) * (1.0 + 1e-12));
        prop_assert!(ab.passage_time >= 0.0);
    }
}
