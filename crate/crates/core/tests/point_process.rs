use eucfpp_core::geometry::{BoxIndex, GridSpec, Window};
use eucfpp_core::point_process::{
    encode_poisson_count, export_snapshot, import_snapshot, leading_ones, BoxTape, Environment, ThinningSpec,
};
use eucfpp_core::rng::MasterSeed;

fn poisson_pmf(k: usize) -> f64 {
    (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>()
}

fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

fn window(half: i64) -> Window {
    Window::new(BoxIndex::new(&[-half, -half]), BoxIndex::new(&[half, half])).unwrap()
}

#[test]
fn box_counts_are_poisson_one() {
    let grid = GridSpec::new(2).unwrap();
    let mut hist = [0.0f64; 7];
    let mut total = 0.0;
    for r in 0..8 {
        let env = Environment::sample(grid, window(20), MasterSeed(11), r).unwrap();
        for b in env.window().boxes() {
            hist[env.count(&b).unwrap().min(6)] += 1.0;
            total += 1.0;
        }
    }
    let mut expected: Vec<f64> = (0..6).map(|k| total * poisson_pmf(k)).collect();
    expected.push(total - expected.iter().sum::<f64>());
    // df = 6, upper 0.1% point
    let chi = chi_square(&hist, &expected);
    assert!(chi < 22.458, "chi2 {chi}, histogram {hist:?}");
    let mean = hist.iter().enumerate().map(|(k, c)| k as f64 * c).sum::<f64>() / total;
    assert!((mean - 1.0).abs() < 4.0 / total.sqrt(), "mean count {mean}");
}

#[test]
fn points_are_uniform_within_their_box() {
    let grid = GridSpec::new(2).unwrap();
    let mut bins = [0.0f64; 10];
    for r in 0..4 {
        let env = Environment::sample(grid, window(25), MasterSeed(5), r).unwrap();
        for (b, p) in env.all_points() {
            let c = b.lower_corner();
            for a in 0..2 {
                let u = p[a] - c[a];
                assert!((0.0..1.0).contains(&u));
                bins[(u * 10.0) as usize] += 1.0;
            }
        }
    }
    let total: f64 = bins.iter().sum();
    // df = 9, upper 0.1% point
    let chi = chi_square(&bins, &[total / 10.0; 10]);
    assert!(chi < 27.877, "chi2 {chi}");
}

#[test]
fn leading_ones_have_mean_one() {
    let n = 20_000;
    let sum: usize = (0..n)
        .map(|i| leading_ones(&BoxTape::keyed(MasterSeed(3), i, &BoxIndex::new(&[0, 0]), 0).unwrap()))
        .sum();
    let mean = sum as f64 / n as f64;
    // geometric(1/2) number of leading ones has mean 1 and variance 2
    assert!((mean - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "mean {mean}");
}

#[test]
fn sampling_is_keyed_by_seed_and_replicate() {
    let grid = GridSpec::new(2).unwrap();
    let a = Environment::sample(grid, window(3), MasterSeed(9), 4).unwrap();
    let b = Environment::sample(grid, window(3), MasterSeed(9), 4).unwrap();
    let c = Environment::sample(grid, window(3), MasterSeed(9), 5).unwrap();
    assert_eq!(export_snapshot(&a), export_snapshot(&b));
    assert_ne!(export_snapshot(&a), export_snapshot(&c));
    // a larger window agrees with the smaller one on shared boxes
    let big = Environment::sample(grid, window(5), MasterSeed(9), 4).unwrap();
    for bx in a.window().boxes() {
        assert_eq!(a.points(&bx).unwrap(), big.points(&bx).unwrap());
    }
}

#[test]
fn snapshot_golden() {
    let grid = GridSpec::new(2).unwrap();
    let w = Window::new(BoxIndex::new(&[0, 0]), BoxIndex::new(&[1, 0])).unwrap();
    let env = Environment::from_points(grid, w, &[vec![-0.25, 0.0], vec![1.25, -0.375], vec![1.0, -0.5]]).unwrap();
    let bits = |k: usize| encode_poisson_count(k).unwrap().iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    let want = format!(
        "eucfpp-snapshot 1\ndim 2\nwindow 0 0 1 0\nbox 0 0 bits {} u 0.25 0.5\nbox 1 0 bits {} u 0.75 0.125 u 0.5 0\n",
        bits(1),
        bits(2)
    );
    assert_eq!(export_snapshot(&env), want);
    let back = import_snapshot(&want).unwrap();
    assert_eq!(export_snapshot(&back), want);
    assert_eq!(back.num_points(), 3);
}

#[test]
fn sampled_and_thinned_snapshots_round_trip() {
    let grid = GridSpec::new(2).unwrap();
    let env = Environment::sample(grid, window(6), MasterSeed(21), 2).unwrap();
    let thinned = env.thin(&ThinningSpec::new(1, 16.0).unwrap());
    for e in [&env, &thinned] {
        let text = export_snapshot(e);
        let back = import_snapshot(&text).unwrap();
        assert_eq!(back.all_points(), e.all_points());
        assert_eq!(export_snapshot(&back), text);
    }
}

#[test]
fn malformed_snapshots_are_rejected() {
    for text in [
        "",
        "eucfpp-snapshot 2\ndim 2\nwindow 0 0 0 0\nbox 0 0 bits 0\n",
        "eucfpp-snapshot 1\ndim 2\nwindow 0 0 0 0\n",
        "eucfpp-snapshot 1\ndim 2\nwindow 0 0 0 0\nbox 0 0 bits 0 u 0.5 0.5\n",
        "eucfpp-snapshot 1\ndim 2\nwindow 0 0 0 0\nbox 0 0 bits 2\n",
    ] {
        assert!(import_snapshot(text).is_err(), "accepted {text:?}");
    }
}
