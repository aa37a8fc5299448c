use std::collections::{BTreeSet, HashMap};

use eucfpp_core::animals::{animal_max_exact, animal_max_greedy, enumerate_animals, is_connected, AnimalWeights};
use eucfpp_core::geometry::BoxIndex;
use eucfpp_core::rng::{MasterSeed, Substream};

/// Every connected set of `m` boxes containing the origin, grown one neighbour at a time.
fn grown_animals(m: usize) -> BTreeSet<Vec<(i64, i64)>> {
    let mut level: BTreeSet<Vec<(i64, i64)>> = BTreeSet::from([vec![(0, 0)]]);
    for _ in 1..m {
        let mut next = BTreeSet::new();
        for a in &level {
            for &(x, y) in a {
                for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                    if !a.contains(&nb) {
                        let mut b = a.clone();
                        b.push(nb);
                        b.sort();
                        next.insert(b);
                    }
                }
            }
        }
        level = next;
    }
    level
}

fn random_weights(label: u64) -> impl Fn(i64, i64) -> f64 {
    let s = Substream::from_labels(MasterSeed(8), &[label]);
    move |x, y| -(s.unit(((x + 64) * 256 + (y + 64)) as u64 + 1)).ln()
}

#[test]
fn enumeration_matches_growth() {
    for m in 1..=6 {
        let grown = grown_animals(m);
        let listed: BTreeSet<Vec<(i64, i64)>> = enumerate_animals(2, m)
            .unwrap()
            .iter()
            .map(|a| {
                let mut v: Vec<(i64, i64)> = a.boxes().iter().map(|b| (b.coords()[0], b.coords()[1])).collect();
                v.sort();
                v
            })
            .collect();
        assert_eq!(listed, grown, "m = {m}");
        assert!(enumerate_animals(2, m).unwrap().iter().all(|a| is_connected(a.boxes())));
    }
}

#[test]
fn exact_maximum_matches_growth_oracle_and_bounds_greedy() {
    let sets: Vec<_> = (1..=6).map(grown_animals).collect();
    for label in 0..40 {
        let w = random_weights(label);
        let mut map = HashMap::new();
        for x in -6..=6 {
            for y in -6..=6 {
                map.insert(BoxIndex::new(&[x, y]), w(x, y));
            }
        }
        let weights = AnimalWeights::new(map).unwrap();
        for (i, set) in sets.iter().enumerate() {
            let m = i + 1;
            let oracle = set.iter().map(|a| a.iter().map(|&(x, y)| w(x, y)).sum::<f64>()).fold(f64::MIN, f64::max);
            let (exact, animal) = animal_max_exact(&weights, m, 2).unwrap();
            assert!((exact - oracle).abs() <= 1e-12 * oracle, "m = {m}: {exact} vs {oracle}");
            assert_eq!(animal.len(), m);
            let (greedy, g) = animal_max_greedy(&weights, m, 2).unwrap();
            assert!(greedy <= exact + 1e-12 * exact);
            assert!(is_connected(g.boxes()) && g.len() == m);
        }
    }
}
