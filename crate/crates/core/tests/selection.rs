mod common;

use proptest::prelude::*;
use qdlab::baselines::{crowding_distance, non_dominated_sort, nsga2_select};
use qdlab::novelty::{EvaluatedPolicy, Origin};
use qdlab::policy::ParameterVector;
use qdlab::serene::{improvement, init_sigma, pareto_front, should_terminate, stagnation_window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn with_genome(uid: u64, genome: Vec<f64>) -> EvaluatedPolicy {
    EvaluatedPolicy {
        uid,
        origin: Origin::Exploration,
        descriptor: [0.0, 0.0],
        reward: 0.0,
        area_id: None,
        params: Some(ParameterVector::clipped(genome)),
    }
}

#[test]
fn pareto_front_matches_oracle_on_thousand_emitters() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 10, 100, 1000] {
        // coarse values force ties and duplicates
        let mut pts: Vec<(f64, f64)> = (0..n)
            .map(|_| ((rng.random_range(0..20) as f64) / 4.0, rng.random::<f64>().round()))
            .collect();
        pts.extend((0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())));
        let as_vec: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        assert_eq!(pareto_front(&pts), common::nondominated_oracle(&as_vec));
    }
}

#[test]
fn pareto_spec_examples() {
    assert_eq!(pareto_front(&[(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]), vec![0, 1, 2]);
    assert_eq!(pareto_front(&[(1.0, 1.0), (0.0, 0.0)]), vec![0]);
}

proptest! {
    #[test]
    fn pareto_front_agrees_with_oracle(pts in prop::collection::vec((0u8..8, 0u8..8), 0..150)) {
        let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64, b as f64)).collect();
        let as_vec: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        prop_assert_eq!(pareto_front(&pts), common::nondominated_oracle(&as_vec));
    }

    #[test]
    fn nsga_first_front_agrees_with_oracle(pts in prop::collection::vec((0u8..10, 0u8..10), 1..150)) {
        let objs: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a as f64, b as f64]).collect();
        let fronts = non_dominated_sort(&objs);
        prop_assert_eq!(&fronts[0], &common::nondominated_oracle(&objs));
        // every index appears exactly once and each front is non-dominated
        // once the earlier fronts are removed
        let mut seen: Vec<usize> = fronts.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..objs.len()).collect::<Vec<_>>());
        let mut remaining: Vec<usize> = (0..objs.len()).collect();
        for front in &fronts {
            let sub: Vec<Vec<f64>> = remaining.iter().map(|&i| objs[i].clone()).collect();
            let expect: Vec<usize> = common::nondominated_oracle(&sub).into_iter().map(|j| remaining[j]).collect();
            let mut f = front.clone();
            f.sort_unstable();
            prop_assert_eq!(f, expect);
            remaining.retain(|i| !front.contains(i));
        }
    }

    #[test]
    fn nsga_selection_respects_fronts(pts in prop::collection::vec((0u8..10, 0u8..10), 1..120), keep in 1usize..60) {
        let objs: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a as f64, b as f64]).collect();
        let keep = keep.min(objs.len());
        let chosen = nsga2_select(&objs, keep);
        prop_assert_eq!(chosen.len(), keep);
        let fronts = non_dominated_sort(&objs);
        let rank = |i: usize| fronts.iter().position(|f| f.contains(&i)).unwrap();
        let worst_kept = chosen.iter().map(|&i| rank(i)).max().unwrap();
        for i in 0..objs.len() {
            if !chosen.contains(&i) {
                prop_assert!(rank(i) >= worst_kept);
            }
        }
        for f in &fronts {
            let d = crowding_distance(&objs, f);
            prop_assert!(d.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn sigma_matches_min_distance_oracle(
        genomes in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 8), 2..40),
    ) {
        let pols: Vec<_> = genomes.iter().enumerate().map(|(i, g)| with_genome(i as u64, g.clone())).collect();
        let got = init_sigma(&pols[0], &pols, 0.05);
        let expected = common::sigma_oracle(&genomes[0], &genomes[1..]).unwrap_or(0.05);
        prop_assert!((got - expected).abs() < 1e-12);
    }
}

#[test]
fn sigma_examples() {
    let anchor = with_genome(0, vec![0.0, 0.0]);
    let near = with_genome(1, vec![3.0, 0.0]);
    let far = with_genome(2, vec![0.0, 4.0]);
    assert!((init_sigma(&anchor, [&anchor, &near, &far], 0.05) - 1.0).abs() < 1e-12);
    let close = with_genome(3, vec![0.3, 0.0]);
    assert!((init_sigma(&anchor, [&near, &close], 0.05) - 0.1).abs() < 1e-12);
    let twin = with_genome(4, vec![0.0, 0.0]);
    assert_eq!(init_sigma(&anchor, [&anchor, &twin], 0.05), 0.05);
}

#[test]
fn improvement_cases() {
    // two survivors per generation, zero then one reward each
    assert_eq!(improvement(&[0.0, 0.0, 0.0, 2.0, 2.0, 2.0], 6, 2), 0.5);
    assert_eq!(improvement(&[1.5; 6], 6, 6), 0.0);
    assert!(improvement(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 6, 6) > 0.0);
}

#[test]
fn termination_window() {
    assert_eq!(stagnation_window(107, 6), 476);
    let h = stagnation_window(72, 6);
    let flat = vec![0.4; h];
    assert!(!should_terminate(&flat[..h - 1], 72, 6));
    assert!(should_terminate(&flat, 72, 6));
    let rising: Vec<f64> = (0..2 * h).map(|g| g as f64 * 1e-3).collect();
    assert!((1..=2 * h).all(|g| !should_terminate(&rising[..g], 72, 6)));
}
