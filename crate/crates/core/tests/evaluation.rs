use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mapf_select::benchmark::InstanceKey;
use mapf_select::eval::{
    evaluate, make_split, regret_percent, single_best_policy, Aggregation, GridType,
    LabeledInstance, Oracle, Setup, SplitSpec,
};

/// `grids` grids per type, each with `units` scenario/agent-count units.
fn dataset(
    rng: &mut ChaCha8Rng,
    types: &[GridType],
    grids: usize,
    units: usize,
    all_solvable: bool,
) -> Vec<LabeledInstance> {
    let mut out = Vec::new();
    for &t in types {
        for g in 0..grids {
            for u in 0..units {
                let runtimes: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..5.5)).collect();
                let mut solved: Vec<bool> = runtimes.iter().map(|&r| r < 5.0).collect();
                if all_solvable {
                    solved.iter_mut().for_each(|s| *s = true);
                }
                let key = InstanceKey::new(
                    format!("{t}-{g}"),
                    format!("{t}-{g}-even-{}", u / 3),
                    u % 3 + 1,
                );
                out.push(LabeledInstance::new(
                    key,
                    t,
                    Arc::from(vec![0.0]),
                    &runtimes,
                    &solved,
                ));
            }
        }
    }
    out
}

#[test]
fn regret_hand_checked_cases() {
    assert_eq!(regret_percent(3.0, 1.5), 100.0);
    assert_eq!(regret_percent(1.5, 1.5), 0.0);
    assert_eq!(regret_percent(2.0, 4.0), -50.0);
    // both runtimes floored at 0.001 min
    assert_eq!(regret_percent(0.0, 0.0), 0.0);
    assert_eq!(regret_percent(0.002, 0.0), 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_is_perfect_on_solvable_data(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = dataset(&mut rng, &GridType::ALL, 2, 6, true);
        for mode in [Aggregation::All, Aggregation::Avg] {
            let m = evaluate(&Oracle, &data, mode);
            prop_assert_eq!((m.acc, m.cov, m.regret), (1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn balanced_types_aggregate_identically(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = dataset(&mut rng, &[GridType::Maze, GridType::City, GridType::Room], 2, 5, false);
        let policy = single_best_policy(&data).unwrap();
        let (all, avg) = (evaluate(&policy, &data, Aggregation::All), evaluate(&policy, &data, Aggregation::Avg));
        for (a, b) in [(all.acc, avg.acc), (all.cov, avg.cov), (all.rt, avg.rt), (all.regret, avg.regret)] {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn splits_partition_and_respect_their_setup(seed in any::<u64>(), setup_ix in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = dataset(&mut rng, &GridType::ALL, 3, 6, false);
        let setup = [Setup::InGrid, Setup::InGridType, Setup::BetweenGridType][setup_ix];
        let split = make_split(&data, &SplitSpec::new(setup, seed)).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        prop_assert!(!split.train.is_empty() && !split.test.is_empty());
        let field = |i: usize| -> String {
            match setup {
                Setup::InGrid => format!("{}|{}", data[i].key.scenario, data[i].key.num_agents),
                Setup::InGridType => data[i].key.grid.clone(),
                Setup::BetweenGridType => data[i].grid_type.to_string(),
            }
        };
        let train: std::collections::BTreeSet<String> = split.train.iter().map(|&i| field(i)).collect();
        prop_assert!(split.test.iter().all(|&i| !train.contains(&field(i))));
    }
}
