use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mapf_select::benchmark::{
    parse_map, parse_scen, write_scen, GridMap, InstanceKey, ScenarioEntry,
};
use mapf_select::encode::{encode_fg2v, encode_g2v, EncodedGraph};
use mapf_select::feather::{embed_graph, FeatherConfig, Pooling};
use mapf_select::mapf::{shortest_path, MapfInstance};
use mapf_select::pipeline::{extract, FeatureStore, Layout};
use mapf_testkit as tk;

/// A random instance whose agents all live in one connected component, with
/// the passable mask it was built from.
fn random_instance(
    rng: &mut ChaCha8Rng,
    max_side: usize,
    max_agents: usize,
) -> Option<(MapfInstance, Vec<bool>)> {
    let (w, h, passable) = tk::random_grid(rng, max_side, max_side, 0.2);
    let open: Vec<usize> = (0..w * h).filter(|&c| passable[c]).collect();
    if open.is_empty() {
        return None;
    }
    let seed = open[rng.random_range(0..open.len())];
    let dist = tk::dijkstra_grid(w, h, &passable, seed);
    let comp: Vec<usize> = (0..w * h).filter(|&c| dist[c].is_some()).collect();
    let k = rng.random_range(1..=max_agents.min(comp.len()));
    let pick = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        tk::random_permutation(rng, comp.len())[..k]
            .iter()
            .map(|&i| comp[i])
            .collect()
    };
    let sources = pick(rng);
    let targets = pick(rng);
    let grid = Arc::new(GridMap::from_passable("g", w, h, &passable));
    Some((
        MapfInstance::new(grid, sources, targets).expect("valid instance"),
        passable,
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_text_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h, passable) = tk::random_grid(&mut rng, 30, 30, 0.3);
        let text = tk::map_text(w, h, &passable);
        let grid = parse_map("m", text.as_bytes()).unwrap();
        prop_assert_eq!(grid.passable_mask(), &passable[..]);
        prop_assert_eq!(grid.to_map_string(), text);
    }

    #[test]
    fn scen_text_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some((inst, _)) = random_instance(&mut rng, 20, 10) else { return Ok(()); };
        let grid = inst.grid();
        let entries: Vec<ScenarioEntry> = inst.paths().iter().map(|p| ScenarioEntry {
            bucket: (p.moves() / 4) as u32,
            map_name: "g.map".into(),
            map_width: grid.width(),
            map_height: grid.height(),
            start: grid.coords(p.cells[0]),
            goal: grid.coords(*p.cells.last().unwrap()),
            optimal_length: p.moves() as f64,
        }).collect();
        prop_assert_eq!(parse_scen(write_scen(&entries).as_bytes(), grid).unwrap(), entries);
    }

    #[test]
    fn bfs_distances_match_dijkstra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h, passable) = tk::random_grid(&mut rng, 24, 24, 0.3);
        let grid = GridMap::from_passable("g", w, h, &passable);
        let open: Vec<usize> = (0..w * h).filter(|&c| passable[c]).collect();
        for &s in open.iter().take(3) {
            let dist = tk::dijkstra_grid(w, h, &passable, s);
            for &t in &open {
                let ours = shortest_path(&grid, s, t).ok().map(|p| p.moves() as u64);
                prop_assert_eq!(ours, dist[t]);
            }
        }
    }

    #[test]
    fn bfs_paths_follow_the_reference_tie_break(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h, passable) = tk::random_grid(&mut rng, 16, 16, 0.2);
        let grid = GridMap::from_passable("g", w, h, &passable);
        let open: Vec<usize> = (0..w * h).filter(|&c| passable[c]).collect();
        prop_assume!(!open.is_empty());
        let s = open[rng.random_range(0..open.len())];
        let t = open[rng.random_range(0..open.len())];
        prop_assert_eq!(shortest_path(&grid, s, t).ok().map(|p| p.cells), tk::bfs_path(w, h, &passable, s, t));
    }

    #[test]
    fn feather_matches_dense_oracle(seed in any::<u64>(), max_pool in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(0..=16);
        let edges = tk::random_graph(&mut rng, n, 0.3);
        let config = FeatherConfig {
            pooling: if max_pool { Pooling::Max } else { Pooling::Mean },
            ..FeatherConfig::default()
        };
        let graph = EncodedGraph::from_edges(n, edges.iter().copied()).unwrap();
        let ours = embed_graph(&graph, &config).values;
        let oracle = tk::dense_feather(n, &edges, 5, 25, 2.5, max_pool);
        prop_assert_eq!(ours.len(), oracle.len());
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn feather_values_are_bounded_and_finite(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(0..=40);
        let edges = tk::random_graph(&mut rng, n, 0.15);
        let graph = EncodedGraph::from_edges(n, edges).unwrap();
        let values = embed_graph(&graph, &FeatherConfig::default()).values;
        prop_assert_eq!(values.len(), 500);
        prop_assert!(values.iter().all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn feather_is_invariant_under_relabelling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=30);
        let edges = tk::random_graph(&mut rng, n, 0.25);
        let perm = tk::random_permutation(&mut rng, n);
        let a = EncodedGraph::from_edges(n, edges.iter().copied()).unwrap();
        let b = EncodedGraph::from_edges(n, edges.iter().map(|&(u, v)| (perm[u], perm[v]))).unwrap();
        let config = FeatherConfig::default();
        for (x, y) in embed_graph(&a, &config).values.iter().zip(&embed_graph(&b, &config).values) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn encodings_match_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some((inst, passable)) = random_instance(&mut rng, 16, 8) else { return Ok(()); };
        let (w, h) = (inst.grid().width(), inst.grid().height());

        let mut cells = BTreeSet::new();
        for (&s, &t) in inst.sources().iter().zip(inst.targets()) {
            cells.extend(tk::bfs_path(w, h, &passable, s, t).unwrap());
        }
        let g2v = encode_g2v(&inst);
        prop_assert_eq!(g2v.node_origin().iter().copied().collect::<BTreeSet<_>>(), cells.clone());
        let origin = |g: &EncodedGraph| -> BTreeSet<(usize, usize)> {
            g.edges().map(|(u, v)| {
                let (a, b) = (g.node_origin()[u], g.node_origin()[v]);
                (a.min(b), a.max(b))
            }).collect()
        };
        prop_assert_eq!(origin(&g2v), tk::induced_grid_edges(w, &cells));

        let all: BTreeSet<usize> = (0..w * h).filter(|&c| passable[c]).collect();
        let mut expected = tk::induced_grid_edges(w, &all);
        for (&s, &t) in inst.sources().iter().zip(inst.targets()) {
            if s != t {
                expected.insert((s.min(t), s.max(t)));
            }
        }
        let fg2v = encode_fg2v(&inst);
        prop_assert_eq!(fg2v.num_nodes(), all.len());
        prop_assert_eq!(origin(&fg2v), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn feature_store_round_trips_bit_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = FeatherConfig::default();
        let mut store = FeatureStore::new(Layout::new(&config));
        for i in 0..4 {
            let Some((inst, _)) = random_instance(&mut rng, 12, 5) else { continue; };
            let key = InstanceKey::new(format!("g{i}"), "s", inst.k());
            store.insert(extract(&inst, key, &config));
        }
        let back = FeatureStore::from_csv(store.to_csv().as_bytes()).unwrap();
        prop_assert_eq!(back.len(), store.len());
        for (key, values) in store.iter() {
            let other = back.get(key).unwrap();
            prop_assert!(values.iter().zip(other.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
