mod common;

use common::*;
use proptest::prelude::*;
use roadspoof_core::escape::{generate_escape_paths, EscapeParams};
use roadspoof_core::graph::{build_graph, RoadGraph, VertexId};
use roadspoof_core::secure::generate_secure_path;
use roadspoof_core::signature::ThresholdSet;
use roadspoof_core::spoof::{generate_spoofed_paths, PathCandidate, SpoofSearchParams};
use roadspoof_core::synthetic::{GridSpec, NetworkBuilder};
use roadspoof_core::table::build_probability_table;

fn pair(g: &RoadGraph, a: usize, b: usize) -> (VertexId, VertexId) {
    let n = g.vertex_count();
    (VertexId((a % n) as u32), VertexId((b % n) as u32))
}

fn vertex_lists(paths: &[PathCandidate]) -> Vec<Vec<VertexId>> {
    paths.iter().map(|p| p.vertices.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_n_is_a_prefix_of_top_n_plus_k(seed in 0u64..10_000, a in 0usize..64, b in 0usize..64, n in 1usize..6, k in 1usize..6) {
        let g = random_small_graph(seed, 10);
        let t = build_probability_table(&g).unwrap();
        let (s, d) = pair(&g, a, b);
        let small = SpoofSearchParams { n_paths: n, ..SpoofSearchParams::unfiltered() };
        let large = SpoofSearchParams { n_paths: n + k, ..small };
        match (generate_spoofed_paths(&g, &t, s, d, &small), generate_spoofed_paths(&g, &t, s, d, &large)) {
            (Ok(x), Ok(y)) => {
                prop_assert!(x.len() <= y.len());
                prop_assert_eq!(vertex_lists(&x), vertex_lists(&y[..x.len()]));
                prop_assert!(y.windows(2).all(|w| w[0].score >= w[1].score));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "reachability differs"),
        }
    }

    #[test]
    fn looser_filters_never_drop_paths(seed in 0u64..10_000, a in 0usize..64, b in 0usize..64, f in 1.0f64..1.5, extra in 0.0f64..1.0, pad in 0.0f64..200.0) {
        let g = random_small_graph(seed, 10);
        let t = build_probability_table(&g).unwrap();
        let (s, d) = pair(&g, a, b);
        let tight = SpoofSearchParams { n_paths: usize::MAX, distance_factor: f, bbox_padding: pad, ..Default::default() };
        let loose = SpoofSearchParams { distance_factor: f + extra, bbox_padding: pad * 2.0, ..tight };
        if let (Ok(x), Ok(y)) = (generate_spoofed_paths(&g, &t, s, d, &tight), generate_spoofed_paths(&g, &t, s, d, &loose)) {
            let y = vertex_lists(&y);
            prop_assert!(x.iter().all(|p| y.contains(&p.vertices)));
        }
    }

    #[test]
    fn looser_thresholds_keep_every_escape(seed in 0u64..10_000, a in 0usize..64, pick in 0usize..1000, turn in 0.0f64..10.0, curv in 0.0f64..5.0, low in 0.3f64..1.0, high in 1.0f64..3.0) {
        let g = random_small_graph(seed, 10);
        let s = VertexId((a % g.vertex_count()) as u32);
        let from_s = simple_paths_from(&g, s);
        let spoofed = PathCandidate::new(&g, from_s[pick % from_s.len()].clone(), 1.0, 30.0);
        let tight = ThresholdSet::new(turn, curv, low, high).unwrap();
        let loose = ThresholdSet::new(turn * 1.5 + 1.0, curv * 1.5 + 0.5, low * 0.8, high * 1.2).unwrap();
        let x = generate_escape_paths(&g, &spoofed, &EscapeParams::with_thresholds(tight)).unwrap();
        let y = generate_escape_paths(&g, &spoofed, &EscapeParams::with_thresholds(loose)).unwrap();
        let y = vertex_lists(&y.paths);
        prop_assert!(y.contains(&spoofed.vertices));
        prop_assert!(x.paths.iter().all(|p| y.contains(&p.vertices)));
    }

    #[test]
    fn secure_choice_ignores_uniform_speed_scaling(seed in 0u64..1000, scale in 2u32..4) {
        let a = speed_grid(seed, 1);
        let b = speed_grid(seed, scale);
        let (ta, tb) = (build_probability_table(&a).unwrap(), build_probability_table(&b).unwrap());
        let spec = GridSpec::new(4, 4, 100.0);
        let s = first_piece(&a, spec.node_id(0, 0), spec.node_id(0, 1));
        let d = first_piece(&a, spec.node_id(3, 2), spec.node_id(3, 3));
        let params = SpoofSearchParams::default();
        let pa = generate_secure_path(&a, &ta, s, d, &params).unwrap();
        let pb = generate_secure_path(&b, &tb, s, d, &params).unwrap();
        prop_assert_eq!(pa.vertices, pb.vertices);
        prop_assert_eq!(pa.score, pb.score);
    }
}

/// A jittered 4x4 grid whose roads have mixed speed limits, all multiplied
/// by `scale`.
fn speed_grid(seed: u64, scale: u32) -> RoadGraph {
    let spec = GridSpec::new(4, 4, 100.0);
    let mut rng = TestRng::new(seed);
    let mut b = NetworkBuilder::equator();
    for r in 0..4 {
        for c in 0..4 {
            b.node(
                c as f64 * 100.0 + rng.range(-8.0, 8.0),
                r as f64 * 100.0 + rng.range(-8.0, 8.0),
            );
        }
    }
    let mut lines: Vec<Vec<i64>> = (0..4).map(|r| (0..4).map(|c| spec.node_id(r, c)).collect()).collect();
    lines.extend((0..4).map(|c| (0..4).map(|r| spec.node_id(r, c)).collect::<Vec<_>>()));
    for line in lines {
        let speed = (10 + 10 * rng.below(5) as u32) * scale;
        b.way(&line, &[("highway", "residential"), ("maxspeed", &speed.to_string())]);
    }
    build_graph(&b.finish()).unwrap()
}

fn first_piece(g: &RoadGraph, from: i64, to: i64) -> VertexId {
    g.segments()
        .iter()
        .find(|s| s.start_node == from && s.end_node == to)
        .unwrap()
        .id
}
