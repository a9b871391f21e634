//! Fixtures shared by the benchmarks.

use std::path::{Path, PathBuf};

use roadspoof_core::geo::GeoPoint;
use roadspoof_core::graph::{build_graph, RoadGraph, VertexId};
use roadspoof_core::osm::parse_osm_file;
use roadspoof_core::synthetic::{grid_network, GridSpec};
use roadspoof_core::table::{build_probability_table, ProbabilityTable};

pub struct Fixture {
    pub graph: RoadGraph,
    pub table: ProbabilityTable,
    pub source: VertexId,
    pub dest: VertexId,
}

impl Fixture {
    fn new(graph: RoadGraph, source: VertexId, dest: VertexId) -> Self {
        let table = build_probability_table(&graph).expect("non-empty graph");
        Self {
            graph,
            table,
            source,
            dest,
        }
    }
}

pub fn helsinki_osm() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/helsinki_center.osm")
}

/// The Helsinki city-centre extract with a route of roughly 700 m.
pub fn helsinki() -> Fixture {
    let data = parse_osm_file(&helsinki_osm()).expect("bundled extract parses");
    let graph = build_graph(&data).expect("bundled extract builds");
    let s = graph.nearest_vertex(GeoPoint::new(60.1665, 24.9410).unwrap());
    let d = graph.nearest_vertex(GeoPoint::new(60.1712, 24.9475).unwrap());
    Fixture::new(graph, s, d)
}

/// A jittered `n` x `n` grid with a corner-to-corner route.
pub fn grid(n: usize) -> Fixture {
    let spec = GridSpec::new(n, n, 120.0).with_jitter(3.0, 7);
    let graph = build_graph(&grid_network(&spec)).expect("grid builds");
    let piece = |a: i64, b: i64| {
        graph
            .segments()
            .iter()
            .find(|s| s.start_node == a && s.end_node == b)
            .expect("grid piece")
            .id
    };
    let s = piece(spec.node_id(0, 0), spec.node_id(0, 1));
    let d = piece(spec.node_id(n - 2, n - 1), spec.node_id(n - 1, n - 1));
    Fixture::new(graph, s, d)
}
