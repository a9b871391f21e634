//! Synthetic road networks laid out in a local metric frame.
//!
//! Used by tests, benchmarks and the CLI's fixture mode. Coordinates are
//! given in meters east (`x`) and north (`y`) of an origin.

use crate::geo::{GeoPoint, LocalFrame};
use crate::osm::{OsmData, RawNode, RawWay, Tags};

/// Incrementally assembles an [`OsmData`] document.
#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    frame: LocalFrame,
    data: OsmData,
    next_way: i64,
}

impl NetworkBuilder {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            frame: LocalFrame::new(origin),
            data: OsmData::default(),
            next_way: 1,
        }
    }

    /// Builder anchored at (0, 0).
    pub fn equator() -> Self {
        Self::new(GeoPoint::new(0.0, 0.0).expect("valid origin"))
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    /// Adds a node at `(x, y)` meters and returns its id.
    pub fn node(&mut self, x: f64, y: f64) -> i64 {
        let id = self.data.nodes.len() as i64 + 1;
        self.data.nodes.push(RawNode {
            id,
            point: self.frame.unproject(x, y),
            tags: Tags::new(),
        });
        id
    }

    pub fn tag_node(&mut self, id: i64, key: &str, value: &str) {
        if let Some(n) = self.data.nodes.iter_mut().find(|n| n.id == id) {
            n.tags.insert(key.into(), value.into());
        }
    }

    pub fn way(&mut self, refs: &[i64], tags: &[(&str, &str)]) -> i64 {
        let id = self.next_way;
        self.next_way += 1;
        self.data.ways.push(RawWay {
            id,
            node_refs: refs.to_vec(),
            tags: tags.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect(),
        });
        id
    }

    pub fn road(&mut self, refs: &[i64], highway: &str) -> i64 {
        self.way(refs, &[("highway", highway)])
    }

    pub fn oneway(&mut self, refs: &[i64], highway: &str) -> i64 {
        self.way(refs, &[("highway", highway), ("oneway", "yes")])
    }

    pub fn finish(self) -> OsmData {
        self.data
    }
}

/// A rectangular street grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub origin: GeoPoint,
    /// Maximum node displacement in meters along each axis.
    pub jitter_m: f64,
    pub seed: u64,
    pub highway: String,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, spacing_m: f64) -> Self {
        Self {
            rows,
            cols,
            spacing_m,
            origin: GeoPoint::new(0.0, 0.0).expect("valid origin"),
            jitter_m: 0.0,
            seed: 0,
            highway: "residential".into(),
        }
    }

    pub fn with_jitter(mut self, jitter_m: f64, seed: u64) -> Self {
        self.jitter_m = jitter_m;
        self.seed = seed;
        self
    }

    pub fn with_origin(mut self, origin: GeoPoint) -> Self {
        self.origin = origin;
        self
    }

    /// Node id at `(row, col)` in the document produced by [`grid_network`].
    pub fn node_id(&self, row: usize, col: usize) -> i64 {
        (row * self.cols + col) as i64 + 1
    }
}

/// splitmix64 step, used for reproducible jitter without an RNG dependency.
fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Builds a grid with one way per row and one per column, all two-way.
pub fn grid_network(spec: &GridSpec) -> OsmData {
    let mut b = NetworkBuilder::new(spec.origin);
    let mut state = spec.seed;
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let (mut x, mut y) = (c as f64 * spec.spacing_m, r as f64 * spec.spacing_m);
            if spec.jitter_m > 0.0 {
                x += (2.0 * splitmix(&mut state) - 1.0) * spec.jitter_m;
                y += (2.0 * splitmix(&mut state) - 1.0) * spec.jitter_m;
            }
            b.node(x, y);
        }
    }
    for r in 0..spec.rows {
        let refs: Vec<i64> = (0..spec.cols).map(|c| spec.node_id(r, c)).collect();
        b.road(&refs, &spec.highway);
    }
    for c in 0..spec.cols {
        let refs: Vec<i64> = (0..spec.rows).map(|r| spec.node_id(r, c)).collect();
        b.road(&refs, &spec.highway);
    }
    b.finish()
}
