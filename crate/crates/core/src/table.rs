//! Occurrence probabilities of (curvature, turn) combinations in a graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, RoadGraph};

/// Integer-degree key: `(rounded curvature, rounded turn angle)`.
pub type CurveTurn = (i32, i32);

pub fn curve_turn_key(curvature: f64, turn: f64) -> CurveTurn {
    (curvature.round() as i32, turn.round() as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    entries: BTreeMap<CurveTurn, f64>,
    counts: BTreeMap<CurveTurn, u64>,
    total: u64,
}

impl ProbabilityTable {
    /// Builds the table from raw observation counts.
    pub fn from_counts(counts: BTreeMap<CurveTurn, u64>) -> Result<Self, GraphError> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let entries = counts.iter().map(|(&k, &n)| (k, n as f64 / total as f64)).collect();
        Ok(Self { entries, counts, total })
    }

    /// Probability of a combination; unseen combinations have probability 0.
    pub fn probability(&self, curvature: f64, turn: f64) -> f64 {
        self.get(curve_turn_key(curvature, turn))
    }

    pub fn get(&self, key: CurveTurn) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<CurveTurn, f64> {
        &self.entries
    }

    pub fn count(&self, key: CurveTurn) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn total_observations(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One observation per connection `(s, s')`: the rounded curvature of `s`
/// and the rounded turn angle of the connection.
pub fn build_probability_table(graph: &RoadGraph) -> Result<ProbabilityTable, GraphError> {
    let mut counts: BTreeMap<CurveTurn, u64> = BTreeMap::new();
    for c in graph.connections() {
        let key = curve_turn_key(graph.segment(c.from).curvature, c.turn_angle);
        *counts.entry(key).or_insert(0) += 1;
    }
    ProbabilityTable::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::synthetic::{grid_network, GridSpec, NetworkBuilder};

    #[test]
    fn grid_table_matches_hand_counts() {
        let g = build_graph(&grid_network(&GridSpec::new(3, 3, 100.0))).unwrap();
        let t = build_probability_table(&g).unwrap();
        // 44 connections: straight-throughs 2 per boundary-edge node (4 nodes)
        // and 4 at the center = 12; the remaining 32 split evenly into left
        // and right turns.
        assert_eq!(t.total_observations(), 44);
        let keys: Vec<CurveTurn> = t.entries().keys().copied().collect();
        assert_eq!(keys, vec![(0, -90), (0, 0), (0, 90)]);
        assert_eq!(t.count((0, 0)), 12);
        assert_eq!(t.count((0, 90)), 16);
        assert_eq!(t.count((0, -90)), 16);
        assert!((t.get((0, 0)) - 12.0 / 44.0).abs() < 1e-15);
        let mass: f64 = t.entries().values().sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_edge_graph() {
        let mut b = NetworkBuilder::equator();
        let n1 = b.node(0.0, 0.0);
        let n2 = b.node(0.0, 100.0);
        let n3 = b.node(0.0, 200.0);
        b.oneway(&[n1, n2], "residential");
        b.oneway(&[n2, n3], "residential");
        let g = build_graph(&b.finish()).unwrap();
        let t = build_probability_table(&g).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get((0, 0)), 1.0);
    }

    #[test]
    fn no_connections_is_empty() {
        let mut b = NetworkBuilder::equator();
        let n1 = b.node(0.0, 0.0);
        let n2 = b.node(0.0, 100.0);
        b.oneway(&[n1, n2], "residential");
        let g = build_graph(&b.finish()).unwrap();
        assert!(matches!(build_probability_table(&g), Err(GraphError::EmptyGraph)));
    }
}
