//! Route selection against the attack: pick the path whose signature is
//! rarest, then audit how many escape routes remain.

use serde::{Deserialize, Serialize};

use crate::escape::{generate_escape_paths, EscapeParams};
use crate::geo::geo_distance;
use crate::graph::{RoadGraph, VertexId};
use crate::spoof::{search_paths, PathCandidate, Ranking, SearchError, SpoofSearchParams};
use crate::table::ProbabilityTable;

/// The lowest-scoring route from `s` to `d` among those the attack search
/// would consider. `params.n_paths` is ignored.
pub fn generate_secure_path(
    graph: &RoadGraph,
    table: &ProbabilityTable,
    s: VertexId,
    d: VertexId,
    params: &SpoofSearchParams,
) -> Result<PathCandidate, SearchError> {
    let params = SpoofSearchParams { n_paths: 1, ..*params };
    let mut best = search_paths(graph, table, s, d, &params, Ranking::Ascending)?;
    Ok(best.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurePathReport {
    pub path: PathCandidate,
    pub residual_escapes: usize,
    /// Meters from the path's destination to the farthest escape
    /// destination.
    pub residual_displacement: f64,
    pub truncated: bool,
}

/// Runs the escape search on `path` and summarizes what is left.
pub fn audit_secure_path(
    graph: &RoadGraph,
    path: &PathCandidate,
    params: &EscapeParams,
) -> Result<SecurePathReport, SearchError> {
    let escapes = generate_escape_paths(graph, path, params)?;
    let intended = graph.segment(path.destination()).end();
    let residual_displacement = escapes
        .paths
        .iter()
        .map(|p| geo_distance(graph.segment(p.destination()).end(), intended))
        .fold(0.0, f64::max);
    Ok(SecurePathReport {
        path: path.clone(),
        residual_escapes: escapes.count(),
        residual_displacement,
        truncated: escapes.truncated,
    })
}
