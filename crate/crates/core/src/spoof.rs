//! Spoofed-route search: pruned depth-first enumeration of source to
//! destination paths ranked by how common their curvature/turn combinations
//! are in the network.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{geo_distance, EARTH_RADIUS_M};
use crate::graph::{GraphError, RoadGraph, VertexId};
use crate::table::ProbabilityTable;

/// Relative tolerance applied to distance comparisons so a path is never
/// rejected by its own rounding error.
pub const DISTANCE_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no path between {from} and {to}")]
    NoPath { from: VertexId, to: VertexId },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("not a valid path in the graph")]
    InvalidPath,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCandidate {
    pub vertices: Vec<VertexId>,
    pub score: f64,
    /// Meters.
    pub total_distance: f64,
    pub turn_count: usize,
}

impl PathCandidate {
    /// Wraps a vertex sequence, deriving distance and turn count.
    pub fn new(graph: &RoadGraph, vertices: Vec<VertexId>, score: f64, turn_threshold: f64) -> Self {
        let total_distance = graph.path_length(&vertices);
        let turn_count = vertices
            .windows(2)
            .filter(|w| {
                graph
                    .connection(w[0], w[1])
                    .is_some_and(|c| c.turn_angle.abs() > turn_threshold)
            })
            .count();
        Self {
            vertices,
            score,
            total_distance,
            turn_count,
        }
    }

    pub fn source(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn destination(&self) -> VertexId {
        *self.vertices.last().expect("paths are non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpoofSearchParams {
    /// Number of paths kept; `usize::MAX` keeps all.
    pub n_paths: usize,
    /// Allowed detour relative to the fastest route; may be infinite.
    pub distance_factor: f64,
    /// Meters added around the fastest route's bounding box; infinite
    /// disables the box.
    pub bbox_padding: f64,
    /// Connections sharper than this (degrees) count as turns in reports.
    pub turn_threshold: f64,
}

impl Default for SpoofSearchParams {
    fn default() -> Self {
        Self {
            n_paths: 100,
            distance_factor: 1.2,
            bbox_padding: 1000.0,
            turn_threshold: 30.0,
        }
    }
}

impl SpoofSearchParams {
    /// Parameters with every filter disabled.
    pub fn unfiltered() -> Self {
        Self {
            n_paths: usize::MAX,
            distance_factor: f64::INFINITY,
            bbox_padding: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.n_paths < 1 {
            return Err(SearchError::InvalidParams("n_paths must be at least 1".into()));
        }
        if !(self.distance_factor >= 1.0) {
            return Err(SearchError::InvalidParams("distance_factor must be >= 1".into()));
        }
        if !(self.bbox_padding >= 0.0) {
            return Err(SearchError::InvalidParams("bbox_padding must be >= 0".into()));
        }
        if !(self.turn_threshold >= 0.0 && self.turn_threshold.is_finite()) {
            return Err(SearchError::InvalidParams(
                "turn_threshold must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Score of a path: product of the table probabilities of each
/// (curvature, turn) pair along it, with turn 0 for the last segment.
pub fn path_score(graph: &RoadGraph, table: &ProbabilityTable, vertices: &[VertexId]) -> f64 {
    let mut score = 1.0;
    for w in vertices.windows(2) {
        let theta = graph.connection(w[0], w[1]).map(|c| c.turn_angle).unwrap_or(f64::NAN);
        if theta.is_nan() {
            return 0.0;
        }
        score *= table.probability(graph.segment(w[0]).curvature, theta);
    }
    match vertices.last() {
        Some(&last) => score * table.probability(graph.segment(last).curvature, 0.0),
        None => 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry(f64);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time.
        other.0.total_cmp(&self.0)
    }
}

/// Minimum travel time from the start of each vertex to the end of `d`.
fn reverse_times(graph: &RoadGraph, d: VertexId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[d.index()] = graph.segment(d).travel_time();
    heap.push((HeapEntry(dist[d.index()]), std::cmp::Reverse(d)));
    while let Some((HeapEntry(t), std::cmp::Reverse(v))) = heap.pop() {
        if t > dist[v.index()] {
            continue;
        }
        for c in graph.incoming(v) {
            let nt = t + graph.segment(c.from).travel_time();
            if nt < dist[c.from.index()] {
                dist[c.from.index()] = nt;
                heap.push((HeapEntry(nt), std::cmp::Reverse(c.from)));
            }
        }
    }
    dist
}

/// Fastest route from `s` to `d` by length over speed limit. Among equally
/// fast routes the lexicographically smallest vertex sequence wins. The
/// returned candidate is unscored (score 1).
pub fn shortest_time_path(graph: &RoadGraph, s: VertexId, d: VertexId) -> Result<PathCandidate, SearchError> {
    graph.check_vertex(s)?;
    graph.check_vertex(d)?;
    let remaining = reverse_times(graph, d);
    let best = remaining[s.index()];
    if !best.is_finite() {
        return Err(SearchError::NoPath { from: s, to: d });
    }
    let bound = best * (1.0 + DISTANCE_SLACK);
    let mut path = vec![s];
    let mut seen = vec![false; graph.vertex_count()];
    seen[s.index()] = true;
    let mut elapsed = graph.segment(s).travel_time();
    let mut at = s;
    while at != d {
        let next = graph
            .outgoing(at)
            .map(|c| c.to)
            .find(|&v| !seen[v.index()] && elapsed + remaining[v.index()] <= bound)
            .ok_or(SearchError::NoPath { from: s, to: d })?;
        seen[next.index()] = true;
        elapsed += graph.segment(next).travel_time();
        path.push(next);
        at = next;
    }
    Ok(PathCandidate::new(
        graph,
        path,
        1.0,
        SpoofSearchParams::default().turn_threshold,
    ))
}

/// Axis-aligned latitude/longitude rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    /// Box around a path's geometry, padded by `padding` meters converted
    /// to degrees at the box's mid-latitude.
    pub fn around_path(graph: &RoadGraph, vertices: &[VertexId], padding: f64) -> Self {
        let pts = graph.path_geometry(vertices);
        let mut b = BoundingBox {
            min_lat: f64::INFINITY,
            max_lat: f64::NEG_INFINITY,
            min_lon: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
        };
        for p in &pts {
            b.min_lat = b.min_lat.min(p.lat());
            b.max_lat = b.max_lat.max(p.lat());
            b.min_lon = b.min_lon.min(p.lon());
            b.max_lon = b.max_lon.max(p.lon());
        }
        let dlat = (padding / EARTH_RADIUS_M).to_degrees();
        let mid = ((b.min_lat + b.max_lat) / 2.0).to_radians();
        let dlon = dlat / mid.cos().max(1e-12);
        b.min_lat -= dlat;
        b.max_lat += dlat;
        b.min_lon -= dlon;
        b.max_lon += dlon;
        b
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lat..=self.max_lat).contains(&lat) && (self.min_lon..=self.max_lon).contains(&lon)
    }
}

/// The distance and bounding-box filters for one source/destination pair.
#[derive(Debug, Clone)]
pub struct SearchScope {
    pub fastest: PathCandidate,
    /// Maximum allowed `d(prefix) + d(end, destination)`.
    pub distance_limit: f64,
    pub bbox: Option<BoundingBox>,
    destination: VertexId,
    in_box: Vec<bool>,
    to_destination: Vec<f64>,
}

impl SearchScope {
    pub fn new(graph: &RoadGraph, s: VertexId, d: VertexId, params: &SpoofSearchParams) -> Result<Self, SearchError> {
        params.validate()?;
        let fastest = shortest_time_path(graph, s, d)?;
        let distance_limit = params.distance_factor * fastest.total_distance * (1.0 + DISTANCE_SLACK);
        let bbox = params
            .bbox_padding
            .is_finite()
            .then(|| BoundingBox::around_path(graph, &fastest.vertices, params.bbox_padding));
        let in_box = graph
            .segments()
            .iter()
            .map(|seg| match &bbox {
                Some(b) => seg.geometry.points().iter().all(|p| b.contains(p.lat(), p.lon())),
                None => true,
            })
            .collect();
        let target = graph.segment(d).end();
        let to_destination = graph
            .segments()
            .iter()
            .map(|seg| {
                if seg.id == d {
                    0.0
                } else {
                    geo_distance(seg.end(), target)
                }
            })
            .collect();
        Ok(Self {
            fastest,
            distance_limit,
            bbox,
            destination: d,
            in_box,
            to_destination,
        })
    }

    pub fn destination(&self) -> VertexId {
        self.destination
    }

    pub fn in_box(&self, v: VertexId) -> bool {
        self.in_box[v.index()]
    }

    /// Whether a prefix of length `distance` ending at `v` may still reach
    /// the destination within the limit.
    pub fn admits(&self, v: VertexId, distance: f64) -> bool {
        self.in_box[v.index()] && distance + self.to_destination[v.index()] <= self.distance_limit
    }

    /// Re-checks a complete path against every filter.
    pub fn admits_path(&self, graph: &RoadGraph, vertices: &[VertexId]) -> bool {
        let mut distance = 0.0;
        vertices.iter().all(|&v| {
            distance += graph.segment(v).length;
            self.admits(v, distance)
        })
    }
}

/// Direction of ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ranking {
    /// Most common signatures first; prunes prefixes that cannot reach the
    /// current top N.
    Descending,
    /// Rarest signatures first; no prefix pruning.
    Ascending,
}

#[derive(Debug, Clone)]
struct Ranked {
    score: f64,
    vertices: Vec<VertexId>,
    ranking: Ranking,
}

impl Ranked {
    /// `Less` means `self` ranks ahead of `other`.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        let by_score = match self.ranking {
            Ranking::Descending => other.score.total_cmp(&self.score),
            Ranking::Ascending => self.score.total_cmp(&other.score),
        };
        by_score.then_with(|| self.vertices.cmp(&other.vertices))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other).is_eq()
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    /// Worst-ranked entry is the heap maximum.
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

struct TopN {
    capacity: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopN {
    fn offer(&mut self, entry: Ranked) {
        if self.heap.len() < self.capacity {
            self.heap.push(entry);
        } else if let Some(worst) = self.heap.peek() {
            if entry.rank_cmp(worst).is_lt() {
                self.heap.pop();
                self.heap.push(entry);
            }
        }
    }

    /// Score below which a descending search can stop extending a prefix.
    fn floor(&self) -> f64 {
        if self.heap.len() < self.capacity {
            f64::NEG_INFINITY
        } else {
            self.heap.peek().map_or(f64::NEG_INFINITY, |w| w.score)
        }
    }

    fn into_sorted(self) -> Vec<Ranked> {
        self.heap.into_sorted_vec()
    }
}

struct Frame {
    vertex: VertexId,
    next_edge: usize,
    score: f64,
    distance: f64,
}

/// Runs the filtered depth-first search and returns the top `n_paths`
/// under `ranking`.
pub fn search_paths(
    graph: &RoadGraph,
    table: &ProbabilityTable,
    s: VertexId,
    d: VertexId,
    params: &SpoofSearchParams,
    ranking: Ranking,
) -> Result<Vec<PathCandidate>, SearchError> {
    let scope = SearchScope::new(graph, s, d, params)?;
    let mut top = TopN {
        capacity: params.n_paths,
        heap: BinaryHeap::new(),
    };
    let prune = ranking == Ranking::Descending;
    let mut on_path = vec![false; graph.vertex_count()];
    let mut path = vec![s];
    let mut stack = Vec::new();
    let start_distance = graph.segment(s).length;

    if scope.admits(s, start_distance) {
        if s == d {
            let score = path_score(graph, table, &path);
            top.offer(Ranked {
                score,
                vertices: path.clone(),
                ranking,
            });
        } else {
            on_path[s.index()] = true;
            stack.push(Frame {
                vertex: s,
                next_edge: 0,
                score: 1.0,
                distance: start_distance,
            });
        }
    }

    while let Some(frame) = stack.last_mut() {
        let Some(conn) = graph.outgoing(frame.vertex).nth(frame.next_edge) else {
            on_path[frame.vertex.index()] = false;
            stack.pop();
            path.pop();
            continue;
        };
        frame.next_edge += 1;
        let w = conn.to;
        if on_path[w.index()] {
            continue;
        }
        let distance = frame.distance + graph.segment(w).length;
        if !scope.admits(w, distance) {
            continue;
        }
        let score = frame.score * table.probability(graph.segment(frame.vertex).curvature, conn.turn_angle);
        if prune && score < top.floor() {
            continue;
        }
        path.push(w);
        if w == d {
            let final_score = score * table.probability(graph.segment(d).curvature, 0.0);
            top.offer(Ranked {
                score: final_score,
                vertices: path.clone(),
                ranking,
            });
            path.pop();
            continue;
        }
        on_path[w.index()] = true;
        stack.push(Frame {
            vertex: w,
            next_edge: 0,
            score,
            distance,
        });
    }

    let ranked = top.into_sorted();
    if ranked.is_empty() {
        return Err(SearchError::NoPath { from: s, to: d });
    }
    Ok(ranked
        .into_iter()
        .map(|r| PathCandidate::new(graph, r.vertices, r.score, params.turn_threshold))
        .collect())
}

/// Most plausible routes from `s` to `d`, highest score first.
pub fn generate_spoofed_paths(
    graph: &RoadGraph,
    table: &ProbabilityTable,
    s: VertexId,
    d: VertexId,
    params: &SpoofSearchParams,
) -> Result<Vec<PathCandidate>, SearchError> {
    search_paths(graph, table, s, d, params, Ranking::Descending)
}
