//! Directed road graph whose vertices are atomic segments (road between two
//! intersections, one per travel direction) and whose edges are the
//! connections between them at intersections.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, GeoError, GeoPoint, Polyline};
use crate::osm::{OsmData, RawWay};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("inconsistent graph: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Dense vertex identifier, assigned canonically by [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoadClass {
    Motorway,
    Trunk,
    Primary,
    Secondary,
    Tertiary,
    Unclassified,
    Residential,
    LivingStreet,
    Service,
    Other,
}

/// Highway values that never carry vehicles.
const EXCLUDED_HIGHWAYS: &[&str] = &[
    "footway",
    "path",
    "cycleway",
    "steps",
    "pedestrian",
    "bridleway",
    "corridor",
    "elevator",
    "platform",
    "proposed",
    "construction",
    "abandoned",
];

impl RoadClass {
    /// Maps an OSM `highway` value to a class; `None` for non-vehicular ways.
    pub fn from_highway(value: &str) -> Option<Self> {
        if EXCLUDED_HIGHWAYS.contains(&value) {
            return None;
        }
        let base = value.strip_suffix("_link").unwrap_or(value);
        Some(match base {
            "motorway" => Self::Motorway,
            "trunk" => Self::Trunk,
            "primary" => Self::Primary,
            "secondary" => Self::Secondary,
            "tertiary" => Self::Tertiary,
            "unclassified" => Self::Unclassified,
            "residential" => Self::Residential,
            "living_street" => Self::LivingStreet,
            "service" => Self::Service,
            _ => Self::Other,
        })
    }

    /// Default speed limit in m/s.
    pub fn default_speed(self) -> f64 {
        match self {
            Self::Motorway => 29.1,
            Self::Trunk => 24.6,
            Self::Primary => 20.1,
            Self::Secondary => 17.9,
            Self::Tertiary => 15.6,
            Self::Unclassified | Self::Residential | Self::Other => 11.2,
            Self::LivingStreet | Self::Service => 6.7,
        }
    }
}

/// Parses an OSM `maxspeed` value into m/s. Unitless numbers are km/h.
pub fn parse_maxspeed(value: &str) -> Option<f64> {
    let first = value.split(';').next()?.trim();
    let digits_end = first
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(first.len());
    let number: f64 = first[..digits_end].parse().ok()?;
    if number <= 0.0 {
        return None;
    }
    let unit = first[digits_end..].trim();
    let factor = match unit {
        "" | "km/h" | "kmh" | "kph" => 1000.0 / 3600.0,
        "mph" => 1609.344 / 3600.0,
        "knots" => 1852.0 / 3600.0,
        _ => return None,
    };
    Some(number * factor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSegment {
    pub id: VertexId,
    pub way_id: i64,
    pub start_node: i64,
    pub end_node: i64,
    pub geometry: Polyline,
    /// Meters.
    pub length: f64,
    /// Meters per second.
    pub speed_limit: f64,
    /// Mean bearing deviation in degrees.
    pub curvature: f64,
    pub road_class: RoadClass,
    /// The same piece of road travelled the other way, if allowed.
    pub reverse: Option<VertexId>,
    /// Bearings of consecutive geometry points.
    pub bearings: Vec<f64>,
}

impl AtomicSegment {
    pub fn start(&self) -> GeoPoint {
        self.geometry.first()
    }

    pub fn end(&self) -> GeoPoint {
        self.geometry.last()
    }

    pub fn travel_time(&self) -> f64 {
        self.length / self.speed_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub from: VertexId,
    pub to: VertexId,
    /// Degrees in `(-180, 180]`, clockwise positive.
    pub turn_angle: f64,
}

/// The serializable content of a [`RoadGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphParts {
    pub segments: Vec<AtomicSegment>,
    pub connections: Vec<Connection>,
}

#[derive(Debug, Clone)]
pub struct RoadGraph {
    segments: Vec<AtomicSegment>,
    connections: Vec<Connection>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    index: EndpointIndex,
}

impl RoadGraph {
    /// Validates parts and builds adjacency and the spatial index.
    pub fn from_parts(parts: GraphParts) -> Result<Self, GraphError> {
        let GraphParts {
            segments,
            mut connections,
        } = parts;
        if segments.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        for (i, s) in segments.iter().enumerate() {
            if s.id.index() != i {
                return Err(GraphError::Inconsistent(format!(
                    "segment at position {i} has id {}",
                    s.id
                )));
            }
        }
        connections.sort_by_key(|c| (c.from, c.to));
        let n = segments.len();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (ci, c) in connections.iter().enumerate() {
            if c.from.index() >= n {
                return Err(GraphError::UnknownVertex(c.from));
            }
            if c.to.index() >= n {
                return Err(GraphError::UnknownVertex(c.to));
            }
            if segments[c.from.index()].end() != segments[c.to.index()].start() {
                return Err(GraphError::Inconsistent(format!(
                    "connection {} -> {} is not geometrically adjacent",
                    c.from, c.to
                )));
            }
            outgoing[c.from.index()].push(ci);
            incoming[c.to.index()].push(ci);
        }
        let index = EndpointIndex::new(&segments);
        Ok(Self {
            segments,
            connections,
            outgoing,
            incoming,
            index,
        })
    }

    pub fn to_parts(&self) -> GraphParts {
        GraphParts {
            segments: self.segments.clone(),
            connections: self.connections.clone(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.segments.len()
    }

    pub fn edge_count(&self) -> usize {
        self.connections.len()
    }

    pub fn segments(&self) -> &[AtomicSegment] {
        &self.segments
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn segment(&self, v: VertexId) -> &AtomicSegment {
        &self.segments[v.index()]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.segments.len()
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    /// Outgoing connections of `v`, ordered by target id.
    pub fn outgoing(&self, v: VertexId) -> impl Iterator<Item = &Connection> + '_ {
        self.outgoing[v.index()].iter().map(|&ci| &self.connections[ci])
    }

    pub fn incoming(&self, v: VertexId) -> impl Iterator<Item = &Connection> + '_ {
        self.incoming[v.index()].iter().map(|&ci| &self.connections[ci])
    }

    pub fn connection(&self, from: VertexId, to: VertexId) -> Option<&Connection> {
        self.outgoing(from).find(|c| c.to == to)
    }

    /// Vertex whose start point is closest to `p`; ties go to the smaller id.
    pub fn nearest_vertex(&self, p: GeoPoint) -> VertexId {
        self.index.nearest(&self.segments, p)
    }

    /// Whether `vertices` is a simple path along existing connections.
    pub fn is_simple_path(&self, vertices: &[VertexId]) -> bool {
        if vertices.is_empty() || vertices.iter().any(|v| !self.contains(*v)) {
            return false;
        }
        let mut seen = vec![false; self.segments.len()];
        for v in vertices {
            if std::mem::replace(&mut seen[v.index()], true) {
                return false;
            }
        }
        vertices.windows(2).all(|w| self.connection(w[0], w[1]).is_some())
    }

    /// Sum of segment lengths along `vertices`.
    pub fn path_length(&self, vertices: &[VertexId]) -> f64 {
        vertices.iter().map(|&v| self.segment(v).length).sum()
    }

    /// Concatenated geometry of a path.
    pub fn path_geometry(&self, vertices: &[VertexId]) -> Vec<GeoPoint> {
        let mut pts: Vec<GeoPoint> = Vec::new();
        for &v in vertices {
            let g = self.segment(v).geometry.points();
            let skip = usize::from(pts.last() == Some(&g[0]));
            pts.extend_from_slice(&g[skip..]);
        }
        pts
    }

    /// Histogram of rounded absolute turn angles over connections whose
    /// magnitude exceeds `min_turn`.
    pub fn turn_histogram(&self, min_turn: f64) -> BTreeMap<i32, usize> {
        let mut hist = BTreeMap::new();
        for c in &self.connections {
            if c.turn_angle.abs() > min_turn {
                *hist.entry(c.turn_angle.abs().round() as i32).or_insert(0) += 1;
            }
        }
        hist
    }
}

/// Travel directions permitted on a way.
fn travel_directions(way: &RawWay) -> (bool, bool) {
    match way.tag("oneway") {
        Some("yes" | "true" | "1") => (true, false),
        Some("-1" | "reverse") => (false, true),
        Some("no" | "false" | "0") => (true, true),
        _ => {
            let roundabout = matches!(way.tag("junction"), Some("roundabout" | "circular"));
            let motorway = matches!(way.tag("highway"), Some("motorway" | "motorway_link"));
            (true, !(roundabout || motorway))
        }
    }
}

struct Piece {
    way_index: usize,
    start_node: i64,
    end_node: i64,
    points: Vec<GeoPoint>,
}

/// Splits ways into atomic pieces at intersections and builds the graph.
///
/// An intersection is a node shared by two or more distinct highway ways, or
/// a node a single way passes more than once. U-turns onto the reverse of
/// the same piece are not connected.
pub fn build_graph(data: &OsmData) -> Result<RoadGraph, GraphError> {
    let nodes = data.node_index();
    let mut ways: Vec<(&RawWay, RoadClass)> = data
        .ways
        .iter()
        .filter(|w| w.node_refs.len() >= 2)
        .filter_map(|w| {
            let class = RoadClass::from_highway(w.tag("highway")?)?;
            // Ways referencing unknown nodes are rejected by the parser; a
            // hand-built OsmData may still contain them.
            w.node_refs.iter().all(|r| nodes.contains_key(r)).then_some((w, class))
        })
        .collect();
    ways.sort_by_key(|(w, _)| w.id);

    let mut way_count: HashMap<i64, usize> = HashMap::new();
    let mut repeated: HashMap<i64, bool> = HashMap::new();
    for (w, _) in &ways {
        let mut seen: HashMap<i64, usize> = HashMap::new();
        for &r in &w.node_refs {
            *seen.entry(r).or_insert(0) += 1;
        }
        for (r, k) in seen {
            *way_count.entry(r).or_insert(0) += 1;
            if k > 1 {
                repeated.insert(r, true);
            }
        }
    }
    let is_split = |r: i64| way_count.get(&r).copied().unwrap_or(0) >= 2 || repeated.contains_key(&r);

    let mut pieces = Vec::new();
    for (wi, (w, _)) in ways.iter().enumerate() {
        let refs = &w.node_refs;
        let mut start = 0;
        for i in 1..refs.len() {
            if i == refs.len() - 1 || is_split(refs[i]) {
                push_piece(&mut pieces, wi, &refs[start..=i], &nodes);
                start = i;
            }
        }
    }

    let mut segments: Vec<AtomicSegment> = Vec::new();
    for piece in &pieces {
        let (way, class) = ways[piece.way_index];
        let (fwd, bwd) = travel_directions(way);
        let speed = way
            .tag("maxspeed")
            .and_then(parse_maxspeed)
            .unwrap_or_else(|| class.default_speed());
        let line = Polyline::new(piece.points.clone())?;
        let make = |id: u32, line: Polyline, start_node, end_node| -> Result<AtomicSegment, GraphError> {
            Ok(AtomicSegment {
                id: VertexId(id),
                way_id: way.id,
                start_node,
                end_node,
                length: line.length(),
                speed_limit: speed,
                curvature: geo::segment_curvature(&line)?,
                road_class: class,
                reverse: None,
                bearings: line.bearings(),
                geometry: line,
            })
        };
        let mut forward_id = None;
        if fwd {
            let id = segments.len() as u32;
            segments.push(make(id, line.clone(), piece.start_node, piece.end_node)?);
            forward_id = Some(VertexId(id));
        }
        if bwd {
            let id = segments.len() as u32;
            segments.push(make(id, line.reversed(), piece.end_node, piece.start_node)?);
            if let Some(f) = forward_id {
                segments[f.index()].reverse = Some(VertexId(id));
                segments[id as usize].reverse = Some(f);
            }
        }
    }
    if segments.is_empty() {
        return Err(GraphError::EmptyGraph);
    }

    let mut ending_at: BTreeMap<i64, Vec<VertexId>> = BTreeMap::new();
    let mut starting_at: BTreeMap<i64, Vec<VertexId>> = BTreeMap::new();
    for s in &segments {
        ending_at.entry(s.end_node).or_default().push(s.id);
        starting_at.entry(s.start_node).or_default().push(s.id);
    }
    let mut connections = Vec::new();
    for (node, ins) in &ending_at {
        let Some(outs) = starting_at.get(node) else {
            continue;
        };
        for &a in ins {
            for &b in outs {
                let sa = &segments[a.index()];
                if a == b || sa.reverse == Some(b) {
                    continue;
                }
                let turn = geo::turn_angle(&sa.geometry, &segments[b.index()].geometry)?;
                connections.push(Connection {
                    from: a,
                    to: b,
                    turn_angle: turn,
                });
            }
        }
    }
    RoadGraph::from_parts(GraphParts { segments, connections })
}

fn push_piece(pieces: &mut Vec<Piece>, way_index: usize, refs: &[i64], nodes: &BTreeMap<i64, &crate::osm::RawNode>) {
    let mut pts: Vec<(i64, GeoPoint)> = Vec::with_capacity(refs.len());
    for &r in refs {
        let p = nodes[&r].point;
        if pts.last().map(|&(_, q)| q) != Some(p) {
            pts.push((r, p));
        }
    }
    if pts.len() < 2 {
        return;
    }
    let start_node = refs[0];
    let end_node = refs[refs.len() - 1];
    if pts[0].1 == pts[pts.len() - 1].1 {
        // A closed loop has no reference bearing; split it at its middle.
        if pts.len() < 3 {
            return;
        }
        let mid = pts.len() / 2;
        let (mid_node, _) = pts[mid];
        pieces.push(Piece {
            way_index,
            start_node,
            end_node: mid_node,
            points: pts[..=mid].iter().map(|&(_, p)| p).collect(),
        });
        pieces.push(Piece {
            way_index,
            start_node: mid_node,
            end_node,
            points: pts[mid..].iter().map(|&(_, p)| p).collect(),
        });
        return;
    }
    pieces.push(Piece {
        way_index,
        start_node,
        end_node,
        points: pts.into_iter().map(|(_, p)| p).collect(),
    });
}

/// Uniform grid over unit-sphere positions of segment start points.
///
/// Chord length is monotone in great-circle distance, so shell-by-shell
/// search terminates exactly.
#[derive(Debug, Clone)]
struct EndpointIndex {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<VertexId>>,
    lo: (i64, i64, i64),
    hi: (i64, i64, i64),
}

const INDEX_CELL_M: f64 = 250.0;

fn unit_vector(p: GeoPoint) -> [f64; 3] {
    let (phi, lam) = (p.lat().to_radians(), p.lon().to_radians());
    [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()]
}

impl EndpointIndex {
    fn new(segments: &[AtomicSegment]) -> Self {
        let cell = INDEX_CELL_M / geo::EARTH_RADIUS_M;
        let mut cells: HashMap<(i64, i64, i64), Vec<VertexId>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for s in segments {
            let k = Self::key(cell, unit_vector(s.start()));
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
            cells.entry(k).or_default().push(s.id);
        }
        Self { cell, cells, lo, hi }
    }

    fn key(cell: f64, v: [f64; 3]) -> (i64, i64, i64) {
        (
            (v[0] / cell).floor() as i64,
            (v[1] / cell).floor() as i64,
            (v[2] / cell).floor() as i64,
        )
    }

    fn nearest(&self, segments: &[AtomicSegment], p: GeoPoint) -> VertexId {
        let q = Self::key(self.cell, unit_vector(p));
        let outside = |v: i64, lo: i64, hi: i64| (lo - v).max(v - hi).max(0);
        let gap = outside(q.0, self.lo.0, self.hi.0)
            .max(outside(q.1, self.lo.1, self.hi.1))
            .max(outside(q.2, self.lo.2, self.hi.2));
        let mut best: Option<(f64, VertexId)> = None;
        let consider = |id: VertexId, best: &mut Option<(f64, VertexId)>| {
            let d = geo::geo_distance(p, segments[id.index()].start());
            match *best {
                Some((bd, bid)) if d > bd || (d == bd && id > bid) => {}
                _ => *best = Some((d, id)),
            }
        };
        if gap > 4 {
            for s in segments {
                consider(s.id, &mut best);
            }
            return best.expect("index is never empty").1;
        }
        let span = (self.hi.0 - self.lo.0)
            .max(self.hi.1 - self.lo.1)
            .max(self.hi.2 - self.lo.2)
            + gap
            + 1;
        for k in 0..=span {
            for dx in -k..=k {
                for dy in -k..=k {
                    let face = dx.abs() == k || dy.abs() == k;
                    let dzs: Vec<i64> = if face {
                        (-k..=k).collect()
                    } else if k == 0 {
                        vec![0]
                    } else {
                        vec![-k, k]
                    };
                    for dz in dzs {
                        if let Some(ids) = self.cells.get(&(q.0 + dx, q.1 + dy, q.2 + dz)) {
                            for &id in ids {
                                consider(id, &mut best);
                            }
                        }
                    }
                }
            }
            if let Some((bd, _)) = best {
                // anything beyond shell k lies at chord distance >= k * cell
                let chord = (k as f64 * self.cell).min(2.0);
                let bound = 2.0 * geo::EARTH_RADIUS_M * (chord / 2.0).asin();
                if bd + 1e-6 < bound {
                    break;
                }
            }
        }
        best.expect("index is never empty").1
    }
}
