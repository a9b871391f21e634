//! Escape-route search: every path from the spoofed route's source whose
//! signature an inertial sensor could not tell apart from the spoofed one.

use serde::{Deserialize, Serialize};

use crate::graph::{RoadGraph, VertexId};
use crate::signature::{
    curvature_similarity, fold_turn, leg_bearings, leg_distance, leg_ranges, open_leg_start, path_signature,
    PathSignature, SignatureParams, ThresholdSet, Turn,
};
use crate::spoof::{PathCandidate, SearchError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EscapeParams {
    pub thresholds: ThresholdSet,
    pub signature: SignatureParams,
    /// Stop after this many escape paths.
    pub max_paths: usize,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self {
            thresholds: ThresholdSet::DEFAULT,
            signature: SignatureParams::default(),
            max_paths: usize::MAX,
        }
    }
}

impl EscapeParams {
    pub fn with_thresholds(thresholds: ThresholdSet) -> Self {
        Self {
            thresholds,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        self.thresholds
            .validate()
            .map_err(|e| SearchError::InvalidParams(e.to_string()))?;
        let sig = &self.signature;
        if !(sig.turn_threshold >= 0.0 && sig.turn_threshold < 180.0) {
            return Err(SearchError::InvalidParams("turn_threshold must be in [0, 180)".into()));
        }
        if !(sig.min_leg >= 0.0 && sig.min_leg.is_finite()) {
            return Err(SearchError::InvalidParams("min_leg must be finite and >= 0".into()));
        }
        if sig.samples == 0 {
            return Err(SearchError::InvalidParams("samples must be at least 1".into()));
        }
        if self.max_paths == 0 {
            return Err(SearchError::InvalidParams("max_paths must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeSet {
    /// Signature of the spoofed path.
    pub signature: PathSignature,
    /// Matching paths in lexicographic vertex order; all scored 1.
    pub paths: Vec<PathCandidate>,
    /// True when the search stopped at `max_paths`.
    pub truncated: bool,
}

impl EscapeSet {
    pub fn count(&self) -> usize {
        self.paths.len()
    }

    pub fn destinations(&self) -> Vec<VertexId> {
        self.paths.iter().map(|p| p.destination()).collect()
    }
}

fn leg_matches(
    graph: &RoadGraph,
    reference: &PathSignature,
    vertices: &[VertexId],
    k: usize,
    range: (usize, usize),
    params: &EscapeParams,
) -> bool {
    let t = &params.thresholds;
    if !t.distance_matches(reference.leg_distances[k], leg_distance(graph, vertices, range)) {
        return false;
    }
    let bearings = leg_bearings(graph, vertices, range);
    curvature_similarity(&reference.leg_bearings[k], &bearings, params.signature.samples)
        .map(|c| t.curvature_matches(c))
        .unwrap_or(false)
}

/// Checks a path against a reference signature: same turn count, and every
/// turn angle, leg distance and leg curvature within tolerance.
pub fn signature_matches(
    graph: &RoadGraph,
    reference: &PathSignature,
    vertices: &[VertexId],
    params: &EscapeParams,
) -> bool {
    let sig = path_signature(graph, vertices, &params.signature);
    if sig.turn_count != reference.turn_count {
        return false;
    }
    let turns_ok = reference
        .turn_angles
        .iter()
        .zip(&sig.turn_angles)
        .all(|(&a, &b)| params.thresholds.turn_matches(a, b));
    turns_ok
        && sig
            .leg_ranges
            .iter()
            .enumerate()
            .all(|(k, &r)| leg_matches(graph, reference, vertices, k, r, params))
}

/// Whether `candidate` is a valid escape for `spoofed`.
pub fn is_valid_escape(graph: &RoadGraph, spoofed: &[VertexId], candidate: &[VertexId], params: &EscapeParams) -> bool {
    if candidate.first() != spoofed.first() || !graph.is_simple_path(candidate) {
        return false;
    }
    let reference = path_signature(graph, spoofed, &params.signature);
    signature_matches(graph, &reference, candidate, params)
}

/// Search state for one node of the depth-first walk.
#[derive(Clone)]
struct State {
    turns: Vec<Turn>,
    finalized: usize,
    open_distance: f64,
}

struct Search<'a> {
    graph: &'a RoadGraph,
    reference: &'a PathSignature,
    params: &'a EscapeParams,
    path: Vec<VertexId>,
    on_path: Vec<bool>,
    out: Vec<Vec<VertexId>>,
    truncated: bool,
}

impl Search<'_> {
    fn k(&self) -> usize {
        self.reference.turn_count
    }

    /// Checks turn `j` and the leg before it once the turn can no longer be
    /// folded.
    fn turn_ok(&self, turns: &[Turn], j: usize) -> bool {
        if j >= self.k() {
            return false;
        }
        if !self
            .params
            .thresholds
            .turn_matches(self.reference.turn_angles[j], turns[j].angle)
        {
            return false;
        }
        let start = if j == 0 { 0 } else { turns[j - 1].position + 1 };
        leg_matches(
            self.graph,
            self.reference,
            &self.path,
            j,
            (start, turns[j].position + 1),
            self.params,
        )
    }

    /// Applies the connection into the newest path vertex. Returns `None`
    /// when the branch is dead.
    fn step(&self, prev: &State, angle: f64) -> Option<State> {
        let sig = &self.params.signature;
        let m = self.path.len() - 2;
        let w = *self.path.last().expect("non-empty");
        let mut state = prev.clone();
        if angle.abs() > sig.turn_threshold {
            let open = state.open_distance;
            let pushed = fold_turn(&mut state.turns, angle, m, open, sig);
            state.finalized = state.finalized.min(state.turns.len());
            if pushed {
                state.open_distance = self.graph.segment(w).length;
            } else {
                let start = open_leg_start(&state.turns);
                state.open_distance = leg_distance(self.graph, &self.path, (start, self.path.len()));
            }
        } else {
            state.open_distance += self.graph.segment(w).length;
        }
        if state.turns.len() > state.finalized && state.open_distance >= sig.min_leg {
            if !self.turn_ok(&state.turns, state.finalized) {
                return None;
            }
            state.finalized += 1;
        }
        if state.turns.len() == state.finalized {
            let idx = state.turns.len();
            if idx > self.k() {
                return None;
            }
            if self
                .params
                .thresholds
                .distance_exceeded(self.reference.leg_distances[idx], state.open_distance)
            {
                return None;
            }
        }
        Some(state)
    }

    fn emits(&self, state: &State) -> bool {
        if state.turns.len() != self.k() {
            return false;
        }
        if state.turns.len() > state.finalized && !self.turn_ok(&state.turns, state.finalized) {
            return false;
        }
        let ranges = leg_ranges(&state.turns, self.path.len());
        let last = *ranges.last().expect("at least one leg");
        leg_matches(self.graph, self.reference, &self.path, self.k(), last, self.params)
    }

    /// Stores the current path; false once the cap is exceeded.
    fn record(&mut self) -> bool {
        if self.out.len() >= self.params.max_paths {
            self.truncated = true;
            return false;
        }
        self.out.push(self.path.clone());
        true
    }

    fn run(&mut self, source: VertexId) {
        let first = State {
            turns: Vec::new(),
            finalized: 0,
            open_distance: self.graph.segment(source).length,
        };
        self.path.push(source);
        self.on_path[source.index()] = true;
        if self
            .params
            .thresholds
            .distance_exceeded(self.reference.leg_distances[0], first.open_distance)
        {
            return;
        }
        if self.emits(&first) && !self.record() {
            return;
        }
        let mut stack: Vec<(State, usize)> = vec![(first, 0)];
        while let Some((state, next)) = stack.last_mut() {
            let at = *self.path.last().expect("non-empty");
            let Some(conn) = self.graph.outgoing(at).nth(*next) else {
                self.on_path[at.index()] = false;
                self.path.pop();
                stack.pop();
                continue;
            };
            *next += 1;
            let w = conn.to;
            if self.on_path[w.index()] {
                continue;
            }
            let prev = state.clone();
            self.path.push(w);
            match self.step(&prev, conn.turn_angle) {
                Some(s) => {
                    if self.emits(&s) && !self.record() {
                        return;
                    }
                    self.on_path[w.index()] = true;
                    stack.push((s, 0));
                }
                None => {
                    self.path.pop();
                }
            }
        }
    }
}

/// Enumerates every simple path from the spoofed path's source whose
/// signature matches the spoofed path within `params.thresholds`.
pub fn generate_escape_paths(
    graph: &RoadGraph,
    spoofed: &PathCandidate,
    params: &EscapeParams,
) -> Result<EscapeSet, SearchError> {
    params.validate()?;
    if !graph.is_simple_path(&spoofed.vertices) {
        return Err(SearchError::InvalidPath);
    }
    let reference = path_signature(graph, &spoofed.vertices, &params.signature);
    let mut search = Search {
        graph,
        reference: &reference,
        params,
        path: Vec::new(),
        on_path: vec![false; graph.vertex_count()],
        out: Vec::new(),
        truncated: false,
    };
    search.run(spoofed.source());
    let truncated = search.truncated;
    let paths = search
        .out
        .into_iter()
        .map(|v| PathCandidate::new(graph, v, 1.0, params.signature.turn_threshold))
        .collect();
    Ok(EscapeSet {
        signature: reference,
        paths,
        truncated,
    })
}
