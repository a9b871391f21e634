//! Path signatures as an inertial sensor perceives them: per-leg distances,
//! per-leg bearing profiles and the turn angles between legs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{wrap_signed, GeoError};
use crate::graph::{RoadGraph, VertexId};

/// Extra angular tolerance (degrees) so that geometrically congruent routes
/// match under zero thresholds despite floating-point noise.
pub const ANGLE_SLACK_DEG: f64 = 1e-4;
/// Relative slack on leg-distance windows, for the same reason.
pub const DISTANCE_WINDOW_SLACK: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("tolerances must be finite and non-negative")]
    NegativeTolerance,
    #[error("distance window must satisfy 0 < low <= 1 <= high (got {low}, {high})")]
    BadDistanceWindow { low: f64, high: f64 },
}

/// Sensor-noise tolerances for matching two signatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdSet {
    /// Degrees.
    pub turn_tolerance: f64,
    /// Degrees.
    pub curvature_tolerance: f64,
    pub distance_low: f64,
    pub distance_high: f64,
}

impl ThresholdSet {
    /// Tolerances from the 75th percentile of typical phone sensor errors.
    pub const DEFAULT: ThresholdSet = ThresholdSet {
        turn_tolerance: 5.5,
        curvature_tolerance: 2.8,
        distance_low: 0.2,
        distance_high: 3.3,
    };

    /// Tighter tolerances from the 25th percentile, as achievable with
    /// low-noise sensors.
    pub const LOW_NOISE: ThresholdSet = ThresholdSet {
        turn_tolerance: 1.4,
        curvature_tolerance: 0.2,
        distance_low: 0.6,
        distance_high: 1.6,
    };

    /// Zero angular tolerance and exact leg distances.
    pub const EXACT: ThresholdSet = ThresholdSet {
        turn_tolerance: 0.0,
        curvature_tolerance: 0.0,
        distance_low: 1.0,
        distance_high: 1.0,
    };

    pub fn new(
        turn_tolerance: f64,
        curvature_tolerance: f64,
        distance_low: f64,
        distance_high: f64,
    ) -> Result<Self, ThresholdError> {
        let t = Self {
            turn_tolerance,
            curvature_tolerance,
            distance_low,
            distance_high,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ThresholdError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.turn_tolerance) || !ok(self.curvature_tolerance) {
            return Err(ThresholdError::NegativeTolerance);
        }
        let (low, high) = (self.distance_low, self.distance_high);
        if !(low > 0.0 && low <= 1.0 && high >= 1.0 && high.is_finite()) {
            return Err(ThresholdError::BadDistanceWindow { low, high });
        }
        Ok(())
    }

    pub fn turn_matches(&self, expected: f64, actual: f64) -> bool {
        wrap_signed(actual - expected).abs() <= self.turn_tolerance + ANGLE_SLACK_DEG
    }

    pub fn distance_matches(&self, expected: f64, actual: f64) -> bool {
        actual >= expected * self.distance_low * (1.0 - DISTANCE_WINDOW_SLACK)
            && actual <= expected * self.distance_high * (1.0 + DISTANCE_WINDOW_SLACK)
    }

    /// Whether a partial leg has already overshot the window.
    pub fn distance_exceeded(&self, expected: f64, partial: f64) -> bool {
        partial > expected * self.distance_high * (1.0 + DISTANCE_WINDOW_SLACK)
    }

    pub fn curvature_matches(&self, similarity: f64) -> bool {
        similarity <= self.curvature_tolerance + ANGLE_SLACK_DEG
    }
}

impl Default for ThresholdSet {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// How turns and legs are extracted from a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureParams {
    /// Connections with `|angle|` above this many degrees are turns.
    pub turn_threshold: f64,
    /// Interior legs shorter than this (meters) are folded into their
    /// neighbors.
    pub min_leg: f64,
    /// Interpolation size for curvature comparison.
    pub samples: usize,
}

impl Default for SignatureParams {
    fn default() -> Self {
        Self {
            turn_threshold: 30.0,
            min_leg: 10.0,
            samples: 100,
        }
    }
}

/// One turn in a signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// Degrees, clockwise positive.
    pub angle: f64,
    /// Index of the connection (between vertex `position` and
    /// `position + 1`) where the turn completes.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSignature {
    /// Meters, one per leg.
    pub leg_distances: Vec<f64>,
    /// Consecutive-point bearings along each leg.
    pub leg_bearings: Vec<Vec<f64>>,
    pub turn_angles: Vec<f64>,
    pub turn_count: usize,
    /// Half-open vertex index range of each leg.
    pub leg_ranges: Vec<(usize, usize)>,
}

/// Folds a raw turn into an in-progress turn list.
///
/// If a previous turn exists and the leg since it is shorter than
/// `min_leg`, the two turns are combined: a combined angle above the turn
/// threshold replaces them, otherwise the pair is a jog and both vanish.
/// Returns true when a turn was pushed.
pub(crate) fn fold_turn(
    turns: &mut Vec<Turn>,
    angle: f64,
    position: usize,
    open_leg: f64,
    params: &SignatureParams,
) -> bool {
    if open_leg < params.min_leg {
        if let Some(prev) = turns.pop() {
            let combined = wrap_signed(prev.angle + angle);
            if combined.abs() > params.turn_threshold {
                turns.push(Turn {
                    angle: combined,
                    position,
                });
                return true;
            }
            return false;
        }
    }
    turns.push(Turn { angle, position });
    true
}

/// First vertex index of the leg following the last turn.
pub(crate) fn open_leg_start(turns: &[Turn]) -> usize {
    turns.last().map_or(0, |t| t.position + 1)
}

pub(crate) fn leg_distance(graph: &RoadGraph, vertices: &[VertexId], range: (usize, usize)) -> f64 {
    let mut total = 0.0;
    for &v in &vertices[range.0..range.1] {
        total += graph.segment(v).length;
    }
    total
}

pub(crate) fn leg_bearings(graph: &RoadGraph, vertices: &[VertexId], range: (usize, usize)) -> Vec<f64> {
    let mut out = Vec::new();
    for &v in &vertices[range.0..range.1] {
        out.extend_from_slice(&graph.segment(v).bearings);
    }
    out
}

pub(crate) fn leg_ranges(turns: &[Turn], len: usize) -> Vec<(usize, usize)> {
    let mut ranges = Vec::with_capacity(turns.len() + 1);
    let mut start = 0;
    for t in turns {
        ranges.push((start, t.position + 1));
        start = t.position + 1;
    }
    ranges.push((start, len));
    ranges
}

/// Splits a path into legs at turns. Interior legs shorter than
/// `min_leg` are folded away; leading and trailing short legs are kept.
pub fn path_signature(graph: &RoadGraph, vertices: &[VertexId], params: &SignatureParams) -> PathSignature {
    let mut turns: Vec<Turn> = Vec::new();
    for (i, w) in vertices.windows(2).enumerate() {
        let angle = graph
            .connection(w[0], w[1])
            .map(|c| c.turn_angle)
            .expect("path follows graph connections");
        if angle.abs() > params.turn_threshold {
            let open = leg_distance(graph, vertices, (open_leg_start(&turns), i + 1));
            fold_turn(&mut turns, angle, i, open, params);
        }
    }
    let ranges = leg_ranges(&turns, vertices.len());
    PathSignature {
        leg_distances: ranges.iter().map(|&r| leg_distance(graph, vertices, r)).collect(),
        leg_bearings: ranges.iter().map(|&r| leg_bearings(graph, vertices, r)).collect(),
        turn_angles: turns.iter().map(|t| t.angle).collect(),
        turn_count: turns.len(),
        leg_ranges: ranges,
    }
}

/// Removes ±180° jumps so consecutive bearings differ by at most 180°.
pub fn unwrap_bearings(bearings: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(bearings.len());
    let mut prev: Option<f64> = None;
    for &b in bearings {
        let v = match prev {
            Some(p) => p + wrap_signed(b - p),
            None => b,
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Linear interpolation of `values` onto `samples` evenly spaced positions.
pub fn resample(values: &[f64], samples: usize) -> Vec<f64> {
    let n = values.len();
    if n == 1 || samples == 1 {
        return vec![values[0]; samples];
    }
    (0..samples)
        .map(|j| {
            let x = j as f64 * (n - 1) as f64 / (samples - 1) as f64;
            let i = (x.floor() as usize).min(n - 2);
            let f = x - i as f64;
            values[i] + (values[i + 1] - values[i]) * f
        })
        .collect()
}

/// Bearing profile relative to its first bearing, resampled to `samples`.
pub fn curvature_profile(bearings: &[f64], samples: usize) -> Result<Vec<f64>, GeoError> {
    if bearings.is_empty() {
        return Err(GeoError::DegenerateInput("empty bearing list"));
    }
    if samples == 0 {
        return Err(GeoError::DegenerateInput("zero samples"));
    }
    let r = resample(&unwrap_bearings(bearings), samples);
    let first = r[0];
    Ok(r.into_iter().map(|v| v - first).collect())
}

/// Largest pointwise gap between the curvature profiles of two legs.
pub fn curvature_similarity(a: &[f64], b: &[f64], samples: usize) -> Result<f64, GeoError> {
    let pa = curvature_profile(a, samples)?;
    let pb = curvature_profile(b, samples)?;
    Ok(pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
