//! Attack impact metrics: displacement from the intended destination and
//! Monte-Carlo coverage of the area around the source.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{geo_distance, GeoPoint, LocalFrame};
use crate::graph::RoadGraph;
use crate::rng::CounterStream;
use crate::spatial::{PlanarSegment, SegmentGrid};

/// Points per parallel work unit.
const CHUNK: u64 = 1 << 15;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("source and intended destination coincide")]
    DegenerateRadius,
    #[error("invalid coverage parameters: {0}")]
    InvalidParams(String),
}

/// Farthest distance from `intended` to any escape destination.
pub fn displacement(destinations: &[GeoPoint], intended: GeoPoint) -> Result<f64, MetricsError> {
    destinations
        .iter()
        .map(|&p| geo_distance(p, intended))
        .reduce(f64::max)
        .ok_or(MetricsError::EmptyInput)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageParams {
    /// Walking radius in meters.
    pub walk_radius: f64,
    pub point_count: u64,
    pub seed: u64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            walk_radius: 100.0,
            point_count: 1_000_000,
            seed: 0,
        }
    }
}

impl CoverageParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.walk_radius > 0.0 && self.walk_radius.is_finite()) {
            return Err(MetricsError::InvalidParams("walk_radius must be positive".into()));
        }
        if self.point_count == 0 {
            return Err(MetricsError::InvalidParams("point_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    /// P: points sampled in the circle.
    pub total_points: u64,
    /// P_L: points within the walking radius of a road.
    pub land_points: u64,
    /// P_C: land points within the walking radius of an escape destination.
    pub covered_points: u64,
    pub coverage_percent: f64,
    /// Radius of the interest circle in meters.
    pub circle_radius_m: f64,
    pub land_area_m2: f64,
    pub covered_area_m2: f64,
    pub walk_radius_m: f64,
    /// Fraction of escape destinations farther from the source than the
    /// circle radius.
    pub outside_fraction: f64,
}

impl CoverageResult {
    fn from_counts(total: u64, land: u64, covered: u64, radius: f64, walk: f64, outside: f64) -> Self {
        let area = std::f64::consts::PI * radius * radius;
        Self {
            total_points: total,
            land_points: land,
            covered_points: covered,
            coverage_percent: if land == 0 {
                0.0
            } else {
                covered as f64 / land as f64 * 100.0
            },
            circle_radius_m: radius,
            land_area_m2: land as f64 / total as f64 * area,
            covered_area_m2: covered as f64 / total as f64 * area,
            walk_radius_m: walk,
            outside_fraction: outside,
        }
    }
}

/// Road polylines of a graph with each two-way piece listed once.
pub fn road_polylines(graph: &RoadGraph) -> Vec<Vec<GeoPoint>> {
    graph
        .segments()
        .iter()
        .filter(|s| s.reverse.is_none_or(|r| r > s.id))
        .map(|s| s.geometry.points().to_vec())
        .collect()
}

/// Coverage estimate against an explicit set of road polylines.
pub fn monte_carlo_coverage_roads(
    roads: &[Vec<GeoPoint>],
    source: GeoPoint,
    intended: GeoPoint,
    destinations: &[GeoPoint],
    params: &CoverageParams,
) -> Result<CoverageResult, MetricsError> {
    params.validate()?;
    let radius = geo_distance(source, intended);
    if radius <= 0.0 {
        return Err(MetricsError::DegenerateRadius);
    }
    let frame = LocalFrame::new(source);
    let domain = (-radius, -radius, radius, radius);
    let road_segments: Vec<PlanarSegment> = roads
        .iter()
        .flat_map(|line| line.windows(2).map(|w| (frame.project(w[0]), frame.project(w[1]))))
        .collect();
    let dest_points: Vec<PlanarSegment> = destinations
        .iter()
        .map(|&p| {
            let q = frame.project(p);
            (q, q)
        })
        .collect();
    let land_index = SegmentGrid::new(&road_segments, params.walk_radius, domain);
    let dest_index = SegmentGrid::new(&dest_points, params.walk_radius, domain);

    let total = params.point_count;
    let chunks = total.div_ceil(CHUNK);
    let (land, covered) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut stream = CounterStream::at(params.seed, start);
            let (mut land, mut covered) = (0u64, 0u64);
            for _ in start..end {
                let (u, v) = stream.next_pair();
                let rho = radius * u.sqrt();
                let phi = std::f64::consts::TAU * v;
                let p = (rho * phi.cos(), rho * phi.sin());
                if land_index.any_within(p) {
                    land += 1;
                    if dest_index.any_within(p) {
                        covered += 1;
                    }
                }
            }
            (land, covered)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let outside = if destinations.is_empty() {
        0.0
    } else {
        destinations
            .iter()
            .filter(|&&p| geo_distance(p, source) > radius)
            .count() as f64
            / destinations.len() as f64
    };
    Ok(CoverageResult::from_counts(
        total,
        land,
        covered,
        radius,
        params.walk_radius,
        outside,
    ))
}

/// Estimates how much of the road-adjacent land inside the circle of radius
/// `|source - intended|` around `source` lies within walking distance of an
/// escape destination.
pub fn monte_carlo_coverage(
    graph: &RoadGraph,
    source: GeoPoint,
    intended: GeoPoint,
    destinations: &[GeoPoint],
    params: &CoverageParams,
) -> Result<CoverageResult, MetricsError> {
    monte_carlo_coverage_roads(&road_polylines(graph), source, intended, destinations, params)
}

/// One coverage estimate per walking radius, all from the same samples.
pub fn coverage_radius_sweep(
    graph: &RoadGraph,
    source: GeoPoint,
    intended: GeoPoint,
    destinations: &[GeoPoint],
    params: &CoverageParams,
    radii: &[f64],
) -> Result<Vec<(f64, CoverageResult)>, MetricsError> {
    let roads = road_polylines(graph);
    radii
        .iter()
        .map(|&r| {
            let p = CoverageParams {
                walk_radius: r,
                ..*params
            };
            monte_carlo_coverage_roads(&roads, source, intended, destinations, &p).map(|c| (r, c))
        })
        .collect()
}

/// CSV row layout for coverage results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub city: String,
    pub source: String,
    pub dest: String,
    pub r_prime: f64,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "P_L")]
    pub p_l: u64,
    #[serde(rename = "P_C")]
    pub p_c: u64,
    pub coverage_percent: f64,
}

impl CoverageRow {
    pub fn new(city: &str, source: GeoPoint, dest: GeoPoint, result: &CoverageResult) -> Self {
        Self {
            city: city.to_string(),
            source: source.to_string(),
            dest: dest.to_string(),
            r_prime: result.walk_radius_m,
            p: result.total_points,
            p_l: result.land_points,
            p_c: result.covered_points,
            coverage_percent: result.coverage_percent,
        }
    }
}
