//! Road-network analysis for GPS/INS location-spoofing studies.
//!
//! The pipeline: parse an OpenStreetMap extract ([`osm`]), build a directed
//! graph of atomic road segments ([`graph`]) and its curvature/turn
//! occurrence table ([`table`]), search for likely spoofed routes
//! ([`spoof`]), enumerate inertially indistinguishable escape routes
//! ([`escape`]), and measure the attacker's reach ([`metrics`]). The
//! [`secure`] module runs the same search in reverse to pick routes that are
//! hard to imitate, and [`sensor`] derives matching tolerances from inertial
//! traces.

// `!(x >= y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod escape;
pub mod geo;
pub mod graph;
pub mod metrics;
pub mod osm;
pub mod rng;
pub mod secure;
pub mod sensor;
pub mod signature;
pub mod spatial;
pub mod spoof;
pub mod synthetic;
pub mod table;

pub use cache::CacheError;
pub use escape::{generate_escape_paths, is_valid_escape, EscapeParams, EscapeSet};
pub use geo::{geo_distance, initial_bearing, segment_curvature, turn_angle, GeoError, GeoPoint, Polyline};
pub use graph::{build_graph, AtomicSegment, Connection, GraphError, RoadClass, RoadGraph, VertexId};
pub use metrics::{
    coverage_radius_sweep, displacement, monte_carlo_coverage, CoverageParams, CoverageResult, MetricsError,
};
pub use osm::{parse_osm, OsmData, OsmError};
pub use secure::{audit_secure_path, generate_secure_path, SecurePathReport};
pub use sensor::{derive_thresholds, ErrorDistributions, ImuSample, ImuTrace, SensorError};
pub use signature::{
    curvature_similarity, path_signature, PathSignature, SignatureParams, ThresholdError, ThresholdSet,
};
pub use spoof::Ranking;
pub use spoof::{
    generate_spoofed_paths, path_score, shortest_time_path, PathCandidate, SearchError, SpoofSearchParams,
};
pub use table::{build_probability_table, ProbabilityTable};
