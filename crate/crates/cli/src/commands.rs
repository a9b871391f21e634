use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roadspoof_core::cache::{file_hash, read_snapshot, write_snapshot};
use roadspoof_core::escape::{generate_escape_paths, EscapeParams};
use roadspoof_core::geo::{geo_distance, GeoPoint};
use roadspoof_core::graph::{build_graph, RoadGraph, VertexId};
use roadspoof_core::metrics::{coverage_radius_sweep, CoverageResult, CoverageRow};
use roadspoof_core::osm::{parse_osm_file, OsmData};
use roadspoof_core::rng::CounterStream;
use roadspoof_core::secure::{audit_secure_path, generate_secure_path};
use roadspoof_core::spoof::{
    generate_spoofed_paths, shortest_time_path, PathCandidate, SearchError, SpoofSearchParams,
};
use roadspoof_core::table::build_probability_table;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::geojson;

pub const TOOL_VERSION: &str = concat!("roadspoof ", env!("CARGO_PKG_VERSION"));

/// Settings shared by the commands that read a config.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn search_params(&self) -> SpoofSearchParams {
        SpoofSearchParams {
            turn_threshold: self.config.signature.turn_threshold,
            ..self.config.search
        }
    }

    pub fn escape_params(&self) -> EscapeParams {
        self.config.escape_params()
    }

    pub fn graph(&self) -> Result<RoadGraph, CliError> {
        load_graph(&self.config.osm_path, self.config.cache_path.as_deref())
    }
}

pub fn parse_point(text: &str) -> Result<GeoPoint, CliError> {
    let bad = || CliError::InvalidArgument(format!("expected LAT,LON, got {text:?}"));
    let (lat, lon) = text.split_once(',').ok_or_else(bad)?;
    let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
    let lon: f64 = lon.trim().parse().map_err(|_| bad())?;
    GeoPoint::new(lat, lon).map_err(|e| CliError::InvalidArgument(e.to_string()))
}

fn build_from_osm(osm: &Path) -> Result<RoadGraph, CliError> {
    Ok(build_graph(&parse_osm_file(osm)?)?)
}

/// Uses the cache when present (refusing a stale one) and writes it when
/// missing.
pub fn load_graph(osm: &Path, cache: Option<&Path>) -> Result<RoadGraph, CliError> {
    let Some(cache) = cache else {
        return build_from_osm(osm);
    };
    let hash = file_hash(osm)?;
    if cache.exists() {
        return Ok(read_snapshot(cache, &hash)?);
    }
    let graph = build_from_osm(osm)?;
    write_snapshot(cache, &graph, &hash, TOOL_VERSION)?;
    Ok(graph)
}

pub fn build_graph_cmd(osm: &Path, cache: &Path) -> Result<String, CliError> {
    let hash = file_hash(osm)?;
    let graph = build_from_osm(osm)?;
    write_snapshot(cache, &graph, &hash, TOOL_VERSION)?;
    Ok(format!(
        "{} vertices, {} edges -> {}",
        graph.vertex_count(),
        graph.edge_count(),
        cache.display()
    ))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_file(path, &text)
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::InvalidArgument(e.to_string()))?;
    write_file(path, &bytes)
}

fn props(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub const SPOOFED_CSV_HEADER: [&str; 4] = ["rank", "score", "distance_m", "turn_count"];

#[derive(Serialize)]
struct SpoofedRow {
    rank: usize,
    score: f64,
    distance_m: f64,
    turn_count: usize,
}

pub fn spoof_cmd(ctx: &Context, source: GeoPoint, dest: GeoPoint) -> Result<String, CliError> {
    let graph = ctx.graph()?;
    let table = build_probability_table(&graph)?;
    let (s, d) = (graph.nearest_vertex(source), graph.nearest_vertex(dest));
    let paths = generate_spoofed_paths(&graph, &table, s, d, &ctx.search_params())?;
    let features = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            geojson::line_feature(
                &graph,
                &p.vertices,
                props(vec![
                    ("rank", json!(i + 1)),
                    ("score", json!(p.score)),
                    ("distance_m", json!(p.total_distance)),
                    ("turn_count", json!(p.turn_count)),
                    ("vertices", geojson::vertex_ids(&p.vertices)),
                ]),
            )
        })
        .collect();
    let rows: Vec<SpoofedRow> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| SpoofedRow {
            rank: i + 1,
            score: p.score,
            distance_m: p.total_distance,
            turn_count: p.turn_count,
        })
        .collect();
    write_json(&ctx.out.join("spoofed.geojson"), &geojson::collection(features))?;
    write_csv(&ctx.out.join("spoofed.csv"), &SPOOFED_CSV_HEADER, &rows)?;
    Ok(format!("{} spoofed paths from {s} to {d}", paths.len()))
}

/// Where the spoofed path for `escape` comes from.
pub enum SpoofedInput {
    /// A `spoofed.geojson` and a 1-based rank.
    Ranked(PathBuf, usize),
    /// A JSON array of vertex ids.
    Vertices(PathBuf),
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn spoofed_vertices(input: &SpoofedInput) -> Result<Vec<VertexId>, CliError> {
    match input {
        SpoofedInput::Ranked(path, rank) => {
            let paths = geojson::read_paths(&read_json(path)?)
                .ok_or_else(|| CliError::InvalidArgument(format!("{} has no vertex lists", path.display())))?;
            rank.checked_sub(1)
                .and_then(|i| paths.get(i).cloned())
                .ok_or_else(|| CliError::InvalidArgument(format!("rank {rank} not in 1..={}", paths.len())))
        }
        SpoofedInput::Vertices(path) => {
            let ids: Vec<u32> = serde_json::from_value(read_json(path)?)?;
            Ok(ids.into_iter().map(VertexId).collect())
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct EscapeSummary {
    pub spoofed: Vec<u32>,
    pub escape_paths: usize,
    pub truncated: bool,
    pub displacement_m: f64,
}

pub fn escape_cmd(ctx: &Context, input: &SpoofedInput) -> Result<String, CliError> {
    let graph = ctx.graph()?;
    let vertices = spoofed_vertices(input)?;
    if !graph.is_simple_path(&vertices) {
        return Err(SearchError::InvalidPath.into());
    }
    let spoofed = PathCandidate::new(&graph, vertices, 1.0, ctx.config.signature.turn_threshold);
    let set = generate_escape_paths(&graph, &spoofed, &ctx.escape_params())?;
    let intended = graph.segment(spoofed.destination()).end();
    let mut lines = Vec::with_capacity(set.count());
    let mut points = Vec::with_capacity(set.count());
    let mut displacement: f64 = 0.0;
    for (i, p) in set.paths.iter().enumerate() {
        let end = graph.segment(p.destination()).end();
        let disp = geo_distance(end, intended);
        displacement = displacement.max(disp);
        lines.push(geojson::line_feature(
            &graph,
            &p.vertices,
            props(vec![
                ("index", json!(i)),
                ("distance_m", json!(p.total_distance)),
                ("identity", json!(p.vertices == spoofed.vertices)),
                ("vertices", geojson::vertex_ids(&p.vertices)),
            ]),
        ));
        points.push(geojson::point_feature(
            end,
            props(vec![
                ("index", json!(i)),
                ("vertex", json!(p.destination().0)),
                ("displacement_m", json!(disp)),
            ]),
        ));
    }
    write_json(&ctx.out.join("escape_paths.geojson"), &geojson::collection(lines))?;
    write_json(
        &ctx.out.join("escape_destinations.geojson"),
        &geojson::collection(points),
    )?;
    let summary = EscapeSummary {
        spoofed: spoofed.vertices.iter().map(|v| v.0).collect(),
        escape_paths: set.count(),
        truncated: set.truncated,
        displacement_m: displacement,
    };
    write_json(&ctx.out.join("escape_summary.json"), &summary)?;
    Ok(format!(
        "{} escape paths{}, displacement {displacement:.1} m",
        set.count(),
        if set.truncated { " (capped)" } else { "" }
    ))
}

pub fn secure_path_cmd(ctx: &Context, source: GeoPoint, dest: GeoPoint) -> Result<String, CliError> {
    let graph = ctx.graph()?;
    let table = build_probability_table(&graph)?;
    let (s, d) = (graph.nearest_vertex(source), graph.nearest_vertex(dest));
    let path = generate_secure_path(&graph, &table, s, d, &ctx.search_params())?;
    let report = audit_secure_path(&graph, &path, &ctx.escape_params())?;
    let feature = geojson::line_feature(
        &graph,
        &path.vertices,
        props(vec![
            ("score", json!(path.score)),
            ("distance_m", json!(path.total_distance)),
            ("residual_escapes", json!(report.residual_escapes)),
            ("vertices", geojson::vertex_ids(&path.vertices)),
        ]),
    );
    write_json(&ctx.out.join("secure.geojson"), &geojson::collection(vec![feature]))?;
    write_json(&ctx.out.join("secure_report.json"), &report)?;
    Ok(format!(
        "secure path with score {:.3e}, {} residual escapes, displacement {:.1} m",
        path.score, report.residual_escapes, report.residual_displacement
    ))
}

const HOME_BUILDINGS: [&str; 4] = ["apartments", "house", "residential", "bungalow"];
const WORK_BUILDINGS: [&str; 2] = ["commercial", "industrial"];
/// Attempts per trial before giving up on finding a routable pair.
const MAX_ATTEMPTS: u64 = 64;

/// Home and work candidate points from building tags, or road vertices when
/// either kind is missing.
pub fn home_work_candidates(osm: &OsmData, graph: &RoadGraph) -> (Vec<GeoPoint>, Vec<GeoPoint>) {
    let index = osm.node_index();
    let mut homes = Vec::new();
    let mut works = Vec::new();
    let mut push = |kind: Option<&str>, p: GeoPoint| match kind {
        Some(k) if HOME_BUILDINGS.contains(&k) => homes.push(p),
        Some(k) if WORK_BUILDINGS.contains(&k) => works.push(p),
        _ => {}
    };
    for n in &osm.nodes {
        push(n.tags.get("building").map(String::as_str), n.point);
    }
    for w in &osm.ways {
        let Some(kind) = w.tag("building") else { continue };
        let pts: Vec<GeoPoint> = w
            .node_refs
            .iter()
            .filter_map(|r| index.get(r).map(|n| n.point))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let lat = pts.iter().map(|p| p.lat()).sum::<f64>() / pts.len() as f64;
        let lon = pts.iter().map(|p| p.lon()).sum::<f64>() / pts.len() as f64;
        if let Ok(c) = GeoPoint::new(lat, lon) {
            push(Some(kind), c);
        }
    }
    if homes.is_empty() || works.is_empty() {
        let roads: Vec<GeoPoint> = graph.segments().iter().map(|s| s.start()).collect();
        return (roads.clone(), roads);
    }
    (homes, works)
}

pub const EVAL_CSV_HEADER: [&str; 14] = [
    "city",
    "trial",
    "source",
    "dest",
    "route_length_m",
    "displacement_m",
    "r_prime",
    "P",
    "P_L",
    "P_C",
    "coverage_percent",
    "spoofed_paths",
    "escape_paths",
    "outside_fraction",
];

pub const COVERAGE_CSV_HEADER: [&str; 8] = [
    "city",
    "source",
    "dest",
    "r_prime",
    "P",
    "P_L",
    "P_C",
    "coverage_percent",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub city: String,
    pub trial: usize,
    pub source: String,
    pub dest: String,
    pub route_length_m: f64,
    pub displacement_m: f64,
    pub r_prime: f64,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "P_L")]
    pub p_l: u64,
    #[serde(rename = "P_C")]
    pub p_c: u64,
    pub coverage_percent: f64,
    pub spoofed_paths: usize,
    pub escape_paths: usize,
    pub outside_fraction: f64,
}

/// Per-trial path outputs written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub source_vertex: u32,
    pub dest_vertex: u32,
    pub source: GeoPoint,
    pub intended: GeoPoint,
    pub route: Vec<u32>,
    pub escape_destinations: Vec<GeoPoint>,
    pub truncated: bool,
}

struct Trial {
    record: TrialRecord,
    row: EvalRow,
    coverage: Vec<CoverageRow>,
}

pub struct EvalSettings {
    pub trials: usize,
    pub min_distance: f64,
    pub max_distance: f64,
}

fn pick(points: &[GeoPoint], u: f64) -> GeoPoint {
    points[((u * points.len() as f64) as usize).min(points.len() - 1)]
}

/// Work point whose distance from `home` is closest to `target`; ties go to
/// the lower index.
fn closest_at_distance(points: &[GeoPoint], home: GeoPoint, target: f64) -> GeoPoint {
    let mut best = (f64::INFINITY, points[0]);
    for &p in points {
        let gap = (geo_distance(home, p) - target).abs();
        if gap < best.0 {
            best = (gap, p);
        }
    }
    best.1
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    ctx: &Context,
    graph: &RoadGraph,
    table: &roadspoof_core::table::ProbabilityTable,
    homes: &[GeoPoint],
    works: &[GeoPoint],
    settings: &EvalSettings,
    radii: &[f64],
    trial: usize,
) -> Result<Trial, CliError> {
    let seed = ctx.config.coverage.seed;
    let mut stream = CounterStream::at(seed, trial as u64 * MAX_ATTEMPTS);
    let mut last_err = None;
    for _ in 0..MAX_ATTEMPTS {
        let (u_home, u_dist) = stream.next_pair();
        let home = pick(homes, u_home);
        let target = settings.min_distance + u_dist * (settings.max_distance - settings.min_distance);
        let work = closest_at_distance(works, home, target);
        let (s, d) = (graph.nearest_vertex(home), graph.nearest_vertex(work));
        if s == d {
            continue;
        }
        let route = match shortest_time_path(graph, s, d) {
            Ok(r) => r,
            Err(e @ SearchError::NoPath { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        return evaluate_pair(ctx, graph, table, radii, trial, route);
    }
    Err(last_err.map(CliError::from).unwrap_or_else(|| {
        CliError::InvalidArgument(format!("trial {trial}: no distinct source and destination found"))
    }))
}

fn evaluate_pair(
    ctx: &Context,
    graph: &RoadGraph,
    table: &roadspoof_core::table::ProbabilityTable,
    radii: &[f64],
    trial: usize,
    route: PathCandidate,
) -> Result<Trial, CliError> {
    let (s, d) = (route.source(), route.destination());
    let mut spoofed = generate_spoofed_paths(graph, table, s, d, &ctx.search_params())?;
    spoofed.truncate(ctx.config.eval.spoofed_per_trial);
    let params = ctx.escape_params();
    let intended = graph.segment(d).end();
    let source = graph.segment(s).start();
    let mut destinations = Vec::new();
    let mut escape_paths = 0;
    let mut truncated = false;
    for p in &spoofed {
        let set = generate_escape_paths(graph, p, &params)?;
        escape_paths += set.count();
        truncated |= set.truncated;
        destinations.extend(set.destinations());
    }
    destinations.sort();
    destinations.dedup();
    let points: Vec<GeoPoint> = destinations.iter().map(|&v| graph.segment(v).end()).collect();
    let displacement = points.iter().map(|&p| geo_distance(p, intended)).fold(0.0, f64::max);

    let walk = ctx.config.coverage.walk_radius;
    let mut all_radii = vec![walk];
    all_radii.extend(radii.iter().copied().filter(|&r| r != walk));
    let sweep = coverage_radius_sweep(graph, source, intended, &points, &ctx.config.coverage, &all_radii)?;
    let main: &CoverageResult = &sweep[0].1;
    let city = &ctx.config.city;
    let coverage = radii
        .iter()
        .map(|r| {
            let res = &sweep.iter().find(|(x, _)| x == r).expect("radius evaluated").1;
            CoverageRow::new(city, source, intended, res)
        })
        .collect();
    let row = EvalRow {
        city: city.clone(),
        trial,
        source: source.to_string(),
        dest: intended.to_string(),
        route_length_m: route.total_distance,
        displacement_m: displacement,
        r_prime: walk,
        p: main.total_points,
        p_l: main.land_points,
        p_c: main.covered_points,
        coverage_percent: main.coverage_percent,
        spoofed_paths: spoofed.len(),
        escape_paths,
        outside_fraction: main.outside_fraction,
    };
    let record = TrialRecord {
        trial,
        source_vertex: s.0,
        dest_vertex: d.0,
        source,
        intended,
        route: route.vertices.iter().map(|v| v.0).collect(),
        escape_destinations: points,
        truncated,
    };
    Ok(Trial { record, row, coverage })
}

pub fn eval_cmd(ctx: &Context, settings: &EvalSettings) -> Result<String, CliError> {
    if !(settings.min_distance > 0.0 && settings.min_distance <= settings.max_distance) {
        return Err(CliError::InvalidArgument(
            "distance range must satisfy 0 < min <= max".into(),
        ));
    }
    let osm = parse_osm_file(&ctx.config.osm_path)?;
    let graph = match &ctx.config.cache_path {
        Some(_) => ctx.graph()?,
        None => build_graph(&osm)?,
    };
    let table = build_probability_table(&graph)?;
    let (homes, works) = home_work_candidates(&osm, &graph);
    let radii = &ctx.config.eval.coverage_radii;
    let trials: Vec<Trial> = (0..settings.trials)
        .into_par_iter()
        .map(|i| run_trial(ctx, &graph, &table, &homes, &works, settings, radii, i))
        .collect::<Result<_, _>>()?;

    let rows: Vec<&EvalRow> = trials.iter().map(|t| &t.row).collect();
    let coverage: Vec<&CoverageRow> = trials.iter().flat_map(|t| &t.coverage).collect();
    let records: Vec<&TrialRecord> = trials.iter().map(|t| &t.record).collect();
    write_csv(&ctx.out.join("eval.csv"), &EVAL_CSV_HEADER, &rows)?;
    write_csv(&ctx.out.join("coverage.csv"), &COVERAGE_CSV_HEADER, &coverage)?;
    write_json(&ctx.out.join("eval_trials.json"), &records)?;
    Ok(format!("{} trials written to {}", rows.len(), ctx.out.display()))
}
