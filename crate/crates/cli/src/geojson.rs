//! GeoJSON FeatureCollections (RFC 7946): positions are `[lon, lat]`.

use roadspoof_core::geo::GeoPoint;
use roadspoof_core::graph::{RoadGraph, VertexId};
use serde_json::{json, Map, Value};

fn position(p: GeoPoint) -> Value {
    json!([p.lon(), p.lat()])
}

pub fn line_feature(graph: &RoadGraph, vertices: &[VertexId], properties: Map<String, Value>) -> Value {
    let coords: Vec<Value> = graph.path_geometry(vertices).into_iter().map(position).collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": properties,
    })
}

pub fn point_feature(p: GeoPoint, properties: Map<String, Value>) -> Value {
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": position(p) },
        "properties": properties,
    })
}

pub fn collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn vertex_ids(vertices: &[VertexId]) -> Value {
    Value::from(vertices.iter().map(|v| v.0).collect::<Vec<_>>())
}

/// Reads the `vertices` property of every feature.
pub fn read_paths(doc: &Value) -> Option<Vec<Vec<VertexId>>> {
    doc.get("features")?
        .as_array()?
        .iter()
        .map(|f| {
            f.get("properties")?
                .get("vertices")?
                .as_array()?
                .iter()
                .map(|v| v.as_u64().and_then(|n| u32::try_from(n).ok()).map(VertexId))
                .collect()
        })
        .collect()
}
