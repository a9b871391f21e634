//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use roadspoof_core::geo::{geo_distance, GeoPoint, LocalFrame, EARTH_RADIUS_M};
use roadspoof_core::graph::{build_graph, RoadGraph, VertexId};
use roadspoof_core::synthetic::NetworkBuilder;
use roadspoof_core::table::ProbabilityTable;

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// A random connected-ish road network with at most `max_vertices`
/// directed segments. Some edges are very short and some are bent so that
/// leg merging and curvature matching get exercised.
pub fn random_small_graph(seed: u64, max_vertices: usize) -> RoadGraph {
    let mut rng = TestRng::new(seed);
    loop {
        let mut b = NetworkBuilder::new(GeoPoint::new(rng.range(-50.0, 50.0), rng.range(-170.0, 170.0)).unwrap());
        let n_nodes = 4 + rng.below(3);
        let mut pos: Vec<(f64, f64)> = Vec::new();
        while pos.len() < n_nodes {
            let p = if !pos.is_empty() && rng.chance(0.25) {
                let q = pos[rng.below(pos.len())];
                let a = rng.range(0.0, std::f64::consts::TAU);
                let r = rng.range(3.0, 9.0);
                (q.0 + r * a.cos(), q.1 + r * a.sin())
            } else {
                (rng.range(0.0, 200.0), rng.range(0.0, 200.0))
            };
            if pos
                .iter()
                .all(|q| ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt() > 1.0)
            {
                pos.push(p);
            }
        }
        let ids: Vec<i64> = pos.iter().map(|&(x, y)| b.node(x, y)).collect();
        let mut vertices = 0;
        let mut used = std::collections::BTreeSet::new();
        for _ in 0..20 {
            let (i, j) = (rng.below(n_nodes), rng.below(n_nodes));
            if i == j || used.contains(&(i.min(j), i.max(j))) {
                continue;
            }
            let two_way = rng.chance(0.6);
            let cost = if two_way { 2 } else { 1 };
            if vertices + cost > max_vertices {
                continue;
            }
            used.insert((i.min(j), i.max(j)));
            vertices += cost;
            let mut refs = vec![ids[i]];
            if rng.chance(0.4) {
                let (a, c) = (pos[i], pos[j]);
                let mid = (
                    (a.0 + c.0) / 2.0 + rng.range(-25.0, 25.0),
                    (a.1 + c.1) / 2.0 + rng.range(-25.0, 25.0),
                );
                refs.push(b.node(mid.0, mid.1));
            }
            refs.push(ids[j]);
            if two_way {
                b.road(&refs, "residential");
            } else {
                b.oneway(&refs, "residential");
            }
        }
        if let Ok(g) = build_graph(&b.finish()) {
            if g.vertex_count() <= max_vertices && g.edge_count() > 0 {
                return g;
            }
        }
    }
}

/// Every simple path starting at `s`, in lexicographic order.
pub fn simple_paths_from(g: &RoadGraph, s: VertexId) -> Vec<Vec<VertexId>> {
    fn rec(g: &RoadGraph, path: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        out.push(path.clone());
        let at = *path.last().unwrap();
        let mut next: Vec<VertexId> = g.connections().iter().filter(|c| c.from == at).map(|c| c.to).collect();
        next.sort();
        for v in next {
            if !path.contains(&v) {
                path.push(v);
                rec(g, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(g, &mut vec![s], &mut out);
    out
}

pub fn simple_paths(g: &RoadGraph, s: VertexId, d: VertexId) -> Vec<Vec<VertexId>> {
    simple_paths_from(g, s)
        .into_iter()
        .filter(|p| *p.last().unwrap() == d)
        .collect()
}

fn turn(g: &RoadGraph, a: VertexId, b: VertexId) -> f64 {
    g.connections()
        .iter()
        .find(|c| c.from == a && c.to == b)
        .unwrap()
        .turn_angle
}

/// Straightforward product of table entries along a path.
pub fn oracle_score(g: &RoadGraph, t: &ProbabilityTable, path: &[VertexId]) -> f64 {
    let mut s = 1.0;
    for w in path.windows(2) {
        s *= t.get((
            g.segment(w[0]).curvature.round() as i32,
            turn(g, w[0], w[1]).round() as i32,
        ));
    }
    s * t.get((g.segment(*path.last().unwrap()).curvature.round() as i32, 0))
}

pub fn travel_time(g: &RoadGraph, path: &[VertexId]) -> f64 {
    path.iter()
        .map(|&v| g.segment(v).length / g.segment(v).speed_limit)
        .sum()
}

/// Fastest simple path by exhaustive search, ties to the smallest
/// sequence.
pub fn oracle_fastest(g: &RoadGraph, s: VertexId, d: VertexId) -> Option<Vec<VertexId>> {
    let mut all = simple_paths(g, s, d);
    all.sort();
    let best = all.iter().map(|p| travel_time(g, p)).fold(f64::INFINITY, f64::min);
    all.into_iter().find(|p| travel_time(g, p) <= best * (1.0 + 1e-9))
}

/// Independent re-implementation of the distance and bounding-box filters.
pub fn oracle_admits(g: &RoadGraph, fastest: &[VertexId], path: &[VertexId], factor: f64, padding: f64) -> bool {
    let limit = factor * fastest.iter().map(|&v| g.segment(v).length).sum::<f64>() * (1.0 + 1e-9);
    let d = *path.last().unwrap();
    let target = g.segment(d).end();
    let mut acc = 0.0;
    for &v in path {
        acc += g.segment(v).length;
        let rest = if v == d {
            0.0
        } else {
            geo_distance(g.segment(v).end(), target)
        };
        if acc + rest > limit {
            return false;
        }
    }
    if padding.is_finite() {
        let pts: Vec<GeoPoint> = fastest
            .iter()
            .flat_map(|&v| g.segment(v).geometry.points().to_vec())
            .collect();
        let lat0 = pts.iter().map(|p| p.lat()).fold(f64::INFINITY, f64::min);
        let lat1 = pts.iter().map(|p| p.lat()).fold(f64::NEG_INFINITY, f64::max);
        let lon0 = pts.iter().map(|p| p.lon()).fold(f64::INFINITY, f64::min);
        let lon1 = pts.iter().map(|p| p.lon()).fold(f64::NEG_INFINITY, f64::max);
        let dlat = (padding / EARTH_RADIUS_M).to_degrees();
        let dlon = dlat / ((lat0 + lat1) / 2.0).to_radians().cos();
        let inside = |p: &GeoPoint| {
            p.lat() >= lat0 - dlat && p.lat() <= lat1 + dlat && p.lon() >= lon0 - dlon && p.lon() <= lon1 + dlon
        };
        if !path.iter().all(|&v| g.segment(v).geometry.points().iter().all(inside)) {
            return false;
        }
    }
    true
}

/// Four congruent straight arms radiating from `center` (east, north,
/// west, south), starting `gap` meters out and ending `length` meters out.
pub struct CrossFixture {
    pub frame: LocalFrame,
    pub arms: Vec<Vec<GeoPoint>>,
    pub gap: f64,
    pub length: f64,
}

impl CrossFixture {
    pub fn new(center: GeoPoint, gap: f64, length: f64) -> Self {
        let frame = LocalFrame::new(center);
        let dirs = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        let arms = dirs
            .iter()
            .map(|&(dx, dy)| {
                vec![
                    frame.unproject(dx * gap, dy * gap),
                    frame.unproject(dx * length, dy * length),
                ]
            })
            .collect();
        Self {
            frame,
            arms,
            gap,
            length,
        }
    }

    pub fn graph(&self) -> RoadGraph {
        let mut b = NetworkBuilder::new(self.frame.origin());
        for arm in &self.arms {
            let (x0, y0) = self.frame.project(arm[0]);
            let (x1, y1) = self.frame.project(arm[1]);
            let a = b.node(x0, y0);
            let c = b.node(x1, y1);
            b.road(&[a, c], "residential");
        }
        build_graph(&b.finish()).unwrap()
    }

    /// Points every `step` meters along the east arm, endpoints included.
    pub fn east_arm_points(&self, step: f64) -> Vec<GeoPoint> {
        let n = ((self.length - self.gap) / step).ceil() as usize;
        (0..=n)
            .map(|i| {
                let x = (self.gap + i as f64 * step).min(self.length);
                self.frame.unproject(x, 0.0)
            })
            .collect()
    }

    /// Points every `step` meters along every arm.
    pub fn all_arm_points(&self, step: f64) -> Vec<GeoPoint> {
        let n = ((self.length - self.gap) / step).ceil() as usize;
        let mut out = Vec::new();
        for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
            for i in 0..=n {
                let r = (self.gap + i as f64 * step).min(self.length);
                out.push(self.frame.unproject(dx * r, dy * r));
            }
        }
        out
    }
}

/// Area of `{ p : dist(p, arm) <= w } ∩ disk(R)` for one arm starting at
/// `gap` and extending past `R + w`, with `gap + w < R`.
pub fn arm_strip_area(radius: f64, walk: f64, gap: f64) -> f64 {
    let (r, a) = (radius, walk);
    let band = a * (r * r - a * a).sqrt() + r * r * (a / r).asin() - 2.0 * a * gap;
    band + std::f64::consts::PI * a * a / 2.0
}

type UnitEdge = ((i32, i32), (i32, i32));

/// Combinatorial count of lattice walks on an `n` x `n` grid that start at
/// `start` heading `dir`, make the given signed quarter turns, and whose
/// k-th leg is a whole number of cells in `legs[k]`. Walks may cross
/// themselves but never reuse a directed unit edge.
pub fn lattice_walks(n: i32, start: (i32, i32), dir: (i32, i32), turns: &[i32], legs: &[Vec<i32>]) -> usize {
    fn go(
        n: i32,
        at: (i32, i32),
        dir: (i32, i32),
        k: usize,
        turns: &[i32],
        legs: &[Vec<i32>],
        used: &mut Vec<UnitEdge>,
    ) -> usize {
        let mut count = 0;
        for &len in &legs[k] {
            let mut pos = at;
            let mut pushed = 0;
            let mut ok = true;
            for _ in 0..len {
                let next = (pos.0 + dir.0, pos.1 + dir.1);
                if next.0 < 0 || next.1 < 0 || next.0 >= n || next.1 >= n || used.contains(&(pos, next)) {
                    ok = false;
                    break;
                }
                used.push((pos, next));
                pushed += 1;
                pos = next;
            }
            if ok {
                if k == turns.len() {
                    count += 1;
                } else {
                    // Clockwise quarter turn in (east, north) coordinates.
                    let nd = if turns[k] > 0 { (dir.1, -dir.0) } else { (-dir.1, dir.0) };
                    count += go(n, pos, nd, k + 1, turns, legs, used);
                }
            }
            used.truncate(used.len() - pushed);
        }
        count
    }
    go(n, start, dir, 0, turns, legs, &mut Vec::new())
}
