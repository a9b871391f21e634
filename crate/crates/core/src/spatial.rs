//! Uniform grid over planar line segments for "anything within r" queries.

/// A planar segment in meters.
pub type PlanarSegment = ((f64, f64), (f64, f64));

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Dense grid index. Cell size equals the query radius, so every segment
/// within range of a point is registered in one of the 3x3 cells around it.
#[derive(Debug, Clone)]
pub struct SegmentGrid {
    radius: f64,
    min: (f64, f64),
    cols: usize,
    rows: usize,
    /// CSR layout: cell `c` owns `items[starts[c]..starts[c + 1]]`.
    starts: Vec<usize>,
    items: Vec<u32>,
    segments: Vec<PlanarSegment>,
}

impl SegmentGrid {
    /// Indexes the segments that can matter for queries inside `domain`
    /// (`(min_x, min_y, max_x, max_y)`). Segments are cut into pieces no
    /// longer than `radius` before registration.
    pub fn new(segments: &[PlanarSegment], radius: f64, domain: (f64, f64, f64, f64)) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        let min = (domain.0 - radius, domain.1 - radius);
        let max = (domain.2 + radius, domain.3 + radius);
        let cols = (((max.0 - min.0) / radius).ceil() as usize).max(1);
        let rows = (((max.1 - min.1) / radius).ceil() as usize).max(1);

        let overlaps = |a: (f64, f64), b: (f64, f64)| {
            a.0.max(b.0) >= min.0 && a.0.min(b.0) <= max.0 && a.1.max(b.1) >= min.1 && a.1.min(b.1) <= max.1
        };
        let mut pieces: Vec<PlanarSegment> = Vec::new();
        for &(a, b) in segments {
            if !overlaps(a, b) {
                continue;
            }
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            let n = ((len / radius).ceil() as usize).max(1);
            for k in 0..n {
                let t0 = k as f64 / n as f64;
                let t1 = (k + 1) as f64 / n as f64;
                let p = (a.0 + (b.0 - a.0) * t0, a.1 + (b.1 - a.1) * t0);
                let q = if k + 1 == n {
                    b
                } else {
                    (a.0 + (b.0 - a.0) * t1, a.1 + (b.1 - a.1) * t1)
                };
                if overlaps(p, q) {
                    pieces.push((p, q));
                }
            }
        }

        let cell_range = |lo: f64, hi: f64, origin: f64, count: usize| {
            let a = ((lo - origin) / radius).floor().max(0.0) as usize;
            let b = (((hi - origin) / radius).floor().max(0.0) as usize).min(count - 1);
            a.min(count - 1)..=b
        };
        let mut cells: Vec<(usize, u32)> = Vec::new();
        for (i, &(a, b)) in pieces.iter().enumerate() {
            for r in cell_range(a.1.min(b.1), a.1.max(b.1), min.1, rows) {
                for c in cell_range(a.0.min(b.0), a.0.max(b.0), min.0, cols) {
                    cells.push((r * cols + c, i as u32));
                }
            }
        }
        cells.sort_unstable();
        let mut starts = vec![0usize; rows * cols + 1];
        for &(cell, _) in &cells {
            starts[cell + 1] += 1;
        }
        for i in 0..rows * cols {
            starts[i + 1] += starts[i];
        }
        Self {
            radius,
            min,
            cols,
            rows,
            starts,
            items: cells.into_iter().map(|(_, i)| i).collect(),
            segments: pieces,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Whether any indexed segment lies within the radius of `p`. `p` must
    /// be inside the domain given at construction.
    pub fn any_within(&self, p: (f64, f64)) -> bool {
        let c = ((p.0 - self.min.0) / self.radius).floor() as isize;
        let r = ((p.1 - self.min.1) / self.radius).floor() as isize;
        for rr in (r - 1).max(0)..=(r + 1).min(self.rows as isize - 1) {
            for cc in (c - 1).max(0)..=(c + 1).min(self.cols as isize - 1) {
                let cell = rr as usize * self.cols + cc as usize;
                for &i in &self.items[self.starts[cell]..self.starts[cell + 1]] {
                    let (a, b) = self.segments[i as usize];
                    if point_segment_distance(p, a, b) <= self.radius {
                        return true;
                    }
                }
            }
        }
        false
    }
}
