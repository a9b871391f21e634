//! Spherical geodesy primitives: points, polylines, distances, bearings,
//! segment curvature and connection turn angles.
//!
//! The Earth is modelled as a sphere of radius [`EARTH_RADIUS_M`]. Bearings are
//! degrees clockwise from true north in `[0, 360)`. Angular differences are
//! always wrapped through ±180 before use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline has identical consecutive points at index {0}")]
    RepeatedPoint(usize),
}

/// A latitude/longitude pair in degrees.
///
/// Latitude lies in `[-90, 90]`; longitude is normalized to `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidCoordinate { lat, lon });
        }
        Ok(Self {
            lat,
            lon: normalize_longitude(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl std::fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.7},{:.7}", self.lat, self.lon)
    }
}

fn normalize_longitude(lon: f64) -> f64 {
    if lon > -180.0 && lon <= 180.0 {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if wrapped == -180.0 {
        180.0
    } else {
        wrapped
    }
}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_signed(deg: f64) -> f64 {
    let mut a = deg.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Unsigned angular distance between two angles, in `[0, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_signed(a - b).abs()
}

/// Haversine great-circle distance in meters.
pub fn geo_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Great-circle initial bearing from `a` towards `b`, in `[0, 360)`.
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if a == b {
        return Err(GeoError::DegenerateInput("bearing between identical points"));
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// An ordered run of at least two points with no zero-length sub-segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<GeoPoint>,
}

impl Polyline {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeoError::RepeatedPoint(i + 1));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn first(&self) -> GeoPoint {
        self.points[0]
    }

    pub fn last(&self) -> GeoPoint {
        self.points[self.points.len() - 1]
    }

    /// Sum of haversine lengths of the sub-segments.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| geo_distance(w[0], w[1])).sum()
    }

    /// Bearings of consecutive sub-segments.
    pub fn bearings(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| initial_bearing(w[0], w[1]).expect("consecutive points are distinct"))
            .collect()
    }

    /// Bearing of the first sub-segment.
    pub fn entry_bearing(&self) -> f64 {
        initial_bearing(self.points[0], self.points[1]).expect("consecutive points are distinct")
    }

    /// Bearing of the last sub-segment.
    pub fn exit_bearing(&self) -> f64 {
        let n = self.points.len();
        initial_bearing(self.points[n - 2], self.points[n - 1]).expect("consecutive points are distinct")
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }
}

/// Mean wrapped deviation of a polyline's sub-segment bearings from its
/// first-to-last bearing.
pub fn segment_curvature(line: &Polyline) -> Result<f64, GeoError> {
    let reference = initial_bearing(line.first(), line.last())
        .map_err(|_| GeoError::DegenerateInput("closed polyline has no reference bearing"))?;
    let bearings = line.bearings();
    let total: f64 = bearings.iter().map(|&b| angle_diff(b, reference)).sum();
    Ok(total / bearings.len() as f64)
}

/// Signed turn between the exit of `incoming` and the entry of `outgoing`.
///
/// Positive values are clockwise (right turns); the result is in `(-180, 180]`.
pub fn turn_angle(incoming: &Polyline, outgoing: &Polyline) -> Result<f64, GeoError> {
    if incoming.last() != outgoing.first() {
        return Err(GeoError::DegenerateInput("polylines are not joined"));
    }
    Ok(wrap_signed(outgoing.entry_bearing() - incoming.exit_bearing()))
}

/// Equirectangular projection around an origin, in meters east/north.
///
/// Accurate to well under a meter over the few tens of kilometers the
/// metrics work with.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    origin: GeoPoint,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        let dlon = wrap_signed(p.lon - self.origin.lon);
        let x = dlon.to_radians() * EARTH_RADIUS_M * self.cos_lat;
        let y = (p.lat - self.origin.lat).to_radians() * EARTH_RADIUS_M;
        (x, y)
    }

    pub fn unproject(&self, x: f64, y: f64) -> GeoPoint {
        let lat = self.origin.lat + (y / EARTH_RADIUS_M).to_degrees();
        let lon = self.origin.lon + (x / (EARTH_RADIUS_M * self.cos_lat)).to_degrees();
        GeoPoint::new(lat.clamp(-90.0, 90.0), lon).expect("finite projected coordinates")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    /// Bearing via the spherical law of cosines on the polar triangle, a
    /// different route from the atan2 form used above.
    fn bearing_oracle(a: GeoPoint, b: GeoPoint) -> f64 {
        let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let c = (phi1.sin() * phi2.sin() + phi1.cos() * phi2.cos() * dl.cos()).acos();
        let cos_brg = (phi2.sin() - phi1.sin() * c.cos()) / (phi1.cos() * c.sin());
        let brg = cos_brg.clamp(-1.0, 1.0).acos().to_degrees();
        if dl.sin() >= 0.0 {
            brg
        } else {
            360.0 - brg
        }
    }

    #[test]
    fn longitude_is_normalized() {
        assert_eq!(p(0.0, 190.0).lon(), -170.0);
        assert_eq!(p(0.0, -180.0).lon(), 180.0);
        assert_eq!(p(0.0, 540.0).lon(), 180.0);
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn cardinal_bearings() {
        assert_abs_diff_eq!(initial_bearing(p(0.0, 0.0), p(1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            initial_bearing(p(0.0, 0.0), p(0.0, 1.0)).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            initial_bearing(p(0.0, 0.0), p(0.0, -1.0)).unwrap(),
            270.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            initial_bearing(p(1.0, 1.0), p(1.0, 1.0)),
            Err(GeoError::DegenerateInput(_))
        ));
    }

    #[test]
    fn paris_to_london_matches_spherical_oracle() {
        let paris = p(48.8566, 2.3522);
        let london = p(51.5074, -0.1278);
        // Frozen from an ECEF tangent-vector computation done outside this crate.
        let expected = 330.021_092_856_063_5;
        assert_abs_diff_eq!(bearing_oracle(paris, london), expected, epsilon = 1e-6);
        assert_abs_diff_eq!(initial_bearing(paris, london).unwrap(), expected, epsilon = 1e-6);
    }

    #[test]
    fn one_degree_arc_length() {
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert_abs_diff_eq!(expected, 111_194.926_644_558_73, epsilon = 1e-6);
        assert_abs_diff_eq!(geo_distance(p(0.0, 0.0), p(0.0, 1.0)), expected, epsilon = 1e-6);
        assert_abs_diff_eq!(geo_distance(p(0.0, 0.0), p(1.0, 0.0)), expected, epsilon = 1e-6);
        assert_eq!(geo_distance(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert_eq!(Polyline::new(vec![p(0.0, 0.0)]), Err(GeoError::TooFewPoints(1)));
        assert_eq!(
            Polyline::new(vec![p(0.0, 0.0), p(0.0, 0.0), p(0.0, 1.0)]),
            Err(GeoError::RepeatedPoint(1))
        );
    }

    #[test]
    fn curvature_examples() {
        let straight = Polyline::new(vec![p(0.0, 0.0), p(0.001, 0.0), p(0.002, 0.0)]).unwrap();
        assert_abs_diff_eq!(segment_curvature(&straight).unwrap(), 0.0, epsilon = 1e-9);
        let two = Polyline::new(vec![p(0.0, 0.0), p(0.001, 0.001)]).unwrap();
        assert_eq!(segment_curvature(&two).unwrap(), 0.0);
        // north leg then east leg: bearings {0, ~90}, reference ~45
        let corner = Polyline::new(vec![p(0.0, 0.0), p(0.001, 0.0), p(0.001, 0.001)]).unwrap();
        assert_abs_diff_eq!(segment_curvature(&corner).unwrap(), 45.0, epsilon = 1e-4);
        let closed = Polyline::new(vec![p(0.0, 0.0), p(0.001, 0.0), p(0.0, 0.0)]).unwrap();
        assert!(matches!(segment_curvature(&closed), Err(GeoError::DegenerateInput(_))));
    }

    #[test]
    fn turn_angle_examples() {
        let north = Polyline::new(vec![p(0.0, 0.0), p(0.001, 0.0)]).unwrap();
        let north2 = Polyline::new(vec![p(0.001, 0.0), p(0.002, 0.0)]).unwrap();
        let east = Polyline::new(vec![p(0.001, 0.0), p(0.001, 0.001)]).unwrap();
        let west = Polyline::new(vec![p(0.001, 0.0), p(0.001, -0.001)]).unwrap();
        assert_abs_diff_eq!(turn_angle(&north, &north2).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(turn_angle(&north, &east).unwrap(), 90.0, epsilon = 1e-4);
        assert_abs_diff_eq!(turn_angle(&north, &west).unwrap(), -90.0, epsilon = 1e-4);
        assert!(turn_angle(&north, &north).is_err());
    }

    #[test]
    fn local_frame_round_trip() {
        let frame = LocalFrame::new(p(60.17, 24.94));
        let q = p(60.18, 24.95);
        let (x, y) = frame.project(q);
        let back = frame.unproject(x, y);
        assert_abs_diff_eq!(back.lat(), q.lat(), epsilon = 1e-12);
        assert_abs_diff_eq!(back.lon(), q.lon(), epsilon = 1e-12);
        assert_abs_diff_eq!((x * x + y * y).sqrt(), geo_distance(frame.origin(), q), epsilon = 2.0);
    }

    /// Builds a small planar polyline from headings/lengths around `origin`,
    /// rotated by `rotation` degrees.
    fn planar_polyline(origin: GeoPoint, steps: &[(f64, f64)], rotation: f64) -> Polyline {
        let frame = LocalFrame::new(origin);
        let (mut x, mut y) = (0.0, 0.0);
        let mut pts = vec![origin];
        for &(heading, len) in steps {
            let h = (heading + rotation).to_radians();
            x += len * h.sin();
            y += len * h.cos();
            pts.push(frame.unproject(x, y));
        }
        Polyline::new(pts).unwrap()
    }

    proptest! {
        #[test]
        fn wrapped_differences_stay_in_range(a in -1000.0f64..1000.0, b in -1000.0f64..1000.0) {
            let s = wrap_signed(a - b);
            prop_assert!(s > -180.0 && s <= 180.0);
            let u = angle_diff(a, b);
            prop_assert!((0.0..=180.0).contains(&u));
            prop_assert!((u - s.abs()).abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality(
            la in -80.0f64..80.0, lo in -179.0f64..179.0,
            lb in -80.0f64..80.0, lob in -179.0f64..179.0,
            lc in -80.0f64..80.0, loc in -179.0f64..179.0,
        ) {
            let (a, b, c) = (p(la, lo), p(lb, lob), p(lc, loc));
            let ab = geo_distance(a, b);
            let bc = geo_distance(b, c);
            let ac = geo_distance(a, c);
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
            prop_assert!((ab - geo_distance(b, a)).abs() <= 1e-6 * ab.max(1.0));
        }

        #[test]
        fn curvature_invariant_under_rotation(
            steps in proptest::collection::vec((-60.0f64..60.0, 20.0f64..120.0), 2..6),
            rotation in 0.0f64..360.0,
            lat in -60.0f64..60.0,
        ) {
            // cumulative headings so the polyline wanders but never folds back
            let mut heading = 0.0;
            let abs: Vec<(f64, f64)> = steps.iter().map(|&(dh, len)| { heading += dh * 0.5; (heading, len) }).collect();
            let origin = p(lat, 10.0);
            let base = planar_polyline(origin, &abs, 0.0);
            let rotated = planar_polyline(origin, &abs, rotation);
            let (cb, cr) = (segment_curvature(&base).unwrap(), segment_curvature(&rotated).unwrap());
            prop_assert!((cb - cr).abs() < 0.1, "{} vs {}", cb, cr);
        }

        #[test]
        fn curvature_of_reverse_matches(
            steps in proptest::collection::vec((-60.0f64..60.0, 20.0f64..120.0), 2..6),
            lat in -60.0f64..60.0,
        ) {
            let mut heading = 30.0;
            let abs: Vec<(f64, f64)> = steps.iter().map(|&(dh, len)| { heading += dh * 0.5; (heading, len) }).collect();
            let line = planar_polyline(p(lat, -45.0), &abs, 0.0);
            let fwd = segment_curvature(&line).unwrap();
            let rev = segment_curvature(&line.reversed()).unwrap();
            prop_assert!((fwd - rev).abs() < 0.1, "{} vs {}", fwd, rev);
        }
    }
}
