//! Inertial dead reckoning, sensor error distributions, and thresholds
//! derived from their percentiles.
//!
//! Traces are expected to be calibrated and rotated into the vehicle frame
//! already: x forward, y right, z down. With z down a positive yaw rate is
//! a clockwise (right) turn, matching the graph's turn-angle sign.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::angle_diff;
use crate::signature::{curvature_profile, ThresholdSet};

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("timestamps must be strictly increasing (row {0})")]
    NonMonotonic(usize),
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("trace has fewer than two samples")]
    TooShort,
    #[error("time {0} lies outside the trace")]
    OutOfRange(f64),
    #[error("intervals must be sorted and non-empty")]
    BadInterval,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("actual distance at index {0} is not positive")]
    NonPositiveActual(usize),
    #[error("empty distribution: {0}")]
    EmptyDistribution(&'static str),
    #[error("percentile must lie in (0, 100)")]
    BadPercentile,
    #[error("derived distance window [{low}, {high}] does not contain 1")]
    InvalidWindow { low: f64, high: f64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown annotation kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Geo(#[from] crate::geo::GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    /// Seconds.
    pub t: f64,
    /// m/s².
    pub accel: [f64; 3],
    /// rad/s.
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImuTrace {
    samples: Vec<ImuSample>,
}

impl ImuTrace {
    pub fn new(samples: Vec<ImuSample>) -> Result<Self, SensorError> {
        if samples.len() < 2 {
            return Err(SensorError::TooShort);
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.accel.iter().chain(&s.gyro).all(|v| v.is_finite())) {
                return Err(SensorError::NonFinite(i));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(SensorError::NonMonotonic(i));
            }
        }
        Ok(Self { samples })
    }

    /// Builds a trace from a sampling function on `[0, duration]`.
    pub fn from_fn(duration: f64, rate_hz: f64, f: impl Fn(f64) -> ([f64; 3], [f64; 3])) -> Result<Self, SensorError> {
        let n = (duration * rate_hz).round() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 / rate_hz;
                let (accel, gyro) = f(t);
                ImuSample { t, accel, gyro }
            })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    fn channel(&self, f: impl Fn(&ImuSample) -> f64, window: usize) -> Vec<f64> {
        moving_average(&self.samples.iter().map(f).collect::<Vec<_>>(), window)
    }
}

/// Centered moving average. The window is rounded up to an odd size and
/// shrinks symmetrically at the ends so linear signals pass unchanged.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let s: f64 = values[i - h..=i + h].iter().sum();
            s / (2 * h + 1) as f64
        })
        .collect()
}

/// Linearly interpolated value of a sampled signal at time `t`.
fn sample_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&x| x <= t);
    if i == 0 {
        return values[0];
    }
    if i >= times.len() {
        return values[times.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
}

/// Breakpoints of a signal restricted to `[a, b]`.
fn window_points(times: &[f64], values: &[f64], a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![(a, sample_at(times, values, a))];
    let lo = times.partition_point(|&x| x <= a);
    let hi = times.partition_point(|&x| x < b);
    pts.extend((lo..hi).map(|i| (times[i], values[i])));
    pts.push((b, sample_at(times, values, b)));
    pts
}

fn check_interval(trace: &ImuTrace, a: f64, b: f64) -> Result<(), SensorError> {
    for t in [a, b] {
        if !(t >= trace.start() && t <= trace.end()) {
            return Err(SensorError::OutOfRange(t));
        }
    }
    if !(b >= a) {
        return Err(SensorError::BadInterval);
    }
    Ok(())
}

/// Distances between consecutive intersection times from the forward
/// acceleration, integrated twice with the trapezoid rule. Velocity is
/// reset to zero at the start of every interval.
pub fn dead_reckon_distances(trace: &ImuTrace, intersections: &[f64], window: usize) -> Result<Vec<f64>, SensorError> {
    let times = trace.times();
    let ax = trace.channel(|s| s.accel[0], window);
    let mut out = Vec::new();
    for w in intersections.windows(2) {
        check_interval(trace, w[0], w[1])?;
        let pts = window_points(&times, &ax, w[0], w[1]);
        let (mut v, mut d) = (0.0, 0.0);
        for p in pts.windows(2) {
            let dt = p[1].0 - p[0].0;
            let v_next = v + 0.5 * (p[0].1 + p[1].1) * dt;
            d += 0.5 * (v + v_next) * dt;
            v = v_next;
        }
        out.push(d);
    }
    if let [only] = intersections {
        check_interval(trace, *only, *only)?;
    }
    Ok(out)
}

/// Turn angles in degrees from the yaw rate integrated over each window.
pub fn integrate_turns(trace: &ImuTrace, windows: &[(f64, f64)], window: usize) -> Result<Vec<f64>, SensorError> {
    let times = trace.times();
    let gz = trace.channel(|s| s.gyro[2], window);
    windows
        .iter()
        .map(|&(a, b)| {
            check_interval(trace, a, b)?;
            let pts = window_points(&times, &gz, a, b);
            let rad: f64 = pts
                .windows(2)
                .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
                .sum();
            Ok(rad.to_degrees())
        })
        .collect()
}

pub fn distance_error_ratios(derived: &[f64], actual: &[f64]) -> Result<Vec<f64>, SensorError> {
    if derived.len() != actual.len() {
        return Err(SensorError::LengthMismatch(derived.len(), actual.len()));
    }
    if let Some(i) = actual.iter().position(|&a| !(a > 0.0)) {
        return Err(SensorError::NonPositiveActual(i));
    }
    Ok(derived.iter().zip(actual).map(|(d, a)| d / a).collect())
}

pub fn turn_errors(derived: &[f64], actual: &[f64]) -> Result<Vec<f64>, SensorError> {
    if derived.len() != actual.len() {
        return Err(SensorError::LengthMismatch(derived.len(), actual.len()));
    }
    Ok(derived.iter().zip(actual).map(|(&d, &a)| angle_diff(d, a)).collect())
}

/// Pointwise gaps between the resampled curvature profiles of matching
/// legs, pooled over all legs.
pub fn curvature_errors(sensor: &[Vec<f64>], map: &[Vec<f64>], samples: usize) -> Result<Vec<f64>, SensorError> {
    if sensor.len() != map.len() {
        return Err(SensorError::LengthMismatch(sensor.len(), map.len()));
    }
    let mut out = Vec::with_capacity(sensor.len() * samples);
    for (s, m) in sensor.iter().zip(map) {
        let ps = curvature_profile(s, samples)?;
        let pm = curvature_profile(m, samples)?;
        out.extend(ps.iter().zip(&pm).map(|(a, b)| (a - b).abs()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistributions {
    pub distance_ratios: Vec<f64>,
    pub turn_errors: Vec<f64>,
    pub curvature_errors: Vec<f64>,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Raw percentile values behind a threshold set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuantiles {
    pub turn: f64,
    pub curvature: f64,
    pub distance_low: f64,
    pub distance_high: f64,
}

/// Turn and curvature errors at `p`; distance ratios at the two-sided
/// `(100 - p) / 2` and `(100 + p) / 2` percentiles.
pub fn threshold_quantiles(dists: &ErrorDistributions, p: f64) -> Result<ThresholdQuantiles, SensorError> {
    if !(p > 0.0 && p < 100.0) {
        return Err(SensorError::BadPercentile);
    }
    let get = |v: &[f64], q: f64, name| percentile(v, q).ok_or(SensorError::EmptyDistribution(name));
    Ok(ThresholdQuantiles {
        turn: get(&dists.turn_errors, p, "turn_errors")?,
        curvature: get(&dists.curvature_errors, p, "curvature_errors")?,
        distance_low: get(&dists.distance_ratios, (100.0 - p) / 2.0, "distance_ratios")?,
        distance_high: get(&dists.distance_ratios, (100.0 + p) / 2.0, "distance_ratios")?,
    })
}

/// Threshold set from error percentiles. Fails if the distance window does
/// not contain 1.
pub fn derive_thresholds(dists: &ErrorDistributions, p: f64) -> Result<ThresholdSet, SensorError> {
    let q = threshold_quantiles(dists, p)?;
    ThresholdSet::new(q.turn, q.curvature, q.distance_low, q.distance_high).map_err(|_| SensorError::InvalidWindow {
        low: q.distance_low,
        high: q.distance_high,
    })
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    gx: f64,
    gy: f64,
    gz: f64,
}

/// Reads a `t,ax,ay,az,gx,gy,gz` CSV trace.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<ImuTrace, SensorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let samples = rdr
        .deserialize::<TraceRow>()
        .map(|row| {
            row.map(|r| ImuSample {
                t: r.t,
                accel: [r.ax, r.ay, r.az],
                gyro: [r.gx, r.gy, r.gz],
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ImuTrace::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Intersection,
    Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: AnnotationKind,
}

/// Reads a `t_start,t_end,kind` annotation sidecar.
pub fn read_annotations_csv<R: Read>(reader: R) -> Result<Vec<Annotation>, SensorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, SensorError> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SensorError::UnknownKind(rec.iter().collect::<Vec<_>>().join(",")))
        };
        let kind = match rec.get(2).unwrap_or("") {
            "intersection" => AnnotationKind::Intersection,
            "turn" => AnnotationKind::Turn,
            other => return Err(SensorError::UnknownKind(other.to_string())),
        };
        out.push(Annotation {
            t_start: num(0)?,
            t_end: num(1)?,
            kind,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn accel_trace(duration: f64, f: impl Fn(f64) -> f64) -> ImuTrace {
        ImuTrace::from_fn(duration, 100.0, |t| ([f(t), 0.0, 0.0], [0.0; 3])).unwrap()
    }

    #[test]
    fn constant_acceleration() {
        let tr = accel_trace(10.0, |_| 1.0);
        let d = dead_reckon_distances(&tr, &[0.0, 10.0], 1).unwrap();
        assert!((d[0] - 50.0).abs() < 1e-9);
        let z = accel_trace(10.0, |_| 0.0);
        assert_eq!(dead_reckon_distances(&z, &[0.0, 4.0, 10.0], 5).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn trapezoidal_speed_profile() {
        // 2 m/s² for 4 s, ramp down to 0 over 2 s, cruise 8 s at 10 m/s,
        // ramp to -2 m/s² over 2 s, brake 4 s. Closed form:
        // 16 + 56/3 + 80 + 56/3 + 16 = 448/3 m.
        let tr = accel_trace(20.0, |t| match t {
            t if t <= 4.0 => 2.0,
            t if t <= 6.0 => 2.0 - (t - 4.0),
            t if t <= 14.0 => 0.0,
            t if t <= 16.0 => -(t - 14.0),
            _ => -2.0,
        });
        let d = dead_reckon_distances(&tr, &[0.0, 20.0], 1).unwrap()[0];
        let want = 448.0 / 3.0;
        assert!((d - want).abs() / want < 1e-3, "{d}");
    }

    #[test]
    fn out_of_range_times() {
        let tr = accel_trace(10.0, |_| 1.0);
        assert!(matches!(
            dead_reckon_distances(&tr, &[0.0, 11.0], 1),
            Err(SensorError::OutOfRange(_))
        ));
        assert!(matches!(
            integrate_turns(&tr, &[(-1.0, 2.0)], 1),
            Err(SensorError::OutOfRange(_))
        ));
        assert!(matches!(
            integrate_turns(&tr, &[(3.0, 2.0)], 1),
            Err(SensorError::BadInterval)
        ));
    }

    #[test]
    fn turn_integration() {
        let tr = ImuTrace::from_fn(9.0, 50.0, |_| ([0.0; 3], [0.0, 0.0, std::f64::consts::PI / 18.0])).unwrap();
        let a = integrate_turns(&tr, &[(0.0, 9.0)], 5).unwrap()[0];
        assert!((a - 90.0).abs() < 1e-9);
        // Raised cosine pulse w(t) = A (1 - cos(2πt/T)) / 2 integrates to A·T/2.
        let (amp, period) = (0.4, 6.0);
        let tr = ImuTrace::from_fn(period, 100.0, |t| {
            (
                [0.0; 3],
                [0.0, 0.0, amp * (1.0 - (std::f64::consts::TAU * t / period).cos()) / 2.0],
            )
        })
        .unwrap();
        let got = integrate_turns(&tr, &[(0.0, period)], 1).unwrap()[0];
        let want = (amp * period / 2.0).to_degrees();
        assert!((got - want).abs() / want < 1e-3);
    }

    #[test]
    fn error_lists() {
        assert_eq!(distance_error_ratios(&[2.0, 4.0], &[1.0, 2.0]).unwrap(), vec![2.0, 2.0]);
        assert!(matches!(
            distance_error_ratios(&[1.0], &[0.0]),
            Err(SensorError::NonPositiveActual(0))
        ));
        assert!(matches!(
            distance_error_ratios(&[1.0], &[]),
            Err(SensorError::LengthMismatch(1, 0))
        ));
        assert_eq!(turn_errors(&[175.0], &[-175.0]).unwrap(), vec![10.0]);
        assert_eq!(turn_errors(&[30.0, -10.0], &[30.0, -10.0]).unwrap(), vec![0.0, 0.0]);
        let legs = vec![vec![0.0, 10.0, 30.0]];
        let shifted = vec![vec![100.0, 110.0, 130.0]];
        assert!(curvature_errors(&legs, &shifted, 10)
            .unwrap()
            .iter()
            .all(|&e| e < 1e-12));
        let e = curvature_errors(&[vec![0.0, 90.0]], &[vec![0.0, 0.0, 90.0]], 5).unwrap();
        assert_eq!(e, vec![0.0, 22.5, 45.0, 22.5, 0.0]);
    }

    #[test]
    fn percentile_matches_numpy_linear() {
        // numpy.percentile([1, 2, 3, 4], 75) == 3.25
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 75.0), Some(3.25));
        assert_eq!(percentile(&[5.0], 30.0), Some(5.0));
        assert_eq!(percentile(&[], 30.0), None);
    }

    #[test]
    fn constant_distributions() {
        let d = ErrorDistributions {
            distance_ratios: vec![1.0; 7],
            turn_errors: vec![3.0; 7],
            curvature_errors: vec![0.5; 7],
        };
        let t = derive_thresholds(&d, 75.0).unwrap();
        assert_eq!(t, ThresholdSet::new(3.0, 0.5, 1.0, 1.0).unwrap());
        let skewed = ErrorDistributions {
            distance_ratios: vec![2.0; 3],
            ..d.clone()
        };
        assert!(matches!(
            derive_thresholds(&skewed, 75.0),
            Err(SensorError::InvalidWindow { .. })
        ));
        assert!(matches!(
            derive_thresholds(&ErrorDistributions::default(), 75.0),
            Err(SensorError::EmptyDistribution(_))
        ));
        assert!(matches!(derive_thresholds(&d, 100.0), Err(SensorError::BadPercentile)));
    }

    #[test]
    fn csv_round_trip() {
        let text = "t,ax,ay,az,gx,gy,gz\n0,1,0,9.8,0,0,0\n0.5,1,0,9.8,0,0,0.1\n1.0,1,0,9.8,0,0,0.2\n";
        let tr = read_trace_csv(text.as_bytes()).unwrap();
        assert_eq!(tr.samples().len(), 3);
        assert_eq!(tr.samples()[1].gyro[2], 0.1);
        let bad = "t,ax,ay,az,gx,gy,gz\n1,0,0,0,0,0,0\n0.5,0,0,0,0,0,0\n";
        assert!(matches!(
            read_trace_csv(bad.as_bytes()),
            Err(SensorError::NonMonotonic(1))
        ));
        let ann = read_annotations_csv("t_start,t_end,kind\n0,0,intersection\n2.5,4,turn\n".as_bytes()).unwrap();
        assert_eq!(
            ann[1],
            Annotation {
                t_start: 2.5,
                t_end: 4.0,
                kind: AnnotationKind::Turn
            }
        );
        assert!(read_annotations_csv("t_start,t_end,kind\n0,1,stop\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn distance_scales_linearly(alpha in 0.1f64..10.0, a0 in -2.0f64..2.0, a1 in -1.0f64..1.0) {
            let base = accel_trace(8.0, |t| a0 + a1 * t);
            let scaled = accel_trace(8.0, |t| alpha * (a0 + a1 * t));
            let d0 = dead_reckon_distances(&base, &[0.0, 3.3, 8.0], 5).unwrap();
            let d1 = dead_reckon_distances(&scaled, &[0.0, 3.3, 8.0], 5).unwrap();
            for (x, y) in d0.iter().zip(&d1) {
                prop_assert!((alpha * x - y).abs() <= 1e-9 * (alpha * x).abs().max(1e-9));
            }
        }

        #[test]
        fn thresholds_monotone_in_percentile(
            ratios in proptest::collection::vec(0.01f64..5.0, 1..40),
            turns in proptest::collection::vec(0.0f64..90.0, 1..40),
            curv in proptest::collection::vec(0.0f64..30.0, 1..40),
            p1 in 1.0f64..99.0,
            p2 in 1.0f64..99.0,
        ) {
            let d = ErrorDistributions { distance_ratios: ratios, turn_errors: turns, curvature_errors: curv };
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let a = threshold_quantiles(&d, lo).unwrap();
            let b = threshold_quantiles(&d, hi).unwrap();
            prop_assert!(a.turn <= b.turn && a.curvature <= b.curvature);
            prop_assert!(b.distance_low <= a.distance_low && a.distance_high <= b.distance_high);
        }
    }
}
