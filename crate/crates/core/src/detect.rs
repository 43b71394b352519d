//! Power-change anomaly detectors and placement-level detection scores.
//!
//! Each sensor watches the complex power `V_i · conj(I_e)` on its adjacent
//! branches and summarizes the step-to-step change with three detectors:
//! the largest single change, the magnitude of the summed change, and the
//! total deviation of changes about their mean. Detector vectors are
//! standardized against a sliding median / IQR history.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSnapshot, PowerGrid, ScenarioSet};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectorVector {
    pub x_se: f64,
    pub x_ga: f64,
    pub x_gd: f64,
}

impl DetectorVector {
    pub fn components(&self) -> [f64; 3] {
        [self.x_se, self.x_ga, self.x_gd]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub lambda_a: f64,
    pub window_w: usize,
    pub iqr_floor: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            lambda_a: 50.0,
            window_w: 32,
            iqr_floor: 1e-6,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_a > 0.0 && self.window_w >= 4 && self.iqr_floor > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid detection config {self:?}")))
        }
    }

    /// First timestep that can be scored once the window is full.
    pub fn first_scorable_time(&self) -> usize {
        self.window_w + 1
    }
}

/// Detector vector for a set of per-branch power changes.
pub fn detector_from_deltas(deltas: &[Complex64]) -> DetectorVector {
    if deltas.is_empty() {
        return DetectorVector::default();
    }
    let x_se = deltas.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let sum: Complex64 = deltas.iter().sum();
    let mean = sum / deltas.len() as f64;
    let x_gd = deltas.iter().map(|d| (d - mean).norm()).sum();
    DetectorVector {
        x_se,
        x_ga: sum.norm(),
        x_gd,
    }
}

/// Change in complex power seen by `sensor` on each adjacent branch between
/// two consecutive snapshots. Branch currents are taken as leaving the sensor.
pub fn power_deltas(sensor: usize, prev: &GridSnapshot, curr: &GridSnapshot, grid: &PowerGrid) -> Vec<Complex64> {
    let power = |s: &GridSnapshot, e: usize| s.node_voltage[sensor] * s.current_from(grid, e, sensor).conj();
    grid.incident(sensor)
        .iter()
        .map(|&e| power(curr, e) - power(prev, e))
        .collect()
}

pub fn detector_vector(
    sensor: usize,
    prev: &GridSnapshot,
    curr: &GridSnapshot,
    grid: &PowerGrid,
) -> Result<DetectorVector> {
    if sensor >= grid.node_count() {
        return Err(Error::InvalidArgument(format!("no sensor node {sensor}")));
    }
    if prev.t + 1 != curr.t {
        return Err(Error::InvalidArgument(format!(
            "snapshots not consecutive: {} then {}",
            prev.t, curr.t
        )));
    }
    Ok(detector_from_deltas(&power_deltas(sensor, prev, curr, grid)))
}

/// Sliding window of detector vectors with its componentwise median and IQR.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorHistory {
    window: VecDeque<DetectorVector>,
    capacity: usize,
    med: [f64; 3],
    iqr: [f64; 3],
}

impl DetectorHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            med: [0.0; 3],
            iqr: [0.0; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn median(&self) -> [f64; 3] {
        self.med
    }

    pub fn iqr(&self) -> [f64; 3] {
        self.iqr
    }

    pub fn push(&mut self, x: DetectorVector) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(x);
        for c in 0..3 {
            let mut vals: Vec<f64> = self.window.iter().map(|v| v.components()[c]).collect();
            vals.sort_by(f64::total_cmp);
            self.med[c] = quantile(&vals, 0.5);
            self.iqr[c] = (quantile(&vals, 0.75) - quantile(&vals, 0.25)).max(0.0);
        }
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Largest componentwise standardized deviation of `x` from the history,
/// then appends `x` to the history.
pub fn sensor_anomalousness(hist: &mut DetectorHistory, x: DetectorVector, cfg: &DetectionConfig) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::InsufficientHistory);
    }
    let xs = x.components();
    let score = (0..3)
        .map(|c| (xs[c] - hist.med[c]).abs() / hist.iqr[c].max(cfg.iqr_floor))
        .fold(0.0, f64::max);
    hist.push(x);
    Ok(score)
}

/// Maximum sensor-level score over the placed sensors.
pub fn overall_score(scores: &[f64], placed: &[usize]) -> Result<f64> {
    if placed.is_empty() {
        return Err(Error::EmptySensorSet);
    }
    Ok(placed.iter().map(|&i| scores[i]).fold(f64::NEG_INFINITY, f64::max))
}

/// Per-sensor scores at every timestep from the first scorable one onward.
/// Returns `(times, scores[sensor][k])`.
fn stream_scores(
    scenarios: &ScenarioSet,
    sensors: &[usize],
    cfg: &DetectionConfig,
    grid: &PowerGrid,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let start = cfg.first_scorable_time();
    if let Some(&first) = scenarios.anomaly_times.iter().next() {
        if first < start {
            return Err(Error::InsufficientWarmup { time: first, needed: start });
        }
    }
    let snaps = &scenarios.snapshots;
    let times: Vec<usize> = (start..snaps.len()).collect();
    let mut out = Vec::with_capacity(sensors.len());
    for &sensor in sensors {
        let mut hist = DetectorHistory::new(cfg.window_w);
        let mut scores = Vec::with_capacity(times.len());
        for t in 1..snaps.len() {
            let x = detector_vector(sensor, &snaps[t - 1], &snaps[t], grid)?;
            if t < start {
                hist.push(x);
            } else {
                scores.push(sensor_anomalousness(&mut hist, x, cfg)?);
            }
        }
        out.push(scores);
    }
    Ok((times, out))
}

/// Fraction of anomaly times at which some placed sensor's score exceeds
/// `lambda_a`.
pub fn detection_score(
    scenarios: &ScenarioSet,
    placed: &[usize],
    cfg: &DetectionConfig,
    grid: &PowerGrid,
) -> Result<f64> {
    if placed.is_empty() {
        return Err(Error::EmptySensorSet);
    }
    if scenarios.anomaly_times.is_empty() {
        return Err(Error::InvalidArgument("no anomaly times to score".into()));
    }
    let (times, scores) = stream_scores(scenarios, placed, cfg, grid)?;
    let offset = times[0];
    let detected = scenarios
        .anomaly_times
        .iter()
        .filter(|&&r| {
            let k = r - offset;
            placed
                .iter()
                .enumerate()
                .map(|(s, _)| scores[s][k])
                .fold(f64::NEG_INFINITY, f64::max)
                > cfg.lambda_a
        })
        .count();
    Ok(detected as f64 / scenarios.anomaly_times.len() as f64)
}

/// Sensor-level scores for every node, precomputed once so that detection
/// scores of many candidate placements can be read off without re-running
/// the detectors. Per-sensor histories are independent of which other
/// sensors are placed, so the table is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorScoreTable {
    /// `at_anomaly[sensor][i]` for the i-th anomaly time.
    at_anomaly: Vec<Vec<f64>>,
    /// `at_normal[sensor][k]` for scored timesteps without an anomaly.
    at_normal: Vec<Vec<f64>>,
    lambda_a: f64,
}

impl SensorScoreTable {
    pub fn build(scenarios: &ScenarioSet, cfg: &DetectionConfig, grid: &PowerGrid) -> Result<Self> {
        if scenarios.anomaly_times.is_empty() {
            return Err(Error::InvalidArgument("no anomaly times to score".into()));
        }
        let sensors: Vec<usize> = (0..grid.node_count()).collect();
        let (times, scores) = stream_scores(scenarios, &sensors, cfg, grid)?;
        let (mut at_anomaly, mut at_normal) = (Vec::new(), Vec::new());
        for row in scores {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (k, &t) in times.iter().enumerate() {
                if scenarios.anomaly_times.contains(&t) {
                    a.push(row[k]);
                } else {
                    b.push(row[k]);
                }
            }
            at_anomaly.push(a);
            at_normal.push(b);
        }
        Ok(Self {
            at_anomaly,
            at_normal,
            lambda_a: cfg.lambda_a,
        })
    }

    pub fn node_count(&self) -> usize {
        self.at_anomaly.len()
    }

    pub fn anomaly_count(&self) -> usize {
        self.at_anomaly.first().map_or(0, Vec::len)
    }

    fn rate(rows: &[Vec<f64>], placed: &[usize], lambda_a: f64) -> f64 {
        let Some(len) = rows.first().map(Vec::len) else { return 0.0 };
        if placed.is_empty() || len == 0 {
            return 0.0;
        }
        let hits = (0..len)
            .filter(|&k| placed.iter().any(|&i| rows[i][k] > lambda_a))
            .count();
        hits as f64 / len as f64
    }

    /// Detection score of a sensor set; an empty set scores 0.
    pub fn detection_score(&self, placed: &[usize]) -> f64 {
        Self::rate(&self.at_anomaly, placed, self.lambda_a)
    }

    /// Fraction of normal timesteps flagged as anomalous.
    pub fn false_alarm_rate(&self, placed: &[usize]) -> f64 {
        Self::rate(&self.at_normal, placed, self.lambda_a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hand_evaluated_detectors() {
        assert_eq!(detector_from_deltas(&[c(0.0), c(0.0)]), DetectorVector::default());
        let v = detector_from_deltas(&[c(3.0), c(-1.0)]);
        assert_eq!((v.x_se, v.x_ga, v.x_gd), (3.0, 2.0, 4.0));
        let v = detector_from_deltas(&[c(5.0)]);
        assert_eq!((v.x_se, v.x_ga, v.x_gd), (5.0, 5.0, 0.0));
        assert_eq!(detector_from_deltas(&[]), DetectorVector::default());
    }

    fn history(values: &[[f64; 3]]) -> DetectorHistory {
        let mut h = DetectorHistory::new(32);
        for v in values {
            h.push(DetectorVector { x_se: v[0], x_ga: v[1], x_gd: v[2] });
        }
        h
    }

    #[test]
    fn anomalousness_cases() {
        let cfg = DetectionConfig::default();
        // median 3, quartiles 2 and 4 on the first component; others constant 0
        let mut h = history(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [4.0, 0.0, 0.0], [5.0, 0.0, 0.0]]);
        assert_eq!(h.median(), [3.0, 0.0, 0.0]);
        assert_eq!(h.iqr(), [2.0, 0.0, 0.0]);
        let at_median = sensor_anomalousness(&mut h.clone(), DetectorVector { x_se: 3.0, ..Default::default() }, &cfg).unwrap();
        assert_eq!(at_median, 0.0);
        let one = sensor_anomalousness(&mut h, DetectorVector { x_se: 5.0, ..Default::default() }, &cfg).unwrap();
        assert_eq!(one, 1.0);
        assert_eq!(h.len(), 6);

        let mut flat = history(&[[0.0; 3]; 4]);
        let s = sensor_anomalousness(&mut flat, DetectorVector { x_gd: 1.0, ..Default::default() }, &cfg).unwrap();
        assert!((s - 1e6).abs() < 1e-6);

        let mut empty = DetectorHistory::new(8);
        assert!(matches!(
            sensor_anomalousness(&mut empty, DetectorVector::default(), &cfg),
            Err(Error::InsufficientHistory)
        ));
    }

    #[test]
    fn window_slides() {
        let mut h = DetectorHistory::new(4);
        for k in 0..10 {
            h.push(DetectorVector { x_se: k as f64, ..Default::default() });
        }
        assert_eq!(h.len(), 4);
        // window holds 6..=9
        assert_eq!(h.median()[0], 7.5);
        assert_eq!(h.iqr()[0], 1.5);
    }

    #[test]
    fn overall_is_max_over_subset() {
        let scores = [2.0, 7.0, 1.0];
        assert_eq!(overall_score(&scores, &[0, 1, 2]).unwrap(), 7.0);
        assert_eq!(overall_score(&[3.0], &[0]).unwrap(), 3.0);
        assert_eq!(overall_score(&scores, &[0, 2]).unwrap(), 2.0);
        assert!(matches!(overall_score(&scores, &[]), Err(Error::EmptySensorSet)));
    }
}
