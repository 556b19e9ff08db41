//! Evaluation metrics over frame traces: average packet transmission time
//! `L`, system throughput `T`, and the normalized throughput gain.

use serde::Serialize;
use thiserror::Error;

use crate::engine::FrameRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("no successful delivery anywhere in the trace; L is undefined")]
    NoDeliveries,
    #[error("gain denominator |T_lri - T_saloha| = {0:e} is below tolerance")]
    DegenerateGain(f64),
}

/// Per-replication metrics.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    /// Average packet transmission time, frames.
    pub l: f64,
    /// System throughput, packets per frame.
    pub t: f64,
    /// Devices with zero deliveries, excluded from the L average.
    pub excluded_devices: usize,
    /// Empirical per-device success rate (successes / frames).
    pub per_device_success_rate: Vec<f64>,
    /// Frames in the trace.
    pub frames: u64,
}

/// Average of the attempt counter over successful deliveries, averaged
/// over devices that delivered at least once. Returns `(L, excluded)`
/// where `excluded` counts devices without any delivery.
pub fn packet_transmission_time(trace: &[FrameRecord]) -> Result<(f64, usize), MetricError> {
    if trace.is_empty() {
        return Err(MetricError::EmptyTrace);
    }
    let n = trace[0].states.len();
    let mut attempts_sum = vec![0u64; n];
    let mut successes = vec![0u64; n];
    for rec in trace {
        for dev in 0..n {
            if rec.rewards[dev] {
                attempts_sum[dev] += rec.states[dev] as u64;
                successes[dev] += 1;
            }
        }
    }
    let mut total = 0.0;
    let mut delivered = 0usize;
    for dev in 0..n {
        if successes[dev] > 0 {
            total += attempts_sum[dev] as f64 / successes[dev] as f64;
            delivered += 1;
        }
    }
    if delivered == 0 {
        return Err(MetricError::NoDeliveries);
    }
    Ok((total / delivered as f64, n - delivered))
}

/// Empirical success rate of each device: successes over total frames.
pub fn per_device_success_rate(trace: &[FrameRecord]) -> Vec<f64> {
    if trace.is_empty() {
        return Vec::new();
    }
    let n = trace[0].states.len();
    let frames = trace.len() as f64;
    let mut successes = vec![0u64; n];
    for rec in trace {
        for dev in 0..n {
            if rec.rewards[dev] {
                successes[dev] += 1;
            }
        }
    }
    successes.iter().map(|&s| s as f64 / frames).collect()
}

/// Ratio of packets delivered per frame to the average transmission time:
/// `T = (1/L) Σ_n E[z_n]`, with `E[z_n]` estimated over all frames of the
/// trace (idle frames included).
pub fn system_throughput(trace: &[FrameRecord]) -> Result<f64, MetricError> {
    let (l, _) = packet_transmission_time(trace)?;
    let total_rate: f64 = per_device_success_rate(trace).iter().sum();
    Ok(total_rate / l)
}

/// Throughput over trailing windows of the trace, emitted at window
/// boundaries as `(last_frame_of_window, T)`. Windows without any success
/// are skipped (T undefined there). A window longer than the trace yields
/// a single point over the whole trace.
pub fn windowed_throughput(trace: &[FrameRecord], window: usize) -> Vec<(u64, f64)> {
    assert!(window >= 1, "window must be >= 1");
    if trace.is_empty() {
        return Vec::new();
    }
    if window >= trace.len() {
        return match system_throughput(trace) {
            Ok(t) => vec![(trace.last().unwrap().frame, t)],
            Err(_) => Vec::new(),
        };
    }
    trace
        .chunks(window)
        .filter(|chunk| chunk.len() == window)
        .filter_map(|chunk| {
            system_throughput(chunk)
                .ok()
                .map(|t| (chunk.last().unwrap().frame, t))
        })
        .collect()
}

const GAIN_DENOMINATOR_TOLERANCE: f64 = 1e-9;

/// Affine normalization of a learning-curve throughput series between the
/// S-ALOHA level (0) and the converged LRI level (1).
pub fn throughput_gain(
    series: &[(u64, f64)],
    t_saloha: f64,
    t_lri_converged: f64,
) -> Result<Vec<(u64, f64)>, MetricError> {
    let denom = t_lri_converged - t_saloha;
    if denom.abs() < GAIN_DENOMINATOR_TOLERANCE {
        return Err(MetricError::DegenerateGain(denom.abs()));
    }
    Ok(series
        .iter()
        .map(|&(frame, t)| (frame, (t - t_saloha) / denom))
        .collect())
}

/// Full per-replication report.
pub fn report(trace: &[FrameRecord]) -> Result<MetricsReport, MetricError> {
    let (l, excluded_devices) = packet_transmission_time(trace)?;
    let per_device = per_device_success_rate(trace);
    let t = per_device.iter().sum::<f64>() / l;
    Ok(MetricsReport {
        l,
        t,
        excluded_devices,
        per_device_success_rate: per_device,
        frames: trace.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Minimal trace builder: per frame, per device, `(x, z)`.
    fn trace(frames: &[Vec<(usize, bool)>]) -> Vec<FrameRecord> {
        frames
            .iter()
            .enumerate()
            .map(|(i, devs)| {
                let states: Vec<usize> = devs.iter().map(|&(x, _)| x).collect();
                let rewards: Vec<bool> = devs.iter().map(|&(_, z)| z).collect();
                let actions: Vec<usize> =
                    states.iter().map(|&x| if x > 0 { 1 } else { 0 }).collect();
                FrameRecord {
                    frame: i as u64,
                    activations: vec![false; devs.len()],
                    states,
                    actions,
                    rewards,
                    slot_occupancy: vec![],
                }
            })
            .collect()
    }

    #[test]
    fn single_delivery_on_third_attempt() {
        let tr = trace(&[
            vec![(1, false)],
            vec![(2, false)],
            vec![(3, true)],
        ]);
        let (l, excluded) = packet_transmission_time(&tr).unwrap();
        assert_eq!(l, 3.0);
        assert_eq!(excluded, 0);
    }

    #[test]
    fn conditional_mean_averaged_over_devices() {
        // device 0 delivers at attempt 1; device 1 at attempts 1 and 3
        let tr = trace(&[
            vec![(1, true), (1, true)],
            vec![(0, false), (3, true)],
        ]);
        let (l, _) = packet_transmission_time(&tr).unwrap();
        assert_abs_diff_eq!(l, (1.0 + 2.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_delivery_device_excluded_and_counted() {
        let tr = trace(&[vec![(2, true), (1, false)]]);
        let (l, excluded) = packet_transmission_time(&tr).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(excluded, 1);
    }

    #[test]
    fn no_delivery_is_an_error_not_zero() {
        let tr = trace(&[vec![(1, false)], vec![(2, false)]]);
        assert_eq!(
            packet_transmission_time(&tr).unwrap_err(),
            MetricError::NoDeliveries
        );
        assert!(system_throughput(&tr).is_err());
    }

    #[test]
    fn beta_one_delay_identity() {
        let tr = trace(&[vec![(1, true), (1, false)], vec![(1, true), (1, true)]]);
        let (l, _) = packet_transmission_time(&tr).unwrap();
        assert_eq!(l, 1.0);
    }

    #[test]
    fn converged_pair_throughput_two() {
        // N=2, both always at attempt 1, always delivering: L = 1, T = 2
        let frames: Vec<Vec<(usize, bool)>> =
            (0..100).map(|_| vec![(1, true), (1, true)]).collect();
        let tr = trace(&frames);
        assert_abs_diff_eq!(system_throughput(&tr).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn throughput_invariant_under_device_relabeling() {
        let tr = trace(&[
            vec![(1, true), (2, false)],
            vec![(0, false), (3, true)],
        ]);
        let swapped = trace(&[
            vec![(2, false), (1, true)],
            vec![(3, true), (0, false)],
        ]);
        assert_eq!(
            system_throughput(&tr).unwrap(),
            system_throughput(&swapped).unwrap()
        );
    }

    #[test]
    fn windowed_consistency_with_full_trace() {
        let frames: Vec<Vec<(usize, bool)>> =
            (0..50).map(|i| vec![(1, i % 2 == 0)]).collect();
        let tr = trace(&frames);
        let series = windowed_throughput(&tr, 50);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].1, system_throughput(&tr).unwrap());
        // longer-than-trace window also collapses to the full trace
        assert_eq!(windowed_throughput(&tr, 500), series);
    }

    #[test]
    fn windowed_flat_series_for_constant_pattern() {
        let frames: Vec<Vec<(usize, bool)>> = (0..100).map(|_| vec![(1, true)]).collect();
        let tr = trace(&frames);
        let series = windowed_throughput(&tr, 10);
        assert_eq!(series.len(), 10);
        assert!(series.iter().all(|&(_, t)| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gain_endpoints_and_midpoint() {
        let series = vec![(0, 1.0), (100, 1.5), (200, 2.0)];
        let gain = throughput_gain(&series, 1.0, 2.0).unwrap();
        assert_eq!(gain[0].1, 0.0);
        assert_eq!(gain[1].1, 0.5);
        assert_eq!(gain[2].1, 1.0);
    }

    #[test]
    fn gain_of_constant_saloha_series_is_zero() {
        let series = vec![(0, 1.3), (100, 1.3)];
        let gain = throughput_gain(&series, 1.3, 2.0).unwrap();
        assert!(gain.iter().all(|&(_, g)| g == 0.0));
    }

    #[test]
    fn degenerate_gain_denominator_rejected() {
        let err = throughput_gain(&[(0, 1.0)], 1.5, 1.5).unwrap_err();
        assert!(matches!(err, MetricError::DegenerateGain(_)));
    }
}
