//! Reference slot-selection policies: S-ALOHA and an MMPC-style
//! correlation-grouping assignment.
//!
//! S-ALOHA is the uniform non-learning strategy. The MMPC-style baseline
//! reconstructs a one-line description of a centralized fast-uplink-grant
//! scheme as greedy anti-affinity grouping: devices with correlated
//! packet generation are spread over distinct slots. It is an
//! approximation and is labeled "MMPC-style" in all output; it only
//! applies to systems without retransmissions (β = 1).

use thiserror::Error;

use crate::strategy::StrategyMatrix;
use crate::traffic::ActivationVector;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("correlation estimation needs >= 2 active frames, got {0}")]
    TooFewActiveFrames(usize),
}

/// Empirical pairwise Pearson correlation of device activations.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    /// Symmetric N×N matrix; devices that never activate get zero rows.
    pub rho: Vec<Vec<f64>>,
    /// Active frames the estimate was computed from.
    pub sample_count: usize,
}

/// Uniform non-learning strategy; identical to the LRI initialization.
/// The engine's learning flag stays off for S-ALOHA so it is never
/// updated.
pub fn saloha_strategy(k: usize, beta: usize) -> StrategyMatrix {
    StrategyMatrix::uniform(k, beta)
}

/// Pearson correlation of binary activation sequences, restricted to the
/// supplied active frames. Devices with zero activation variance (never
/// or always active) get off-diagonal correlation 0 by convention; the
/// diagonal is 1 wherever the device activated at least once.
pub fn estimate_correlation(
    active_frames: &[ActivationVector],
) -> Result<CorrelationEstimate, BaselineError> {
    if active_frames.len() < 2 {
        return Err(BaselineError::TooFewActiveFrames(active_frames.len()));
    }
    let frames = active_frames.len();
    let n = active_frames[0].len();
    let mut count = vec![0u64; n];
    let mut joint = vec![vec![0u64; n]; n];
    for y in active_frames {
        assert_eq!(y.len(), n, "ragged activation trace");
        for i in 0..n {
            if y[i] {
                count[i] += 1;
                for j in (i + 1)..n {
                    if y[j] {
                        joint[i][j] += 1;
                    }
                }
            }
        }
    }
    let f = frames as f64;
    let mean: Vec<f64> = count.iter().map(|&c| c as f64 / f).collect();
    let var: Vec<f64> = mean.iter().map(|m| m * (1.0 - m)).collect();
    let mut rho = vec![vec![0.0; n]; n];
    for i in 0..n {
        if count[i] > 0 {
            rho[i][i] = 1.0;
        }
        for j in (i + 1)..n {
            if var[i] > 0.0 && var[j] > 0.0 {
                let cov = joint[i][j] as f64 / f - mean[i] * mean[j];
                let r = cov / (var[i] * var[j]).sqrt();
                rho[i][j] = r.clamp(-1.0, 1.0);
                rho[j][i] = rho[i][j];
            }
        }
    }
    Ok(CorrelationEstimate {
        rho,
        sample_count: frames,
    })
}

/// Greedy anti-affinity slot assignment (1-based slots).
///
/// Devices are visited in order of decreasing total correlation mass;
/// each is put in the slot minimizing the summed correlation to devices
/// already assigned there, breaking ties toward the least loaded slot and
/// then the lowest index, which keeps uncorrelated populations balanced.
pub fn mmpc_assign(correlation: &CorrelationEstimate, k: usize) -> Vec<usize> {
    assert!(k >= 1, "slot count must be >= 1");
    let n = correlation.rho.len();
    let mass: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| correlation.rho[i][j])
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mass[b].partial_cmp(&mass[a]).unwrap().then(a.cmp(&b)));

    let mut assignment = vec![0usize; n];
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &dev in &order {
        let mut best = 0usize;
        let mut best_key = (f64::INFINITY, usize::MAX);
        for (slot, group) in groups.iter().enumerate() {
            let affinity: f64 = group.iter().map(|&m| correlation.rho[dev][m]).sum();
            let key = (affinity, group.len());
            if key.0 < best_key.0 - 1e-12
                || ((key.0 - best_key.0).abs() <= 1e-12 && key.1 < best_key.1)
            {
                best = slot;
                best_key = key;
            }
        }
        groups[best].push(dev);
        assignment[dev] = best + 1;
    }
    assignment
}
