//! Per-device slot-selection strategies and the linear reward-inaction
//! (LRI) update.
//!
//! A device's strategy is one PDF over the `K` slots per transmission
//! attempt `1..=β`. All devices start uniform. On a successful transmission
//! the PDF of the attempt that was used moves mass towards the chosen slot;
//! failures leave the strategy untouched (reward-inaction). Rows with a
//! unit entry are absorbing, so the automaton converges to a pure
//! assignment of one slot per attempt.

use rand::Rng;

/// One slot-selection PDF per transmission attempt.
///
/// Attempts and slots are 1-based to match the device state and action
/// encodings (`attempt ∈ 1..=β`, `slot ∈ 1..=K`).
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMatrix {
    k: usize,
    rows: Vec<Vec<f64>>,
}

/// LRI learning parameters.
#[derive(Debug, Clone, Copy)]
pub struct LearningParams {
    /// Step size of the reward update, in (0, 1).
    pub alpha: f64,
    /// A row counts as pure when its max entry is >= 1 - purity_epsilon.
    pub purity_epsilon: f64,
}

impl LearningParams {
    pub fn new(alpha: f64, purity_epsilon: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
        assert!(
            purity_epsilon > 0.0 && purity_epsilon < 0.5,
            "purity_epsilon must be in (0, 0.5)"
        );
        Self {
            alpha,
            purity_epsilon,
        }
    }
}

impl StrategyMatrix {
    /// Uniform initialization: every entry is `1/k`.
    pub fn uniform(k: usize, beta: usize) -> Self {
        assert!(k >= 1, "slot count must be >= 1");
        assert!(beta >= 1, "attempt count must be >= 1");
        Self {
            k,
            rows: vec![vec![1.0 / k as f64; k]; beta],
        }
    }

    /// Pure strategy: every attempt deterministically selects `slot`.
    pub fn pure_on_slot(slot: usize, k: usize, beta: usize) -> Self {
        assert!((1..=k).contains(&slot), "slot out of range");
        let mut row = vec![0.0; k];
        row[slot - 1] = 1.0;
        Self {
            k,
            rows: vec![row; beta],
        }
    }

    /// Builds a matrix from explicit rows (used by tests and snapshots).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty(), "need at least one attempt row");
        let k = rows[0].len();
        assert!(k >= 1, "need at least one slot");
        for row in &rows {
            assert_eq!(row.len(), k, "ragged strategy rows");
            assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "row not a PDF");
        }
        Self { k, rows }
    }

    pub fn n_slots(&self) -> usize {
        self.k
    }

    pub fn n_attempts(&self) -> usize {
        self.rows.len()
    }

    /// PDF of attempt `attempt` (1-based).
    pub fn row(&self, attempt: usize) -> &[f64] {
        assert!(
            (1..=self.rows.len()).contains(&attempt),
            "attempt {attempt} out of range 1..={}",
            self.rows.len()
        );
        &self.rows[attempt - 1]
    }

    /// Draws a slot (1-based) from the PDF of `attempt`.
    pub fn sample_slot(&self, attempt: usize, rng: &mut impl Rng) -> usize {
        let row = self.row(attempt);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        self.k // guard against accumulated rounding at u ≈ 1
    }

    /// Reward-inaction update of the `attempt` row after transmitting in
    /// `chosen_slot`. With `reward == false` nothing changes; with
    /// `reward == true` the chosen slot gains `alpha * (1 - p)` and every
    /// other slot loses `alpha * p`. Other rows are left unaltered.
    pub fn lri_update(&mut self, attempt: usize, chosen_slot: usize, reward: bool, alpha: f64) {
        assert!((1..=self.k).contains(&chosen_slot), "slot out of range");
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
        self.row(attempt); // range check
        if !reward {
            return;
        }
        let row = &mut self.rows[attempt - 1];
        for (i, p) in row.iter_mut().enumerate() {
            if i + 1 == chosen_slot {
                *p += alpha * (1.0 - *p);
            } else {
                *p -= alpha * *p;
            }
        }
        // renormalize to suppress floating-point drift over long runs
        let sum: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= sum;
        }
    }

    /// True iff every row has a dominant entry >= 1 - purity_epsilon.
    pub fn is_pure(&self, purity_epsilon: f64) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().cloned().fold(0.0, f64::max) >= 1.0 - purity_epsilon)
    }

    /// Per-row argmax slot (1-based); ties break toward the lowest index.
    pub fn pure_assignment(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|row| {
                let mut best = 0;
                for (i, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = i;
                    }
                }
                best + 1
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_init() {
        let s = StrategyMatrix::uniform(4, 5);
        assert_eq!(s.n_slots(), 4);
        assert_eq!(s.n_attempts(), 5);
        for attempt in 1..=5 {
            for &p in s.row(attempt) {
                assert_eq!(p, 0.25);
            }
            assert_eq!(s.row(attempt).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn single_slot_degenerate() {
        let s = StrategyMatrix::uniform(1, 3);
        for attempt in 1..=3 {
            assert_eq!(s.row(attempt), &[1.0]);
        }
    }

    #[test]
    fn deterministic_row_always_same_slot() {
        let s = StrategyMatrix::from_rows(vec![vec![1.0, 0.0, 0.0, 0.0]]);
        let mut rng = stream_rng(1, 0, Stream::PolicyMeasure);
        assert!((0..1000).all(|_| s.sample_slot(1, &mut rng) == 1));
    }

    #[test]
    fn skewed_row_frequencies() {
        let s = StrategyMatrix::from_rows(vec![vec![0.7, 0.1, 0.1, 0.1]]);
        let mut rng = stream_rng(2, 0, Stream::PolicyMeasure);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.sample_slot(1, &mut rng) == 1).count();
        assert_abs_diff_eq!(hits as f64 / n as f64, 0.7, epsilon = 2e-3);
    }

    #[test]
    #[should_panic(expected = "attempt")]
    fn attempt_out_of_range_panics() {
        let s = StrategyMatrix::uniform(4, 2);
        let mut rng = stream_rng(3, 0, Stream::PolicyMeasure);
        s.sample_slot(3, &mut rng);
    }

    #[test]
    fn reward_zero_leaves_row_unchanged() {
        let mut s = StrategyMatrix::from_rows(vec![vec![0.4, 0.3, 0.2, 0.1]]);
        let before = s.clone();
        s.lri_update(1, 2, false, 0.1);
        assert_eq!(s, before);
    }

    #[test]
    fn reward_update_matches_hand_computation() {
        let mut s = StrategyMatrix::uniform(4, 1);
        s.lri_update(1, 2, true, 0.1);
        let row = s.row(1);
        assert_abs_diff_eq!(row[0], 0.225, epsilon = 1e-12);
        assert_abs_diff_eq!(row[1], 0.325, epsilon = 1e-12);
        assert_abs_diff_eq!(row[2], 0.225, epsilon = 1e-12);
        assert_abs_diff_eq!(row[3], 0.225, epsilon = 1e-12);
    }

    #[test]
    fn pure_row_is_fixed_point() {
        let mut s = StrategyMatrix::from_rows(vec![vec![1.0, 0.0, 0.0, 0.0]]);
        s.lri_update(1, 1, true, 0.1);
        assert_eq!(s.row(1), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn purity_detection() {
        assert!(!StrategyMatrix::uniform(4, 5).is_pure(0.01));
        assert!(StrategyMatrix::pure_on_slot(2, 4, 5).is_pure(0.01));
        let s = StrategyMatrix::from_rows(vec![vec![0.995, 0.005, 0.0, 0.0]]);
        assert!(s.is_pure(0.01));
        assert!(!s.is_pure(0.001));
    }

    #[test]
    fn pure_assignment_argmax_and_tiebreak() {
        let s = StrategyMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(s.pure_assignment(), vec![2, 4]);
        assert_eq!(StrategyMatrix::uniform(4, 1).pure_assignment(), vec![1]);
        let s = StrategyMatrix::from_rows(vec![vec![0.2, 0.5, 0.2, 0.1]]);
        assert_eq!(s.pure_assignment(), vec![2]);
    }

    fn arb_row() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-6..1.0f64, 2..8).prop_map(|raw| {
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
    }

    proptest! {
        #[test]
        fn update_preserves_simplex(
            row in arb_row(),
            alpha in 1e-6..0.999f64,
            chosen_frac in 0.0..1.0f64,
            reward in any::<bool>(),
        ) {
            let k = row.len();
            let chosen = 1 + ((chosen_frac * k as f64) as usize).min(k - 1);
            let mut s = StrategyMatrix::from_rows(vec![row]);
            s.lri_update(1, chosen, reward, alpha);
            let out = s.row(1);
            prop_assert!(out.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reward_strictly_increases_chosen_slot(
            row in arb_row(),
            alpha in 1e-6..0.999f64,
            chosen_frac in 0.0..1.0f64,
        ) {
            let k = row.len();
            let chosen = 1 + ((chosen_frac * k as f64) as usize).min(k - 1);
            let before = row[chosen - 1];
            let mut s = StrategyMatrix::from_rows(vec![row]);
            s.lri_update(1, chosen, true, alpha);
            if before < 1.0 {
                prop_assert!(s.row(1)[chosen - 1] > before);
            }
        }

        #[test]
        fn update_touches_only_one_attempt(
            row_a in arb_row(),
            alpha in 1e-6..0.999f64,
        ) {
            let k = row_a.len();
            let rows = vec![row_a.clone(), vec![1.0 / k as f64; k], row_a];
            let mut s = StrategyMatrix::from_rows(rows.clone());
            s.lri_update(2, 1, true, alpha);
            prop_assert_eq!(s.row(1), rows[0].as_slice());
            prop_assert_eq!(s.row(3), rows[2].as_slice());
        }
    }
}
