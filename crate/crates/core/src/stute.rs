//! Kaplan-Meier (Stute) weights for least squares under right censoring, and
//! the product-limit estimator they are derived from.
//!
//! Ordering convention: observations are sorted by time, events before
//! censorings at equal times, then by original index. Under this ordering
//! the weight of every uncensored observation is its share of the
//! product-limit jump at its time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights attached to the time ordering of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    /// `order[i]` is the original index of the i-th smallest time.
    pub order: Vec<usize>,
    /// `weights[i]` belongs to observation `order[i]`.
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weights scattered back to the original observation order.
    pub fn by_index(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.order.len()];
        for (&i, &w) in self.order.iter().zip(&self.weights) {
            out[i] = w;
        }
        out
    }
}

fn validate(times: &[f64], flags: &[bool]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::EmptyInput);
    }
    if times.len() != flags.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} times but {} indicators",
            times.len(),
            flags.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "times must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

/// Permutation sorting by `(time, censored, index)`.
pub fn time_order(times: &[f64], deltas: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| {
        times[a]
            .total_cmp(&times[b])
            .then_with(|| deltas[b].cmp(&deltas[a]))
    });
    order
}

/// Stute weights with the residual mass left unassigned when the largest
/// observation is censored.
pub fn compute_weights(times: &[f64], deltas: &[bool]) -> Result<WeightVector> {
    compute_weights_with(times, deltas, false)
}

/// Stute weights; `redistribute_last` hands the leftover mass to the largest
/// observation when it is censored, so the weights sum to one.
pub fn compute_weights_with(
    times: &[f64],
    deltas: &[bool],
    redistribute_last: bool,
) -> Result<WeightVector> {
    validate(times, deltas)?;
    let order = time_order(times, deltas);
    let n = order.len();
    let mut weights = Vec::with_capacity(n);
    // Running product of ((n-j)/(n-j+1))^δ_(j) over j < i.
    // Before the first censored time the product is (n-i)/n in closed form.
    let mut surviving = 1.0;
    let mut uncensored_prefix = true;
    for (pos, &i) in order.iter().enumerate() {
        let at_risk = (n - pos) as f64;
        if deltas[i] {
            if uncensored_prefix {
                weights.push(1.0 / n as f64);
                surviving = (at_risk - 1.0) / n as f64;
            } else {
                weights.push(surviving / at_risk);
                surviving *= (at_risk - 1.0) / at_risk;
            }
        } else {
            uncensored_prefix = false;
            weights.push(0.0);
        }
    }
    if redistribute_last && !deltas[order[n - 1]] {
        weights[n - 1] = surviving;
    }
    Ok(WeightVector { order, weights })
}

/// Right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    /// Value for `t` before the first jump.
    pub initial: f64,
    pub jump_times: Vec<f64>,
    /// `values[k]` holds on `[jump_times[k], jump_times[k+1])`.
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => self.initial,
            k => self.values[k - 1],
        }
    }

    /// Size of the drop at each jump time.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut prev = self.initial;
        self.jump_times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| {
                let drop = prev - v;
                prev = v;
                (t, drop)
            })
            .collect()
    }
}

/// Product-limit survival estimate of the distribution whose occurrences are
/// flagged `true`; unflagged rows only contribute to risk sets.
pub fn km_estimator(times: &[f64], event_flags: &[bool]) -> Result<StepFunction> {
    validate(times, event_flags)?;
    let order = time_order(times, event_flags);
    let n = order.len();
    let mut survival = 1.0;
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut pos = 0;
    while pos < n {
        let t = times[order[pos]];
        let mut end = pos;
        let mut events = 0usize;
        while end < n && times[order[end]] == t {
            events += usize::from(event_flags[order[end]]);
            end += 1;
        }
        if events > 0 {
            let at_risk = (n - pos) as f64;
            survival *= 1.0 - events as f64 / at_risk;
            jump_times.push(t);
            values.push(survival);
        }
        pos = end;
    }
    Ok(StepFunction {
        initial: 1.0,
        jump_times,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uncensored_weights_are_uniform() {
        for n in [1usize, 2, 7, 50] {
            let times: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 + 0.5).collect();
            let w = compute_weights(&times, &vec![true; n]).unwrap();
            for &wi in &w.weights {
                assert_eq!(wi, 1.0 / n as f64);
            }
        }
    }

    #[test]
    fn hand_telescoped_three_points() {
        let w = compute_weights(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        let expected = [1.0 / 3.0, 0.0, 2.0 / 3.0];
        for (a, b) in w.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        // Same sample through the product-limit estimator.
        let km = km_estimator(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        let jumps: Vec<f64> = km.jumps().iter().map(|j| j.1).collect();
        assert!((jumps[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((jumps[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_censored_point() {
        assert_eq!(compute_weights(&[2.0], &[false]).unwrap().weights, vec![0.0]);
        assert_eq!(
            compute_weights_with(&[2.0], &[false], true).unwrap().weights,
            vec![1.0]
        );
    }

    #[test]
    fn redistribution_makes_unit_mass() {
        let w = compute_weights_with(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false], true)
            .unwrap();
        assert!((w.total() - 1.0).abs() < 1e-15);
        let plain = compute_weights(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false]).unwrap();
        assert!(plain.total() < 1.0);
    }

    #[test]
    fn ties_put_events_first() {
        let w = compute_weights(&[2.0, 2.0, 1.0], &[false, true, true]).unwrap();
        assert_eq!(w.order, vec![2, 1, 0]);
        let km = km_estimator(&[2.0, 2.0, 1.0], &[false, true, true]).unwrap();
        assert!((km.eval(2.0) - (2.0 / 3.0) * 0.5).abs() < 1e-15);
        assert!((w.weights[1] - (2.0 / 3.0 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn km_without_censoring_drops_evenly() {
        let km = km_estimator(&[4.0, 1.0, 3.0, 2.0], &[true; 4]).unwrap();
        assert_eq!(km.jump_times, vec![1.0, 2.0, 3.0, 4.0]);
        for (k, v) in km.values.iter().enumerate() {
            assert!((v - (1.0 - (k + 1) as f64 / 4.0)).abs() < 1e-15);
        }
        assert_eq!(km.eval(0.5), 1.0);
        assert!((km.eval(2.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn km_all_censored_is_flat() {
        let km = km_estimator(&[1.0, 2.0, 3.0], &[false; 3]).unwrap();
        assert!(km.jump_times.is_empty());
        assert_eq!(km.eval(10.0), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(compute_weights(&[], &[]), Err(Error::EmptyInput)));
        assert!(compute_weights(&[0.0], &[true]).is_err());
        assert!(compute_weights(&[1.0], &[true, false]).is_err());
        assert!(matches!(km_estimator(&[], &[]), Err(Error::EmptyInput)));
    }

    fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.01f64..100.0, n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn weights_nonnegative_and_bounded((times, deltas) in sample()) {
            let w = compute_weights(&times, &deltas).unwrap();
            prop_assert!(w.weights.iter().all(|&x| x >= 0.0));
            prop_assert!(w.total() <= 1.0 + 1e-12);
            for (pos, &i) in w.order.iter().enumerate() {
                if !deltas[i] { prop_assert_eq!(w.weights[pos], 0.0); }
            }
        }

        #[test]
        fn scale_invariant((times, deltas) in sample(), c in 0.01f64..50.0) {
            let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
            let a = compute_weights(&times, &deltas).unwrap();
            let b = compute_weights(&scaled, &deltas).unwrap();
            for (x, y) in a.by_index().iter().zip(b.by_index()) {
                prop_assert!((x - y).abs() < 1e-14);
            }
        }

        #[test]
        fn mass_shrinks_when_event_is_censored((times, deltas) in sample(), pick in any::<prop::sample::Index>()) {
            let events: Vec<usize> = (0..deltas.len()).filter(|&i| deltas[i]).collect();
            prop_assume!(!events.is_empty());
            let flip = events[pick.index(events.len())];
            let mut flipped = deltas.clone();
            flipped[flip] = false;
            let before = compute_weights(&times, &deltas).unwrap().total();
            let after = compute_weights(&times, &flipped).unwrap().total();
            prop_assert!(after <= before + 1e-12);
        }
    }
}
