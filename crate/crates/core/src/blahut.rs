//! Blahut–Arimoto capacity iteration for discrete memoryless channels.

use crate::error::{Error, Result};
use crate::pmf::{ChannelMatrix, DiscretePmf};

const LN_2: f64 = std::f64::consts::LN_2;

/// Outcome of a Blahut–Arimoto run, including the certified bracket.
#[derive(Debug, Clone)]
pub struct BlahutArimotoTrace {
    /// Certified capacity lower bound in bits (mutual information of `input`).
    pub capacity: f64,
    /// Optimal input weights.
    pub input: Vec<f64>,
    /// Best upper bound on the capacity seen across iterations, in bits.
    pub upper_bound: f64,
    /// Mutual information of the iterate at every step, in bits; nondecreasing.
    pub mi_per_iteration: Vec<f64>,
    pub iterations: usize,
}

/// Row self-information Σ_j p_ij ln p_ij in nats; constant across iterations
/// for a fixed row set, so the per-iteration density evaluation only takes
/// one logarithm per output symbol.
pub(crate) fn row_self_information(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|row| row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum())
        .collect()
}

/// One iteration's per-input information densities D(p(·|x) ‖ q) in nats,
/// with the row self-information precomputed.
///
/// `q` is the output marginal of `weights` through `rows`. Returns the
/// densities together with the mutual information Σ w_x D_x in nats.
pub(crate) fn information_densities_prepared(
    weights: &[f64],
    rows: &[Vec<f64>],
    self_info: &[f64],
) -> (Vec<f64>, f64) {
    let n_out = rows.first().map_or(0, Vec::len);
    let mut marginal = vec![0.0; n_out];
    for (&w, row) in weights.iter().zip(rows) {
        if w > 0.0 {
            for (q, &p) in marginal.iter_mut().zip(row) {
                *q += w * p;
            }
        }
    }
    // Underflowed marginal cells can only pair with zero row entries.
    let ln_marginal: Vec<f64> = marginal
        .iter()
        .map(|&q| if q > 0.0 { q.ln() } else { 0.0 })
        .collect();
    let densities: Vec<f64> = rows
        .iter()
        .zip(self_info)
        .map(|(row, &h)| {
            let cross: f64 = row.iter().zip(&ln_marginal).map(|(&p, &lq)| p * lq).sum();
            h - cross
        })
        .collect();
    let mi = weights
        .iter()
        .zip(&densities)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &d)| w * d)
        .sum();
    (densities, mi)
}

/// As [`information_densities_prepared`] without a precomputed row
/// self-information.
pub(crate) fn information_densities(weights: &[f64], rows: &[Vec<f64>]) -> (Vec<f64>, f64) {
    information_densities_prepared(weights, rows, &row_self_information(rows))
}

/// Core iteration on raw rows; never fails on slow convergence, reporting it
/// in the flag instead. `tol` and results are in bits.
pub(crate) fn blahut_arimoto_weights_lenient(
    rows: &[Vec<f64>],
    init: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (BlahutArimotoTrace, bool) {
    let n = rows.len();
    let mut weights = match init {
        Some(w) => w.to_vec(),
        None => vec![1.0 / n as f64; n],
    };
    let tol_nats = tol * LN_2;
    let self_info = row_self_information(rows);
    let mut best_upper = f64::INFINITY;
    let mut mi_trace = Vec::new();
    let mut mi = 0.0;
    let mut iterations = 0;
    for iter in 1..=max_iter {
        iterations = iter;
        let (densities, current_mi) = information_densities_prepared(&weights, rows, &self_info);
        mi = current_mi;
        mi_trace.push(mi / LN_2);
        let upper = densities.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d));
        best_upper = best_upper.min(upper);
        if best_upper - mi < tol_nats {
            return (
                BlahutArimotoTrace {
                    capacity: mi / LN_2,
                    input: weights,
                    upper_bound: best_upper / LN_2,
                    mi_per_iteration: mi_trace,
                    iterations: iter,
                },
                true,
            );
        }
        // Multiplicative update; densities are bounded so the exp is safe.
        let mut total = 0.0;
        for (w, &d) in weights.iter_mut().zip(&densities) {
            *w *= (d - mi).exp();
            total += *w;
        }
        for w in &mut weights {
            *w /= total;
        }
    }
    (
        BlahutArimotoTrace {
            capacity: mi / LN_2,
            input: weights,
            upper_bound: best_upper / LN_2,
            mi_per_iteration: mi_trace,
            iterations,
        },
        false,
    )
}

/// Core iteration on raw rows. `tol` and results are in bits.
pub(crate) fn blahut_arimoto_weights(
    rows: &[Vec<f64>],
    init: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<BlahutArimotoTrace> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("tolerance must be positive, got {tol}"),
        });
    }
    let (trace, converged) = blahut_arimoto_weights_lenient(rows, init, tol, max_iter);
    if converged {
        Ok(trace)
    } else {
        Err(Error::NonConvergence {
            iterations: trace.iterations,
            best_bits: trace.capacity,
            lower_bits: trace.capacity,
            upper_bits: trace.upper_bound,
        })
    }
}

/// Computes the channel capacity and a capacity-achieving input distribution.
///
/// Iterates until the certified gap between the running upper bound
/// `max_x D(p(·|x) ‖ q)` and the achieved mutual information drops below
/// `tol` bits, so the returned value brackets the true capacity within `tol`.
pub fn blahut_arimoto(
    channel: &ChannelMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, DiscretePmf)> {
    let trace = blahut_arimoto_trace(channel, tol, max_iter)?;
    let input = DiscretePmf::new_renormalized(channel.input_labels().to_vec(), trace.input)?;
    Ok((trace.capacity, input))
}

/// As [`blahut_arimoto`], returning the full iteration trace.
pub fn blahut_arimoto_trace(
    channel: &ChannelMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<BlahutArimotoTrace> {
    blahut_arimoto_weights(channel.rows(), None, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bsc_capacity_and_optimal_input() {
        let channel = ChannelMatrix::binary_symmetric(0.1).unwrap();
        let (capacity, input) = blahut_arimoto(&channel, 1e-9, 10_000).unwrap();
        assert!((capacity - 0.531).abs() < 1e-3);
        assert_relative_eq!(
            capacity,
            crate::info::bsc_capacity(0.1).unwrap(),
            epsilon = 1e-8
        );
        assert!((input.probs()[0] - 0.5).abs() < 1e-4);
        assert!((input.probs()[1] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn noiseless_binary_channel_reaches_one_bit() {
        let channel = ChannelMatrix::binary_symmetric(0.0).unwrap();
        let (capacity, _) = blahut_arimoto(&channel, 1e-9, 1000).unwrap();
        assert_relative_eq!(capacity, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn useless_channel_has_zero_capacity() {
        let channel = ChannelMatrix::new(
            vec!["a", "b"],
            vec!["x", "y"],
            vec![vec![0.3, 0.7], vec![0.3, 0.7]],
        )
        .unwrap();
        let (capacity, _) = blahut_arimoto(&channel, 1e-9, 1000).unwrap();
        assert!(capacity.abs() < 1e-9);
    }

    #[test]
    fn mi_sequence_is_nondecreasing() {
        let channel = ChannelMatrix::new(
            vec!["a", "b", "c"],
            vec!["x", "y"],
            vec![vec![0.9, 0.1], vec![0.55, 0.45], vec![0.2, 0.8]],
        )
        .unwrap();
        let trace = blahut_arimoto_trace(&channel, 1e-10, 10_000).unwrap();
        for pair in trace.mi_per_iteration.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-12,
                "MI decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(trace.upper_bound >= trace.capacity);
        assert!(trace.upper_bound - trace.capacity < 1e-10);
    }

    #[test]
    fn nonconvergence_carries_best_value() {
        let channel = ChannelMatrix::new(
            vec!["a", "b", "c"],
            vec!["x", "y", "z"],
            vec![
                vec![0.8, 0.15, 0.05],
                vec![0.1, 0.7, 0.2],
                vec![0.25, 0.25, 0.5],
            ],
        )
        .unwrap();
        match blahut_arimoto(&channel, 1e-12, 2) {
            Err(Error::NonConvergence {
                best_bits,
                lower_bits,
                upper_bits,
                ..
            }) => {
                assert!(best_bits > 0.0);
                assert!(upper_bits >= lower_bits);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
