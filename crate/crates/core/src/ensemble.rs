//! Discrete input ensembles: candidate capacity-achieving distributions.

use serde::{Deserialize, Serialize};

use crate::channel::GammaChannel;
use crate::error::{Error, Result};
use crate::pmf::NORMALIZATION_TOL;

/// A finite set of input mass points θ_i with weights w_i, all inside the
/// channel's feasible interval Ω(κ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEnsemble {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl InputEnsemble {
    pub fn new(points: Vec<f64>, weights: Vec<f64>, channel: &GammaChannel) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidEnsemble(
                "ensemble needs at least one point".into(),
            ));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for pair in points.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidEnsemble(format!(
                    "points must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &theta in &points {
            if !channel.contains(theta) {
                let (lo, hi) = channel.omega();
                return Err(Error::InvalidEnsemble(format!(
                    "point {theta} s outside the input interval [{lo}, {hi}] s"
                )));
            }
        }
        let mut total = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidEnsemble(format!("weight {w} must be >= 0")));
            }
            total += w;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidEnsemble(format!(
                "weights sum to {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(InputEnsemble { points, weights })
    }

    /// A single-point ensemble.
    pub fn singleton(theta: f64, channel: &GammaChannel) -> Result<Self> {
        InputEnsemble::new(vec![theta], vec![1.0], channel)
    }

    /// `n` uniformly spaced points over Ω(κ) with uniform weights.
    pub fn uniform_grid(n: usize, channel: &GammaChannel) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidEnsemble(
                "grid needs at least one point".into(),
            ));
        }
        let (lo, hi) = channel.omega();
        let points = if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        InputEnsemble::new(points, vec![1.0 / n as f64; n], channel)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mean input Σ w_i θ_i.
    pub fn mean_point(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| p * w)
            .sum()
    }

    /// Internal constructor for solver-built ensembles that are valid by
    /// construction (sorted, positive weights, normalized).
    pub(crate) fn from_parts_unchecked(points: Vec<f64>, weights: Vec<f64>) -> InputEnsemble {
        InputEnsemble { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel() -> GammaChannel {
        GammaChannel::new(3.0, 0.003, 0.03).unwrap()
    }

    #[test]
    fn validates_ordering_weights_and_domain() {
        let ch = channel();
        assert!(InputEnsemble::new(vec![0.005, 0.002], vec![0.5, 0.5], &ch).is_err());
        assert!(InputEnsemble::new(vec![0.002, 0.005], vec![0.6, 0.6], &ch).is_err());
        assert!(InputEnsemble::new(vec![0.002, 0.05], vec![0.5, 0.5], &ch).is_err());
        assert!(InputEnsemble::new(vec![], vec![], &ch).is_err());
        let ok = InputEnsemble::new(vec![0.002, 0.005], vec![0.25, 0.75], &ch).unwrap();
        assert_eq!(ok.len(), 2);
        assert!((ok.mean_point() - (0.002 * 0.25 + 0.005 * 0.75)).abs() < 1e-15);
    }

    #[test]
    fn uniform_grid_spans_omega() {
        let ch = channel();
        let grid = InputEnsemble::uniform_grid(11, &ch).unwrap();
        let (lo, hi) = ch.omega();
        assert_eq!(grid.len(), 11);
        assert!((grid.points()[0] - lo).abs() < 1e-15);
        assert!((grid.points()[10] - hi).abs() < 1e-12);
        assert!((grid.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
