//! Optimal monotone step tuning curves: converting a capacity-achieving input
//! ensemble into a stimulus-to-input map for an arbitrary stimulus
//! distribution.
//!
//! The construction matches quantiles to weights: the stimulus axis is cut at
//! the inverse-CDF of the cumulative ensemble weights, so the induced
//! distribution of Θ = f(X) reproduces the ensemble exactly regardless of the
//! stimulus density.

use serde::{Deserialize, Serialize};

use crate::ensemble::InputEnsemble;
use crate::error::{Error, Result};
use crate::solver::{ensemble_mi, CapacitySolution, Coding};
use crate::special::regularized_beta;

/// Stimulus distributions supported by the tuning-curve builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StimulusDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Beta(α, β) rescaled onto [lo, hi].
    Beta {
        alpha: f64,
        beta: f64,
        lo: f64,
        hi: f64,
    },
    /// Piecewise-linear density through (xs[k], densities[k]); rescaled to
    /// integrate to one at construction.
    #[serde(rename = "piecewise-linear")]
    PiecewiseLinear {
        xs: Vec<f64>,
        densities: Vec<f64>,
    },
}

impl StimulusDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: format!("need lo < hi, got [{lo}, {hi}]"),
            });
        }
        Ok(StimulusDistribution::Uniform { lo, hi })
    }

    pub fn beta(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha/beta",
                reason: format!("shape parameters must be positive, got ({alpha}, {beta})"),
            });
        }
        if !(hi > lo) {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: format!("need lo < hi, got [{lo}, {hi}]"),
            });
        }
        Ok(StimulusDistribution::Beta {
            alpha,
            beta,
            lo,
            hi,
        })
    }

    pub fn piecewise_linear(xs: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != densities.len() {
            return Err(Error::InvalidParameter {
                name: "xs/densities",
                reason: "need at least two knots with one density per knot".into(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "xs",
                reason: "knots must be strictly increasing".into(),
            });
        }
        if densities.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "densities",
                reason: "densities must be finite and nonnegative".into(),
            });
        }
        let mut total = 0.0;
        for k in 0..xs.len() - 1 {
            total += 0.5 * (densities[k] + densities[k + 1]) * (xs[k + 1] - xs[k]);
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "densities",
                reason: "density integrates to zero".into(),
            });
        }
        let densities = densities.into_iter().map(|d| d / total).collect();
        Ok(StimulusDistribution::PiecewiseLinear { xs, densities })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            StimulusDistribution::Uniform { lo, hi } => (*lo, *hi),
            StimulusDistribution::Beta { lo, hi, .. } => (*lo, *hi),
            StimulusDistribution::PiecewiseLinear { xs, .. } => (xs[0], *xs.last().unwrap()),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match self {
            StimulusDistribution::Uniform { lo, hi } => 1.0 / (hi - lo),
            StimulusDistribution::Beta {
                alpha,
                beta,
                lo,
                hi,
            } => {
                let u = (x - lo) / (hi - lo);
                if u <= 0.0 || u >= 1.0 {
                    // Finite endpoints only for α, β ≥ 1; the CDF is what the
                    // partitioner uses, so clamp rather than return inf.
                    return 0.0;
                }
                let ln = (alpha - 1.0) * u.ln()
                    + (beta - 1.0) * (1.0 - u).ln()
                    + crate::special::ln_gamma(alpha + beta)
                    - crate::special::ln_gamma(*alpha)
                    - crate::special::ln_gamma(*beta);
                ln.exp() / (hi - lo)
            }
            StimulusDistribution::PiecewiseLinear { xs, densities } => {
                let k = xs.partition_point(|&knot| knot <= x).saturating_sub(1);
                let k = k.min(xs.len() - 2);
                let frac = (x - xs[k]) / (xs[k + 1] - xs[k]);
                densities[k] + frac * (densities[k + 1] - densities[k])
            }
        }
    }

    /// Cumulative distribution function, clamped to [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match self {
            StimulusDistribution::Uniform { lo, hi } => (x - lo) / (hi - lo),
            StimulusDistribution::Beta {
                alpha,
                beta,
                lo,
                hi,
            } => {
                let u = (x - lo) / (hi - lo);
                regularized_beta(*alpha, *beta, u).unwrap_or(if u < 0.5 { 0.0 } else { 1.0 })
            }
            StimulusDistribution::PiecewiseLinear { xs, densities } => {
                let k = xs.partition_point(|&knot| knot <= x).saturating_sub(1);
                let k = k.min(xs.len() - 2);
                let mut acc = 0.0;
                for j in 0..k {
                    acc += 0.5 * (densities[j] + densities[j + 1]) * (xs[j + 1] - xs[j]);
                }
                let dx = x - xs[k];
                let slope = (densities[k + 1] - densities[k]) / (xs[k + 1] - xs[k]);
                acc + densities[k] * dx + 0.5 * slope * dx * dx
            }
        }
    }

    /// Inverse CDF by bisection. Detects flat-density plateaus: when the
    /// quantile is attained on an interval rather than a point, that interval
    /// is reported as an error.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidParameter {
                name: "u",
                reason: format!("quantile level must be in [0,1], got {u}"),
            });
        }
        let (lo, hi) = self.support();
        if u == 0.0 {
            return Ok(lo);
        }
        if u == 1.0 {
            return Ok(hi);
        }
        // Leftmost x with CDF(x) >= u and rightmost x with CDF(x) <= u.
        let mut left = (lo, hi);
        let mut right = (lo, hi);
        for _ in 0..90 {
            let mid = 0.5 * (left.0 + left.1);
            if self.cdf(mid) >= u {
                left.1 = mid;
            } else {
                left.0 = mid;
            }
            let mid = 0.5 * (right.0 + right.1);
            if self.cdf(mid) <= u {
                right.0 = mid;
            } else {
                right.1 = mid;
            }
        }
        let x_left = 0.5 * (left.0 + left.1);
        let x_right = 0.5 * (right.0 + right.1);
        if x_right - x_left > 1e-6 * (hi - lo) {
            return Err(Error::FlatDensityRegion {
                lo: x_left,
                hi: x_right,
                quantile: u,
            });
        }
        Ok(0.5 * (x_left + x_right))
    }
}

/// Direction of the mean response as the stimulus grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotoneDirection {
    Increasing,
    Decreasing,
}

/// A monotone step tuning curve: breakpoints x_0 < … < x_M on the stimulus
/// axis and one input level per interval. Intervals are half-open
/// (x_{m−1}, x_m], with the first closed at x_0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    coding: Coding,
    direction: MonotoneDirection,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TuningCurve {
    /// Validates breakpoints and the monotone level assignment.
    ///
    /// With an increasing response, rate coding requires the input levels to
    /// be nonincreasing in x (so the mean rate Δ/(κθ) climbs), temporal
    /// coding requires them nondecreasing (so the mean ISI κθ climbs).
    pub fn new(
        coding: Coding,
        direction: MonotoneDirection,
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    ) -> Result<Self> {
        if breakpoints.len() != levels.len() + 1 || levels.is_empty() {
            return Err(Error::InvalidParameter {
                name: "breakpoints/levels",
                reason: format!(
                    "need one more breakpoint than levels, got {} and {}",
                    breakpoints.len(),
                    levels.len()
                ),
            });
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "breakpoints",
                reason: "breakpoints must be strictly increasing".into(),
            });
        }
        let theta_increasing = match (coding, direction) {
            (Coding::Temporal, MonotoneDirection::Increasing) => true,
            (Coding::Temporal, MonotoneDirection::Decreasing) => false,
            (Coding::Rate, MonotoneDirection::Increasing) => false,
            (Coding::Rate, MonotoneDirection::Decreasing) => true,
        };
        let ordered = levels.windows(2).all(|w| {
            if theta_increasing {
                w[1] > w[0]
            } else {
                w[1] < w[0]
            }
        });
        if !ordered {
            return Err(Error::InvalidParameter {
                name: "levels",
                reason: format!(
                    "levels must be strictly {} for {} coding with an {:?} response",
                    if theta_increasing {
                        "increasing"
                    } else {
                        "decreasing"
                    },
                    coding,
                    direction
                ),
            });
        }
        Ok(TuningCurve {
            coding,
            direction,
            breakpoints,
            levels,
        })
    }

    pub fn coding(&self) -> Coding {
        self.coding
    }

    pub fn direction(&self) -> MonotoneDirection {
        self.direction
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// The input level f(x) driving the neuron at stimulus x.
    pub fn level_at(&self, x: f64) -> Result<f64> {
        let lo = self.breakpoints[0];
        let hi = *self.breakpoints.last().unwrap();
        if x < lo || x > hi {
            return Err(Error::Domain(format!(
                "stimulus {x} outside the support [{lo}, {hi}]"
            )));
        }
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        let m = interior.partition_point(|&b| b < x);
        Ok(self.levels[m])
    }
}

/// Cuts the stimulus axis so each interval carries exactly one ensemble
/// weight: x_m = CDF⁻¹(w_1 + … + w_m).
pub fn quantile_partition(stim: &StimulusDistribution, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "need at least one weight".into(),
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > crate::pmf::NORMALIZATION_TOL {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: format!("weights sum to {total}, expected 1"),
        });
    }
    if let Some(k) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: format!("weight {k} is not positive; empty intervals are not representable"),
        });
    }
    let (lo, hi) = stim.support();
    let mut breakpoints = Vec::with_capacity(weights.len() + 1);
    breakpoints.push(lo);
    let mut acc = 0.0;
    for &w in &weights[..weights.len() - 1] {
        acc += w;
        breakpoints.push(stim.quantile(acc)?);
    }
    breakpoints.push(hi);
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "quantile breakpoints collapsed; weights too small for this stimulus".into(),
        });
    }
    Ok(breakpoints)
}

/// Builds the optimal tuning curve for a certified capacity solution and a
/// stimulus distribution, with the sigmoidal convention: the mean response is
/// nondecreasing in the stimulus.
pub fn build_tuning_curve(
    solution: &CapacitySolution,
    stim: &StimulusDistribution,
) -> Result<TuningCurve> {
    build_tuning_curve_directed(solution, stim, MonotoneDirection::Increasing)
}

/// As [`build_tuning_curve`] with an explicit response direction.
pub fn build_tuning_curve_directed(
    solution: &CapacitySolution,
    stim: &StimulusDistribution,
    direction: MonotoneDirection,
) -> Result<TuningCurve> {
    if !solution.certificate.passed {
        return Err(Error::Uncertified(
            "tuning curves are built from certified solutions only; \
             rerun the solver or loosen the slack"
                .into(),
        ));
    }
    let points = solution.ensemble.points();
    let weights = solution.ensemble.weights();
    let theta_increasing = match (solution.coding(), direction) {
        (Coding::Temporal, MonotoneDirection::Increasing) => true,
        (Coding::Temporal, MonotoneDirection::Decreasing) => false,
        (Coding::Rate, MonotoneDirection::Increasing) => false,
        (Coding::Rate, MonotoneDirection::Decreasing) => true,
    };
    let (levels, ordered_weights): (Vec<f64>, Vec<f64>) = if theta_increasing {
        (points.to_vec(), weights.to_vec())
    } else {
        (
            points.iter().rev().copied().collect(),
            weights.iter().rev().copied().collect(),
        )
    };
    let breakpoints = quantile_partition(stim, &ordered_weights)?;
    TuningCurve::new(solution.coding(), direction, breakpoints, levels)
}

/// Mean response at stimulus x: the conditional expectation of the output
/// given X = x. Temporal coding: κ·f(x) (mean ISI). Rate coding: Δ/(κ·f(x)),
/// the asymptotic mean count; the exact finite-window mean is available from
/// the count channel itself.
pub fn mean_response(curve: &TuningCurve, x: f64, kappa: f64, delta: Option<f64>) -> Result<f64> {
    let level = curve.level_at(x)?;
    match curve.coding() {
        Coding::Temporal => Ok(kappa * level),
        Coding::Rate => {
            let delta = delta.ok_or(Error::InvalidParameter {
                name: "delta",
                reason: "rate coding needs the window length".into(),
            })?;
            Ok(delta / (kappa * level))
        }
    }
}

/// Dense (x, mean response) samples for plotting the staircase.
pub fn staircase(
    curve: &TuningCurve,
    kappa: f64,
    delta: Option<f64>,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 2 samples, got {n}"),
        });
    }
    let lo = curve.breakpoints()[0];
    let hi = *curve.breakpoints().last().unwrap();
    (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            Ok((x, mean_response(curve, x, kappa, delta)?))
        })
        .collect()
}

/// The ensemble induced by driving the channel through the curve: levels with
/// their stimulus-interval masses, sorted by level.
pub fn induced_ensemble(
    curve: &TuningCurve,
    stim: &StimulusDistribution,
    solution: &CapacitySolution,
) -> Result<InputEnsemble> {
    let bp = curve.breakpoints();
    let mut pairs: Vec<(f64, f64)> = curve
        .levels()
        .iter()
        .enumerate()
        .map(|(m, &level)| (level, stim.cdf(bp[m + 1]) - stim.cdf(bp[m])))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let points: Vec<f64> = pairs.iter().map(|&(p, _)| p).collect();
    let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
    let weights: Vec<f64> = pairs.iter().map(|&(_, w)| w / total).collect();
    InputEnsemble::new(points, weights, solution.channel.gamma())
}

/// Mutual information of the composed channel x → f(x) → output, and its gap
/// to the certified capacity.
///
/// The curve is a deterministic map inducing a discrete input ensemble, so
/// the composed mutual information equals the induced ensemble's; for a curve
/// built from a certified solution the gap is quadrature-level small, and it
/// grows as soon as breakpoints stop matching the weights.
pub fn verify_tuning_mi(
    curve: &TuningCurve,
    stim: &StimulusDistribution,
    solution: &CapacitySolution,
) -> Result<(f64, f64)> {
    let induced = induced_ensemble(curve, stim, solution)?;
    let mi = ensemble_mi(&induced, &solution.channel)?;
    Ok((mi, solution.capacity_per_use - mi))
}
