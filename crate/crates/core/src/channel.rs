//! The gamma inter-spike-interval channel: conditional ISI densities for
//! temporal coding and windowed spike-count distributions for rate coding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, regularized_gamma_pq};

/// Default truncation tail mass for count distributions.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Default cap on the count truncation index.
pub const DEFAULT_HARD_CAP: usize = 10_000;

/// Gamma ISI family: given input θ the interval is Gamma(shape κ, scale θ),
/// so the mean interval is κθ. The mean is constrained to [a0, b0], which
/// bounds the input to Ω(κ) = [a0/κ, b0/κ].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaChannel {
    pub kappa: f64,
    /// Lower bound on the mean ISI, seconds.
    pub a0: f64,
    /// Upper bound on the mean ISI, seconds.
    pub b0: f64,
}

impl GammaChannel {
    pub fn new(kappa: f64, a0: f64, b0: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("shape must be positive and finite, got {kappa}"),
            });
        }
        if !(a0 > 0.0) || !(b0 > a0) || !b0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a0/b0",
                reason: format!("mean ISI bounds must satisfy 0 < a0 < b0 < inf, got [{a0}, {b0}]"),
            });
        }
        Ok(GammaChannel { kappa, a0, b0 })
    }

    /// The feasible input interval Ω(κ) = [a0/κ, b0/κ].
    pub fn omega(&self) -> (f64, f64) {
        (self.a0 / self.kappa, self.b0 / self.kappa)
    }

    pub fn omega_width(&self) -> f64 {
        let (lo, hi) = self.omega();
        hi - lo
    }

    /// Input domain membership, with a small relative slack for round-off.
    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.omega();
        theta >= lo * (1.0 - 1e-9) && theta <= hi * (1.0 + 1e-9)
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if !self.contains(theta) {
            let (lo, hi) = self.omega();
            return Err(Error::Domain(format!(
                "theta = {theta} s outside the input interval [{lo}, {hi}] s"
            )));
        }
        Ok(())
    }

    /// Natural log of the conditional ISI density p(t|θ) for t > 0.
    pub fn isi_log_density(&self, t: f64, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "ISI must be positive, got t = {t} s"
            )));
        }
        Ok(ln_isi_density(self.kappa, theta, t))
    }

    /// Base-2 log of the conditional ISI density.
    pub fn isi_log2_density(&self, t: f64, theta: f64) -> Result<f64> {
        Ok(self.isi_log_density(t, theta)? / std::f64::consts::LN_2)
    }

    /// Conditional ISI density itself.
    pub fn isi_density(&self, t: f64, theta: f64) -> Result<f64> {
        Ok(self.isi_log_density(t, theta)?.exp())
    }

    /// Mean ISI κθ for an input θ.
    pub fn mean_isi(&self, theta: f64) -> f64 {
        self.kappa * theta
    }

    /// Draws one ISI from Gamma(κ, θ).
    pub fn sample_isi<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        let gamma = rand_distr::Gamma::new(self.kappa, theta)
            .expect("parameters validated at construction");
        rng.sample(gamma)
    }
}

/// Unchecked gamma log-density; shared with the solver's inner loops.
pub(crate) fn ln_isi_density(kappa: f64, theta: f64, t: f64) -> f64 {
    (kappa - 1.0) * t.ln() - t / theta - ln_gamma(kappa) - kappa * theta.ln()
}

/// Rate-coding configuration: spikes are counted over a window of `delta`
/// seconds; count distributions are truncated once the missed tail mass is
/// below `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountChannelConfig {
    #[serde(flatten)]
    pub base: GammaChannel,
    pub delta: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_hard_cap")]
    pub hard_cap: usize,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

fn default_hard_cap() -> usize {
    DEFAULT_HARD_CAP
}

impl CountChannelConfig {
    pub fn new(base: GammaChannel, delta: f64, tail_tol: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("window length must be positive, got {delta}"),
            });
        }
        if !(tail_tol > 0.0 && tail_tol < 1e-6) {
            return Err(Error::InvalidParameter {
                name: "tail_tol",
                reason: format!("tail tolerance must lie in (0, 1e-6), got {tail_tol}"),
            });
        }
        Ok(CountChannelConfig {
            base,
            delta,
            tail_tol,
            hard_cap: DEFAULT_HARD_CAP,
        })
    }

    pub fn with_hard_cap(mut self, cap: usize) -> Self {
        self.hard_cap = cap;
        self
    }

    /// P(R = r | θ) for the ordinary renewal process with Gamma(κ, θ)
    /// intervals started fresh at the window's left edge.
    ///
    /// The sum of r intervals is Gamma(rκ, θ), so with x = Δ/θ,
    /// P(R = r) = P(rκ, x) − P((r+1)κ, x) in terms of the regularized lower
    /// incomplete gamma. The difference is taken between whichever tails are
    /// the smaller pair, which keeps relative accuracy when both CDF values
    /// are close to 1.
    pub fn count_pmf(&self, r: usize, theta: f64) -> Result<f64> {
        self.base.check_theta(theta)?;
        let x = self.delta / theta;
        let kappa = self.base.kappa;
        if r == 0 {
            let (_, q) = regularized_gamma_pq(kappa, x)?;
            return Ok(q);
        }
        let (p1, q1) = regularized_gamma_pq(r as f64 * kappa, x)?;
        let (p2, q2) = regularized_gamma_pq((r + 1) as f64 * kappa, x)?;
        let value = if p1 <= 0.5 { p1 - p2 } else { q2 - q1 };
        Ok(value.max(0.0))
    }

    /// Truncated count distribution at θ: raw probabilities for counts
    /// 0..=r_max where r_max is the smallest index with cumulative mass at
    /// least 1 − tail_tol.
    pub fn truncated_count_pmf(&self, theta: f64) -> Result<TruncatedCountPmf> {
        self.base.check_theta(theta)?;
        let x = self.delta / theta;
        let kappa = self.base.kappa;
        let mut probs = Vec::new();
        // Pair at shape (r+1)κ carries over to the next term.
        let mut current = regularized_gamma_pq(kappa, x)?;
        probs.push(current.1);
        let mut r = 0usize;
        // Cumulative mass after count r is 1 − P((r+1)κ, x).
        while current.0 > self.tail_tol {
            r += 1;
            if r > self.hard_cap {
                return Err(Error::TruncationCap {
                    theta,
                    delta: self.delta,
                    cap: self.hard_cap,
                });
            }
            let next = regularized_gamma_pq((r + 1) as f64 * kappa, x)?;
            let value = if current.0 <= 0.5 {
                current.0 - next.0
            } else {
                next.1 - current.1
            };
            probs.push(value.max(0.0));
            current = next;
        }
        Ok(TruncatedCountPmf {
            theta,
            r_max: r,
            probs,
        })
    }

    /// Exact mean count Σ r·P(R = r|θ) over the truncated distribution.
    pub fn count_mean(&self, theta: f64) -> Result<f64> {
        let pmf = self.truncated_count_pmf(theta)?;
        Ok(pmf
            .probs
            .iter()
            .enumerate()
            .map(|(r, &p)| r as f64 * p)
            .sum())
    }

    /// The asymptotic mean count Δ/(κθ): the renewal rate times the window,
    /// which the exact mean approaches as Δ/(κθ) grows.
    pub fn asymptotic_count_mean(&self, theta: f64) -> f64 {
        self.delta / (self.base.kappa * theta)
    }

    /// Simulates one window: accumulates Gamma(κ, θ) intervals from the left
    /// window edge and counts the spikes that land inside [0, Δ].
    pub fn simulate_count<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> usize {
        let gamma = rand_distr::Gamma::new(self.base.kappa, theta)
            .expect("parameters validated at construction");
        let mut arrival = 0.0;
        let mut count = 0usize;
        loop {
            arrival += rng.sample::<f64, _>(gamma);
            if arrival > self.delta {
                return count;
            }
            count += 1;
        }
    }
}

/// A truncated spike-count distribution at a fixed input θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedCountPmf {
    /// Input value, seconds.
    pub theta: f64,
    /// Largest count index included.
    pub r_max: usize,
    /// Raw (unrenormalized) probabilities for counts 0..=r_max.
    pub probs: Vec<f64>,
}

impl TruncatedCountPmf {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn exponential_channel() -> GammaChannel {
        GammaChannel::new(1.0, 0.5, 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GammaChannel::new(0.0, 0.1, 0.2).is_err());
        assert!(GammaChannel::new(1.0, 0.2, 0.1).is_err());
        assert!(GammaChannel::new(1.0, 0.0, 0.1).is_err());
        let ch = exponential_channel();
        assert!(CountChannelConfig::new(ch, 0.0, 1e-12).is_err());
        assert!(CountChannelConfig::new(ch, 1.0, 1e-3).is_err());
    }

    #[test]
    fn omega_is_mean_interval_scaled_by_shape() {
        let ch = GammaChannel::new(3.0, 0.003, 0.03).unwrap();
        let (lo, hi) = ch.omega();
        assert_relative_eq!(lo, 0.001, epsilon = 1e-15);
        assert_relative_eq!(hi, 0.01, epsilon = 1e-15);
        assert!(ch.contains(0.005));
        assert!(!ch.contains(0.05));
    }

    #[test]
    fn exponential_density_at_origin_limit() {
        // kappa = 1, theta = 1: density e^{-t}, so the t -> 0 limit is 1.
        let ch = exponential_channel();
        let d = ch.isi_density(1e-12, 1.0).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn shape_two_density_value() {
        // kappa = 2, theta = 1 at t = 1: t e^{-t} / Gamma(2) = e^{-1}.
        let ch = GammaChannel::new(2.0, 0.5, 4.0).unwrap();
        let d = ch.isi_density(1.0, 1.0).unwrap();
        assert_relative_eq!(d, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn density_mean_is_kappa_theta() {
        // Quadrature of t p(t|theta) recovers the stated mean.
        let theta = 0.01;
        let mean = crate::quad::adaptive_gk(
            |t| t * ln_isi_density(3.0, theta, t).exp(),
            1e-12,
            1.5,
            1e-12,
            1e-12,
            2000,
        )
        .unwrap()
        .value;
        assert_relative_eq!(mean, 3.0 * theta, epsilon = 1e-8);
    }

    #[test]
    fn density_rejects_domain_violations() {
        let ch = exponential_channel();
        assert!(ch.isi_log_density(0.0, 1.0).is_err());
        assert!(ch.isi_log_density(-1.0, 1.0).is_err());
        assert!(ch.isi_log_density(1.0, 10.0).is_err());
    }

    #[test]
    fn density_integrates_to_one_across_shapes() {
        for &kappa in &[0.5, 1.0, 2.0, 3.0, 10.0] {
            let theta = 0.01;
            // Truncation leaves under 1e-12 of mass at either end.
            let lo = theta * 1e-12f64.powf(1.0 / kappa);
            let total = crate::quad::adaptive_gk(
                |t| ln_isi_density(kappa, theta, t).exp(),
                lo,
                theta * 400.0,
                1e-11,
                1e-11,
                4000,
            )
            .unwrap()
            .value;
            assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn sampled_isi_mean_matches_kappa_theta() {
        let (kappa, theta) = (3.0, 0.005);
        let ch = GammaChannel::new(kappa, 0.003, 0.06).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(20_870);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let t = ch.sample_isi(theta, &mut rng);
            sum += t;
            sum_sq += t * t;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - kappa * theta).abs() < 3.0 * se,
            "sample mean {mean} vs {} (3 SE = {})",
            kappa * theta,
            3.0 * se
        );
    }

    fn poisson_pmf(lambda: f64, r: usize) -> f64 {
        (r as f64 * lambda.ln() - lambda - ln_gamma(r as f64 + 1.0)).exp()
    }

    #[test]
    fn unit_shape_counts_are_poisson() {
        // kappa = 1 makes the count law Poisson(delta/theta).
        for &ratio in &[0.5, 2.0, 10.0] {
            let theta = 0.01;
            let ch = GammaChannel::new(1.0, 0.001, 0.1).unwrap();
            let cfg = CountChannelConfig::new(ch, ratio * theta, 1e-12).unwrap();
            for r in 0..=50 {
                let ours = cfg.count_pmf(r, theta).unwrap();
                assert!(
                    (ours - poisson_pmf(ratio, r)).abs() < 1e-10,
                    "kappa=1 ratio={ratio} r={r}: {ours} vs {}",
                    poisson_pmf(ratio, r)
                );
            }
        }
    }

    #[test]
    fn zero_count_probability_is_first_interval_tail() {
        let ch = GammaChannel::new(2.5, 0.01, 0.1).unwrap();
        let cfg = CountChannelConfig::new(ch, 0.05, 1e-12).unwrap();
        let theta = 0.02;
        let expected = regularized_gamma_pq(2.5, 0.05 / theta).unwrap().1;
        assert_relative_eq!(
            cfg.count_pmf(0, theta).unwrap(),
            expected,
            max_relative = 1e-13
        );
        // And the exponential case: e^{-2}.
        let cfg1 =
            CountChannelConfig::new(GammaChannel::new(1.0, 0.001, 0.1).unwrap(), 0.02, 1e-12)
                .unwrap();
        assert_relative_eq!(
            cfg1.count_pmf(0, 0.01).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn count_pmf_sums_to_one() {
        for &(kappa, ratio) in &[(1.0, 2.0), (3.0, 5.0), (0.5, 1.0)] {
            let theta = 0.01;
            let ch = GammaChannel::new(kappa, kappa * theta * 0.5, kappa * theta * 2.0).unwrap();
            let cfg = CountChannelConfig::new(ch, ratio * theta, 1e-12).unwrap();
            let pmf = cfg.truncated_count_pmf(theta).unwrap();
            // Certified tail bound: mass beyond r_max is below tail_tol.
            assert!(
                (pmf.total_mass() - 1.0).abs() < 1e-10,
                "kappa={kappa} ratio={ratio}"
            );
        }
    }

    #[test]
    fn truncation_index_matches_poisson_tail() {
        let theta = 0.01;
        let ch = GammaChannel::new(1.0, 0.001, 0.1).unwrap();
        let cfg = CountChannelConfig::new(ch, 2.0 * theta, 1e-12).unwrap();
        let pmf = cfg.truncated_count_pmf(theta).unwrap();
        // Independent Poisson tail evaluation of the same truncation rule.
        let lambda = 2.0f64;
        let mut cumulative = 0.0;
        let mut expected_r_max = 0;
        for r in 0..200 {
            cumulative += poisson_pmf(lambda, r);
            if 1.0 - cumulative <= 1e-12 {
                expected_r_max = r;
                break;
            }
        }
        assert_eq!(pmf.r_max, expected_r_max);
        assert!((12..=25).contains(&pmf.r_max), "r_max = {}", pmf.r_max);
        assert_relative_eq!(pmf.probs[0], (-2.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn short_window_concentrates_mass_at_zero() {
        let theta = 0.01;
        let ch = GammaChannel::new(1.0, 0.001, 0.1).unwrap();
        let cfg = CountChannelConfig::new(ch, 0.01 * theta, 1e-12).unwrap();
        let pmf = cfg.truncated_count_pmf(theta).unwrap();
        assert!(pmf.probs[0] > 0.99);
        assert!(pmf.r_max <= 8, "r_max = {}", pmf.r_max);
    }

    #[test]
    fn widening_tail_tolerance_never_increases_r_max() {
        let theta = 0.01;
        let ch = GammaChannel::new(2.0, 0.01, 0.1).unwrap();
        let mut last = usize::MAX;
        for &tol in &[1e-12, 1e-10, 1e-8, 1e-7] {
            let cfg = CountChannelConfig::new(ch, 0.08, tol).unwrap();
            let pmf = cfg.truncated_count_pmf(theta).unwrap();
            assert!(pmf.r_max <= last);
            last = pmf.r_max;
        }
    }

    #[test]
    fn hard_cap_is_reported_with_parameters() {
        let ch = GammaChannel::new(1.0, 1e-5, 1.0).unwrap();
        let cfg = CountChannelConfig::new(ch, 10.0, 1e-12)
            .unwrap()
            .with_hard_cap(100);
        match cfg.truncated_count_pmf(1e-5) {
            Err(Error::TruncationCap { theta, delta, cap }) => {
                assert_eq!(theta, 1e-5);
                assert_eq!(delta, 10.0);
                assert_eq!(cap, 100);
            }
            other => panic!("expected TruncationCap, got {other:?}"),
        }
    }

    #[test]
    fn poisson_mean_is_exact() {
        let theta = 0.01;
        let ch = GammaChannel::new(1.0, 0.001, 0.1).unwrap();
        let cfg = CountChannelConfig::new(ch, 2.0 * theta, 1e-12).unwrap();
        assert_relative_eq!(cfg.count_mean(theta).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn renewal_mean_approaches_asymptotic_rate() {
        // kappa = 3, delta = 0.1, theta = 0.01: exact mean within 15% of
        // delta/(kappa theta) = 10/3, approaching it for longer windows.
        let ch = GammaChannel::new(3.0, 0.003, 0.2).unwrap();
        let cfg = CountChannelConfig::new(ch, 0.1, 1e-12).unwrap();
        let theta = 0.01;
        let exact = cfg.count_mean(theta).unwrap();
        let asymptotic = cfg.asymptotic_count_mean(theta);
        assert_relative_eq!(asymptotic, 10.0 / 3.0, epsilon = 1e-12);
        assert!((exact - asymptotic).abs() / asymptotic < 0.15);

        let long = CountChannelConfig::new(ch, 10.0, 1e-12).unwrap();
        let ratio_long = long.count_mean(theta).unwrap() / long.asymptotic_count_mean(theta);
        let ratio_short = exact / asymptotic;
        assert!((ratio_long - 1.0).abs() < 1e-2);
        assert!((ratio_long - 1.0).abs() < (ratio_short - 1.0).abs());
    }

    #[test]
    fn count_pmf_matches_external_incomplete_gamma() {
        // Same renewal formula evaluated through an independently implemented
        // regularized incomplete gamma.
        for &kappa in &[0.7, 2.0, 3.5] {
            for &ratio in &[1.0, 8.0] {
                let theta = 0.01;
                let ch =
                    GammaChannel::new(kappa, kappa * theta * 0.5, kappa * theta * 2.0).unwrap();
                let cfg = CountChannelConfig::new(ch, ratio * theta, 1e-12).unwrap();
                for r in 0..30usize {
                    let ours = cfg.count_pmf(r, theta).unwrap();
                    let lo = if r == 0 {
                        1.0
                    } else {
                        statrs::function::gamma::gamma_lr(r as f64 * kappa, ratio)
                    };
                    let hi = statrs::function::gamma::gamma_lr((r + 1) as f64 * kappa, ratio);
                    let reference = (lo - hi).max(0.0);
                    assert!(
                        (ours - reference).abs() < 1e-11,
                        "kappa={kappa} ratio={ratio} r={r}: {ours} vs {reference}"
                    );
                }
            }
        }
    }

    #[test]
    fn simulated_counts_match_truncated_pmf() {
        // Spike trains as cumulative gamma intervals, counted in [0, delta].
        for &(kappa, ratio, seed) in &[(1.0, 2.0, 11u64), (3.0, 5.0, 12u64)] {
            let theta = 0.01;
            let ch = GammaChannel::new(kappa, kappa * theta * 0.5, kappa * theta * 2.0).unwrap();
            let cfg = CountChannelConfig::new(ch, ratio * theta, 1e-12).unwrap();
            let pmf = cfg.truncated_count_pmf(theta).unwrap();
            let n = 200_000usize;
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut counts = vec![0usize; pmf.probs.len() + 1];
            for _ in 0..n {
                let c = cfg.simulate_count(theta, &mut rng);
                if c < counts.len() {
                    counts[c] += 1;
                }
            }
            for (r, &p) in pmf.probs.iter().enumerate() {
                let expected = p * n as f64;
                if expected < 10.0 {
                    continue;
                }
                let se = (n as f64 * p * (1.0 - p)).sqrt();
                let observed = counts[r] as f64;
                assert!(
                    (observed - expected).abs() <= 3.0 * se,
                    "kappa={kappa} ratio={ratio} r={r}: observed {observed}, expected {expected} +- {se}"
                );
            }
        }
    }
}
