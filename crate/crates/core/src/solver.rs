//! Capacity of the gamma neuron channel over its bounded input interval:
//! information densities, capacity-achieving discrete ensembles and KKT
//! optimality certificates.
//!
//! Two solver routes are provided. [`grid_capacity`] restricts the input to a
//! uniform grid over Ω(κ) and runs a certified Blahut–Arimoto iteration with
//! an active-set refinement; it serves as a brute-force reference.
//! [`particle_capacity`] additionally repositions the surviving mass points
//! inside Ω(κ) and consolidates the support until the Karush–Kuhn–Tucker
//! conditions hold at the requested slack: the information density i(θ) must
//! stay below the capacity everywhere on Ω and touch it at every support
//! point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blahut::{blahut_arimoto_weights_lenient, information_densities, BlahutArimotoTrace};
use crate::channel::{ln_isi_density, CountChannelConfig, GammaChannel};
use crate::ensemble::InputEnsemble;
use crate::error::{Error, Result};
use crate::quad::{adaptive_gk, FixedRule};
use crate::special::regularized_gamma_pq;

const LN_2: f64 = std::f64::consts::LN_2;

/// Gamma tails below this mass are treated as numerically absent when the
/// output space is discretised.
const TAIL_EPS: f64 = 1e-16;

/// Panels per decade for the shared temporal quadrature rule.
const PANELS_PER_DECADE: f64 = 6.0;

/// How the neuron's output is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    /// The inter-spike interval itself is the channel output.
    Temporal,
    /// The spike count over a window of length Δ is the channel output.
    Rate,
}

impl std::fmt::Display for Coding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coding::Temporal => write!(f, "temporal"),
            Coding::Rate => write!(f, "rate"),
        }
    }
}

/// A gamma ISI channel together with its output convention.
#[derive(Debug, Clone, PartialEq)]
pub enum NeuronChannel {
    Temporal(GammaChannel),
    Rate(CountChannelConfig),
}

impl NeuronChannel {
    pub fn temporal(channel: GammaChannel) -> Self {
        NeuronChannel::Temporal(channel)
    }

    pub fn rate(config: CountChannelConfig) -> Self {
        NeuronChannel::Rate(config)
    }

    pub fn coding(&self) -> Coding {
        match self {
            NeuronChannel::Temporal(_) => Coding::Temporal,
            NeuronChannel::Rate(_) => Coding::Rate,
        }
    }

    pub fn gamma(&self) -> &GammaChannel {
        match self {
            NeuronChannel::Temporal(g) => g,
            NeuronChannel::Rate(c) => &c.base,
        }
    }

    /// Counting-window length for rate coding.
    pub fn delta(&self) -> Option<f64> {
        match self {
            NeuronChannel::Temporal(_) => None,
            NeuronChannel::Rate(c) => Some(c.delta),
        }
    }
}

/// Solver configuration. Defaults follow the documented tolerances: KKT slack
/// of 1e-4 bits, 2001 probe points, weight pruning at 1e-6 and support merging
/// below 1e-4 of the Ω width.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target accuracy in bits; also the KKT certificate slack.
    pub tol: f64,
    /// Probe-grid size for the certificate.
    pub probe_n: usize,
    /// Support seed size when no initial ensemble is given.
    pub init_grid: usize,
    /// Weights below this are dropped.
    pub prune_threshold: f64,
    /// Support points closer than this fraction of |Ω| are merged.
    pub merge_fraction: f64,
    pub max_inner_iter: usize,
    pub max_outer_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-4,
            probe_n: 2001,
            init_grid: 101,
            prune_threshold: 1e-6,
            merge_fraction: 1e-4,
            max_inner_iter: 200_000,
            max_outer_iter: 60,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Numerical optimality certificate: the information density sampled over a
/// probe grid covering Ω, compared against the ensemble's own mutual
/// information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Probe inputs covering Ω(κ).
    pub grid: Vec<f64>,
    /// Information density i(θ) at each probe, bits.
    pub info_density: Vec<f64>,
    /// The ensemble's mutual information Σ w_i·i(θ_i), bits.
    pub capacity_ref: f64,
    /// max over probes of i(θ) − capacity_ref, bits.
    pub max_violation: f64,
    /// max over support points of |i(θ_i) − capacity_ref|, bits.
    pub at_support_gap: f64,
    pub passed: bool,
    pub slack_tol: f64,
}

/// A capacity-achieving ensemble with its certificate and rate conversions.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySolution {
    pub channel: NeuronChannel,
    pub ensemble: InputEnsemble,
    /// Bits per channel use: per spike for temporal coding, per window for
    /// rate coding.
    pub capacity_per_use: f64,
    /// Bits per second under the documented conversion.
    pub capacity_bps: f64,
    pub certificate: KktReport,
}

impl CapacitySolution {
    pub fn coding(&self) -> Coding {
        self.channel.coding()
    }
}

/// Bits per second for a given per-use capacity: rate coding divides by the
/// window length; temporal coding divides by the mean ISI Σ w_i κ θ_i, the
/// average time a spike takes to arrive.
fn bps_for(channel: &NeuronChannel, ensemble: &InputEnsemble, capacity_per_use: f64) -> f64 {
    match channel {
        NeuronChannel::Rate(cfg) => capacity_per_use / cfg.delta,
        NeuronChannel::Temporal(g) => {
            let mean_isi = g.kappa * ensemble.mean_point();
            capacity_per_use / mean_isi
        }
    }
}

/// Bits per second of a solved capacity problem.
pub fn capacity_bps(solution: &CapacitySolution) -> f64 {
    bps_for(
        &solution.channel,
        &solution.ensemble,
        solution.capacity_per_use,
    )
}

// ---------------------------------------------------------------------------
// Output-space discretisation shared by the solver loops.
// ---------------------------------------------------------------------------

/// Scale-free bounds x_lo, x_hi with P(κ, x_lo) and Q(κ, x_hi) below
/// `TAIL_EPS`; the output range [x_lo·θ_min, x_hi·θ_max] then carries all but
/// a negligible sliver of every conditional in the family.
fn gamma_tail_bounds(kappa: f64) -> (f64, f64) {
    let mut x_hi = kappa.max(1.0);
    for _ in 0..80 {
        match regularized_gamma_pq(kappa, x_hi) {
            Ok((_, q)) if q < TAIL_EPS => break,
            _ => x_hi *= 2.0,
        }
    }
    let mut x_lo = kappa.min(1.0);
    for _ in 0..1100 {
        if x_lo < 1e-300 {
            break;
        }
        match regularized_gamma_pq(kappa, x_lo) {
            Ok((p, _)) if p < TAIL_EPS => break,
            _ => x_lo *= 0.5,
        }
    }
    (x_lo, x_hi)
}

pub(crate) enum OutputSpace {
    /// Quadrature nodes over the ISI axis; `ln_nodes` caches ln t.
    Temporal {
        rule: FixedRule,
        ln_nodes: Vec<f64>,
        ln_gamma_kappa: f64,
    },
    /// Spike counts 0..=r_cap.
    Rate { r_cap: usize },
}

/// Evaluates conditional output "mass rows" for any input in Ω. A row holds
/// P(output cell | θ): quadrature-weighted densities for temporal coding and
/// truncated count probabilities for rate coding. Log-ratios of masses equal
/// log-ratios of densities because the cell weights cancel, so discrete
/// information quantities over rows reproduce the continuous ones to
/// quadrature accuracy.
pub(crate) struct Evaluator {
    pub(crate) kappa: f64,
    delta: f64,
    space: OutputSpace,
}

impl Evaluator {
    pub(crate) fn new(channel: &NeuronChannel) -> Result<Evaluator> {
        let gamma = channel.gamma();
        match channel {
            NeuronChannel::Temporal(_) => {
                let (x_lo, x_hi) = gamma_tail_bounds(gamma.kappa);
                let (omega_lo, omega_hi) = gamma.omega();
                let rule =
                    FixedRule::log_panels(x_lo * omega_lo, x_hi * omega_hi, PANELS_PER_DECADE);
                let ln_nodes = rule.nodes.iter().map(|&t| t.ln()).collect();
                Ok(Evaluator {
                    kappa: gamma.kappa,
                    delta: 0.0,
                    space: OutputSpace::Temporal {
                        rule,
                        ln_nodes,
                        ln_gamma_kappa: crate::special::ln_gamma(gamma.kappa),
                    },
                })
            }
            NeuronChannel::Rate(cfg) => {
                // Counts are largest at the smallest input; truncating there
                // covers the whole interval.
                let (omega_lo, _) = gamma.omega();
                let tight = CountChannelConfig {
                    tail_tol: cfg.tail_tol.min(1e-13),
                    ..*cfg
                };
                let r_cap = tight.truncated_count_pmf(omega_lo)?.r_max;
                Ok(Evaluator {
                    kappa: gamma.kappa,
                    delta: cfg.delta,
                    space: OutputSpace::Rate { r_cap },
                })
            }
        }
    }

    pub(crate) fn n_outputs(&self) -> usize {
        match &self.space {
            OutputSpace::Temporal { rule, .. } => rule.len(),
            OutputSpace::Rate { r_cap } => r_cap + 1,
        }
    }

    /// Conditional output masses at input θ.
    pub(crate) fn mass_row(&self, theta: f64) -> Result<Vec<f64>> {
        match &self.space {
            OutputSpace::Temporal {
                rule,
                ln_nodes,
                ln_gamma_kappa,
            } => {
                let ln_norm = ln_gamma_kappa + self.kappa * theta.ln();
                let inv_theta = 1.0 / theta;
                Ok(rule
                    .nodes
                    .iter()
                    .zip(ln_nodes)
                    .zip(&rule.weights)
                    .map(|((&t, &ln_t), &w)| {
                        w * ((self.kappa - 1.0) * ln_t - t * inv_theta - ln_norm).exp()
                    })
                    .collect())
            }
            OutputSpace::Rate { r_cap } => {
                let x = self.delta / theta;
                let mut row = Vec::with_capacity(r_cap + 1);
                let mut current = regularized_gamma_pq(self.kappa, x)?;
                row.push(current.1);
                for r in 1..=*r_cap {
                    let next = regularized_gamma_pq((r + 1) as f64 * self.kappa, x)?;
                    let value = if current.0 <= 0.5 {
                        current.0 - next.0
                    } else {
                        next.1 - current.1
                    };
                    row.push(value.max(0.0));
                    current = next;
                }
                Ok(row)
            }
        }
    }

    pub(crate) fn rows_for(&self, points: &[f64]) -> Result<Vec<Vec<f64>>> {
        points
            .par_iter()
            .map(|&theta| self.mass_row(theta))
            .collect()
    }

    /// Output marginal masses under (points, weights).
    pub(crate) fn mixture(&self, rows: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let mut mix = vec![0.0; self.n_outputs()];
        for (row, &w) in rows.iter().zip(weights) {
            if w > 0.0 {
                for (m, &p) in mix.iter_mut().zip(row) {
                    *m += w * p;
                }
            }
        }
        mix
    }

    /// Information density i(θ) = D(p(·|θ) ‖ mixture) in bits.
    ///
    /// Cells where the mixture mass underflowed carry only tail slivers of
    /// the conditional and are skipped.
    pub(crate) fn info_density(&self, theta: f64, mixture: &[f64]) -> Result<f64> {
        let row = self.mass_row(theta)?;
        let mut acc = 0.0;
        for (&m, &q) in row.iter().zip(mixture) {
            if m > 0.0 && q > 0.0 {
                acc += m * (m / q).ln();
            }
        }
        Ok(acc / LN_2)
    }
}

// ---------------------------------------------------------------------------
// Public information-density and mutual-information operations.
// ---------------------------------------------------------------------------

fn check_probe(channel: &NeuronChannel, theta: f64) -> Result<()> {
    if !channel.gamma().contains(theta) {
        let (lo, hi) = channel.gamma().omega();
        return Err(Error::Domain(format!(
            "theta = {theta} s outside the input interval [{lo}, {hi}] s"
        )));
    }
    Ok(())
}

/// Marginal information density i(θ) = D(p(·|θ) ‖ p(·; π)) in bits: the
/// expected log-ratio between the conditional output law at θ and the
/// ensemble-averaged output law.
///
/// For temporal coding the expectation is an adaptive quadrature over the ISI
/// axis; for rate coding it is a truncated sum over counts. This is the
/// high-accuracy reference route, independent of the fixed rule used inside
/// the solvers.
pub fn marginal_info_density(
    theta: f64,
    ensemble: &InputEnsemble,
    channel: &NeuronChannel,
) -> Result<f64> {
    check_probe(channel, theta)?;
    match channel {
        NeuronChannel::Temporal(gamma) => {
            let kappa = gamma.kappa;
            let (x_lo, x_hi) = gamma_tail_bounds(kappa);
            let (omega_lo, omega_hi) = gamma.omega();
            let t_lo = x_lo * omega_lo.min(theta);
            let t_hi = x_hi * omega_hi.max(theta);
            let points = ensemble.points();
            let weights = ensemble.weights();
            let integrand = |t: f64| {
                let f = ln_isi_density(kappa, theta, t).exp();
                if f <= 0.0 {
                    return 0.0;
                }
                let q: f64 = points
                    .iter()
                    .zip(weights)
                    .map(|(&p, &w)| w * ln_isi_density(kappa, p, t).exp())
                    .sum();
                if q <= 0.0 {
                    return 0.0;
                }
                f * (f / q).ln()
            };
            let quad = adaptive_gk(integrand, t_lo, t_hi, 1e-11, 1e-11, 20_000)?;
            Ok(quad.value / LN_2)
        }
        NeuronChannel::Rate(_) => {
            let ev = Evaluator::new(channel)?;
            let rows = ev.rows_for(ensemble.points())?;
            let mixture = ev.mixture(&rows, ensemble.weights());
            ev.info_density(theta, &mixture)
        }
    }
}

/// Mutual information of an input ensemble through the neuron channel, in
/// bits per channel use (per spike for temporal coding, per window for rate
/// coding): Σ w_i · i(θ_i) evaluated on the solver's shared output rule.
pub fn ensemble_mi(ensemble: &InputEnsemble, channel: &NeuronChannel) -> Result<f64> {
    let ev = Evaluator::new(channel)?;
    let rows = ev.rows_for(ensemble.points())?;
    let (_, mi) = information_densities(ensemble.weights(), &rows);
    Ok(mi / LN_2)
}

/// Monte-Carlo estimate of [`ensemble_mi`] with a batch-based standard error.
///
/// Draws (θ, output) pairs with an explicit seed and averages the log-ratio
/// of the conditional to the mixture law; 100 equal batches give the error
/// estimate. Deterministic for a fixed seed on one platform.
pub fn monte_carlo_mi(
    ensemble: &InputEnsemble,
    channel: &NeuronChannel,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    use rand::Rng;
    use rand::SeedableRng;

    if n_samples < 10_000 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: format!("need at least 10000 samples, got {n_samples}"),
        });
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let points = ensemble.points();
    let weights = ensemble.weights();
    let n_batches = 100usize;
    let per_batch = n_samples / n_batches;
    let mut batch_means = Vec::with_capacity(n_batches);

    let sample_component = |rng: &mut rand_chacha::ChaCha12Rng| {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        weights.len() - 1
    };

    match channel {
        NeuronChannel::Temporal(gamma) => {
            let kappa = gamma.kappa;
            for _ in 0..n_batches {
                let mut acc = 0.0;
                for _ in 0..per_batch {
                    let k = sample_component(&mut rng);
                    let t = gamma.sample_isi(points[k], &mut rng);
                    let ln_f = ln_isi_density(kappa, points[k], t);
                    let q: f64 = points
                        .iter()
                        .zip(weights)
                        .map(|(&p, &w)| w * ln_isi_density(kappa, p, t).exp())
                        .sum();
                    acc += (ln_f - q.ln()) / LN_2;
                }
                batch_means.push(acc / per_batch as f64);
            }
        }
        NeuronChannel::Rate(_) => {
            let ev = Evaluator::new(channel)?;
            let rows = ev.rows_for(points)?;
            let mixture = ev.mixture(&rows, weights);
            let cumulative: Vec<Vec<f64>> = rows
                .iter()
                .map(|row| {
                    let mut acc = 0.0;
                    row.iter()
                        .map(|&p| {
                            acc += p;
                            acc
                        })
                        .collect()
                })
                .collect();
            for _ in 0..n_batches {
                let mut acc = 0.0;
                for _ in 0..per_batch {
                    let k = sample_component(&mut rng);
                    let u: f64 = rng.gen();
                    let r = cumulative[k]
                        .iter()
                        .position(|&c| u < c)
                        .unwrap_or(cumulative[k].len() - 1);
                    acc += (rows[k][r] / mixture[r]).ln() / LN_2;
                }
                batch_means.push(acc / per_batch as f64);
            }
        }
    }

    let mean: f64 = batch_means.iter().sum::<f64>() / n_batches as f64;
    let var: f64 = batch_means
        .iter()
        .map(|&m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (n_batches as f64 - 1.0);
    let se = (var / n_batches as f64).sqrt();
    Ok((mean, se))
}

// ---------------------------------------------------------------------------
// KKT certificate.
// ---------------------------------------------------------------------------

fn probe_grid(channel: &NeuronChannel, probe_n: usize) -> Vec<f64> {
    let (lo, hi) = channel.gamma().omega();
    (0..probe_n)
        .map(|i| lo + (hi - lo) * i as f64 / (probe_n - 1) as f64)
        .collect()
}

fn kkt_on_ensemble(
    ev: &Evaluator,
    channel: &NeuronChannel,
    ensemble: &InputEnsemble,
    probe_n: usize,
    slack_tol: f64,
) -> Result<KktReport> {
    let rows = ev.rows_for(ensemble.points())?;
    let mixture = ev.mixture(&rows, ensemble.weights());
    let mut support_density = Vec::with_capacity(ensemble.len());
    for row in &rows {
        let mut acc = 0.0;
        for (&m, &q) in row.iter().zip(&mixture) {
            if m > 0.0 && q > 0.0 {
                acc += m * (m / q).ln();
            }
        }
        support_density.push(acc / LN_2);
    }
    let capacity_ref: f64 = ensemble
        .weights()
        .iter()
        .zip(&support_density)
        .map(|(&w, &d)| w * d)
        .sum();
    let grid = probe_grid(channel, probe_n);
    let info_density: Vec<f64> = grid
        .par_iter()
        .map(|&theta| ev.info_density(theta, &mixture))
        .collect::<Result<_>>()?;
    let max_violation = info_density
        .iter()
        .fold(f64::NEG_INFINITY, |a, &d| a.max(d - capacity_ref));
    let at_support_gap = support_density
        .iter()
        .fold(0.0f64, |a, &d| a.max((d - capacity_ref).abs()));
    Ok(KktReport {
        grid,
        info_density,
        capacity_ref,
        max_violation,
        at_support_gap,
        passed: max_violation <= slack_tol && at_support_gap <= slack_tol,
        slack_tol,
    })
}

/// Verifies the KKT optimality conditions of a solution's ensemble on a fresh
/// probe grid: i(θ) ≤ C + slack everywhere on Ω and |i(θ_i) − C| ≤ slack at
/// every support point, where C is the ensemble's own mutual information.
///
/// Failure is a report outcome, not an error.
pub fn kkt_verify(
    solution: &CapacitySolution,
    probe_n: usize,
    slack_tol: f64,
) -> Result<KktReport> {
    if probe_n < 1001 {
        return Err(Error::InvalidParameter {
            name: "probe_n",
            reason: format!("certificate needs at least 1001 probes, got {probe_n}"),
        });
    }
    let ev = Evaluator::new(&solution.channel)?;
    kkt_on_ensemble(
        &ev,
        &solution.channel,
        &solution.ensemble,
        probe_n,
        slack_tol,
    )
}

// ---------------------------------------------------------------------------
// Support bookkeeping shared by both solvers.
// ---------------------------------------------------------------------------

struct Support {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Support {
    fn ensemble(&self) -> InputEnsemble {
        InputEnsemble::from_parts_unchecked(self.points.clone(), self.weights.clone())
    }

    fn renormalize(&mut self) {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    /// Drops weights below `prune`, and clearly suboptimal light points:
    /// those whose information density sits more than 2·slack below the
    /// current value while carrying under 1e-3 of the mass. The heaviest
    /// point always stays.
    fn prune(&mut self, densities_bits: &[f64], capacity_bits: f64, prune: f64, slack: f64) {
        let keep_idx = self
            .weights
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut points = Vec::with_capacity(self.points.len());
        let mut weights = Vec::with_capacity(self.points.len());
        for (i, (&p, &w)) in self.points.iter().zip(&self.weights).enumerate() {
            let dead = w < prune || (w < 1e-3 && densities_bits[i] < capacity_bits - 2.0 * slack);
            if i == keep_idx || !dead {
                points.push(p);
                weights.push(w);
            }
        }
        self.points = points;
        self.weights = weights;
        self.renormalize();
    }

    /// Merges adjacent points closer than `min_gap` into weighted centroids.
    fn merge_close(&mut self, min_gap: f64) {
        while let Some(k) = self
            .points
            .windows(2)
            .position(|pair| pair[1] - pair[0] < min_gap)
        {
            let w = self.weights[k] + self.weights[k + 1];
            let centroid =
                (self.points[k] * self.weights[k] + self.points[k + 1] * self.weights[k + 1]) / w;
            self.points[k] = centroid;
            self.weights[k] = w;
            self.points.remove(k + 1);
            self.weights.remove(k + 1);
        }
    }
}

/// Golden-section maximisation of `f` on [a, b] with a fixed iteration count,
/// keeping the search scale-covariant.
fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..48 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

fn solution_from(
    channel: &NeuronChannel,
    ensemble: InputEnsemble,
    report: KktReport,
) -> CapacitySolution {
    let capacity_per_use = report.capacity_ref.max(0.0);
    let capacity_bps = bps_for(channel, &ensemble, capacity_per_use);
    CapacitySolution {
        channel: channel.clone(),
        ensemble,
        capacity_per_use,
        capacity_bps,
        certificate: report,
    }
}

// ---------------------------------------------------------------------------
// Grid-restricted capacity (the brute-force reference).
// ---------------------------------------------------------------------------

/// Capacity over inputs restricted to a uniform `grid_n`-point grid on Ω(κ).
///
/// Runs Blahut–Arimoto on an active subset, growing it by the worst violator
/// of the full-grid upper bound until `max_x D(p(·|x) ‖ q) − I` drops below
/// `tol` bits, which certifies the grid-restricted optimum to within `tol`.
/// The returned ensemble keeps only grid points above the pruning threshold.
pub fn grid_capacity(channel: &NeuronChannel, grid_n: usize, tol: f64) -> Result<CapacitySolution> {
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    if grid_n < 51 {
        return Err(Error::InvalidParameter {
            name: "grid_n",
            reason: format!("grid must have at least 51 points, got {grid_n}"),
        });
    }
    let ev = Evaluator::new(channel)?;
    let grid = probe_grid(channel, grid_n);
    let grid_step = grid[1] - grid[0];
    let rows = ev.rows_for(&grid)?;

    // Active set: a coarse subsample including both endpoints.
    let stride = (grid_n / 64).max(1);
    let mut active: Vec<usize> = (0..grid_n).step_by(stride).collect();
    if *active.last().unwrap() != grid_n - 1 {
        active.push(grid_n - 1);
    }

    let mut trace: Option<BlahutArimotoTrace> = None;
    let mut bracket = (0.0, f64::INFINITY);
    let mut certified = false;
    for _ in 0..opts.max_outer_iter {
        let active_rows: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].clone()).collect();
        let (t, _) =
            blahut_arimoto_weights_lenient(&active_rows, None, tol * 0.1, opts.max_inner_iter);
        let mixture = ev.mixture(&active_rows, &t.input);
        let densities: Vec<f64> = rows
            .par_iter()
            .map(|row| {
                let mut acc = 0.0;
                for (&m, &q) in row.iter().zip(&mixture) {
                    if m > 0.0 && q > 0.0 {
                        acc += m * (m / q).ln();
                    }
                }
                acc / LN_2
            })
            .collect();
        let (worst, upper) = densities
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, &d)| (i, d))
            .expect("grid is nonempty");
        bracket = (t.capacity, upper.max(t.capacity));
        trace = Some(t);
        // Keep the bracket well inside the slack so the consolidation loss
        // budget below still leaves a certifiable ensemble.
        if upper - bracket.0 <= 0.4 * tol {
            certified = true;
            break;
        }
        if !active.contains(&worst) {
            active.push(worst);
            active.sort_unstable();
        } else {
            // The bound is blocked by inner-iteration accuracy, not by a
            // missing point; tighten the weight optimisation and retry.
            let refined = blahut_arimoto_weights_lenient(
                &active.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>(),
                Some(&trace.as_ref().unwrap().input),
                tol * 0.05,
                opts.max_inner_iter,
            );
            trace = Some(refined.0);
        }
    }
    let trace = trace.expect("at least one outer iteration runs");
    if !certified {
        return Err(Error::NonConvergence {
            iterations: opts.max_outer_iter,
            best_bits: bracket.0,
            lower_bits: bracket.0,
            upper_bits: bracket.1,
        });
    }

    // Keep surviving grid points, snap clusters of adjacent survivors back to
    // single grid points, and reoptimize the weights on what remains.
    let mut support = Support {
        points: active.iter().map(|&i| grid[i]).collect(),
        weights: trace.input.clone(),
    };
    let active_rows: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].clone()).collect();
    let (densities, mi) = information_densities(&support.weights, &active_rows);
    let densities_bits: Vec<f64> = densities.iter().map(|d| d / LN_2).collect();
    support.prune(&densities_bits, mi / LN_2, opts.prune_threshold, tol);

    let reference = {
        let rows = ev.rows_for(&support.points)?;
        blahut_arimoto_weights_lenient(&rows, None, tol * 0.1, opts.max_inner_iter).0
    };
    support.weights = reference.input.clone();

    // Consolidate the survivors with grid-snapped centroids, gated on the
    // certificate probed over the solver's own feasible set: for fine grids
    // the probe lattice coincides with the input grid, so the report
    // certifies grid-restricted optimality and twin cells merge exactly when
    // the lattice optimum does not need both. Continuous-domain checks with
    // arbitrary probe counts remain available through `kkt_verify`.
    let snap = |theta: f64| {
        let idx = ((theta - grid[0]) / grid_step).round() as usize;
        grid[idx.min(grid_n - 1)]
    };
    let probe_n = grid_n.max(1001);
    let ensemble = support.ensemble();
    let report = kkt_on_ensemble(&ev, channel, &ensemble, probe_n, tol)?;
    let (ensemble, report) =
        consolidate(&ev, channel, ensemble, report, &opts, probe_n, Some(&snap))?;
    Ok(solution_from(channel, ensemble, report))
}

// ---------------------------------------------------------------------------
// Particle solver: free support positions plus KKT-gated consolidation.
// ---------------------------------------------------------------------------

/// Moves support points one at a time towards local maxima of the
/// information density, accepting a move only when the reweighted mutual
/// information does not drop. Sequential monotone acceptance keeps the loop
/// stable and lets near-duplicate points walk into each other until the
/// distance merge collapses them.
fn polish_support(
    ev: &Evaluator,
    support: &mut Support,
    omega: (f64, f64),
    opts: &SolverOptions,
) -> Result<()> {
    let n = support.points.len();
    if n < 2 {
        return Ok(());
    }
    for k in 0..n {
        let rows = ev.rows_for(&support.points)?;
        let (trace, _) = blahut_arimoto_weights_lenient(
            &rows,
            Some(&support.weights),
            opts.tol * 0.125,
            opts.max_inner_iter,
        );
        support.weights = trace.input;
        let mi_old = trace.capacity;
        let mixture = ev.mixture(&rows, &support.weights);
        let lo = if k == 0 {
            omega.0
        } else {
            0.5 * (support.points[k - 1] + support.points[k])
        };
        let hi = if k == n - 1 {
            omega.1
        } else {
            0.5 * (support.points[k] + support.points[k + 1])
        };
        let density = |theta: f64| {
            ev.info_density(theta, &mixture)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let candidate = golden_section_max(density, lo, hi);
        if (candidate - support.points[k]).abs() < f64::EPSILON * omega.1 {
            continue;
        }
        let mut moved = support.points.clone();
        moved[k] = candidate;
        let rows = ev.rows_for(&moved)?;
        let (trace, _) = blahut_arimoto_weights_lenient(
            &rows,
            Some(&support.weights),
            opts.tol * 0.125,
            opts.max_inner_iter,
        );
        if trace.capacity >= mi_old - 1e-12 {
            support.points = moved;
            support.weights = trace.input;
        }
    }
    Ok(())
}

fn certified_candidate(
    ev: &Evaluator,
    channel: &NeuronChannel,
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
    opts: &SolverOptions,
    probe_n: usize,
) -> Result<(InputEnsemble, KktReport)> {
    let rows = ev.rows_for(&points)?;
    let (trace, _) = blahut_arimoto_weights_lenient(
        &rows,
        weights.as_deref(),
        opts.tol * 0.125,
        opts.max_inner_iter,
    );
    let support = Support {
        points,
        weights: trace.input,
    };
    let ensemble = support.ensemble();
    let report = kkt_on_ensemble(ev, channel, &ensemble, probe_n, opts.tol)?;
    Ok((ensemble, report))
}

/// Reduces the support to the smallest set that still certifies: first tries
/// collapsing everything to one point, then greedy adjacent merges, accepting
/// a merge only when the reoptimized ensemble still passes its certificate.
/// `snap` quantizes merged centroids (the grid solver keeps its support on
/// the lattice); duplicate points after snapping reject the candidate.
fn consolidate(
    ev: &Evaluator,
    channel: &NeuronChannel,
    mut ensemble: InputEnsemble,
    mut report: KktReport,
    opts: &SolverOptions,
    probe_n: usize,
    snap: Option<&dyn Fn(f64) -> f64>,
) -> Result<(InputEnsemble, KktReport)> {
    let snap = |theta: f64| snap.map_or(theta, |s| s(theta));
    if ensemble.len() > 2 {
        let collapsed = vec![snap(ensemble.mean_point())];
        if let Ok((ens, rep)) = certified_candidate(ev, channel, collapsed, None, opts, probe_n) {
            if rep.passed {
                return Ok((ens, rep));
            }
        }
    }
    while ensemble.len() > 1 {
        let mut best: Option<(InputEnsemble, KktReport)> = None;
        for k in 0..ensemble.len() - 1 {
            let mut points = ensemble.points().to_vec();
            let mut weights = ensemble.weights().to_vec();
            let w = weights[k] + weights[k + 1];
            points[k] = snap((points[k] * weights[k] + points[k + 1] * weights[k + 1]) / w);
            weights[k] = w;
            points.remove(k + 1);
            weights.remove(k + 1);
            if points.windows(2).any(|p| p[1] <= p[0]) {
                continue;
            }
            let (ens, rep) =
                certified_candidate(ev, channel, points, Some(weights), opts, probe_n)?;
            if rep.passed
                && best
                    .as_ref()
                    .map(|(_, b)| rep.capacity_ref > b.capacity_ref)
                    .unwrap_or(true)
            {
                best = Some((ens, rep));
            }
        }
        match best {
            Some((ens, rep)) => {
                ensemble = ens;
                report = rep;
            }
            None => break,
        }
    }
    Ok((ensemble, report))
}

/// Computes the capacity and a capacity-achieving discrete ensemble over
/// Ω(κ) by alternating weight optimisation, pruning and support-point
/// repositioning until the KKT certificate passes at `opts.tol` bits.
///
/// `init` seeds the support; by default a uniform grid of `opts.init_grid`
/// points. The returned support is consolidated to the smallest point set
/// that still certifies.
pub fn particle_capacity(
    channel: &NeuronChannel,
    init: Option<&InputEnsemble>,
    opts: &SolverOptions,
) -> Result<CapacitySolution> {
    let ev = Evaluator::new(channel)?;
    let gamma = channel.gamma();
    let omega = gamma.omega();
    let width = gamma.omega_width();
    let merge_gap = opts.merge_fraction * width;

    let mut support = match init {
        Some(ens) => Support {
            points: ens.points().to_vec(),
            weights: ens.weights().to_vec(),
        },
        None => {
            let seed = InputEnsemble::uniform_grid(opts.init_grid, gamma)?;
            Support {
                points: seed.points().to_vec(),
                weights: seed.weights().to_vec(),
            }
        }
    };

    let mut best: Option<(InputEnsemble, KktReport)> = None;
    let mut last_violation = f64::INFINITY;
    let mut stagnant = 0usize;
    for _ in 0..opts.max_outer_iter {
        // Weight optimisation on the current support. Large seed grids only
        // need rough weights for the pruning step that follows.
        let inner_cap = if support.points.len() > 24 {
            opts.max_inner_iter.min(20_000)
        } else {
            opts.max_inner_iter
        };
        let rows = ev.rows_for(&support.points)?;
        let (trace, _) = blahut_arimoto_weights_lenient(
            &rows,
            Some(&support.weights),
            opts.tol * 0.125,
            inner_cap,
        );
        support.weights = trace.input.clone();
        let (densities, mi) = information_densities(&support.weights, &rows);
        let densities_bits: Vec<f64> = densities.iter().map(|d| d / LN_2).collect();
        support.prune(&densities_bits, mi / LN_2, opts.prune_threshold, opts.tol);
        support.merge_close(merge_gap);

        // Local search on the support positions, then reweight.
        polish_support(&ev, &mut support, omega, opts)?;
        support.merge_close(merge_gap);
        let rows = ev.rows_for(&support.points)?;
        let (trace, _) = blahut_arimoto_weights_lenient(
            &rows,
            Some(&support.weights),
            opts.tol * 0.125,
            opts.max_inner_iter,
        );
        support.weights = trace.input;

        let ensemble = support.ensemble();
        let report = kkt_on_ensemble(&ev, channel, &ensemble, opts.probe_n, opts.tol)?;
        let improved = best
            .as_ref()
            .map(|(_, b)| (report.passed, report.capacity_ref) > (b.passed, b.capacity_ref))
            .unwrap_or(true);
        if improved {
            best = Some((ensemble.clone(), report.clone()));
        }
        if report.passed {
            let (ens, rep) = consolidate(&ev, channel, ensemble, report, opts, opts.probe_n, None)?;
            return Ok(solution_from(channel, ens, rep));
        }

        // Grow the support at the worst violator.
        let (worst_idx, _) = report
            .info_density
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .expect("probe grid is nonempty");
        let candidate = report.grid[worst_idx];
        let nearest = support
            .points
            .iter()
            .fold(f64::INFINITY, |a, &p| a.min((p - candidate).abs()));
        if nearest > merge_gap {
            let idx = support.points.partition_point(|&p| p < candidate);
            support.points.insert(idx, candidate);
            support.weights.insert(idx, 0.02);
            support.renormalize();
        }
        if report.max_violation > last_violation - 0.1 * last_violation.abs() {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        last_violation = report.max_violation;
        if stagnant >= 8 {
            break;
        }
    }

    let (ensemble, report) = best.expect("at least one outer iteration runs");
    Err(Error::SolverNonConvergence {
        iterations: opts.max_outer_iter,
        best_bits: report.capacity_ref,
        max_violation: report.max_violation,
        best: Box::new(solution_from(channel, ensemble, report)),
    })
}
