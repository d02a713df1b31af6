//! MAP hard decoding: precomputed decision regions over the output space and
//! the discrete channel they induce.

use serde::Serialize;

use crate::blahut::blahut_arimoto;
use crate::error::{Error, Result};
use crate::pmf::ChannelMatrix;
use crate::solver::{CapacitySolution, Coding, Evaluator, NeuronChannel};
use crate::special::regularized_gamma_pq;

/// Decision regions of the MAP hard decoder, with the induced discrete
/// channel from support points to regions and its Blahut–Arimoto capacity.
///
/// A support point that never attains the maximum posterior owns no region;
/// such points are listed in `degenerate` rather than treated as an error.
#[derive(Debug, Clone, Serialize)]
pub struct DecoderPartition {
    pub coding: Coding,
    /// Interior thresholds between consecutive regions, in output units
    /// (seconds for temporal coding, counts for rate coding).
    pub boundaries: Vec<f64>,
    /// Support-point index owning each region, in output order.
    pub owners: Vec<usize>,
    /// p(region | θ_i) for every support point.
    #[serde(skip)]
    pub induced_channel: ChannelMatrix,
    /// Capacity of the induced discrete channel, bits per use.
    pub hard_rate: f64,
    /// Support points owning no region.
    pub degenerate: Vec<usize>,
}

/// Builds the MAP decision regions for a solved capacity problem.
///
/// The decoder picks argmax_i w_i p(output|θ_i). For the gamma family the
/// pairwise log-posterior differences are affine in the ISI, so the temporal
/// regions are intervals found as the upper envelope of lines; rate regions
/// are computed by direct posterior comparison at each count.
pub fn hard_decoder(solution: &CapacitySolution) -> Result<DecoderPartition> {
    let ensemble = &solution.ensemble;
    if ensemble.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "ensemble",
            reason: "hard decoding needs at least two support points".into(),
        });
    }
    match &solution.channel {
        NeuronChannel::Temporal(gamma) => temporal_partition(solution, gamma.kappa),
        NeuronChannel::Rate(_) => rate_partition(solution),
    }
}

/// Upper envelope of g_i(t) = ln w_i − κ ln θ_i − t/θ_i over t ≥ 0; the
/// shared (κ−1)·ln t term cancels in every pairwise comparison.
fn temporal_partition(solution: &CapacitySolution, kappa: f64) -> Result<DecoderPartition> {
    let points = solution.ensemble.points();
    let weights = solution.ensemble.weights();
    let n = points.len();

    struct Line {
        slope: f64,
        intercept: f64,
        idx: usize,
    }
    let lines: Vec<Line> = (0..n)
        .filter(|&i| weights[i] > 0.0)
        .map(|i| Line {
            slope: -1.0 / points[i],
            intercept: weights[i].ln() - kappa * points[i].ln(),
            idx: i,
        })
        .collect();

    // Points are sorted by θ, hence lines by increasing slope.
    let mut hull: Vec<(usize, f64)> = Vec::new(); // (line index, region start t)
    for (li, line) in lines.iter().enumerate() {
        loop {
            match hull.last() {
                None => {
                    hull.push((li, 0.0));
                    break;
                }
                Some(&(top, top_start)) => {
                    let t_cross =
                        (line.intercept - lines[top].intercept) / (lines[top].slope - line.slope);
                    if t_cross <= top_start {
                        hull.pop();
                    } else {
                        hull.push((li, t_cross));
                        break;
                    }
                }
            }
        }
    }

    let owners: Vec<usize> = hull.iter().map(|&(li, _)| lines[li].idx).collect();
    let boundaries: Vec<f64> = hull.iter().skip(1).map(|&(_, start)| start).collect();
    let degenerate: Vec<usize> = (0..n).filter(|i| !owners.contains(i)).collect();

    // p(region | θ) from gamma interval masses, subtracting the smaller tails.
    let n_regions = owners.len();
    let mut rows = Vec::with_capacity(n);
    for &theta in points {
        let mut row = Vec::with_capacity(n_regions);
        for k in 0..n_regions {
            let lo = if k == 0 { 0.0 } else { boundaries[k - 1] };
            let hi = if k == n_regions - 1 {
                f64::INFINITY
            } else {
                boundaries[k]
            };
            let (p1, q1) = if lo == 0.0 {
                (0.0, 1.0)
            } else {
                regularized_gamma_pq(kappa, lo / theta)?
            };
            let (p2, q2) = if hi.is_infinite() {
                (1.0, 0.0)
            } else {
                regularized_gamma_pq(kappa, hi / theta)?
            };
            let mass = if p2 <= 0.5 { p2 - p1 } else { q1 - q2 };
            row.push(mass.max(0.0));
        }
        let total: f64 = row.iter().sum();
        for m in &mut row {
            *m /= total;
        }
        rows.push(row);
    }
    finish_partition(
        solution,
        Coding::Temporal,
        boundaries,
        owners,
        degenerate,
        rows,
    )
}

fn rate_partition(solution: &CapacitySolution) -> Result<DecoderPartition> {
    let ev = Evaluator::new(&solution.channel)?;
    let points = solution.ensemble.points();
    let weights = solution.ensemble.weights();
    let n = points.len();
    let rows_pmf = ev.rows_for(points)?;
    let n_out = ev.n_outputs();

    // MAP owner at each count.
    let owner_at: Vec<usize> = (0..n_out)
        .map(|r| {
            (0..n)
                .max_by(|&a, &b| {
                    (weights[a] * rows_pmf[a][r]).total_cmp(&(weights[b] * rows_pmf[b][r]))
                })
                .expect("ensemble is nonempty")
        })
        .collect();

    // Group runs of identical owners; the gamma count family has monotone
    // likelihood ratios so each owner appears in one run.
    let mut owners = Vec::new();
    let mut boundaries = Vec::new();
    let mut region_of = vec![0usize; n_out];
    for (r, &o) in owner_at.iter().enumerate() {
        if owners.last() != Some(&o) {
            if r > 0 {
                boundaries.push(r as f64 - 0.5);
            }
            owners.push(o);
        }
        region_of[r] = owners.len() - 1;
    }
    let degenerate: Vec<usize> = (0..n).filter(|i| !owners.contains(i)).collect();

    let n_regions = owners.len();
    let mut rows = Vec::with_capacity(n);
    for pmf in &rows_pmf {
        let mut row = vec![0.0; n_regions];
        for (r, &p) in pmf.iter().enumerate() {
            row[region_of[r]] += p;
        }
        // Counts beyond the truncation belong with the last region.
        let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
        row[region_of[n_out - 1]] += tail;
        rows.push(row);
    }
    finish_partition(solution, Coding::Rate, boundaries, owners, degenerate, rows)
}

fn finish_partition(
    solution: &CapacitySolution,
    coding: Coding,
    boundaries: Vec<f64>,
    owners: Vec<usize>,
    degenerate: Vec<usize>,
    rows: Vec<Vec<f64>>,
) -> Result<DecoderPartition> {
    let input_labels: Vec<String> = (0..solution.ensemble.len())
        .map(|i| format!("theta_{i}"))
        .collect();
    let output_labels: Vec<String> = (0..owners.len()).map(|k| format!("region_{k}")).collect();
    let induced_channel = ChannelMatrix::new(input_labels, output_labels, rows)?;
    let (hard_rate, _) = blahut_arimoto(&induced_channel, 1e-9, 200_000)?;
    Ok(DecoderPartition {
        coding,
        boundaries,
        owners,
        induced_channel,
        hard_rate,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GammaChannel;
    use crate::ensemble::InputEnsemble;
    use crate::solver::{ensemble_mi, kkt_verify, KktReport};

    fn fake_solution(channel: NeuronChannel, ensemble: InputEnsemble) -> CapacitySolution {
        let capacity = ensemble_mi(&ensemble, &channel).unwrap();
        CapacitySolution {
            channel,
            ensemble,
            capacity_per_use: capacity,
            capacity_bps: 0.0,
            certificate: KktReport {
                grid: vec![],
                info_density: vec![],
                capacity_ref: capacity,
                max_violation: 0.0,
                at_support_gap: 0.0,
                passed: true,
                slack_tol: 1e-4,
            },
        }
    }

    #[test]
    fn symmetric_two_point_boundary_sits_at_equal_likelihood() {
        let gamma = GammaChannel::new(2.0, 0.002, 0.02).unwrap();
        let ens = InputEnsemble::new(vec![0.002, 0.008], vec![0.5, 0.5], &gamma).unwrap();
        let sol = fake_solution(NeuronChannel::temporal(gamma), ens);
        let part = hard_decoder(&sol).unwrap();
        assert_eq!(part.owners, vec![0, 1]);
        assert_eq!(part.boundaries.len(), 1);
        let t = part.boundaries[0];
        // Equal weights: the threshold is where the two densities cross.
        let f0 = sol.channel.gamma().isi_density(t, 0.002).unwrap();
        let f1 = sol.channel.gamma().isi_density(t, 0.008).unwrap();
        assert!((f0 - f1).abs() / f0 < 1e-9, "f0={f0}, f1={f1}");
        assert!(part.degenerate.is_empty());
    }

    #[test]
    fn hard_rate_never_beats_soft_capacity() {
        let gamma = GammaChannel::new(1.0, 0.003, 0.03).unwrap();
        let cfg = crate::channel::CountChannelConfig::new(gamma, 0.1, 1e-12).unwrap();
        let ens = InputEnsemble::new(vec![0.003, 0.03], vec![0.5, 0.5], &gamma).unwrap();
        let sol = fake_solution(NeuronChannel::rate(cfg), ens);
        let part = hard_decoder(&sol).unwrap();
        assert!(part.hard_rate <= sol.capacity_per_use + 1e-9);
        // Overlapping likelihoods leave a real gap.
        assert!(part.hard_rate < sol.capacity_per_use);
    }

    #[test]
    fn rate_regions_follow_posterior_comparison() {
        // kappa = 1: Poisson counts. Two points, equal weights; the region
        // switch happens where the posteriors cross.
        let gamma = GammaChannel::new(1.0, 0.005, 0.05).unwrap();
        let cfg = crate::channel::CountChannelConfig::new(gamma, 0.1, 1e-12).unwrap();
        let ens = InputEnsemble::new(vec![0.005, 0.05], vec![0.5, 0.5], &gamma).unwrap();
        let sol = fake_solution(NeuronChannel::rate(cfg), ens.clone());
        let part = hard_decoder(&sol).unwrap();
        // Direct enumeration of the posteriors.
        let ev = Evaluator::new(&sol.channel).unwrap();
        let rows = ev.rows_for(ens.points()).unwrap();
        for (r, posterior) in rows[0].iter().zip(&rows[1]).enumerate() {
            let map = if posterior.0 >= posterior.1 { 0 } else { 1 };
            let region = part
                .boundaries
                .iter()
                .position(|&b| (r as f64) < b)
                .unwrap_or(part.owners.len() - 1);
            assert_eq!(part.owners[region], map, "count {r}");
        }
    }

    #[test]
    fn single_point_is_rejected() {
        let gamma = GammaChannel::new(1.0, 0.003, 0.03).unwrap();
        let ens = InputEnsemble::singleton(0.01, &gamma).unwrap();
        let sol = fake_solution(NeuronChannel::temporal(gamma), ens);
        assert!(hard_decoder(&sol).is_err());
    }

    #[test]
    fn kkt_verify_of_fake_solution_fails() {
        // A one-sided ensemble is far from optimal; the certificate says so.
        let gamma = GammaChannel::new(2.0, 0.002, 0.02).unwrap();
        let ens = InputEnsemble::singleton(0.005, &gamma).unwrap();
        let sol = fake_solution(NeuronChannel::temporal(gamma), ens);
        let report = kkt_verify(&sol, 1001, 1e-4).unwrap();
        assert!(!report.passed);
        assert!(report.max_violation > 1e-4);
    }
}
