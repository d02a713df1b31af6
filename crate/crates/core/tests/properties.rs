//! Cross-module invariants: identities that must hold for arbitrary inputs,
//! checked by property testing and seeded random search.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use neurocap::*;

fn joint_from_weights(weights: Vec<Vec<f64>>) -> JointPmf {
    let total: f64 = weights.iter().flatten().sum();
    let rows = weights.len();
    let cols = weights[0].len();
    let probs: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|w| w / total).collect())
        .collect();
    JointPmf::new(
        (0..rows).map(|i| format!("x{i}")).collect(),
        (0..cols).map(|j| format!("y{j}")).collect(),
        probs,
    )
    .unwrap()
}

fn arb_joint() -> impl Strategy<Value = JointPmf> {
    (2usize..=5, 2usize..=5).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, cols), rows)
            .prop_map(joint_from_weights)
    })
}

fn arb_pmf(n: usize) -> impl Strategy<Value = DiscretePmf> {
    proptest::collection::vec(0.001f64..1.0, n).prop_map(|weights| {
        DiscretePmf::new_renormalized(
            (0..weights.len())
                .map(|i| i.to_string())
                .collect::<Vec<_>>(),
            weights,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Chain rule: I(X;Y) = H(X) − H(X|Y) = H(Y) − H(Y|X).
    #[test]
    fn mutual_information_chain_rule(joint in arb_joint()) {
        let mi = mutual_information(&joint);
        let via_x = entropy(&joint.row_marginal()) - conditional_entropy(&joint.transposed());
        let via_y = entropy(&joint.col_marginal()) - conditional_entropy(&joint);
        prop_assert!((mi - via_x).abs() < 1e-10, "{mi} vs {via_x}");
        prop_assert!((mi - via_y).abs() < 1e-10, "{mi} vs {via_y}");
    }

    /// Swapping the two variables leaves the mutual information unchanged.
    #[test]
    fn mutual_information_is_symmetric(joint in arb_joint()) {
        let forward = mutual_information(&joint);
        let backward = mutual_information(&joint.transposed());
        prop_assert!((forward - backward).abs() < 1e-12);
    }

    /// 0 ≤ H(p) ≤ log2(alphabet size).
    #[test]
    fn entropy_bounds(pmf in (2usize..=16).prop_flat_map(arb_pmf)) {
        let h = entropy(&pmf);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (pmf.len() as f64).log2() + 1e-12);
    }

    /// KL is nonnegative, and (by Pinsker) nearly-zero KL forces p ≈ q.
    #[test]
    fn kl_nonnegative_and_separating(
        (p, q) in (2usize..=8).prop_flat_map(|n| (arb_pmf(n), arb_pmf(n)))
    ) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        if d < 1e-12 {
            let close = p
                .probs()
                .iter()
                .zip(q.probs())
                .all(|(&a, &b)| (a - b).abs() < 1e-5);
            prop_assert!(close, "KL ~ 0 but distributions differ");
        }
        let self_d = kl_divergence(&p, &p).unwrap();
        prop_assert!(self_d.abs() < 1e-12);
    }

    /// Count distributions never lose more than the stated tail mass.
    #[test]
    fn truncated_count_mass_deficit(
        kappa in 0.2f64..8.0,
        ratio in 0.05f64..40.0,
        tail_exp in 7.0f64..12.0,
    ) {
        let theta = 0.01;
        let tail_tol = 10f64.powf(-tail_exp);
        let gamma = GammaChannel::new(kappa, kappa * theta * 0.5, kappa * theta * 2.0).unwrap();
        let cfg = CountChannelConfig::new(gamma, ratio * theta, tail_tol).unwrap();
        let pmf = cfg.truncated_count_pmf(theta).unwrap();
        prop_assert!(pmf.total_mass() >= 1.0 - tail_tol);
        prop_assert!(pmf.probs.iter().all(|&p| p >= 0.0));
    }
}

/// Blahut–Arimoto dominates random input search on random channels.
#[test]
fn blahut_arimoto_dominates_random_search() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    let tol = 1e-6;
    for trial in 0..500 {
        let n_in = rng.gen_range(2..=4);
        let n_out = rng.gen_range(2..=4);
        let rows: Vec<Vec<f64>> = (0..n_in)
            .map(|_| {
                let raw: Vec<f64> = (0..n_out).map(|_| -rng.gen::<f64>().ln()).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            })
            .collect();
        let channel = ChannelMatrix::new(
            (0..n_in).map(|i| format!("x{i}")).collect::<Vec<_>>(),
            (0..n_out).map(|j| format!("y{j}")).collect::<Vec<_>>(),
            rows,
        )
        .unwrap();
        let (capacity, _) =
            blahut_arimoto(&channel, tol, 500_000).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        for _ in 0..10_000 {
            let raw: Vec<f64> = (0..n_in).map(|_| -rng.gen::<f64>().ln()).collect();
            let input = DiscretePmf::new_renormalized(
                (0..n_in).map(|i| format!("x{i}")).collect::<Vec<_>>(),
                raw,
            )
            .unwrap();
            let mi = channel_mutual_information(&input, &channel).unwrap();
            assert!(
                capacity >= mi - tol,
                "trial {trial}: random input reaches {mi}, solver says {capacity}"
            );
        }
    }
}

/// Per-iteration mutual information of the Blahut–Arimoto iterate never drops.
#[test]
fn blahut_arimoto_iterations_are_monotone_on_random_channels() {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for _ in 0..50 {
        let n_in = rng.gen_range(2..=5);
        let n_out = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..n_in)
            .map(|_| {
                let raw: Vec<f64> = (0..n_out).map(|_| -rng.gen::<f64>().ln()).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            })
            .collect();
        let channel = ChannelMatrix::new(
            (0..n_in).map(|i| format!("x{i}")).collect::<Vec<_>>(),
            (0..n_out).map(|j| format!("y{j}")).collect::<Vec<_>>(),
            rows,
        )
        .unwrap();
        let trace = blahut_arimoto_trace(&channel, 1e-9, 200_000).unwrap();
        for pair in trace.mi_per_iteration.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-12,
                "MI fell: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

/// Enlarging the input interval can only increase the capacity.
#[test]
fn capacity_grows_with_the_input_interval() {
    let windows = [(0.003, 0.03), (0.002, 0.045), (0.0015, 0.06)];
    let mut last = 0.0;
    for (a0, b0) in windows {
        let gamma = GammaChannel::new(1.0, a0, b0).unwrap();
        let channel = NeuronChannel::rate(CountChannelConfig::new(gamma, 0.1, 1e-12).unwrap());
        let solution = particle_capacity(&channel, None, &SolverOptions::default()).unwrap();
        assert!(
            solution.capacity_per_use >= last - 1e-6,
            "capacity fell from {last} to {} at [{a0}, {b0}]",
            solution.capacity_per_use
        );
        last = solution.capacity_per_use;
    }
    assert!(
        last > 1.5,
        "widest interval should clear 1.5 bits, got {last}"
    );
}

/// Certificate soundness: Σ w_i·i(θ_i) equals the ensemble MI for arbitrary
/// (not just optimal) ensembles.
#[test]
fn certificate_reference_matches_ensemble_mi() {
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    for coding in [Coding::Temporal, Coding::Rate] {
        for _ in 0..5 {
            let gamma = GammaChannel::new(2.0, 0.003, 0.03).unwrap();
            let channel = match coding {
                Coding::Temporal => NeuronChannel::temporal(gamma),
                Coding::Rate => {
                    NeuronChannel::rate(CountChannelConfig::new(gamma, 0.1, 1e-12).unwrap())
                }
            };
            let (lo, hi) = gamma.omega();
            let mut points: Vec<f64> = (0..3).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
            points.sort_by(f64::total_cmp);
            points.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let raw: Vec<f64> = points.iter().map(|_| rng.gen::<f64>() + 0.1).collect();
            let total: f64 = raw.iter().sum();
            let ens = InputEnsemble::new(points, raw.iter().map(|w| w / total).collect(), &gamma)
                .unwrap();
            let averaged: f64 = ens
                .points()
                .iter()
                .zip(ens.weights())
                .map(|(&p, &w)| w * marginal_info_density(p, &ens, &channel).unwrap())
                .sum();
            let direct = ensemble_mi(&ens, &channel).unwrap();
            assert!(
                (averaged - direct).abs() < 1e-9,
                "{coding}: {averaged} vs {direct}"
            );
        }
    }
}

/// Moving a breakpoint off its quantile strictly costs information.
#[test]
fn perturbed_breakpoint_strictly_loses_information() {
    let gamma = GammaChannel::new(1.0, 0.003, 0.03).unwrap();
    let channel = NeuronChannel::rate(CountChannelConfig::new(gamma, 0.1, 1e-12).unwrap());
    let solution = particle_capacity(&channel, None, &SolverOptions::default()).unwrap();
    let stim = StimulusDistribution::uniform(0.0, 1.0).unwrap();
    let curve = build_tuning_curve(&solution, &stim).unwrap();
    let (_, gap) = verify_tuning_mi(&curve, &stim, &solution).unwrap();
    assert!(gap.abs() <= 1e-6, "clean curve gap {gap}");

    // Shift an interior breakpoint by 10% of its interval.
    let mut breakpoints = curve.breakpoints().to_vec();
    let interval = breakpoints[2] - breakpoints[1];
    breakpoints[1] += 0.1 * interval;
    let perturbed = TuningCurve::new(
        curve.coding(),
        curve.direction(),
        breakpoints,
        curve.levels().to_vec(),
    )
    .unwrap();
    let (_, perturbed_gap) = verify_tuning_mi(&perturbed, &stim, &solution).unwrap();
    assert!(
        perturbed_gap > gap.max(1e-7),
        "perturbation did not cost information: gap {perturbed_gap}"
    );
}

/// A certified one-point solution (degenerate input interval) produces a
/// constant tuning curve carrying no information.
#[test]
fn one_point_solution_gives_constant_curve() {
    let gamma = GammaChannel::new(2.0, 0.003, 0.003 * 1.0001).unwrap();
    let channel = NeuronChannel::temporal(gamma);
    let solution = particle_capacity(&channel, None, &SolverOptions::default()).unwrap();
    assert_eq!(solution.ensemble.len(), 1);
    let stim = StimulusDistribution::uniform(-2.0, 5.0).unwrap();
    let curve = build_tuning_curve(&solution, &stim).unwrap();
    assert_eq!(curve.n_levels(), 1);
    assert_eq!(curve.level_at(-2.0).unwrap(), curve.level_at(5.0).unwrap());
    let (mi, gap) = verify_tuning_mi(&curve, &stim, &solution).unwrap();
    assert!(mi.abs() < 1e-12, "constant curve carries {mi} bits");
    assert!(gap.abs() < 1e-9);
}
