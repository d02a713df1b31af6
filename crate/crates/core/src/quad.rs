//! Numerical integration: adaptive Gauss–Kronrod and fixed composite rules.

use crate::error::{Error, Result};

/// Kronrod 15-point nodes on [0, 1] side of the symmetric pair.
#[allow(clippy::excessive_precision)] // published constant values
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss 7-point weights, matching the odd-index Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Gauss–Legendre 16-point nodes (positive half) and weights.
#[allow(clippy::excessive_precision)]
const XGL16: [f64; 8] = [
    0.989_400_934_991_649_9,
    0.944_575_023_073_232_6,
    0.865_631_202_387_831_7,
    0.755_404_408_355_003_0,
    0.617_876_244_402_643_7,
    0.458_016_777_657_227_4,
    0.281_603_550_779_258_9,
    0.095_012_509_837_637_44,
];

#[allow(clippy::excessive_precision)]
const WGL16: [f64; 8] = [
    0.027_152_459_411_754_095,
    0.062_253_523_938_647_89,
    0.095_158_511_682_492_78,
    0.124_628_971_255_533_87,
    0.149_595_988_816_576_73,
    0.169_156_519_395_002_54,
    0.182_603_415_044_923_59,
    0.189_450_610_455_068_5,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = half * XGK[i];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// Splits the interval with the largest error estimate until the accumulated
/// estimate drops below `max(abs_tol, rel_tol·|value|)` or `max_panels` is
/// reached, in which case the achieved tolerance is reported in the error.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if !(b > a) {
        return Err(Error::Domain(format!(
            "integration bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    let (value, error) = gk15(&f, a, b);
    let mut panels = vec![Panel { a, b, value, error }];
    let mut evaluations = 15usize;
    loop {
        let total_value: f64 = panels.iter().map(|p| p.value).sum();
        let total_error: f64 = panels.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * total_value.abs());
        if total_error <= target {
            return Ok(QuadResult {
                value: total_value,
                error: total_error,
                evaluations,
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureTolerance {
                requested: target,
                achieved: total_error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.error.total_cmp(&q.error))
            .map(|(i, _)| i)
            .expect("panel list is never empty");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        let (lv, le) = gk15(&f, a, mid);
        let (rv, re) = gk15(&f, mid, b);
        evaluations += 30;
        panels.push(Panel {
            a,
            b: mid,
            value: lv,
            error: le,
        });
        panels.push(Panel {
            a: mid,
            b,
            value: rv,
            error: re,
        });
    }
}

/// A fixed quadrature rule: explicit nodes and weights on some interval.
///
/// Built once and reused across many integrands, e.g. every information
/// density evaluation of a capacity solve shares one rule so that the same
/// output discretisation backs every mixture and conditional integral.
#[derive(Debug, Clone)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    /// Composite 16-point Gauss–Legendre on geometrically spaced panels
    /// covering [lo, hi], with `per_decade` panels per factor of ten.
    pub fn log_panels(lo: f64, hi: f64, per_decade: f64) -> FixedRule {
        assert!(
            lo > 0.0 && hi > lo,
            "log panels need 0 < lo < hi, got [{lo}, {hi}]"
        );
        let decades = (hi / lo).log10();
        let n_panels = ((decades * per_decade).ceil() as usize).max(2);
        let ln_lo = lo.ln();
        let ln_hi = hi.ln();
        let mut nodes = Vec::with_capacity(16 * n_panels);
        let mut weights = Vec::with_capacity(16 * n_panels);
        for k in 0..n_panels {
            let a = (ln_lo + (ln_hi - ln_lo) * k as f64 / n_panels as f64).exp();
            let b = (ln_lo + (ln_hi - ln_lo) * (k + 1) as f64 / n_panels as f64).exp();
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            // XGL16 runs outermost-first, so this covers the panel in
            // ascending node order.
            for i in 0..8 {
                nodes.push(center - half * XGL16[i]);
                weights.push(half * WGL16[i]);
            }
            for i in (0..8).rev() {
                nodes.push(center + half * XGL16[i]);
                weights.push(half * WGL16[i]);
            }
        }
        FixedRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_polynomial() {
        let r = adaptive_gk(|x| x * x, 0.0, 1.0, 1e-12, 0.0, 100).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_exponential_tail() {
        let r = adaptive_gk(|x| (-x).exp(), 0.0, 60.0, 1e-12, 0.0, 500).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn adaptive_integrable_singularity() {
        // 1/sqrt(x) integrates to 2 on (0, 1]; the endpoint is never evaluated.
        let r = adaptive_gk(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-9, 0.0, 4000).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn adaptive_reports_unreachable_tolerance() {
        let err = adaptive_gk(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-13, 0.0, 8).unwrap_err();
        match err {
            crate::error::Error::QuadratureTolerance {
                requested,
                achieved,
            } => {
                assert!(achieved > requested);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn log_panels_integrate_gamma_density() {
        // shape-kappa, scale-theta gamma density integrates to 1; the lower
        // cutoff leaves below 1e-12 of mass (P(kappa, x) ~ x^kappa).
        for &(kappa, theta) in &[(1.0, 0.01), (3.0, 0.004), (0.5, 1.0)] {
            let lo = theta * 1e-12f64.powf(1.0 / kappa);
            let hi = theta * 200.0;
            let rule = FixedRule::log_panels(lo, hi, 4.0);
            let ln_norm = crate::special::ln_gamma(kappa) + kappa * theta.ln();
            let total = rule.integrate(|t| ((kappa - 1.0) * t.ln() - t / theta - ln_norm).exp());
            assert_relative_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn log_panels_weights_are_positive() {
        let rule = FixedRule::log_panels(1e-6, 1.0, 3.0);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
