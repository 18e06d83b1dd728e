//! Regularizers pulling local parameters toward the consensus targets:
//! plain L2 for the means, Gaussian KL divergence for the spreads.

use crate::bayesian_nn::{sigmoid, softplus};
use crate::error::{Error, Result};

fn check_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!(
            "{what}: length mismatch {a} vs {b}"
        )));
    }
    Ok(())
}

/// `sum_i (mu_i - mu_reg_i)^2`; zero iff the vectors are equal.
pub fn l2_mu_regularizer(mu: &[f64], mu_reg: &[f64]) -> Result<f64> {
    check_len("l2_mu_regularizer", mu.len(), mu_reg.len())?;
    Ok(mu
        .iter()
        .zip(mu_reg)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Adds `weight * d/d mu` of the L2 regularizer into `grad`.
pub fn l2_mu_gradient(mu: &[f64], mu_reg: &[f64], weight: f64, grad: &mut [f64]) -> Result<()> {
    check_len("l2_mu_gradient", mu.len(), mu_reg.len())?;
    check_len("l2_mu_gradient grad", mu.len(), grad.len())?;
    for i in 0..mu.len() {
        grad[i] += weight * 2.0 * (mu[i] - mu_reg[i]);
    }
    Ok(())
}

/// Sum over coordinates of `KL(N(0, sigma^2) || N(0, sigma_reg^2))` with
/// `sigma = softplus(rho)`:
///
/// `sum_i [ ln(sigma_reg_i / sigma_i) + sigma_i^2 / (2 sigma_reg_i^2) - 1/2 ]`
///
/// Nonnegative, and exactly zero when `rho == rho_reg` elementwise. Only the
/// spreads enter; the means are regularized separately, so the divergence is
/// taken between zero-mean Gaussians.
pub fn kl_rho_regularizer(rho: &[f64], rho_reg: &[f64]) -> Result<f64> {
    check_len("kl_rho_regularizer", rho.len(), rho_reg.len())?;
    let mut total = 0.0;
    for (&r, &r_reg) in rho.iter().zip(rho_reg) {
        let sigma = softplus(r);
        let sigma_reg = softplus(r_reg);
        // Rewritten as (u - ln(1 + u)) / 2 with u = sigma^2/sigma_reg^2 - 1,
        // which stays nonnegative under rounding and is exactly zero at
        // equality (the naive ln(ratio) form cancels catastrophically there).
        let u = (sigma - sigma_reg) * (sigma + sigma_reg) / (sigma_reg * sigma_reg);
        total += 0.5 * (u - u.ln_1p());
    }
    Ok(total)
}

/// Adds `weight * d/d rho` of the KL regularizer into `grad`:
/// `d KL / d sigma = -1/sigma + sigma / sigma_reg^2`, chained through
/// `d sigma / d rho = sigmoid(rho)`.
pub fn kl_rho_gradient(rho: &[f64], rho_reg: &[f64], weight: f64, grad: &mut [f64]) -> Result<()> {
    check_len("kl_rho_gradient", rho.len(), rho_reg.len())?;
    check_len("kl_rho_gradient grad", rho.len(), grad.len())?;
    for i in 0..rho.len() {
        let sigma = softplus(rho[i]);
        let sigma_reg = softplus(rho_reg[i]);
        let d_sigma = (sigma - sigma_reg) * (sigma + sigma_reg) / (sigma * sigma_reg * sigma_reg);
        grad[i] += weight * d_sigma * sigmoid(rho[i]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesian_nn::softplus_inverse;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn l2_zero_at_equality() {
        let v = vec![0.3, -1.7, 42.0];
        assert_eq!(l2_mu_regularizer(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn l2_hand_sum() {
        assert_eq!(l2_mu_regularizer(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn l2_matches_scalar_loop() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut state = 0x9E3779B97F4A7C15_u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            a.push((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            b.push((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        }
        let mut expected = 0.0;
        for i in 0..a.len() {
            let d = a[i] - b[i];
            expected += d * d;
        }
        assert_relative_eq!(l2_mu_regularizer(&a, &b).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn l2_length_mismatch_is_an_error() {
        assert!(l2_mu_regularizer(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kl_zero_at_equality() {
        let rho = vec![-3.0, 0.0, 2.5];
        assert_eq!(kl_rho_regularizer(&rho, &rho).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_value_sigma_one_vs_two() {
        // KL(N(0,1) || N(0,4)) = ln 2 + 1/8 - 1/2.
        let rho = [softplus_inverse(1.0)];
        let rho_reg = [softplus_inverse(2.0)];
        let expected = 2.0_f64.ln() + 0.125 - 0.5;
        assert_relative_eq!(
            kl_rho_regularizer(&rho, &rho_reg).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_is_additive_over_coordinates() {
        let rho = [softplus_inverse(0.5), softplus_inverse(1.5), -2.0];
        let rho_reg = [softplus_inverse(1.0), softplus_inverse(0.7), 1.0];
        let total = kl_rho_regularizer(&rho, &rho_reg).unwrap();
        let sum: f64 = (0..3)
            .map(|i| kl_rho_regularizer(&rho[i..=i], &rho_reg[i..=i]).unwrap())
            .sum();
        assert_relative_eq!(total, sum, epsilon = 1e-12);
    }

    #[test]
    fn kl_matches_numerical_integration() {
        // Oracle: direct quadrature of the divergence integrand
        // p(x) ln(p(x)/q(x)) for zero-mean Gaussians.
        let integrate = |sigma: f64, sigma_reg: f64| {
            let span = 12.0 * sigma.max(sigma_reg);
            let n = 200_001;
            let h = 2.0 * span / (n - 1) as f64;
            let pdf = |x: f64, s: f64| {
                (-0.5 * (x / s) * (x / s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            };
            // log(p/q) expanded analytically so tail underflow of q cannot
            // poison the integrand.
            let log_ratio = |x: f64| {
                (sigma_reg / sigma).ln()
                    + 0.5 * x * x * (1.0 / (sigma_reg * sigma_reg) - 1.0 / (sigma * sigma))
            };
            let f = |x: f64| {
                let p = pdf(x, sigma);
                if p <= 0.0 {
                    0.0
                } else {
                    p * log_ratio(x)
                }
            };
            // Simpson's rule.
            let mut acc = f(-span) + f(span);
            for i in 1..n - 1 {
                let x = -span + i as f64 * h;
                acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        for (sigma, sigma_reg) in [(1.0, 2.0), (0.3, 0.9), (2.5, 0.4), (0.05, 0.06)] {
            let analytic =
                kl_rho_regularizer(&[softplus_inverse(sigma)], &[softplus_inverse(sigma_reg)])
                    .unwrap();
            let numeric = integrate(sigma, sigma_reg);
            assert!(
                (analytic - numeric).abs() < 1e-6,
                "sigma {sigma}, sigma_reg {sigma_reg}: {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        let rho = [softplus_inverse(0.8), -1.2, 0.4];
        let rho_reg = [softplus_inverse(1.3), 0.2, -0.5];
        let mut grad = vec![0.0; 3];
        kl_rho_gradient(&rho, &rho_reg, 1.0, &mut grad).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = rho;
            let mut minus = rho;
            plus[i] += h;
            minus[i] -= h;
            let fd = (kl_rho_regularizer(&plus, &rho_reg).unwrap()
                - kl_rho_regularizer(&minus, &rho_reg).unwrap())
                / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative_and_zero_only_at_equality(
            (rho, rho_reg) in (1usize..8).prop_flat_map(|n| (
                proptest::collection::vec(-4.0f64..4.0, n),
                proptest::collection::vec(-4.0f64..4.0, n),
            )),
        ) {
            let kl = kl_rho_regularizer(&rho, &rho_reg).unwrap();
            prop_assert!(kl >= 0.0);
            if rho == rho_reg {
                prop_assert_eq!(kl, 0.0);
            }
            // Elementwise: any coordinate with a genuinely different sigma
            // contributes strictly positive divergence.
            for i in 0..rho.len() {
                let single = kl_rho_regularizer(&rho[i..=i], &rho_reg[i..=i]).unwrap();
                if (softplus(rho[i]) - softplus(rho_reg[i])).abs() > 1e-9 {
                    prop_assert!(single > 0.0);
                } else {
                    prop_assert!(single >= 0.0);
                }
            }
        }
    }
}
