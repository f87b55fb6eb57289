//! Shared helpers for integration tests: an independent scale-mixture route
//! to the joint return density, used to validate the closed form.

use aftershock_core::model::{mixing_density, scale_coefficients, ModelParams};
use aftershock_core::numeric::quad;

/// Joint density of (r_0, ..., r_{k-1}) evaluated as the explicit mixture
/// integral over the latent scale,
///
///   int_0^inf rho(sigma) prod_i phi(r_i; sigma a_i) dsigma,
///
/// by adaptive quadrature. No shared code with the closed-form log-density
/// beyond the mixing density itself.
pub fn mixture_joint_pdf(returns: &[f64], params: &ModelParams) -> f64 {
    assert!(!returns.is_empty() && returns.len() <= params.n);
    let coefs = scale_coefficients(params);
    let k = returns.len();
    let quad_sum: f64 = returns
        .iter()
        .zip(&coefs.a)
        .map(|(r, a)| (r / a) * (r / a))
        .sum();
    let integrand = |sigma: f64| -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let rho = mixing_density(sigma, params).expect("positive sigma");
        let mut product = rho;
        for (r, a) in returns.iter().zip(&coefs.a) {
            let s = sigma * a;
            product *= (-r * r / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s);
        }
        product
    };
    // Tolerance anchored at the integrand peak: the posterior mode of sigma
    // given the returns, analytically sqrt((beta^2 + Q)/(alpha + k + 1)).
    let mode = ((params.beta * params.beta + quad_sum) / (params.alpha + k as f64 + 1.0)).sqrt();
    let abs_tol = (integrand(mode) * mode * 1e-9).max(1e-300);
    quad::integrate_to_inf(integrand, 0.0, abs_tol).expect("mixture integral converges")
}
