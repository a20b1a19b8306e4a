//! Continuous one-dimensional distributions given by a density on a
//! bounded interval. Probabilities and expectations come out of
//! quadrature; the density itself is never materialized pointwise.

use crate::error::{Error, Result};

/// Composite Simpson settings: absolute tolerance plus the panel count
/// the refinement starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub initial_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            initial_panels: 64,
        }
    }
}

const MAX_PANELS: usize = 1 << 21;

/// Composite Simpson with panel doubling until two refinements agree
/// within the tolerance. Exact on cubics, and the returned estimate is
/// the finer of the last two.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, quad: &QuadratureConfig) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut panels = quad.initial_panels.max(2);
    if panels % 2 == 1 {
        panels += 1;
    }
    let mut prev = simpson(f, a, b, panels);
    loop {
        panels *= 2;
        let next = simpson(f, a, b, panels);
        if (next - prev).abs() <= quad.abs_tol || panels >= MAX_PANELS {
            return next;
        }
        prev = next;
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let x = a + h * i as f64;
        acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// A density f on a support interval, normalized to unit mass.
pub struct DensityModel {
    support: (f64, f64),
    density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    quad: QuadratureConfig,
    norm: f64,
}

impl DensityModel {
    pub fn new(
        a: f64,
        b: f64,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::with_quadrature(a, b, density, QuadratureConfig::default())
    }

    pub fn with_quadrature(
        a: f64,
        b: f64,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quad: QuadratureConfig,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidDistribution(format!(
                "support [{a}, {b}] is not a proper interval"
            )));
        }
        let density = Box::new(density);
        let norm = integrate(&*density, a, b, &quad);
        Ok(DensityModel {
            support: (a, b),
            density,
            quad,
            norm,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// The computed total mass. Held for diagnostics; operations check
    /// it before trusting the density.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    fn check_normalized(&self) -> Result<()> {
        if (self.norm - 1.0).abs() > 100.0 * self.quad.abs_tol {
            return Err(Error::NormalizationViolation {
                integral: self.norm,
            });
        }
        Ok(())
    }

    fn clip(&self, lo: f64, hi: f64) -> (f64, f64) {
        (lo.max(self.support.0), hi.min(self.support.1))
    }

    /// E[F(X)] = integral of F(x) f(x) over the support.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.check_normalized()?;
        let (a, b) = self.support;
        Ok(integrate(
            &|x| f(x) * (self.density)(x),
            a,
            b,
            &self.quad,
        ))
    }

    /// Mass of the interval [lo, hi] clipped to the support.
    pub fn interval_prob(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_normalized()?;
        let (a, b) = self.clip(lo, hi);
        Ok(integrate(&|x| (self.density)(x), a, b, &self.quad))
    }

    /// Integral of x f(x) over the interval: the restricted mean.
    pub fn indicator_expectation(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_normalized()?;
        let (a, b) = self.clip(lo, hi);
        Ok(integrate(&|x| x * (self.density)(x), a, b, &self.quad))
    }

    /// E[X | X in [lo, hi]]. The conditioning interval must carry more
    /// mass than the quadrature can mistake for zero.
    pub fn conditional_expectation(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_normalized()?;
        let ph = self.interval_prob(lo, hi)?;
        if ph <= self.quad.abs_tol {
            return Err(Error::ZeroConditioningEvent);
        }
        Ok(self.indicator_expectation(lo, hi)? / ph)
    }
}

impl std::fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityModel")
            .field("support", &self.support)
            .field("norm", &self.norm)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform01() -> DensityModel {
        DensityModel::new(0.0, 1.0, |_| 1.0).unwrap()
    }

    #[test]
    fn uniform_mass_is_one() {
        assert_abs_diff_eq!(uniform01().normalization(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn uniform_mean() {
        assert_abs_diff_eq!(uniform01().expectation(|x| x).unwrap(), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn uniform_constant_expectation() {
        assert_abs_diff_eq!(
            uniform01().expectation(|_| 1.0).unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn uniform_second_moment() {
        assert_abs_diff_eq!(
            uniform01().expectation(|x| x * x).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn conditional_means_on_half_intervals() {
        let d = uniform01();
        assert_abs_diff_eq!(
            d.conditional_expectation(0.5, 1.0).unwrap(),
            0.75,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            d.conditional_expectation(0.0, 0.5).unwrap(),
            0.25,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            d.conditional_expectation(0.0, 1.0).unwrap(),
            0.5,
            epsilon = 1e-8
        );
    }

    #[test]
    fn restricted_mean_factors_through_the_conditional() {
        let d = uniform01();
        let (lo, hi) = (0.2, 0.7);
        let lhs = d.indicator_expectation(lo, hi).unwrap();
        let rhs = d.interval_prob(lo, hi).unwrap() * d.conditional_expectation(lo, hi).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn denormalized_density_is_refused() {
        let d = DensityModel::new(0.0, 1.0, |_| 2.0).unwrap();
        assert!(matches!(
            d.expectation(|x| x).unwrap_err(),
            Error::NormalizationViolation { .. }
        ));
    }

    #[test]
    fn conditioning_outside_the_support_fails() {
        let d = uniform01();
        assert_eq!(
            d.conditional_expectation(2.0, 3.0).unwrap_err(),
            Error::ZeroConditioningEvent
        );
    }

    #[test]
    fn empty_interval_has_zero_restricted_mean() {
        assert_eq!(uniform01().indicator_expectation(0.9, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_handles_a_smooth_nonpolynomial() {
        // Triangular density 2x on [0,1]; E[exp(X)] = 2 (e - 2) + ...
        // simpler: check the mass and mean of the triangle instead.
        let tri = DensityModel::new(0.0, 1.0, |x| 2.0 * x).unwrap();
        assert_abs_diff_eq!(tri.normalization(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(tri.expectation(|x| x).unwrap(), 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            tri.expectation(f64::exp).unwrap(),
            2.0, // integral of 2x e^x over [0,1] is exactly 2
            epsilon = 1e-9
        );
    }

    #[test]
    fn degenerate_support_is_rejected() {
        assert!(DensityModel::new(1.0, 1.0, |_| 1.0).is_err());
        assert!(DensityModel::new(2.0, 1.0, |_| 1.0).is_err());
        assert!(DensityModel::new(0.0, f64::INFINITY, |_| 1.0).is_err());
    }
}
