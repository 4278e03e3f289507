//! Density `rho(x)` and nonlinearity `f(u)` models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::scalar::{from_usize, lit, Scalar};

/// Radial density profile.
///
/// `InversePower` is `rho0 (1 + r^2)^{-s}`; for `s > 1` it lies in
/// `L^{n/2} ∩ L^∞` in every dimension `n >= 3` and is smooth, so it satisfies the
/// density hypothesis. `Constant` does not and is only meant for comparison runs
/// with a mass term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityProfile<T> {
    InversePower { rho0: T, s: T },
    Constant { rho0: T },
}

impl<T: Scalar> DensityProfile<T> {
    pub fn inverse_power(rho0: T, s: T) -> Result<Self> {
        let d = Self::InversePower { rho0, s };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(rho0: T) -> Result<Self> {
        let d = Self::Constant { rho0 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::InversePower { rho0, s } => {
                if !(rho0 > T::zero() && rho0.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "rho0 must be positive, got {rho0}"
                    )));
                }
                if !(s > T::one() && s.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "inverse-power exponent must exceed 1, got {s}"
                    )));
                }
            }
            Self::Constant { rho0 } => {
                if !(rho0 > T::zero() && rho0.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "rho0 must be positive, got {rho0}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the profile belongs to `L^{n/2} ∩ L^∞` on the whole space.
    pub fn satisfies_hypothesis(&self) -> bool {
        matches!(self, Self::InversePower { .. })
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            Self::InversePower { rho0, s } => rho0 * (T::one() + r * r).powf(-s),
            Self::Constant { rho0 } => rho0,
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        match *self {
            Self::InversePower { rho0, s } => Self::InversePower {
                rho0: rho0 * factor,
                s,
            },
            Self::Constant { rho0 } => Self::Constant {
                rho0: rho0 * factor,
            },
        }
    }

    /// Nodal values on a grid.
    pub fn sample(&self, grid: &RadialGrid<T>) -> Vec<T> {
        grid.nodes().iter().map(|&r| self.eval(r)).collect()
    }

    /// `||rho||_{n/2}` over the truncated ball.
    pub fn lnhalf_norm(&self, grid: &RadialGrid<T>) -> Result<T> {
        if !self.satisfies_hypothesis() {
            return Err(Error::HypothesisViolated(
                "a constant density is not in L^{n/2} of the whole space".into(),
            ));
        }
        let q: T = from_usize::<T>(grid.dim()) * lit(0.5);
        let integrand: Vec<T> = self.sample(grid).into_iter().map(|x| x.powf(q)).collect();
        Ok(grid.integrate(&integrand)?.powf(T::one() / q))
    }
}

/// Pointwise nonlinearity with its antiderivative `F(u) = int_0^u f`.
pub trait Source<T> {
    fn f(&self, u: T) -> T;
    fn antiderivative(&self, u: T) -> T;
}

/// Power nonlinearity `f(u) = c |u|^{p-1} u`, `F(u) = c |u|^{p+1} / (p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "PowerSpec<T>",
    into = "PowerSpec<T>",
    bound(
        serialize = "T: Scalar + Serialize",
        deserialize = "T: Scalar + Deserialize<'de>"
    )
)]
pub struct Nonlinearity<T> {
    p: T,
    c: T,
    /// `p - 1` when it is a small integer, so `|u|^{p-1}` can use `powi`.
    int_exp: Option<i32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerSpec<T> {
    p: T,
    c: T,
}

impl<T: Scalar> TryFrom<PowerSpec<T>> for Nonlinearity<T> {
    type Error = Error;

    fn try_from(spec: PowerSpec<T>) -> Result<Self> {
        Self::new(spec.p, spec.c)
    }
}

impl<T: Scalar> From<Nonlinearity<T>> for PowerSpec<T> {
    fn from(nl: Nonlinearity<T>) -> Self {
        PowerSpec { p: nl.p, c: nl.c }
    }
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn new(p: T, c: T) -> Result<Self> {
        if !(p > T::one() && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exponent p must exceed 1, got {p}"
            )));
        }
        if !(c >= T::zero() && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient c must be nonnegative, got {c}"
            )));
        }
        let k = p - T::one();
        let int_exp = (k == k.round() && k <= lit(16.0)).then(|| k.to_i32().unwrap_or(1));
        Ok(Self { p, c, int_exp })
    }

    /// Linear model (`f = 0`), useful as a control run.
    pub fn linear(p: T) -> Result<Self> {
        Self::new(p, T::zero())
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// Largest admissible epsilon in `f(s)s >= (2 + eps) F(s)`: `p - 1`.
    pub fn eps(&self) -> T {
        self.p - T::one()
    }

    /// Checks the local existence range `1 < p < n/(n-2)`.
    pub fn check_exponent(&self, n_dim: usize) -> Result<()> {
        let upper: T = from_usize::<T>(n_dim) / from_usize::<T>(n_dim - 2);
        if self.p < upper {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "exponent p = {} must lie strictly below n/(n-2) = {upper} for n = {n_dim}",
                self.p
            )))
        }
    }

    #[inline]
    fn abs_pow(&self, a: T) -> T {
        match self.int_exp {
            Some(1) => a,
            Some(k) => a.powi(k),
            None => a.powf(self.p - T::one()),
        }
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        self.c * self.abs_pow(u.abs()) * u
    }

    /// `out[i] += f(u[i])`, dispatching on the exponent once.
    pub(crate) fn add_eval(&self, u: &[T], out: &mut [T]) {
        let c = self.c;
        match self.int_exp {
            Some(1) => out
                .iter_mut()
                .zip(u)
                .for_each(|(o, &x)| *o = *o + c * x.abs() * x),
            _ => out
                .iter_mut()
                .zip(u)
                .for_each(|(o, &x)| *o = *o + self.eval(x)),
        }
    }

    #[inline]
    pub fn potential(&self, u: T) -> T {
        let a = u.abs();
        self.c * self.abs_pow(a) * a * a / (self.p + T::one())
    }
}

impl<T: Scalar> Source<T> for Nonlinearity<T> {
    fn f(&self, u: T) -> T {
        self.eval(u)
    }

    fn antiderivative(&self, u: T) -> T {
        self.potential(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperlinearityReport<T> {
    pub passed: bool,
    /// Smallest `f(s)s - (2+eps)F(s)` over the samples.
    pub worst_margin: T,
    pub worst_sample: Option<T>,
    pub failures: Vec<T>,
}

/// Checks `f(s)s >= (2 + eps) F(s)` at every sample, up to `tol |f(s)s|`.
pub fn check_superlinearity<T: Scalar, S: Source<T>>(
    source: &S,
    eps: T,
    samples: &[T],
    tol: T,
) -> Result<SuperlinearityReport<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let two_eps = lit::<T>(2.0) + eps;
    let mut report = SuperlinearityReport {
        passed: true,
        worst_margin: T::infinity(),
        worst_sample: None,
        failures: Vec::new(),
    };
    for &s in samples {
        let fs = source.f(s) * s;
        let margin = fs - two_eps * source.antiderivative(s);
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_sample = Some(s);
        }
        if margin < -tol * fs.abs() {
            report.passed = false;
            report.failures.push(s);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn samples() -> Vec<f64> {
        (-40..=40).map(|i| i as f64 * 0.25).collect()
    }

    #[test]
    fn rho_examples() {
        let d = DensityProfile::inverse_power(1.0, 2.0).unwrap();
        assert_eq!(d.eval(1.0), 0.25);
        assert_eq!(d.eval(0.0), 1.0);
        assert_eq!(DensityProfile::constant(0.5).unwrap().eval(7.0), 0.5);
        assert!(DensityProfile::inverse_power(1.0, 1.0).is_err());
        assert!(DensityProfile::<f64>::constant(0.0).is_err());
    }

    #[test]
    fn rho_is_monotone() {
        let d = DensityProfile::inverse_power(2.0, 1.5).unwrap();
        let vals: Vec<f64> = (0..200).map(|i| d.eval(i as f64 * 0.1)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] && w[1] > 0.0));
    }

    #[test]
    fn lnhalf_norm_matches_beta_integral() {
        let g = RadialGrid::new(3, 40.0, 4096).unwrap();
        let d = DensityProfile::inverse_power(1.0, 2.0).unwrap();
        let norm = d.lnhalf_norm(&g).unwrap();
        let expected = (PI * PI / 4.0f64).powf(2.0 / 3.0);
        assert!(
            (norm - expected).abs() / expected < 1e-2,
            "{norm} vs {expected}"
        );

        let doubled = d.scaled(2.0).lnhalf_norm(&g).unwrap();
        assert!((doubled - 2.0 * norm).abs() < 1e-12 * norm);

        let g20 = RadialGrid::new(3, 20.0, 2048).unwrap();
        assert!(d.lnhalf_norm(&g20).unwrap() <= norm);
    }

    #[test]
    fn lnhalf_norm_converges_in_radius() {
        let d = DensityProfile::inverse_power(1.0, 2.0).unwrap();
        let norm = |r: f64| {
            let cells = (r * 64.0) as usize;
            d.lnhalf_norm(&RadialGrid::new(3, r, cells).unwrap())
                .unwrap()
        };
        let (a, b, c) = (norm(10.0), norm(20.0), norm(40.0));
        assert!(b >= a && c >= b);
        assert!((c - b) / (b - a) < 1.0);
    }

    #[test]
    fn constant_density_violates_hypothesis() {
        let g = RadialGrid::new(3, 1.0, 16).unwrap();
        let d = DensityProfile::constant(1.0).unwrap();
        assert!(!d.satisfies_hypothesis());
        assert!(matches!(
            d.lnhalf_norm(&g),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn power_examples() {
        let nl = Nonlinearity::new(2.0f64, 1.0).unwrap();
        assert_eq!(nl.eval(-3.0), -9.0);
        assert!((nl.potential(2.0) - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(nl.eval(0.0), 0.0);
        assert_eq!(nl.potential(0.0), 0.0);

        let cubic = Nonlinearity::new(3.0, 1.0).unwrap();
        assert_eq!(cubic.eval(2.0) * 2.0, 16.0);
        assert_eq!((2.0 + cubic.eps()) * cubic.potential(2.0), 16.0);
    }

    #[test]
    fn non_integer_exponent() {
        let nl = Nonlinearity::new(1.5f64, 2.0).unwrap();
        assert!((nl.eval(4.0) - 16.0).abs() < 1e-12);
        assert!((nl.eval(-4.0) + 16.0).abs() < 1e-12);
        assert!((nl.potential(4.0) - 2.0 * 32.0 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn exponent_range() {
        let nl = Nonlinearity::new(2.0f64, 1.0).unwrap();
        assert!(nl.check_exponent(3).is_ok());
        assert!(Nonlinearity::new(3.0, 1.0)
            .unwrap()
            .check_exponent(3)
            .is_err());
        assert!(nl.check_exponent(4).is_err());
        assert!(Nonlinearity::new(1.0, 1.0).is_err());
    }

    #[test]
    fn superlinearity_checker() {
        let nl = Nonlinearity::new(2.0f64, 1.0).unwrap();
        let exact = check_superlinearity(&nl, 1.0, &samples(), 1e-12).unwrap();
        assert!(exact.passed);
        assert!(exact.worst_margin.abs() < 1e-12);

        let too_big = check_superlinearity(&nl, 1.5, &samples(), 1e-12).unwrap();
        assert!(!too_big.passed);
        assert_eq!(too_big.failures.len(), samples().len() - 1);
        assert!(!too_big.failures.contains(&0.0));

        let slack = check_superlinearity(&nl, 0.5, &samples(), 1e-12).unwrap();
        assert!(slack.passed);
        for s in samples() {
            let m = nl.eval(s) * s - 2.5 * nl.potential(s);
            assert!((m - nl.potential(s) / 2.0).abs() < 1e-12 * (1.0 + s.abs().powi(3)));
        }
        assert!(check_superlinearity(&nl, 0.0, &samples(), 1e-12).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_identity(p in 1.05f64..4.0, c in 0.1f64..5.0, s in -50.0f64..50.0) {
                let nl = Nonlinearity::new(p, c).unwrap();
                let lhs = nl.eval(s) * s;
                let rhs = (p + 1.0) * nl.potential(s);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
                prop_assert_eq!(nl.eval(-s), -nl.eval(s));
                prop_assert_eq!(nl.potential(-s), nl.potential(s));
                prop_assert!(nl.potential(s) >= 0.0);
            }
        }
    }
}
