//! Functionals of the damped wave problem evaluated on radial fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::physics::{DensityProfile, Nonlinearity};
use crate::scalar::{lit, Scalar};

/// Grid, density, nonlinearity and mass of one problem instance, with the
/// nodal density cached.
#[derive(Debug, Clone)]
pub struct Model<T> {
    grid: RadialGrid<T>,
    density: DensityProfile<T>,
    nonlinearity: Nonlinearity<T>,
    mass: T,
    rho: Vec<T>,
    /// `w_i rho_i`: the discrete `L^2_rho` mass matrix.
    rho_weights: Vec<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(
        grid: RadialGrid<T>,
        density: DensityProfile<T>,
        nonlinearity: Nonlinearity<T>,
        mass: T,
    ) -> Result<Self> {
        density.validate()?;
        if !mass.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mass must be finite, got {mass}"
            )));
        }
        let rho = density.sample(&grid);
        let rho_weights = rho
            .iter()
            .zip(grid.weights())
            .map(|(&r, &w)| r * w)
            .collect();
        Ok(Self {
            grid,
            density,
            nonlinearity,
            mass,
            rho,
            rho_weights,
        })
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn density(&self) -> &DensityProfile<T> {
        &self.density
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.nonlinearity
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn mass_sq(&self) -> T {
        self.mass * self.mass
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    /// `||u||^2_{L^2_rho}`.
    pub fn weighted_l2_sq(&self, u: &[T]) -> Result<T> {
        self.grid.check(u)?;
        Ok(self.weighted_l2_sq_unchecked(u))
    }

    pub(crate) fn weighted_l2_sq_unchecked(&self, u: &[T]) -> T {
        self.rho_weights
            .iter()
            .zip(u)
            .map(|(&m, &x)| m * x * x)
            .sum()
    }

    /// `(u, v)_{L^2_rho}`.
    pub fn pairing(&self, u: &[T], v: &[T]) -> Result<T> {
        self.grid.check(u)?;
        self.grid.check(v)?;
        Ok(self.pairing_unchecked(u, v))
    }

    pub(crate) fn pairing_unchecked(&self, u: &[T], v: &[T]) -> T {
        self.rho_weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(&m, (&a, &b))| m * (a * b))
            .sum()
    }

    pub fn energy(&self, state: &StateSnapshot<T>) -> Result<EnergyBreakdown<T>> {
        self.energy_of(&state.u, &state.v)
    }

    pub fn energy_of(&self, u: &[T], v: &[T]) -> Result<EnergyBreakdown<T>> {
        self.grid.check(u)?;
        self.grid.check(v)?;
        Ok(self.energy_unchecked(u, v))
    }

    pub(crate) fn energy_unchecked(&self, u: &[T], v: &[T]) -> EnergyBreakdown<T> {
        let half: T = lit(0.5);
        let kinetic = half * self.weighted_l2_sq_unchecked(v);
        let gradient = half * self.grid.grad_sq_unchecked(u);
        let mass = half * self.mass_sq() * self.weighted_l2_sq_unchecked(u);
        let nl = &self.nonlinearity;
        let potential = -self
            .rho_weights
            .iter()
            .zip(u)
            .map(|(&m, &x)| m * nl.potential(x))
            .sum::<T>();
        EnergyBreakdown::new(kinetic, gradient, mass, potential)
    }

    /// `I(u) = ||grad u||^2 + m^2 ||u||^2_rho - int rho f(u) u`.
    pub fn nehari(&self, u: &[T]) -> Result<T> {
        self.grid.check(u)?;
        let (quadratic, nonlinear) = self.nehari_parts_unchecked(u);
        Ok(quadratic - nonlinear)
    }

    /// The two pieces of `I(u)`: `(||grad u||^2 + m^2 ||u||^2_rho, int rho f(u) u)`.
    pub fn nehari_parts(&self, u: &[T]) -> Result<(T, T)> {
        self.grid.check(u)?;
        Ok(self.nehari_parts_unchecked(u))
    }

    pub(crate) fn nehari_parts_unchecked(&self, u: &[T]) -> (T, T) {
        let quadratic =
            self.grid.grad_sq_unchecked(u) + self.mass_sq() * self.weighted_l2_sq_unchecked(u);
        let nl = &self.nonlinearity;
        let nonlinear = self
            .rho_weights
            .iter()
            .zip(u)
            .map(|(&m, &x)| m * nl.eval(x) * x)
            .sum();
        (quadratic, nonlinear)
    }

    /// `G`, `G'` and `G''` at a state, given the auxiliary constants.
    pub fn auxiliary(
        &self,
        state: &StateSnapshot<T>,
        gp: &GParams<T>,
        u0_norm_sq: T,
    ) -> Result<Auxiliary<T>> {
        self.grid.check(&state.u)?;
        self.grid.check(&state.v)?;
        let norm_sq = self.weighted_l2_sq_unchecked(&state.u);
        let pairing = self.pairing_unchecked(&state.u, &state.v);
        let vnorm_sq = self.weighted_l2_sq_unchecked(&state.v);
        let (q, nl) = self.nehari_parts_unchecked(&state.u);
        Ok(Auxiliary {
            g: gp.g(state.t, norm_sq, state.l2rho_accum, u0_norm_sq)?,
            g_prime: gp.g_prime(state.t, pairing, norm_sq, u0_norm_sq)?,
            g_second: gp.g_second(state.t, vnorm_sq, q - nl)?,
        })
    }
}

/// Time, displacement, velocity and the two running time integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot<T> {
    pub t: T,
    pub u: RadialField<T>,
    pub v: RadialField<T>,
    /// `int_0^t ||u_t||^2_rho`.
    pub diss_accum: T,
    /// `int_0^t ||u||^2_rho`.
    pub l2rho_accum: T,
}

impl<T: Scalar> StateSnapshot<T> {
    pub fn initial(u0: RadialField<T>, u1: RadialField<T>) -> Self {
        Self {
            t: T::zero(),
            u: u0,
            v: u1,
            diss_accum: T::zero(),
            l2rho_accum: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub gradient: T,
    pub mass: T,
    pub potential: T,
    pub total: T,
}

impl<T: Scalar> EnergyBreakdown<T> {
    pub fn new(kinetic: T, gradient: T, mass: T, potential: T) -> Self {
        Self {
            kinetic,
            gradient,
            mass,
            potential,
            total: kinetic + gradient + mass + potential,
        }
    }

    /// Sum of the magnitudes of the components; the natural size of `total`.
    pub fn scale(&self) -> T {
        self.kinetic.abs() + self.gradient.abs() + self.mass.abs() + self.potential.abs()
    }
}

/// Constants of the auxiliary function
/// `G(t) = ||u||^2_rho + int_0^t ||u||^2_rho + (T0 - t) ||u0||^2_rho + zeta (T1 + t)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParams<T> {
    pub zeta: T,
    #[serde(rename = "T0")]
    pub t0: T,
    #[serde(rename = "T1")]
    pub t1: T,
    pub eps: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auxiliary<T> {
    pub g: T,
    pub g_prime: T,
    pub g_second: T,
}

impl<T: Scalar> GParams<T> {
    pub fn new(zeta: T, t0: T, t1: T, eps: T) -> Result<Self> {
        for (name, x) in [("zeta", zeta), ("T0", t0), ("T1", t1), ("eps", eps)] {
            if !(x > T::zero() && x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        Ok(Self { zeta, t0, t1, eps })
    }

    fn window(&self, t: T) -> Result<()> {
        if t > self.t0 {
            return Err(Error::OutOfWindow {
                t: t.to_f64().unwrap_or(f64::NAN),
                t0: self.t0.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn g(&self, t: T, norm_sq: T, l2rho_accum: T, u0_norm_sq: T) -> Result<T> {
        self.window(t)?;
        let s = self.t1 + t;
        Ok(norm_sq + l2rho_accum + (self.t0 - t) * u0_norm_sq + self.zeta * s * s)
    }

    /// Uses `2 int_0^t (u, u_t)_rho = ||u(t)||^2_rho - ||u0||^2_rho`.
    pub fn g_prime(&self, t: T, pairing: T, norm_sq: T, u0_norm_sq: T) -> Result<T> {
        self.window(t)?;
        let two: T = lit(2.0);
        Ok(two * pairing + (norm_sq - u0_norm_sq) + two * self.zeta * (self.t1 + t))
    }

    /// `G'' = 2 ||u_t||^2_rho - 2 I(u) + 2 zeta`, using the equation of motion.
    pub fn g_second(&self, t: T, vnorm_sq: T, nehari: T) -> Result<T> {
        self.window(t)?;
        let two: T = lit(2.0);
        Ok(two * (vnorm_sq - nehari + self.zeta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions<T> {
    /// Stop when the Rayleigh quotient changes by less than this, relatively.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-10),
            max_iter: 10_000,
        }
    }
}

/// Smallest constant in `||grad u||^2 >= alpha ||u||^2_rho` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate<T> {
    pub alpha: T,
    pub iterations: usize,
    /// `||K x - alpha M x||_{M^-1} / (alpha ||x||_M)` at the returned vector.
    pub residual: T,
    #[serde(skip)]
    pub eigenvector: Vec<T>,
}

/// Lower bound `k^{-2} ||rho||_{n/2}^{-1}` implied by a Sobolev embedding constant `k`.
pub fn alpha_from_embedding_constant<T: Scalar>(k: T, rho_lnhalf_norm: T) -> T {
    T::one() / (k * k * rho_lnhalf_norm)
}

/// Ground generalized eigenvalue of the pair (stiffness, `diag(w rho)`) with a
/// Dirichlet condition at `r = R`, by inverse power iteration.
pub fn poincare_alpha<T: Scalar>(
    grid: &RadialGrid<T>,
    density: &DensityProfile<T>,
    opts: &EigenOptions<T>,
) -> Result<PoincareEstimate<T>> {
    let n = grid.cells();
    let inv_h = T::one() / grid.spacing();
    let faces = grid.face_areas();
    let mass: Vec<T> = density
        .sample(grid)
        .iter()
        .zip(grid.weights())
        .take(n)
        .map(|(&r, &w)| r * w)
        .collect();
    if mass.iter().any(|&m| !(m > T::zero())) {
        return Err(Error::InvalidArgument(
            "density must be positive on the grid".into(),
        ));
    }

    // Stiffness: K_ii = (a_{i-1/2} + a_{i+1/2}) / h, K_{i,i+1} = -a_{i+1/2} / h.
    let diag: Vec<T> = (0..n)
        .map(|i| (faces[i] + if i > 0 { faces[i - 1] } else { T::zero() }) * inv_h)
        .collect();
    let off: Vec<T> = (0..n - 1).map(|i| -faces[i] * inv_h).collect();
    let apply_k = |x: &[T], out: &mut [T]| {
        for i in 0..n {
            let mut acc = diag[i] * x[i];
            if i > 0 {
                acc = acc + off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc = acc + off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    };
    let solver = Tridiagonal::factor(&diag, &off)?;

    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let m_norm_sq = |x: &[T]| x.iter().zip(&mass).map(|(&v, &m)| m * v * v).sum::<T>();

    let mut x = vec![T::one(); n];
    let mut rhs = vec![T::zero(); n];
    let mut kx = vec![T::zero(); n];
    let mut previous = T::infinity();
    let mut alpha = T::infinity();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            rhs[i] = mass[i] * x[i];
        }
        solver.solve(&rhs, &mut x);
        let scale = T::one() / m_norm_sq(&x).sqrt();
        x.iter_mut().for_each(|v| *v = *v * scale);
        apply_k(&x, &mut kx);
        alpha = dot(&x, &kx);
        if ((alpha - previous) / alpha).abs() < opts.tol {
            converged = true;
            break;
        }
        previous = alpha;
    }

    // x is M-normalized, so the residual is relative to alpha.
    let residual = (0..n)
        .map(|i| {
            let r = kx[i] - alpha * mass[i] * x[i];
            r * r / mass[i]
        })
        .sum::<T>()
        .sqrt()
        / alpha;
    if !converged {
        return Err(Error::SolverFailure {
            iterations,
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut eigenvector = x;
    eigenvector.push(T::zero());
    Ok(PoincareEstimate {
        alpha,
        iterations,
        residual,
        eigenvector,
    })
}

/// LU factors of a symmetric tridiagonal matrix (Thomas algorithm).
struct Tridiagonal<T> {
    off: Vec<T>,
    pivots: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    fn factor(diag: &[T], off: &[T]) -> Result<Self> {
        let mut pivots = Vec::with_capacity(diag.len());
        for i in 0..diag.len() {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - off[i - 1] * off[i - 1] / pivots[i - 1]
            };
            if !(p > T::zero()) {
                return Err(Error::InvalidArgument(
                    "stiffness matrix is not positive definite".into(),
                ));
            }
            pivots.push(p);
        }
        Ok(Self {
            off: off.to_vec(),
            pivots,
        })
    }

    fn solve(&self, rhs: &[T], out: &mut [T]) {
        let n = self.pivots.len();
        out[0] = rhs[0];
        for i in 1..n {
            out[i] = rhs[i] - self.off[i - 1] / self.pivots[i - 1] * out[i - 1];
        }
        out[n - 1] = out[n - 1] / self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = (out[i] - self.off[i] * out[i + 1]) / self.pivots[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn canonical(mass: f64) -> Model<f64> {
        Model::new(
            RadialGrid::new(3, 40.0, 1024).unwrap(),
            DensityProfile::inverse_power(1.0, 2.0).unwrap(),
            Nonlinearity::new(2.0, 1.0).unwrap(),
            mass,
        )
        .unwrap()
    }

    fn unit_ball(cells: usize) -> Model<f64> {
        Model::new(
            RadialGrid::new(3, 1.0, cells).unwrap(),
            DensityProfile::constant(1.0).unwrap(),
            Nonlinearity::new(2.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn weighted_norm_examples() {
        let m = canonical(0.0);
        let zero = RadialField::zeros(m.grid());
        assert_eq!(m.weighted_l2_sq(&zero).unwrap(), 0.0);

        let fine = Model::new(
            RadialGrid::new(3, 40.0, 4096).unwrap(),
            DensityProfile::inverse_power(1.0, 2.0).unwrap(),
            Nonlinearity::new(2.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        let one = RadialField::from_fn(fine.grid(), |_| 1.0);
        let v = fine.weighted_l2_sq(&one).unwrap();
        // Ball of radius 40: 2 pi (atan R - R / (1 + R^2)), 3% short of pi^2.
        let truncated = 2.0 * PI * (40f64.atan() - 40.0 / 1601.0);
        assert!((v - truncated).abs() / truncated < 1e-3);
        assert!((v - PI * PI).abs() / (PI * PI) < 0.04);

        let u = RadialField::from_fn(m.grid(), |r| (-r).exp());
        let base = m.weighted_l2_sq(&u).unwrap();
        assert!((m.weighted_l2_sq(&u.scaled(-3.0)).unwrap() - 9.0 * base).abs() < 1e-14 * base);
    }

    #[test]
    fn pairing_examples() {
        let m = canonical(0.0);
        let u = RadialField::from_fn(m.grid(), |r| (0.3 * r).sin());
        let n = m.weighted_l2_sq(&u).unwrap();
        assert_eq!(m.pairing(&u, &u).unwrap(), n);
        assert_eq!(m.pairing(&u, &u.scaled(-1.0)).unwrap(), -n);
        assert!(m.pairing(&u, &[0.0; 4]).is_err());
    }

    #[test]
    fn energy_examples() {
        let m = canonical(0.0);
        let zero =
            StateSnapshot::initial(RadialField::zeros(m.grid()), RadialField::zeros(m.grid()));
        assert_eq!(m.energy(&zero).unwrap(), EnergyBreakdown::default());

        let phi = RadialField::dirichlet_from_fn(m.grid(), |r| (-r * r).exp());
        let kin = StateSnapshot::initial(RadialField::zeros(m.grid()), phi.clone());
        let e = m.energy(&kin).unwrap();
        assert_eq!(e.total, 0.5 * m.weighted_l2_sq(&phi).unwrap());
        assert_eq!(e.total, e.kinetic);
    }

    #[test]
    fn energy_against_closed_form_quadrature() {
        // u = (1 - r^2)_+, v = 0, p = 2, m = 0:
        // E = 8 pi / 5 - (1/3) int rho (1 - r^2)^3 dx.
        let m = Model::new(
            RadialGrid::new(3, 2.0, 4096).unwrap(),
            DensityProfile::inverse_power(1.0, 2.0).unwrap(),
            Nonlinearity::new(2.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        let u = RadialField::from_fn(m.grid(), |r: f64| (1.0 - r * r).max(0.0));
        let e = m.energy_of(&u, &RadialField::zeros(m.grid())).unwrap();
        // Simpson's rule on [0, 1] for int 4 pi r^2 (1+r^2)^-2 (1-r^2)^3 dr.
        let simpson = {
            let k = 20_000;
            let h = 1.0 / k as f64;
            let g = |r: f64| 4.0 * PI * r * r * (1.0 + r * r).powi(-2) * (1.0 - r * r).powi(3);
            (0..=k)
                .map(|i| {
                    let w = if i == 0 || i == k {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * g(i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let expected = 8.0 * PI / 5.0 - simpson / 3.0;
        assert!(
            (e.total - expected).abs() / expected < 1e-4,
            "{} vs {expected}",
            e.total
        );
        assert_eq!(e.total, e.kinetic + e.gradient + e.mass + e.potential);
    }

    #[test]
    fn nehari_sign_change_matches_bisection() {
        let m = canonical(0.0);
        let phi = RadialField::from_fn(m.grid(), |r| (1.0 - (r / 4.0).powi(2)).max(0.0).powi(2));
        assert_eq!(m.nehari(&RadialField::zeros(m.grid())).unwrap(), 0.0);
        let (a, b) = m.nehari_parts(&phi).unwrap();
        let lambda_star = a / b;
        let i_of = |l: f64| m.nehari(&phi.scaled(l)).unwrap();
        let (mut lo, mut hi) = (1e-3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if i_of(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - lambda_star).abs() / lambda_star < 1e-12);
        assert!(i_of(0.9 * lambda_star) > 0.0);
        assert!(i_of(1.1 * lambda_star) < 0.0);
    }

    #[test]
    fn auxiliary_on_zero_data() {
        let m = canonical(0.0);
        let zero =
            StateSnapshot::initial(RadialField::zeros(m.grid()), RadialField::zeros(m.grid()));
        let gp = GParams::new(1.0, 5.0, 2.0, 1.0).unwrap();
        let aux = m.auxiliary(&zero, &gp, 0.0).unwrap();
        assert_eq!(
            aux,
            Auxiliary {
                g: 4.0,
                g_prime: 4.0,
                g_second: 2.0
            }
        );
    }

    #[test]
    fn auxiliary_at_time_zero() {
        let m = canonical(1.0);
        let u0 = RadialField::dirichlet_from_fn(m.grid(), |r| (-r).exp());
        let a = m.weighted_l2_sq(&u0).unwrap();
        let gp = GParams::new(0.7, 3.0, 1.5, 1.0).unwrap();
        let state = StateSnapshot::initial(u0, RadialField::zeros(m.grid()));
        let aux = m.auxiliary(&state, &gp, a).unwrap();
        let expected = 4.0 * a + 0.7 * 1.5 * 1.5;
        assert!((aux.g - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn auxiliary_window() {
        let gp = GParams::new(1.0, 5.0, 2.0, 1.0).unwrap();
        assert!(matches!(
            gp.g(5.5, 0.0, 0.0, 0.0),
            Err(Error::OutOfWindow { .. })
        ));
        assert!(gp.g(5.0, 0.0, 0.0, 0.0).is_ok());
        assert!(GParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_unit_ball() {
        let m = unit_ball(2048);
        let est = poincare_alpha(m.grid(), m.density(), &EigenOptions::default()).unwrap();
        assert!(
            (est.alpha - PI * PI).abs() / (PI * PI) < 1e-2,
            "{}",
            est.alpha
        );
        assert!(est.residual < 1e-4);
        // Trial function 1 - r^2 gives (16 pi / 5) / (32 pi / 105) = 10.5.
        assert!(est.alpha <= 10.5);
        let trial = RadialField::from_fn(m.grid(), |r| 1.0 - r * r);
        let q = m.grid().grad_sq_integral(&trial).unwrap() / m.weighted_l2_sq(&trial).unwrap();
        assert!((q - 10.5).abs() < 1e-3);
        assert!(est.alpha <= q);
    }

    #[test]
    fn alpha_scales_inversely_with_density() {
        let g = RadialGrid::new(3, 10.0, 256).unwrap();
        let d = DensityProfile::inverse_power(1.0, 2.0).unwrap();
        let opts = EigenOptions::default();
        let a1 = poincare_alpha(&g, &d, &opts).unwrap().alpha;
        let a2 = poincare_alpha(&g, &d.scaled(2.0), &opts).unwrap().alpha;
        assert!((a2 - a1 / 2.0f64).abs() < 1e-13 * a1);
    }

    #[test]
    fn alpha_reports_non_convergence() {
        let g = RadialGrid::new(3, 1.0, 64).unwrap();
        let d = DensityProfile::constant(1.0).unwrap();
        let opts = EigenOptions {
            tol: 0.0,
            max_iter: 3,
        };
        assert!(matches!(
            poincare_alpha(&g, &d, &opts),
            Err(Error::SolverFailure { iterations: 3, .. })
        ));
    }

    #[test]
    fn embedding_bound_formula() {
        assert_eq!(alpha_from_embedding_constant(2.0, 0.5), 0.5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-5.0f64..5.0, len).prop_map(|mut v| {
                *v.last_mut().unwrap() = 0.0;
                v
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn cauchy_schwarz(u in field(65), v in field(65)) {
                let m = Model::new(
                    RadialGrid::new(3, 4.0, 64).unwrap(),
                    DensityProfile::inverse_power(1.0, 2.0).unwrap(),
                    Nonlinearity::new(2.0, 1.0).unwrap(),
                    0.0,
                ).unwrap();
                let p = m.pairing(&u, &v).unwrap();
                let nu = m.weighted_l2_sq(&u).unwrap();
                let nv = m.weighted_l2_sq(&v).unwrap();
                prop_assert!(p * p <= nu * nv * (1.0 + 1e-12));
                prop_assert_eq!(p, m.pairing(&v, &u).unwrap());
            }

            #[test]
            fn poincare_certificate(u in field(65)) {
                let g = RadialGrid::new(3, 4.0, 64).unwrap();
                let d = DensityProfile::inverse_power(1.0, 2.0).unwrap();
                let m = Model::new(g.clone(), d, Nonlinearity::new(2.0, 1.0).unwrap(), 0.0).unwrap();
                let alpha = poincare_alpha(&g, &d, &EigenOptions::default()).unwrap().alpha;
                let lhs = g.grad_sq_integral(&u).unwrap();
                let rhs = alpha * m.weighted_l2_sq(&u).unwrap();
                prop_assert!(lhs >= rhs * (1.0 - 1e-8));
            }
        }
    }
}
