//! Uniform radial mesh on the truncated ball `{|x| <= R}` in `n` dimensions.
//!
//! Nodes sit at `r_i = i h`, `h = R / N`. Node `i` owns the dual cell
//! `[r_i - h/2, r_i + h/2]` clipped to `[0, R]`, and its quadrature weight is the
//! exact `n`-dimensional volume of that spherical shell. The Laplacian is the
//! matching finite-volume operator: fluxes through the shell faces at
//! `r_{i +- 1/2}` divided by the shell volume. With these two choices the
//! discrete Green identity
//!
//! ```text
//! sum_i w_i u_i (Lap u)_i = -sum_i a_{i+1/2} (u_{i+1} - u_i)^2 / h
//! ```
//!
//! holds exactly for fields with `u_N = 0`, which is what makes the discrete
//! energy and concavity identities hold to round-off.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Minimum number of cells accepted by [`RadialGrid::new`].
pub const MIN_CELLS: usize = 8;

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area<T: Scalar>(n_dim: usize) -> T {
    assert!(n_dim >= 1);
    let two_pi = T::PI() + T::PI();
    let mut area: T = if n_dim % 2 == 1 { lit(2.0) } else { two_pi };
    let mut k = if n_dim % 2 == 1 { 1 } else { 2 };
    while k < n_dim {
        // |S^{k+1}| = 2 pi / k * |S^{k-1}|
        area = area * two_pi / from_usize(k);
        k += 2;
    }
    area
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    dim: usize,
    radius: T,
    cells: usize,
    spacing: T,
    nodes: Vec<T>,
    weights: Vec<T>,
    /// `omega * r_{i+1/2}^{n-1}`, one entry per cell.
    face_areas: Vec<T>,
    /// Laplacian coefficient on `u_{i-1} - u_i`.
    lap_lower: Vec<T>,
    /// Laplacian coefficient on `u_{i+1} - u_i`.
    lap_upper: Vec<T>,
}

impl<T: Scalar> RadialGrid<T> {
    pub fn new(n_dim: usize, radius: T, cells: usize) -> Result<Self> {
        if n_dim < 3 {
            return Err(Error::InvalidArgument(format!(
                "spatial dimension must be at least 3, got {n_dim}"
            )));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "truncation radius must be positive and finite, got {radius}"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_CELLS} cells, got {cells}"
            )));
        }

        let omega: T = unit_sphere_area(n_dim);
        let n_t: T = from_usize(n_dim);
        let h = radius / from_usize(cells);
        let ball = |r: T| omega * r.powi(n_dim as i32) / n_t;

        let nodes: Vec<T> = (0..=cells)
            .map(|i| {
                if i == cells {
                    radius
                } else {
                    from_usize::<T>(i) * h
                }
            })
            .collect();
        let face_radii: Vec<T> = (0..cells)
            .map(|i| (from_usize::<T>(i) + lit(0.5)) * h)
            .collect();
        let face_areas: Vec<T> = face_radii
            .iter()
            .map(|&r| omega * r.powi(n_dim as i32 - 1))
            .collect();

        // Dual cells share their endpoints so the volumes telescope exactly.
        let weights: Vec<T> = (0..=cells)
            .map(|i| {
                let lo = if i == 0 { T::zero() } else { face_radii[i - 1] };
                let hi = if i == cells { radius } else { face_radii[i] };
                ball(hi) - ball(lo)
            })
            .collect();

        let mut lap_lower = vec![T::zero(); cells + 1];
        let mut lap_upper = vec![T::zero(); cells + 1];
        for i in 0..cells {
            let scale = T::one() / (h * weights[i]);
            lap_upper[i] = face_areas[i] * scale;
            if i > 0 {
                lap_lower[i] = face_areas[i - 1] * scale;
            }
        }

        Ok(Self {
            dim: n_dim,
            radius,
            cells,
            spacing: h,
            nodes,
            weights,
            face_areas,
            lap_lower,
            lap_upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn face_areas(&self) -> &[T] {
        &self.face_areas
    }

    /// Volume of the truncated ball, `omega R^n / n`.
    pub fn ball_volume(&self) -> T {
        unit_sphere_area::<T>(self.dim) * self.radius.powi(self.dim as i32) / from_usize(self.dim)
    }

    pub fn check(&self, field: &[T]) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                found: field.len(),
            });
        }
        Ok(())
    }

    /// `sum_i w_i g_i`, approximating the integral of a radial function over the ball.
    pub fn integrate(&self, g: &[T]) -> Result<T> {
        self.check(g)?;
        Ok(self.integrate_unchecked(g))
    }

    pub(crate) fn integrate_unchecked(&self, g: &[T]) -> T {
        self.weights.iter().zip(g).map(|(&w, &x)| w * x).sum()
    }

    /// Discrete `u'' + (n-1)/r u'`. The value at the origin is the symmetric
    /// limit `n u''(0)`. The boundary row is zero: `u_N` is a Dirichlet value.
    pub fn laplacian(&self, u: &[T]) -> Result<RadialField<T>> {
        self.check(u)?;
        let mut out = vec![T::zero(); self.len()];
        self.laplacian_into(u, &mut out);
        Ok(RadialField(out))
    }

    pub(crate) fn laplacian_into(&self, u: &[T], out: &mut [T]) {
        let n = self.cells;
        out[0] = self.lap_upper[0] * (u[1] - u[0]);
        for i in 1..n {
            out[i] = self.lap_lower[i] * (u[i - 1] - u[i]) + self.lap_upper[i] * (u[i + 1] - u[i]);
        }
        out[n] = T::zero();
    }

    pub(crate) fn lap_coefficients(&self) -> (&[T], &[T]) {
        (&self.lap_lower, &self.lap_upper)
    }

    /// `int |grad u|^2 dx` by the midpoint rule on each cell.
    pub fn grad_sq_integral(&self, u: &[T]) -> Result<T> {
        self.check(u)?;
        Ok(self.grad_sq_unchecked(u))
    }

    pub(crate) fn grad_sq_unchecked(&self, u: &[T]) -> T {
        let inv_h = T::one() / self.spacing;
        self.face_areas
            .iter()
            .zip(u.windows(2))
            .map(|(&a, pair)| {
                let d = pair[1] - pair[0];
                a * d * d * inv_h
            })
            .sum()
    }

    /// Midpoint between nodes `i` and `i + 1`.
    pub fn face(&self, i: usize) -> T {
        (from_usize::<T>(i) + lit(0.5)) * self.spacing
    }
}

/// Values of a radial function at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RadialField<T>(pub Vec<T>);

impl<T: Scalar> RadialField<T> {
    pub fn zeros(grid: &RadialGrid<T>) -> Self {
        Self(vec![T::zero(); grid.len()])
    }

    pub fn from_fn(grid: &RadialGrid<T>, f: impl Fn(T) -> T) -> Self {
        Self(grid.nodes().iter().map(|&r| f(r)).collect())
    }

    /// Same as [`from_fn`](Self::from_fn) with the boundary node pinned to zero.
    pub fn dirichlet_from_fn(grid: &RadialGrid<T>, f: impl Fn(T) -> T) -> Self {
        let mut field = Self::from_fn(grid, f);
        if let Some(last) = field.0.last_mut() {
            *last = T::zero();
        }
        field
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self(self.0.iter().map(|&x| x * factor).collect())
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for RadialField<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for RadialField<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for RadialField<T> {
    fn from(values: Vec<T>) -> Self {
        Self(values)
    }
}
