//! Brute-force cross-checks: an independent quadrature, a finite-difference
//! check of the energy identity, the Cauchy-Schwarz discriminant behind the
//! concavity argument, and second differences of `G^{-eps/4}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::GParams;
use crate::grid::{unit_sphere_area, RadialGrid};
use crate::integrator::{Sample, TrajectoryRecord};
use crate::scalar::{from_usize, lit, Scalar};

pub const DEFAULT_TOL_CS: f64 = 1e-8;
pub const DEFAULT_TOL_CONCAVITY: f64 = 1e-6;
const REFINE: usize = 4;

/// Composite midpoint rule on a mesh four times finer than `grid`, with `g`
/// linearly interpolated between nodes.
pub fn quadrature_oracle<T: Scalar>(grid: &RadialGrid<T>, g: &[T]) -> Result<T> {
    grid.check(g)?;
    let omega = unit_sphere_area::<T>(grid.dim());
    let h = grid.spacing();
    let hf = h / from_usize(REFINE);
    let half: T = lit(0.5);
    let power = (grid.dim() - 1) as i32;
    let mut sum = T::zero();
    for (i, pair) in g.windows(2).enumerate() {
        for k in 0..REFINE {
            let theta = (from_usize::<T>(k) + half) / from_usize(REFINE);
            let r = (from_usize::<T>(i) + theta) * h;
            let value = pair[0] + theta * (pair[1] - pair[0]);
            sum = sum + value * r.powi(power);
        }
    }
    Ok(omega * sum * hf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdEnergyReport<T> {
    /// `max |dE/dt + ||u_t||^2_rho| / max ||u_t||^2_rho` over interior samples.
    pub max_deviation: T,
    pub worst_t: T,
    pub checked: usize,
}

fn need<T>(samples: &[T], needed: usize) -> Result<()> {
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            found: samples.len(),
        });
    }
    Ok(())
}

/// Three-point first derivative at the middle of possibly uneven nodes.
fn centered_first<T: Scalar>(t: [T; 3], y: [T; 3]) -> T {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    (-h2 / (h1 * (h1 + h2))) * y[0]
        + ((h2 - h1) / (h1 * h2)) * y[1]
        + (h1 / (h2 * (h1 + h2))) * y[2]
}

fn centered_second<T: Scalar>(t: [T; 3], y: [T; 3]) -> T {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    lit::<T>(2.0) * ((y[2] - y[1]) / h2 - (y[1] - y[0]) / h1) / (h1 + h2)
}

/// Compares a centered difference of `E` to `-||u_t||^2_rho` at interior samples.
pub fn fd_energy_check<T: Scalar>(record: &TrajectoryRecord<T>) -> Result<FdEnergyReport<T>> {
    let s = &record.samples;
    need(s, 3)?;
    let scale = s.iter().map(|x| x.vnorm_rho_sq).fold(T::zero(), T::max);
    let scale = if scale > T::zero() { scale } else { T::one() };
    let mut report = FdEnergyReport {
        max_deviation: T::zero(),
        worst_t: s[0].t,
        checked: 0,
    };
    for w in s.windows(3) {
        let de = centered_first(
            [w[0].t, w[1].t, w[2].t],
            [w[0].energy.total, w[1].energy.total, w[2].energy.total],
        );
        let dev = (de + w[1].vnorm_rho_sq).abs() / scale;
        report.checked += 1;
        if !(dev <= report.max_deviation) {
            report.max_deviation = dev;
            report.worst_t = w[1].t;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantSample<T> {
    pub t: T,
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    #[serde(rename = "C")]
    pub c: T,
    pub min_quadratic: T,
    pub flagged: bool,
}

/// 33 geometric points in `[1e-3, 1e3]`.
pub fn default_s_samples<T: Scalar>() -> Vec<T> {
    (0..33)
        .map(|k| lit::<T>(10.0).powf(lit::<T>(-3.0) + lit::<T>(6.0 * k as f64 / 32.0)))
        .collect()
}

fn abc<T: Scalar>(s: &Sample<T>, gp: &GParams<T>, u0_norm_sq: T) -> (T, T, T) {
    let half: T = lit(0.5);
    let shift = gp.t1 + s.t;
    let a = s.norm_rho_sq + s.l2rho_accum + gp.zeta * shift * shift;
    let b = s.pairing + half * (s.norm_rho_sq - u0_norm_sq) + gp.zeta * shift;
    let c = s.vnorm_rho_sq + s.diss_accum + gp.zeta;
    (a, b, c)
}

/// Minimum of `A s^2 - 2 B s + C` over `s_samples` (plus the vertex `B/A`)
/// at each sample; flags values below `-tol_cs max(A, C, 1)`.
pub fn discriminant_check<T: Scalar>(
    record: &TrajectoryRecord<T>,
    gp: &GParams<T>,
    s_samples: &[T],
    tol_cs: T,
) -> Vec<DiscriminantSample<T>> {
    let two: T = lit(2.0);
    record
        .samples
        .iter()
        .map(|sample| {
            let (a, b, c) = abc(sample, gp, record.u0_norm_sq);
            let quad = |s: T| a * s * s - two * b * s + c;
            let vertex = if a > T::zero() { Some(b / a) } else { None };
            let min_quadratic =
                s_samples
                    .iter()
                    .copied()
                    .chain(vertex)
                    .map(quad)
                    .fold(
                        T::infinity(),
                        |m, q| if q < m || q.is_nan() { q } else { m },
                    );
            let floor = -tol_cs * a.max(c).max(T::one());
            DiscriminantSample {
                t: sample.t,
                a,
                b,
                c,
                min_quadratic,
                flagged: !(min_quadratic >= floor),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport<T> {
    pub checked: usize,
    pub violations: usize,
    /// Largest `d2 / |G^{-eps/4}|` among flagged samples, zero if none.
    pub max_violation: T,
    pub worst_t: T,
}

/// Second divided differences of `G^{-eps/4}` at interior samples with
/// `t <= T0`. A sample is flagged when `d2 dt^2 > (tol_rel dt^2 + 1e-12) |y|`,
/// `dt` being the mean neighbouring interval.
pub fn concavity_check<T: Scalar>(
    record: &TrajectoryRecord<T>,
    gp: &GParams<T>,
    tol_rel: T,
) -> Result<ConcavityReport<T>> {
    let exponent = -gp.eps / lit(4.0);
    let values: Vec<(T, T)> = record
        .samples
        .iter()
        .filter(|s| s.t <= gp.t0)
        .map(|s| {
            let shift = gp.t1 + s.t;
            let g = s.norm_rho_sq
                + s.l2rho_accum
                + (gp.t0 - s.t) * record.u0_norm_sq
                + gp.zeta * shift * shift;
            (s.t, g.powf(exponent))
        })
        .collect();
    need(&values, 3)?;
    let mut report = ConcavityReport {
        checked: 0,
        violations: 0,
        max_violation: T::zero(),
        worst_t: values[0].0,
    };
    let round_off: T = lit(1e-12);
    for w in values.windows(3) {
        let (t, y) = ([w[0].0, w[1].0, w[2].0], [w[0].1, w[1].1, w[2].1]);
        let d2 = centered_second(t, y);
        let dt = (t[2] - t[0]) / lit(2.0);
        let dt2 = dt * dt;
        report.checked += 1;
        if !(d2 * dt2 <= (tol_rel * dt2 + round_off) * y[1].abs()) {
            report.violations += 1;
            let rel = d2 / y[1].abs();
            if !(rel <= report.max_violation) {
                report.max_violation = rel;
                report.worst_t = t[1];
            }
        }
    }
    Ok(report)
}
