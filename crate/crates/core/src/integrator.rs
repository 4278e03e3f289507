//! Time integration of the semi-discrete system
//!
//! ```text
//! u_t = v,   v_t = rho^{-1} Lap u - v - m^2 u + f(u)
//! ```
//!
//! with the Dormand-Prince 5(4) embedded pair, a CFL cap on the step, running
//! trapezoid accumulators for the dissipation and `L^2_rho` time integrals, and
//! blow-up detection.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{EnergyBreakdown, GParams, Model};
use crate::grid::RadialField;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct SolverConfig<T> {
    pub dt_init: T,
    pub dt_min: T,
    pub dt_max: T,
    /// Step controller safety factor; also scales the CFL cap.
    pub safety: T,
    /// Absolute and relative local error tolerance.
    pub tol_step: T,
    /// Blow-up is declared once `||u||_inf` reaches this value.
    pub blow_threshold: T,
    pub t_end: T,
    pub sample_every: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            dt_init: lit(1e-4),
            dt_min: lit(1e-14),
            dt_max: lit(1e-2),
            safety: lit(0.9),
            tol_step: lit(1e-9),
            blow_threshold: lit(1e8),
            t_end: lit(10.0),
            sample_every: lit(0.01),
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_min", self.dt_min),
            ("safety", self.safety),
            ("tol_step", self.tol_step),
            ("blow_threshold", self.blow_threshold),
            ("t_end", self.t_end),
            ("sample_every", self.sample_every),
        ];
        for (name, x) in positive {
            if !(x > T::zero() && x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max && self.dt_max.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        Ok(())
    }

    /// `safety * h * sqrt(min_i rho_i)`.
    pub fn cfl_cap(&self, model: &Model<T>) -> T {
        let rho_min = model.rho().iter().fold(T::infinity(), |m, &r| m.min(r));
        self.safety * model.grid().spacing() * rho_min.sqrt()
    }

    /// Warns when `rho(R)^{-1/2} dt_init / h > 1`.
    pub fn cfl_warning(&self, model: &Model<T>) -> Option<String> {
        let grid = model.grid();
        let rho_edge = model.density().eval(grid.radius());
        let courant = self.dt_init / (rho_edge.sqrt() * grid.spacing());
        (courant > T::one()).then(|| {
            format!(
                "dt_init = {} gives Courant number {courant} at r = R; steps will be capped at {}",
                self.dt_init,
                self.cfl_cap(model)
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum Outcome<T> {
    BlownUp {
        /// Last accepted time before the triggering event.
        t_detect: T,
        /// Blow-up time from fitting `||u||^2_rho ~ C (T - t)^{-q}` over the final decade.
        t_extrap: Option<T>,
    },
    Survived {
        t_end: T,
    },
    Inconclusive {
        reason: String,
    },
}

impl<T> Outcome<T> {
    pub fn is_blown_up(&self) -> bool {
        matches!(self, Self::BlownUp { .. })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::BlownUp { .. } => "BlownUp",
            Self::Survived { .. } => "Survived",
            Self::Inconclusive { .. } => "Inconclusive",
        }
    }
}

/// Diagnostics at one sampled time. `G` columns are NaN when no auxiliary
/// constants were supplied or `t > T0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t: T,
    pub dt: T,
    pub energy: EnergyBreakdown<T>,
    pub nehari: T,
    pub norm_rho_sq: T,
    pub vnorm_rho_sq: T,
    pub pairing: T,
    pub u_inf: T,
    pub diss_accum: T,
    pub l2rho_accum: T,
    pub g: T,
    pub g_prime: T,
    pub g_second: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    pub samples: Vec<Sample<T>>,
    pub outcome: Outcome<T>,
    pub gparams: Option<GParams<T>>,
    pub u0_norm_sq: T,
    pub pairing0: T,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn initial_energy(&self) -> T {
        self.samples[0].energy.total
    }

    /// `max_k |E(0) - E(t_k) - diss_accum(t_k)|`.
    pub fn energy_residual(&self) -> T {
        let e0 = self.initial_energy();
        self.samples
            .iter()
            .map(|s| (e0 - s.energy.total - s.diss_accum).abs())
            .fold(T::zero(), T::max)
    }
}

/// `(v, rho^{-1} Lap u - v - m^2 u + f(u))`, with the boundary node pinned.
pub fn rhs<T: Scalar>(
    model: &Model<T>,
    u: &[T],
    v: &[T],
) -> Result<(RadialField<T>, RadialField<T>)> {
    let grid = model.grid();
    grid.check(u)?;
    grid.check(v)?;
    let n = grid.len();
    let mut y = Vec::with_capacity(2 * n);
    y.extend_from_slice(u);
    y.extend_from_slice(v);
    let mut out = vec![T::zero(); 2 * n];
    Rhs::new(model).eval(&y, &mut out);
    let acc = out.split_off(n);
    Ok((RadialField(out), RadialField(acc)))
}

/// Precomputed coefficients for the right-hand side on the stacked state `[u, v]`.
struct Rhs<'a, T> {
    model: &'a Model<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    mass_sq: T,
}

impl<'a, T: Scalar> Rhs<'a, T> {
    fn new(model: &'a Model<T>) -> Self {
        let (lo, up) = model.grid().lap_coefficients();
        let lower = lo.iter().zip(model.rho()).map(|(&c, &r)| c / r).collect();
        let upper = up.iter().zip(model.rho()).map(|(&c, &r)| c / r).collect();
        Self {
            model,
            lower,
            upper,
            mass_sq: model.mass_sq(),
        }
    }

    fn eval(&self, y: &[T], out: &mut [T]) {
        let n = self.lower.len();
        let (u, v) = y.split_at(n);
        let (du, dv) = out.split_at_mut(n);
        du.copy_from_slice(v);
        du[n - 1] = T::zero();
        let m2 = self.mass_sq;
        dv[0] = self.upper[0] * (u[1] - u[0]) - v[0] - m2 * u[0];
        let (lower, upper) = (&self.lower[1..n - 1], &self.upper[1..n - 1]);
        for (i, ((o, &lo), &up)) in dv[1..n - 1].iter_mut().zip(lower).zip(upper).enumerate() {
            let (left, mid, right) = (u[i], u[i + 1], u[i + 2]);
            *o = lo * (left - mid) + up * (right - mid) - v[i + 1] - m2 * mid;
        }
        self.model
            .nonlinearity()
            .add_eval(&u[..n - 1], &mut dv[..n - 1]);
        dv[n - 1] = T::zero();
    }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Tableau<T> {
    a: [[T; 5]; 5],
    b: [T; 6],
    e: [T; 7],
}

impl<T: Scalar> Tableau<T> {
    fn new() -> Self {
        let z = T::zero();
        Self {
            a: [
                [lit(A21), z, z, z, z],
                [lit(A31), lit(A32), z, z, z],
                [lit(A41), lit(A42), lit(A43), z, z],
                [lit(A51), lit(A52), lit(A53), lit(A54), z],
                [lit(A61), lit(A62), lit(A63), lit(A64), lit(A65)],
            ],
            b: [lit(B1), z, lit(B3), lit(B4), lit(B5), lit(B6)],
            e: [lit(E1), z, lit(E3), lit(E4), lit(E5), lit(E6), lit(E7)],
        }
    }
}

/// Stage storage for one embedded step.
struct Workspace<T> {
    k: [Vec<T>; 7],
    stage: Vec<T>,
    y_new: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(len: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![T::zero(); len]),
            stage: vec![T::zero(); len],
            y_new: vec![T::zero(); len],
        }
    }

    /// Attempts a step of size `h` from `y`, assuming `k[0] = rhs(y)`. Returns
    /// the scaled error norm; `k[6]` holds `rhs(y_new)` afterwards.
    fn attempt(&mut self, rhs: &Rhs<T>, tab: &Tableau<T>, y: &[T], h: T, tol: T) -> T {
        let a = &tab.a;
        let hk = |c: T| h * c;
        {
            let [k0, k1, k2, k3, k4, k5, _] = &mut self.k;
            combo(&mut self.stage, y, [hk(a[0][0])], [k0]);
            rhs.eval(&self.stage, k1);
            combo(&mut self.stage, y, [hk(a[1][0]), hk(a[1][1])], [k0, k1]);
            rhs.eval(&self.stage, k2);
            combo(
                &mut self.stage,
                y,
                [hk(a[2][0]), hk(a[2][1]), hk(a[2][2])],
                [k0, k1, k2],
            );
            rhs.eval(&self.stage, k3);
            combo(
                &mut self.stage,
                y,
                [hk(a[3][0]), hk(a[3][1]), hk(a[3][2]), hk(a[3][3])],
                [k0, k1, k2, k3],
            );
            rhs.eval(&self.stage, k4);
            combo(
                &mut self.stage,
                y,
                [
                    hk(a[4][0]),
                    hk(a[4][1]),
                    hk(a[4][2]),
                    hk(a[4][3]),
                    hk(a[4][4]),
                ],
                [k0, k1, k2, k3, k4],
            );
            rhs.eval(&self.stage, k5);
        }
        let [k0, _, k2, k3, k4, k5, k6] = &mut self.k;
        let b = &tab.b;
        combo(
            &mut self.y_new,
            y,
            [hk(b[0]), hk(b[2]), hk(b[3]), hk(b[4]), hk(b[5])],
            [k0, k2, k3, k4, k5],
        );
        rhs.eval(&self.y_new, k6);

        let e = &tab.e;
        let c = [hk(e[0]), hk(e[2]), hk(e[3]), hk(e[4]), hk(e[5]), hk(e[6])];
        let ks = [&k0[..], &k2[..], &k3[..], &k4[..], &k5[..], &k6[..]];
        let mut err = T::zero();
        for (j, (&a, &b)) in y.iter().zip(&self.y_new).enumerate() {
            let mut d = T::zero();
            for l in 0..6 {
                d = d + c[l] * ks[l][j];
            }
            let scaled = d.abs() / (tol + tol * a.abs().max(b.abs()));
            if scaled.is_nan() {
                return T::infinity();
            }
            err = err.max(scaled);
        }
        err
    }
}

/// `out = y + sum_l c[l] k[l]` in one pass.
#[inline]
fn combo<T: Scalar, const M: usize>(out: &mut [T], y: &[T], c: [T; M], k: [&Vec<T>; M]) {
    let n = out.len();
    let y = &y[..n];
    let k: [&[T]; M] = k.map(|v| &v[..n]);
    for j in 0..n {
        let mut acc = y[j];
        for l in 0..M {
            acc = acc + c[l] * k[l][j];
        }
        out[j] = acc;
    }
}

/// Recent `(t, ||u||^2_rho)` pairs kept for the blow-up time fit.
const TAIL_LEN: usize = 50_000;

/// Integrates from `(u0, u1)` until `t_end`, blow-up, or step collapse.
///
/// `gparams` fills the `G` columns; pass `None` to leave them NaN.
pub fn simulate<T: Scalar>(
    model: &Model<T>,
    u0: &RadialField<T>,
    u1: &RadialField<T>,
    cfg: &SolverConfig<T>,
    gparams: Option<&GParams<T>>,
) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let grid = model.grid();
    grid.check(u0)?;
    grid.check(u1)?;
    model.nonlinearity().check_exponent(grid.dim())?;
    let n = grid.len();
    if u0[n - 1] != T::zero() || u1[n - 1] != T::zero() {
        return Err(Error::InvalidArgument(
            "initial data must vanish at the truncation radius".into(),
        ));
    }
    if !u0.is_finite() || !u1.is_finite() {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }

    let rhs = Rhs::new(model);
    let tab = Tableau::new();
    let mut ws = Workspace::new(2 * n);
    let mut y: Vec<T> = u0.iter().chain(u1.iter()).copied().collect();
    rhs.eval(&y, &mut ws.k[0]);

    let half: T = lit(0.5);
    let u0_norm_sq = model.weighted_l2_sq_unchecked(u0);
    let pairing0 = model.pairing_unchecked(u0, u1);
    let mut norm_sq = u0_norm_sq;
    let mut vnorm_sq = model.weighted_l2_sq_unchecked(u1);
    let mut diss = T::zero();
    let mut l2acc = T::zero();
    let mut t = T::zero();

    let sampler = Sampler {
        model,
        gparams,
        u0_norm_sq,
    };
    let mut samples = vec![sampler.sample(&y, t, T::zero(), diss, l2acc)];
    let mut sample_index = 1usize;
    let mut next_sample = cfg.sample_every;

    let cap = cfg.cfl_cap(model).min(cfg.dt_max);
    let mut dt = cfg.dt_init.min(cap);
    let mut tail: VecDeque<(T, T)> = VecDeque::new();
    tail.push_back((t, norm_sq));
    let mut recent_norms: VecDeque<T> = VecDeque::from([norm_sq]);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut err_prev: T = lit(1e-4);
    let end_tol = cfg.t_end * lit(1e-12);

    let outcome = loop {
        let to_end = cfg.t_end - t;
        if to_end <= end_tol {
            if samples.last().map(|s| s.t) != Some(t) {
                let last_dt = samples.last().map(|s| s.dt).unwrap_or(T::zero());
                samples.push(sampler.sample(&y, t, last_dt, diss, l2acc));
            }
            break Outcome::Survived { t_end: t };
        }
        let to_sample = next_sample - t;
        let mut h = dt;
        let mut landing = Landing::Free;
        if to_sample <= h && to_sample <= to_end {
            h = to_sample;
            landing = Landing::Sample;
        }
        if to_end <= h {
            h = to_end;
            landing = Landing::End;
        }

        let err = ws.attempt(&rhs, &tab, &y, h, cfg.tol_step);
        if err.is_finite() && err <= T::one() {
            accepted += 1;
            let t_prev = t;
            t = match landing {
                Landing::Free => t + h,
                Landing::Sample => next_sample,
                Landing::End => cfg.t_end,
            };
            std::mem::swap(&mut y, &mut ws.y_new);
            ws.k.swap(0, 6);

            let (u, v) = y.split_at(n);
            let new_norm = model.weighted_l2_sq_unchecked(u);
            let new_vnorm = model.weighted_l2_sq_unchecked(v);
            diss = diss + half * h * (vnorm_sq + new_vnorm);
            l2acc = l2acc + half * h * (norm_sq + new_norm);
            norm_sq = new_norm;
            vnorm_sq = new_vnorm;
            if tail.len() == TAIL_LEN {
                tail.pop_front();
            }
            tail.push_back((t, norm_sq));
            if recent_norms.len() == 4 {
                recent_norms.pop_front();
            }
            recent_norms.push_back(norm_sq);

            let u_inf = u.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
            if !(u_inf < cfg.blow_threshold) {
                samples.push(sampler.sample(&y, t, h, diss, l2acc));
                break Outcome::BlownUp {
                    t_detect: t_prev,
                    t_extrap: fit_blowup_time(tail.make_contiguous()),
                };
            }
            if landing == Landing::Sample {
                samples.push(sampler.sample(&y, t, h, diss, l2acc));
                sample_index += 1;
                next_sample = cfg.sample_every * lit(sample_index as f64);
            }

            let factor = step_factor(err, err_prev, cfg.safety);
            err_prev = err.max(lit(1e-4));
            let base = if landing == Landing::Free {
                h
            } else {
                dt.max(h)
            };
            dt = (base * factor).min(cap);
        } else {
            rejected += 1;
            let factor = if err.is_finite() {
                step_factor(err, err_prev, cfg.safety).min(T::one())
            } else {
                lit(0.2)
            };
            dt = h * factor;
            if dt < cfg.dt_min {
                let growing = recent_norms.len() == 4
                    && recent_norms
                        .iter()
                        .zip(recent_norms.iter().skip(1))
                        .all(|(a, b)| b > a);
                if growing {
                    samples.push(sampler.sample(&y, t, h, diss, l2acc));
                    break Outcome::BlownUp {
                        t_detect: t,
                        t_extrap: fit_blowup_time(tail.make_contiguous()),
                    };
                }
                break Outcome::Inconclusive {
                    reason: format!(
                        "step size collapsed to {dt} at t = {t} without sustained norm growth"
                    ),
                };
            }
        }
    };

    Ok(TrajectoryRecord {
        samples,
        outcome,
        gparams: gparams.copied(),
        u0_norm_sq,
        pairing0,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Landing {
    Free,
    Sample,
    End,
}

/// Stabilized (PI) step factor `safety err^{-(0.2 - 0.75 beta)} err_prev^{beta}`,
/// clamped to `[0.2, 5]`.
fn step_factor<T: Scalar>(err: T, err_prev: T, safety: T) -> T {
    let beta: T = lit(PI_BETA);
    if err <= T::zero() {
        return lit(5.0);
    }
    let expo = lit::<T>(0.2) - lit::<T>(0.75) * beta;
    (safety * err.powf(-expo) * err_prev.powf(beta))
        .max(lit(0.2))
        .min(lit(5.0))
}

const PI_BETA: f64 = 0.08;

struct Sampler<'a, T> {
    model: &'a Model<T>,
    gparams: Option<&'a GParams<T>>,
    u0_norm_sq: T,
}

impl<T: Scalar> Sampler<'_, T> {
    fn sample(&self, y: &[T], t: T, dt: T, diss_accum: T, l2rho_accum: T) -> Sample<T> {
        let n = self.model.grid().len();
        let (u, v) = y.split_at(n);
        let energy = self.model.energy_unchecked(u, v);
        let (quadratic, nonlinear) = self.model.nehari_parts_unchecked(u);
        let nehari = quadratic - nonlinear;
        let norm_rho_sq = self.model.weighted_l2_sq_unchecked(u);
        let vnorm_rho_sq = self.model.weighted_l2_sq_unchecked(v);
        let pairing = self.model.pairing_unchecked(u, v);
        let u_inf = u.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let nan = T::nan();
        let (g, g_prime, g_second) = match self.gparams {
            Some(gp) => (
                gp.g(t, norm_rho_sq, l2rho_accum, self.u0_norm_sq)
                    .unwrap_or(nan),
                gp.g_prime(t, pairing, norm_rho_sq, self.u0_norm_sq)
                    .unwrap_or(nan),
                gp.g_second(t, vnorm_rho_sq, nehari).unwrap_or(nan),
            ),
            None => (nan, nan, nan),
        };
        Sample {
            t,
            dt,
            energy,
            nehari,
            norm_rho_sq,
            vnorm_rho_sq,
            pairing,
            u_inf,
            diss_accum,
            l2rho_accum,
            g,
            g_prime,
            g_second,
        }
    }
}

/// Fits `log y = c - q log(T - t)` to the final decade of growth and returns
/// `T`, or `None` when the tail is too short or the fit degenerates.
pub fn fit_blowup_time<T: Scalar>(tail: &[(T, T)]) -> Option<T> {
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|&(t, y)| Some((t.to_f64()?, y.to_f64()?)))
        .filter(|&(_, y)| y.is_finite() && y > 0.0)
        .collect();
    let &(t_last, y_last) = pts.last()?;
    // Keep the monotone run that ends at the last point and spans one decade.
    let mut start = pts.len() - 1;
    while start > 0 && pts[start - 1].1 < pts[start].1 && pts[start - 1].1 >= y_last / 10.0 {
        start -= 1;
    }
    let fit = &pts[start..];
    if fit.len() < 5 || y_last / fit[0].1 < 2.0 {
        return None;
    }
    let span = t_last - fit[0].0;
    if !(span > 0.0) {
        return None;
    }

    let sse = |log_gap: f64| -> (f64, f64) {
        let blow = t_last + log_gap.exp();
        let n = fit.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(t, y) in fit {
            let x = (blow - t).ln();
            let ly = y.ln();
            sx += x;
            sy += ly;
            sxx += x * x;
            sxy += x * ly;
        }
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-300 {
            return (f64::INFINITY, 0.0);
        }
        let slope = (n * sxy - sx * sy) / denom;
        let icpt = (sy - slope * sx) / n;
        let res: f64 = fit
            .iter()
            .map(|&(t, y)| {
                let r = y.ln() - icpt - slope * (blow - t).ln();
                r * r
            })
            .sum();
        (res, -slope)
    };

    // Golden-section search on log(T - t_last).
    let (mut lo, mut hi) = ((span * 1e-8).ln(), (span * 10.0).ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (sse(x1).0, sse(x2).0);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = sse(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = sse(x2).0;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let best = 0.5 * (lo + hi);
    let (res, q) = sse(best);
    if !res.is_finite() || !(q > 0.0) {
        return None;
    }
    T::from_f64(t_last + best.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::physics::{DensityProfile, Nonlinearity};
    use std::f64::consts::PI;

    fn model(cells: usize, radius: f64, c: f64, mass: f64) -> Model<f64> {
        Model::new(
            RadialGrid::new(3, radius, cells).unwrap(),
            DensityProfile::inverse_power(1.0, 2.0).unwrap(),
            Nonlinearity::new(2.0, c).unwrap(),
            mass,
        )
        .unwrap()
    }

    fn bump(m: &Model<f64>, scale: f64) -> RadialField<f64> {
        RadialField::dirichlet_from_fn(m.grid(), |r| {
            scale * (1.0 - (r / 4.0).powi(2)).max(0.0).powi(2)
        })
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.dt_init = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig::<f64> {
            t_end: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cfl_cap_and_warning() {
        let m = model(64, 8.0, 1.0, 0.0);
        let cfg = SolverConfig::<f64>::default();
        let cap = cfg.cfl_cap(&m);
        assert!((cap - 0.9 * 0.125 / 65.0).abs() < 1e-15);
        // Wave speed at r = R is 65, so the Courant number is 520 dt_init.
        assert!(cfg.cfl_warning(&m).is_none());
        let bold = SolverConfig {
            dt_init: 5e-3,
            ..cfg
        };
        assert!(bold.cfl_warning(&m).is_some());
    }

    #[test]
    fn rhs_zero_state() {
        let m = model(32, 4.0, 1.0, 1.0);
        let z = RadialField::zeros(m.grid());
        let (du, dv) = rhs(&m, &z, &z).unwrap();
        assert!(du.iter().chain(dv.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn rhs_pure_damping() {
        let m = model(32, 4.0, 1.0, 2.0);
        let phi = RadialField::dirichlet_from_fn(m.grid(), |r| (4.0 - r) * r);
        let (du, dv) = rhs(&m, &RadialField::zeros(m.grid()), &phi).unwrap();
        assert_eq!(&du[..], &phi[..]);
        for i in 0..m.grid().len() {
            assert_eq!(dv[i], -phi[i]);
        }
    }

    #[test]
    fn rhs_linear_eigenfunction() {
        let m = Model::new(
            RadialGrid::new(3, 1.0, 256).unwrap(),
            DensityProfile::constant(1.0).unwrap(),
            Nonlinearity::linear(2.0).unwrap(),
            0.0,
        )
        .unwrap();
        let u = RadialField::dirichlet_from_fn(m.grid(), |r| {
            if r == 0.0 {
                PI
            } else {
                (PI * r).sin() / r
            }
        });
        let (_, dv) = rhs(&m, &u, &RadialField::zeros(m.grid())).unwrap();
        for i in 0..m.grid().cells() {
            assert!(
                (dv[i] + PI * PI * u[i]).abs() < 2e-4 * PI.powi(3),
                "node {i}"
            );
        }
    }

    #[test]
    fn zero_data_survives() {
        let m = model(64, 8.0, 1.0, 0.0);
        let z = RadialField::zeros(m.grid());
        let cfg = SolverConfig {
            t_end: 0.05,
            sample_every: 0.01,
            ..Default::default()
        };
        let rec = simulate(&m, &z, &z, &cfg, None).unwrap();
        assert_eq!(rec.outcome, Outcome::Survived { t_end: 0.05 });
        assert_eq!(rec.samples.len(), 6);
        for s in &rec.samples {
            assert_eq!(s.energy.total, 0.0);
            assert_eq!(s.norm_rho_sq, 0.0);
            assert_eq!(s.diss_accum, 0.0);
            assert!(s.g.is_nan());
        }
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn rejects_bad_data() {
        let m = model(32, 4.0, 1.0, 0.0);
        let cfg = SolverConfig::default();
        let ones = RadialField::from_fn(m.grid(), |_| 1.0);
        let z = RadialField::zeros(m.grid());
        assert!(simulate(&m, &ones, &z, &cfg, None).is_err());
        let cubic = Model::new(
            m.grid().clone(),
            *m.density(),
            Nonlinearity::new(3.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        assert!(simulate(&cubic, &z, &z, &cfg, None).is_err());
    }

    #[test]
    fn linear_run_dissipates_energy() {
        let m = model(128, 8.0, 0.0, 0.0);
        let cfg = SolverConfig {
            t_end: 2.0,
            sample_every: 0.05,
            ..Default::default()
        };
        let rec = simulate(
            &m,
            &bump(&m, 1.0),
            &RadialField::zeros(m.grid()),
            &cfg,
            None,
        )
        .unwrap();
        assert!(matches!(rec.outcome, Outcome::Survived { .. }));
        let e0 = rec.initial_energy();
        assert!(
            rec.energy_residual() < 1e-6 * e0.max(1.0),
            "{}",
            rec.energy_residual()
        );
        assert!(rec
            .samples
            .windows(2)
            .all(|w| w[1].energy.total <= w[0].energy.total + 1e-9
                && w[1].diss_accum >= w[0].diss_accum));
    }

    #[test]
    fn large_bump_blows_up() {
        let m = model(128, 8.0, 1.0, 0.0);
        let cfg = SolverConfig {
            t_end: 20.0,
            sample_every: 0.05,
            ..Default::default()
        };
        let u0 = bump(&m, 30.0);
        let z = RadialField::zeros(m.grid());
        let e0 = m.energy_of(&u0, &z).unwrap().total;
        assert!(e0 < 0.0);
        let rec = simulate(&m, &u0, &z, &cfg, None).unwrap();
        match rec.outcome {
            Outcome::BlownUp { t_detect, t_extrap } => {
                assert!(t_detect > 0.0 && t_detect < 20.0);
                if let Some(te) = t_extrap {
                    assert!(
                        te >= t_detect - 1e-6 && te < t_detect + 0.1,
                        "{te} {t_detect}"
                    );
                }
            }
            ref other => panic!("expected blow-up, got {other:?}"),
        }
        let last = rec.samples.last().unwrap();
        assert!(last.u_inf >= cfg.blow_threshold);
    }

    #[test]
    fn extrapolation_recovers_power_law() {
        let blow = 2.0;
        let tail: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 1.9 + 0.099 * i as f64 / 200.0;
                (t, 3.0 * (blow - t).powf(-1.5))
            })
            .collect();
        let est = fit_blowup_time(&tail).unwrap();
        assert!((est - blow).abs() < 1e-4, "{est}");
        assert!(fit_blowup_time::<f64>(&[(0.0, 1.0), (1.0, 1.0)]).is_none());
    }
}
