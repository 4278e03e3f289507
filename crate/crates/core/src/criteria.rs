//! Hypothesis checks for the two blow-up theorems, derivation of the
//! auxiliary constants `(zeta, T1, T0)`, the resulting blow-up time bound, and
//! a scan for high-energy data satisfying every condition at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{GParams, Model};
use crate::grid::{RadialField, RadialGrid};
use crate::scalar::{lit, Scalar};

/// Lower clamp for `T1` when the initial pairing alone already satisfies the
/// `T1` inequality.
pub const T1_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Non-positive initial energy.
    LowEnergy23,
    /// Arbitrarily high positive initial energy.
    HighEnergy25,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Tolerances<T> {
    /// Relative tolerance turning strict inequalities into `margin > tol * scale`.
    pub cond: T,
    /// `|E(0)| <= e0_zero * scale` counts as zero initial energy.
    pub e0_zero: T,
    /// Relative slack `theta` in the choice of `T1`.
    pub t1_slack: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            cond: lit(1e-9),
            e0_zero: lit(1e-10),
            t1_slack: lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition<T> {
    pub name: String,
    pub satisfied: bool,
    /// Signed distance to the boundary of the condition; positive is good.
    pub margin: T,
    /// Magnitude the margin is compared against.
    pub scale: T,
    /// Conditions that do not apply to the present case (mass vs massless
    /// threshold) are reported but do not count.
    pub applicable: bool,
}

impl<T: Scalar> Condition<T> {
    fn strict(name: &str, margin: T, scale: T, tol: T, applicable: bool) -> Self {
        Self {
            name: name.into(),
            satisfied: margin > tol * scale,
            margin,
            scale,
            applicable,
        }
    }

    fn non_strict(name: &str, margin: T, scale: T, tol: T, applicable: bool) -> Self {
        Self {
            name: name.into(),
            satisfied: margin >= -tol * scale,
            margin,
            scale,
            applicable,
        }
    }

    /// Margin beyond the tolerance band.
    pub fn positive(&self, tol: T) -> bool {
        !self.applicable || self.margin > tol * self.scale
    }

    pub fn relative_margin(&self) -> T {
        if self.scale > T::zero() {
            self.margin / self.scale
        } else {
            self.margin
        }
    }
}

pub mod names {
    pub const NONZERO: &str = "nonzero datum";
    pub const NEGATIVE_ENERGY: &str = "E(0) < 0";
    pub const ZERO_ENERGY: &str = "E(0) = 0";
    pub const PAIRING_IF_ZERO: &str = "(u0,u1)_rho >= 0 when E(0) = 0";
    pub const POSITIVE_ENERGY: &str = "E(0) > 0";
    pub const NEHARI_NEGATIVE: &str = "I(u0) < 0";
    pub const PAIRING: &str = "(u0,u1)_rho >= 0";
    pub const MASS_THRESHOLD: &str = "||u0||^2_rho > 2(2+eps)/(m^2 eps) E(0)";
    pub const MASSLESS_THRESHOLD: &str = "||u0||^2_rho > 2(2+eps)/(min(1,alpha) eps) E(0)";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<T> {
    pub theorem: Theorem,
    pub satisfied: bool,
    pub conditions: Vec<Condition<T>>,
    pub derived: Option<GParams<T>>,
    pub bound: Option<T>,
    pub alpha_used: T,
    pub e0: T,
    pub u0_norm_sq: T,
    pub pairing0: T,
}

impl<T: Scalar> HypothesisReport<T> {
    pub fn condition(&self, name: &str) -> Option<&Condition<T>> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Applicable conditions that fail, in report order.
    pub fn failing(&self) -> impl Iterator<Item = &Condition<T>> {
        self.conditions
            .iter()
            .filter(|c| c.applicable && !c.satisfied)
    }

    pub fn all_positive(&self, tol: T) -> bool {
        self.conditions.iter().all(|c| c.positive(tol))
    }

    /// Smallest relative margin over the applicable conditions.
    pub fn worst_margin(&self) -> T {
        self.conditions
            .iter()
            .filter(|c| c.applicable)
            .map(Condition::relative_margin)
            .fold(T::infinity(), T::min)
    }
}

/// `2(2+eps)/(m^2 eps)` for `m != 0`, `2(2+eps)/(min(1, alpha) eps)` otherwise.
pub fn threshold_coefficient<T: Scalar>(mass: T, alpha: T, eps: T) -> T {
    let two: T = lit(2.0);
    let denom = if mass != T::zero() {
        mass * mass
    } else {
        alpha.min(T::one())
    };
    two * (two + eps) / (denom * eps)
}

struct DatumFacts<T> {
    e0: T,
    e_scale: T,
    u0_norm_sq: T,
    u1_norm_sq: T,
    pairing0: T,
    grad_sq: T,
    nehari: T,
    nehari_scale: T,
}

fn facts<T: Scalar>(model: &Model<T>, u0: &[T], u1: &[T]) -> Result<DatumFacts<T>> {
    let energy = model.energy_of(u0, u1)?;
    let (quadratic, nonlinear) = model.nehari_parts(u0)?;
    Ok(DatumFacts {
        e0: energy.total,
        e_scale: energy.scale(),
        u0_norm_sq: model.weighted_l2_sq(u0)?,
        u1_norm_sq: model.weighted_l2_sq(u1)?,
        pairing0: model.pairing(u0, u1)?,
        grad_sq: model.grid().grad_sq_integral(u0)?,
        nehari: quadratic - nonlinear,
        nehari_scale: quadratic.abs() + nonlinear.abs(),
    })
}

fn finish<T: Scalar>(
    theorem: Theorem,
    satisfied: bool,
    conditions: Vec<Condition<T>>,
    zeta: T,
    alpha: T,
    eps: T,
    facts: &DatumFacts<T>,
    tol: &Tolerances<T>,
) -> Result<HypothesisReport<T>> {
    let mut report = HypothesisReport {
        theorem,
        satisfied,
        conditions,
        derived: None,
        bound: None,
        alpha_used: alpha,
        e0: facts.e0,
        u0_norm_sq: facts.u0_norm_sq,
        pairing0: facts.pairing0,
    };
    if satisfied {
        let gp = derive_t1_t0(facts.u0_norm_sq, facts.pairing0, zeta, eps, tol.t1_slack)?;
        report.derived = Some(gp);
        report.bound = Some(blow_up_bound(&report)?);
    }
    Ok(report)
}

/// Checks the non-positive energy theorem: nonzero data with `E(0) < 0`, or
/// `E(0) = 0` and `(u0, u1)_rho >= 0`.
///
/// `zeta` is `-2 E(0)` in the negative branch and
/// `eps (alpha + m^2) ||u0||^2_rho / (2 + eps)` in the zero branch.
pub fn check_thm23<T: Scalar>(
    model: &Model<T>,
    u0: &[T],
    u1: &[T],
    alpha: T,
    tol: &Tolerances<T>,
) -> Result<HypothesisReport<T>> {
    use names::*;
    let f = facts(model, u0, u1)?;
    let eps = model.nonlinearity().eps();
    let two: T = lit(2.0);

    let size = f.u0_norm_sq + f.u1_norm_sq + f.grad_sq;
    let nonzero = Condition::strict(NONZERO, size, T::one(), T::zero(), true);
    let zero_band = tol.e0_zero * f.e_scale;
    let zero = Condition::non_strict(
        ZERO_ENERGY,
        zero_band - f.e0.abs(),
        f.e_scale,
        T::zero(),
        true,
    );
    // Inside the zero band the zero-energy branch takes over.
    let negative = Condition {
        satisfied: f.e0 < T::zero() && !zero.satisfied,
        ..Condition::strict(NEGATIVE_ENERGY, -f.e0, f.e_scale, tol.e0_zero, true)
    };
    let pair_scale = (f.u0_norm_sq * f.u1_norm_sq).sqrt();
    let pairing = Condition::non_strict(
        PAIRING_IF_ZERO,
        f.pairing0,
        pair_scale,
        tol.cond,
        zero.satisfied,
    );

    let zero_branch = zero.satisfied && pairing.satisfied;
    let satisfied = nonzero.satisfied && (negative.satisfied || zero_branch);
    let zeta = if negative.satisfied {
        -two * f.e0
    } else {
        eps * (alpha + model.mass_sq()) * f.u0_norm_sq / (two + eps)
    };
    finish(
        Theorem::LowEnergy23,
        satisfied,
        vec![nonzero, negative, zero, pairing],
        zeta,
        alpha,
        eps,
        &f,
        tol,
    )
}

/// Checks the high-energy theorem: `E(0) > 0`, `I(u0) < 0`, `(u0,u1)_rho >= 0`
/// and the mass or massless threshold on `||u0||^2_rho`.
pub fn check_thm25<T: Scalar>(
    model: &Model<T>,
    u0: &[T],
    u1: &[T],
    alpha: T,
    tol: &Tolerances<T>,
) -> Result<HypothesisReport<T>> {
    use names::*;
    let f = facts(model, u0, u1)?;
    let eps = model.nonlinearity().eps();
    let m = model.mass();
    let two: T = lit(2.0);
    let massive = m != T::zero();

    let energy = Condition::strict(POSITIVE_ENERGY, f.e0, f.e_scale, tol.cond, true);
    let nehari = Condition::strict(NEHARI_NEGATIVE, -f.nehari, f.nehari_scale, tol.cond, true);
    let pair_scale = (f.u0_norm_sq * f.u1_norm_sq).sqrt();
    let pairing = Condition::non_strict(PAIRING, f.pairing0, pair_scale, tol.cond, true);

    let threshold = |coef: T, name: &str, applicable: bool| {
        let rhs = coef * f.e0;
        Condition::strict(
            name,
            f.u0_norm_sq - rhs,
            f.u0_norm_sq.abs().max(rhs.abs()),
            tol.cond,
            applicable,
        )
    };
    let mass_coef = if massive {
        threshold_coefficient(m, alpha, eps)
    } else {
        T::infinity()
    };
    let mass_threshold = if massive {
        threshold(mass_coef, MASS_THRESHOLD, true)
    } else {
        Condition {
            name: MASS_THRESHOLD.into(),
            satisfied: true,
            margin: T::zero(),
            scale: T::zero(),
            applicable: false,
        }
    };
    let massless = threshold(
        threshold_coefficient(T::zero(), alpha, eps),
        MASSLESS_THRESHOLD,
        !massive,
    );

    let conditions = vec![energy, nehari, pairing, mass_threshold, massless];
    let satisfied = conditions.iter().all(|c| !c.applicable || c.satisfied);
    let zeta = eps * (model.mass_sq() + alpha) * f.u0_norm_sq / (two + eps) - two * f.e0;
    finish(
        Theorem::HighEnergy25,
        satisfied,
        conditions,
        zeta,
        alpha,
        eps,
        &f,
        tol,
    )
}

/// Chooses `T1` with relative slack `theta` over the smallest value allowed by
/// `eps/2 ((u0,u1)_rho + zeta T1) > ||u0||^2_rho`, then the self-consistent
/// `T0 = 4 G(0) / (eps G'(0))`.
pub fn derive_t1_t0<T: Scalar>(
    u0_norm_sq: T,
    pairing0: T,
    zeta: T,
    eps: T,
    theta: T,
) -> Result<GParams<T>> {
    if !(zeta > T::zero()) || !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "zeta and eps must be positive, got {zeta} and {eps}"
        )));
    }
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    let a = u0_norm_sq;
    let t1 = ((T::one() + theta) * (two * a / eps - pairing0) / zeta).max(lit(T1_FLOOR));
    let g_prime0 = two * (pairing0 + zeta * t1);
    let denominator = eps * g_prime0 - four * a;
    if !(denominator > T::zero()) {
        return Err(Error::InfeasibleConstants {
            denominator: denominator.to_f64().unwrap_or(f64::NAN),
        });
    }
    let t0 = four * (a + zeta * t1 * t1) / denominator;
    GParams::new(zeta, t0, t1, eps)
}

/// `4 G(0) / (eps G'(0))` at the derived constants.
pub fn blow_up_bound<T: Scalar>(report: &HypothesisReport<T>) -> Result<T> {
    let gp = match (&report.derived, report.satisfied) {
        (Some(gp), true) => gp,
        _ => return Err(Error::NoBound),
    };
    let two: T = lit(2.0);
    let a = report.u0_norm_sq;
    let g0 = (T::one() + gp.t0) * a + gp.zeta * gp.t1 * gp.t1;
    let g_prime0 = two * (report.pairing0 + gp.zeta * gp.t1);
    Ok(lit::<T>(4.0) * g0 / (gp.eps * g_prime0))
}

/// `(1 - (r/R0)^2)_+^power`, pinned to zero at the outer node.
pub fn bump_profile<T: Scalar>(grid: &RadialGrid<T>, support: T, power: T) -> RadialField<T> {
    RadialField::dirichlet_from_fn(grid, |r| {
        let x = T::one() - (r / support) * (r / support);
        if x > T::zero() {
            x.powf(power)
        } else {
            T::zero()
        }
    })
}

/// Initial data `u0 = lambda phi`, `u1 = kappa phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumFamily<T> {
    pub profile: RadialField<T>,
    pub lambda: T,
    pub kappa: T,
}

impl<T: Scalar> DatumFamily<T> {
    pub fn new(profile: RadialField<T>, lambda: T, kappa: T) -> Self {
        Self {
            profile,
            lambda,
            kappa,
        }
    }

    pub fn u0(&self) -> RadialField<T> {
        self.profile.scaled(self.lambda)
    }

    pub fn u1(&self) -> RadialField<T> {
        self.profile.scaled(self.kappa)
    }
}

/// Scan ranges: geometric in `lambda`, linear in `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRanges<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    pub kappa_min: T,
    pub kappa_max: T,
    pub kappa_steps: usize,
}

fn default_per_decade() -> usize {
    64
}

impl<T: Scalar> SearchRanges<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_min > T::zero()
            && self.lambda_max >= self.lambda_min
            && self.lambda_max.is_finite()
            && self.per_decade > 0
            && self.kappa_min >= T::zero()
            && self.kappa_max >= self.kappa_min
            && self.kappa_max.is_finite()
            && self.kappa_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid search ranges {self:?}"
            )))
        }
    }

    pub fn lambdas(&self) -> Vec<T> {
        let ten: T = lit(10.0);
        let limit = self.lambda_max * lit(1.0 + 1e-12);
        (0..)
            .map(|j| self.lambda_min * ten.powf(lit::<T>(j as f64) / lit(self.per_decade as f64)))
            .take_while(|&l| l <= limit)
            .collect()
    }

    pub fn kappas(&self) -> Vec<T> {
        if self.kappa_steps == 1 {
            return vec![self.kappa_min];
        }
        let step = (self.kappa_max - self.kappa_min) / lit((self.kappa_steps - 1) as f64);
        (0..self.kappa_steps)
            .map(|k| self.kappa_min + step * lit(k as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate<T> {
    pub lambda: T,
    pub kappa: T,
    pub report: HypothesisReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum SearchOutcome<T> {
    Found {
        family: DatumFamily<T>,
        report: HypothesisReport<T>,
    },
    NotFound {
        cells_scanned: usize,
        /// Cell with the largest worst-case relative margin.
        best: Option<Box<Candidate<T>>>,
    },
}

/// Scans `(lambda, kappa)` (lambda ascending, then kappa ascending) for the
/// first datum whose high-energy conditions all hold with positive margins.
/// Cells are evaluated in parallel; the result does not depend on scheduling.
pub fn search_high_energy_datum<T: Scalar>(
    model: &Model<T>,
    profile: &RadialField<T>,
    ranges: &SearchRanges<T>,
    alpha: T,
    tol: &Tolerances<T>,
) -> Result<SearchOutcome<T>> {
    ranges.validate()?;
    model.grid().check(profile)?;
    let lambdas = ranges.lambdas();
    let kappas = ranges.kappas();
    let cells: Vec<(T, T)> = lambdas
        .iter()
        .flat_map(|&l| kappas.iter().map(move |&k| (l, k)))
        .collect();

    let evaluate = |&(lambda, kappa): &(T, T)| -> Result<Candidate<T>> {
        let report = check_thm25(
            model,
            &profile.scaled(lambda),
            &profile.scaled(kappa),
            alpha,
            tol,
        )?;
        Ok(Candidate {
            lambda,
            kappa,
            report,
        })
    };

    let hit = cells
        .par_iter()
        .map(|cell| evaluate(cell))
        .find_first(|c| match c {
            Ok(c) => c.report.satisfied && c.report.all_positive(tol.cond),
            Err(_) => true,
        });
    if let Some(hit) = hit {
        let hit = hit?;
        return Ok(SearchOutcome::Found {
            family: DatumFamily::new(profile.clone(), hit.lambda, hit.kappa),
            report: hit.report,
        });
    }

    let best = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| evaluate(cell).map(|c| (i, c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(None::<(usize, Candidate<T>)>, |acc, (i, c)| match acc {
            Some((j, b)) if b.report.worst_margin() >= c.report.worst_margin() => Some((j, b)),
            _ => Some((i, c)),
        })
        .map(|(_, c)| Box::new(c));
    Ok(SearchOutcome::NotFound {
        cells_scanned: cells.len(),
        best,
    })
}
