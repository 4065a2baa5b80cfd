//! Gentle-perturbation positivity checks and radial-potential criteria.
//!
//! For a cost built from eps * V, the linearized Jacobi response along the
//! straight segment x + tv is X with
//!     dX/dt at 0 = int_0^1 int_0^tau (1 - t) Hess V(x + tv) u  dt dtau,
//! and the positivity of cross-curvature at small eps reduces to the same
//! double integral with the Hessian replaced by its second s-derivative along
//! x + t(v + sw). This module computes both, checks them over seeded sample
//! sets, and provides the small-eps limit the curvature module is tested
//! against. The inner-then-outer integration order was fixed by solving the
//! two-point problem X'' = -(1-t) A u, X(0) = X(1) = 0 directly and matching
//! X'(0); the shipped constant for quadratic potentials is 1/3.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::curvature::{CurvatureEstimate, FdScheme, Verdict};
use crate::dynamics::IntegratorConfig;
use crate::error::{MtwError, Result};
use crate::potentials::{PotentialSpec, RadialProfile};
use crate::sampling::{orthogonal_unit, sample_rng, unit_vector, PhaseDomain};

/// Composite-Simpson nodes per axis for the double integrals. The returned
/// value comes from one step-halving of this grid; the halving gap is the
/// error estimate.
pub const QUAD_NODES: usize = 129;
/// Richardson disagreement beyond this raises a quadrature-accuracy error.
pub const QUAD_TOL: f64 = 1e-8;
/// int_0^1 int_0^tau t^2 (1 - t) dt dtau: the constant in the lower bound
/// `perturbation_integral >= C * LOWER_BOUND_CONSTANT` for radial potentials
/// passing the f'' >= C criteria.
pub const LOWER_BOUND_CONSTANT: f64 = 1.0 / 30.0;
/// Points on the t-grid used by the radial condition check.
pub const RADIAL_T_NODES: usize = 65;

#[derive(Debug, Clone)]
pub struct PerturbationCheck {
    pub domain: PhaseDomain,
    pub c_required: f64,
    pub min_integral: f64,
    pub verdict: Verdict,
    /// min_integral - c_required.
    pub margin: f64,
    pub orthogonal_only: bool,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RadialCheck {
    pub f_coeffs: Vec<f64>,
    pub domain: PhaseDomain,
    pub c_required: f64,
    pub min_f2: f64,
    pub min_f3: f64,
    pub min_f4: f64,
    pub verdict: Verdict,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EpsRow {
    pub eps: f64,
    pub c_over_eps: f64,
    pub rel_gap: f64,
}

/// Small-eps comparison table: curvature per unit eps against the
/// perturbation-module limit.
#[derive(Debug, Clone)]
pub struct EpsSweep {
    pub rows: Vec<EpsRow>,
    /// (3/2) d^2/ds^2 <u, perturb_response(x, v + sw, u)> at s = 0.
    pub limit: f64,
    /// Richardson extrapolation in eps from the two smallest entries.
    pub extrapolated: Option<f64>,
}

fn simpson_scalar<F>(a: f64, b: f64, intervals: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    debug_assert!(intervals >= 2 && intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |term: f64| {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    add(f(a)?);
    add(f(b)?);
    for j in 1..intervals {
        let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
        add(weight * f(a + j as f64 * h)?);
    }
    Ok(sum * h / 3.0)
}

fn simpson_vec<F>(a: f64, b: f64, intervals: usize, dim: usize, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    debug_assert!(intervals >= 2 && intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut sum = DVector::zeros(dim);
    sum += f(a)?;
    sum += f(b)?;
    for j in 1..intervals {
        let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
        sum.axpy(weight, &f(a + j as f64 * h)?, 1.0);
    }
    Ok(sum * (h / 3.0))
}

/// int_0^1 int_0^tau g(t) dt dtau, nested composite Simpson with `nodes`
/// points per axis.
fn nested_scalar<F>(nodes: usize, g: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let intervals = nodes - 1;
    simpson_scalar(0.0, 1.0, intervals, |tau| {
        if tau == 0.0 {
            Ok(0.0)
        } else {
            simpson_scalar(0.0, tau, intervals, |t| g(t))
        }
    })
}

fn nested_vec<F>(nodes: usize, dim: usize, g: &F) -> Result<DVector<f64>>
where
    F: Fn(f64) -> Result<DVector<f64>>,
{
    let intervals = nodes - 1;
    simpson_vec(0.0, 1.0, intervals, dim, |tau| {
        if tau == 0.0 {
            Ok(DVector::zeros(dim))
        } else {
            simpson_vec(0.0, tau, intervals, dim, |t| g(t))
        }
    })
}

fn check_segment_inputs(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    rest: &[(&str, &DVector<f64>)],
) -> Result<()> {
    spec.check_dim_len(x.len())?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(MtwError::NonFinite {
            context: "segment base point x".into(),
        });
    }
    for (name, v) in rest {
        if v.len() != x.len() {
            return Err(MtwError::Dimension {
                expected: x.len(),
                got: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(MtwError::NonFinite {
                context: format!("segment input {name}"),
            });
        }
    }
    Ok(())
}

/// dX/dt at 0 of the linearized response: the double integral of
/// (1 - t) Hess V(x + tv) u, inner variable t, outer tau.
pub fn perturb_response(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_segment_inputs(spec, x, &[("v", v), ("u", u)])?;
    let g = |t: f64| -> Result<DVector<f64>> {
        let h = spec.hess(&(x + t * v))?;
        Ok((1.0 - t) * (h * u))
    };
    let base = nested_vec(QUAD_NODES, x.len(), &g)?;
    let fine = nested_vec(2 * (QUAD_NODES - 1) + 1, x.len(), &g)?;
    let gap = (&fine - &base).norm();
    if !gap.is_finite() || gap > QUAD_TOL {
        return Err(MtwError::QuadratureAccuracy { gap, tol: QUAD_TOL });
    }
    Ok(fine)
}

/// The positivity integral: double integral of
/// (1 - t) <u, d^2/ds^2 Hess V(x + t(v + sw))|_{s=0} u>, where the inner
/// derivative is hess_second_directional at x + tv in direction t w.
pub fn perturbation_integral(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    check_segment_inputs(spec, x, &[("v", v), ("u", u), ("w", w)])?;
    let g = |t: f64| -> Result<f64> {
        let h2 = spec.hess_second_directional(&(x + t * v), &(t * w))?;
        Ok((1.0 - t) * u.dot(&(&h2 * u)))
    };
    let base = nested_scalar(QUAD_NODES, &g)?;
    let fine = nested_scalar(2 * (QUAD_NODES - 1) + 1, &g)?;
    let gap = (fine - base).abs();
    if !gap.is_finite() || gap > QUAD_TOL {
        return Err(MtwError::QuadratureAccuracy { gap, tol: QUAD_TOL });
    }
    Ok(fine)
}

/// The radial-potential integrand at parameter t along x + tv, for unit
/// orthogonal u, w:
///   t^2 f'' + [<p, tw>^2 + <p, tu>^2] f''' + <p, tw>^2 <p, u>^2 f''''
/// at z = |p|^2/2, p = x + tv.
pub fn radial_integrand(
    f_coeffs: &[f64],
    x: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    let profile = RadialProfile::new(f_coeffs)?;
    if (u.norm() - 1.0).abs() > 1e-12 || (w.norm() - 1.0).abs() > 1e-12 {
        return Err(MtwError::Input(
            "radial integrand needs unit u and w".into(),
        ));
    }
    if u.dot(w).abs() > 1e-12 {
        return Err(MtwError::Input(format!(
            "radial integrand needs orthogonal u, w; <u,w> = {:.3e}",
            u.dot(w)
        )));
    }
    if !t.is_finite() {
        return Err(MtwError::NonFinite {
            context: "radial integrand parameter t".into(),
        });
    }
    let p = x + t * v;
    let z = 0.5 * p.norm_squared();
    let ptw = p.dot(&(t * w));
    let ptu = p.dot(&(t * u));
    let pu = p.dot(u);
    Ok(t * t * profile.d2.eval(z)
        + (ptw * ptw + ptu * ptu) * profile.d3.eval(z)
        + ptw * ptw * pu * pu * profile.d4.eval(z))
}

/// Minimum of `perturbation_integral` over seeded samples; holds when the
/// minimum clears C_required.
pub fn perturbation_check(
    spec: &PotentialSpec,
    domain: &PhaseDomain,
    c_required: f64,
    n_samples: usize,
    orthogonal_only: bool,
    seed: u64,
) -> Result<PerturbationCheck> {
    domain.validate()?;
    if n_samples == 0 {
        return Err(MtwError::Input("perturbation check needs samples".into()));
    }
    if !(c_required.is_finite() && c_required > 0.0) {
        return Err(MtwError::Input(format!(
            "C_required must be positive, got {c_required}"
        )));
    }
    let values: Result<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let (x, v) = domain.sample(&mut rng);
            let u = unit_vector(&mut rng, x.len());
            let w = if orthogonal_only {
                orthogonal_unit(&mut rng, &u)
            } else {
                unit_vector(&mut rng, x.len())
            };
            perturbation_integral(spec, &x, &v, &u, &w)
        })
        .collect();
    let values = values?;
    let min_integral = values.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if min_integral >= c_required {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(PerturbationCheck {
        domain: domain.clone(),
        c_required,
        min_integral,
        verdict,
        margin: min_integral - c_required,
        orthogonal_only,
        n_samples,
        seed,
    })
}

/// Minima of f'', f''', f'''' over z = |x + tv|^2/2 on a seeded sample of
/// segments with a 65-point t-grid each; holds when f'' clears C_required
/// and the higher derivatives are nonnegative to rounding.
pub fn radial_condition_check(
    f_coeffs: &[f64],
    domain: &PhaseDomain,
    c_required: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RadialCheck> {
    let profile = RadialProfile::new(f_coeffs)?;
    domain.validate()?;
    if n_samples == 0 {
        return Err(MtwError::Input("radial check needs samples".into()));
    }
    if !(c_required.is_finite() && c_required > 0.0) {
        return Err(MtwError::Input(format!(
            "C_required must be positive, got {c_required}"
        )));
    }
    let minima: Vec<(f64, f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let (x, v) = domain.sample(&mut rng);
            let mut m2 = f64::INFINITY;
            let mut m3 = f64::INFINITY;
            let mut m4 = f64::INFINITY;
            for j in 0..RADIAL_T_NODES {
                let t = j as f64 / (RADIAL_T_NODES - 1) as f64;
                let z = 0.5 * (&x + t * &v).norm_squared();
                m2 = m2.min(profile.d2.eval(z));
                m3 = m3.min(profile.d3.eval(z));
                m4 = m4.min(profile.d4.eval(z));
            }
            (m2, m3, m4)
        })
        .collect();
    let min_f2 = minima.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let min_f3 = minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let min_f4 = minima.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    let verdict = if min_f2 >= c_required && min_f3 >= -1e-12 && min_f4 >= -1e-12 {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(RadialCheck {
        f_coeffs: f_coeffs.to_vec(),
        domain: domain.clone(),
        c_required,
        min_f2,
        min_f3,
        min_f4,
        verdict,
        n_samples,
        seed,
    })
}

/// Cross-curvature per unit eps for each entry of `eps_list` (decreasing),
/// against the perturbation limit computed independently by differentiating
/// `perturb_response` in s.
pub fn small_eps_oracle(
    base: &PotentialSpec,
    eps_list: &[f64],
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    fd: &FdScheme,
    cfg: &IntegratorConfig,
) -> Result<EpsSweep> {
    fd.validate()?;
    if eps_list.is_empty() {
        return Err(MtwError::Input("eps sweep needs entries".into()));
    }
    for pair in eps_list.windows(2) {
        if pair[1] >= pair[0] {
            return Err(MtwError::Input("eps_list must be strictly decreasing".into()));
        }
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(MtwError::Input("eps values must be positive".into()));
    }

    // the limit: (3/2) d^2/ds^2 <u, perturb_response(x, v + sw, u)> by
    // central differences with one Richardson halving
    let phi = |s: f64| -> Result<f64> {
        let r = perturb_response(base, x, &(v + s * w), u)?;
        Ok(u.dot(&r))
    };
    let phi0 = phi(0.0)?;
    let h = fd.h_s;
    let d_h = (phi(h)? - 2.0 * phi0 + phi(-h)?) / (h * h);
    let h2 = 0.5 * h;
    let d_h2 = (phi(h2)? - 2.0 * phi0 + phi(-h2)?) / (h2 * h2);
    let limit = 1.5 * (16.0 * d_h2 - d_h) / 15.0;
    // second differences carry h^2 and h^4 terms; (16 D(h/2) - D(h))/15
    // knocks out both up to the h^6 tail

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let scaled = PotentialSpec::scaled(eps, base.clone())?;
        let est: CurvatureEstimate =
            crate::curvature::cross_curvature_jacobi(&scaled, x, u, v, w, fd, cfg)?;
        let c_over_eps = est.value / eps;
        let rel_gap = (c_over_eps - limit).abs() / limit.abs().max(1e-300);
        rows.push(EpsRow {
            eps,
            c_over_eps,
            rel_gap,
        });
    }

    let extrapolated = if rows.len() >= 2 {
        let a = &rows[rows.len() - 2];
        let b = &rows[rows.len() - 1];
        // model C/eps = L + k*eps, eliminate k from the two smallest eps
        Some((b.c_over_eps * a.eps - a.c_over_eps * b.eps) / (a.eps - b.eps))
    } else {
        None
    };

    Ok(EpsSweep {
        rows,
        limit,
        extrapolated,
    })
}
