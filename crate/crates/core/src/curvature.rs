//! Cross-curvature of the transport cost, two ways, plus A3/B3 scans.
//!
//! The Jacobi route evaluates C(u,v,w) = (3/2) d^2/ds^2 <u, J^c(exp^c(v+sw), u)>
//! at s=0; the direct route takes the fourth mixed difference
//! -(3/2) d^2/dt^2 d^2/ds^2 c(x+tu, exp^c(x, v+sw)) straight from the cost.
//! Agreement of the two on nontrivial potentials is the crate's core
//! correctness check. Costs are horizon-1 throughout (c = c_1).

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, PhasePoint};
use crate::error::{MtwError, Result};
use crate::jacobi;
use crate::potentials::PotentialSpec;
use crate::sampling::{orthogonal_unit, sample_rng, unit_vector, PhaseDomain};
use crate::shooting;

/// Costs and curvatures are evaluated at this horizon.
pub const COST_HORIZON: f64 = 1.0;
/// |<u, w>| at or below this counts as an orthogonal pair.
pub const ORTHO_TOL: f64 = 1e-12;
/// Scans with more than this fraction of excluded samples are inconclusive.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.10;

/// Finite-difference scheme for the s- and t-differentiation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdScheme {
    pub h_s: f64,
    pub h_t: f64,
    pub richardson_levels: usize,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            h_s: 1e-2,
            h_t: 1e-2,
            richardson_levels: 2,
        }
    }
}

impl FdScheme {
    /// Default steps adapted to the sample: h_s = 1e-2 (1+|v|)/(1+|w|).
    pub fn default_for(v: &DVector<f64>, w: &DVector<f64>) -> Self {
        Self {
            h_s: 1e-2 * (1.0 + v.norm()) / (1.0 + w.norm()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_s.is_finite() && self.h_s > 0.0 && self.h_t.is_finite() && self.h_t > 0.0) {
            return Err(MtwError::Input(format!(
                "fd steps must be positive, got h_s = {}, h_t = {}",
                self.h_s, self.h_t
            )));
        }
        if !(1..=3).contains(&self.richardson_levels) {
            return Err(MtwError::Input(format!(
                "richardson_levels must be 1, 2 or 3, got {}",
                self.richardson_levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureMethod {
    Jacobi,
    Direct,
}

impl std::fmt::Display for CurvatureMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurvatureMethod::Jacobi => write!(f, "jacobi"),
            CurvatureMethod::Direct => write!(f, "direct"),
        }
    }
}

/// Curvature value plus the diagnostics every consumer wants next to it.
#[derive(Debug, Clone)]
pub struct CurvatureEstimate {
    pub value: f64,
    /// |last - previous| of the Richardson table, in value units; NaN when
    /// richardson_levels = 1 leaves nothing to compare.
    pub error_indicator: f64,
    /// sigma_max/sigma_min of N(1) at the stencil center.
    pub condition_number: f64,
}

/// One evaluated scan sample.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub value: f64,
    pub method: CurvatureMethod,
    pub orthogonal: bool,
    pub condition_number: f64,
}

#[derive(Debug, Clone)]
pub enum SampleStatus {
    Computed(CurvatureSample),
    Excluded { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Fails => write!(f, "fails"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerdictSet {
    pub a3w: Verdict,
    pub a3s: Verdict,
    pub b3w: Verdict,
    pub b3s: Verdict,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub n_samples: usize,
    pub orthogonal_only: bool,
    pub margin: f64,
    pub seed: u64,
    pub samples: Vec<SampleStatus>,
    /// Minimum over samples with the orthogonal flag.
    pub min_mtw: Option<f64>,
    /// Minimum over all computed samples.
    pub min_cross: Option<f64>,
    pub argmin_mtw: Option<usize>,
    pub argmin_cross: Option<usize>,
    pub excluded: usize,
    pub verdicts: VerdictSet,
}

impl ScanReport {
    pub fn argmin_mtw_sample(&self) -> Option<&CurvatureSample> {
        self.argmin_mtw.and_then(|i| match &self.samples[i] {
            SampleStatus::Computed(s) => Some(s),
            SampleStatus::Excluded { .. } => None,
        })
    }

    pub fn argmin_cross_sample(&self) -> Option<&CurvatureSample> {
        self.argmin_cross.and_then(|i| match &self.samples[i] {
            SampleStatus::Computed(s) => Some(s),
            SampleStatus::Excluded { .. } => None,
        })
    }
}

fn check_directions(x: &DVector<f64>, vs: [(&str, &DVector<f64>); 3]) -> Result<()> {
    for (name, v) in vs {
        if v.len() != x.len() {
            return Err(MtwError::Dimension {
                expected: x.len(),
                got: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(MtwError::NonFinite {
                context: format!("curvature input {name}"),
            });
        }
    }
    Ok(())
}

/// Richardson table for second differences whose error expands in h^2.
/// `d` holds estimates from coarsest to finest step (ratio 2); returns the
/// extrapolated value and |last - previous diagonal| as the indicator.
fn richardson(d: &[f64]) -> (f64, f64) {
    let l = d.len();
    let mut table = vec![d.to_vec()];
    for k in 1..l {
        let prev = &table[k - 1];
        let mut row = Vec::with_capacity(l - k);
        let pow = 4.0f64.powi(k as i32);
        for m in 0..l - k {
            row.push((pow * prev[m + 1] - prev[m]) / (pow - 1.0));
        }
        table.push(row);
    }
    let value = table[l - 1][0];
    let indicator = if l >= 2 {
        (value - table[l - 2][0]).abs()
    } else {
        f64::NAN
    };
    (value, indicator)
}

/// C(u,v,w) via the Jacobi map: flows (x, v+sw) across the s-stencil, solves
/// the Jacobi boundary problem at the endpoint, second-differences in s.
pub fn cross_curvature_jacobi(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    fd: &FdScheme,
    cfg: &IntegratorConfig,
) -> Result<CurvatureEstimate> {
    fd.validate()?;
    cfg.validate()?;
    check_directions(x, [("u", u), ("v", v), ("w", w)])?;

    let g = |s: f64| -> Result<(f64, f64)> {
        let p0 = PhasePoint::new(x.clone(), v + s * w)?;
        let (_, fund) = jacobi::flow_with_fundamental(spec, &p0, COST_HORIZON, cfg)
            .map_err(into_curvature_error)?;
        let jm = jacobi::jacobi_from_fundamental(fund.final_m(), fund.final_n(), u, COST_HORIZON)
            .map_err(into_curvature_error)?;
        Ok((u.dot(&jm.value), jm.condition_number))
    };

    let (g0, condition_number) = g(0.0)?;
    let levels = fd.richardson_levels;
    let mut second_diffs = Vec::with_capacity(levels);
    // m = 0 is the base step, each level halves it: coarsest first
    for m in 0..levels {
        let h = fd.h_s / 2f64.powi(m as i32);
        let (gp, _) = g(h)?;
        let (gm, _) = g(-h)?;
        second_diffs.push((gp - 2.0 * g0 + gm) / (h * h));
    }
    let (d2, indicator) = richardson(&second_diffs);
    Ok(CurvatureEstimate {
        value: 1.5 * d2,
        error_indicator: 1.5 * indicator,
        condition_number,
    })
}

fn into_curvature_error(e: MtwError) -> MtwError {
    match e {
        MtwError::ConjugatePoint { t, ratio } => MtwError::UndefinedCurvature(format!(
            "conjugate point at stencil flow (t = {t:.6}, ratio = {ratio:.3e})"
        )),
        MtwError::Ambiguity { separation } => MtwError::Domain(format!(
            "ambiguous shooting at stencil point (separation {separation:.3e})"
        )),
        other => other,
    }
}

/// Transport cost from explicitly chosen Newton starts; the plain `cost`
/// entry point in the shooting module uses the default multistart set.
fn cost_between(
    spec: &PotentialSpec,
    from: &DVector<f64>,
    to: &DVector<f64>,
    cfg: &IntegratorConfig,
    warm: &DVector<f64>,
) -> Result<f64> {
    let starts = [warm.clone(), (to - from) / COST_HORIZON];
    let shot = shooting::shoot(spec, from, to, COST_HORIZON, cfg, &starts)
        .map_err(into_curvature_error)?;
    let traj = crate::dynamics::flow(
        spec,
        &PhasePoint::new(from.clone(), shot.v0)?,
        COST_HORIZON,
        cfg,
    )?;
    crate::dynamics::action(spec, &traj)
}

/// C(u,v,w) from the definition: fourth mixed difference of
/// c(x+tu, exp^c(x, v+sw)) over a product stencil in (t, s).
///
/// Each cost evaluation rides on Newton shooting, so the stencil steps
/// coarsen upward from (h_t, h_s) instead of refining downward; the wider
/// spacings keep the difference quotients above the shooting noise floor
/// while the Richardson table still cancels the h^2 terms.
pub fn cross_curvature_direct(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    fd: &FdScheme,
    cfg: &IntegratorConfig,
) -> Result<CurvatureEstimate> {
    fd.validate()?;
    cfg.validate()?;
    check_directions(x, [("u", u), ("v", v), ("w", w)])?;

    let levels = fd.richardson_levels;
    // endpoints y(s) shared across levels where the s-offsets coincide
    let endpoint = |s: f64| -> Result<DVector<f64>> {
        shooting::c_exponential(spec, x, &(v + s * w), COST_HORIZON, cfg)
            .map_err(into_curvature_error)
    };
    let y0 = endpoint(0.0)?;
    let cost_at = |t: f64, s: f64, y_s: &DVector<f64>| -> Result<f64> {
        let from = x + t * u;
        // first-order warm start: shift the known initial velocity
        let warm = v + s * w - (t / COST_HORIZON) * u;
        cost_between(spec, &from, y_s, cfg, &warm)
    };

    let c00 = cost_at(0.0, 0.0, &y0)?;
    let mut second_diffs = Vec::with_capacity(levels);
    for m in 0..levels {
        // m = 0 is the finest (h), higher m doubles the spacing
        let ht = fd.h_t * 2f64.powi(m as i32);
        let hs = fd.h_s * 2f64.powi(m as i32);
        let yp = endpoint(hs)?;
        let ym = endpoint(-hs)?;
        let row = |t: f64| -> Result<f64> {
            Ok(cost_at(t, hs, &yp)? - 2.0 * cost_at(t, 0.0, &y0)? + cost_at(t, -hs, &ym)?)
        };
        let d = (row(ht)? - 2.0 * (cost_at(0.0, hs, &yp)? - 2.0 * c00 + cost_at(0.0, -hs, &ym)?)
            + row(-ht)?)
            / (ht * ht * hs * hs);
        second_diffs.push(d);
    }
    second_diffs.reverse(); // coarsest first for the table
    let (d4, indicator) = richardson(&second_diffs);

    let (_, fund) = jacobi::flow_with_fundamental(
        spec,
        &PhasePoint::new(x.clone(), v.clone())?,
        COST_HORIZON,
        cfg,
    )
    .map_err(into_curvature_error)?;
    let sv = fund.final_n().clone().svd(false, false).singular_values;
    Ok(CurvatureEstimate {
        value: -1.5 * d4,
        error_indicator: 1.5 * indicator,
        condition_number: sv.max() / sv.min(),
    })
}

fn is_sample_exclusion(e: &MtwError) -> bool {
    matches!(
        e,
        MtwError::ConjugatePoint { .. }
            | MtwError::UndefinedCurvature(_)
            | MtwError::Domain(_)
            | MtwError::Ambiguity { .. }
            | MtwError::NoConvergence { .. }
            | MtwError::EnergyDrift { .. }
            | MtwError::SymplecticDefect { .. }
            | MtwError::NonFinite { .. }
            | MtwError::QuadratureAccuracy { .. }
    )
}

/// Seeded curvature scan over a phase-space domain.
///
/// Sample i draws (x, v) and unit u, w from its own RNG stream, evaluates the
/// Jacobi-route curvature, and reports A3/B3 verdicts against the margin.
/// Weak verdicts are two-valued (min >= -margin holds, else fails); strict
/// verdicts are inconclusive while |min| < margin. A3 verdicts need
/// orthogonal samples, B3 verdicts use every computed sample, and a scan
/// with more than 10% exclusions is inconclusive across the board.
pub fn mtw_scan(
    spec: &PotentialSpec,
    domain: &PhaseDomain,
    n_samples: usize,
    orthogonal_only: bool,
    margin: f64,
    seed: u64,
    fd: Option<&FdScheme>,
    cfg: &IntegratorConfig,
) -> Result<ScanReport> {
    domain.validate()?;
    cfg.validate()?;
    if n_samples == 0 {
        return Err(MtwError::Input("scan needs n_samples >= 1".into()));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(MtwError::Input(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if let Some(f) = fd {
        f.validate()?;
    }

    let samples: Vec<SampleStatus> = (0..n_samples)
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
            let scheme = fd.cloned().unwrap_or_else(|| FdScheme::default_for(&v, &w));
            match cross_curvature_jacobi(spec, &x, &u, &v, &w, &scheme, cfg) {
                Ok(est) => SampleStatus::Computed(CurvatureSample {
                    orthogonal: u.dot(&w).abs() <= ORTHO_TOL,
                    x,
                    u,
                    v,
                    w,
                    value: est.value,
                    method: CurvatureMethod::Jacobi,
                    condition_number: est.condition_number,
                }),
                Err(e) if is_sample_exclusion(&e) => SampleStatus::Excluded {
                    reason: e.to_string(),
                },
                Err(e) => SampleStatus::Excluded {
                    reason: format!("fatal: {e}"),
                },
            }
        })
        .collect();

    // re-raise input-shaped failures instead of silently excluding them
    for s in &samples {
        if let SampleStatus::Excluded { reason } = s {
            if let Some(msg) = reason.strip_prefix("fatal: ") {
                return Err(MtwError::Input(msg.to_string()));
            }
        }
    }

    let excluded = samples
        .iter()
        .filter(|s| matches!(s, SampleStatus::Excluded { .. }))
        .count();
    if excluded == n_samples {
        return Err(MtwError::EmptyScan(format!(
            "all {n_samples} samples were excluded"
        )));
    }

    let mut min_mtw: Option<(usize, f64)> = None;
    let mut min_cross: Option<(usize, f64)> = None;
    for (i, s) in samples.iter().enumerate() {
        if let SampleStatus::Computed(c) = s {
            if min_cross.map_or(true, |(_, m)| c.value < m) {
                min_cross = Some((i, c.value));
            }
            if c.orthogonal && min_mtw.map_or(true, |(_, m)| c.value < m) {
                min_mtw = Some((i, c.value));
            }
        }
    }
    if let (Some((_, mtw)), Some((_, cross))) = (min_mtw, min_cross) {
        debug_assert!(mtw >= cross - 1e-12);
    }

    let too_many_excluded = excluded as f64 > MAX_EXCLUDED_FRACTION * n_samples as f64;
    let weak = |min: Option<(usize, f64)>| match min {
        _ if too_many_excluded => Verdict::Inconclusive,
        None => Verdict::Inconclusive,
        Some((_, m)) if m >= -margin => Verdict::Holds,
        _ => Verdict::Fails,
    };
    let strict = |min: Option<(usize, f64)>| match min {
        _ if too_many_excluded => Verdict::Inconclusive,
        None => Verdict::Inconclusive,
        Some((_, m)) if m >= margin => Verdict::Holds,
        Some((_, m)) if m <= -margin => Verdict::Fails,
        _ => Verdict::Inconclusive,
    };
    let verdicts = VerdictSet {
        a3w: weak(min_mtw),
        a3s: strict(min_mtw),
        b3w: weak(min_cross),
        b3s: strict(min_cross),
    };

    Ok(ScanReport {
        n_samples,
        orthogonal_only,
        margin,
        seed,
        min_mtw: min_mtw.map(|(_, m)| m),
        min_cross: min_cross.map(|(_, m)| m),
        argmin_mtw: min_mtw.map(|(i, _)| i),
        argmin_cross: min_cross.map(|(i, _)| i),
        excluded,
        verdicts,
        samples,
    })
}
