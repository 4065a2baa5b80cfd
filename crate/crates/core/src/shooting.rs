//! Two-point boundary-value shooting, transport costs, the c-exponential and
//! conjugate-point scans.
//!
//! Newton shooting uses the exact variational Jacobian: the endpoint map
//! v0 -> x(T) has derivative N(T), the second fundamental solution from the
//! jacobi module. Global uniqueness of minimizers is not certifiable
//! numerically, so every result carries a multistart-agreement flag as the
//! declared surrogate for regularity.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{self, IntegratorConfig, PhasePoint};
use crate::error::{MtwError, Result};
use crate::jacobi;
use crate::potentials::PotentialSpec;
use crate::sampling::{sample_rng, unit_vector};

pub const SHOOT_MAX_ITERS: usize = 50;
/// Converged starts further apart than this are distinct solutions.
pub const AMBIGUITY_TOL: f64 = 1e-6;
/// Seed for the default multistart perturbations used by `cost`.
pub const DEFAULT_MULTISTART_SEED: u64 = 0;
/// Grid ratio sigma_min/max|N| below which a node is worth refining.
const GRID_DETECT_RATIO: f64 = 0.05;
/// Conjugate scans refine candidate times to this width.
const REFINE_WIDTH: f64 = 1e-10;

/// Residual tolerance for a shot ending at y.
pub fn shoot_tol(y: &DVector<f64>) -> f64 {
    1e-10 * (1.0 + y.norm())
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub v0: DVector<f64>,
    /// |Phi_T(x, v0) - y| of the returned solution.
    pub residual: f64,
    pub newton_iters: usize,
    /// True when at least two starts converged and all converged starts
    /// agreed within AMBIGUITY_TOL; single-start successes leave it false.
    pub multistart_agreement: bool,
}

#[derive(Debug, Clone)]
pub struct ConjugateScan {
    pub first_conjugate_time: Option<f64>,
    /// (t, sigma_min(N(t))) at every grid node.
    pub min_singular_value_curve: Vec<(f64, f64)>,
}

/// Straight-line guess plus 8 seeded random perturbations of relative size 0.5.
pub fn default_starts(
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_final: f64,
    seed: u64,
) -> Vec<DVector<f64>> {
    let line = (y - x) / t_final;
    let scale = if line.norm() > 1e-12 {
        0.5 * line.norm()
    } else {
        0.5
    };
    let mut rng = sample_rng(seed, u64::MAX); // stream reserved for multistart
    let mut starts = Vec::with_capacity(9);
    starts.push(line.clone());
    for _ in 0..8 {
        starts.push(&line + scale * unit_vector(&mut rng, x.len()));
    }
    starts
}

struct NewtonOutcome {
    v0: DVector<f64>,
    residual: f64,
    iters: usize,
}

/// Endpoint and its velocity-Jacobian in one coupled integration.
fn endpoint_and_jacobian(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p0 = PhasePoint::new(x.clone(), v.clone())?;
    let (traj, fund) = jacobi::flow_with_fundamental(spec, &p0, t_final, cfg)?;
    Ok((traj.final_state().x.clone(), fund.final_n().clone()))
}

fn newton_from_start(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
    start: &DVector<f64>,
    tol: f64,
) -> Option<NewtonOutcome> {
    let mut v = start.clone();
    let (mut end, mut n_t) = endpoint_and_jacobian(spec, x, &v, t_final, cfg).ok()?;
    let mut res = (&end - y).norm();
    let mut iters = 0;
    let mut converged = res <= tol;

    while iters < SHOOT_MAX_ITERS {
        let svd = n_t.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax.is_finite() && smin > 1e-12 * smax && smax > 0.0) {
            return None; // Jacobian effectively singular along this start
        }
        let step_full = svd.solve(&(y - &end), 0.0).ok()?;
        let step_full = DVector::from_column_slice(step_full.as_slice());

        // Damped update: halve until the residual actually drops.
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-4 {
            let v_try = &v + alpha * &step_full;
            if let Ok((end_try, n_try)) = endpoint_and_jacobian(spec, x, &v_try, t_final, cfg) {
                let res_try = (&end_try - y).norm();
                if res_try < res {
                    v = v_try;
                    end = end_try;
                    n_t = n_try;
                    res = res_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iters += 1;
        if !accepted {
            break; // stalled; res already at its floor
        }
        if res <= tol {
            if converged {
                break; // one polish pass after first reaching tol is enough
            }
            converged = true;
        }
    }

    if res <= tol {
        Some(NewtonOutcome {
            v0: v,
            residual: res,
            iters,
        })
    } else {
        None
    }
}

/// Finds v0 with flow(spec, (x, v0), T) ending at y, trying every start.
pub fn shoot(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
    starts: &[DVector<f64>],
) -> Result<ShootResult> {
    if starts.is_empty() {
        return Err(MtwError::Input("shoot needs at least one start".into()));
    }
    if y.len() != x.len() {
        return Err(MtwError::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|c| !c.is_finite()) {
        return Err(MtwError::NonFinite {
            context: "shooting target y".into(),
        });
    }
    let tol = shoot_tol(y);
    let mut solutions: Vec<NewtonOutcome> = Vec::new();
    for start in starts {
        if start.len() != x.len() {
            return Err(MtwError::Dimension {
                expected: x.len(),
                got: start.len(),
            });
        }
        if let Some(sol) = newton_from_start(spec, x, y, t_final, cfg, start, tol) {
            solutions.push(sol);
        }
    }
    if solutions.is_empty() {
        return Err(MtwError::NoConvergence {
            residual: f64::NAN,
            starts: starts.len(),
        });
    }

    let mut separation = 0.0f64;
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            separation = separation.max((&solutions[i].v0 - &solutions[j].v0).norm());
        }
    }
    if separation > AMBIGUITY_TOL {
        return Err(MtwError::Ambiguity { separation });
    }

    let best = solutions
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.residual
                .partial_cmp(&b.residual)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(j))
        })
        .map(|(_, s)| s)
        .expect("nonempty solutions");
    Ok(ShootResult {
        v0: best.v0.clone(),
        residual: best.residual,
        newton_iters: best.iters,
        multistart_agreement: solutions.len() >= 2,
    })
}

/// Transport cost c_T(x, y): the action of the least-action path found by
/// shooting from the default multistart set.
pub fn cost(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let starts = default_starts(x, y, t_final, DEFAULT_MULTISTART_SEED);
    let shot = shoot(spec, x, y, t_final, cfg, &starts)?;
    let traj = dynamics::flow(
        spec,
        &PhasePoint::new(x.clone(), shot.v0)?,
        t_final,
        cfg,
    )?;
    dynamics::action(spec, &traj)
}

/// exp^c(x, v): endpoint of the least-action flow with initial velocity v.
pub fn c_exponential(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<DVector<f64>> {
    let traj = dynamics::flow(spec, &PhasePoint::new(x.clone(), v.clone())?, t_final, cfg)?;
    Ok(traj.final_state().x.clone())
}

fn min_max_singular(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    (sv.min(), sv.max())
}

/// sigma_min(N(t)) for a single t, integrating on a grid of comparable density.
fn sigma_min_at(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t: f64,
    full_steps: usize,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let steps = ((full_steps as f64 * t / t_final).ceil() as usize).max(16);
    let mut local = cfg.clone();
    local.steps = (steps as f64 / t.max(1e-12)).ceil() as usize + 1;
    let (_, fund) = jacobi::flow_with_fundamental(spec, p0, t, &local)?;
    Ok(min_max_singular(fund.final_n()).0)
}

/// Golden-section shrink of [lo, hi] to REFINE_WIDTH around the minimizer of
/// sigma_min(N(t)); bracketing works whether the dip is a crossing or a touch.
fn refine_minimum(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    mut lo: f64,
    mut hi: f64,
    full_steps: usize,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let eval = |t: f64| sigma_min_at(spec, p0, t, full_steps, t_final, cfg);
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    while hi - lo > REFINE_WIDTH {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = eval(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = eval(b)?;
        }
    }
    let t_star = 0.5 * (lo + hi);
    Ok((t_star, eval(t_star)?))
}

/// Scans [0, T] for the first time where N(t) loses rank.
///
/// Grid nodes flag a candidate when sigma_min(N(t))/max_t|N| dips locally
/// below a coarse threshold or det N changes sign; candidates are refined to
/// 1e-8 in t and accepted when the refined ratio falls below
/// jacobi::CONJ_TOL. Dips narrower than the grid can escape the coarse pass;
/// raise cfg.steps to resolve faster-oscillating potentials.
pub fn conjugate_scan(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<ConjugateScan> {
    let p0 = PhasePoint::new(x.clone(), v.clone())?;
    let (_, fund) = jacobi::flow_with_fundamental(spec, &p0, t_final, cfg)?;
    let k_nodes = fund.times.len();
    let full_steps = k_nodes - 1;

    let mut curve = Vec::with_capacity(k_nodes);
    let mut dets = Vec::with_capacity(k_nodes);
    let mut scale = 0.0f64;
    for k in 0..k_nodes {
        let (smin, smax) = min_max_singular(&fund.n[k]);
        curve.push((fund.times[k], smin));
        dets.push(fund.n[k].determinant());
        scale = scale.max(smax);
    }
    if scale <= 0.0 {
        return Err(MtwError::NonFinite {
            context: "N(t) vanished over the whole scan".into(),
        });
    }

    let ratio = |k: usize| curve[k].1 / scale;
    let mut candidates: Vec<usize> = Vec::new();
    for k in 1..k_nodes {
        let dip = ratio(k) < GRID_DETECT_RATIO
            && ratio(k) <= ratio(k - 1)
            && (k + 1 >= k_nodes || ratio(k) <= ratio(k + 1));
        let flip = k + 1 < k_nodes && dets[k] * dets[k + 1] < 0.0;
        if dip || flip {
            candidates.push(k);
        }
    }

    let mut first = None;
    let mut last_hi = f64::NEG_INFINITY;
    for &k in &candidates {
        let lo = fund.times[k - 1].max(last_hi);
        let hi = fund.times[(k + 1).min(k_nodes - 1)];
        if hi <= lo {
            continue;
        }
        last_hi = hi;
        let (t_star, smin_star) = refine_minimum(spec, &p0, lo, hi, full_steps, t_final, cfg)?;
        if smin_star / scale < jacobi::CONJ_TOL {
            first = Some(t_star);
            break;
        }
    }

    Ok(ConjugateScan {
        first_conjugate_time: first,
        min_singular_value_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle_harmonic::{ho_cost, ho_shoot, HarmonicSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn vec1(a: f64) -> DVector<f64> {
        DVector::from_element(1, a)
    }

    fn repulsive_1d() -> PotentialSpec {
        PotentialSpec::quadratic(-DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn free_shot_is_straight_line() {
        let spec = PotentialSpec::Zero;
        let x = DVector::zeros(2);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let starts = default_starts(&x, &y, 1.0, 0);
        let shot = shoot(&spec, &x, &y, 1.0, &cfg(), &starts).unwrap();
        assert!((shot.v0 - &y).norm() < 1e-10);
        assert!(shot.residual <= shoot_tol(&y));
        assert!(shot.multistart_agreement);
    }

    #[test]
    fn harmonic_shot_matches_closed_form() {
        let spec = repulsive_1d();
        let shot = shoot(
            &spec,
            &vec1(0.0),
            &vec1(1.0),
            1.0,
            &cfg(),
            &default_starts(&vec1(0.0), &vec1(1.0), 1.0, 0),
        )
        .unwrap();
        assert_abs_diff_eq!(shot.v0[0], 1.0 / 1.0f64.sinh(), epsilon = 1e-8);
        assert_abs_diff_eq!(shot.v0[0], 0.8509181282393216, epsilon = 1e-8);

        let shot_back = shoot(
            &spec,
            &vec1(1.0),
            &vec1(0.0),
            1.0,
            &cfg(),
            &default_starts(&vec1(1.0), &vec1(0.0), 1.0, 0),
        )
        .unwrap();
        assert_abs_diff_eq!(
            shot_back.v0[0],
            -1.0f64.cosh() / 1.0f64.sinh(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn free_cost_is_half_squared_distance_over_t() {
        let spec = PotentialSpec::Zero;
        let x = DVector::from_vec(vec![0.5, -1.0]);
        let y = DVector::from_vec(vec![-0.5, 1.0]);
        let c = cost(&spec, &x, &y, 2.0, &cfg()).unwrap();
        assert_abs_diff_eq!(c, (&x - &y).norm_squared() / 4.0, epsilon = 1e-10);
    }

    #[test]
    fn harmonic_cost_matches_closed_form() {
        let spec = repulsive_1d();
        let c = cost(&spec, &vec1(1.0), &vec1(0.0), 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(c, 1.0f64.cosh() / (2.0 * 1.0f64.sinh()), epsilon = 1e-7);
        assert_abs_diff_eq!(c, 0.6565176427496657, epsilon = 1e-7);
    }

    #[test]
    fn separable_cost_sums_components() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        let spec = PotentialSpec::quadratic(a).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let y = DVector::zeros(2);
        let c = cost(&spec, &x, &y, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(c, 0.6565176427496657 + 0.5, epsilon = 1e-7);
    }

    #[test]
    fn cost_symmetry_for_even_potentials() {
        let h = HarmonicSpec::random(2, 21).unwrap();
        let spec = h.to_potential().unwrap();
        let x = DVector::from_vec(vec![0.4, -0.3]);
        let y = DVector::from_vec(vec![-0.8, 0.2]);
        let c_xy = cost(&spec, &x, &y, 1.0, &cfg()).unwrap();
        let c_yx = cost(&spec, &y, &x, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(c_xy, c_yx, epsilon = 1e-9);
        // reflection symmetry: V even means c(-x, -y) = c(x, y)
        let c_refl = cost(&spec, &(-&x), &(-&y), 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(c_xy, c_refl, epsilon = 1e-9);
    }

    #[test]
    fn c_exponential_matches_flows() {
        let spec = PotentialSpec::Zero;
        let x = DVector::from_vec(vec![0.1, 0.2]);
        let v = DVector::from_vec(vec![1.0, -0.4]);
        let y = c_exponential(&spec, &x, &v, 1.0, &cfg()).unwrap();
        assert!((&y - (&x + &v)).norm() < 1e-12);

        let spec_h = repulsive_1d();
        let y_h = c_exponential(&spec_h, &vec1(0.0), &vec1(1.0), 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(y_h[0], 1.0f64.sinh(), epsilon = 1e-9);
    }

    #[test]
    fn shoot_and_c_exponential_round_trip() {
        let cfg = cfg();
        let quartic = PotentialSpec::black_box(
            |x: &DVector<f64>| {
                let z = 0.5 * x.norm_squared();
                1e-2 * z * z
            },
            1e-3,
        )
        .unwrap();
        let h = HarmonicSpec::random(2, 9).unwrap();
        let harmonic = h.to_potential().unwrap();
        let mut rng = sample_rng(42, 0);
        for i in 0..50 {
            let spec = if i % 2 == 0 { &quartic } else { &harmonic };
            let x = 0.8 * unit_vector(&mut rng, 2);
            let y = 0.8 * unit_vector(&mut rng, 2);
            let starts = default_starts(&x, &y, 1.0, 1);
            let shot = shoot(spec, &x, &y, 1.0, &cfg, &starts).unwrap();
            let back = c_exponential(spec, &x, &shot.v0, 1.0, &cfg).unwrap();
            assert!(
                (&back - &y).norm() <= 10.0 * shoot_tol(&y),
                "round trip off by {:.3e}",
                (&back - &y).norm()
            );
            // and the other composition: shoot to the c-exponential image
            let v = 0.5 * unit_vector(&mut rng, 2);
            let fwd = c_exponential(spec, &x, &v, 1.0, &cfg).unwrap();
            let again = shoot(spec, &x, &fwd, 1.0, &cfg, &default_starts(&x, &fwd, 1.0, 1)).unwrap();
            assert!((again.v0 - &v).norm() <= 1e-7);
        }
    }

    #[test]
    fn ambiguous_pair_is_detected() {
        // Pendulum V = -4 cos(x1): x=0 -> y=0 at T=1.1*pi is connected by the
        // rest solution and by a full libration, so the two starts disagree.
        let spec = PotentialSpec::black_box(|x: &DVector<f64>| -4.0 * x[0].cos(), 1e-4).unwrap();
        let t = 1.1 * PI;
        let starts = vec![vec1(0.1), vec1(2.0)];
        let err = shoot(&spec, &vec1(0.0), &vec1(0.0), t, &cfg(), &starts).unwrap_err();
        assert!(matches!(err, MtwError::Ambiguity { .. }));

        // each start alone converges to its own solution
        let near_rest = shoot(&spec, &vec1(0.0), &vec1(0.0), t, &cfg(), &[vec1(0.1)]).unwrap();
        assert!(near_rest.v0[0].abs() < 1e-8);
        let libration = shoot(&spec, &vec1(0.0), &vec1(0.0), t, &cfg(), &[vec1(2.0)]).unwrap();
        assert_abs_diff_eq!(libration.v0[0], 2.27496942889, epsilon = 1e-6);
    }

    #[test]
    fn hopeless_start_reports_no_convergence() {
        let spec = PotentialSpec::radial(&[0.0, 0.0, 1.0]).unwrap();
        let err = shoot(
            &spec,
            &DVector::zeros(2),
            &DVector::from_vec(vec![0.5, 0.0]),
            1.0,
            &cfg(),
            &[DVector::from_vec(vec![1e6, 0.0])],
        )
        .unwrap_err();
        assert!(matches!(err, MtwError::NoConvergence { .. }));
    }

    #[test]
    fn conjugate_scan_finds_pi_for_attractive_harmonic() {
        let spec = PotentialSpec::quadratic(DMatrix::identity(1, 1)).unwrap();
        let scan = conjugate_scan(&spec, &vec1(0.0), &vec1(0.5), 4.0, &cfg()).unwrap();
        let t = scan.first_conjugate_time.expect("conjugate point exists");
        assert_abs_diff_eq!(t, PI, epsilon = 1e-6);
        // curve tracks |sin t|
        for &(tk, s) in scan.min_singular_value_curve.iter().step_by(100) {
            assert_abs_diff_eq!(s, tk.sin().abs(), epsilon = 1e-7);
        }
    }

    #[test]
    fn conjugate_scan_handles_even_multiplicity() {
        // n = 2, A = +I: det N = sin^2 never changes sign, the dip is a touch.
        let spec = PotentialSpec::quadratic(DMatrix::identity(2, 2)).unwrap();
        let scan = conjugate_scan(
            &spec,
            &DVector::zeros(2),
            &DVector::from_vec(vec![0.5, -0.2]),
            4.0,
            &cfg(),
        )
        .unwrap();
        let t = scan.first_conjugate_time.expect("conjugate point exists");
        assert_abs_diff_eq!(t, PI, epsilon = 1e-6);
    }

    #[test]
    fn conjugate_scan_staggered_rates() {
        // A = diag(+1, +4): the faster component degenerates first at pi/2.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let spec = PotentialSpec::quadratic(a).unwrap();
        let scan = conjugate_scan(
            &spec,
            &DVector::zeros(2),
            &DVector::from_vec(vec![0.3, 0.3]),
            4.0,
            &cfg(),
        )
        .unwrap();
        let t = scan.first_conjugate_time.expect("conjugate point exists");
        assert_abs_diff_eq!(t, PI / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn no_conjugate_points_for_repulsive_or_free() {
        let scan_free = conjugate_scan(
            &PotentialSpec::Zero,
            &vec1(0.3),
            &vec1(1.0),
            5.0,
            &cfg(),
        )
        .unwrap();
        assert!(scan_free.first_conjugate_time.is_none());

        let spec = repulsive_1d();
        let scan = conjugate_scan(&spec, &vec1(0.2), &vec1(-0.4), 10.0, &cfg()).unwrap();
        assert!(scan.first_conjugate_time.is_none());
    }

    #[test]
    fn shoot_rejects_empty_and_mismatched_starts() {
        let spec = PotentialSpec::Zero;
        let x = DVector::zeros(2);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        assert!(shoot(&spec, &x, &y, 1.0, &cfg(), &[]).is_err());
        assert!(shoot(&spec, &x, &y, 1.0, &cfg(), &[vec1(1.0)]).is_err());
    }

    #[test]
    fn harmonic_shot_agrees_with_oracle_on_random_pairs() {
        let h = HarmonicSpec::random(3, 17).unwrap();
        let spec = h.to_potential().unwrap();
        let mut rng = sample_rng(17, 4);
        for _ in 0..10 {
            let x = unit_vector(&mut rng, 3);
            let y = unit_vector(&mut rng, 3);
            let shot = shoot(&spec, &x, &y, 1.0, &cfg(), &default_starts(&x, &y, 1.0, 0)).unwrap();
            let exact = ho_shoot(&h, &x, &y, 1.0).unwrap();
            assert!((&shot.v0 - &exact).norm() < 1e-8);
            let c = cost(&spec, &x, &y, 1.0, &cfg()).unwrap();
            assert_abs_diff_eq!(c, ho_cost(&h, 1.0, &x, &y).unwrap(), epsilon = 1e-7);
        }
    }
}
