//! Numerics for the regularity structure of optimal-transport costs induced
//! by mechanical actions L(x, v) = |v|^2 / 2 - V(x) on flat space.
//!
//! The cost between x and y is the least action over paths joining them in
//! unit time. This crate computes that cost by multiple shooting, propagates
//! Jacobi fields along extremals, estimates cross-curvature two independent
//! ways (a Jacobi-field route and a direct fourth-difference route), detects
//! conjugate points, and runs sampled sign checks for the weak and strong
//! curvature conditions on user-declared phase-space domains. A harmonic
//! closed-form oracle and a gentle-perturbation module back the numerics with
//! values computed by entirely separate code paths.

pub mod curvature;
pub mod dynamics;
pub mod error;
pub mod jacobi;
pub mod oracle_harmonic;
pub mod perturbation;
pub mod potentials;
pub mod report;
pub mod sampling;
pub mod shooting;

pub use curvature::{
    cross_curvature_direct, cross_curvature_jacobi, mtw_scan, CurvatureEstimate, CurvatureMethod,
    CurvatureSample, FdScheme, SampleStatus, ScanReport, Verdict, VerdictSet, COST_HORIZON,
};
pub use dynamics::{
    action, energy_drift, flow, IntegratorConfig, Method, PhasePoint, Trajectory,
};
pub use error::{MtwError, Result};
pub use jacobi::{
    flow_with_fundamental, jacobi_from_fundamental, jacobi_map, propagate_fundamental,
    FundamentalSolution, JacobiMap,
};
pub use oracle_harmonic::{ho_cost, ho_flow, ho_shoot, HarmonicSpec};
pub use perturbation::{
    perturb_response, perturbation_check, perturbation_integral, radial_condition_check,
    radial_integrand, small_eps_oracle, EpsRow, EpsSweep, PerturbationCheck, RadialCheck,
};
pub use potentials::{Poly, PotentialConfig, PotentialSpec, RadialProfile};
pub use sampling::PhaseDomain;
pub use shooting::{
    c_exponential, conjugate_scan, cost, default_starts, shoot, shoot_tol, ConjugateScan,
    ShootResult,
};
