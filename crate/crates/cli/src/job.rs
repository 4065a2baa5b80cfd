//! Job configuration, validation, and execution.
//!
//! A job is one TOML file naming a command plus the data it needs. `validate`
//! returns every problem it can find without running anything; `run` executes
//! the command inside a rayon pool sized by `workers`, writes the artifacts,
//! and returns the process exit code (0 completed, 1 error, 2 completed with
//! inconclusive verdicts).

use std::fs;
use std::path::{Path, PathBuf};

use mtw_core::curvature::{
    cross_curvature_direct, cross_curvature_jacobi, mtw_scan, CurvatureMethod, FdScheme, Verdict,
};
use mtw_core::dynamics::IntegratorConfig;
use mtw_core::error::{MtwError, Result as MtwResult};
use mtw_core::perturbation::{perturbation_check, radial_condition_check, small_eps_oracle};
use mtw_core::potentials::PotentialConfig;
use mtw_core::report;
use mtw_core::sampling::{sample_rng, uniform, unit_vector, PhaseDomain};
use mtw_core::shooting::{conjugate_scan, cost};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const COMMANDS: [&str; 8] = [
    "cost",
    "curvature",
    "scan",
    "conjugate",
    "perturb-check",
    "radial-check",
    "harmonic-verify",
    "eps-sweep",
];

/// Commands that draw seeded samples and therefore require an explicit seed.
const SAMPLING_COMMANDS: [&str; 4] = ["scan", "perturb-check", "radial-check", "harmonic-verify"];

/// |C| bound that harmonic-verify enforces.
pub const HARMONIC_VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// "box" or "ball".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Ball: bound on |x| + |v|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Box shorthand: coordinates of x range over [-x_bound, x_bound].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_hi: Option<Vec<f64>>,
}

impl DomainConfig {
    pub fn to_domain(&self) -> MtwResult<PhaseDomain> {
        match self.kind.as_str() {
            "ball" => {
                let dim = self
                    .dim
                    .ok_or_else(|| MtwError::Input("ball domain needs `dim`".into()))?;
                let radius = self
                    .radius
                    .ok_or_else(|| MtwError::Input("ball domain needs `radius`".into()))?;
                let d = PhaseDomain::NormSumBall { dim, radius };
                d.validate()?;
                Ok(d)
            }
            "box" => {
                let d = if let (Some(lo), Some(hi), Some(vlo), Some(vhi)) =
                    (&self.x_lo, &self.x_hi, &self.v_lo, &self.v_hi)
                {
                    PhaseDomain::Box {
                        x_lo: DVector::from_vec(lo.clone()),
                        x_hi: DVector::from_vec(hi.clone()),
                        v_lo: DVector::from_vec(vlo.clone()),
                        v_hi: DVector::from_vec(vhi.clone()),
                    }
                } else if let (Some(dim), Some(xb), Some(vb)) =
                    (self.dim, self.x_bound, self.v_bound)
                {
                    PhaseDomain::symmetric_box(dim, xb, vb)
                } else {
                    return Err(MtwError::Input(
                        "box domain needs either x_lo/x_hi/v_lo/v_hi or dim/x_bound/v_bound"
                            .into(),
                    ));
                };
                d.validate()?;
                Ok(d)
            }
            other => Err(MtwError::Input(format!(
                "unknown domain kind `{other}` (expected box|ball)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub orthogonal_only: bool,
    /// Verdict margin for scans; default 1e-8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_required: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    /// Cost horizon for `cost` (default 1) or scan window for `conjugate`
    /// (default 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Estimator for single-point `curvature`: "jacobi" (default) or "direct".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<CurvatureMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

pub fn load(path: &Path) -> Result<JobConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn needs_points(command: &str) -> &'static [&'static str] {
    match command {
        "cost" => &["x", "y"],
        "curvature" | "eps-sweep" => &["x", "u", "v", "w"],
        "conjugate" => &["x", "v"],
        _ => &[],
    }
}

fn point_field<'a>(points: &'a PointsConfig, name: &str) -> &'a Option<Vec<f64>> {
    match name {
        "x" => &points.x,
        "y" => &points.y,
        "u" => &points.u,
        "v" => &points.v,
        _ => &points.w,
    }
}

pub fn validate(cfg: &JobConfig) -> Vec<String> {
    let mut out = Vec::new();
    let command = cfg.command.as_str();
    if !COMMANDS.contains(&command) {
        out.push(format!(
            "command: unknown command `{command}` (expected one of {})",
            COMMANDS.join("|")
        ));
        return out;
    }

    let spec = match &cfg.potential {
        None => {
            out.push("potential: required".into());
            None
        }
        Some(p) => match p.to_spec() {
            Ok(s) => Some(s),
            Err(e) => {
                out.push(format!("potential: {e}"));
                None
            }
        },
    };
    let spec_dim = spec.as_ref().and_then(|s| s.dim());

    let sampling = SAMPLING_COMMANDS.contains(&command);
    if sampling {
        if cfg.seed.is_none() {
            out.push("seed: required for sampling commands (no entropy-source default)".into());
        }
        match cfg.n_samples {
            None => out.push("n_samples: required for sampling commands".into()),
            Some(0) => out.push("n_samples: must be at least 1".into()),
            Some(_) => {}
        }
    }

    if matches!(command, "perturb-check" | "radial-check") {
        match cfg.c_required {
            None => out.push("c_required: required".into()),
            Some(c) if !(c.is_finite() && c > 0.0) => {
                out.push(format!("c_required: must be positive, got {c}"))
            }
            _ => {}
        }
    }

    if command == "radial-check" {
        if let Some(p) = &cfg.potential {
            if p.kind != "radial" {
                out.push("potential: radial-check needs kind = \"radial\"".into());
            }
            if p.eps.is_some() {
                out.push("potential: radial-check reads raw coefficients; fold eps into them".into());
            }
        }
    }
    if command == "harmonic-verify" {
        if let Some(p) = &cfg.potential {
            if p.kind != "quadratic" && p.kind != "zero" {
                out.push("potential: harmonic-verify applies to quadratic (or zero) potentials".into());
            }
        }
        if cfg.domain.is_none() && spec_dim.is_none() {
            out.push("domain: required when the potential does not fix a dimension".into());
        }
    }

    let needs_domain = matches!(command, "scan" | "perturb-check" | "radial-check");
    if needs_domain && cfg.domain.is_none() {
        out.push("domain: required".into());
    }
    if let Some(d) = &cfg.domain {
        match d.to_domain() {
            Ok(dom) => {
                if let Some(n) = spec_dim {
                    if dom.dim() != n {
                        out.push(format!(
                            "domain: dimension {} does not match the potential ({n})",
                            dom.dim()
                        ));
                    }
                }
            }
            Err(e) => out.push(format!("domain: {e}")),
        }
    }

    let required = needs_points(command);
    if !required.is_empty() {
        let points = cfg.points.clone().unwrap_or_default();
        if cfg.points.is_none() {
            out.push(format!("points: required ({})", required.join(", ")));
        }
        let mut dims: Vec<(String, usize)> = Vec::new();
        for name in required {
            match point_field(&points, name) {
                Some(vals) => dims.push((name.to_string(), vals.len())),
                None => out.push(format!("points.{name}: required for {command}")),
            }
        }
        if let Some((_, first)) = dims.first() {
            for (name, len) in &dims {
                if len != first {
                    out.push(format!("points.{name}: dimension {len} does not match {first}"));
                }
            }
            if let Some(n) = spec_dim {
                if *first != n {
                    out.push(format!(
                        "points: dimension {first} does not match the potential ({n})"
                    ));
                }
            }
        }
    }

    if command == "eps-sweep" {
        match &cfg.eps_list {
            None => out.push("eps_list: required".into()),
            Some(list) if list.is_empty() => out.push("eps_list: must not be empty".into()),
            Some(list) => {
                if list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                    out.push("eps_list: values must be positive".into());
                }
                if list.windows(2).any(|p| p[1] >= p[0]) {
                    out.push("eps_list: must be strictly decreasing".into());
                }
            }
        }
    }

    if let Some(m) = cfg.margin {
        if !(m.is_finite() && m > 0.0) {
            out.push(format!("margin: must be positive, got {m}"));
        }
    }
    if let Some(t) = cfg.t_final {
        if !(t.is_finite() && t > 0.0) {
            out.push(format!("t_final: must be positive, got {t}"));
        }
    }
    if let Some(fd) = &cfg.fd {
        if let Err(e) = fd.validate() {
            out.push(format!("fd: {e}"));
        }
    }
    if let Some(integ) = &cfg.integrator {
        if let Err(e) = integ.validate() {
            out.push(format!("integrator: {e}"));
        }
    }
    if cfg.workers == Some(0) {
        out.push("workers: must be at least 1".into());
    }
    if let Some(output) = &cfg.output {
        for (field, path) in [("csv", &output.csv), ("summary", &output.summary)] {
            if let Some(p) = path {
                let parent = p.parent().filter(|q| !q.as_os_str().is_empty());
                if let Some(dir) = parent {
                    if !dir.is_dir() {
                        out.push(format!(
                            "output.{field}: directory {} does not exist",
                            dir.display()
                        ));
                    }
                }
            }
        }
    }

    out
}

struct Artifacts {
    csv: Option<String>,
    summary: String,
    condition: Option<&'static str>,
    exit: i32,
}

fn dvec(vals: &[f64]) -> DVector<f64> {
    DVector::from_vec(vals.to_vec())
}

fn kv_csv(rows: &[(&str, f64)]) -> String {
    let mut out = String::from(report::CSV_HEADER);
    out.push_str("\nquantity,value\n");
    for (name, value) in rows {
        out.push_str(name);
        out.push(',');
        out.push_str(&report::fmt_float(*value));
        out.push('\n');
    }
    out
}

fn dispatch(cfg: &JobConfig) -> MtwResult<Artifacts> {
    let spec = cfg
        .potential
        .as_ref()
        .expect("validated")
        .to_spec()?;
    let integrator = cfg.integrator.unwrap_or_default();
    let points = cfg.points.clone().unwrap_or_default();
    let get = |name: &str| -> DVector<f64> {
        dvec(point_field(&points, name).as_ref().expect("validated"))
    };

    match cfg.command.as_str() {
        "cost" => {
            let (x, y) = (get("x"), get("y"));
            let t = cfg.t_final.unwrap_or(1.0);
            let value = cost(&spec, &x, &y, t, &integrator)?;
            Ok(Artifacts {
                csv: Some(kv_csv(&[("cost", value), ("t_final", t)])),
                summary: format!("cost = {value}\n"),
                condition: None,
                exit: 0,
            })
        }
        "curvature" => {
            let (x, u, v, w) = (get("x"), get("u"), get("v"), get("w"));
            let fd = cfg
                .fd
                .clone()
                .unwrap_or_else(|| FdScheme::default_for(&v, &w));
            let method = cfg.method.unwrap_or(CurvatureMethod::Jacobi);
            let est = match method {
                CurvatureMethod::Jacobi => {
                    cross_curvature_jacobi(&spec, &x, &u, &v, &w, &fd, &integrator)?
                }
                CurvatureMethod::Direct => {
                    cross_curvature_direct(&spec, &x, &u, &v, &w, &fd, &integrator)?
                }
            };
            Ok(Artifacts {
                csv: Some(kv_csv(&[
                    ("cross_curvature", est.value),
                    ("error_indicator", est.error_indicator),
                    ("condition_number", est.condition_number),
                ])),
                summary: format!(
                    "cross-curvature ({method}) = {}\nerror indicator = {:.3e}\ncondition number = {:.3e}\n",
                    report::fmt_float(est.value),
                    est.error_indicator,
                    est.condition_number
                ),
                condition: None,
                exit: 0,
            })
        }
        "scan" => {
            let domain = cfg.domain.as_ref().expect("validated").to_domain()?;
            let margin = cfg.margin.unwrap_or(1e-8);
            let report = mtw_scan(
                &spec,
                &domain,
                cfg.n_samples.expect("validated"),
                cfg.orthogonal_only,
                margin,
                cfg.seed.expect("validated"),
                cfg.fd.as_ref(),
                &integrator,
            )?;
            let v = &report.verdicts;
            let inconclusive = [v.a3w, v.a3s, v.b3w, v.b3s]
                .iter()
                .any(|x| *x == Verdict::Inconclusive);
            Ok(Artifacts {
                csv: Some(report::scan_csv(&report)),
                summary: report::scan_summary(&report),
                condition: Some("mtw-scan"),
                exit: if inconclusive { 2 } else { 0 },
            })
        }
        "conjugate" => {
            let (x, v) = (get("x"), get("v"));
            let window = cfg.t_final.unwrap_or(10.0);
            let scan = conjugate_scan(&spec, &x, &v, window, &integrator)?;
            Ok(Artifacts {
                csv: Some(report::conjugate_csv(&scan)),
                summary: report::conjugate_summary(&scan),
                condition: None,
                exit: 0,
            })
        }
        "perturb-check" => {
            let domain = cfg.domain.as_ref().expect("validated").to_domain()?;
            let check = perturbation_check(
                &spec,
                &domain,
                cfg.c_required.expect("validated"),
                cfg.n_samples.expect("validated"),
                cfg.orthogonal_only,
                cfg.seed.expect("validated"),
            )?;
            Ok(Artifacts {
                csv: Some(kv_csv(&[
                    ("min_integral", check.min_integral),
                    ("c_required", check.c_required),
                    ("margin", check.margin),
                ])),
                summary: report::perturbation_summary(&check),
                condition: Some("perturbation-positivity"),
                exit: 0,
            })
        }
        "radial-check" => {
            let coeffs = cfg
                .potential
                .as_ref()
                .and_then(|p| p.coeffs.clone())
                .expect("validated");
            let domain = cfg.domain.as_ref().expect("validated").to_domain()?;
            let check = radial_condition_check(
                &coeffs,
                &domain,
                cfg.c_required.expect("validated"),
                cfg.n_samples.expect("validated"),
                cfg.seed.expect("validated"),
            )?;
            Ok(Artifacts {
                csv: Some(kv_csv(&[
                    ("min_f2", check.min_f2),
                    ("min_f3", check.min_f3),
                    ("min_f4", check.min_f4),
                    ("c_required", check.c_required),
                ])),
                summary: report::radial_summary(&check),
                condition: Some("radial-criteria"),
                exit: 0,
            })
        }
        "harmonic-verify" => {
            let seed = cfg.seed.expect("validated");
            let n_samples = cfg.n_samples.expect("validated");
            let domain = match &cfg.domain {
                Some(d) => Some(d.to_domain()?),
                None => None,
            };
            let dim = domain
                .as_ref()
                .map(|d| d.dim())
                .or_else(|| spec.dim())
                .expect("validated");
            let values: MtwResult<Vec<f64>> = (0..n_samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sample_rng(seed, i as u64);
                    let (x, v) = match &domain {
                        Some(d) => d.sample(&mut rng),
                        None => {
                            let x = uniform(&mut rng) * unit_vector(&mut rng, dim);
                            let v = uniform(&mut rng) * unit_vector(&mut rng, dim);
                            (x, v)
                        }
                    };
                    let u = unit_vector(&mut rng, dim);
                    let w = unit_vector(&mut rng, dim);
                    let fd = FdScheme::default_for(&v, &w);
                    let est = cross_curvature_jacobi(&spec, &x, &u, &v, &w, &fd, &integrator)?;
                    Ok(est.value)
                })
                .collect();
            let values = values?;
            let max_abs = values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let mut csv = String::from(report::CSV_HEADER);
            csv.push_str("\nindex,cross_curvature\n");
            for (i, value) in values.iter().enumerate() {
                csv.push_str(&format!("{i},{}\n", report::fmt_float(*value)));
            }
            let pass = max_abs <= HARMONIC_VERIFY_TOL;
            let relation = if pass { "<=" } else { ">" };
            Ok(Artifacts {
                csv: Some(csv),
                summary: format!(
                    "max |C| = {max_abs:.3e} {relation} {HARMONIC_VERIFY_TOL:.0e} over {n_samples} samples (seed {seed})\n"
                ),
                condition: Some("harmonic-vanishing"),
                exit: if pass { 0 } else { 1 },
            })
        }
        "eps-sweep" => {
            let (x, u, v, w) = (get("x"), get("u"), get("v"), get("w"));
            let fd = cfg
                .fd
                .clone()
                .unwrap_or_else(|| FdScheme::default_for(&v, &w));
            let eps_list = cfg.eps_list.as_ref().expect("validated");
            let sweep = small_eps_oracle(&spec, eps_list, &x, &u, &v, &w, &fd, &integrator)?;
            Ok(Artifacts {
                csv: Some(report::eps_sweep_csv(&sweep)),
                summary: report::eps_sweep_summary(&sweep),
                condition: None,
                exit: 0,
            })
        }
        other => Err(MtwError::Input(format!("unknown command `{other}`"))),
    }
}

pub fn run(cfg: &JobConfig) -> Result<i32, String> {
    let diagnostics = validate(cfg);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("{d}");
        }
        return Ok(1);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| format!("worker pool: {e}"))?;
    let artifacts = match pool.install(|| dispatch(cfg)) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };

    if let Some(csv) = &artifacts.csv {
        if let Some(path) = cfg.output.as_ref().and_then(|o| o.csv.as_ref()) {
            let mut comments = Vec::new();
            if let Some(tag) = artifacts.condition {
                comments.push(format!("condition: {tag}"));
            }
            let echo = toml::to_string(cfg).map_err(|e| format!("config echo: {e}"))?;
            comments.extend(echo.lines().map(str::to_string));
            let tagged = report::with_comments(csv, &comments);
            fs::write(path, tagged)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
    }
    if let Some(path) = cfg.output.as_ref().and_then(|o| o.summary.as_ref()) {
        fs::write(path, &artifacts.summary)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    print!("{}", artifacts.summary);
    Ok(artifacts.exit)
}
