//! Deterministic text output: CSV tables and one-line-per-fact summaries.
//!
//! Every float is printed with `{:.17e}` so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;

use crate::curvature::{SampleStatus, ScanReport, Verdict};
use crate::dynamics::Trajectory;
use crate::perturbation::{EpsSweep, PerturbationCheck, RadialCheck};
use crate::shooting::ConjugateScan;

pub const CSV_HEADER: &str = "# mtw-kit csv v1";

pub fn fmt_float(x: f64) -> String {
    format!("{x:.17e}")
}

/// Insert extra `# `-prefixed comment lines right after the version header.
pub fn with_comments(csv: &str, comments: &[String]) -> String {
    if comments.is_empty() {
        return csv.to_string();
    }
    let mut out = String::new();
    let mut lines = csv.lines();
    if let Some(first) = lines.next() {
        out.push_str(first);
        out.push('\n');
    }
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.states[0].x.len();
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str("t");
    for i in 0..dim {
        let _ = write!(out, ",x{i}");
    }
    for i in 0..dim {
        let _ = write!(out, ",v{i}");
    }
    out.push_str(",energy\n");
    for (k, state) in traj.states.iter().enumerate() {
        out.push_str(&fmt_float(traj.times[k]));
        for c in state.x.iter().chain(state.v.iter()) {
            out.push(',');
            out.push_str(&fmt_float(*c));
        }
        out.push(',');
        out.push_str(&fmt_float(traj.energies[k]));
        out.push('\n');
    }
    out
}

pub fn scan_csv(report: &ScanReport) -> String {
    let dim = report.samples.iter().find_map(|s| match s {
        SampleStatus::Computed(c) => Some(c.x.len()),
        SampleStatus::Excluded { .. } => None,
    });
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str("index,status,method,orthogonal,value,condition_number");
    if let Some(n) = dim {
        for label in ["x", "u", "v", "w"] {
            for i in 0..n {
                let _ = write!(out, ",{label}{i}");
            }
        }
    }
    out.push_str(",reason\n");
    for (idx, status) in report.samples.iter().enumerate() {
        match status {
            SampleStatus::Computed(s) => {
                let _ = write!(
                    out,
                    "{idx},computed,{},{},{},{}",
                    s.method,
                    s.orthogonal,
                    fmt_float(s.value),
                    fmt_float(s.condition_number)
                );
                for c in s.x.iter().chain(s.u.iter()).chain(s.v.iter()).chain(s.w.iter()) {
                    out.push(',');
                    out.push_str(&fmt_float(*c));
                }
                out.push_str(",\n");
            }
            SampleStatus::Excluded { reason } => {
                let _ = write!(out, "{idx},excluded,,,,");
                if let Some(n) = dim {
                    for _ in 0..4 * n {
                        out.push(',');
                    }
                }
                let _ = writeln!(out, ",{}", reason.replace(',', ";"));
            }
        }
    }
    out
}

fn verdict_line(name: &str, verdict: Verdict, detail: &str, report: &ScanReport) -> String {
    format!(
        "{name}: {verdict} ({detail}, margin delta = {:.3e}, excluded {}/{})",
        report.margin, report.excluded, report.n_samples
    )
}

pub fn scan_summary(report: &ScanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scan: {} samples, {} excluded, seed {}, orthogonal_only = {}",
        report.n_samples, report.excluded, report.seed, report.orthogonal_only
    );
    let min_mtw = report
        .min_mtw
        .map(fmt_float)
        .unwrap_or_else(|| "n/a".into());
    let min_cross = report
        .min_cross
        .map(fmt_float)
        .unwrap_or_else(|| "n/a".into());
    let _ = writeln!(out, "min mtw (orthogonal pairs): {min_mtw}");
    let _ = writeln!(out, "min cross (all pairs): {min_cross}");
    if let Some(s) = report.argmin_mtw_sample() {
        let _ = writeln!(
            out,
            "argmin mtw at x = {:?}, u = {:?}, v = {:?}, w = {:?}",
            s.x.as_slice(),
            s.u.as_slice(),
            s.v.as_slice(),
            s.w.as_slice()
        );
    }
    let v = &report.verdicts;
    let _ = writeln!(
        out,
        "{}",
        verdict_line("a3w", v.a3w, &format!("min mtw = {min_mtw} vs -delta"), report)
    );
    let _ = writeln!(
        out,
        "{}",
        verdict_line("a3s", v.a3s, &format!("min mtw = {min_mtw} vs +/-delta"), report)
    );
    let _ = writeln!(
        out,
        "{}",
        verdict_line("b3w", v.b3w, &format!("min cross = {min_cross} vs -delta"), report)
    );
    let _ = writeln!(
        out,
        "{}",
        verdict_line("b3s", v.b3s, &format!("min cross = {min_cross} vs +/-delta"), report)
    );
    out
}

pub fn conjugate_csv(scan: &ConjugateScan) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str("t,sigma_min\n");
    for (t, s) in &scan.min_singular_value_curve {
        let _ = writeln!(out, "{},{}", fmt_float(*t), fmt_float(*s));
    }
    out
}

pub fn conjugate_summary(scan: &ConjugateScan) -> String {
    match scan.first_conjugate_time {
        Some(t) => format!("first conjugate time: {}\n", fmt_float(t)),
        None => "first conjugate time: none in scanned window\n".to_string(),
    }
}

pub fn eps_sweep_csv(sweep: &EpsSweep) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str("eps,c_over_eps,rel_gap\n");
    for row in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_float(row.eps),
            fmt_float(row.c_over_eps),
            fmt_float(row.rel_gap)
        );
    }
    out
}

pub fn eps_sweep_summary(sweep: &EpsSweep) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "perturbation limit: {}", fmt_float(sweep.limit));
    if let Some(x) = sweep.extrapolated {
        let _ = writeln!(out, "extrapolated limit from sweep: {}", fmt_float(x));
    }
    if let Some(last) = sweep.rows.last() {
        let _ = writeln!(
            out,
            "smallest eps {:.3e}: C/eps = {}, rel gap = {:.3e}",
            last.eps,
            fmt_float(last.c_over_eps),
            last.rel_gap
        );
    }
    out
}

pub fn perturbation_summary(check: &PerturbationCheck) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "perturbation check on {}: {} samples, seed {}, orthogonal_only = {}",
        check.domain.describe(),
        check.n_samples,
        check.seed,
        check.orthogonal_only
    );
    let _ = writeln!(
        out,
        "min integral = {} vs required C = {:.3e}",
        fmt_float(check.min_integral),
        check.c_required
    );
    let _ = writeln!(
        out,
        "verdict: {} (margin = {:.3e})",
        check.verdict, check.margin
    );
    out
}

pub fn radial_summary(check: &RadialCheck) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "radial criteria for f with coefficients {:?} on {}: {} samples, seed {}",
        check.f_coeffs,
        check.domain.describe(),
        check.n_samples,
        check.seed
    );
    let _ = writeln!(
        out,
        "min f'' = {} (required >= {:.3e}), min f''' = {}, min f'''' = {}",
        fmt_float(check.min_f2),
        check.c_required,
        fmt_float(check.min_f3),
        fmt_float(check.min_f4)
    );
    let _ = writeln!(out, "verdict: {}", check.verdict);
    out
}
