//! Check dispatch, report assembly and output files.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gmt_core::area::default_schedule;
use gmt_core::verify::{
    acpart_identity, adj_degree_identity, grad_degree_identity, hypothesis_check, inverse_entries, Gap, IdentityReport,
};
use gmt_core::Error;
use serde::Serialize;

use crate::config::{CheckId, Plan};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

/// One unit of work: a check, restricted to one figure box for the
/// per-cube checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub check: CheckId,
    pub cube: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobError {
    pub check: CheckId,
    pub message: String,
    pub hypothesis: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub reports: Vec<IdentityReport>,
    pub errors: Vec<JobError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        let hypothesis = self.errors.iter().any(|e| e.hypothesis)
            || self.reports.iter().any(|r| r.theorem == CheckId::Hypothesis.as_str() && !r.pass);
        if hypothesis {
            EXIT_HYPOTHESIS
        } else if !self.errors.is_empty() || self.reports.iter().any(|r| !r.pass) {
            EXIT_CHECK_FAILED
        } else {
            EXIT_PASS
        }
    }
}

pub fn jobs(plan: &Plan) -> Vec<Job> {
    let mut out = Vec::new();
    for &check in &plan.checks {
        if check == CheckId::AdjugateDegree {
            out.extend((0..plan.figure.len()).map(|k| Job { check, cube: Some(k) }));
        } else {
            out.push(Job { check, cube: None });
        }
    }
    out
}

fn hypothesis_report(plan: &Plan) -> gmt_core::Result<IdentityReport> {
    let h = hypothesis_check(&plan.map, &plan.whole, plan.layers, &default_schedule());
    let antecedent = h.exponent_condition || h.smooth_condition;
    let area = h.area.as_ref().is_none_or(|a| a.holds);
    let met = antecedent as usize + area as usize;
    let gap = Gap::new(0, met as f64, 2.0, 2.0);
    let mut r = IdentityReport::new(CheckId::Hypothesis.as_str(), &plan.map.id, &[plan.whole], None, vec![gap], 0.0)?;
    r.schedule = default_schedule();
    r.extra.insert("exponent_condition".into(), h.exponent_condition as u8 as f64);
    r.extra.insert("smooth_condition".into(), h.smooth_condition as u8 as f64);
    r.extra.insert("c1_components".into(), h.c1_components as f64);
    if let Some(a) = &h.area {
        r.extra.insert("finite_area".into(), a.holds as u8 as f64);
        for ax in &a.axes {
            r.extra.insert(format!("finite_fraction_axis{}", ax.axis + 1), ax.finite_fraction);
            r.extra.insert(format!("bound_violations_axis{}", ax.axis + 1), ax.bound_violations as f64);
        }
    }
    Ok(r)
}

pub fn run_job(plan: &Plan, job: Job) -> gmt_core::Result<Vec<IdentityReport>> {
    let f = &plan.map;
    let res = &plan.resolutions;
    let mut reports = match job.check {
        CheckId::Inverse => inverse_entries(f, &plan.figure, &plan.entries, res)?,
        CheckId::AdjugateDegree => {
            let q = plan.figure[job.cube.unwrap_or(0)];
            plan.entries.iter().map(|&(i, j)| adj_degree_identity(f, &q, i, j, res)).collect::<gmt_core::Result<_>>()?
        }
        CheckId::GradientDegree => vec![grad_degree_identity(&f.component(2), &plan.figure, res)?],
        CheckId::AcPart => {
            let all = acpart_identity(f, &plan.whole, res)?;
            all.into_iter()
                .filter(|r| r.ij.is_some_and(|[i, j]| plan.entries.contains(&(i - 1, j - 1))))
                .collect()
        }
        CheckId::Hypothesis => vec![hypothesis_report(plan)?],
    };
    if let Some(&tol) = plan.tolerances.get(job.check.as_str()) {
        for r in &mut reports {
            r.tolerance = tol;
            r.pass = r.rel_gap <= tol;
        }
    }
    Ok(reports)
}

/// Runs every job on up to `workers` threads; results keep job order.
pub fn run_plan(plan: &Plan, workers: usize) -> Outcome {
    let jobs = jobs(plan);
    let slots: Vec<Mutex<Option<gmt_core::Result<Vec<IdentityReport>>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs.len() {
                    break;
                }
                let r = run_job(plan, jobs[k]);
                *slots[k].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
            });
        }
    });
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (job, slot) in jobs.iter().zip(slots) {
        match slot.into_inner().unwrap_or_else(|e| e.into_inner()) {
            Some(Ok(r)) => reports.extend(r),
            Some(Err(e)) => errors.push(JobError {
                check: job.check,
                message: e.to_string(),
                hypothesis: matches!(e, Error::Hypothesis(_)),
            }),
            None => errors.push(JobError { check: job.check, message: "worker did not finish".into(), hypothesis: false }),
        }
    }
    Outcome { reports, errors }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn report_json(reports: &[IdentityReport]) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    Ok(s)
}

/// `theorem,map,entry,gap,pass`, one row per report.
pub fn summary_csv(reports: &[IdentityReport]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["theorem", "map", "entry", "gap", "pass"])?;
    for r in reports {
        let entry = r.ij.map(|[i, j]| format!("{i}{j}")).unwrap_or_default();
        w.write_record([r.theorem.as_str(), r.map.as_str(), &entry, &format!("{:e}", r.rel_gap), if r.pass { "true" } else { "false" }])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json` and `summary.csv` into `dir`.
pub fn write_outputs(dir: &Path, reports: &[IdentityReport]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report_json(reports)?)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(reports)?)?;
    Ok(())
}
