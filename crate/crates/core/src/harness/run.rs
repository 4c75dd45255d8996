use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::checks::{couple_check, oracle_checks, CheckRow};
use super::output::{csv_document, json_document, write_atomic, OutputHeader};
use super::sharpness::{sharpness_scan, SharpnessSettings};
use super::spec::{Experiment, ExperimentSpec};
use crate::ddcp::{
    solve_stationary_multistart, solve_trajectory, write_fixed_points_csv, DensityLaw, StationarySolveOptions,
    TrajectoryOptions,
};
use crate::dynamics::{stationary_density, Engine, StationaryOptions};
use crate::error::{Error, Result};
use crate::graphical::SnapshotPlan;
use crate::lattice::{Configuration, RateSet, SiteState};
use crate::percolation::{
    check_envelope, crossing_sample, finite_size_check, h_perc_scan, histogram_json, label_clusters,
    tail_estimate, write_scan_csv, write_tail_csv, ClusterReport, CrossingSample, FiniteSizeOptions,
    ScanSettings, TailOptions,
};
use crate::rng;

/// What a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Outcome of experiments that check a property; `None` otherwise.
    pub passed: Option<bool>,
    pub summary: Value,
}

struct Artifacts {
    csv: Vec<u8>,
    json: Value,
    passed: Option<bool>,
    summary: Value,
}

fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn rates(spec: &ExperimentSpec) -> Result<RateSet> {
    spec.rates
        .ok_or_else(|| Error::InvalidSpec(format!("{} needs rates", spec.experiment.name())))
}

fn law(spec: &ExperimentSpec) -> Result<&DensityLaw> {
    spec.law
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec(format!("{} needs a law", spec.experiment.name())))
}

/// Per replica, the observations at every snapshot time of a Gillespie run
/// started all-occupied.
fn snapshots<T: Send, F>(spec: &ExperimentSpec, rates: RateSet, observe: F) -> Result<Vec<T>>
where
    F: Fn(&Configuration) -> Result<T> + Sync,
{
    let times = spec.snapshot_times();
    let per: Vec<Result<Vec<T>>> = (0..spec.replicas)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::child(spec.master_seed, i as u64);
            let mut e = Engine::new(Configuration::uniform(spec.geometry, SiteState::Occupied), rates)?;
            times
                .iter()
                .map(|&t| {
                    e.advance(t, &mut r);
                    observe(e.config())
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for p in per {
        out.extend(p?);
    }
    Ok(out)
}

fn stationary(spec: &ExperimentSpec) -> Result<Artifacts> {
    let rates = rates(spec)?;
    let opts = StationaryOptions {
        batches: spec.options.batches,
        ..StationaryOptions::new(spec.burn_in, spec.horizon - spec.burn_in)
    };
    let est: Vec<_> = (0..spec.replicas)
        .into_par_iter()
        .map(|i| stationary_density(&rates, &spec.geometry, &opts, &mut rng::child(spec.master_seed, i as u64)))
        .collect::<Result<_>>()?;
    let r = est.len() as f64;
    let rho = est.iter().map(|e| e.rho).sum::<f64>() / r;
    let std_err = est.iter().map(|e| e.std_err.powi(2)).sum::<f64>().sqrt() / r;
    let mut rows: Vec<(String, f64, f64)> = est
        .iter()
        .enumerate()
        .map(|(i, e)| (i.to_string(), e.rho, e.std_err))
        .collect();
    rows.push(("pooled".into(), rho, std_err));
    let summary = json!({ "rho": rho, "std_err": std_err });
    Ok(Artifacts {
        csv: csv_bytes(&["replica", "rho", "std_err"], &rows)?,
        json: json!({ "replicas": est, "pooled": summary }),
        passed: None,
        summary,
    })
}

fn tails(spec: &ExperimentSpec) -> Result<Artifacts> {
    let reports: Vec<ClusterReport> = snapshots(spec, rates(spec)?, |c| Ok(label_clusters(c).without_labels()))?;
    let opts = TailOptions {
        all_origins: spec.options.all_origins,
        ..TailOptions::default()
    };
    let est = tail_estimate(&reports, &spec.options.n_grid, &opts)?;
    let mut csv = Vec::new();
    write_tail_csv(&mut csv, &est)?;
    let hist: Value = serde_json::from_str(&histogram_json(&reports)?)?;
    let summary = json!({
        "classification": est.classification,
        "degenerate": est.degenerate,
        "fit": est.fit,
        "trials": est.trials,
    });
    Ok(Artifacts {
        csv,
        json: json!({ "estimate": est, "histogram": hist }),
        passed: None,
        summary,
    })
}

fn crossings(spec: &ExperimentSpec) -> Result<Artifacts> {
    let n_list = spec.options.n_list.clone();
    let samples: Vec<Vec<CrossingSample>> = snapshots(spec, rates(spec)?, |c| {
        n_list.iter().map(|&n| crossing_sample(c, n)).collect()
    })?;
    let reports = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let xs: Vec<CrossingSample> = samples.iter().map(|s| s[k]).collect();
            finite_size_check(&xs, n, spec.options.eps_hat, &FiniteSizeOptions::default())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = reports
        .iter()
        .map(|r| {
            (
                r.n,
                r.samples,
                r.vertical_count,
                r.horizontal_count,
                r.vertical_ci.0,
                r.vertical_ci.1,
                r.horizontal_ci.0,
                r.horizontal_ci.1,
                format!("{:?}", r.decision),
            )
        })
        .collect();
    let header = ["n", "samples", "vertical", "horizontal", "v_lo", "v_hi", "h_lo", "h_hi", "decision"];
    Ok(Artifacts {
        csv: csv_bytes(&header, &rows)?,
        json: json!({ "reports": reports }),
        passed: None,
        summary: json!({ "decisions": reports.iter().map(|r| r.decision).collect::<Vec<_>>() }),
    })
}

fn plan(spec: &ExperimentSpec) -> SnapshotPlan {
    SnapshotPlan {
        burn_in: spec.burn_in,
        spacing: spec.sample_dt,
        count: spec.snapshot_times().len(),
    }
}

fn scan(spec: &ExperimentSpec) -> Result<Artifacts> {
    let o = &spec.options;
    if let Some(qs) = &spec.q_parameterization {
        let settings = SharpnessSettings {
            plan: plan(spec),
            replicas: spec.replicas,
            eps_hat: o.eps_hat,
            n_grid: o.n_grid.clone(),
            tail: TailOptions {
                all_origins: o.all_origins,
                ..TailOptions::default()
            },
            check: FiniteSizeOptions::default(),
        };
        let report = sharpness_scan(
            &qs.parameterization()?,
            &qs.q_grid,
            &spec.geometry,
            &o.n_list,
            &settings,
            spec.master_seed,
        )?;
        let mut rows = Vec::new();
        for r in &report.rows {
            for c in &r.checks {
                rows.push((
                    r.q,
                    r.density,
                    format!("{:?}", r.tail.classification),
                    r.tail.fit.map(|f| f.rate),
                    r.tail.fit.map(|f| f.r_squared),
                    c.n,
                    format!("{:?}", c.decision),
                    c.vertical_count,
                    c.horizontal_count,
                ));
            }
        }
        let header = ["q", "density", "tail", "rate", "r_squared", "n", "decision", "vertical", "horizontal"];
        let summary = json!({
            "consistent": report.consistent,
            "inversions": report.inversions.len(),
        });
        Ok(Artifacts {
            csv: csv_bytes(&header, &rows)?,
            passed: Some(report.consistent),
            json: serde_json::to_value(&report)?,
            summary,
        })
    } else {
        let settings = ScanSettings {
            geometry: spec.geometry,
            n: o.n_list[0],
            eps_hat: o.eps_hat,
            bisection_tol: o.bisection_tol,
            h_max: o.h_max,
            plan: plan(spec),
            replicas: spec.replicas,
            seed: spec.master_seed,
            check: FiniteSizeOptions::default(),
        };
        let entries = h_perc_scan(&rates(spec)?, &o.lambda_grid, &settings)?;
        let envelope = check_envelope(&entries);
        let mut csv = Vec::new();
        write_scan_csv(&mut csv, &entries, settings.n, settings.eps_hat)?;
        Ok(Artifacts {
            csv,
            passed: Some(envelope.ok),
            summary: json!({ "envelope_ok": envelope.ok, "flagged": envelope.flagged }),
            json: json!({ "entries": entries, "envelope": envelope }),
        })
    }
}

fn ddcp_trajectory(spec: &ExperimentSpec) -> Result<Artifacts> {
    let o = &spec.options;
    let opts = TrajectoryOptions {
        horizon: spec.horizon,
        dt_grid: o.dt_grid,
        replicas: spec.replicas,
        tol: o.tol,
        max_sweeps: o.max_sweeps,
        initial_window: o.initial_window,
    };
    let sol = solve_trajectory(law(spec)?, &rates(spec)?, &o.initial, &spec.geometry, &opts, spec.master_seed)?;
    let rows: Vec<_> = (0..sol.rho.len())
        .map(|c| (c, c as f64 * sol.grid_dt, sol.rho[c], sol.rho_ci[c], sol.lambda[c], sol.h[c]))
        .collect();
    let summary = json!({
        "converged": sol.converged,
        "residual": sol.residual,
        "sweeps": sol.sweeps,
        "clamped": sol.clamped,
    });
    Ok(Artifacts {
        csv: csv_bytes(&["cell", "t", "rho", "rho_ci", "lambda", "h"], &rows)?,
        json: serde_json::to_value(&sol)?,
        passed: None,
        summary,
    })
}

fn ddcp_stationary(spec: &ExperimentSpec) -> Result<Artifacts> {
    let o = &spec.options;
    let law = law(spec)?;
    let fixed = rates(spec)?;
    let starts = if o.starts.is_empty() {
        let v = law.eval(0.5)?;
        vec![(v.lambda, v.h)]
    } else {
        o.starts.clone()
    };
    let opts = StationarySolveOptions {
        damping: o.damping,
        tol: o.tol,
        max_iters: o.max_iters,
        ..StationarySolveOptions::new(StationaryOptions {
            batches: o.batches,
            ..StationaryOptions::new(spec.burn_in, spec.horizon - spec.burn_in)
        })
    };
    let points = solve_stationary_multistart(law, &fixed, &spec.geometry, &starts, &opts, spec.master_seed)?;
    let mut csv = Vec::new();
    write_fixed_points_csv(&mut csv, &fixed, &points)?;
    let summary = json!({
        "fixed_points": points
            .iter()
            .map(|p| json!({ "lambda": p.lambda_star, "h": p.h_star, "rho": p.rho_star, "converged": p.converged }))
            .collect::<Vec<_>>(),
    });
    Ok(Artifacts {
        csv,
        json: json!({ "points": points }),
        passed: None,
        summary,
    })
}

fn couple(spec: &ExperimentSpec) -> Result<Artifacts> {
    let qs = spec
        .q_parameterization
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("couple_check needs q_parameterization".into()))?;
    let runs = couple_check(
        &qs.parameterization()?,
        &spec.q_pairs(),
        &spec.geometry,
        spec.horizon,
        spec.replicas,
        spec.master_seed,
    )?;
    let violations = runs.iter().filter(|r| !r.check.ordered).count();
    let rows: Vec<_> = runs
        .iter()
        .map(|r| {
            (
                r.replica,
                r.q_low,
                r.q_high,
                r.check.ordered,
                r.check.events,
                r.check.first_violation.map(|v| v.site),
                r.check.first_violation.map(|v| v.time),
            )
        })
        .collect();
    let header = ["replica", "q_low", "q_high", "ordered", "events", "violation_site", "violation_time"];
    Ok(Artifacts {
        csv: csv_bytes(&header, &rows)?,
        json: json!({ "runs": runs }),
        passed: Some(violations == 0),
        summary: json!({ "runs": runs.len(), "violations": violations }),
    })
}

fn check_table(rows: Vec<CheckRow>) -> Result<Artifacts> {
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(Artifacts {
        csv: csv_bytes(&["check", "case", "value", "tolerance", "pass"], &rows)?,
        passed: Some(failed == 0),
        summary: json!({ "checks": rows.len(), "failed": failed }),
        json: json!({ "rows": rows }),
    })
}

fn oracle(spec: &ExperimentSpec) -> Result<Artifacts> {
    check_table(oracle_checks(&rates(spec)?, &spec.geometry, &spec.options.oracle_times)?)
}

/// Validates `spec`, runs it and writes `<dir>/<csv>` and `<dir>/<json>`,
/// each headed by the spec hash and master seed.
///
/// Invalid specs give [`Error::InvalidSpec`] before anything runs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    let warnings = spec.validate().into_result()?;
    let a = match spec.experiment {
        Experiment::Stationary => stationary(spec)?,
        Experiment::Tails => tails(spec)?,
        Experiment::Crossings => crossings(spec)?,
        Experiment::Scan => scan(spec)?,
        Experiment::DdcpTrajectory => ddcp_trajectory(spec)?,
        Experiment::DdcpStationary => ddcp_stationary(spec)?,
        Experiment::CoupleCheck => couple(spec)?,
        Experiment::OracleCheck => oracle(spec)?,
    };
    let header = OutputHeader::new(spec);
    let csv_path = spec.outputs.dir.join(spec.csv_name());
    let json_path = spec.outputs.dir.join(spec.json_name());
    write_atomic(&csv_path, &csv_document(&header, &a.csv))?;
    let doc = json_document(&header, json!({ "spec": spec.provenance(), "passed": a.passed, "result": a.json }))?;
    write_atomic(&json_path, doc.as_bytes())?;
    Ok(RunReport {
        experiment: spec.experiment,
        files: vec![csv_path, json_path],
        warnings,
        passed: a.passed,
        summary: a.summary,
    })
}

/// The default oracle pass/fail table as CSV with a header naming no spec.
pub fn oracle_table_csv(rows: &[CheckRow]) -> Result<String> {
    let bytes = csv_bytes(&["check", "case", "value", "tolerance", "pass"], rows)?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}
