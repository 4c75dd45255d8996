//! Density-driven contact processes: rates that follow the occupation density.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run, stationary_density, RateSchedule, StationaryOptions};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Geometry, RateSet, SiteState};
use crate::rng;

/// Rate functions `(Λ, H)` of the occupation density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityLaw {
    /// `Λ(ρ) = β(1-δ)/4 · (ε - gρ)`, `H(ρ) = βδρ(ε - gρ)`.
    Kefi { beta: f64, delta: f64, epsilon: f64, g: f64 },
    Constant { lambda: f64, h: f64 },
    /// Piecewise-linear interpolation through `(ρ, value)` knots covering `[0, 1]`.
    Tabulated { lambda: Vec<(f64, f64)>, h: Vec<(f64, f64)> },
}

/// Law value at one density; `clamped` is set when a negative value was
/// replaced by 0.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawValue {
    pub lambda: f64,
    pub h: f64,
    pub clamped: bool,
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let i = knots.partition_point(|k| k.0 < x);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn max_slope(knots: &[(f64, f64)]) -> f64 {
    knots
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max)
}

impl DensityLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensityLaw::Kefi { beta, delta, epsilon, g } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
                }
                if !(*beta > 0.0 && *epsilon > 0.0 && *g >= 0.0) || !(beta + epsilon + g).is_finite() {
                    return Err(Error::InvalidArgument("beta and epsilon must be > 0, g >= 0".into()));
                }
            }
            DensityLaw::Constant { lambda, h } => {
                if !(*lambda >= 0.0 && *h >= 0.0 && lambda.is_finite() && h.is_finite()) {
                    return Err(Error::InvalidRates("constant law needs finite rates >= 0".into()));
                }
            }
            DensityLaw::Tabulated { lambda, h } => {
                for (name, k) in [("lambda", lambda), ("h", h)] {
                    if k.len() < 2 {
                        return Err(Error::InvalidArgument(format!("{name} table needs 2 knots")));
                    }
                    if k.windows(2).any(|w| w[0].0 >= w[1].0) {
                        return Err(Error::InvalidArgument(format!("{name} knots must increase")));
                    }
                    if k[0].0 > 0.0 || k[k.len() - 1].0 < 1.0 {
                        return Err(Error::InvalidArgument(format!("{name} table must cover [0, 1]")));
                    }
                    if k.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
                        return Err(Error::InvalidRates(format!("{name} table has negative values")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, rho: f64) -> Result<LawValue> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::DensityOutOfRange(rho));
        }
        let (l, h) = match self {
            DensityLaw::Kefi { beta, delta, epsilon, g } => {
                let s = epsilon - g * rho;
                (beta * (1.0 - delta) / 4.0 * s, beta * delta * rho * s)
            }
            DensityLaw::Constant { lambda, h } => (*lambda, *h),
            DensityLaw::Tabulated { lambda, h } => (interpolate(lambda, rho), interpolate(h, rho)),
        };
        Ok(LawValue {
            lambda: l.max(0.0),
            h: h.max(0.0),
            clamped: l < 0.0 || h < 0.0,
        })
    }

    /// Largest slope of `Λ` and `H` on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            DensityLaw::Kefi { beta, delta, epsilon, g } => {
                let dl = beta * (1.0 - delta) * g / 4.0;
                let dh = beta * delta * epsilon.abs().max((epsilon - 2.0 * g).abs());
                dl.max(dh)
            }
            DensityLaw::Constant { .. } => 0.0,
            DensityLaw::Tabulated { lambda, h } => max_slope(lambda).max(max_slope(h)),
        }
    }

    /// `(Λ'(ρ), H'(ρ))`; one-sided at knots of a tabulated law.
    pub fn derivative(&self, rho: f64) -> (f64, f64) {
        match self {
            DensityLaw::Kefi { beta, delta, epsilon, g } => {
                (-beta * (1.0 - delta) * g / 4.0, beta * delta * (epsilon - 2.0 * g * rho))
            }
            DensityLaw::Constant { .. } => (0.0, 0.0),
            DensityLaw::Tabulated { .. } => {
                let e = 1e-6;
                let (a, b) = ((rho - e).max(0.0), (rho + e).min(1.0));
                let (va, vb) = (self.eval(a).expect("in range"), self.eval(b).expect("in range"));
                ((vb.lambda - va.lambda) / (b - a), (vb.h - va.h) / (b - a))
            }
        }
    }
}

/// `(Λ(ρ), H(ρ))` with negative values clamped to 0.
pub fn eval_law(law: &DensityLaw, rho: f64) -> Result<(f64, f64)> {
    let v = law.eval(rho)?;
    Ok((v.lambda, v.h))
}

/// Product initial law: each site independently occupied with probability
/// `occupied`, degraded with probability `degraded`, vacant otherwise.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialLaw {
    pub occupied: f64,
    pub degraded: f64,
}

impl InitialLaw {
    pub fn all_occupied() -> Self {
        InitialLaw {
            occupied: 1.0,
            degraded: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.occupied >= 0.0 && self.degraded >= 0.0 && self.occupied + self.degraded <= 1.0) {
            return Err(Error::InvalidArgument("initial law probabilities must be >= 0 and sum <= 1".into()));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, geometry: Geometry, rng: &mut R) -> Configuration {
        let states = (0..geometry.site_count())
            .map(|_| {
                let u: f64 = rng.random();
                if u < self.occupied {
                    SiteState::Occupied
                } else if u < self.occupied + self.degraded {
                    SiteState::Degraded
                } else {
                    SiteState::Vacant
                }
            })
            .collect();
        Configuration::from_states(geometry, states).expect("sized to geometry")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub horizon: f64,
    pub dt_grid: f64,
    pub replicas: usize,
    pub tol: f64,
    /// Sweeps allowed per window before it is halved or given up on.
    pub max_sweeps: usize,
    /// Cells in the first window; later windows start at the last accepted length.
    pub initial_window: usize,
}

/// One Picard window `[start, end)` in cells.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub start: usize,
    pub end: usize,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
    /// Last sweep-to-sweep ratio of sup-norm changes.
    pub contraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySolution {
    pub grid_dt: f64,
    /// Per-cell time-averaged density, ensemble and spatial mean.
    pub rho: Vec<f64>,
    /// 99% half-width of `rho` across replicas.
    pub rho_ci: Vec<f64>,
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
    /// Largest sup-norm change of `(λ, h)` at the final sweep of any window.
    pub residual: f64,
    /// Total sweeps over all windows.
    pub sweeps: usize,
    pub converged: bool,
    pub windows: Vec<WindowReport>,
    /// Final configuration of every replica.
    #[serde(skip)]
    pub finals: Vec<Configuration>,
    pub clamped: bool,
}

impl TrajectorySolution {
    pub fn schedule(&self, constants: RateSet) -> Result<RateSchedule> {
        RateSchedule::new(constants, self.grid_dt, self.lambda.clone(), self.h.clone())
    }

    /// 99% half-widths of `λ` and `h` per cell, propagated from `rho_ci`
    /// through the law's derivative.
    pub fn schedule_ci(&self, law: &DensityLaw) -> (Vec<f64>, Vec<f64>) {
        self.rho
            .iter()
            .zip(&self.rho_ci)
            .map(|(&r, &c)| {
                let (dl, dh) = law.derivative(r);
                (dl.abs() * c, dh.abs() * c)
            })
            .unzip()
    }

    pub fn to_json(&self, seed: u64, params: &serde_json::Value) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "schema_version": 1,
            "grid_dt": self.grid_dt,
            "rho": self.rho,
            "lambda": self.lambda,
            "h": self.h,
            "residual": self.residual,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "seed": seed,
            "params": params,
        }))?)
    }
}

const Z99: f64 = 2.5758293035489004;

struct SweepOutput {
    rho: Vec<f64>,
    rho_ci: Vec<f64>,
    finals: Vec<Configuration>,
}

fn sweep(
    starts: &[Configuration],
    constants: RateSet,
    dt: f64,
    lambda: &[f64],
    h: &[f64],
    window_seed: u64,
) -> Result<SweepOutput> {
    let schedule = RateSchedule::new(constants, dt, lambda.to_vec(), h.to_vec())?;
    let cells = lambda.len();
    let horizon = cells as f64 * dt;
    let runs: Vec<Result<(Vec<f64>, Configuration)>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = rng::child(window_seed, i as u64);
            let res = run(c.clone(), &schedule, horizon, &mut r, dt)?;
            let mut means = res.interval_means;
            means.resize(cells, res.final_config.density());
            Ok((means, res.final_config))
        })
        .collect();
    let mut per_replica = Vec::with_capacity(runs.len());
    let mut finals = Vec::with_capacity(runs.len());
    for r in runs {
        let (m, f) = r?;
        per_replica.push(m);
        finals.push(f);
    }
    let n = per_replica.len() as f64;
    let mut rho = vec![0.0; cells];
    let mut rho_ci = vec![0.0; cells];
    for c in 0..cells {
        let mean = per_replica.iter().map(|m| m[c]).sum::<f64>() / n;
        let var = if n > 1.0 {
            per_replica.iter().map(|m| (m[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        rho[c] = mean;
        rho_ci[c] = Z99 * (var / n).sqrt();
    }
    Ok(SweepOutput { rho, rho_ci, finals })
}

/// Picard construction of `λ(t) = Λ(ρ(t))`, `h(t) = H(ρ(t))` on the grid.
///
/// The horizon is cut into windows. In each window the replicas restart
/// from their configurations at the window start with the same random
/// streams every sweep. A window is halved when successive changes shrink
/// by less than a factor 2, down to one cell; a one-cell window that still
/// fails after `max_sweeps` is accepted and the solution flagged.
pub fn solve_trajectory(
    law: &DensityLaw,
    fixed: &RateSet,
    initial: &InitialLaw,
    geometry: &Geometry,
    opts: &TrajectoryOptions,
    seed: u64,
) -> Result<TrajectorySolution> {
    law.validate()?;
    fixed.validate()?;
    initial.validate()?;
    if !(opts.horizon > 0.0 && opts.dt_grid > 0.0) {
        return Err(Error::InvalidArgument("horizon and dt_grid must be positive".into()));
    }
    if opts.replicas == 0 || opts.max_sweeps == 0 {
        return Err(Error::InvalidArgument("replicas and max_sweeps must be positive".into()));
    }
    let cells = (opts.horizon / opts.dt_grid).round().max(1.0) as usize;
    let mut starts: Vec<Configuration> = (0..opts.replicas)
        .map(|i| initial.sample(*geometry, &mut rng::child(rng::derive(seed, u64::MAX), i as u64)))
        .collect();
    let mut rho0 = starts.iter().map(|c| c.density()).sum::<f64>() / opts.replicas as f64;

    let mut sol = TrajectorySolution {
        grid_dt: opts.dt_grid,
        rho: Vec::with_capacity(cells),
        rho_ci: Vec::with_capacity(cells),
        lambda: Vec::with_capacity(cells),
        h: Vec::with_capacity(cells),
        residual: 0.0,
        sweeps: 0,
        converged: true,
        windows: Vec::new(),
        finals: Vec::new(),
        clamped: false,
    };
    let mut start = 0;
    let mut window = opts.initial_window.max(1);
    while start < cells {
        let len = window.min(cells - start);
        let v0 = law.eval(rho0.clamp(0.0, 1.0))?;
        sol.clamped |= v0.clamped;
        let mut lambda = vec![v0.lambda; len];
        let mut h = vec![v0.h; len];
        let window_seed = rng::derive(seed, start as u64);
        let mut prev_change = f64::INFINITY;
        let mut contraction = 0.0;
        let mut sweeps = 0;
        let (out, change) = loop {
            let out = sweep(&starts, *fixed, opts.dt_grid, &lambda, &h, window_seed)?;
            sweeps += 1;
            let mut change: f64 = 0.0;
            let mut next_l = Vec::with_capacity(len);
            let mut next_h = Vec::with_capacity(len);
            for &r in &out.rho {
                let v = law.eval(r.clamp(0.0, 1.0))?;
                sol.clamped |= v.clamped;
                next_l.push(v.lambda);
                next_h.push(v.h);
            }
            for c in 0..len {
                change = change.max((next_l[c] - lambda[c]).abs()).max((next_h[c] - h[c]).abs());
            }
            if change < opts.tol {
                break (out, change);
            }
            if sweeps >= 2 {
                contraction = change / prev_change;
            }
            let stalled = sweeps >= 2 && contraction >= 0.5;
            if (stalled || sweeps >= opts.max_sweeps) && len > 1 {
                break (out, f64::NAN);
            }
            if sweeps >= opts.max_sweeps {
                break (out, change);
            }
            prev_change = change;
            lambda = next_l;
            h = next_h;
        };
        sol.sweeps += sweeps;
        if change.is_nan() {
            window = len / 2;
            continue;
        }
        let converged = change < opts.tol;
        sol.converged &= converged;
        sol.residual = sol.residual.max(change);
        sol.windows.push(WindowReport {
            start,
            end: start + len,
            sweeps,
            residual: change,
            converged,
            contraction,
        });
        rho0 = out.finals.iter().map(|c| c.density()).sum::<f64>() / opts.replicas as f64;
        sol.rho.extend_from_slice(&out.rho);
        sol.rho_ci.extend_from_slice(&out.rho_ci);
        sol.lambda.extend_from_slice(&lambda);
        sol.h.extend_from_slice(&h);
        starts = out.finals;
        start += len;
    }
    sol.finals = starts;
    Ok(sol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarySolveOptions {
    /// Weight of the new value in each damped update.
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Extra iterations averaged into the reported fixed point after the
    /// stopping rule fires.
    pub averaging: usize,
    pub mc: StationaryOptions,
    /// Starting `(λ, h)`; defaults to the law at `ρ = 1/2`.
    pub start: Option<(f64, f64)>,
}

impl StationarySolveOptions {
    pub fn new(mc: StationaryOptions) -> Self {
        StationarySolveOptions {
            damping: 0.5,
            tol: 1e-3,
            max_iters: 100,
            averaging: 5,
            mc,
            start: None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub lambda: f64,
    pub h: f64,
    pub rho_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryFixedPoint {
    pub lambda_star: f64,
    pub h_star: f64,
    /// Fresh estimate of the stationary density at `(λ★, h★)`.
    pub rho_star: f64,
    /// 95% half-width of `rho_star`.
    pub ci: f64,
    pub lambda_residual: f64,
    pub h_residual: f64,
    /// `max(lambda_residual, h_residual)`.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Damped iteration `λ ← (1-a)λ + aΛ(ρ̂)`, `h ← (1-a)h + aH(ρ̂)` with
/// `ρ̂` the simulated stationary density at the current rates.
///
/// The residual is computed from an independent run at the returned point.
pub fn solve_stationary(
    law: &DensityLaw,
    fixed: &RateSet,
    geometry: &Geometry,
    opts: &StationarySolveOptions,
    seed: u64,
) -> Result<StationaryFixedPoint> {
    law.validate()?;
    fixed.validate()?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping = {} outside (0, 1]", opts.damping)));
    }
    let rates = |l: f64, h: f64| RateSet {
        lambda: l,
        h,
        ..*fixed
    };
    let estimate = |l: f64, h: f64, s: u64| stationary_density(&rates(l, h), geometry, &opts.mc, &mut rng::stream(s));
    let (mut l, mut h) = match opts.start {
        Some(p) => p,
        None => eval_law(law, 0.5)?,
    };
    let a = opts.damping;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iter = 0u64;
    while (iter as usize) < opts.max_iters {
        let rho = estimate(l, h, rng::derive(seed, iter))?.rho;
        iter += 1;
        let (tl, th) = eval_law(law, rho.clamp(0.0, 1.0))?;
        let (nl, nh) = ((1.0 - a) * l + a * tl, (1.0 - a) * h + a * th);
        trace.push(IterationRecord { lambda: l, h, rho_hat: rho });
        let step = (nl - l).abs().max((nh - h).abs());
        let residual = (tl - l).abs().max((th - h).abs());
        l = nl;
        h = nh;
        if step < opts.tol && residual < opts.tol {
            converged = true;
            break;
        }
    }
    if converged && opts.averaging > 0 {
        let (mut sl, mut sh) = (l, h);
        for _ in 0..opts.averaging {
            let rho = estimate(l, h, rng::derive(seed, iter))?.rho;
            iter += 1;
            let (tl, th) = eval_law(law, rho.clamp(0.0, 1.0))?;
            trace.push(IterationRecord { lambda: l, h, rho_hat: rho });
            l = (1.0 - a) * l + a * tl;
            h = (1.0 - a) * h + a * th;
            sl += l;
            sh += h;
        }
        l = sl / (opts.averaging + 1) as f64;
        h = sh / (opts.averaging + 1) as f64;
    }
    let fresh = estimate(l, h, rng::derive(rng::splitmix64(seed), 0xF2E5))?;
    let (tl, th) = eval_law(law, fresh.rho.clamp(0.0, 1.0))?;
    let (lr, hr) = ((l - tl).abs(), (h - th).abs());
    Ok(StationaryFixedPoint {
        lambda_star: l,
        h_star: h,
        rho_star: fresh.rho,
        ci: 1.96 * fresh.std_err,
        lambda_residual: lr,
        h_residual: hr,
        residual: lr.max(hr),
        converged,
        iterations: iter as usize,
        trace,
    })
}

/// Runs [`solve_stationary`] from every start and returns one result each.
pub fn solve_stationary_multistart(
    law: &DensityLaw,
    fixed: &RateSet,
    geometry: &Geometry,
    starts: &[(f64, f64)],
    opts: &StationarySolveOptions,
    seed: u64,
) -> Result<Vec<StationaryFixedPoint>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let o = StationarySolveOptions {
                start: Some(s),
                ..opts.clone()
            };
            solve_stationary(law, fixed, geometry, &o, rng::derive(seed, i as u64))
        })
        .collect()
}

/// CSV header and one row per fixed point.
pub fn write_fixed_points_csv<W: Write>(w: W, fixed: &RateSet, points: &[StationaryFixedPoint]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "kappa",
        "kappa_tilde",
        "lambda_tilde",
        "h_tilde",
        "lambda_star",
        "h_star",
        "rho_star",
        "residual",
        "ci",
        "converged",
    ])?;
    for p in points {
        wr.serialize((
            fixed.kappa,
            fixed.kappa_tilde,
            fixed.lambda_tilde,
            fixed.h_tilde,
            p.lambda_star,
            p.h_star,
            p.rho_star,
            p.residual,
            p.ci,
            p.converged,
        ))?;
    }
    wr.flush()?;
    Ok(())
}
