//! Clusters of occupied sites, crossing events and tail diagnostics.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::graphical::{SlotCoupling, SnapshotPlan};
use crate::lattice::{Configuration, Geometry, RateSet, SiteState};
use crate::rng;

/// Union-find whose links carry the lattice displacement to the parent, so a
/// cycle that winds around a torus shows up as a nonzero net displacement.
struct OffsetUnionFind {
    parent: Vec<u32>,
    offset: Vec<(i32, i32)>,
    size: Vec<u32>,
    wraps: Vec<(bool, bool)>,
}

impl OffsetUnionFind {
    fn new(n: usize) -> Self {
        OffsetUnionFind {
            parent: (0..n as u32).collect(),
            offset: vec![(0, 0); n],
            size: vec![1; n],
            wraps: vec![(false, false); n],
        }
    }

    /// Root of `i` and the displacement from `i` to it.
    fn find(&mut self, i: usize) -> (usize, (i32, i32)) {
        let mut path = Vec::new();
        let mut r = i;
        while self.parent[r] as usize != r {
            path.push(r);
            r = self.parent[r] as usize;
        }
        // Compress from the top so each node's offset already points at the root.
        let mut acc = (0, 0);
        for &v in path.iter().rev() {
            let o = self.offset[v];
            acc = (acc.0 + o.0, acc.1 + o.1);
            self.offset[v] = acc;
            self.parent[v] = r as u32;
        }
        (r, if i == r { (0, 0) } else { self.offset[i] })
    }

    /// Joins `a` and `b` where `b` sits at displacement `step` from `a`.
    fn union(&mut self, a: usize, b: usize, step: (i32, i32)) {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            let dx = oa.0 - ob.0 - step.0;
            let dy = oa.1 - ob.1 - step.1;
            let w = &mut self.wraps[ra];
            w.0 |= dx != 0;
            w.1 |= dy != 0;
            return;
        }
        // Displacement from rb to ra.
        let link = (oa.0 - step.0 - ob.0, oa.1 - step.1 - ob.1);
        let (child, root, off) = if self.size[ra] >= self.size[rb] {
            (rb, ra, link)
        } else {
            (ra, rb, (-link.0, -link.1))
        };
        self.parent[child] = root as u32;
        self.offset[child] = off;
        self.size[root] += self.size[child];
        let cw = self.wraps[child];
        let rw = &mut self.wraps[root];
        rw.0 |= cw.0;
        rw.1 |= cw.1;
    }
}

/// Labelled clusters of occupied sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Cluster id per site, `None` for sites not occupied. Ids are dense and
    /// ordered by first site.
    pub labels: Vec<Option<u32>>,
    pub sites: usize,
    pub sizes: Vec<usize>,
    /// Per cluster: winds around the torus in some axis.
    pub cluster_wraps: Vec<bool>,
    pub origin_size: usize,
    pub origin_wraps: bool,
    pub wraps_x: bool,
    pub wraps_y: bool,
}

impl ClusterReport {
    pub fn occupied(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn wraps(&self) -> bool {
        self.wraps_x || self.wraps_y
    }

    /// Cluster size → number of clusters of that size.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &s in &self.sizes {
            *h.entry(s).or_insert(0) += 1;
        }
        h
    }

    /// Same report with the per-site labels dropped.
    pub fn without_labels(mut self) -> Self {
        self.labels = Vec::new();
        self
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Nearest-neighbour clusters of 1's; the origin is site `(0, 0)`.
pub fn label_clusters(config: &Configuration) -> ClusterReport {
    let g = config.geometry();
    let (w, h) = (g.width(), g.height());
    let n = g.site_count();
    let occ = |s: usize| config.get(s) == SiteState::Occupied;
    let mut uf = OffsetUnionFind::new(n);
    for y in 0..h {
        for x in 0..w {
            let s = g.index(x, y);
            if !occ(s) {
                continue;
            }
            if x + 1 < w || g.is_torus() {
                let r = g.index((x + 1) % w, y);
                if occ(r) {
                    uf.union(s, r, (1, 0));
                }
            }
            if y + 1 < h || g.is_torus() {
                let d = g.index(x, (y + 1) % h);
                if occ(d) {
                    uf.union(s, d, (0, 1));
                }
            }
        }
    }
    let mut labels = vec![None; n];
    let mut root_label: Vec<Option<u32>> = vec![None; n];
    let mut sizes = Vec::new();
    let mut cluster_wraps = Vec::new();
    let (mut wraps_x, mut wraps_y) = (false, false);
    for s in 0..n {
        if !occ(s) {
            continue;
        }
        let (r, _) = uf.find(s);
        let id = *root_label[r].get_or_insert_with(|| {
            let (wx, wy) = uf.wraps[r];
            wraps_x |= wx;
            wraps_y |= wy;
            sizes.push(0);
            cluster_wraps.push(wx || wy);
            (sizes.len() - 1) as u32
        });
        sizes[id as usize] += 1;
        labels[s] = Some(id);
    }
    let (origin_size, origin_wraps) = match labels[0] {
        Some(id) => (sizes[id as usize], cluster_wraps[id as usize]),
        None => (0, false),
    };
    ClusterReport {
        sites: labels.len(),
        labels,
        sizes,
        cluster_wraps,
        origin_size,
        origin_wraps,
        wraps_x,
        wraps_y,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossDirection {
    Horizontal,
    Vertical,
}

/// The lattice rectangle `[x0, x0+m] × [y0, y0+n]`, i.e. `(m+1) × (n+1)`
/// sites. On a torus the corner may be anywhere and coordinates wrap, but
/// the window itself is cut open: its sides never join.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub m: usize,
    pub n: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, m: usize, n: usize) -> Self {
        Rect { x0, y0, m, n }
    }

    fn check(&self, g: &Geometry) -> Result<()> {
        let fits = if g.is_torus() {
            self.m < g.width() && self.n < g.height() && self.x0 < g.width() && self.y0 < g.height()
        } else {
            self.x0 + self.m < g.width() && self.y0 + self.n < g.height()
        };
        if fits {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "rectangle {self:?} exceeds the {}x{} lattice",
                g.width(),
                g.height()
            )))
        }
    }
}

/// Is there a path of 1's inside `rect` joining its left and right columns
/// (horizontal) or its top and bottom rows (vertical)?
pub fn crossing(config: &Configuration, rect: Rect, dir: CrossDirection) -> Result<bool> {
    let g = config.geometry();
    rect.check(g)?;
    let (cols, rows) = (rect.m + 1, rect.n + 1);
    let at = |i: usize, j: usize| {
        let x = (rect.x0 + i) % g.width();
        let y = (rect.y0 + j) % g.height();
        config.at(x, y) == SiteState::Occupied
    };
    // Flood fill from the starting side.
    let mut seen = vec![false; cols * rows];
    let mut stack = Vec::new();
    let start: Vec<(usize, usize)> = match dir {
        CrossDirection::Horizontal => (0..rows).map(|j| (0, j)).collect(),
        CrossDirection::Vertical => (0..cols).map(|i| (i, 0)).collect(),
    };
    for (i, j) in start {
        if at(i, j) {
            seen[j * cols + i] = true;
            stack.push((i, j));
        }
    }
    while let Some((i, j)) = stack.pop() {
        let done = match dir {
            CrossDirection::Horizontal => i == cols - 1,
            CrossDirection::Vertical => j == rows - 1,
        };
        if done {
            return Ok(true);
        }
        let mut visit = |a: usize, b: usize| {
            if !seen[b * cols + a] && at(a, b) {
                seen[b * cols + a] = true;
                stack.push((a, b));
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < cols {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < rows {
            visit(i, j + 1);
        }
    }
    Ok(false)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub n: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub count: usize,
}

/// Least-squares fit of `ln p̂(n) = a - c n`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% t-interval for `rate`.
    pub rate_ci: (f64, f64),
    pub points: usize,
    pub n_min: usize,
    pub n_max: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    Exponential,
    Subexponential,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub points: Vec<TailPoint>,
    pub fit: Option<TailFit>,
    pub classification: TailClass,
    /// No trial reached the smallest positive threshold.
    pub degenerate: bool,
    /// Trials whose cluster wraps the torus (right-censored sizes).
    pub censored: usize,
    pub trials: usize,
    pub lower_rate: Option<f64>,
    pub upper_rate: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Use every site as an origin instead of `(0, 0)` only.
    pub all_origins: bool,
    pub min_samples: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            all_origins: false,
            min_samples: 100,
        }
    }
}

/// Estimates `P(|C₀| ≥ n)` on `n_grid` and classifies the tail.
///
/// The log-linear fit uses the thresholds with `p̂ ∈ [10/trials, 0.5]`,
/// stopping below the smallest censored size. Exponential: `r² ≥ 0.98` and
/// the 95% interval of the rate is positive. Subexponential: the rate fitted
/// on the upper half of those points is below half the lower-half rate.
pub fn tail_estimate(samples: &[ClusterReport], n_grid: &[usize], opts: &TailOptions) -> Result<TailEstimate> {
    if samples.len() < opts.min_samples {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: opts.min_samples,
        });
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid.is_empty() {
        return Err(Error::InvalidArgument("n_grid must be nonempty and increasing".into()));
    }
    // (size, censored) for every trial with a nonempty cluster; empty trials
    // only count in the denominator.
    let mut sizes: Vec<(usize, bool)> = Vec::new();
    let mut trials = 0usize;
    for r in samples {
        if opts.all_origins {
            trials += r.sites;
            for (&s, &w) in r.sizes.iter().zip(&r.cluster_wraps) {
                sizes.extend(std::iter::repeat_n((s, w), s));
            }
        } else {
            trials += 1;
            if r.origin_size > 0 {
                sizes.push((r.origin_size, r.origin_wraps));
            }
        }
    }
    let censored = sizes.iter().filter(|(_, w)| *w).count();
    let min_censored = sizes.iter().filter(|(_, w)| *w).map(|(s, _)| *s).min();
    let mut sorted: Vec<usize> = sizes.iter().map(|(s, _)| *s).collect();
    sorted.sort_unstable();
    let points: Vec<TailPoint> = n_grid
        .iter()
        .map(|&n| {
            let count = sorted.len() - sorted.partition_point(|&s| s < n);
            let count = if n == 0 { trials } else { count };
            let (ci_lo, ci_hi) = wilson(count, trials, 1.96);
            TailPoint {
                n,
                p_hat: count as f64 / trials as f64,
                ci_lo,
                ci_hi,
                count,
            }
        })
        .collect();
    let degenerate = points.iter().filter(|p| p.n > 0).all(|p| p.count == 0);
    let floor = 10.0 / trials as f64;
    let window: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n > 0 && p.p_hat >= floor && p.p_hat <= 0.5 && p.p_hat > 0.0)
        .filter(|p| min_censored.is_none_or(|m| p.n <= m))
        .map(|p| (p.n as f64, p.p_hat.ln()))
        .collect();
    let fit = fit_log_linear(&window);
    let half = window.len() / 2;
    let (lower_rate, upper_rate) = if half >= 2 && window.len() - half >= 2 {
        (
            fit_log_linear_rate(&window[..half]),
            fit_log_linear_rate(&window[window.len() - half..]),
        )
    } else {
        (None, None)
    };
    let classification = if degenerate {
        TailClass::Exponential
    } else if fit.is_some_and(|f| f.r_squared >= 0.98 && f.rate > 0.0 && f.rate_ci.0 > 0.0) {
        TailClass::Exponential
    } else if let (Some(lo), Some(hi)) = (lower_rate, upper_rate) {
        if lo > 0.0 && hi < 0.5 * lo {
            TailClass::Subexponential
        } else {
            TailClass::Inconclusive
        }
    } else {
        TailClass::Inconclusive
    };
    Ok(TailEstimate {
        points,
        fit,
        classification,
        degenerate,
        censored,
        trials,
        lower_rate,
        upper_rate,
    })
}

fn fit_log_linear_rate(pts: &[(f64, f64)]) -> Option<f64> {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

fn fit_log_linear(pts: &[(f64, f64)]) -> Option<TailFit> {
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let se = (ssr / (m - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, m - 2.0).ok()?.inverse_cdf(0.975);
    let rate = -slope;
    Some(TailFit {
        rate,
        intercept,
        r_squared,
        rate_ci: (rate - t * se, rate + t * se),
        points: pts.len(),
        n_min: pts[0].0 as usize,
        n_max: pts[pts.len() - 1].0 as usize,
    })
}

/// Crossing indicators of one configuration at scale `n`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingSample {
    /// Up-down crossing of `[0, 3n] × [0, n]`.
    pub vertical: bool,
    /// Left-right crossing of `[0, 3n] × [0, n]`.
    pub horizontal: bool,
}

pub fn crossing_sample(config: &Configuration, n: usize) -> Result<CrossingSample> {
    let rect = Rect::new(0, 0, 3 * n, n);
    Ok(CrossingSample {
        vertical: crossing(config, rect, CrossDirection::Vertical)?,
        horizontal: crossing(config, rect, CrossDirection::Horizontal)?,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Subcritical,
    Neither,
    Supercritical,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeOptions {
    /// Smallest admissible scale.
    pub n_hat: usize,
    /// Normal quantile of the two-sided Wilson intervals.
    pub z: f64,
    pub min_samples: usize,
}

impl Default for FiniteSizeOptions {
    fn default() -> Self {
        FiniteSizeOptions {
            n_hat: 1,
            z: 1.96,
            min_samples: 20,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeReport {
    pub decision: Decision,
    pub n: usize,
    pub eps_hat: f64,
    pub samples: usize,
    pub vertical_count: usize,
    pub horizontal_count: usize,
    pub vertical_ci: (f64, f64),
    pub horizontal_ci: (f64, f64),
}

/// Subcritical if the upper bound for `P(V(3n,n))` is below `ε̂`,
/// Supercritical if the lower bound for `P(H(3n,n))` exceeds `1 - ε̂`.
pub fn finite_size_check(
    samples: &[CrossingSample],
    n: usize,
    eps_hat: f64,
    opts: &FiniteSizeOptions,
) -> Result<FiniteSizeReport> {
    if samples.len() < opts.min_samples {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: opts.min_samples,
        });
    }
    if n < opts.n_hat {
        return Err(Error::InvalidArgument(format!("n = {n} below n_hat = {}", opts.n_hat)));
    }
    if !(eps_hat > 0.0 && eps_hat < 1.0) {
        return Err(Error::InvalidArgument(format!("eps_hat = {eps_hat} outside (0, 1)")));
    }
    let v = samples.iter().filter(|s| s.vertical).count();
    let h = samples.iter().filter(|s| s.horizontal).count();
    let vertical_ci = wilson(v, samples.len(), opts.z);
    let horizontal_ci = wilson(h, samples.len(), opts.z);
    let decision = if vertical_ci.1 < eps_hat {
        Decision::Subcritical
    } else if horizontal_ci.0 > 1.0 - eps_hat {
        Decision::Supercritical
    } else {
        Decision::Neither
    };
    Ok(FiniteSizeReport {
        decision,
        n,
        eps_hat,
        samples: samples.len(),
        vertical_count: v,
        horizontal_count: h,
        vertical_ci,
        horizontal_ci,
    })
}

/// Settings of an `h_perc` scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub geometry: Geometry,
    pub n: usize,
    pub eps_hat: f64,
    pub bisection_tol: f64,
    pub h_max: f64,
    pub plan: SnapshotPlan,
    pub replicas: usize,
    pub seed: u64,
    pub check: FiniteSizeOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub lambda: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    /// No supercritical `h` found up to `h_max`.
    pub flagged: bool,
    pub trace: Vec<(f64, Decision)>,
}

impl ScanEntry {
    pub fn width(&self) -> f64 {
        self.h_hi - self.h_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.h_lo + self.h_hi)
    }
}

/// Decision at `(λ, h)` from `replicas × plan.count` snapshots. Replica `i`
/// uses seed `derive(seed, i)` whatever `(λ, h)` is, so decisions are
/// monotone in both parameters.
pub fn decide_at(coupling: &SlotCoupling, lambda: f64, h: f64, s: &ScanSettings) -> Result<FiniteSizeReport> {
    let per_replica: Vec<Result<Vec<CrossingSample>>> = (0..s.replicas)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(s.plan.count);
            let mut err = None;
            coupling.simulate(&s.geometry, lambda, h, rng::derive(s.seed, i as u64), &s.plan, |c| {
                match crossing_sample(c, s.n) {
                    Ok(x) => out.push(x),
                    Err(e) => err = Some(e),
                }
            })?;
            err.map_or(Ok(out), Err)
        })
        .collect();
    let mut samples = Vec::new();
    for r in per_replica {
        samples.extend(r?);
    }
    finite_size_check(&samples, s.n, s.eps_hat, &s.check)
}

/// For each `λ`, bisects on `h ∈ [0, h_max]` for the onset of a
/// Supercritical decision at scale `n`. The returned bracket has a
/// non-supercritical lower end and a supercritical upper end.
pub fn h_perc_scan(fixed: &RateSet, lambda_grid: &[f64], s: &ScanSettings) -> Result<Vec<ScanEntry>> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if !(s.bisection_tol > 0.0 && s.h_max > 0.0) {
        return Err(Error::InvalidArgument("bisection_tol and h_max must be positive".into()));
    }
    let lambda_max = lambda_grid.iter().copied().fold(0.0, f64::max);
    let coupling = SlotCoupling::new(*fixed, lambda_max, s.h_max)?;
    let mut entries = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let mut trace = Vec::new();
        let mut decide = |h: f64| -> Result<bool> {
            let d = decide_at(&coupling, lambda, h, s)?.decision;
            trace.push((h, d));
            Ok(d == Decision::Supercritical)
        };
        let entry = if decide(0.0)? {
            (0.0, s.bisection_tol, false)
        } else if !decide(s.h_max)? {
            (s.h_max, f64::INFINITY, true)
        } else {
            let (mut lo, mut hi) = (0.0, s.h_max);
            while hi - lo > s.bisection_tol {
                let mid = 0.5 * (lo + hi);
                if decide(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo, hi, false)
        };
        entries.push(ScanEntry {
            lambda,
            h_lo: entry.0,
            h_hi: entry.1,
            flagged: entry.2,
            trace,
        });
    }
    Ok(entries)
}

/// Check of `h(λ) ≥ h(λ+α) ≥ h(λ) - 4α` for one adjacent pair, where each
/// side may take any value in its bracket.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub lambda: f64,
    pub alpha: f64,
    pub nonincreasing: bool,
    pub lipschitz: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub pairs: Vec<EnvelopePair>,
    pub flagged: usize,
    pub ok: bool,
}

pub fn check_envelope(entries: &[ScanEntry]) -> EnvelopeCheck {
    let pairs: Vec<EnvelopePair> = entries
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let alpha = b.lambda - a.lambda;
            EnvelopePair {
                lambda: a.lambda,
                alpha,
                nonincreasing: a.h_hi >= b.h_lo,
                lipschitz: b.h_hi >= a.h_lo - 4.0 * alpha,
            }
        })
        .collect();
    let flagged = entries.iter().filter(|e| e.flagged).count();
    let ok = flagged == 0 && pairs.iter().all(|p| p.nonincreasing && p.lipschitz && p.alpha > 0.0);
    EnvelopeCheck { pairs, flagged, ok }
}

pub fn write_tail_csv<W: Write>(w: W, est: &TailEstimate) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "p_hat", "ci_lo", "ci_hi"])?;
    for p in &est.points {
        wr.serialize((p.n, p.p_hat, p.ci_lo, p.ci_hi))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(w: W, entries: &[ScanEntry], n: usize, eps_hat: f64) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["lambda", "h_lo", "h_hi", "n", "eps_hat", "decision_trace"])?;
    for e in entries {
        let trace = e
            .trace
            .iter()
            .map(|(h, d)| format!("{h}:{d:?}"))
            .collect::<Vec<_>>()
            .join(";");
        wr.serialize((e.lambda, e.h_lo, e.h_hi, n, eps_hat, trace))?;
    }
    wr.flush()?;
    Ok(())
}

/// Cluster-size histogram summed over reports, as JSON.
pub fn histogram_json(reports: &[ClusterReport]) -> Result<String> {
    let mut h: BTreeMap<usize, usize> = BTreeMap::new();
    for r in reports {
        for (s, c) in r.size_histogram() {
            *h.entry(s).or_insert(0) += c;
        }
    }
    Ok(serde_json::to_string(&serde_json::json!({
        "schema_version": 1,
        "samples": reports.len(),
        "histogram": h.into_iter().map(|(s, c)| serde_json::json!({"size": s, "count": c})).collect::<Vec<_>>(),
    }))?)
}
