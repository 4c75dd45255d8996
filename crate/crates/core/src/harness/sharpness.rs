use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphical::{CoupledQStream, SnapshotPlan};
use crate::lattice::{Configuration, Geometry, QParameterization, SiteState};
use crate::percolation::{
    crossing_sample, finite_size_check, label_clusters, tail_estimate, ClusterReport, CrossingSample, Decision,
    FiniteSizeOptions, FiniteSizeReport, TailEstimate, TailOptions,
};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessSettings {
    /// Snapshots per replica.
    pub plan: SnapshotPlan,
    pub replicas: usize,
    pub eps_hat: f64,
    /// Thresholds of the cluster-size tail.
    pub n_grid: Vec<usize>,
    pub tail: TailOptions,
    pub check: FiniteSizeOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QProfileRow {
    pub q: f64,
    /// Mean occupied fraction over all snapshots.
    pub density: f64,
    pub tail: TailEstimate,
    /// One finite-size check per entry of `n_list`.
    pub checks: Vec<FiniteSizeReport>,
}

/// A pair `q_i < q_j` whose decisions at scale `n` are reversed.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub n: usize,
    pub q_low: f64,
    pub q_high: f64,
    /// The crossing-probability intervals of the two points are disjoint.
    pub beyond_ci: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub rows: Vec<QProfileRow>,
    pub inversions: Vec<Inversion>,
    /// No inversion beyond the confidence intervals.
    pub consistent: bool,
}

impl SharpnessReport {
    pub fn decisions(&self, n: usize) -> Option<Vec<Decision>> {
        let k = self.n_list.iter().position(|&m| m == n)?;
        Some(self.rows.iter().map(|r| r.checks[k].decision).collect())
    }

    /// First row with a positive density estimate.
    pub fn first_nonzero_density(&self) -> Option<&QProfileRow> {
        self.rows.iter().find(|r| r.density > 0.0)
    }
}

struct ReplicaData {
    clusters: Vec<Vec<ClusterReport>>,
    crossings: Vec<Vec<Vec<CrossingSample>>>,
    occupied: Vec<usize>,
}

fn run_replica(
    base: &QParameterization,
    q_grid: &[f64],
    geometry: Geometry,
    n_list: &[usize],
    plan: &SnapshotPlan,
    seed: u64,
) -> Result<ReplicaData> {
    let init = Configuration::uniform(geometry, SiteState::Occupied);
    let mut stream = CoupledQStream::new(base, q_grid, &init, seed)?;
    let nq = q_grid.len();
    let mut d = ReplicaData {
        clusters: vec![Vec::with_capacity(plan.count); nq],
        crossings: vec![vec![Vec::with_capacity(plan.count); n_list.len()]; nq],
        occupied: vec![0; nq],
    };
    for k in 0..plan.count {
        stream.advance_to(plan.burn_in + k as f64 * plan.spacing);
        for i in 0..nq {
            let c = stream.config(i);
            d.occupied[i] += c.occupied_count();
            for (j, &n) in n_list.iter().enumerate() {
                d.crossings[i][j].push(crossing_sample(&c, n)?);
            }
            d.clusters[i].push(label_clusters(&c).without_labels());
        }
    }
    Ok(d)
}

fn find_inversions(rows: &[QProfileRow], n_list: &[usize]) -> Vec<Inversion> {
    let mut out = Vec::new();
    for (k, &n) in n_list.iter().enumerate() {
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (&rows[i].checks[k], &rows[j].checks[k]);
                if a.decision > b.decision {
                    let beyond_ci =
                        a.vertical_ci.0 > b.vertical_ci.1 || a.horizontal_ci.0 > b.horizontal_ci.1;
                    out.push(Inversion {
                        n,
                        q_low: rows[i].q,
                        q_high: rows[j].q,
                        beyond_ci,
                    });
                }
            }
        }
    }
    out
}

/// Stationary samples at every `q` from one coupled stream per replica,
/// then a tail estimate and a finite-size check at each `n` per `q`.
///
/// Replica `r` uses seed `derive(seed, r)` and starts all-occupied, so its
/// snapshots are ordered in `q` and the decision profile can only invert
/// through sampling noise across replicas.
pub fn sharpness_scan(
    base: &QParameterization,
    q_grid: &[f64],
    geometry: &Geometry,
    n_list: &[usize],
    settings: &SharpnessSettings,
    seed: u64,
) -> Result<SharpnessReport> {
    if q_grid.is_empty() || q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("q_grid must be nonempty and increasing".into()));
    }
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("n_list is empty".into()));
    }
    if settings.replicas == 0 || settings.plan.count == 0 {
        return Err(Error::InvalidArgument("need at least one replica and one snapshot".into()));
    }
    let per_replica: Vec<Result<ReplicaData>> = (0..settings.replicas)
        .into_par_iter()
        .map(|r| run_replica(base, q_grid, *geometry, n_list, &settings.plan, rng::derive(seed, r as u64)))
        .collect();
    let mut data = Vec::with_capacity(per_replica.len());
    for d in per_replica {
        data.push(d?);
    }
    let samples = settings.replicas * settings.plan.count;
    let sites = geometry.site_count() as f64;
    let rows = q_grid
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let clusters: Vec<ClusterReport> = data.iter().flat_map(|d| d.clusters[i].iter().cloned()).collect();
            let tail = tail_estimate(&clusters, &settings.n_grid, &settings.tail)?;
            let checks = n_list
                .iter()
                .enumerate()
                .map(|(j, &n)| {
                    let xs: Vec<CrossingSample> = data.iter().flat_map(|d| d.crossings[i][j].iter().copied()).collect();
                    finite_size_check(&xs, n, settings.eps_hat, &settings.check)
                })
                .collect::<Result<Vec<_>>>()?;
            let occupied: usize = data.iter().map(|d| d.occupied[i]).sum();
            Ok(QProfileRow {
                q,
                density: occupied as f64 / (samples as f64 * sites),
                tail,
                checks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inversions = find_inversions(&rows, n_list);
    let consistent = inversions.iter().all(|v| !v.beyond_ci);
    Ok(SharpnessReport {
        n_list: n_list.to_vec(),
        samples,
        rows,
        inversions,
        consistent,
    })
}
