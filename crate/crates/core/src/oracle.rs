//! Exact finite-state computations on lattices of at most nine sites.
//!
//! States are base-3 encoded with site 0 as the least significant digit and
//! digit `state + 1`, matching [`Configuration::encode`].

use nalgebra::{DMatrix, DVector};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Geometry, Model, Neighbor, RateSet, SiteState};

pub const MAX_SITES: usize = 9;

/// Dense linear solve is used up to this many states; Gauss-Seidel beyond.
const DENSE_LIMIT: usize = 729;

/// Sparse generator of the full lattice chain.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    geometry: Geometry,
    rates: RateSet,
    /// Off-diagonal entries `(to, rate)` per source state.
    rows: Vec<Vec<(usize, f64)>>,
    /// Diagonal entries: minus the row sums.
    diag: Vec<f64>,
}

/// Probability vector over the `3^N` configurations of an oracle lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n_sites: usize,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn point_mass(config: &Configuration) -> Self {
        let n = config.geometry().site_count();
        let mut probs = vec![0.0; 3usize.pow(n as u32)];
        probs[config.encode()] = 1.0;
        Distribution { n_sites: n, probs }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal law of the sites in `subset`, indexed by their base-3 digits
    /// in subset order.
    pub fn marginal(&self, subset: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 3usize.pow(subset.len() as u32)];
        for (idx, p) in self.probs.iter().enumerate() {
            let mut m = 0;
            for (k, &s) in subset.iter().enumerate() {
                m += digit(idx, s) * 3usize.pow(k as u32);
            }
            out[m] += p;
        }
        out
    }

    /// Probability that `site` is occupied.
    pub fn occupied_probability(&self, site: usize) -> f64 {
        self.marginal(&[site])[SiteState::Occupied.digit()]
    }
}

fn digit(index: usize, site: usize) -> usize {
    (index / 3usize.pow(site as u32)) % 3
}

impl GeneratorMatrix {
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn rates(&self) -> &RateSet {
        &self.rates
    }

    pub fn n_sites(&self) -> usize {
        self.geometry.site_count()
    }

    pub fn off_diagonal(&self, from: usize) -> &[(usize, f64)] {
        &self.rows[from]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Entry `Q[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.rows[i].iter().filter(|(t, _)| *t == j).map(|(_, r)| r).sum()
        }
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(row, d)| (row.iter().map(|(_, r)| r).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(-d))
    }

    /// `p Q` for a row vector `p`.
    pub fn left_multiply(&self, p: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = p.iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        for (i, row) in self.rows.iter().enumerate() {
            if p[i] != 0.0 {
                for &(j, r) in row {
                    out[j] += p[i] * r;
                }
            }
        }
        out
    }
}

/// Exact generator of the lattice chain. Neighbour slots follow
/// [`Geometry::neighbors`], including double slots on width-2 tori.
pub fn build_generator(rates: &RateSet, geometry: &Geometry) -> Result<GeneratorMatrix> {
    rates.validate()?;
    let n = geometry.site_count();
    if n > MAX_SITES {
        return Err(Error::LatticeTooLarge { sites: n, max: MAX_SITES });
    }
    let dim = 3usize.pow(n as u32);
    let slots: Vec<_> = (0..n).map(|s| geometry.neighbors(s)).collect::<Result<_>>()?;
    let boundary = geometry.boundary_state();
    let mut rows = Vec::with_capacity(dim);
    let mut diag = Vec::with_capacity(dim);
    for idx in 0..dim {
        let config = Configuration::decode(*geometry, idx);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for site in 0..n {
            let occupied_nbrs = slots[site]
                .iter()
                .filter(|(_, nb)| {
                    let s = match nb {
                        Neighbor::Site(j) => config.get(*j),
                        Neighbor::Exterior => boundary.expect("exterior slot on torus"),
                    };
                    s == SiteState::Occupied
                })
                .count() as f64;
            let state = config.get(site);
            let weight = 3usize.pow(site as u32);
            let mut push = |to: SiteState, rate: f64| {
                if rate > 0.0 {
                    let j = idx + to.digit() * weight - state.digit() * weight;
                    row.push((j, rate));
                }
            };
            match (rates.model, state) {
                (Model::A, SiteState::Occupied) => push(SiteState::Vacant, rates.kappa),
                (Model::A, SiteState::Vacant) => {
                    push(SiteState::Degraded, rates.kappa_tilde);
                    push(SiteState::Occupied, rates.h + rates.lambda * occupied_nbrs);
                }
                (Model::A, SiteState::Degraded) => {
                    push(SiteState::Vacant, rates.h_tilde + rates.lambda_tilde * occupied_nbrs)
                }
                (Model::B, SiteState::Occupied) => {
                    push(SiteState::Vacant, rates.kappa);
                    push(SiteState::Degraded, rates.kappa_tilde);
                }
                (Model::B, SiteState::Vacant) => {
                    push(SiteState::Degraded, rates.kappa_tilde);
                    push(SiteState::Occupied, rates.h + rates.lambda * occupied_nbrs);
                }
                (Model::B, SiteState::Degraded) => push(SiteState::Vacant, rates.h_tilde),
            }
        }
        diag.push(-row.iter().map(|(_, r)| r).sum::<f64>());
        rows.push(row);
    }
    Ok(GeneratorMatrix {
        geometry: *geometry,
        rates: *rates,
        rows,
        diag,
    })
}

/// Communicating classes with no exit, when there is more than one class.
fn check_irreducible(gen: &GeneratorMatrix) -> Result<()> {
    let dim = gen.dimension();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (i, row) in gen.rows.iter().enumerate() {
        for &(j, _) in row {
            reverse[j].push(i);
        }
    }
    let reaches_all = |next: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; dim];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in next(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    if reaches_all(&|v| gen.rows[v].iter().map(|&(j, _)| j).collect())
        && reaches_all(&|v| reverse[v].clone())
    {
        return Ok(());
    }
    let mut graph = DiGraph::<(), ()>::with_capacity(dim, 0);
    let nodes: Vec<_> = (0..dim).map(|_| graph.add_node(())).collect();
    for (i, row) in gen.rows.iter().enumerate() {
        for &(j, _) in row {
            graph.add_edge(nodes[i], nodes[j], ());
        }
    }
    let sccs = kosaraju_scc(&graph);
    let mut class_of = vec![0usize; dim];
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            class_of[v.index()] = c;
        }
    }
    let closed_classes = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter()
                .all(|v| gen.rows[v.index()].iter().all(|&(j, _)| class_of[j] == *c))
        })
        .map(|(_, scc)| {
            let mut states: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            states.sort_unstable();
            states
        })
        .collect();
    Err(Error::Reducible { closed_classes })
}

/// Stationary law `π Q = 0`, `Σ π = 1` of an irreducible generator.
pub fn stationary(gen: &GeneratorMatrix) -> Result<Distribution> {
    check_irreducible(gen)?;
    let dim = gen.dimension();
    let probs = if dim <= DENSE_LIMIT {
        stationary_dense(gen)?
    } else {
        stationary_gauss_seidel(gen)?
    };
    let residual = gen
        .left_multiply(&probs)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-10 {
        return Err(Error::Solver(format!("stationary residual {residual:e} exceeds 1e-10")));
    }
    Ok(Distribution {
        n_sites: gen.n_sites(),
        probs,
    })
}

fn stationary_dense(gen: &GeneratorMatrix) -> Result<Vec<f64>> {
    let dim = gen.dimension();
    // Solve Q^T π = 0 with the last equation replaced by the normalization.
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = gen.diag[i];
        for &(j, r) in &gen.rows[i] {
            a[(j, i)] += r;
        }
    }
    for j in 0..dim {
        a[(dim - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(dim);
    b[dim - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("singular balance system".into()))?;
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn stationary_gauss_seidel(gen: &GeneratorMatrix) -> Result<Vec<f64>> {
    let dim = gen.dimension();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (i, row) in gen.rows.iter().enumerate() {
        for &(j, r) in row {
            incoming[j].push((i, r));
        }
    }
    let mut pi = vec![1.0 / dim as f64; dim];
    for _ in 0..200_000 {
        for j in 0..dim {
            let inflow: f64 = incoming[j].iter().map(|&(i, r)| pi[i] * r).sum();
            pi[j] = inflow / -gen.diag[j];
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        let res = gen.left_multiply(&pi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= 1e-12 {
            return Ok(pi);
        }
    }
    Err(Error::Solver("Gauss-Seidel did not reach 1e-12".into()))
}

/// `initial · exp(tQ)` by uniformization, total truncation error below 1e-11.
///
/// The horizon is split into chunks with `Λτ <= 30` so the Poisson weights
/// never underflow; each chunk is truncated where its Poisson tail mass drops
/// below its share of the error budget.
pub fn transient(gen: &GeneratorMatrix, initial: &Distribution, t: f64) -> Result<Distribution> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and >= 0")));
    }
    if initial.probs.len() != gen.dimension() {
        return Err(Error::InvalidArgument("initial distribution has the wrong dimension".into()));
    }
    let lambda = gen.max_exit_rate();
    if t == 0.0 || lambda == 0.0 {
        return Ok(initial.clone());
    }
    let chunks = (lambda * t / 30.0).ceil().max(1.0) as usize;
    let tau = t / chunks as f64;
    let eps = 1e-11 / chunks as f64;
    let mut p = initial.probs.clone();
    for _ in 0..chunks {
        p = uniformized_chunk(gen, &p, lambda, tau, eps);
    }
    Ok(Distribution {
        n_sites: initial.n_sites,
        probs: p,
    })
}

fn uniformized_chunk(gen: &GeneratorMatrix, p0: &[f64], lambda: f64, tau: f64, eps: f64) -> Vec<f64> {
    let lt = lambda * tau;
    let mut weight = (-lt).exp();
    let mut cumulative = weight;
    let mut term = p0.to_vec();
    let mut out: Vec<f64> = term.iter().map(|v| v * weight).collect();
    let mut k = 0usize;
    while 1.0 - cumulative > eps {
        k += 1;
        // term ← term · P with P = I + Q/Λ
        let q_term = gen.left_multiply(&term);
        for (t, q) in term.iter_mut().zip(&q_term) {
            *t += q / lambda;
        }
        weight *= lt / k as f64;
        cumulative += weight;
        for (o, t) in out.iter_mut().zip(&term) {
            *o += weight * t;
        }
        if k > 10_000 {
            break;
        }
    }
    out
}

/// Total-variation distance between the marginals of two laws on `subset`.
/// The empty subset gives 0.
pub fn tv_restricted(a: &Distribution, b: &Distribution, subset: &[usize]) -> Result<f64> {
    if a.n_sites != b.n_sites || a.probs.len() != b.probs.len() {
        return Err(Error::InvalidArgument("distributions live on different lattices".into()));
    }
    if let Some(&s) = subset.iter().find(|&&s| s >= a.n_sites) {
        return Err(Error::SiteOutOfBounds {
            site: s,
            width: a.n_sites,
            height: 1,
        });
    }
    if subset.is_empty() {
        return Ok(0.0);
    }
    let ma = a.marginal(subset);
    let mb = b.marginal(subset);
    Ok(0.5 * ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Full-lattice total-variation distance.
pub fn tv(a: &Distribution, b: &Distribution) -> f64 {
    0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// One point of a convergence curve `d_tv(μ_t|Λ, π|Λ)` against `|Λ| e^{-h t}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub t: f64,
    pub tv: f64,
    pub bound: f64,
}

/// Exported oracle results for portable test vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleVectors {
    pub schema_version: u32,
    pub encoding: String,
    pub geometry: Geometry,
    pub rates: RateSet,
    pub stationary: Vec<f64>,
    pub initial: Vec<i8>,
    pub subset: Vec<usize>,
    pub tv_curve: Vec<TvPoint>,
}

pub const ENCODING_DESCRIPTION: &str =
    "base-3, site-major: index = sum over sites i of (state_i + 1) * 3^i, sites row-major";

/// Convergence curve from `initial` restricted to `subset`, with the bound
/// `|subset| e^{-h t}` alongside.
pub fn tv_curve(
    gen: &GeneratorMatrix,
    initial: &Configuration,
    subset: &[usize],
    times: &[f64],
) -> Result<(Distribution, Vec<TvPoint>)> {
    let pi = stationary(gen)?;
    let start = Distribution::point_mass(initial);
    let h = gen.rates().h;
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let mu = transient(gen, &start, t)?;
        points.push(TvPoint {
            t,
            tv: tv_restricted(&mu, &pi, subset)?,
            bound: subset.len() as f64 * (-h * t).exp(),
        });
    }
    Ok((pi, points))
}

pub fn export_vectors(
    gen: &GeneratorMatrix,
    initial: &Configuration,
    subset: &[usize],
    times: &[f64],
) -> Result<OracleVectors> {
    let (pi, curve) = tv_curve(gen, initial, subset, times)?;
    Ok(OracleVectors {
        schema_version: 1,
        encoding: ENCODING_DESCRIPTION.into(),
        geometry: *gen.geometry(),
        rates: *gen.rates(),
        stationary: pi.probs,
        initial: initial.states().iter().map(|s| s.value()).collect(),
        subset: subset.to_vec(),
        tv_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus2() -> Geometry {
        Geometry::torus(2, 2).unwrap()
    }

    #[test]
    fn rejects_large_lattice() {
        let g = Geometry::torus(5, 2).unwrap();
        let r = RateSet::model_a(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(build_generator(&r, &g), Err(Error::LatticeTooLarge { .. })));
    }

    #[test]
    fn model_a_unit_rates_generator() {
        let r = RateSet::model_a(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let gen = build_generator(&r, &torus2()).unwrap();
        assert_eq!(gen.dimension(), 81);
        assert!(gen.max_row_sum() < 1e-12);
        for i in 0..81 {
            assert!(gen.off_diagonal(i).iter().all(|&(_, r)| r > 0.0));
        }
    }

    #[test]
    fn double_slot_counts_twice() {
        // Site 0 vacant, site 1 (its left and right neighbour) occupied, others degraded.
        let g = torus2();
        let r = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
        let gen = build_generator(&r, &g).unwrap();
        let c = Configuration::from_values(g, &[0, 1, -1, -1]).unwrap();
        let mut to = c.clone();
        to.set(0, SiteState::Occupied);
        assert!((gen.entry(c.encode(), to.encode()) - (0.2 + 2.0 * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn independent_sites_give_uniform_product() {
        let r = RateSet::model_a(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let pi = stationary(&build_generator(&r, &torus2()).unwrap()).unwrap();
        for p in &pi.probs {
            assert!((p - 1.0 / 81.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_chain_is_reported() {
        // h = h̃ = 0 and λ̃ = 0: all-degraded is absorbing.
        let r = RateSet::model_a(1.0, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let err = stationary(&build_generator(&r, &torus2()).unwrap()).unwrap_err();
        match err {
            Error::Reducible { closed_classes } => assert!(closed_classes.contains(&vec![0])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transient_at_zero_is_initial() {
        let r = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
        let gen = build_generator(&r, &torus2()).unwrap();
        let d = Distribution::point_mass(&Configuration::uniform(torus2(), SiteState::Vacant));
        assert_eq!(transient(&gen, &d, 0.0).unwrap(), d);
    }

    #[test]
    fn tv_edge_cases() {
        let g = torus2();
        let a = Distribution::point_mass(&Configuration::from_values(g, &[1, 0, 0, 0]).unwrap());
        let b = Distribution::point_mass(&Configuration::from_values(g, &[-1, 0, 0, 0]).unwrap());
        assert_eq!(tv_restricted(&a, &a, &[0, 1]).unwrap(), 0.0);
        assert_eq!(tv_restricted(&a, &b, &[0]).unwrap(), 1.0);
        assert_eq!(tv_restricted(&a, &b, &[1, 2]).unwrap(), 0.0);
        assert_eq!(tv_restricted(&a, &b, &[]).unwrap(), 0.0);
    }

    #[test]
    fn gauss_seidel_agrees_with_dense_on_3x3_product_case() {
        // λ = λ̃ = 0 factorizes; every site has law (κ̃h̃-weighted) chain marginals.
        let g = Geometry::torus(3, 3).unwrap();
        let r = RateSet::model_a(2.0, 1.0, 0.0, 0.0, 1.0, 0.5).unwrap();
        let pi = stationary(&build_generator(&r, &g).unwrap()).unwrap();
        // Per-site chain −1 ↔ 0 ↔ 1 is a birth-death chain: π(0)/π(−1) = h̃/κ̃, π(1)/π(0) = h/κ.
        let w = [1.0, 0.5, 0.25];
        let z: f64 = w.iter().sum();
        let m = pi.marginal(&[4]);
        for d in 0..3 {
            assert!((m[d] - w[d] / z).abs() < 1e-9);
        }
    }
}
