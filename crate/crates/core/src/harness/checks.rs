use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graphical::{couple_monotone, GraphicalTimeline, MonotoneCheck};
use crate::lattice::{Configuration, Geometry, Model, QParameterization, RateSet, SiteState};
use crate::oracle::{build_generator, stationary, transient, tv, tv_restricted, Distribution};
use crate::rng;

/// One line of a pass/fail table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub case: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn at_most(check: &str, case: &str, value: f64, tolerance: f64) -> Self {
        CheckRow {
            check: check.into(),
            case: case.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

fn shift(g: &Geometry, c: &Configuration, dx: usize, dy: usize) -> Configuration {
    let (w, h) = (g.width(), g.height());
    let mut s = c.clone();
    for y in 0..h {
        for x in 0..w {
            s.set(g.index((x + dx) % w, (y + dy) % h), c.at(x, y));
        }
    }
    s
}

/// Exact-oracle invariants for one rate set:
///
/// - generator rows sum to zero with nonnegative off-diagonal entries,
/// - `π` has unit mass and `πQ = 0`,
/// - transient laws keep unit mass and satisfy the semigroup property,
/// - `π` is fixed by the transient map,
/// - `π` is invariant under torus translations,
/// - in Model B with `h > 0`, single-site total variation from the
///   all-degraded and all-occupied starts stays below `e^{-ht}`.
pub fn oracle_checks(rates: &RateSet, geometry: &Geometry, times: &[f64]) -> Result<Vec<CheckRow>> {
    let case = format!("{:?} {}x{} lambda={}", rates.model, geometry.width(), geometry.height(), rates.lambda);
    let gen = build_generator(rates, geometry)?;
    let dim = gen.dimension();
    let mut rows = Vec::new();

    let mut row_sum: f64 = 0.0;
    let mut negative = 0usize;
    for i in 0..dim {
        let off = gen.off_diagonal(i);
        negative += off.iter().filter(|e| e.1 < 0.0).count();
        row_sum = row_sum.max((off.iter().map(|e| e.1).sum::<f64>() + gen.diagonal(i)).abs());
    }
    rows.push(CheckRow::at_most("generator_row_sum", &case, row_sum, 1e-12));
    rows.push(CheckRow::at_most("generator_negative_entries", &case, negative as f64, 0.0));

    let pi = stationary(&gen)?;
    rows.push(CheckRow::at_most("stationary_mass", &case, (pi.total_mass() - 1.0).abs(), 1e-10));
    let residual = gen.left_multiply(&pi.probs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    rows.push(CheckRow::at_most("stationary_residual", &case, residual, 1e-10));

    let start = Distribution::point_mass(&Configuration::uniform(*geometry, SiteState::Degraded));
    let mut mass: f64 = 0.0;
    let mut semigroup: f64 = 0.0;
    let mut fixed: f64 = 0.0;
    for &t in times {
        let mu = transient(&gen, &start, t)?;
        mass = mass.max((mu.total_mass() - 1.0).abs());
        let half = transient(&gen, &transient(&gen, &start, t / 2.0)?, t / 2.0)?;
        semigroup = semigroup.max(tv(&mu, &half));
        fixed = fixed.max(tv(&transient(&gen, &pi, t)?, &pi));
    }
    rows.push(CheckRow::at_most("transient_mass", &case, mass, 1e-10));
    rows.push(CheckRow::at_most("semigroup", &case, semigroup, 1e-9));
    rows.push(CheckRow::at_most("stationary_fixed_by_transient", &case, fixed, 1e-9));

    if geometry.is_torus() {
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            let c = Configuration::decode(*geometry, i);
            for (dx, dy) in [(1, 0), (0, 1)] {
                let j = shift(geometry, &c, dx, dy).encode();
                worst = worst.max((pi.probs[i] - pi.probs[j]).abs());
            }
        }
        rows.push(CheckRow::at_most("translation_invariance", &case, worst, 1e-10));
    }

    if rates.model == Model::B && rates.h > 0.0 {
        let mut excess = f64::NEG_INFINITY;
        for init in [SiteState::Degraded, SiteState::Occupied] {
            let start = Distribution::point_mass(&Configuration::uniform(*geometry, init));
            for &t in times {
                let mu = transient(&gen, &start, t)?;
                for site in 0..geometry.site_count() {
                    let d = tv_restricted(&mu, &pi, &[site])?;
                    excess = excess.max(d - (-rates.h * t).exp());
                }
            }
        }
        rows.push(CheckRow::at_most("single_site_tv_bound", &case, excess, 1e-10));
    }
    Ok(rows)
}

/// Rate sets checked by `contact-lattice oracle-check`.
pub fn default_oracle_cases() -> Vec<(RateSet, Geometry)> {
    let g22 = Geometry::torus(2, 2).expect("valid");
    let g33 = Geometry::torus(3, 3).expect("valid");
    vec![
        (RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).expect("valid"), g22),
        (RateSet::model_a(0.7, 0.4, 0.6, 0.3, 0.5, 0.8).expect("valid"), g22),
        (RateSet::model_a(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).expect("valid"), g22),
        (RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).expect("valid"), g33),
    ]
}

pub fn default_oracle_table() -> Result<Vec<CheckRow>> {
    let times = [0.5, 1.0, 2.0, 4.0, 8.0];
    let mut rows = Vec::new();
    for (r, g) in default_oracle_cases() {
        rows.extend(oracle_checks(&r, &g, &times)?);
    }
    let (r, g) = &default_oracle_cases()[2];
    let pi = stationary(&build_generator(r, g)?)?;
    let third = pi
        .marginal(&[0])
        .iter()
        .fold(0.0f64, |m, p| m.max((p - 1.0 / 3.0).abs()));
    rows.push(CheckRow::at_most("uniform_product_marginal", "A 2x2 no contact", third, 1e-10));
    Ok(rows)
}

/// One coupled pair of the monotonicity check.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub replica: usize,
    pub q_low: f64,
    pub q_high: f64,
    pub check: MonotoneCheck,
}

fn random_config<R: Rng>(g: Geometry, rng: &mut R) -> Configuration {
    let states = (0..g.site_count())
        .map(|_| SiteState::from_digit(rng.random_range(0..3)).expect("digit < 3"))
        .collect();
    Configuration::from_states(g, states).expect("sized to geometry")
}

/// Ordered random initial pair: the upper one raises a random subset of sites.
pub fn ordered_pair<R: Rng>(g: Geometry, rng: &mut R) -> (Configuration, Configuration) {
    let low = random_config(g, rng);
    let mut high = low.clone();
    for s in 0..g.site_count() {
        if rng.random_bool(0.3) {
            let up = SiteState::from_digit(rng.random_range(low.get(s).digit()..3)).expect("digit < 3");
            high.set(s, up);
        }
    }
    (low, high)
}

/// For each replica and `q` pair: a fresh timeline on `[0, horizon]`, a
/// random ordered initial pair, and the pathwise ordering check. Replica
/// `i` uses seed `derive(seed, i)`.
pub fn couple_check(
    base: &QParameterization,
    pairs: &[(f64, f64)],
    geometry: &Geometry,
    horizon: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<CoupledRun>> {
    let runs: Vec<Result<Vec<CoupledRun>>> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive(seed, i as u64);
            let tl = GraphicalTimeline::build(*geometry, 0.0, horizon, base, s)?;
            let mut r = rng::child(s, u64::MAX);
            pairs
                .iter()
                .map(|&(ql, qh)| {
                    let (lo, hi) = ordered_pair(*geometry, &mut r);
                    Ok(CoupledRun {
                        replica: i,
                        q_low: ql,
                        q_high: qh,
                        check: couple_monotone(&tl, ql, qh, &lo, &hi, horizon)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}
