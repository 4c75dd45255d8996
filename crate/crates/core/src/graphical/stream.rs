use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::replay::apply_symbol;
use super::timeline::{Resolver, Symbol, SymbolType};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Direction, Geometry, Model, QParameterization, RateSet, SiteState};
use crate::rng::{self, Stream};

const EXTERIOR: u32 = u32::MAX;

fn slot_table(g: &Geometry) -> Vec<[u32; 4]> {
    g.neighbor_table()
        .into_iter()
        .map(|s| s.map(|n| n.unwrap_or(EXTERIOR)))
        .collect()
}

#[inline]
fn slot_state(states: &[SiteState], slots: &[u32; 4], boundary: SiteState, d: Direction) -> SiteState {
    match slots[d.index()] {
        EXTERIOR => boundary,
        j => states[j as usize],
    }
}

/// Unbounded-time graphical representation driving one configuration per
/// `q` from the same symbols, generated on the fly.
///
/// Each process has the law of the model at its `q`; together they are
/// ordered pathwise whenever their initial states are.
pub struct CoupledQStream {
    model: Model,
    geometry: Geometry,
    table: Vec<[u32; 4]>,
    boundary: SiteState,
    resolvers: Vec<Resolver>,
    states: Vec<Vec<SiteState>>,
    rng: Stream,
    time: f64,
    next: f64,
    symbols: u64,
}

impl CoupledQStream {
    pub fn new(param: &QParameterization, q_grid: &[f64], initial: &Configuration, seed: u64) -> Result<Self> {
        if q_grid.is_empty() {
            return Err(Error::InvalidArgument("empty q grid".into()));
        }
        let resolvers = q_grid
            .iter()
            .map(|&q| Resolver::from_param(param, q))
            .collect::<Result<Vec<_>>>()?;
        let geometry = *initial.geometry();
        let mut rng = rng::stream(seed);
        let n = geometry.site_count() as f64;
        let next = rng.sample::<f64, _>(Exp1) / n;
        Ok(CoupledQStream {
            model: param.model(),
            geometry,
            table: slot_table(&geometry),
            boundary: geometry.boundary_state().unwrap_or(SiteState::Vacant),
            resolvers,
            states: vec![initial.states().to_vec(); q_grid.len()],
            rng,
            time: 0.0,
            next,
            symbols: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn symbol_count(&self) -> u64 {
        self.symbols
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn config(&self, i: usize) -> Configuration {
        Configuration::from_states(self.geometry, self.states[i].clone()).expect("matching geometry")
    }

    pub fn states(&self, i: usize) -> &[SiteState] {
        &self.states[i]
    }

    pub fn advance_to(&mut self, t: f64) {
        let n = self.geometry.site_count();
        while self.next <= t {
            let sym = Symbol {
                site: self.rng.random_range(0..n) as u32,
                time: self.next,
                q: self.rng.random(),
                b: self.rng.random(),
                g: self.rng.random(),
            };
            let site = sym.site as usize;
            let slots = &self.table[site];
            for (r, states) in self.resolvers.iter().zip(self.states.iter_mut()) {
                let ty = r.resolve(&sym);
                let old = states[site];
                let new = apply_symbol(self.model, ty, old, |d| slot_state(states, slots, self.boundary, d));
                states[site] = new;
            }
            self.symbols += 1;
            self.next += self.rng.sample::<f64, _>(Exp1) / n as f64;
        }
        self.time = self.time.max(t);
    }
}

/// Fixed rates of a `(λ, h)` scan; `lambda` and `h` are ignored.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotCoupling {
    pub fixed: RateSet,
    /// Rate of marks per incoming slot; must be at least `λ + h/4` for every
    /// simulated pair.
    pub slot_rate: f64,
}

/// When and how many configurations to record from one run.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    pub burn_in: f64,
    pub spacing: f64,
    pub count: usize,
}

impl SlotCoupling {
    /// Coupling valid for all `λ <= lambda_max`, `h <= h_max`.
    pub fn new(fixed: RateSet, lambda_max: f64, h_max: f64) -> Result<Self> {
        fixed.validate()?;
        if !(lambda_max >= 0.0 && h_max >= 0.0) || lambda_max + h_max <= 0.0 {
            return Err(Error::InvalidArgument("lambda_max and h_max must be >= 0, not both 0".into()));
        }
        Ok(SlotCoupling {
            fixed,
            slot_rate: lambda_max + h_max / 4.0,
        })
    }

    /// Per-line rates `[D1, D2, U2, A2 per slot, marks per slot]`.
    fn line_rates(&self) -> [f64; 5] {
        let f = &self.fixed;
        let a2 = if f.model == Model::A { f.lambda_tilde } else { 0.0 };
        [f.kappa, f.kappa_tilde, f.h_tilde, a2, self.slot_rate]
    }

    /// Type of a slot mark with uniform `u` in slot `d` at `(λ, h)`: spontaneous
    /// birth on `[0, h/4]`, arrow on `(h/4, h/4 + λ]`, nothing above.
    ///
    /// Raising `λ` or `h` only upgrades marks, and `(λ + α, h)` is dominated
    /// mark by mark by `(λ, h + 4α)`.
    pub fn mark_type(&self, u: f64, d: Direction, lambda: f64, h: f64) -> Option<SymbolType> {
        let v = u * self.slot_rate;
        if v <= h / 4.0 {
            Some(SymbolType::U1)
        } else if v <= h / 4.0 + lambda {
            Some(SymbolType::A1(d))
        } else {
            None
        }
    }

    /// Rates at `(λ, h)` with the fixed part of this coupling.
    pub fn rates(&self, lambda: f64, h: f64) -> RateSet {
        RateSet {
            lambda,
            h,
            ..self.fixed
        }
    }

    /// Runs from all-occupied at `(λ, h)` and hands each snapshot to `observe`.
    /// The symbol sequence depends only on `seed`, so runs at different
    /// parameters with the same seed are pathwise ordered.
    pub fn simulate<F: FnMut(&Configuration)>(
        &self,
        geometry: &Geometry,
        lambda: f64,
        h: f64,
        seed: u64,
        plan: &SnapshotPlan,
        mut observe: F,
    ) -> Result<()> {
        if lambda < 0.0 || h < 0.0 || lambda + h / 4.0 > self.slot_rate * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "(lambda, h) = ({lambda}, {h}) outside the coupling range"
            )));
        }
        if !(plan.burn_in >= 0.0 && plan.spacing > 0.0) {
            return Err(Error::InvalidArgument("snapshot plan needs burn_in >= 0 and spacing > 0".into()));
        }
        let model = self.fixed.model;
        let table = slot_table(geometry);
        let boundary = geometry.boundary_state().unwrap_or(SiteState::Vacant);
        let n = geometry.site_count();
        let r = self.line_rates();
        let cumulative = [r[0], r[0] + r[1], r[0] + r[1] + r[2], r[0] + r[1] + r[2] + 4.0 * r[3]];
        let per_line = cumulative[3] + 4.0 * r[4];
        let total = per_line * n as f64;
        let mut states = vec![SiteState::Occupied; n];
        let mut rng = rng::stream(seed);
        let mut t = 0.0;
        for k in 0..plan.count {
            let stop = plan.burn_in + k as f64 * plan.spacing;
            loop {
                t += rng.sample::<f64, _>(Exp1) / total;
                if t > stop {
                    break;
                }
                let site = rng.random_range(0..n);
                let v = rng.random::<f64>() * per_line;
                let u: f64 = rng.random();
                let ty = if v < cumulative[0] {
                    Some(SymbolType::D1)
                } else if v < cumulative[1] {
                    Some(SymbolType::D2)
                } else if v < cumulative[2] {
                    Some(SymbolType::U2)
                } else if v < cumulative[3] {
                    let d = (((v - cumulative[2]) / r[3]) as usize).min(3);
                    Some(SymbolType::A2(Direction::ALL[d]))
                } else {
                    let d = (((v - cumulative[3]) / r[4]) as usize).min(3);
                    self.mark_type(u, Direction::ALL[d], lambda, h)
                };
                if let Some(ty) = ty {
                    let slots = &table[site];
                    let new = apply_symbol(model, ty, states[site], |d| slot_state(&states, slots, boundary, d));
                    states[site] = new;
                }
            }
            // The overshooting arrival is discarded; by memorylessness the
            // process restarts correctly from `stop`.
            t = stop;
            observe(&Configuration::from_states(*geometry, states.clone())?);
        }
        Ok(())
    }
}
