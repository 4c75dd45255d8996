use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::timeline::{GraphicalTimeline, Resolver, SymbolType};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Direction, Geometry, Model, SiteState};

/// New state of a site hit by a symbol of type `ty`, given the state `src` of
/// the slot an arrow comes from.
pub fn apply_symbol(model: Model, ty: SymbolType, state: SiteState, src: impl Fn(Direction) -> SiteState) -> SiteState {
    use SiteState::*;
    match (ty, state) {
        (SymbolType::D1, Occupied) => Vacant,
        (SymbolType::D2, Vacant) => Degraded,
        (SymbolType::D2, _) if model == Model::B => Degraded,
        (SymbolType::U1, Vacant) => Occupied,
        (SymbolType::U2, Degraded) => Vacant,
        (SymbolType::A1(d), Vacant) if src(d) == Occupied => Occupied,
        (SymbolType::A2(d), Degraded) if model == Model::A && src(d) == Occupied => Vacant,
        _ => state,
    }
}

/// Mutable lattice state driven by resolved symbols.
pub(crate) struct Replayer {
    model: Model,
    table: Vec<[Option<u32>; 4]>,
    boundary: SiteState,
    pub(crate) states: Vec<SiteState>,
    pinned: Vec<bool>,
}

impl Replayer {
    pub(crate) fn new(model: Model, initial: &Configuration, pinned: Option<Vec<bool>>) -> Self {
        let g = initial.geometry();
        Replayer {
            model,
            table: g.neighbor_table(),
            boundary: g.boundary_state().unwrap_or(SiteState::Vacant),
            states: initial.states().to_vec(),
            pinned: pinned.unwrap_or_else(|| vec![false; g.site_count()]),
        }
    }

    /// Applies one symbol; returns true if the site changed.
    #[inline]
    pub(crate) fn apply(&mut self, site: usize, ty: SymbolType) -> bool {
        if self.pinned[site] {
            return false;
        }
        let old = self.states[site];
        let slots = &self.table[site];
        let states = &self.states;
        let boundary = self.boundary;
        let new = apply_symbol(self.model, ty, old, |d| match slots[d.index()] {
            Some(j) => states[j as usize],
            None => boundary,
        });
        self.states[site] = new;
        new != old
    }
}

fn check_initial(tl: &GraphicalTimeline, initial: &Configuration) -> Result<()> {
    if initial.geometry() != tl.geometry() {
        return Err(Error::InsufficientCoverage(
            "initial configuration is not defined on the timeline region".into(),
        ));
    }
    Ok(())
}

/// State at the end of the timeline after applying every symbol in order.
pub fn replay(tl: &GraphicalTimeline, q: f64, initial: &Configuration) -> Result<Configuration> {
    replay_between(tl, q, initial, tl.t_start(), tl.t_end(), None)
}

/// Replay of the symbols with time in `(from, to]` (and at `from` when it
/// equals the timeline start). Pinned sites keep their initial state.
pub fn replay_between(
    tl: &GraphicalTimeline,
    q: f64,
    initial: &Configuration,
    from: f64,
    to: f64,
    pinned: Option<Vec<bool>>,
) -> Result<Configuration> {
    check_initial(tl, initial)?;
    if from < tl.t_start() || to > tl.t_end() {
        return Err(Error::InsufficientCoverage(format!(
            "[{from}, {to}] not inside [{}, {}]",
            tl.t_start(),
            tl.t_end()
        )));
    }
    let r = tl.resolver(q)?;
    let mut rp = Replayer::new(tl.model(), initial, pinned);
    for s in tl.symbols() {
        let inside = (s.time > from || (s.time == from && from == tl.t_start())) && s.time <= to;
        if inside {
            rp.apply(s.site as usize, r.resolve(s));
        }
    }
    Configuration::from_states(*initial.geometry(), rp.states)
}

/// The ball of radius `⌊√n⌋` around `x` with its pinned outer shell, checked
/// against the timeline region.
struct Ball {
    radius: usize,
    horizon: f64,
    /// Sites with distance < radius.
    active: Vec<bool>,
    /// Sites with distance == radius.
    shell: Vec<bool>,
}

fn ball(tl: &GraphicalTimeline, x: usize, n: u64) -> Result<Ball> {
    let g = tl.geometry();
    let n_sites = g.site_count();
    if x >= n_sites {
        return Err(Error::SiteOutOfBounds {
            site: x,
            width: g.width(),
            height: g.height(),
        });
    }
    let radius = (n as f64).sqrt().floor() as usize;
    let horizon = (n as f64).sqrt();
    let (cx, cy) = g.coords(x);
    let fits = if g.is_torus() {
        g.width() > 2 * radius && g.height() > 2 * radius
    } else {
        cx >= radius && cy >= radius && cx + radius < g.width() && cy + radius < g.height()
    };
    if !fits {
        return Err(Error::InsufficientCoverage(format!(
            "ball of radius {radius} around ({cx}, {cy}) does not fit a {}x{} region",
            g.width(),
            g.height()
        )));
    }
    if tl.t_start() > -horizon || tl.t_end() < 0.0 {
        return Err(Error::InsufficientCoverage(format!(
            "time window [{}, {}] does not cover [-{horizon}, 0]",
            tl.t_start(),
            tl.t_end()
        )));
    }
    let mut active = vec![false; n_sites];
    let mut shell = vec![false; n_sites];
    for s in 0..n_sites {
        let d = g.distance(x, s);
        active[s] = d < radius;
        shell[s] = d == radius;
    }
    Ok(Ball {
        radius,
        horizon,
        active,
        shell,
    })
}

fn replay_ball(tl: &GraphicalTimeline, r: &Resolver, b: &Ball, x: usize, keep: Option<&[bool]>) -> SiteState {
    let initial = Configuration::uniform(*tl.geometry(), SiteState::Occupied);
    let pinned: Vec<bool> = b.active.iter().map(|a| !a).collect();
    let mut rp = Replayer::new(tl.model(), &initial, Some(pinned));
    for (i, s) in tl.symbols().iter().enumerate() {
        if s.time <= -b.horizon || s.time > 0.0 || !b.active[s.site as usize] {
            continue;
        }
        if keep.is_some_and(|k| !k[i]) {
            continue;
        }
        rp.apply(s.site as usize, r.resolve(s));
    }
    rp.states[x]
}

/// `η_x^{(q,n)}`: the state at `(x, 0)` when every site at distance `⌊√n⌋`
/// from `x` is held at 1 and the whole ball starts at 1 at time `-√n`.
pub fn eta_qn(tl: &GraphicalTimeline, x: usize, q: f64, n: u64) -> Result<SiteState> {
    let b = ball(tl, x, n)?;
    if b.radius == 0 {
        return Ok(SiteState::Occupied);
    }
    Ok(replay_ball(tl, &tl.resolver(q)?, &b, x, None))
}

/// Sound lower bound for the δ-discretized state: every up symbol within `δ`
/// in time of another symbol at the same or a neighbouring site is dropped,
/// then the ball is replayed exactly as in [`eta_qn`].
pub fn implied_lower_bound(tl: &GraphicalTimeline, q: f64, delta: f64, x: usize, n: u64) -> Result<SiteState> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be > 0")));
    }
    let b = ball(tl, x, n)?;
    if b.radius == 0 {
        return Ok(SiteState::Occupied);
    }
    let r = tl.resolver(q)?;
    let keep = crowded_up_symbols(tl, &r, delta, &b)
        .into_iter()
        .map(|c| !c)
        .collect::<Vec<_>>();
    Ok(replay_ball(tl, &r, &b, x, Some(&keep)))
}

/// Number of up symbols [`implied_lower_bound`] drops.
pub fn dropped_symbol_count(tl: &GraphicalTimeline, q: f64, delta: f64, x: usize, n: u64) -> Result<usize> {
    let b = ball(tl, x, n)?;
    let r = tl.resolver(q)?;
    Ok(crowded_up_symbols(tl, &r, delta, &b).iter().filter(|&&c| c).count())
}

fn crowded_up_symbols(tl: &GraphicalTimeline, r: &Resolver, delta: f64, b: &Ball) -> Vec<bool> {
    let g = tl.geometry();
    let table = g.neighbor_table();
    let relevant = |s: usize| b.active[s] || b.shell[s];
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); g.site_count()];
    for s in tl.symbols() {
        if relevant(s.site as usize) {
            times[s.site as usize].push(s.time);
        }
    }
    let near = |site: usize, t: f64, own: bool| -> bool {
        let ts = &times[site];
        let lo = ts.partition_point(|&u| u < t - delta);
        let hi = ts.partition_point(|&u| u <= t + delta);
        // Own line contains the symbol itself once.
        hi - lo > usize::from(own)
    };
    tl.symbols()
        .iter()
        .map(|s| {
            let site = s.site as usize;
            if !b.active[site] || !r.resolve(s).is_up() {
                return false;
            }
            near(site, s.time, true)
                || table[site]
                    .iter()
                    .flatten()
                    .any(|&j| j as usize != site && near(j as usize, s.time, false))
        })
        .collect()
}

/// First place where the lower process exceeds the upper one.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub site: usize,
    pub time: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub ordered: bool,
    pub first_violation: Option<Violation>,
    /// Symbols applied to each process.
    pub events: usize,
}

/// Replays `ξ_low` at `q_low` and `ξ_high` at `q_high` on the same symbols for
/// model time `horizon` and checks `X_low ≤ X_high` after every symbol.
pub fn couple_monotone(
    tl: &GraphicalTimeline,
    q_low: f64,
    q_high: f64,
    xi_low: &Configuration,
    xi_high: &Configuration,
    horizon: f64,
) -> Result<MonotoneCheck> {
    if q_low > q_high {
        return Err(Error::InvalidArgument(format!("q_low = {q_low} > q_high = {q_high}")));
    }
    check_initial(tl, xi_low)?;
    check_initial(tl, xi_high)?;
    if !xi_low.is_dominated_by(xi_high) {
        return Err(Error::InvalidArgument("initial states are not ordered".into()));
    }
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon = {horizon} must be >= 0")));
    }
    let stop = tl.t_start() + horizon;
    if stop > tl.t_end() {
        return Err(Error::InsufficientCoverage(format!(
            "horizon {horizon} exceeds the timeline length {}",
            tl.t_end() - tl.t_start()
        )));
    }
    let (rl, rh) = (tl.resolver(q_low)?, tl.resolver(q_high)?);
    let mut low = Replayer::new(tl.model(), xi_low, None);
    let mut high = Replayer::new(tl.model(), xi_high, None);
    let mut events = 0;
    for s in tl.symbols().iter().take_while(|s| s.time <= stop) {
        let site = s.site as usize;
        low.apply(site, rl.resolve(s));
        high.apply(site, rh.resolve(s));
        events += 1;
        if low.states[site] > high.states[site] {
            return Ok(MonotoneCheck {
                ordered: false,
                first_violation: Some(Violation { site, time: s.time }),
                events,
            });
        }
    }
    Ok(MonotoneCheck {
        ordered: true,
        first_violation: None,
        events,
    })
}

/// Key of one indicator: site, interval index `k >= 1` for
/// `(-kδ, (-k+1)δ]`, and symbol type.
pub type IndicatorKey = (usize, u64, SymbolType);

/// The set indicators `X` of a timeline at fixed `q` and `δ`; every key not
/// present is zero. Symbols after time 0 are not bucketed.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicators {
    pub delta: f64,
    pub set: BTreeMap<IndicatorKey, u32>,
}

impl Indicators {
    pub fn get(&self, site: usize, k: u64, ty: SymbolType) -> bool {
        self.set.contains_key(&(site, k, ty))
    }

    /// Number of indicators equal to 1.
    pub fn ones(&self) -> usize {
        self.set.len()
    }

    /// Symbols per bucket, for checking bucket collisions.
    pub fn multiplicity(&self, site: usize, k: u64, ty: SymbolType) -> u32 {
        self.set.get(&(site, k, ty)).copied().unwrap_or(0)
    }
}

pub fn interval_index(time: f64, delta: f64) -> u64 {
    (-time / delta).floor() as u64 + 1
}

pub fn indicators(tl: &GraphicalTimeline, q: f64, delta: f64) -> Result<Indicators> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be > 0")));
    }
    let r = tl.resolver(q)?;
    let mut set = BTreeMap::new();
    for s in tl.symbols().iter().filter(|s| s.time <= 0.0) {
        *set
            .entry((s.site as usize, interval_index(s.time, delta), r.resolve(s)))
            .or_insert(0) += 1;
    }
    Ok(Indicators { delta, set })
}

/// Per-site and per-neighbourhood minimum gap between symbol times.
pub fn min_neighborhood_gap(tl: &GraphicalTimeline) -> f64 {
    let g: &Geometry = tl.geometry();
    let table = g.neighbor_table();
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); g.site_count()];
    for s in tl.symbols() {
        times[s.site as usize].push(s.time);
    }
    let mut best = f64::INFINITY;
    for site in 0..g.site_count() {
        let mut merged = times[site].clone();
        for j in table[site].iter().flatten() {
            if *j as usize != site {
                merged.extend_from_slice(&times[*j as usize]);
            }
        }
        merged.sort_by(f64::total_cmp);
        for w in merged.windows(2) {
            best = best.min(w[1] - w[0]);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphical::timeline::Symbol;
    use crate::lattice::{QParameterization, RateSet};

    fn param_a() -> QParameterization {
        QParameterization::new(&RateSet::model_a(0.15, 0.15, 0.05, 0.05, 0.05, 0.05).unwrap()).unwrap()
    }

    fn typed(r: &Resolver, site: u32, time: f64, ty: SymbolType) -> Symbol {
        let (q, b, g) = r.representative(ty).unwrap();
        Symbol { site, time, q, b, g }
    }

    #[test]
    fn empty_timeline_is_identity() {
        let g = Geometry::torus(3, 3).unwrap();
        let tl = GraphicalTimeline::from_symbols(g, 0.0, 1.0, *param_a().base(), vec![]).unwrap();
        let c = Configuration::from_values(g, &[1, 0, -1, 1, 0, -1, 1, 0, -1]).unwrap();
        assert_eq!(replay(&tl, 0.5, &c).unwrap(), c);
    }

    #[test]
    fn u1_ignores_degraded_site() {
        let g = Geometry::torus(3, 3).unwrap();
        let r = Resolver::from_param(&param_a(), 0.5).unwrap();
        let tl = GraphicalTimeline::from_symbols(g, 0.0, 1.0, *param_a().base(), vec![typed(&r, 4, 0.5, SymbolType::U1)])
            .unwrap();
        let c = Configuration::uniform(g, SiteState::Degraded);
        assert_eq!(replay(&tl, 0.5, &c).unwrap(), c);
        let v = Configuration::uniform(g, SiteState::Vacant);
        assert_eq!(replay(&tl, 0.5, &v).unwrap().get(4), SiteState::Occupied);
    }

    #[test]
    fn model_a_transitions_never_jump_two_levels() {
        for ty in SymbolType::all() {
            for s in SiteState::ALL {
                for src in SiteState::ALL {
                    let out = apply_symbol(Model::A, ty, s, |_| src);
                    assert!((out.value() - s.value()).abs() <= 1);
                }
            }
        }
        assert_eq!(apply_symbol(Model::B, SymbolType::D2, SiteState::Occupied, |_| SiteState::Vacant), SiteState::Degraded);
        assert_eq!(
            apply_symbol(Model::B, SymbolType::A2(Direction::Left), SiteState::Degraded, |_| SiteState::Occupied),
            SiteState::Degraded
        );
    }

    #[test]
    fn radius_zero_and_empty_window_give_occupied() {
        let g = Geometry::torus(5, 5).unwrap();
        let tl = GraphicalTimeline::from_symbols(g, -3.0, 0.0, *param_a().base(), vec![]).unwrap();
        assert_eq!(eta_qn(&tl, 12, 0.3, 0).unwrap(), SiteState::Occupied);
        assert_eq!(eta_qn(&tl, 12, 0.0, 4).unwrap(), SiteState::Occupied);
    }

    #[test]
    fn eta_requires_coverage() {
        let g = Geometry::torus(4, 4).unwrap();
        let tl = GraphicalTimeline::build(g, -3.0, 0.0, &param_a(), 1).unwrap();
        assert!(matches!(eta_qn(&tl, 0, 0.3, 9), Err(Error::InsufficientCoverage(_))));
        let tl = GraphicalTimeline::build(Geometry::torus(9, 9).unwrap(), -1.0, 0.0, &param_a(), 1).unwrap();
        assert!(matches!(eta_qn(&tl, 40, 0.3, 9), Err(Error::InsufficientCoverage(_))));
    }

    #[test]
    fn eta_matches_pinned_rectangle_replay() {
        let g = Geometry::torus(9, 9).unwrap();
        let tl = GraphicalTimeline::build(g, -3.0, 0.0, &param_a(), 21).unwrap();
        let x = g.index(4, 4);
        for q in [0.1, 0.4, 0.8] {
            let pinned: Vec<bool> = (0..81).map(|s| g.distance(x, s) >= 3).collect();
            let all1 = Configuration::uniform(g, SiteState::Occupied);
            let direct = replay_between(&tl, q, &all1, -3.0, 0.0, Some(pinned)).unwrap();
            assert_eq!(eta_qn(&tl, x, q, 9).unwrap(), direct.get(x));
        }
    }

    #[test]
    fn indicator_bucketing() {
        let g = Geometry::torus(3, 3).unwrap();
        let r = Resolver::from_param(&param_a(), 0.5).unwrap();
        let tl = GraphicalTimeline::from_symbols(g, -1.0, 0.0, *param_a().base(), vec![typed(&r, 2, -0.05, SymbolType::U1)])
            .unwrap();
        let x = indicators(&tl, 0.5, 0.1).unwrap();
        assert_eq!(x.ones(), 1);
        assert!(x.get(2, 1, SymbolType::U1));
        let empty = GraphicalTimeline::from_symbols(g, -1.0, 0.0, *param_a().base(), vec![]).unwrap();
        assert_eq!(indicators(&empty, 0.5, 0.1).unwrap().ones(), 0);
    }

    #[test]
    fn identical_coupling_is_identical() {
        let g = Geometry::torus(6, 6).unwrap();
        let tl = GraphicalTimeline::build(g, 0.0, 4.0, &param_a(), 4).unwrap();
        let c = Configuration::uniform(g, SiteState::Occupied);
        let m = couple_monotone(&tl, 0.4, 0.4, &c, &c, 4.0).unwrap();
        assert!(m.ordered);
        assert_eq!(m.events, tl.len());
    }

    #[test]
    fn coupling_preconditions() {
        let g = Geometry::torus(4, 4).unwrap();
        let tl = GraphicalTimeline::build(g, 0.0, 2.0, &param_a(), 4).unwrap();
        let lo = Configuration::uniform(g, SiteState::Degraded);
        let hi = Configuration::uniform(g, SiteState::Occupied);
        assert!(couple_monotone(&tl, 0.6, 0.2, &lo, &hi, 1.0).is_err());
        assert!(couple_monotone(&tl, 0.2, 0.6, &hi, &lo, 1.0).is_err());
        assert!(couple_monotone(&tl, 0.2, 0.6, &lo, &hi, 3.0).is_err());
    }
}
