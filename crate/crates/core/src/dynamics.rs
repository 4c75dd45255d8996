//! Exact continuous-time simulation of Models A and B.
//!
//! The engine keeps one total propensity per site in a binary sum tree.
//! Internal nodes are always recomputed from their children, so the root
//! equals the bottom-up sum of the current leaves; a full rebuild still runs
//! every `AUDIT_INTERVAL` events to refresh the leaves from the lattice.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Geometry, Model, RateSet, SiteState};

pub const AUDIT_INTERVAL: u64 = 1 << 20;

const EXTERIOR: u32 = u32::MAX;

/// Complete binary tree of nonnegative weights with O(log n) update and sampling.
#[derive(Clone, Debug)]
pub struct SumTree {
    size: usize,
    len: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(len: usize) -> Self {
        let size = len.max(1).next_power_of_two();
        SumTree {
            size,
            len,
            nodes: vec![0.0; 2 * size],
        }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut t = SumTree::new(weights.len());
        t.nodes[t.size..t.size + weights.len()].copy_from_slice(weights);
        for i in (1..t.size).rev() {
            t.nodes[i] = t.nodes[2 * i] + t.nodes[2 * i + 1];
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    pub fn update(&mut self, i: usize, w: f64) {
        let mut k = self.size + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf `i` with `sum(w[..i]) <= u < sum(w[..=i])`, plus the residual offset
    /// inside that leaf. Never returns a zero-weight leaf while the total is positive.
    pub fn sample(&self, mut u: f64) -> (usize, f64) {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if u < left || right <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        let leaf = k - self.size;
        (leaf, u.clamp(0.0, self.nodes[k]))
    }
}

/// One applied transition.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Event {
    pub dt: f64,
    pub site: usize,
    pub from: SiteState,
    pub to: SiteState,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Event(Event),
    /// No transition is enabled.
    Absorbed,
}

/// Gillespie engine over one configuration.
#[derive(Clone, Debug)]
pub struct Engine {
    config: Configuration,
    rates: RateSet,
    slots: Vec<[u32; 4]>,
    boundary_occupied: bool,
    occupied_nbrs: Vec<u8>,
    tree: SumTree,
    occupied: usize,
    time: f64,
    events: u64,
    since_rebuild: u64,
}

impl Engine {
    pub fn new(config: Configuration, rates: RateSet) -> Result<Self> {
        rates.validate()?;
        let geometry = *config.geometry();
        let slots = geometry
            .neighbor_table()
            .into_iter()
            .map(|s| s.map(|n| n.unwrap_or(EXTERIOR)))
            .collect();
        let n = geometry.site_count();
        let mut engine = Engine {
            boundary_occupied: geometry.boundary_state() == Some(SiteState::Occupied),
            occupied: config.occupied_count(),
            config,
            rates,
            slots,
            occupied_nbrs: vec![0; n],
            tree: SumTree::new(n),
            time: 0.0,
            events: 0,
            since_rebuild: 0,
        };
        engine.rebuild();
        Ok(engine)
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn rates(&self) -> &RateSet {
        &self.rates
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn density(&self) -> f64 {
        self.occupied as f64 / self.slots.len() as f64
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn set_rates(&mut self, rates: RateSet) -> Result<()> {
        rates.validate()?;
        if rates.model != self.rates.model {
            return Err(Error::InvalidRates("cannot switch model mid-run".into()));
        }
        self.rates = rates;
        self.rebuild();
        Ok(())
    }

    fn count_occupied_nbrs(&self, site: usize) -> u8 {
        self.slots[site]
            .iter()
            .filter(|&&n| {
                if n == EXTERIOR {
                    self.boundary_occupied
                } else {
                    self.config.get(n as usize) == SiteState::Occupied
                }
            })
            .count() as u8
    }

    fn site_rate(&self, state: SiteState, nbrs: u8) -> f64 {
        let r = &self.rates;
        let n = f64::from(nbrs);
        match (r.model, state) {
            (Model::A, SiteState::Occupied) => r.kappa,
            (Model::A, SiteState::Vacant) => r.kappa_tilde + r.h + r.lambda * n,
            (Model::A, SiteState::Degraded) => r.h_tilde + r.lambda_tilde * n,
            (Model::B, SiteState::Occupied) => r.kappa + r.kappa_tilde,
            (Model::B, SiteState::Vacant) => r.kappa_tilde + r.h + r.lambda * n,
            (Model::B, SiteState::Degraded) => r.h_tilde,
        }
    }

    fn choose_target(&self, state: SiteState, u: f64) -> SiteState {
        let r = &self.rates;
        match (r.model, state) {
            (Model::A, SiteState::Occupied) => SiteState::Vacant,
            (Model::A, SiteState::Vacant) | (Model::B, SiteState::Vacant) => {
                if u < r.kappa_tilde {
                    SiteState::Degraded
                } else {
                    SiteState::Occupied
                }
            }
            (_, SiteState::Degraded) => SiteState::Vacant,
            (Model::B, SiteState::Occupied) => {
                if u < r.kappa {
                    SiteState::Vacant
                } else {
                    SiteState::Degraded
                }
            }
        }
    }

    /// Recompute neighbour counts and every leaf from the lattice.
    pub fn rebuild(&mut self) {
        let n = self.slots.len();
        for s in 0..n {
            self.occupied_nbrs[s] = self.count_occupied_nbrs(s);
        }
        let weights: Vec<f64> = (0..n)
            .map(|s| self.site_rate(self.config.get(s), self.occupied_nbrs[s]))
            .collect();
        self.tree = SumTree::from_weights(&weights);
        self.since_rebuild = 0;
    }

    /// Largest absolute difference between the maintained propensities (leaves
    /// and total) and a from-scratch recomputation.
    pub fn propensity_audit(&self) -> f64 {
        let n = self.slots.len();
        let fresh: Vec<f64> = (0..n)
            .map(|s| self.site_rate(self.config.get(s), self.count_occupied_nbrs(s)))
            .collect();
        let mut worst = 0.0f64;
        for (s, &f) in fresh.iter().enumerate() {
            worst = worst.max((self.tree.get(s) - f).abs());
        }
        let total = SumTree::from_weights(&fresh).total();
        worst.max((self.tree.total() - total).abs())
    }

    fn set_site(&mut self, site: usize, to: SiteState) {
        let from = self.config.get(site);
        self.config.set(site, to);
        let delta: i8 = match (from == SiteState::Occupied, to == SiteState::Occupied) {
            (false, true) => 1,
            (true, false) => -1,
            _ => 0,
        };
        if delta != 0 {
            self.occupied = (self.occupied as isize + delta as isize) as usize;
            // The slot relation is symmetric with multiplicity, so the sites
            // that see `site` are exactly the sites in its own slots.
            for k in 0..4 {
                let y = self.slots[site][k];
                if y != EXTERIOR {
                    let y = y as usize;
                    self.occupied_nbrs[y] = (self.occupied_nbrs[y] as i8 + delta) as u8;
                }
            }
            for k in 0..4 {
                let y = self.slots[site][k];
                if y != EXTERIOR {
                    let y = y as usize;
                    let w = self.site_rate(self.config.get(y), self.occupied_nbrs[y]);
                    self.tree.update(y, w);
                }
            }
        }
        let w = self.site_rate(to, self.occupied_nbrs[site]);
        self.tree.update(site, w);
    }

    fn fire<R: Rng + ?Sized>(&mut self, rng: &mut R, dt: f64) -> Event {
        let u = rng.random::<f64>() * self.tree.total();
        let (site, offset) = self.tree.sample(u);
        let from = self.config.get(site);
        let to = self.choose_target(from, offset);
        self.set_site(site, to);
        self.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= AUDIT_INTERVAL {
            self.rebuild();
        }
        Event { dt, site, from, to }
    }

    fn holding_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.tree.total();
        if total > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / total
        } else {
            f64::INFINITY
        }
    }

    /// One Gillespie step with no time limit.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        if self.tree.total() <= 0.0 {
            return StepOutcome::Absorbed;
        }
        let dt = self.holding_time(rng);
        self.time += dt;
        StepOutcome::Event(self.fire(rng, dt))
    }

    /// Run events until the next one would pass `t_stop`, then set the clock
    /// to `t_stop`. The pending holding time is discarded, which is exact by
    /// memorylessness. `dwell(engine, duration)` is called for every interval
    /// the engine spends in a fixed state.
    pub fn advance_with<R, F>(&mut self, t_stop: f64, rng: &mut R, mut dwell: F)
    where
        R: Rng + ?Sized,
        F: FnMut(&Engine, f64),
    {
        while self.time < t_stop {
            let dt = self.holding_time(rng);
            if self.time + dt >= t_stop {
                dwell(self, t_stop - self.time);
                self.time = t_stop;
                break;
            }
            dwell(self, dt);
            self.time += dt;
            self.fire(rng, dt);
        }
    }

    /// `advance_with` that returns the time integral of the occupied count.
    pub fn advance<R: Rng + ?Sized>(&mut self, t_stop: f64, rng: &mut R) -> f64 {
        let mut integral = 0.0;
        self.advance_with(t_stop, rng, |e, d| integral += e.occupied as f64 * d);
        integral
    }
}

/// One Gillespie step on `config`. Builds a fresh engine, so this is O(N);
/// use [`Engine`] for trajectories.
pub fn step<R: Rng + ?Sized>(config: &mut Configuration, rates: &RateSet, rng: &mut R) -> Result<StepOutcome> {
    let mut engine = Engine::new(config.clone(), *rates)?;
    let out = engine.step(rng);
    *config = engine.into_config();
    Ok(out)
}

/// Piecewise-constant `λ(t)`, `h(t)` on a uniform grid, other rates fixed.
/// Past the last cell the last value is held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub constants: RateSet,
    pub dt_grid: f64,
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
}

impl RateSchedule {
    pub fn new(constants: RateSet, dt_grid: f64, lambda: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let s = RateSchedule {
            constants,
            dt_grid,
            lambda,
            h,
        };
        s.validate()?;
        Ok(s)
    }

    /// The constant schedule of a fixed rate set.
    pub fn constant(rates: RateSet) -> Self {
        RateSchedule {
            constants: rates,
            dt_grid: f64::INFINITY,
            lambda: vec![rates.lambda],
            h: vec![rates.h],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if !(self.dt_grid > 0.0) {
            return Err(Error::InvalidArgument(format!("dt_grid = {} must be > 0", self.dt_grid)));
        }
        if self.lambda.is_empty() || self.lambda.len() != self.h.len() {
            return Err(Error::InvalidArgument(
                "schedule needs equal, nonzero numbers of lambda and h cells".into(),
            ));
        }
        if self
            .lambda
            .iter()
            .chain(&self.h)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidRates("schedule values must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.lambda.len()
    }

    pub fn cell_of(&self, t: f64) -> usize {
        if self.dt_grid.is_infinite() {
            return 0;
        }
        ((t / self.dt_grid).floor().max(0.0) as usize).min(self.lambda.len() - 1)
    }

    pub fn rates_in_cell(&self, cell: usize) -> RateSet {
        let c = cell.min(self.lambda.len() - 1);
        RateSet {
            lambda: self.lambda[c],
            h: self.h[c],
            ..self.constants
        }
    }

    pub fn rates_at(&self, t: f64) -> RateSet {
        self.rates_in_cell(self.cell_of(t))
    }

    /// Start time of `cell`, or infinity when the schedule holds its last
    /// value from there on.
    pub fn cell_start(&self, cell: usize) -> f64 {
        if cell == 0 {
            0.0
        } else if self.dt_grid.is_infinite() || cell >= self.lambda.len() {
            f64::INFINITY
        } else {
            cell as f64 * self.dt_grid
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub final_config: Configuration,
    pub event_count: u64,
    pub elapsed: f64,
    /// Density at times `0, sample_dt, 2 sample_dt, ...` up to the horizon.
    pub density_trace: Vec<f64>,
    /// Time-averaged density over each interval between consecutive samples.
    pub interval_means: Vec<f64>,
    pub sample_dt: f64,
}

/// Simulate under a piecewise-constant schedule for model time `horizon`.
pub fn run<R: Rng + ?Sized>(
    config: Configuration,
    schedule: &RateSchedule,
    horizon: f64,
    rng: &mut R,
    sample_dt: f64,
) -> Result<SimResult> {
    schedule.validate()?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon = {horizon} must be finite and >= 0")));
    }
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidArgument(format!("sample_dt = {sample_dt} must be > 0")));
    }
    let n = config.geometry().site_count() as f64;
    let mut engine = Engine::new(config, schedule.rates_in_cell(0))?;
    let mut trace = vec![engine.density()];
    let mut means = Vec::new();
    let mut cell = 0;
    let mut k = 1usize;
    let mut acc = 0.0;
    let mut last_sample = 0.0;
    while engine.time() < horizon {
        let next_sample = k as f64 * sample_dt;
        let boundary = schedule.cell_start(cell + 1);
        let stop = next_sample.min(horizon).min(boundary);
        acc += engine.advance(stop, rng);
        let t = engine.time();
        if t >= next_sample {
            means.push(acc / (n * (t - last_sample)));
            trace.push(engine.density());
            acc = 0.0;
            last_sample = t;
            k += 1;
        }
        if t >= boundary {
            cell += 1;
            engine.set_rates(schedule.rates_in_cell(cell))?;
        }
    }
    Ok(SimResult {
        event_count: engine.event_count(),
        elapsed: engine.time(),
        final_config: engine.into_config(),
        density_trace: trace,
        interval_means: means,
        sample_dt,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    pub burn_in: f64,
    /// Length of the time-averaging window after burn-in.
    pub duration: f64,
    pub batches: usize,
    /// Record time spent in every full configuration (lattices of at most 12 sites).
    #[serde(default)]
    pub record_occupation: bool,
}

impl StationaryOptions {
    pub fn new(burn_in: f64, duration: f64) -> Self {
        StationaryOptions {
            burn_in,
            duration,
            batches: 50,
            record_occupation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub rho: f64,
    /// Batch-means standard error of `rho`.
    pub std_err: f64,
    pub batch_means: Vec<f64>,
    /// Fraction of measured time in each configuration, base-3 encoded.
    pub occupation: Option<Vec<f64>>,
}

impl StationaryEstimate {
    /// Symmetric normal-approximation interval `rho ± z·std_err`.
    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.rho - z * self.std_err, self.rho + z * self.std_err)
    }
}

/// Time-averaged stationary occupation density from the all-occupied start.
pub fn stationary_density<R: Rng + ?Sized>(
    rates: &RateSet,
    geometry: &Geometry,
    opts: &StationaryOptions,
    rng: &mut R,
) -> Result<StationaryEstimate> {
    if !(opts.burn_in > 0.0) || !(opts.duration > 0.0) {
        return Err(Error::InvalidArgument("burn_in and duration must be positive".into()));
    }
    if opts.batches < 2 {
        return Err(Error::InvalidArgument("need at least 2 batches".into()));
    }
    let n_sites = geometry.site_count();
    if opts.record_occupation && n_sites > 12 {
        return Err(Error::InvalidArgument("occupation recording is limited to 12 sites".into()));
    }
    let mut engine = Engine::new(Configuration::uniform(*geometry, SiteState::Occupied), *rates)?;
    engine.advance(opts.burn_in, rng);

    let mut occupation = opts
        .record_occupation
        .then(|| vec![0.0; 3usize.pow(n_sites as u32)]);
    let batch_len = opts.duration / opts.batches as f64;
    let mut batch_means = Vec::with_capacity(opts.batches);
    for b in 0..opts.batches {
        let stop = opts.burn_in + (b + 1) as f64 * batch_len;
        let start = engine.time();
        let mut integral = 0.0;
        match occupation.as_mut() {
            Some(occ) => engine.advance_with(stop, rng, |e, d| {
                integral += e.occupied_count() as f64 * d;
                occ[e.config().encode()] += d;
            }),
            None => integral = engine.advance(stop, rng),
        }
        batch_means.push(integral / (n_sites as f64 * (stop - start)));
    }
    let b = batch_means.len() as f64;
    let rho = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - rho).powi(2)).sum::<f64>() / (b - 1.0);
    if let Some(occ) = occupation.as_mut() {
        occ.iter_mut().for_each(|v| *v /= opts.duration);
    }
    Ok(StationaryEstimate {
        rho,
        std_err: (var / b).sqrt(),
        batch_means,
        occupation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn sum_tree_sampling_skips_zero_leaves() {
        let t = SumTree::from_weights(&[0.0, 2.0, 0.0, 1.0, 0.0]);
        assert_eq!(t.total(), 3.0);
        assert_eq!(t.sample(0.0).0, 1);
        assert_eq!(t.sample(1.999).0, 1);
        assert_eq!(t.sample(2.0).0, 3);
        assert_eq!(t.sample(2.999_999).0, 3);
        // Overshoot from rounding lands on the last positive leaf.
        assert_eq!(t.sample(3.5).0, 3);
    }

    #[test]
    fn all_occupied_only_decays() {
        let g = Geometry::torus(4, 4).unwrap();
        let rates = RateSet::model_a(1.0, 0.7, 0.3, 0.2, 0.5, 0.4).unwrap();
        let mut rng = stream(1);
        let mut c = Configuration::uniform(g, SiteState::Occupied);
        match step(&mut c, &rates, &mut rng).unwrap() {
            StepOutcome::Event(e) => {
                assert_eq!(e.from, SiteState::Occupied);
                assert_eq!(e.to, SiteState::Vacant);
                assert!(e.dt > 0.0);
            }
            StepOutcome::Absorbed => panic!("not absorbing"),
        }
        assert_eq!(c.occupied_count(), 15);
    }

    #[test]
    fn all_occupied_holding_time_mean() {
        let g = Geometry::torus(4, 4).unwrap();
        let rates = RateSet::model_a(0.5, 0.7, 0.3, 0.2, 0.5, 0.4).unwrap();
        let mut rng = stream(2);
        let reps = 20_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let mut e = Engine::new(Configuration::uniform(g, SiteState::Occupied), rates).unwrap();
            if let StepOutcome::Event(ev) = e.step(&mut rng) {
                sum += ev.dt;
            }
        }
        // Exp(N·κ) with N = 16, κ = 0.5: mean 1/8, sd of the mean (1/8)/sqrt(reps).
        let mean = sum / reps as f64;
        assert!((mean - 0.125).abs() < 4.0 * 0.125 / (reps as f64).sqrt());
    }

    #[test]
    fn all_degraded_without_repair_is_absorbed() {
        let g = Geometry::torus(3, 3).unwrap();
        let rates = RateSet::model_a(1.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let mut c = Configuration::uniform(g, SiteState::Degraded);
        let out = step(&mut c, &rates, &mut stream(3)).unwrap();
        assert_eq!(out, StepOutcome::Absorbed);
    }

    #[test]
    fn propensities_stay_consistent() {
        let g = Geometry::torus(5, 3).unwrap();
        for rates in [
            RateSet::model_a(0.25, 0.5, 0.375, 0.125, 0.5, 0.75).unwrap(),
            RateSet::model_b(0.25, 0.5, 0.375, 0.5, 0.75).unwrap(),
        ] {
            let mut e = Engine::new(Configuration::uniform(g, SiteState::Occupied), rates).unwrap();
            let mut rng = stream(4);
            for _ in 0..5_000 {
                e.step(&mut rng);
                assert!(e.propensity_audit() <= 1e-12);
            }
        }
        let rect = Geometry::rectangle(4, 3, SiteState::Occupied).unwrap();
        let rates = RateSet::model_a(0.25, 0.5, 0.375, 0.125, 0.5, 0.75).unwrap();
        let mut e = Engine::new(Configuration::uniform(rect, SiteState::Vacant), rates).unwrap();
        let mut rng = stream(5);
        for _ in 0..2_000 {
            e.step(&mut rng);
            assert!(e.propensity_audit() <= 1e-12);
        }
    }

    #[test]
    fn zero_horizon_is_identity() {
        let g = Geometry::torus(3, 3).unwrap();
        let rates = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
        let c = Configuration::uniform(g, SiteState::Vacant);
        let r = run(c.clone(), &RateSchedule::constant(rates), 0.0, &mut stream(6), 0.5).unwrap();
        assert_eq!(r.final_config, c);
        assert_eq!(r.event_count, 0);
        assert_eq!(r.elapsed, 0.0);
        assert_eq!(r.density_trace, vec![0.0]);
    }

    #[test]
    fn trace_is_a_density_and_sampled_on_grid() {
        let g = Geometry::torus(8, 8).unwrap();
        let rates = RateSet::model_a(1.0, 0.5, 0.4, 0.3, 0.2, 0.6).unwrap();
        let sched = RateSchedule::new(rates, 0.7, vec![0.1, 0.8, 0.0], vec![0.3, 0.0, 0.5]).unwrap();
        let r = run(
            Configuration::uniform(g, SiteState::Occupied),
            &sched,
            5.0,
            &mut stream(7),
            0.25,
        )
        .unwrap();
        assert_eq!(r.density_trace.len(), 21);
        assert_eq!(r.interval_means.len(), 20);
        assert!(r.density_trace.iter().chain(&r.interval_means).all(|d| (0.0..=1.0).contains(d)));
        assert_eq!(r.elapsed, 5.0);
    }

    #[test]
    fn stationary_rejects_nonpositive_windows() {
        let g = Geometry::torus(2, 2).unwrap();
        let rates = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
        let mut rng = stream(8);
        assert!(stationary_density(&rates, &g, &StationaryOptions::new(0.0, 10.0), &mut rng).is_err());
        assert!(stationary_density(&rates, &g, &StationaryOptions::new(1.0, -1.0), &mut rng).is_err());
    }
}
