//! Lattice geometry, site states, configurations and rate bundles.
//!
//! Sites are indexed row-major: site `y * width + x` sits at column `x`,
//! row `y`. Every site has four directed incoming neighbour slots. On a
//! torus of width 2 the left and right slots name the same site; they are
//! still two slots, so an occupied neighbour there counts twice.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of a single site. The derived order is `Degraded < Vacant < Occupied`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum SiteState {
    /// `-1`: degraded soil, must be repaired before it can be occupied.
    Degraded,
    /// `0`: vacant.
    Vacant,
    /// `1`: occupied.
    Occupied,
}

impl SiteState {
    pub const ALL: [SiteState; 3] = [SiteState::Degraded, SiteState::Vacant, SiteState::Occupied];

    pub fn value(self) -> i8 {
        match self {
            SiteState::Degraded => -1,
            SiteState::Vacant => 0,
            SiteState::Occupied => 1,
        }
    }

    /// Base-3 digit used by state encodings: `value + 1`.
    pub fn digit(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_digit(d: usize) -> Option<Self> {
        match d {
            0 => Some(SiteState::Degraded),
            1 => Some(SiteState::Vacant),
            2 => Some(SiteState::Occupied),
            _ => None,
        }
    }
}

impl From<SiteState> for i8 {
    fn from(s: SiteState) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for SiteState {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(SiteState::Degraded),
            0 => Ok(SiteState::Vacant),
            1 => Ok(SiteState::Occupied),
            other => Err(format!("site state must be -1, 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for SiteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Direction of a neighbour slot, as seen from the receiving site.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Left, Direction::Right, Direction::Up, Direction::Down];

    pub fn index(self) -> usize {
        match self {
            Direction::Left => 0,
            Direction::Right => 1,
            Direction::Up => 2,
            Direction::Down => 3,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    fn offset(self) -> (isize, isize) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
        }
    }
}

/// Content of a neighbour slot.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Neighbor {
    Site(usize),
    /// Outside a bounded rectangle; callers read the geometry's boundary state.
    Exterior,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryKind {
    Torus,
    Rectangle { boundary_state: SiteState },
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    #[serde(flatten)]
    kind: GeometryKind,
    width: usize,
    height: usize,
}

/// Finite 2-D lattice: a torus, or a rectangle with a fixed exterior state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct Geometry {
    kind: GeometryKind,
    width: usize,
    height: usize,
}

impl TryFrom<RawGeometry> for Geometry {
    type Error = Error;

    fn try_from(raw: RawGeometry) -> Result<Self> {
        match raw.kind {
            GeometryKind::Torus => Geometry::torus(raw.width, raw.height),
            GeometryKind::Rectangle { boundary_state } => {
                Geometry::rectangle(raw.width, raw.height, boundary_state)
            }
        }
    }
}

impl From<Geometry> for RawGeometry {
    fn from(g: Geometry) -> Self {
        RawGeometry {
            kind: g.kind,
            width: g.width,
            height: g.height,
        }
    }
}

impl Geometry {
    /// Periodic lattice; both sides must be at least 2.
    pub fn torus(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidGeometry(format!(
                "torus needs width >= 2 and height >= 2, got {width}x{height}"
            )));
        }
        Self::checked(GeometryKind::Torus, width, height)
    }

    /// Bounded rectangle; neighbour slots that leave it read `boundary_state`.
    pub fn rectangle(width: usize, height: usize, boundary_state: SiteState) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry(format!(
                "rectangle must be nonempty, got {width}x{height}"
            )));
        }
        Self::checked(GeometryKind::Rectangle { boundary_state }, width, height)
    }

    fn checked(kind: GeometryKind, width: usize, height: usize) -> Result<Self> {
        if width.checked_mul(height).is_none_or(|n| n > u32::MAX as usize) {
            return Err(Error::InvalidGeometry(format!("{width}x{height} is too large")));
        }
        Ok(Geometry { kind, width, height })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn site_count(&self) -> usize {
        self.width * self.height
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, GeometryKind::Torus)
    }

    /// Exterior state of a rectangle; `None` for a torus.
    pub fn boundary_state(&self) -> Option<SiteState> {
        match self.kind {
            GeometryKind::Torus => None,
            GeometryKind::Rectangle { boundary_state } => Some(boundary_state),
        }
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.width, site / self.width)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.site_count() {
            return Err(Error::SiteOutOfBounds {
                site,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Content of one neighbour slot of an in-range site.
    pub fn neighbor(&self, site: usize, dir: Direction) -> Neighbor {
        let (x, y) = self.coords(site);
        let (dx, dy) = dir.offset();
        let (w, h) = (self.width as isize, self.height as isize);
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        match self.kind {
            GeometryKind::Torus => {
                Neighbor::Site(self.index(nx.rem_euclid(w) as usize, ny.rem_euclid(h) as usize))
            }
            GeometryKind::Rectangle { .. } => {
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    Neighbor::Exterior
                } else {
                    Neighbor::Site(self.index(nx as usize, ny as usize))
                }
            }
        }
    }

    /// The four incoming neighbour slots of `site`, in `Direction::ALL` order.
    pub fn neighbors(&self, site: usize) -> Result<[(Direction, Neighbor); 4]> {
        self.check_site(site)?;
        Ok(Direction::ALL.map(|d| (d, self.neighbor(site, d))))
    }

    /// Dense slot table: `table[site][dir.index()]`, exterior as `None`.
    pub fn neighbor_table(&self) -> Vec<[Option<u32>; 4]> {
        (0..self.site_count())
            .map(|s| {
                Direction::ALL.map(|d| match self.neighbor(s, d) {
                    Neighbor::Site(n) => Some(n as u32),
                    Neighbor::Exterior => None,
                })
            })
            .collect()
    }

    /// Graph distance between two sites (wrapping on a torus).
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        if self.is_torus() {
            dx.min(self.width - dx) + dy.min(self.height - dy)
        } else {
            dx + dy
        }
    }
}

/// A lattice state: one `SiteState` per site, row-major.
///
/// `PartialOrd` is the coordinatewise order; configurations on different
/// geometries are incomparable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    geometry: Geometry,
    states: Vec<SiteState>,
}

impl Configuration {
    pub fn uniform(geometry: Geometry, state: SiteState) -> Self {
        Configuration {
            geometry,
            states: vec![state; geometry.site_count()],
        }
    }

    pub fn from_states(geometry: Geometry, states: Vec<SiteState>) -> Result<Self> {
        if states.len() != geometry.site_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} states, got {}",
                geometry.site_count(),
                states.len()
            )));
        }
        Ok(Configuration { geometry, states })
    }

    pub fn from_values(geometry: Geometry, values: &[i8]) -> Result<Self> {
        let states = values
            .iter()
            .map(|&v| SiteState::try_from(v).map_err(Error::InvalidArgument))
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(geometry, states)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [SiteState] {
        &mut self.states
    }

    pub fn get(&self, site: usize) -> SiteState {
        self.states[site]
    }

    pub fn set(&mut self, site: usize, state: SiteState) {
        self.states[site] = state;
    }

    pub fn at(&self, x: usize, y: usize) -> SiteState {
        self.states[self.geometry.index(x, y)]
    }

    /// State seen through a neighbour slot.
    pub fn neighbor_state(&self, n: Neighbor) -> SiteState {
        match n {
            Neighbor::Site(s) => self.states[s],
            Neighbor::Exterior => self
                .geometry
                .boundary_state()
                .expect("exterior slot on a torus"),
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.states.iter().filter(|&&s| s == SiteState::Occupied).count()
    }

    pub fn density(&self) -> f64 {
        self.occupied_count() as f64 / self.states.len() as f64
    }

    /// Base-3 index with site 0 as the least significant digit.
    pub fn encode(&self) -> usize {
        self.states.iter().rev().fold(0, |acc, s| acc * 3 + s.digit())
    }

    pub fn decode(geometry: Geometry, mut index: usize) -> Self {
        let states = (0..geometry.site_count())
            .map(|_| {
                let d = index % 3;
                index /= 3;
                SiteState::from_digit(d).unwrap()
            })
            .collect();
        Configuration { geometry, states }
    }

    /// `self <= other` coordinatewise.
    pub fn is_dominated_by(&self, other: &Configuration) -> bool {
        self.geometry == other.geometry
            && self.states.iter().zip(&other.states).all(|(a, b)| a <= b)
    }
}

impl PartialOrd for Configuration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.geometry != other.geometry {
            return None;
        }
        let le = self.is_dominated_by(other);
        let ge = other.is_dominated_by(self);
        match (le, ge) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Degradation only from vacant sites; neighbour-assisted repair.
    A,
    /// Degradation from any state; spontaneous repair only.
    B,
}

/// Constant rates of a three-state process.
///
/// `kappa_tilde` is the vacant-to-degraded rate in Model A and the
/// any-to-degraded rate (`κ★`) in Model B. `lambda` and `lambda_tilde`
/// are per occupied neighbour slot. Model B has `lambda_tilde == 0`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub model: Model,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub lambda: f64,
    #[serde(default)]
    pub lambda_tilde: f64,
    pub h: f64,
    pub h_tilde: f64,
}

/// Fraction of the up-rate block carried by each up type, in the order
/// `h, h̃, λ (left, right, up, down), λ̃ (left, right, up, down)`.
pub type UpShares = [f64; 10];

impl RateSet {
    pub fn model_a(
        kappa: f64,
        kappa_tilde: f64,
        lambda: f64,
        lambda_tilde: f64,
        h: f64,
        h_tilde: f64,
    ) -> Result<Self> {
        let r = RateSet {
            model: Model::A,
            kappa,
            kappa_tilde,
            lambda,
            lambda_tilde,
            h,
            h_tilde,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn model_b(kappa: f64, kappa_star: f64, lambda: f64, h: f64, h_tilde: f64) -> Result<Self> {
        let r = RateSet {
            model: Model::B,
            kappa,
            kappa_tilde: kappa_star,
            lambda,
            lambda_tilde: 0.0,
            h,
            h_tilde,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa", self.kappa),
            ("kappa_tilde", self.kappa_tilde),
            ("lambda", self.lambda),
            ("lambda_tilde", self.lambda_tilde),
            ("h", self.h),
            ("h_tilde", self.h_tilde),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidRates(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if self.model == Model::B && self.lambda_tilde != 0.0 {
            return Err(Error::InvalidRates("Model B has no lambda_tilde".into()));
        }
        Ok(())
    }

    /// True when every rate of the model is strictly positive.
    pub fn all_positive(&self) -> bool {
        let common = self.kappa > 0.0
            && self.kappa_tilde > 0.0
            && self.lambda > 0.0
            && self.h > 0.0
            && self.h_tilde > 0.0;
        match self.model {
            Model::A => common && self.lambda_tilde > 0.0,
            Model::B => common,
        }
    }

    pub fn down_total(&self) -> f64 {
        self.kappa + self.kappa_tilde
    }

    /// `4λ + 4λ̃ + h + h̃`; equals `q` once rescaled.
    pub fn up_total(&self) -> f64 {
        4.0 * self.lambda + 4.0 * self.lambda_tilde + self.h + self.h_tilde
    }

    /// Total symbol rate on one site line of the graphical representation.
    pub fn line_total(&self) -> f64 {
        self.down_total() + self.up_total()
    }

    pub fn is_rescaled(&self, tol: f64) -> bool {
        (self.line_total() - 1.0).abs() <= tol
    }

    /// Same process with time rescaled so the per-line total rate is 1.
    pub fn rescaled(&self) -> Result<Self> {
        self.validate()?;
        let total = self.line_total();
        if total <= 0.0 {
            return Err(Error::InvalidRates("all rates are zero".into()));
        }
        Ok(self.scale_blocks(1.0 / total, 1.0 / total))
    }

    fn scale_blocks(&self, down: f64, up: f64) -> Self {
        RateSet {
            model: self.model,
            kappa: self.kappa * down,
            kappa_tilde: self.kappa_tilde * down,
            lambda: self.lambda * up,
            lambda_tilde: self.lambda_tilde * up,
            h: self.h * up,
            h_tilde: self.h_tilde * up,
        }
    }

    /// Re-parameterize a rescaled rate set to up-block mass `q`, keeping the
    /// ratios inside the up block and inside the down block.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        self.validate()?;
        if !(0.0..=1.0).contains(&q) || q.is_nan() {
            return Err(Error::QOutOfRange(q));
        }
        if !self.is_rescaled(1e-9) {
            return Err(Error::InvalidRates(format!(
                "with_q needs a rescaled base, line total is {}",
                self.line_total()
            )));
        }
        let up = self.up_total();
        let down = self.down_total();
        if up == 0.0 && q > 0.0 {
            return Err(Error::UndefinedRatios("up block is zero but q > 0".into()));
        }
        if down == 0.0 && q < 1.0 {
            return Err(Error::UndefinedRatios("down block is zero but q < 1".into()));
        }
        let up_scale = if up > 0.0 { q / up } else { 0.0 };
        let down_scale = if down > 0.0 { (1.0 - q) / down } else { 0.0 };
        Ok(self.scale_blocks(down_scale, up_scale))
    }

    /// Share of the down block carried by `kappa`.
    pub fn down_split(&self) -> f64 {
        let d = self.down_total();
        if d > 0.0 {
            self.kappa / d
        } else {
            0.0
        }
    }

    pub fn up_shares(&self) -> UpShares {
        let u = self.up_total();
        let mut s = [0.0; 10];
        if u > 0.0 {
            s[0] = self.h / u;
            s[1] = self.h_tilde / u;
            for d in 0..4 {
                s[2 + d] = self.lambda / u;
                s[6 + d] = self.lambda_tilde / u;
            }
        }
        s
    }
}

/// A rescaled reference rate set together with a chosen up-block mass `q`.
///
/// The reference keeps both blocks nonzero, so [`QParameterization::at`] can
/// move to any `q` in `[0, 1]` and back without losing the block ratios.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QParameterization {
    base: RateSet,
    q: f64,
}

impl QParameterization {
    /// Rescales `base` and records its own `q`.
    pub fn new(base: &RateSet) -> Result<Self> {
        let base = base.rescaled()?;
        if base.up_total() == 0.0 || base.down_total() == 0.0 {
            return Err(Error::UndefinedRatios(
                "q-parameterization needs nonzero up and down blocks".into(),
            ));
        }
        Ok(QParameterization { q: base.up_total(), base })
    }

    /// Model B reference from the down ratio `κ:κ★` and up ratios `λ:h:h̃`.
    pub fn model_b_ratios(kappa: f64, kappa_star: f64, lambda: f64, h: f64, h_tilde: f64) -> Result<Self> {
        Self::new(&RateSet::model_b(kappa, kappa_star, lambda, h, h_tilde)?)
    }

    /// The rescaled reference rate set.
    pub fn base(&self) -> &RateSet {
        &self.base
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn model(&self) -> Model {
        self.base.model
    }

    pub fn at(&self, q: f64) -> Result<Self> {
        self.base.with_q(q)?;
        Ok(QParameterization { base: self.base, q })
    }

    /// Rates at the current `q`.
    pub fn rates(&self) -> RateSet {
        self.base.with_q(self.q).expect("q validated on construction")
    }

    pub fn rates_at(&self, q: f64) -> Result<RateSet> {
        self.base.with_q(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn torus_wraps() {
        let g = Geometry::torus(4, 4).unwrap();
        let n = g.neighbors(0).unwrap();
        assert_eq!(n[0], (Direction::Left, Neighbor::Site(g.index(3, 0))));
        assert_eq!(n[1], (Direction::Right, Neighbor::Site(g.index(1, 0))));
        assert_eq!(n[2], (Direction::Up, Neighbor::Site(g.index(0, 3))));
        assert_eq!(n[3], (Direction::Down, Neighbor::Site(g.index(0, 1))));
    }

    #[test]
    fn width_two_torus_has_double_slot() {
        let g = Geometry::torus(2, 2).unwrap();
        let n = g.neighbors(0).unwrap();
        assert_eq!(n[0].1, Neighbor::Site(1));
        assert_eq!(n[1].1, Neighbor::Site(1));
        assert_ne!(n[0].0, n[1].0);
    }

    #[test]
    fn rectangle_corner_is_exterior() {
        let g = Geometry::rectangle(3, 3, SiteState::Occupied).unwrap();
        let n = g.neighbors(0).unwrap();
        assert_eq!(n[0].1, Neighbor::Exterior);
        assert_eq!(n[2].1, Neighbor::Exterior);
        assert_eq!(n[1].1, Neighbor::Site(1));
        assert_eq!(n[3].1, Neighbor::Site(3));
    }

    #[test]
    fn out_of_bounds_site() {
        let g = Geometry::torus(3, 3).unwrap();
        assert!(matches!(g.neighbors(9), Err(Error::SiteOutOfBounds { .. })));
    }

    #[test]
    fn degenerate_torus_rejected() {
        assert!(Geometry::torus(1, 2).is_err());
        assert!(Geometry::torus(2, 1).is_err());
        assert!(Geometry::rectangle(1, 1, SiteState::Vacant).is_ok());
    }

    #[test]
    fn geometry_json() {
        let g = Geometry::rectangle(5, 4, SiteState::Occupied).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"kind":"rectangle","boundary_state":1,"width":5,"height":4}"#);
        let back: Geometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Geometry>(r#"{"kind":"torus","width":1,"height":4}"#).is_err());
    }

    fn positive_a() -> RateSet {
        RateSet::model_a(0.15, 0.15, 0.05, 0.05, 0.05, 0.05).unwrap().rescaled().unwrap()
    }

    #[test]
    fn with_q_identity() {
        let base = positive_a();
        let same = base.with_q(base.up_total()).unwrap();
        for (a, b) in [
            (base.kappa, same.kappa),
            (base.kappa_tilde, same.kappa_tilde),
            (base.lambda, same.lambda),
            (base.lambda_tilde, same.lambda_tilde),
            (base.h, same.h),
            (base.h_tilde, same.h_tilde),
        ] {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn with_q_zero() {
        let base = RateSet::model_a(0.3, 0.1, 0.05, 0.02, 0.1, 0.04).unwrap().rescaled().unwrap();
        let r = base.with_q(0.0).unwrap();
        assert_eq!(r.up_total(), 0.0);
        assert!((r.kappa + r.kappa_tilde - 1.0).abs() < 1e-15);
        assert!((r.kappa / r.kappa_tilde - 3.0).abs() < 1e-12);
    }

    #[test]
    fn with_q_half_recomputes_unit_sum() {
        let base = RateSet::model_a(0.3, 0.1, 0.05, 0.02, 0.1, 0.04).unwrap().rescaled().unwrap();
        let u = base.up_total();
        let ratios = [base.h / u, base.h_tilde / u, base.lambda / u, base.lambda_tilde / u];
        let r = base.with_q(0.5).unwrap();
        assert!((r.h - ratios[0] * 0.5).abs() < 1e-15);
        assert!((r.h_tilde - ratios[1] * 0.5).abs() < 1e-15);
        assert!((r.lambda - ratios[2] * 0.5).abs() < 1e-15);
        assert!((r.lambda_tilde - ratios[3] * 0.5).abs() < 1e-15);
        let sum = r.kappa + r.kappa_tilde + 4.0 * r.lambda + 4.0 * r.lambda_tilde + r.h + r.h_tilde;
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn with_q_errors() {
        let base = positive_a();
        assert!(matches!(base.with_q(1.5), Err(Error::QOutOfRange(_))));
        assert!(matches!(base.with_q(-0.1), Err(Error::QOutOfRange(_))));
        let no_up = RateSet::model_b(0.5, 0.5, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(no_up.with_q(0.3), Err(Error::UndefinedRatios(_))));
        assert!(no_up.with_q(0.0).is_ok());
    }

    #[test]
    fn model_b_rejects_lambda_tilde() {
        let mut r = RateSet::model_b(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        r.lambda_tilde = 0.1;
        assert!(r.validate().is_err());
        assert!(RateSet::model_b(-1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn encode_roundtrip_small() {
        let g = Geometry::torus(2, 2).unwrap();
        for i in 0..81 {
            assert_eq!(Configuration::decode(g, i).encode(), i);
        }
        let c = Configuration::from_values(g, &[1, -1, -1, -1]).unwrap();
        assert_eq!(c.encode(), 2);
    }

    fn arb_geometry() -> impl Strategy<Value = Geometry> {
        (2usize..7, 2usize..7, any::<bool>()).prop_map(|(w, h, torus)| {
            if torus {
                Geometry::torus(w, h).unwrap()
            } else {
                Geometry::rectangle(w, h, SiteState::Vacant).unwrap()
            }
        })
    }

    proptest! {
        #[test]
        fn incoming_slot_multiplicity(g in arb_geometry()) {
            // Every site is named by exactly as many slots as it has non-exterior slots itself.
            let table = g.neighbor_table();
            let mut named = vec![0usize; g.site_count()];
            for slots in &table {
                for n in slots.iter().flatten() {
                    named[*n as usize] += 1;
                }
            }
            for (s, slots) in table.iter().enumerate() {
                let own = slots.iter().filter(|n| n.is_some()).count();
                prop_assert_eq!(named[s], own);
                if g.is_torus() {
                    prop_assert_eq!(own, 4);
                }
            }
        }

        #[test]
        fn with_q_reparameterization_is_idempotent(
            k in 0.01f64..1.0, kt in 0.01f64..1.0, l in 0.01f64..1.0, lt in 0.01f64..1.0,
            h in 0.01f64..1.0, ht in 0.01f64..1.0, q1 in 0.001f64..1.0, q2 in 0.0f64..1.0,
        ) {
            let base = RateSet::model_a(k, kt, l, lt, h, ht).unwrap().rescaled().unwrap();
            let direct = base.with_q(q2).unwrap();
            let twice = base.with_q(q1).unwrap().with_q(q2).unwrap();
            for (a, b) in [
                (direct.kappa, twice.kappa), (direct.kappa_tilde, twice.kappa_tilde),
                (direct.lambda, twice.lambda), (direct.lambda_tilde, twice.lambda_tilde),
                (direct.h, twice.h), (direct.h_tilde, twice.h_tilde),
            ] {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn configuration_order_is_partial_order(
            a in proptest::collection::vec(-1i8..=1, 9),
            b in proptest::collection::vec(-1i8..=1, 9),
            c in proptest::collection::vec(-1i8..=1, 9),
        ) {
            let g = Geometry::torus(3, 3).unwrap();
            let (a, b, c) = (
                Configuration::from_values(g, &a).unwrap(),
                Configuration::from_values(g, &b).unwrap(),
                Configuration::from_values(g, &c).unwrap(),
            );
            prop_assert!(a <= a);
            if a <= b && b <= a {
                prop_assert_eq!(&a, &b);
            }
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
        }
    }
}
