use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Direction, Geometry, Model, QParameterization, RateSet};
use crate::rng;

/// Resolved meaning of a Poisson symbol. Arrow directions name the slot the
/// arrow comes from: `A1(Left)` at `y` points from `y`'s left neighbour into `y`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolType {
    D1,
    D2,
    U1,
    U2,
    A1(Direction),
    A2(Direction),
}

impl SymbolType {
    pub const COUNT: usize = 12;

    pub fn all() -> [SymbolType; Self::COUNT] {
        use Direction::*;
        use SymbolType::*;
        [
            D1,
            D2,
            U1,
            U2,
            A1(Left),
            A1(Right),
            A1(Up),
            A1(Down),
            A2(Left),
            A2(Right),
            A2(Up),
            A2(Down),
        ]
    }

    /// Position in [`SymbolType::all`]; also the tie-break rank.
    pub fn rank(self) -> usize {
        match self {
            SymbolType::D1 => 0,
            SymbolType::D2 => 1,
            SymbolType::U1 => 2,
            SymbolType::U2 => 3,
            SymbolType::A1(d) => 4 + d.index(),
            SymbolType::A2(d) => 8 + d.index(),
        }
    }

    pub fn is_up(self) -> bool {
        !matches!(self, SymbolType::D1 | SymbolType::D2)
    }
}

/// One point of the unit-rate Poisson process on a site line, with the three
/// uniforms that decide its type at every `q`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    pub site: u32,
    pub time: f64,
    pub q: f64,
    pub b: f64,
    pub g: f64,
}

/// Maps the uniforms of a symbol to its type at a fixed `q`.
///
/// A symbol is up iff `Q <= q`. Down symbols are `D1` iff `B <= κ/(κ+κ̃)`.
/// Up symbols pick their type by where `G` falls in the partition of `[0, 1]`
/// proportional to `(h, h̃, λ x4, λ̃ x4)` of the reference rates.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Resolver {
    pub model: Model,
    pub q: f64,
    down_split: f64,
    cumulative: [f64; 10],
}

const UP_ORDER: [SymbolType; 10] = [
    SymbolType::U1,
    SymbolType::U2,
    SymbolType::A1(Direction::Left),
    SymbolType::A1(Direction::Right),
    SymbolType::A1(Direction::Up),
    SymbolType::A1(Direction::Down),
    SymbolType::A2(Direction::Left),
    SymbolType::A2(Direction::Right),
    SymbolType::A2(Direction::Up),
    SymbolType::A2(Direction::Down),
];

impl Resolver {
    pub fn new(base: &RateSet, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QOutOfRange(q));
        }
        if base.up_total() <= 0.0 || base.down_total() <= 0.0 {
            return Err(Error::UndefinedRatios("resolution needs nonzero up and down blocks".into()));
        }
        let shares = base.up_shares();
        let mut cumulative = [0.0; 10];
        let mut acc = 0.0;
        for (c, s) in cumulative.iter_mut().zip(shares) {
            acc += s;
            *c = acc;
        }
        cumulative[9] = 1.0;
        Ok(Resolver {
            model: base.model,
            q,
            down_split: base.down_split(),
            cumulative,
        })
    }

    pub fn from_param(param: &QParameterization, q: f64) -> Result<Self> {
        Self::new(param.base(), q)
    }

    pub fn resolve(&self, s: &Symbol) -> SymbolType {
        if s.q <= self.q {
            self.up_type(s.g)
        } else if s.b <= self.down_split {
            SymbolType::D1
        } else {
            SymbolType::D2
        }
    }

    fn up_type(&self, g: f64) -> SymbolType {
        let mut lo = 0.0;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if g <= c && c > lo {
                return UP_ORDER[i];
            }
            lo = c;
        }
        UP_ORDER[9]
    }

    /// Uniforms `(Q, B, G)` that resolve to `ty` under this resolver, if the
    /// type has positive probability.
    pub fn representative(&self, ty: SymbolType) -> Option<(f64, f64, f64)> {
        match ty {
            SymbolType::D1 if self.q < 1.0 && self.down_split > 0.0 => {
                Some(((1.0 + self.q) / 2.0, self.down_split / 2.0, 0.5))
            }
            SymbolType::D2 if self.q < 1.0 && self.down_split < 1.0 => {
                Some(((1.0 + self.q) / 2.0, (1.0 + self.down_split) / 2.0, 0.5))
            }
            SymbolType::D1 | SymbolType::D2 => None,
            up => {
                let i = UP_ORDER.iter().position(|&t| t == up)?;
                let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
                let hi = self.cumulative[i];
                (self.q > 0.0 && hi > lo).then(|| (self.q / 2.0, 0.5, (lo + hi) / 2.0))
            }
        }
    }
}

/// Header fields shared by the JSON and binary timeline encodings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineHeader {
    pub schema_version: u32,
    pub geometry: Geometry,
    pub t_start: f64,
    pub t_end: f64,
    pub master_seed: u64,
    /// Rescaled reference rates that fix the `B` and `G` partitions.
    pub base: RateSet,
}

/// Flat record of one symbol for serialization.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub site_x: u32,
    pub site_y: u32,
    pub time: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TimelineFile {
    header: TimelineHeader,
    symbols: Vec<SymbolRecord>,
}

/// Poisson symbols over `geometry × [t_start, t_end]`, sorted by
/// `(time, site)`. Immutable once built; one timeline serves every `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphicalTimeline {
    header: TimelineHeader,
    symbols: Vec<Symbol>,
}

const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"CLTL";

impl GraphicalTimeline {
    /// Unit-rate Poisson symbols on every site line, each with independent
    /// uniforms `(Q, B, G)`. Site `i` draws from stream `derive(seed, i)`.
    pub fn build(
        geometry: Geometry,
        t_start: f64,
        t_end: f64,
        param: &QParameterization,
        seed: u64,
    ) -> Result<Self> {
        check_window(t_start, t_end)?;
        let len = t_end - t_start;
        let mut symbols = Vec::new();
        for site in 0..geometry.site_count() {
            let mut rng = rng::child(seed, site as u64);
            let count = if len > 0.0 {
                Poisson::new(len).expect("positive mean").sample(&mut rng) as usize
            } else {
                0
            };
            for _ in 0..count {
                symbols.push(Symbol {
                    site: site as u32,
                    time: t_start + len * rng.random::<f64>(),
                    q: rng.random(),
                    b: rng.random(),
                    g: rng.random(),
                });
            }
        }
        Self::assemble(geometry, t_start, t_end, *param.base(), seed, symbols)
    }

    /// Timeline from explicit symbols. Every symbol must lie inside the region.
    pub fn from_symbols(
        geometry: Geometry,
        t_start: f64,
        t_end: f64,
        base: RateSet,
        symbols: Vec<Symbol>,
    ) -> Result<Self> {
        check_window(t_start, t_end)?;
        Self::assemble(geometry, t_start, t_end, base, 0, symbols)
    }

    fn assemble(
        geometry: Geometry,
        t_start: f64,
        t_end: f64,
        base: RateSet,
        master_seed: u64,
        mut symbols: Vec<Symbol>,
    ) -> Result<Self> {
        let base = base.rescaled()?;
        let n = geometry.site_count();
        for s in &symbols {
            if s.site as usize >= n {
                return Err(Error::SymbolOutsideRegion(format!("site {} of {n}", s.site)));
            }
            if !(s.time >= t_start && s.time <= t_end) {
                return Err(Error::SymbolOutsideRegion(format!(
                    "time {} outside [{t_start}, {t_end}]",
                    s.time
                )));
            }
        }
        symbols.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        Ok(GraphicalTimeline {
            header: TimelineHeader {
                schema_version: SCHEMA_VERSION,
                geometry,
                t_start,
                t_end,
                master_seed,
                base,
            },
            symbols,
        })
    }

    pub fn header(&self) -> &TimelineHeader {
        &self.header
    }

    pub fn geometry(&self) -> &Geometry {
        &self.header.geometry
    }

    pub fn t_start(&self) -> f64 {
        self.header.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.header.t_end
    }

    pub fn base(&self) -> &RateSet {
        &self.header.base
    }

    pub fn model(&self) -> Model {
        self.header.base.model
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn resolver(&self, q: f64) -> Result<Resolver> {
        Resolver::new(&self.header.base, q)
    }

    /// Types of all symbols at `q`, in timeline order.
    pub fn resolve_all(&self, q: f64) -> Result<Vec<SymbolType>> {
        let r = self.resolver(q)?;
        Ok(self.symbols.iter().map(|s| r.resolve(s)).collect())
    }

    fn records(&self) -> Vec<SymbolRecord> {
        let g = &self.header.geometry;
        self.symbols
            .iter()
            .map(|s| {
                let (x, y) = g.coords(s.site as usize);
                SymbolRecord {
                    site_x: x as u32,
                    site_y: y as u32,
                    time: s.time,
                    q: s.q,
                    b: s.b,
                    g: s.g,
                }
            })
            .collect()
    }

    fn from_records(header: TimelineHeader, records: &[SymbolRecord]) -> Result<Self> {
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema_version {}", header.schema_version)));
        }
        let g = header.geometry;
        let mut symbols = Vec::with_capacity(records.len());
        for r in records {
            if r.site_x as usize >= g.width() || r.site_y as usize >= g.height() {
                return Err(Error::SymbolOutsideRegion(format!("({}, {})", r.site_x, r.site_y)));
            }
            symbols.push(Symbol {
                site: g.index(r.site_x as usize, r.site_y as usize) as u32,
                time: r.time,
                q: r.q,
                b: r.b,
                g: r.g,
            });
        }
        let seed = header.master_seed;
        let mut tl = Self::assemble(g, header.t_start, header.t_end, header.base, seed, symbols)?;
        tl.header.base = header.base;
        Ok(tl)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TimelineFile {
            header: self.header.clone(),
            symbols: self.records(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TimelineFile = serde_json::from_str(s)?;
        Self::from_records(file.header, &file.symbols)
    }

    /// Binary layout: `b"CLTL"`, header length (u32 LE), header JSON, record
    /// count (u64 LE), then per record `x: u32, y: u32, time, Q, B, G: f64`,
    /// all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&(self.symbols.len() as u64).to_le_bytes())?;
        for r in self.records() {
            w.write_all(&r.site_x.to_le_bytes())?;
            w.write_all(&r.site_y.to_le_bytes())?;
            for v in [r.time, r.q, r.b, r.g] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a timeline file".into()));
        }
        let mut u32b = [0u8; 4];
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u32b)?;
        let mut header = vec![0u8; u32::from_le_bytes(u32b) as usize];
        r.read_exact(&mut header)?;
        let header: TimelineHeader = serde_json::from_slice(&header)?;
        r.read_exact(&mut u64b)?;
        let count = u64::from_le_bytes(u64b) as usize;
        let mut records = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            r.read_exact(&mut u32b)?;
            let site_x = u32::from_le_bytes(u32b);
            r.read_exact(&mut u32b)?;
            let site_y = u32::from_le_bytes(u32b);
            let mut f = [0.0; 4];
            for v in &mut f {
                r.read_exact(&mut u64b)?;
                *v = f64::from_le_bytes(u64b);
            }
            records.push(SymbolRecord {
                site_x,
                site_y,
                time: f[0],
                q: f[1],
                b: f[2],
                g: f[3],
            });
        }
        Self::from_records(header, &records)
    }
}

fn check_window(t_start: f64, t_end: f64) -> Result<()> {
    if !(t_start.is_finite() && t_end.is_finite() && t_start <= t_end) {
        return Err(Error::InvalidArgument(format!("bad time window [{t_start}, {t_end}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param_a() -> QParameterization {
        QParameterization::new(&RateSet::model_a(0.15, 0.15, 0.05, 0.05, 0.05, 0.05).unwrap()).unwrap()
    }

    #[test]
    fn q_zero_resolves_everything_down() {
        let g = Geometry::torus(6, 6).unwrap();
        let tl = GraphicalTimeline::build(g, 0.0, 5.0, &param_a(), 3).unwrap();
        assert!(!tl.is_empty());
        assert!(tl.resolve_all(0.0).unwrap().iter().all(|t| !t.is_up()));
    }

    #[test]
    fn symbols_sorted_and_inside_window() {
        let g = Geometry::torus(5, 4).unwrap();
        let tl = GraphicalTimeline::build(g, -2.0, 1.0, &param_a(), 9).unwrap();
        assert!(tl.symbols().windows(2).all(|w| w[0].time <= w[1].time));
        assert!(tl.symbols().iter().all(|s| s.time >= -2.0 && s.time <= 1.0));
    }

    #[test]
    fn model_b_never_resolves_a2() {
        let p = QParameterization::model_b_ratios(3.0, 1.0, 4.0, 1.0, 1.0).unwrap();
        let g = Geometry::torus(8, 8).unwrap();
        let tl = GraphicalTimeline::build(g, 0.0, 10.0, &p, 1).unwrap();
        for q in [0.2, 0.7, 1.0] {
            assert!(tl
                .resolve_all(q)
                .unwrap()
                .iter()
                .all(|t| !matches!(t, SymbolType::A2(_))));
        }
    }

    #[test]
    fn representatives_resolve_to_their_type() {
        let r = Resolver::from_param(&param_a(), 0.4).unwrap();
        for ty in SymbolType::all() {
            let (q, b, g) = r.representative(ty).unwrap();
            let s = Symbol { site: 0, time: 0.0, q, b, g };
            assert_eq!(r.resolve(&s), ty);
        }
    }

    #[test]
    fn outside_symbols_rejected() {
        let g = Geometry::torus(3, 3).unwrap();
        let base = *param_a().base();
        let s = Symbol { site: 9, time: 0.5, q: 0.1, b: 0.1, g: 0.1 };
        assert!(matches!(
            GraphicalTimeline::from_symbols(g, 0.0, 1.0, base, vec![s]),
            Err(Error::SymbolOutsideRegion(_))
        ));
        let s = Symbol { site: 1, time: 1.5, ..s };
        assert!(GraphicalTimeline::from_symbols(g, 0.0, 1.0, base, vec![s]).is_err());
    }

    #[test]
    fn json_and_binary_round_trip() {
        let g = Geometry::rectangle(4, 3, crate::lattice::SiteState::Occupied).unwrap();
        let tl = GraphicalTimeline::build(g, -1.5, 0.0, &param_a(), 77).unwrap();
        let back = GraphicalTimeline::from_json(&tl.to_json().unwrap()).unwrap();
        assert_eq!(back, tl);
        let mut buf = Vec::new();
        tl.write_binary(&mut buf).unwrap();
        assert_eq!(GraphicalTimeline::read_binary(buf.as_slice()).unwrap(), tl);
        assert_eq!(back.header().master_seed, 77);
    }

    #[test]
    fn same_seed_same_timeline() {
        let g = Geometry::torus(4, 4).unwrap();
        let a = GraphicalTimeline::build(g, 0.0, 3.0, &param_a(), 5).unwrap();
        let b = GraphicalTimeline::build(g, 0.0, 3.0, &param_a(), 5).unwrap();
        let c = GraphicalTimeline::build(g, 0.0, 3.0, &param_a(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
