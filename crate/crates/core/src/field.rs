//! Seeded sampling of the activation-time field and p-coloring of sites.
//!
//! Every site gets an i.i.d. Uniform[0,1) activation time `tau`, produced by
//! a counter-based keyed hash of `(seed, x, y)`. Values depend only on the
//! seed and the coordinate, never on the enumeration order, so restricting a
//! field to a sub-region reproduces the same values and replicas can be
//! generated independently in parallel.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeCoord, Region, SiteSet};
use crate::{Error, Result};

/// 64-bit avalanche mixer (the SplitMix64 finalizer).
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed hash of a site, uniform on [0,1) with 53-bit resolution.
pub fn site_tau(seed: u64, v: LatticeCoord) -> f64 {
    let h = mix64(mix64(mix64(seed) ^ (v.x as u32 as u64)) ^ (v.y as u32 as u64));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Small deterministic sequential generator, used for replica seed
/// derivation and for randomized tests.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` (bound > 0), by rejection-free modulo; bias is
    /// negligible for the small bounds used in tests.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Seed for replica `index` of a batch rooted at `base_seed`.
pub fn replica_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed ^ mix64(index.wrapping_add(0x5bf0_3635)))
}

/// Site color at a given parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// The sampled activation-time field on a finite domain.
#[derive(Debug, Clone)]
pub struct TauField {
    seed: u64,
    sites: Arc<SiteSet>,
    values: Vec<f64>,
}

impl TauField {
    /// Sample the field on `domain` from `seed`.
    pub fn sample(domain: Region, seed: u64) -> TauField {
        TauField::sample_on(Arc::new(SiteSet::new(domain)), seed)
    }

    /// Sample on a pre-built site set (shared across replicas in hot loops).
    pub fn sample_on(sites: Arc<SiteSet>, seed: u64) -> TauField {
        let values = sites.sites().iter().map(|&v| site_tau(seed, v)).collect();
        TauField {
            seed,
            sites,
            values,
        }
    }

    /// Build a field with explicit values; intended for tests and tools that
    /// need prescribed configurations.
    pub fn from_fn(domain: Region, seed: u64, f: impl Fn(LatticeCoord) -> f64) -> TauField {
        let sites = Arc::new(SiteSet::new(domain));
        let values = sites.sites().iter().map(|&v| f(v)).collect();
        TauField {
            seed,
            sites,
            values,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> &Region {
        self.sites.region()
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Activation time of site `v`.
    pub fn tau(&self, v: LatticeCoord) -> Result<f64> {
        match self.sites.index_of(v) {
            Some(i) => Ok(self.values[i as usize]),
            None => Err(Error::OutOfDomain(v)),
        }
    }

    pub fn tau_at(&self, index: u32) -> f64 {
        self.values[index as usize]
    }

    /// Color of site `v` at parameter `p`: black iff `tau_v <= p`.
    pub fn color_at(&self, p: f64, v: LatticeCoord) -> Result<Color> {
        Ok(if self.tau(v)? <= p {
            Color::Black
        } else {
            Color::White
        })
    }

    pub fn color_at_index(&self, p: f64, index: u32) -> Color {
        if self.values[index as usize] <= p {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn is_color(&self, p: f64, index: u32, color: Color) -> bool {
        match color {
            Color::Black => self.values[index as usize] <= p,
            Color::White => self.values[index as usize] > p,
        }
    }
}

const FIELD_MAGIC: &[u8; 4] = b"FPTF";
const FIELD_VERSION: u16 = 1;

pub(crate) fn write_region_to(w: &mut impl Write, region: &Region) -> Result<()> {
    match *region {
        Region::Box {
            center: (cx, cy),
            radius,
        } => {
            w.write_all(&[0u8])?;
            for f in [cx, cy, radius, 0.0] {
                w.write_all(&f.to_le_bytes())?;
            }
        }
        Region::Annulus {
            center: (cx, cy),
            inner,
            outer,
        } => {
            w.write_all(&[1u8])?;
            for f in [cx, cy, inner, outer] {
                w.write_all(&f.to_le_bytes())?;
            }
        }
        Region::Rect {
            x: (x1, x2),
            y: (y1, y2),
        } => {
            w.write_all(&[2u8])?;
            for f in [x1, x2, y1, y2] {
                w.write_all(&f.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn read_region_from(r: &mut impl Read) -> Result<Region> {
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let a = read_f64(r)?;
    let b = read_f64(r)?;
    let c = read_f64(r)?;
    let d = read_f64(r)?;
    match tag[0] {
        0 => Ok(Region::Box {
            center: (a, b),
            radius: c,
        }),
        1 => Ok(Region::Annulus {
            center: (a, b),
            inner: c,
            outer: d,
        }),
        2 => Ok(Region::Rect {
            x: (a, b),
            y: (c, d),
        }),
        t => Err(Error::Format(format!("unknown region tag {t}"))),
    }
}

impl TauField {
    /// Binary dump: magic, version, seed, domain, then the values in
    /// canonical site order as raw 64-bit words. Bit-exact round trip.
    pub fn dump(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&FIELD_VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        write_region_to(w, self.sites.region())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<TauField> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format("bad field magic".into()));
        }
        let mut v16 = [0u8; 2];
        r.read_exact(&mut v16)?;
        if u16::from_le_bytes(v16) != FIELD_VERSION {
            return Err(Error::Format("unsupported field version".into()));
        }
        let mut s64 = [0u8; 8];
        r.read_exact(&mut s64)?;
        let seed = u64::from_le_bytes(s64);
        let region = read_region_from(r)?;
        r.read_exact(&mut s64)?;
        let count = u64::from_le_bytes(s64) as usize;
        let sites = Arc::new(SiteSet::new(region));
        if sites.len() != count {
            return Err(Error::Format(format!(
                "domain holds {} sites but file stores {count}",
                sites.len()
            )));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut s64)?;
            values.push(f64::from_bits(u64::from_le_bytes(s64)));
        }
        Ok(TauField {
            seed,
            sites,
            values,
        })
    }
}
