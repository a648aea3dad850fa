//! Triangular-lattice geometry: vertices, neighbors, the planar embedding,
//! the L-infinity metric, and site enumeration for boxes, annuli and
//! rectangles.
//!
//! Vertex `(x, y)` embeds at `x + y * e^{i pi/3}`, i.e. at real coordinates
//! `(x + y/2, y * sqrt(3)/2)`. All region membership is decided in embedded
//! coordinates, so box semantics and the diameter metric agree.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `sqrt(3)/2`, the vertical spacing between lattice rows.
pub const SQRT3_OVER_2: f64 = 0.866_025_403_784_438_6;

/// A vertex of the triangular lattice, named by its integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeCoord {
    pub x: i32,
    pub y: i32,
}

/// Shorthand constructor.
pub fn coord(x: i32, y: i32) -> LatticeCoord {
    LatticeCoord { x, y }
}

impl LatticeCoord {
    /// Position in the plane: `(x + y/2, y * sqrt(3)/2)`.
    pub fn embed(self) -> (f64, f64) {
        (
            self.x as f64 + self.y as f64 / 2.0,
            self.y as f64 * SQRT3_OVER_2,
        )
    }

    /// The six neighbors, at embedded Euclidean distance 1.
    pub fn neighbors(self) -> [LatticeCoord; 6] {
        let LatticeCoord { x, y } = self;
        [
            coord(x + 1, y),
            coord(x - 1, y),
            coord(x, y + 1),
            coord(x, y - 1),
            coord(x + 1, y - 1),
            coord(x - 1, y + 1),
        ]
    }

    /// Doubled embedded x-coordinate, `2x + y`. Integer-exact; used so that
    /// diameter computations are free of rounding.
    pub fn doubled_ex(self) -> i64 {
        2 * self.x as i64 + self.y as i64
    }
}

/// L-infinity diameter of a set of sites, in embedded coordinates.
///
/// By the bounding-box identity this equals the supremum of pairwise
/// L-infinity distances: the x-extent is exact integer arithmetic on
/// `2x + y`, the y-extent is an integer row count times `sqrt(3)/2`.
/// An empty set has diameter 0 (the empty-cluster convention).
pub fn linf_diameter<I>(sites: I) -> f64
where
    I: IntoIterator<Item = LatticeCoord>,
{
    let mut it = sites.into_iter();
    let first = match it.next() {
        Some(v) => v,
        None => return 0.0,
    };
    let mut min2x = first.doubled_ex();
    let mut max2x = min2x;
    let mut miny = first.y;
    let mut maxy = first.y;
    for v in it {
        let d = v.doubled_ex();
        min2x = min2x.min(d);
        max2x = max2x.max(d);
        miny = miny.min(v.y);
        maxy = maxy.max(v.y);
    }
    bbox_diameter(min2x, max2x, miny, maxy)
}

/// Diameter of the axis-aligned bounding box `[min2x, max2x] x [miny, maxy]`
/// (doubled-x units and row units). Shared by the cluster engine so that the
/// incremental diameter agrees bit-for-bit with [`linf_diameter`].
pub fn bbox_diameter(min2x: i64, max2x: i64, miny: i32, maxy: i32) -> f64 {
    let dx = (max2x - min2x) as f64 / 2.0;
    let dy = (maxy - miny) as f64 * SQRT3_OVER_2;
    dx.max(dy)
}

/// A finite region of the plane; site membership is decided in embedded
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `B_r(center)`: all sites within L-infinity distance `r` of `center`.
    Box { center: (f64, f64), radius: f64 },
    /// `B_outer(center) \ B_inner(center)`.
    Annulus {
        center: (f64, f64),
        inner: f64,
        outer: f64,
    },
    /// `[x1, x2] x [y1, y2]`.
    Rect { x: (f64, f64), y: (f64, f64) },
}

impl Region {
    /// Box of radius `r` centered at the origin.
    pub fn centered_box(r: f64) -> Region {
        Region::Box {
            center: (0.0, 0.0),
            radius: r,
        }
    }

    pub fn box_at(center: (f64, f64), r: f64) -> Region {
        Region::Box { center, radius: r }
    }

    pub fn annulus(center: (f64, f64), inner: f64, outer: f64) -> Region {
        Region::Annulus {
            center,
            inner,
            outer,
        }
    }

    pub fn rect(x1: f64, x2: f64, y1: f64, y2: f64) -> Region {
        Region::Rect {
            x: (x1, x2),
            y: (y1, y2),
        }
    }

    /// Embedded-coordinate membership test.
    pub fn contains(&self, v: LatticeCoord) -> bool {
        let (ex, ey) = v.embed();
        match *self {
            Region::Box {
                center: (cx, cy),
                radius,
            } => (ex - cx).abs() <= radius && (ey - cy).abs() <= radius,
            Region::Annulus {
                center: (cx, cy),
                inner,
                outer,
            } => {
                let dx = (ex - cx).abs();
                let dy = (ey - cy).abs();
                dx <= outer && dy <= outer && !(dx <= inner && dy <= inner)
            }
            Region::Rect {
                x: (x1, x2),
                y: (y1, y2),
            } => x1 <= ex && ex <= x2 && y1 <= ey && ey <= y2,
        }
    }

    /// Bounding window in lattice coordinates, with one unit of slack.
    fn scan_window(&self) -> Option<(i32, i32, i32, i32)> {
        let (x1, x2, y1, y2) = match *self {
            Region::Box {
                center: (cx, cy),
                radius,
            } => {
                if radius < 0.0 {
                    return None;
                }
                (cx - radius, cx + radius, cy - radius, cy + radius)
            }
            Region::Annulus {
                center: (cx, cy),
                inner,
                outer,
            } => {
                if outer < 0.0 || inner > outer {
                    return None;
                }
                (cx - outer, cx + outer, cy - outer, cy + outer)
            }
            Region::Rect {
                x: (x1, x2),
                y: (y1, y2),
            } => {
                if x1 > x2 || y1 > y2 {
                    return None;
                }
                (x1, x2, y1, y2)
            }
        };
        let ylo = (y1 / SQRT3_OVER_2).floor() as i32 - 1;
        let yhi = (y2 / SQRT3_OVER_2).ceil() as i32 + 1;
        let ymax_abs = (ylo.abs().max(yhi.abs())) as f64;
        let xlo = (x1 - ymax_abs / 2.0).floor() as i32 - 1;
        let xhi = (x2 + ymax_abs / 2.0).ceil() as i32 + 1;
        Some((xlo, xhi, ylo, yhi))
    }

    /// All sites of the region in canonical order: lexicographic in `(x, y)`.
    /// Degenerate regions yield an empty list.
    pub fn sites(&self) -> Vec<LatticeCoord> {
        let mut out = Vec::new();
        let Some((xlo, xhi, ylo, yhi)) = self.scan_window() else {
            return out;
        };
        for x in xlo..=xhi {
            for y in ylo..=yhi {
                let v = coord(x, y);
                if self.contains(v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Inner boundary: sites of the region with at least one neighbor outside it.
pub fn inner_boundary(region: &Region) -> Vec<LatticeCoord> {
    region
        .sites()
        .into_iter()
        .filter(|v| v.neighbors().iter().any(|u| !region.contains(*u)))
        .collect()
}

/// Outer boundary: sites outside the region adjacent to a site inside it.
pub fn outer_boundary(region: &Region) -> Vec<LatticeCoord> {
    let mut out = Vec::new();
    let Some((xlo, xhi, ylo, yhi)) = region.scan_window() else {
        return out;
    };
    for x in xlo - 1..=xhi + 1 {
        for y in ylo - 1..=yhi + 1 {
            let v = coord(x, y);
            if !region.contains(v) && v.neighbors().iter().any(|u| region.contains(*u)) {
                out.push(v);
            }
        }
    }
    out
}

/// Per-column run of consecutive sites: `y` in `[y_start, y_end]`, stored at
/// indices `base..`.
#[derive(Debug, Clone)]
struct ColSegment {
    y_start: i32,
    y_end: i32,
    base: u32,
}

/// An indexed, canonically ordered site set for a region.
///
/// Site indices follow the canonical lexicographic `(x, y)` order, so all
/// downstream iteration (and hence RNG consumption and output bytes) is
/// deterministic. Lookup is O(1) through per-column segment tables.
#[derive(Debug, Clone)]
pub struct SiteSet {
    region: Region,
    sites: Vec<LatticeCoord>,
    cols: Vec<Vec<ColSegment>>,
    x_min: i32,
}

impl SiteSet {
    pub fn new(region: Region) -> SiteSet {
        let sites = region.sites();
        let x_min = sites.first().map(|v| v.x).unwrap_or(0);
        let x_max = sites.last().map(|v| v.x).unwrap_or(-1);
        let ncols = if x_max >= x_min {
            (x_max - x_min + 1) as usize
        } else {
            0
        };
        let mut cols: Vec<Vec<ColSegment>> = vec![Vec::new(); ncols];
        for (i, v) in sites.iter().enumerate() {
            let col = &mut cols[(v.x - x_min) as usize];
            match col.last_mut() {
                Some(seg) if seg.y_end + 1 == v.y => seg.y_end = v.y,
                _ => col.push(ColSegment {
                    y_start: v.y,
                    y_end: v.y,
                    base: i as u32,
                }),
            }
        }
        SiteSet {
            region,
            sites,
            cols,
            x_min,
        }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: u32) -> LatticeCoord {
        self.sites[i as usize]
    }

    pub fn sites(&self) -> &[LatticeCoord] {
        &self.sites
    }

    /// Index of `v` in canonical order, if it belongs to the set.
    pub fn index_of(&self, v: LatticeCoord) -> Option<u32> {
        let col = self.cols.get(usize::try_from(v.x.checked_sub(self.x_min)?).ok()?)?;
        for seg in col {
            if seg.y_start <= v.y && v.y <= seg.y_end {
                return Some(seg.base + (v.y - seg.y_start) as u32);
            }
        }
        None
    }

    pub fn contains(&self, v: LatticeCoord) -> bool {
        self.index_of(v).is_some()
    }

    /// Neighbor table restricted to the set; `u32::MAX` marks a missing
    /// neighbor (free boundary).
    pub fn adjacency(&self) -> Adjacency {
        let mut table = Vec::with_capacity(self.len());
        for v in &self.sites {
            let mut row = [ABSENT; 6];
            for (k, u) in v.neighbors().into_iter().enumerate() {
                if let Some(j) = self.index_of(u) {
                    row[k] = j;
                }
            }
            table.push(row);
        }
        Adjacency { table }
    }
}

pub const ABSENT: u32 = u32::MAX;

/// Precomputed in-set neighbor indices.
#[derive(Debug, Clone)]
pub struct Adjacency {
    table: Vec<[u32; 6]>,
}

impl Adjacency {
    /// In-set neighbors of site `i`.
    pub fn neighbors(&self, i: u32) -> impl Iterator<Item = u32> + '_ {
        self.table[i as usize]
            .iter()
            .copied()
            .filter(|&j| j != ABSENT)
    }
}

/// Validates that `region` is entirely covered by `domain` and returns its
/// site set.
pub fn covered_site_set(region: Region, domain: &SiteSet) -> Result<SiteSet> {
    let set = SiteSet::new(region);
    for v in set.sites() {
        if !domain.contains(*v) {
            return Err(Error::RegionNotCovered(*v));
        }
    }
    Ok(set)
}
