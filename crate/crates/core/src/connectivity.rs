//! Static-configuration analysis at a fixed parameter: components, crossings,
//! circuits, four-arm/passage-site detection, and net events.
//!
//! Everything here reads a [`TauField`] without mutating it, so independent
//! fields can be analyzed in parallel.

use std::collections::BTreeMap;

use crate::field::{Color, TauField};
use crate::lattice::{
    bbox_diameter, covered_site_set, Adjacency, LatticeCoord, Region, SiteSet, ABSENT,
};
use crate::{Error, Result};

/// Disjoint sets over `0..n` with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        loop {
            let p = self.parent[x as usize];
            if p == x {
                return x;
            }
            let gp = self.parent[p as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
    }

    /// Unite the sets of `a` and `b`; returns the surviving root.
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return ra;
        }
        // larger set wins; ties keep the smaller index for determinism
        let (win, lose) = if self.size[ra as usize] > self.size[rb as usize]
            || (self.size[ra as usize] == self.size[rb as usize] && ra < rb)
        {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lose as usize] = win;
        self.size[win as usize] += self.size[lose as usize];
        win
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Connected components of one color inside a region.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    sites: SiteSet,
    /// Component id per region site, `ABSENT` for sites of the other color.
    ids: Vec<u32>,
    components: Vec<ComponentInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInfo {
    pub size: u32,
    pub min2x: i64,
    pub max2x: i64,
    pub min_y: i32,
    pub max_y: i32,
    /// Lowest canonical-order member; stable across labeling algorithms.
    pub representative: LatticeCoord,
}

impl ComponentInfo {
    pub fn diameter(&self) -> f64 {
        bbox_diameter(self.min2x, self.max2x, self.min_y, self.max_y)
    }
}

impl ComponentLabeling {
    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn component_of(&self, v: LatticeCoord) -> Option<u32> {
        let i = self.sites.index_of(v)?;
        match self.ids[i as usize] {
            ABSENT => None,
            id => Some(id),
        }
    }

    pub fn component_of_index(&self, i: u32) -> Option<u32> {
        match self.ids[i as usize] {
            ABSENT => None,
            id => Some(id),
        }
    }

    pub fn components(&self) -> &[ComponentInfo] {
        &self.components
    }
}

/// Label the same-color components of `region` at parameter `p`.
///
/// Component ids are assigned in canonical order of each component's first
/// site, so the labeling is a pure function of the configuration.
pub fn components(
    field: &TauField,
    region: Region,
    p: f64,
    color: Color,
) -> Result<ComponentLabeling> {
    let set = covered_site_set(region, field.sites())?;
    let n = set.len();
    let domain_idx: Vec<u32> = set
        .sites()
        .iter()
        .map(|&v| field.sites().index_of(v).unwrap())
        .collect();
    let in_color: Vec<bool> = domain_idx
        .iter()
        .map(|&d| field.is_color(p, d, color))
        .collect();
    let mut uf = UnionFind::new(n);
    for i in 0..n as u32 {
        if !in_color[i as usize] {
            continue;
        }
        for u in set.site(i).neighbors() {
            if let Some(j) = set.index_of(u) {
                if j > i && in_color[j as usize] {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut ids = vec![ABSENT; n];
    let mut root_to_id: Vec<u32> = vec![ABSENT; n];
    let mut components = Vec::new();
    for i in 0..n as u32 {
        if !in_color[i as usize] {
            continue;
        }
        let r = uf.find(i) as usize;
        let id = if root_to_id[r] == ABSENT {
            let id = components.len() as u32;
            root_to_id[r] = id;
            let v = set.site(i);
            components.push(ComponentInfo {
                size: 0,
                min2x: v.doubled_ex(),
                max2x: v.doubled_ex(),
                min_y: v.y,
                max_y: v.y,
                representative: v,
            });
            id
        } else {
            root_to_id[r]
        };
        ids[i as usize] = id;
        let v = set.site(i);
        let info = &mut components[id as usize];
        info.size += 1;
        info.min2x = info.min2x.min(v.doubled_ex());
        info.max2x = info.max2x.max(v.doubled_ex());
        info.min_y = info.min_y.min(v.y);
        info.max_y = info.max_y.max(v.y);
    }
    Ok(ComponentLabeling {
        sites: set,
        ids,
        components,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

const TOUCH_A: u8 = 1;
const TOUCH_B: u8 = 2;

/// Reusable crossing detector for one rectangle against one field domain.
///
/// Side sets follow the discrete quad convention that makes black/white
/// crossing duality exact on the triangular lattice: the left/right sides are
/// the extreme sites of every lattice row in the rectangle, the top/bottom
/// sides are the full extreme rows, and corner sites belong to both arcs.
#[derive(Debug, Clone)]
pub struct CrossingTester {
    set: SiteSet,
    adj: Adjacency,
    domain_idx: Vec<u32>,
    left: Vec<u32>,
    right: Vec<u32>,
    top: Vec<u32>,
    bottom: Vec<u32>,
}

impl CrossingTester {
    pub fn new(rect: Region, domain: &SiteSet) -> Result<CrossingTester> {
        if !matches!(rect, Region::Rect { .. }) {
            return Err(Error::InvalidRegion("crossing wants a rectangle".into()));
        }
        let set = covered_site_set(rect, domain)?;
        let adj = set.adjacency();
        let domain_idx = set
            .sites()
            .iter()
            .map(|&v| domain.index_of(v).unwrap())
            .collect();
        // per-row extremes; canonical order visits each row left to right
        let mut rows: BTreeMap<i32, (u32, u32)> = BTreeMap::new();
        for (i, v) in set.sites().iter().enumerate() {
            rows.entry(v.y)
                .and_modify(|e| {
                    let (fx, _) = set.site(e.0).embed();
                    let (lx, _) = set.site(e.1).embed();
                    let (ex, _) = v.embed();
                    if ex < fx {
                        e.0 = i as u32;
                    }
                    if ex > lx {
                        e.1 = i as u32;
                    }
                })
                .or_insert((i as u32, i as u32));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut top = Vec::new();
        let mut bottom = Vec::new();
        if let (Some(&y_min), Some(&y_max)) =
            (rows.keys().next(), rows.keys().next_back())
        {
            for (&y, &(first, last)) in &rows {
                left.push(first);
                right.push(last);
                if y == y_max || y == y_min {
                    for (i, v) in set.sites().iter().enumerate() {
                        if v.y == y {
                            if y == y_max {
                                top.push(i as u32);
                            }
                            if y == y_min {
                                bottom.push(i as u32);
                            }
                        }
                    }
                }
            }
        }
        Ok(CrossingTester {
            set,
            adj,
            domain_idx,
            left,
            right,
            top,
            bottom,
        })
    }

    pub fn site_count(&self) -> usize {
        self.set.len()
    }

    /// Does a same-color path join the two opposite sides?
    pub fn run(&self, field: &TauField, p: f64, color: Color, orientation: Orientation) -> bool {
        let n = self.set.len();
        let in_color: Vec<bool> = self
            .domain_idx
            .iter()
            .map(|&d| field.is_color(p, d, color))
            .collect();
        let mut uf = UnionFind::new(n);
        for i in 0..n as u32 {
            if !in_color[i as usize] {
                continue;
            }
            for j in self.adj.neighbors(i) {
                if j > i && in_color[j as usize] {
                    uf.union(i, j);
                }
            }
        }
        let (side_a, side_b) = match orientation {
            Orientation::Horizontal => (&self.left, &self.right),
            Orientation::Vertical => (&self.top, &self.bottom),
        };
        let mut flags = vec![0u8; n];
        for &s in side_a {
            if in_color[s as usize] {
                flags[uf.find(s) as usize] |= TOUCH_A;
            }
        }
        for &s in side_b {
            if in_color[s as usize] {
                let r = uf.find(s) as usize;
                flags[r] |= TOUCH_B;
                if flags[r] == TOUCH_A | TOUCH_B {
                    return true;
                }
            }
        }
        false
    }
}

/// One-shot crossing query; see [`CrossingTester`] for the hot-loop form.
pub fn has_crossing(
    field: &TauField,
    rect: Region,
    p: f64,
    color: Color,
    orientation: Orientation,
) -> Result<bool> {
    Ok(CrossingTester::new(rect, field.sites())?.run(field, p, color, orientation))
}

/// Is there a circuit of `color` in the annulus surrounding its hole?
///
/// Implemented through duality on the self-matching triangular lattice: a
/// black circuit surrounding the hole exists iff no white path crosses the
/// annulus from the hole's rim to the outer rim (and symmetrically for
/// white).
pub fn has_circuit(field: &TauField, annulus: Region, p: f64, color: Color) -> Result<bool> {
    let Region::Annulus {
        center,
        inner,
        outer,
    } = annulus
    else {
        return Err(Error::InvalidRegion("circuit wants an annulus".into()));
    };
    if inner >= outer {
        return Err(Error::InvalidRegion(format!(
            "annulus needs inner < outer, got {inner} >= {outer}"
        )));
    }
    if inner < 1.0 {
        return Err(Error::InvalidRegion(
            "circuit detection needs an inner radius of at least 1".into(),
        ));
    }
    let set = covered_site_set(annulus.clone(), field.sites())?;
    let hole = Region::Box {
        center,
        radius: inner,
    };
    let outer_box = Region::Box {
        center,
        radius: outer,
    };
    let dual = color.opposite();
    let n = set.len();
    let in_dual: Vec<bool> = set
        .sites()
        .iter()
        .map(|&v| field.is_color(p, field.sites().index_of(v).unwrap(), dual))
        .collect();
    let mut uf = UnionFind::new(n);
    for i in 0..n as u32 {
        if !in_dual[i as usize] {
            continue;
        }
        for u in set.site(i).neighbors() {
            if let Some(j) = set.index_of(u) {
                if j > i && in_dual[j as usize] {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut flags = vec![0u8; n];
    for i in 0..n as u32 {
        if !in_dual[i as usize] {
            continue;
        }
        let v = set.site(i);
        let touches_hole = v.neighbors().iter().any(|u| hole.contains(*u));
        let touches_exit = v.neighbors().iter().any(|u| !outer_box.contains(*u));
        if touches_hole || touches_exit {
            let r = uf.find(i) as usize;
            if touches_hole {
                flags[r] |= TOUCH_A;
            }
            if touches_exit {
                flags[r] |= TOUCH_B;
            }
            if flags[r] == TOUCH_A | TOUCH_B {
                // a dual blocking path crosses the annulus
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Detector for the slab-restricted four-arm event counted by passage-site
/// statistics.
///
/// A site `v` in `B_{n/2}` qualifies when `v` is white at `p_white`, two of
/// its neighbors are joined by `p_black`-black paths inside the horizontal
/// slab `[-3n,3n] x [-n,n]` to the left and right sides of `B_{3n}`, and
/// `v`'s white cluster inside the vertical slab `[-n,n] x [-3n,3n]` reaches
/// both the top and bottom sides. The two slab labelings give all four arm
/// checks.
#[derive(Debug)]
pub struct FourArmDetector {
    h_set: SiteSet,
    h_adj: Adjacency,
    h_domain_idx: Vec<u32>,
    h_left: Vec<u32>,
    h_right: Vec<u32>,
    v_set: SiteSet,
    v_adj: Adjacency,
    v_domain_idx: Vec<u32>,
    v_top: Vec<u32>,
    v_bottom: Vec<u32>,
    candidates: Vec<Candidate>,
}

#[derive(Debug, Clone)]
struct Candidate {
    coord: LatticeCoord,
    v_idx: u32,
    h_neighbors: [u32; 6],
}

impl FourArmDetector {
    pub fn new(n: u32, domain: &SiteSet) -> Result<FourArmDetector> {
        if n < 1 {
            return Err(Error::InvalidRegion("four-arm scale must be >= 1".into()));
        }
        let nf = n as f64;
        let h_rect = Region::rect(-3.0 * nf, 3.0 * nf, -nf, nf);
        let v_rect = Region::rect(-nf, nf, -3.0 * nf, 3.0 * nf);
        let h = CrossingTester::new(h_rect, domain)?;
        let v = CrossingTester::new(v_rect, domain)?;
        let candidates = SiteSet::new(Region::centered_box(nf / 2.0))
            .sites()
            .iter()
            .map(|&c| {
                let mut h_neighbors = [ABSENT; 6];
                for (k, u) in c.neighbors().into_iter().enumerate() {
                    if let Some(j) = h.set.index_of(u) {
                        h_neighbors[k] = j;
                    }
                }
                Candidate {
                    coord: c,
                    v_idx: v.set.index_of(c).expect("B_{n/2} lies inside the vertical slab"),
                    h_neighbors,
                }
            })
            .collect();
        Ok(FourArmDetector {
            h_set: h.set,
            h_adj: h.adj,
            h_domain_idx: h.domain_idx,
            h_left: h.left,
            h_right: h.right,
            v_set: v.set,
            v_adj: v.adj,
            v_domain_idx: v.domain_idx,
            v_top: v.top,
            v_bottom: v.bottom,
            candidates,
        })
    }

    /// All qualifying sites, in canonical order.
    pub fn detect(&self, field: &TauField, p_black: f64, p_white: f64) -> Vec<LatticeCoord> {
        let hn = self.h_set.len();
        let h_black: Vec<bool> = self
            .h_domain_idx
            .iter()
            .map(|&d| field.is_color(p_black, d, Color::Black))
            .collect();
        let mut uf_h = UnionFind::new(hn);
        for i in 0..hn as u32 {
            if !h_black[i as usize] {
                continue;
            }
            for j in self.h_adj.neighbors(i) {
                if j > i && h_black[j as usize] {
                    uf_h.union(i, j);
                }
            }
        }
        let mut h_flags = vec![0u8; hn];
        for &s in &self.h_left {
            if h_black[s as usize] {
                h_flags[uf_h.find(s) as usize] |= TOUCH_A;
            }
        }
        for &s in &self.h_right {
            if h_black[s as usize] {
                h_flags[uf_h.find(s) as usize] |= TOUCH_B;
            }
        }

        let vn = self.v_set.len();
        let v_white: Vec<bool> = self
            .v_domain_idx
            .iter()
            .map(|&d| field.is_color(p_white, d, Color::White))
            .collect();
        let mut uf_v = UnionFind::new(vn);
        for i in 0..vn as u32 {
            if !v_white[i as usize] {
                continue;
            }
            for j in self.v_adj.neighbors(i) {
                if j > i && v_white[j as usize] {
                    uf_v.union(i, j);
                }
            }
        }
        let mut v_flags = vec![0u8; vn];
        for &s in &self.v_top {
            if v_white[s as usize] {
                v_flags[uf_v.find(s) as usize] |= TOUCH_A;
            }
        }
        for &s in &self.v_bottom {
            if v_white[s as usize] {
                v_flags[uf_v.find(s) as usize] |= TOUCH_B;
            }
        }

        let mut out = Vec::new();
        for c in &self.candidates {
            if !v_white[c.v_idx as usize] {
                continue;
            }
            if v_flags[uf_v.find(c.v_idx) as usize] != TOUCH_A | TOUCH_B {
                continue;
            }
            let mut to_left = false;
            let mut to_right = false;
            for &j in &c.h_neighbors {
                if j == ABSENT || !h_black[j as usize] {
                    continue;
                }
                let f = h_flags[uf_h.find(j) as usize];
                to_left |= f & TOUCH_A != 0;
                to_right |= f & TOUCH_B != 0;
            }
            if to_left && to_right {
                out.push(c.coord);
            }
        }
        out
    }
}

/// One-shot four-arm query on a field covering `B_{3n}`.
pub fn four_arm_sites(
    field: &TauField,
    n: u32,
    p_black: f64,
    p_white: f64,
) -> Result<Vec<LatticeCoord>> {
    Ok(FourArmDetector::new(n, field.sites())?.detect(field, p_black, p_white))
}

/// The passage-site count `X_n`: sites of `B_{n/2}` that are critically white
/// with `p`-black connections to the left and right sides of `B_{3n}` and
/// critically white arms to the top and bottom.
pub fn count_passage_sites(field: &TauField, n: u32, p: f64) -> Result<usize> {
    Ok(four_arm_sites(field, n, p, crate::P_C)?.len())
}

/// Reusable net-event tester: one crossing tester per domino rectangle.
pub struct NetTester {
    rects: Vec<(CrossingTester, Orientation)>,
}

impl NetTester {
    /// Required field radius for parameters `(m, n)`: the domino rectangles
    /// reach out to `2m * (ceil(n/2m) + 1) + m`.
    pub fn required_radius(m: u32, n: u32) -> f64 {
        let k = n.div_ceil(2 * m) + 1;
        (2 * m * k + m) as f64
    }

    pub fn new(m: u32, n: u32, domain: &SiteSet) -> Result<NetTester> {
        if m < 1 || m > n {
            return Err(Error::InvalidRegion(format!(
                "net mesh needs 1 <= m <= n, got m {m}, n {n}"
            )));
        }
        let k = n.div_ceil(2 * m) as i64 + 1;
        let mf = m as f64;
        let mut rects = Vec::new();
        for x in -k..=k {
            for y in -k..=k {
                for (dx, dy, orientation) in
                    [(1i64, 0i64, Orientation::Horizontal), (0, 1, Orientation::Vertical)]
                {
                    let (x2, y2) = (x + dx, y + dy);
                    if x2 > k || y2 > k {
                        continue;
                    }
                    let rect = Region::rect(
                        2.0 * mf * x.min(x2) as f64 - mf,
                        2.0 * mf * x.max(x2) as f64 + mf,
                        2.0 * mf * y.min(y2) as f64 - mf,
                        2.0 * mf * y.max(y2) as f64 + mf,
                    );
                    rects.push((CrossingTester::new(rect, domain)?, orientation));
                }
            }
        }
        Ok(NetTester { rects })
    }

    /// True iff every domino rectangle carries a black crossing in its long
    /// direction.
    pub fn run(&self, field: &TauField, p: f64) -> bool {
        self.rects
            .iter()
            .all(|(tester, o)| tester.run(field, p, Color::Black, *o))
    }
}

/// One-shot net-event query.
pub fn net_event(field: &TauField, m: u32, n: u32, p: f64) -> Result<bool> {
    Ok(NetTester::new(m, n, field.sites())?.run(field, p))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::SplitMix64;

    fn random_field(radius: f64, seed: u64) -> TauField {
        TauField::sample(Region::centered_box(radius), seed)
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(6);
        uf.union(0, 1);
        uf.union(2, 3);
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(0), uf.find(2));
        uf.union(1, 3);
        assert_eq!(uf.find(0), uf.find(2));
        assert_eq!(uf.set_size(3), 4);
        assert_eq!(uf.set_size(5), 1);
    }

    /// Breadth-first reference labeling.
    fn bfs_components(
        field: &TauField,
        region: &Region,
        p: f64,
        color: Color,
    ) -> Vec<Vec<LatticeCoord>> {
        let sites = region.sites();
        let of_color: std::collections::HashSet<LatticeCoord> = sites
            .iter()
            .copied()
            .filter(|&v| field.color_at(p, v).unwrap() == color)
            .collect();
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for &start in &sites {
            if !of_color.contains(&start) || seen.contains(&start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = std::collections::VecDeque::from([start]);
            seen.insert(start);
            while let Some(v) = queue.pop_front() {
                for u in v.neighbors() {
                    if of_color.contains(&u) && seen.insert(u) {
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    #[test]
    fn components_match_bfs_oracle() {
        for seed in 0..50u64 {
            let field = random_field(4.0, seed);
            for color in [Color::Black, Color::White] {
                let labeling =
                    components(&field, Region::centered_box(4.0), 0.5, color).unwrap();
                let oracle = bfs_components(&field, &Region::centered_box(4.0), 0.5, color);
                assert_eq!(labeling.components().len(), oracle.len());
                for comp in &oracle {
                    let id = labeling.component_of(comp[0]).unwrap();
                    for v in comp {
                        assert_eq!(labeling.component_of(*v), Some(id));
                    }
                    let info = &labeling.components()[id as usize];
                    assert_eq!(info.size as usize, comp.len());
                    assert_eq!(info.representative, comp[0]);
                    assert_eq!(
                        info.diameter(),
                        crate::lattice::linf_diameter(comp.iter().copied())
                    );
                }
            }
        }
    }

    #[test]
    fn component_sizes_add_up() {
        let field = random_field(6.0, 77);
        let labeling = components(&field, Region::centered_box(6.0), 0.4, Color::Black).unwrap();
        let total: u32 = labeling.components().iter().map(|c| c.size).sum();
        let black = field.values().iter().filter(|&&t| t <= 0.4).count();
        assert_eq!(total as usize, black);
    }

    #[test]
    fn crossing_trivial_limits() {
        let field = random_field(8.0, 1);
        let rect = Region::rect(-6.0, 6.0, -4.0, 4.0);
        for o in [Orientation::Horizontal, Orientation::Vertical] {
            assert!(has_crossing(&field, rect.clone(), 1.0, Color::Black, o).unwrap());
            assert!(!has_crossing(&field, rect.clone(), 0.0, Color::Black, o).unwrap());
            assert!(has_crossing(&field, rect.clone(), 0.0, Color::White, o).unwrap());
        }
    }

    /// Path-search reference for crossings over an explicit coloring.
    fn crossing_oracle(
        sites: &[LatticeCoord],
        black: &std::collections::HashSet<LatticeCoord>,
        want: Color,
        orientation: Orientation,
    ) -> bool {
        let of_color: std::collections::HashSet<LatticeCoord> = sites
            .iter()
            .copied()
            .filter(|v| (want == Color::Black) == black.contains(v))
            .collect();
        let mut rows: BTreeMap<i32, Vec<LatticeCoord>> = BTreeMap::new();
        for &v in sites {
            rows.entry(v.y).or_default().push(v);
        }
        let y_min = *rows.keys().next().unwrap();
        let y_max = *rows.keys().next_back().unwrap();
        let (from, to): (Vec<_>, Vec<_>) = match orientation {
            Orientation::Horizontal => (
                rows.values()
                    .map(|r| *r.iter().min_by(|a, b| a.embed().0.total_cmp(&b.embed().0)).unwrap())
                    .collect(),
                rows.values()
                    .map(|r| *r.iter().max_by(|a, b| a.embed().0.total_cmp(&b.embed().0)).unwrap())
                    .collect(),
            ),
            Orientation::Vertical => (
                rows[&y_max].clone(),
                rows[&y_min].clone(),
            ),
        };
        let targets: std::collections::HashSet<_> = to.into_iter().collect();
        let mut queue: std::collections::VecDeque<LatticeCoord> =
            from.into_iter().filter(|v| of_color.contains(v)).collect();
        let mut seen: std::collections::HashSet<LatticeCoord> = queue.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if targets.contains(&v) {
                return true;
            }
            for u in v.neighbors() {
                if of_color.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        false
    }

    #[test]
    fn strip_crossing_matches_exhaustive_enumeration() {
        // 7-site strip: rows y=0 (4 sites) and y=1 (3 sites)
        let rect = Region::rect(0.0, 3.0, 0.0, 1.0);
        let sites = rect.sites();
        assert_eq!(sites.len(), 7);
        let field_domain = Region::rect(0.0, 3.0, 0.0, 1.0);
        for mask in 0u32..(1 << 7) {
            let black: std::collections::HashSet<LatticeCoord> = sites
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| *v)
                .collect();
            let blk = black.clone();
            let field = TauField::from_fn(field_domain.clone(), 0, move |v| {
                if blk.contains(&v) {
                    0.2
                } else {
                    0.8
                }
            });
            for color in [Color::Black, Color::White] {
                for o in [Orientation::Horizontal, Orientation::Vertical] {
                    assert_eq!(
                        has_crossing(&field, rect.clone(), 0.5, color, o).unwrap(),
                        crossing_oracle(&sites, &black, color, o),
                        "mask {mask:#b}, {color:?}, {o:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn crossing_duality_on_random_fields() {
        let rects = [
            Region::rect(-7.0, 7.0, -5.0, 5.0),
            Region::rect(-5.0, 3.0, -4.0, 4.0),
            Region::rect(0.0, 7.0, -6.0, 0.0),
            Region::rect(-6.0, -1.0, 1.0, 6.0),
        ];
        for seed in 0..2000u64 {
            let field = random_field(8.0, seed);
            let p = 0.2 + 0.6 * ((seed % 7) as f64 / 7.0);
            for rect in &rects {
                let bh =
                    has_crossing(&field, rect.clone(), p, Color::Black, Orientation::Horizontal)
                        .unwrap();
                let wv =
                    has_crossing(&field, rect.clone(), p, Color::White, Orientation::Vertical)
                        .unwrap();
                assert!(bh ^ wv, "duality violated at seed {seed}, p {p}, {rect:?}");
            }
        }
    }

    #[test]
    fn crossing_monotone_in_p() {
        let rect = Region::rect(-5.0, 5.0, -3.0, 3.0);
        for seed in 0..50u64 {
            let field = random_field(8.0, seed);
            let mut prev_black = false;
            let mut prev_white = true;
            for i in 0..=10 {
                let p = i as f64 / 10.0;
                let b = has_crossing(&field, rect.clone(), p, Color::Black, Orientation::Horizontal)
                    .unwrap();
                let w = has_crossing(&field, rect.clone(), p, Color::White, Orientation::Horizontal)
                    .unwrap();
                assert!(b >= prev_black, "black crossing lost at p {p}");
                assert!(w <= prev_white, "white crossing gained at p {p}");
                prev_black = b;
                prev_white = w;
            }
        }
    }

    /// Winding-number cycle search in the universal cover of the annulus.
    fn circuit_winding_oracle(
        field: &TauField,
        annulus: &Region,
        p: f64,
        color: Color,
    ) -> bool {
        let Region::Annulus { center, .. } = annulus else {
            panic!()
        };
        let q = (center.0 + 0.0371, center.1 + 0.0159);
        let sites = annulus.sites();
        let of_color: Vec<LatticeCoord> = sites
            .iter()
            .copied()
            .filter(|&v| field.color_at(p, v).unwrap() == color)
            .collect();
        let idx: std::collections::HashMap<LatticeCoord, usize> = of_color
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let cross = |u: LatticeCoord, v: LatticeCoord| -> i32 {
            let (x1, y1) = (u.embed().0 - q.0, u.embed().1 - q.1);
            let (x2, y2) = (v.embed().0 - q.0, v.embed().1 - q.1);
            if y1 <= 0.0 && y2 > 0.0 {
                let t = -y1 / (y2 - y1);
                if x1 + t * (x2 - x1) > 0.0 {
                    return 1;
                }
            } else if y2 <= 0.0 && y1 > 0.0 {
                let t = -y2 / (y1 - y2);
                if x2 + t * (x1 - x2) > 0.0 {
                    return -1;
                }
            }
            0
        };
        // reach (s, w != 0) from (s, 0) in the winding-annotated graph
        let w_range = 64i32;
        for s in 0..of_color.len() {
            let mut seen = std::collections::HashSet::new();
            let mut queue = std::collections::VecDeque::from([(s, 0i32)]);
            seen.insert((s, 0));
            while let Some((i, w)) = queue.pop_front() {
                for u in of_color[i].neighbors() {
                    let Some(&j) = idx.get(&u) else { continue };
                    let w2 = w + cross(of_color[i], u);
                    if w2.abs() > w_range {
                        continue;
                    }
                    if j == s && w2 != 0 {
                        return true;
                    }
                    if seen.insert((j, w2)) {
                        queue.push_back((j, w2));
                    }
                }
            }
        }
        false
    }

    #[test]
    fn circuit_trivial_limits() {
        let field = random_field(6.0, 3);
        let ann = Region::annulus((0.0, 0.0), 1.0, 4.0);
        assert!(has_circuit(&field, ann.clone(), 1.0, Color::Black).unwrap());
        assert!(!has_circuit(&field, ann.clone(), 0.0, Color::Black).unwrap());
        assert!(has_circuit(&field, ann.clone(), 0.0, Color::White).unwrap());
        assert!(!has_circuit(&field, ann, 1.0, Color::White).unwrap());
    }

    #[test]
    fn circuit_rejects_bad_annuli() {
        let field = random_field(6.0, 3);
        assert!(has_circuit(
            &field,
            Region::annulus((0.0, 0.0), 4.0, 3.0),
            0.5,
            Color::Black
        )
        .is_err());
        assert!(has_circuit(&field, Region::centered_box(3.0), 0.5, Color::Black).is_err());
    }

    #[test]
    fn circuit_matches_winding_oracle() {
        for (inner, outer, radius) in [(1.0, 3.0, 3.0), (2.0, 5.0, 5.0)] {
            let ann = Region::annulus((0.0, 0.0), inner, outer);
            for seed in 0..150u64 {
                let field = random_field(radius, seed);
                for p in [0.35, 0.5, 0.65] {
                    for color in [Color::Black, Color::White] {
                        assert_eq!(
                            has_circuit(&field, ann.clone(), p, color).unwrap(),
                            circuit_winding_oracle(&field, &ann, p, color),
                            "seed {seed}, p {p}, {color:?}, annulus {inner}-{outer}"
                        );
                    }
                }
            }
        }
    }

    /// Side-anchored BFS reference for the slab four-arm event.
    fn four_arm_oracle(
        field: &TauField,
        n: u32,
        p_black: f64,
        p_white: f64,
        v: LatticeCoord,
    ) -> bool {
        if field.color_at(p_white, v).unwrap() != Color::White {
            return false;
        }
        let nf = n as f64;
        let h_rect = Region::rect(-3.0 * nf, 3.0 * nf, -nf, nf);
        let v_rect = Region::rect(-nf, nf, -3.0 * nf, 3.0 * nf);
        let reach = |rect: &Region, color: Color, p: f64, orientation: Orientation, rev: bool| {
            let sites = rect.sites();
            let of_color: std::collections::HashSet<LatticeCoord> = sites
                .iter()
                .copied()
                .filter(|&w| field.color_at(p, w).unwrap() == color)
                .collect();
            let mut rows: BTreeMap<i32, Vec<LatticeCoord>> = BTreeMap::new();
            for &w in &sites {
                rows.entry(w.y).or_default().push(w);
            }
            let starts: Vec<LatticeCoord> = match orientation {
                Orientation::Horizontal => rows
                    .values()
                    .map(|r| {
                        if rev {
                            *r.iter()
                                .max_by(|a, b| a.embed().0.total_cmp(&b.embed().0))
                                .unwrap()
                        } else {
                            *r.iter()
                                .min_by(|a, b| a.embed().0.total_cmp(&b.embed().0))
                                .unwrap()
                        }
                    })
                    .collect(),
                Orientation::Vertical => {
                    let key = if rev {
                        *rows.keys().next().unwrap()
                    } else {
                        *rows.keys().next_back().unwrap()
                    };
                    rows[&key].clone()
                }
            };
            let mut seen: std::collections::HashSet<LatticeCoord> =
                starts.into_iter().filter(|w| of_color.contains(w)).collect();
            let mut queue: std::collections::VecDeque<LatticeCoord> =
                seen.iter().copied().collect();
            while let Some(w) = queue.pop_front() {
                for u in w.neighbors() {
                    if of_color.contains(&u) && seen.insert(u) {
                        queue.push_back(u);
                    }
                }
            }
            seen
        };
        let from_left = reach(&h_rect, Color::Black, p_black, Orientation::Horizontal, false);
        let from_right = reach(&h_rect, Color::Black, p_black, Orientation::Horizontal, true);
        let from_top = reach(&v_rect, Color::White, p_white, Orientation::Vertical, false);
        let from_bottom = reach(&v_rect, Color::White, p_white, Orientation::Vertical, true);
        let nbrs = v.neighbors();
        nbrs.iter().any(|u| from_left.contains(u))
            && nbrs.iter().any(|u| from_right.contains(u))
            && from_top.contains(&v)
            && from_bottom.contains(&v)
    }

    #[test]
    fn four_arm_trivial_limits() {
        let field = random_field(7.0, 9);
        // all black: no white arms possible
        assert!(four_arm_sites(&field, 2, 1.0, 1.0).unwrap().is_empty());
        // all white: no black arms possible
        assert!(four_arm_sites(&field, 2, 0.0, 0.0).unwrap().is_empty());
        // slabs poke outside the field domain
        assert!(four_arm_sites(&field, 50, 0.5, 0.5).is_err());
    }

    #[test]
    fn four_arm_matches_bfs_oracle() {
        let candidates = Region::centered_box(1.0).sites();
        let mut hits = 0;
        for seed in 0..300u64 {
            let field = random_field(7.0, seed);
            for (pb, pw) in [(0.5, 0.5), (0.45, 0.5), (0.55, 0.6)] {
                let got = four_arm_sites(&field, 2, pb, pw).unwrap();
                let expect: Vec<LatticeCoord> = candidates
                    .iter()
                    .copied()
                    .filter(|&v| four_arm_oracle(&field, 2, pb, pw, v))
                    .collect();
                assert_eq!(got, expect, "seed {seed}, p_black {pb}, p_white {pw}");
                hits += got.len();
            }
        }
        assert!(hits > 0, "test never exercised a positive four-arm event");
    }

    #[test]
    fn passage_count_monotone_in_white_parameter() {
        for seed in 0..100u64 {
            let field = random_field(13.0, seed);
            let loose = four_arm_sites(&field, 4, 0.45, 0.45).unwrap().len();
            let mid = four_arm_sites(&field, 4, 0.45, 0.5).unwrap().len();
            let strict = four_arm_sites(&field, 4, 0.45, 0.55).unwrap().len();
            assert!(strict <= mid, "seed {seed}");
            assert!(mid <= loose, "seed {seed}");
        }
    }

    #[test]
    fn net_trivial_limits() {
        let radius = NetTester::required_radius(2, 5);
        let field = random_field(radius, 4);
        assert!(net_event(&field, 2, 5, 1.0).unwrap());
        assert!(!net_event(&field, 2, 5, 0.0).unwrap());
        assert!(net_event(&field, 6, 5, 1.0).is_err());
    }

    #[test]
    fn net_confines_other_clusters() {
        // every accepted field must confine all black clusters but the
        // largest to diameter <= 4m inside B_n
        let (m, n) = (3u32, 9u32);
        let radius = NetTester::required_radius(m, n);
        let set = Arc::new(SiteSet::new(Region::centered_box(radius)));
        let tester = NetTester::new(m, n, &set).unwrap();
        let mut accepted = 0;
        let mut rng = SplitMix64::new(5);
        while accepted < 20 {
            let field = TauField::sample_on(set.clone(), rng.next_u64());
            let p = 0.75;
            if !tester.run(&field, p) {
                continue;
            }
            accepted += 1;
            let labeling =
                components(&field, Region::centered_box(radius), p, Color::Black).unwrap();
            let ball = Region::centered_box(n as f64);
            let mut intersecting: Vec<&ComponentInfo> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for v in ball.sites() {
                if let Some(id) = labeling.component_of(v) {
                    if seen.insert(id) {
                        intersecting.push(&labeling.components()[id as usize]);
                    }
                }
            }
            let largest = intersecting
                .iter()
                .map(|c| c.diameter())
                .fold(0.0f64, f64::max);
            for c in intersecting {
                if c.diameter() < largest {
                    assert!(
                        c.diameter() <= 4.0 * m as f64,
                        "cluster of diameter {} not confined",
                        c.diameter()
                    );
                }
            }
        }
    }
}
