//! The four frozen-percolation dynamics (size rule x boundary rule) as an
//! event-driven simulation over sorted activation times.
//!
//! [`run`] is the optimized engine: an augmented union-find whose per-root
//! payload tracks volume, bounding box, and freeze time, with the diameter
//! maintained incrementally through bounding boxes (exact for the L-infinity
//! metric). [`reference_run`] recomputes every cluster from scratch at each
//! activation and applies the process definitions literally; engine/oracle
//! agreement is the central correctness property of this module.
//!
//! Time is collapsed to the sorted activation sequence: the processes are
//! jump processes and nothing happens between activations. The domain edge is
//! a free boundary (missing neighbors are simply absent), a finite-window
//! approximation controlled by the domain choice in the config.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::connectivity::UnionFind;
use crate::field::TauField;
use crate::lattice::{bbox_diameter, linf_diameter, LatticeCoord, Region, SiteSet, ABSENT};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeRule {
    Diameter,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// Sites adjacent to a frozen cluster stay vacant forever.
    Original,
    /// Three-state dynamics: such sites may turn black later and form new
    /// clusters; frozen is a distinct permanent state.
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub rule: SizeRule,
    pub boundary: BoundaryRule,
    /// Size threshold N: a real diameter, or an integral site count.
    pub threshold: f64,
    pub domain: Region,
    pub seed: u64,
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "threshold must be >= 1, got {}",
                self.threshold
            )));
        }
        if self.rule == SizeRule::Volume
            && self.threshold.is_finite()
            && self.threshold.fract() != 0.0
        {
            return Err(Error::InvalidConfig(
                "volume threshold must be an integer".into(),
            ));
        }
        if SiteSet::new(self.domain.clone()).is_empty() {
            return Err(Error::InvalidConfig("domain holds no sites".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteState {
    White = 0,
    Black = 1,
    Frozen = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    BecameBlack,
    FrozeCluster,
    StayedWhite,
}

/// One activation in the process, in time order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tau: f64,
    pub site: LatticeCoord,
    pub action: EventAction,
}

/// A cluster of the time-1 decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// First member in canonical site order.
    pub representative: LatticeCoord,
    pub volume: u32,
    pub min2x: i64,
    pub max2x: i64,
    pub min_y: i32,
    pub max_y: i32,
    pub frozen: bool,
    /// Freeze time, or -1 when the cluster never froze.
    pub freeze_time: f64,
}

impl ClusterRecord {
    pub fn diameter(&self) -> f64 {
        bbox_diameter(self.min2x, self.max2x, self.min_y, self.max_y)
    }
}

/// Terminal configuration of a run.
#[derive(Debug, Clone)]
pub struct FinalState {
    config: ProcessConfig,
    sites: Arc<SiteSet>,
    states: Vec<SiteState>,
    /// Per-site freeze time (-1 when the site never froze). Under the
    /// original rule this is the derived time at which the site's cluster
    /// reached the threshold.
    freeze_times: Vec<f64>,
    clusters: Vec<ClusterRecord>,
    /// Per-site cluster index; `ABSENT` for white sites.
    cluster_of: Vec<u32>,
    events: Vec<Event>,
}

impl PartialEq for FinalState {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.states == other.states
            && self.freeze_times == other.freeze_times
            && self.clusters == other.clusters
            && self.cluster_of == other.cluster_of
            && self.events == other.events
    }
}

impl FinalState {
    pub fn config(&self) -> &ProcessConfig {
        &self.config
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    pub fn freeze_times(&self) -> &[f64] {
        &self.freeze_times
    }

    pub fn clusters(&self) -> &[ClusterRecord] {
        &self.clusters
    }

    pub fn cluster_of(&self, v: LatticeCoord) -> Option<&ClusterRecord> {
        let i = self.sites.index_of(v)?;
        match self.cluster_of[i as usize] {
            ABSENT => None,
            c => Some(&self.clusters[c as usize]),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Freeze events in time order: `(tau, cluster volume at freeze)` pairs
    /// are recoverable from the log; this returns the times.
    pub fn freeze_event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events
            .iter()
            .filter(|e| e.action == EventAction::FrozeCluster)
            .map(|e| e.tau)
    }

    /// Did the origin freeze? Original rule: the time-1 cluster of the
    /// origin reached the threshold. Modified rule: the origin's terminal
    /// state is frozen.
    pub fn origin_freezes(&self) -> Result<bool> {
        self.site_freezes(LatticeCoord { x: 0, y: 0 })
    }

    pub fn site_freezes(&self, v: LatticeCoord) -> Result<bool> {
        let i = self
            .sites
            .index_of(v)
            .ok_or(Error::OutOfDomain(v))?;
        Ok(self.freeze_times[i as usize] >= 0.0)
    }

    pub fn origin_freeze_time(&self) -> Result<Option<f64>> {
        let origin = LatticeCoord { x: 0, y: 0 };
        let i = self
            .sites
            .index_of(origin)
            .ok_or(Error::OutOfDomain(origin))?;
        let t = self.freeze_times[i as usize];
        Ok(if t >= 0.0 { Some(t) } else { None })
    }

    /// Diameter of the origin's time-1 black cluster; 0 when the origin is
    /// not black (the empty-cluster convention). Under the modified rule a
    /// frozen origin is not black, so its value is 0 as well.
    pub fn origin_cluster_diameter(&self) -> Result<f64> {
        let origin = LatticeCoord { x: 0, y: 0 };
        let i = self
            .sites
            .index_of(origin)
            .ok_or(Error::OutOfDomain(origin))?;
        if self.states[i as usize] != SiteState::Black {
            return Ok(0.0);
        }
        Ok(self.clusters[self.cluster_of[i as usize] as usize].diameter())
    }

    /// Assemble the terminal record from per-site outcomes.
    ///
    /// The cluster decomposition is recovered from the states alone: adjacent
    /// black sites share a cluster, and adjacent frozen sites share a cluster
    /// exactly when they froze at the same time (distinct frozen clusters
    /// always carry distinct freeze times).
    fn from_parts(
        config: ProcessConfig,
        sites: Arc<SiteSet>,
        states: Vec<SiteState>,
        freeze_times: Vec<f64>,
        events: Vec<Event>,
    ) -> FinalState {
        let n = sites.len();
        let mut uf = UnionFind::new(n);
        for i in 0..n as u32 {
            let si = states[i as usize];
            if si == SiteState::White {
                continue;
            }
            for u in sites.site(i).neighbors() {
                let Some(j) = sites.index_of(u) else { continue };
                if j <= i {
                    continue;
                }
                let sj = states[j as usize];
                let same = match (si, sj) {
                    (SiteState::Black, SiteState::Black) => true,
                    (SiteState::Frozen, SiteState::Frozen) => {
                        freeze_times[i as usize] == freeze_times[j as usize]
                    }
                    _ => false,
                };
                if same {
                    uf.union(i, j);
                }
            }
        }
        let mut cluster_of = vec![ABSENT; n];
        let mut root_to_id = vec![ABSENT; n];
        let mut clusters: Vec<ClusterRecord> = Vec::new();
        for i in 0..n as u32 {
            if states[i as usize] == SiteState::White {
                continue;
            }
            let v = sites.site(i);
            let r = uf.find(i) as usize;
            let id = if root_to_id[r] == ABSENT {
                let id = clusters.len() as u32;
                root_to_id[r] = id;
                clusters.push(ClusterRecord {
                    representative: v,
                    volume: 0,
                    min2x: v.doubled_ex(),
                    max2x: v.doubled_ex(),
                    min_y: v.y,
                    max_y: v.y,
                    frozen: freeze_times[i as usize] >= 0.0,
                    freeze_time: freeze_times[i as usize],
                });
                id
            } else {
                root_to_id[r]
            };
            cluster_of[i as usize] = id;
            let rec = &mut clusters[id as usize];
            rec.volume += 1;
            rec.min2x = rec.min2x.min(v.doubled_ex());
            rec.max2x = rec.max2x.max(v.doubled_ex());
            rec.min_y = rec.min_y.min(v.y);
            rec.max_y = rec.max_y.max(v.y);
            debug_assert_eq!(rec.freeze_time, freeze_times[i as usize]);
        }
        FinalState {
            config,
            sites,
            states,
            freeze_times,
            clusters,
            cluster_of,
            events,
        }
    }
}

fn activation_order(field: &TauField) -> Vec<u32> {
    let mut order: Vec<u32> = (0..field.len() as u32).collect();
    // ties broken by canonical site order
    order.sort_unstable_by(|&a, &b| {
        field
            .tau_at(a)
            .total_cmp(&field.tau_at(b))
            .then(a.cmp(&b))
    });
    order
}

fn cluster_size(rule: SizeRule, volume: u32, min2x: i64, max2x: i64, min_y: i32, max_y: i32) -> f64 {
    match rule {
        SizeRule::Volume => volume as f64,
        SizeRule::Diameter => bbox_diameter(min2x, max2x, min_y, max_y),
    }
}

/// Run the process described by `config` on a freshly sampled field.
pub fn run(config: &ProcessConfig) -> Result<FinalState> {
    config.validate()?;
    let field = TauField::sample(config.domain.clone(), config.seed);
    run_with(&field, config.rule, config.boundary, config.threshold)
}

/// Run the process on an explicit field.
pub fn run_with(
    field: &TauField,
    rule: SizeRule,
    boundary: BoundaryRule,
    threshold: f64,
) -> Result<FinalState> {
    let config = ProcessConfig {
        rule,
        boundary,
        threshold,
        domain: field.domain().clone(),
        seed: field.seed(),
    };
    config.validate()?;
    let sites = field.sites().clone();
    let adj = sites.adjacency();
    let n = sites.len();

    let mut uf = UnionFind::new(n);
    let mut black = vec![false; n];
    let mut vol: Vec<u32> = vec![1; n];
    let mut min2x: Vec<i64> = sites.sites().iter().map(|v| v.doubled_ex()).collect();
    let mut max2x = min2x.clone();
    let mut min_y: Vec<i32> = sites.sites().iter().map(|v| v.y).collect();
    let mut max_y = min_y.clone();
    let mut frozen = vec![false; n];
    let mut freeze_time = vec![-1.0f64; n];
    let mut events = Vec::with_capacity(n);

    let mut roots: Vec<u32> = Vec::with_capacity(6);
    for &i in &activation_order(field) {
        let tau = field.tau_at(i);
        let site = sites.site(i);
        roots.clear();
        for j in adj.neighbors(i) {
            if black[j as usize] {
                let r = uf.find(j);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
        match boundary {
            BoundaryRule::Original => {
                if roots.iter().any(|&r| frozen[r as usize]) {
                    // growth against a size->=N cluster is refused
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::StayedWhite,
                    });
                    continue;
                }
                black[i as usize] = true;
                let mut cur = i;
                for &r in &roots {
                    let (va, a0, a1, a2, a3) = (
                        vol[cur as usize],
                        min2x[cur as usize],
                        max2x[cur as usize],
                        min_y[cur as usize],
                        max_y[cur as usize],
                    );
                    let (vb, b0, b1, b2, b3) = (
                        vol[r as usize],
                        min2x[r as usize],
                        max2x[r as usize],
                        min_y[r as usize],
                        max_y[r as usize],
                    );
                    let w = uf.union(cur, r);
                    vol[w as usize] = va + vb;
                    min2x[w as usize] = a0.min(b0);
                    max2x[w as usize] = a1.max(b1);
                    min_y[w as usize] = a2.min(b2);
                    max_y[w as usize] = a3.max(b3);
                    cur = w;
                }
                let c = cur as usize;
                let size = cluster_size(rule, vol[c], min2x[c], max2x[c], min_y[c], max_y[c]);
                if size >= threshold {
                    frozen[c] = true;
                    freeze_time[c] = tau;
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::FrozeCluster,
                    });
                } else {
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::BecameBlack,
                    });
                }
            }
            BoundaryRule::Modified => {
                // frozen clusters are permanently excluded from merges
                roots.retain(|&r| !frozen[r as usize]);
                let mut cand_vol = 1u32;
                let mut c0 = site.doubled_ex();
                let mut c1 = c0;
                let mut c2 = site.y;
                let mut c3 = site.y;
                for &r in &roots {
                    cand_vol += vol[r as usize];
                    c0 = c0.min(min2x[r as usize]);
                    c1 = c1.max(max2x[r as usize]);
                    c2 = c2.min(min_y[r as usize]);
                    c3 = c3.max(max_y[r as usize]);
                }
                let size = cluster_size(rule, cand_vol, c0, c1, c2, c3);
                black[i as usize] = true;
                let mut cur = i;
                for &r in &roots {
                    cur = uf.union(cur, r);
                }
                let c = cur as usize;
                vol[c] = cand_vol;
                min2x[c] = c0;
                max2x[c] = c1;
                min_y[c] = c2;
                max_y[c] = c3;
                if size >= threshold {
                    frozen[c] = true;
                    freeze_time[c] = tau;
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::FrozeCluster,
                    });
                } else {
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::BecameBlack,
                    });
                }
            }
        }
    }

    let mut states = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for i in 0..n as u32 {
        if !black[i as usize] {
            states.push(SiteState::White);
            times.push(-1.0);
            continue;
        }
        let r = uf.find(i) as usize;
        if frozen[r] {
            times.push(freeze_time[r]);
            states.push(match boundary {
                // the original process has no frozen state; freezing is
                // growth stoppage of a black cluster
                BoundaryRule::Original => SiteState::Black,
                BoundaryRule::Modified => SiteState::Frozen,
            });
        } else {
            times.push(-1.0);
            states.push(SiteState::Black);
        }
    }
    Ok(FinalState::from_parts(config, sites, states, times, events))
}

/// Naive reference implementation with the same contract as [`run`]:
/// at each activation all clusters are recomputed from scratch by graph
/// search and the process definitions are applied literally.
pub fn reference_run(config: &ProcessConfig) -> Result<FinalState> {
    config.validate()?;
    let field = TauField::sample(config.domain.clone(), config.seed);
    reference_run_with(&field, config.rule, config.boundary, config.threshold)
}

pub fn reference_run_with(
    field: &TauField,
    rule: SizeRule,
    boundary: BoundaryRule,
    threshold: f64,
) -> Result<FinalState> {
    let config = ProcessConfig {
        rule,
        boundary,
        threshold,
        domain: field.domain().clone(),
        seed: field.seed(),
    };
    config.validate()?;
    let sites = field.sites().clone();
    let n = sites.len();
    let mut states = vec![SiteState::White; n];
    let mut times = vec![-1.0f64; n];
    let mut events = Vec::with_capacity(n);

    // cluster of `start` among sites currently in `included` states
    let gather = |states: &[SiteState], start: u32, included: SiteState| -> Vec<u32> {
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        let mut seen = vec![false; n];
        seen[start as usize] = true;
        while let Some(w) = queue.pop_front() {
            for u in sites.site(w).neighbors() {
                let Some(j) = sites.index_of(u) else { continue };
                if !seen[j as usize] && states[j as usize] == included {
                    seen[j as usize] = true;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        comp
    };
    let measure = |comp: &[u32]| -> f64 {
        match rule {
            SizeRule::Volume => comp.len() as f64,
            SizeRule::Diameter => linf_diameter(comp.iter().map(|&j| sites.site(j))),
        }
    };

    for &i in &activation_order(field) {
        let tau = field.tau_at(i);
        let site = sites.site(i);
        let black_neighbors: Vec<u32> = sites
            .site(i)
            .neighbors()
            .into_iter()
            .filter_map(|u| sites.index_of(u))
            .filter(|&j| states[j as usize] == SiteState::Black)
            .collect();
        match boundary {
            BoundaryRule::Original => {
                let mut refused = false;
                let mut visited: Vec<u32> = Vec::new();
                for &j in &black_neighbors {
                    if visited.contains(&j) {
                        continue;
                    }
                    let comp = gather(&states, j, SiteState::Black);
                    if measure(&comp) >= threshold {
                        refused = true;
                        break;
                    }
                    visited.extend_from_slice(&comp);
                }
                if refused {
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::StayedWhite,
                    });
                    continue;
                }
                states[i as usize] = SiteState::Black;
                let comp = gather(&states, i, SiteState::Black);
                if measure(&comp) >= threshold {
                    for &j in &comp {
                        times[j as usize] = tau;
                    }
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::FrozeCluster,
                    });
                } else {
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::BecameBlack,
                    });
                }
            }
            BoundaryRule::Modified => {
                states[i as usize] = SiteState::Black;
                let union = gather(&states, i, SiteState::Black);
                if measure(&union) >= threshold {
                    for &j in &union {
                        states[j as usize] = SiteState::Frozen;
                        times[j as usize] = tau;
                    }
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::FrozeCluster,
                    });
                } else {
                    events.push(Event {
                        tau,
                        site,
                        action: EventAction::BecameBlack,
                    });
                }
            }
        }
    }
    Ok(FinalState::from_parts(config, sites, states, times, events))
}

const STATE_MAGIC: &[u8; 4] = b"FPFS";
const STATE_VERSION: u16 = 1;

impl FinalState {
    /// Binary dump: header (magic, version, config) followed by per-site
    /// state codes (0 = white, 1 = black, 2 = frozen) and the per-site
    /// freeze-time array (-1 for never-frozen sites), both in canonical site
    /// order. Bit-exact and versioned; the event log is not persisted.
    pub fn dump(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(STATE_MAGIC)?;
        w.write_all(&STATE_VERSION.to_le_bytes())?;
        w.write_all(&[
            match self.config.rule {
                SizeRule::Diameter => 0u8,
                SizeRule::Volume => 1,
            },
            match self.config.boundary {
                BoundaryRule::Original => 0u8,
                BoundaryRule::Modified => 1,
            },
        ])?;
        w.write_all(&self.config.threshold.to_bits().to_le_bytes())?;
        w.write_all(&self.config.seed.to_le_bytes())?;
        crate::field::write_region_to(w, &self.config.domain)?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        for s in &self.states {
            w.write_all(&[*s as u8])?;
        }
        for t in &self.freeze_times {
            w.write_all(&t.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    /// Load a dump; the event log comes back empty.
    pub fn load(r: &mut impl Read) -> Result<FinalState> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != STATE_MAGIC {
            return Err(Error::Format("bad final-state magic".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        if u16::from_le_bytes(b2) != STATE_VERSION {
            return Err(Error::Format("unsupported final-state version".into()));
        }
        r.read_exact(&mut b2)?;
        let rule = match b2[0] {
            0 => SizeRule::Diameter,
            1 => SizeRule::Volume,
            t => return Err(Error::Format(format!("unknown size rule {t}"))),
        };
        let boundary = match b2[1] {
            0 => BoundaryRule::Original,
            1 => BoundaryRule::Modified,
            t => return Err(Error::Format(format!("unknown boundary rule {t}"))),
        };
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let threshold = f64::from_bits(u64::from_le_bytes(b8));
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let domain = crate::field::read_region_from(r)?;
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let sites = Arc::new(SiteSet::new(domain.clone()));
        if sites.len() != count {
            return Err(Error::Format(format!(
                "domain holds {} sites but file stores {count}",
                sites.len()
            )));
        }
        let mut states = Vec::with_capacity(count);
        let mut b1 = [0u8; 1];
        for _ in 0..count {
            r.read_exact(&mut b1)?;
            states.push(match b1[0] {
                0 => SiteState::White,
                1 => SiteState::Black,
                2 => SiteState::Frozen,
                t => return Err(Error::Format(format!("unknown site state {t}"))),
            });
        }
        let mut times = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            times.push(f64::from_bits(u64::from_le_bytes(b8)));
        }
        let config = ProcessConfig {
            rule,
            boundary,
            threshold,
            domain,
            seed,
        };
        Ok(FinalState::from_parts(
            config,
            sites,
            states,
            times,
            Vec::new(),
        ))
    }
}
