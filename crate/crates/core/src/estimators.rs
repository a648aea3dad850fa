//! Monte Carlo estimation of percolation functionals: crossing
//! probabilities, the characteristic length, theta, one- and four-arm
//! probabilities, net probabilities, and the near-critical parameter scale.
//!
//! Replicas are independent fields derived from a base seed; aggregation is
//! a deterministic fold in replica order, so every estimate is reproducible
//! from `(params, base_seed)` alone. Because replica seeds do not depend on
//! the parameter `p`, matched-seed monotonicity in `p` holds exactly, not
//! just statistically.

use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::{CrossingTester, FourArmDetector, NetTester, Orientation};
use crate::field::{replica_seed, Color, TauField};
use crate::lattice::{Region, SiteSet};
use crate::{Error, Result, P_C};

/// A Monte Carlo estimate with its seed provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over replicas divided by sqrt(replicas).
    pub stderr: f64,
    pub replicas: u32,
    pub base_seed: u64,
}

impl Estimate {
    /// Two-sided 95% normal interval.
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.value - 1.96 * self.stderr,
            self.value + 1.96 * self.stderr,
        )
    }
}

/// JSON record emitted by the CLI for any estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimand: String,
    pub params: serde_json::Value,
    pub value: serde_json::Value,
    pub stderr: f64,
    pub replicas: u32,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<serde_json::Value>,
}

/// Deterministic parallel Monte Carlo mean: replica `i` runs on seed
/// `replica_seed(base_seed, i)`, and the fold is in replica order.
fn mc_mean<F>(replicas: u32, base_seed: u64, scale: f64, f: F) -> Estimate
where
    F: Fn(u64) -> f64 + Sync,
{
    assert!(replicas >= 1, "need at least one replica");
    let values: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| f(replica_seed(base_seed, i)))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Estimate {
        value: mean * scale,
        stderr: stderr * scale,
        replicas,
        base_seed,
    }
}

/// Frequency of a same-color crossing of `rect` at parameter `p`.
pub fn estimate_crossing(
    rect: Region,
    orientation: Orientation,
    color: Color,
    p: f64,
    replicas: u32,
    base_seed: u64,
) -> Result<Estimate> {
    if replicas < 1 {
        return Err(Error::InvalidEstimate("need at least one replica".into()));
    }
    let set = Arc::new(SiteSet::new(rect.clone()));
    let tester = CrossingTester::new(rect, &set)?;
    Ok(mc_mean(replicas, base_seed, 1.0, |seed| {
        let field = TauField::sample_on(set.clone(), seed);
        tester.run(&field, p, color, orientation) as u8 as f64
    }))
}

/// Shared machinery for "origin is black and connected to the inner boundary
/// of `B_radius`" events.
struct OriginArmProbe {
    set: Arc<SiteSet>,
    adjacency: crate::lattice::Adjacency,
    origin: u32,
    is_boundary: Vec<bool>,
}

impl OriginArmProbe {
    fn new(radius: f64) -> Result<OriginArmProbe> {
        let region = Region::centered_box(radius);
        let set = Arc::new(SiteSet::new(region.clone()));
        let origin = set
            .index_of(crate::lattice::coord(0, 0))
            .ok_or_else(|| Error::InvalidRegion("origin not inside the box".into()))?;
        let is_boundary = set
            .sites()
            .iter()
            .map(|v| v.neighbors().iter().any(|u| !region.contains(*u)))
            .collect();
        Ok(OriginArmProbe {
            adjacency: set.adjacency(),
            set,
            origin,
            is_boundary,
        })
    }

    /// BFS from the origin over black sites, early exit at the boundary.
    fn origin_reaches_boundary(&self, field: &TauField, p: f64) -> bool {
        if !field.is_color(p, self.origin, Color::Black) {
            return false;
        }
        if self.is_boundary[self.origin as usize] {
            return true;
        }
        let mut seen = vec![false; self.set.len()];
        seen[self.origin as usize] = true;
        let mut queue = VecDeque::from([self.origin]);
        while let Some(i) = queue.pop_front() {
            for j in self.adjacency.neighbors(i) {
                if !seen[j as usize] && field.is_color(p, j, Color::Black) {
                    if self.is_boundary[j as usize] {
                        return true;
                    }
                    seen[j as usize] = true;
                    queue.push_back(j);
                }
            }
        }
        false
    }
}

/// Finite-box proxy for the infinite-cluster density: the frequency of
/// `{0 is p-black and connected to the inner boundary of B_radius}`. The
/// radius is explicit and the proxy decreases as it grows.
pub fn estimate_theta(p: f64, radius: f64, replicas: u32, base_seed: u64) -> Result<Estimate> {
    let probe = OriginArmProbe::new(radius)?;
    Ok(mc_mean(replicas, base_seed, 1.0, |seed| {
        let field = TauField::sample_on(probe.set.clone(), seed);
        probe.origin_reaches_boundary(&field, p) as u8 as f64
    }))
}

/// One-arm probability at criticality: origin black and connected to the
/// boundary of `B_n`.
pub fn estimate_one_arm(n: u32, replicas: u32, base_seed: u64) -> Result<Estimate> {
    estimate_theta(P_C, n as f64, replicas, base_seed)
}

/// Four-arm probability at criticality, normalized from passage-site
/// counts: mean of `X_n` over replicas divided by `|B_{n/2}|`. The constants
/// absorbed by this normalization are harmless downstream: the near-critical
/// scale tolerates a constant rescaling of lambda.
pub fn estimate_four_arm(n: u32, replicas: u32, base_seed: u64) -> Result<Estimate> {
    let domain = Arc::new(SiteSet::new(Region::centered_box(3.0 * n as f64)));
    let detector = FourArmDetector::new(n, &domain)?;
    let half_box = SiteSet::new(Region::centered_box(n as f64 / 2.0)).len() as f64;
    Ok(mc_mean(replicas, base_seed, 1.0 / half_box, |seed| {
        let field = TauField::sample_on(domain.clone(), seed);
        detector.detect(&field, P_C, P_C).len() as f64
    }))
}

/// Characteristic-length estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthEstimate {
    Finite(u32),
    /// At the critical point the length diverges.
    Infinite,
    /// Every grid scale kept the crossing probability above the cutoff.
    ExceedsGrid { max_n: u32 },
}

const LENGTH_CUTOFF: f64 = 0.01;

/// Smallest scale at which an aspect-2 rectangle's vertical crossing
/// probability drops to 0.01, estimated at `min(p, 1-p)`; dyadic scan first,
/// then a binary refinement. `p = 1/2` reports the divergent sentinel.
pub fn estimate_characteristic_length(
    p: f64,
    replicas_per_n: u32,
    max_n: u32,
    base_seed: u64,
) -> Result<LengthEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidEstimate(format!("p out of range: {p}")));
    }
    if p == P_C {
        return Ok(LengthEstimate::Infinite);
    }
    let q = p.min(1.0 - p);
    let prob_at = |n: u32| -> Result<f64> {
        let rect = Region::rect(0.0, 2.0 * n as f64, 0.0, n as f64);
        let est = estimate_crossing(
            rect,
            Orientation::Vertical,
            Color::Black,
            q,
            replicas_per_n,
            replica_seed(base_seed, n as u64),
        )?;
        Ok(est.value)
    };
    let mut n = 1u32;
    let mut last_above = 0u32;
    loop {
        if n > max_n {
            return Ok(LengthEstimate::ExceedsGrid { max_n });
        }
        if prob_at(n)? <= LENGTH_CUTOFF {
            break;
        }
        last_above = n;
        n = n.saturating_mul(2);
    }
    // smallest scale in (last_above, n] that meets the cutoff
    let (mut lo, mut hi) = (last_above, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if prob_at(mid)? <= LENGTH_CUTOFF {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LengthEstimate::Finite(hi))
}

/// The near-critical parameter value, clamped into the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearCriticalP {
    pub value: f64,
    pub clamped: bool,
}

const P_CLAMP: f64 = 1e-9;

/// `p_c + lambda / (N^2 * pi4_hat)`, the parameter scale in which freezing
/// concentrates.
pub fn near_critical_p(threshold: f64, lambda: f64, pi4_hat: f64) -> Result<NearCriticalP> {
    if pi4_hat.is_nan() || pi4_hat <= 0.0 {
        return Err(Error::InvalidEstimate(format!(
            "four-arm estimate must be positive, got {pi4_hat}"
        )));
    }
    if threshold.is_nan() || threshold < 1.0 {
        return Err(Error::InvalidEstimate(format!(
            "threshold must be >= 1, got {threshold}"
        )));
    }
    let raw = P_C + lambda / (threshold * threshold * pi4_hat);
    let value = raw.clamp(P_CLAMP, 1.0 - P_CLAMP);
    Ok(NearCriticalP {
        value,
        clamped: value != raw,
    })
}

/// Frequency of the net event at mesh `m` in `B_n`.
pub fn estimate_net_prob(
    m: u32,
    n: u32,
    p: f64,
    replicas: u32,
    base_seed: u64,
) -> Result<Estimate> {
    let radius = NetTester::required_radius(m, n);
    let domain = Arc::new(SiteSet::new(Region::centered_box(radius)));
    let tester = NetTester::new(m, n, &domain)?;
    Ok(mc_mean(replicas, base_seed, 1.0, |seed| {
        let field = TauField::sample_on(domain.clone(), seed);
        tester.run(&field, p) as u8 as f64
    }))
}

/// Least-squares slope of `log2 y` against `log2 x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
