//! The experiment registry: freeze-time window, origin-freeze contrast,
//! macroscopic cluster density, and the volume-rule scale scan.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::{estimate_four_arm, near_critical_p};
use crate::field::{replica_seed, TauField};
use crate::frozen::{run_with, BoundaryRule, FinalState, SizeRule};
use crate::harness::{ExperimentResult, SeedManifest};
use crate::lattice::{coord, Region, SiteSet};
use crate::{Error, Result};

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn default_domain_radius(threshold: f64) -> f64 {
    4.0 * threshold
}

/// Freeze-time window experiment: record every cluster freeze time inside
/// `B_{KN}` under the original diameter rule, then measure how often any of
/// them escapes the near-critical window `[p_{-lambda}, p_{+lambda}]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreezeWindowParams {
    pub threshold: f64,
    pub k: f64,
    pub lambdas: Vec<f64>,
    pub replicas: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub domain_radius: Option<f64>,
    #[serde(default = "default_pi4_replicas")]
    pub pi4_replicas: u32,
}

fn default_pi4_replicas() -> u32 {
    200
}

pub fn exp_freeze_time_window(params: &FreezeWindowParams) -> Result<ExperimentResult> {
    if params.replicas < 1 {
        return Err(Error::InvalidConfig("need at least one replica".into()));
    }
    let start = Instant::now();
    let radius = params
        .domain_radius
        .unwrap_or_else(|| default_domain_radius(params.threshold));
    let domain = Arc::new(SiteSet::new(Region::centered_box(radius)));
    let watch = Region::centered_box(params.k * params.threshold);
    let watch_idx: Vec<u32> = SiteSet::new(watch)
        .sites()
        .iter()
        .filter_map(|&v| domain.index_of(v))
        .collect();

    let seeds = SeedManifest::new(params.base_seed, params.replicas);
    let per_replica: Vec<(u64, Result<Vec<f64>>)> = seeds
        .seeds
        .par_iter()
        .map(|&seed| {
            let field = TauField::sample_on(domain.clone(), seed);
            let out = run_with(
                &field,
                SizeRule::Diameter,
                BoundaryRule::Original,
                params.threshold,
            )
            .map(|fin| {
                // freeze times of distinct clusters intersecting the watch box
                let mut cluster_seen = std::collections::HashSet::new();
                let mut times = Vec::new();
                for &i in &watch_idx {
                    let t = fin.freeze_times()[i as usize];
                    if t >= 0.0 {
                        let v = fin.sites().site(i);
                        if let Some(c) = fin.cluster_of(v) {
                            if cluster_seen.insert(c.representative) {
                                times.push(t);
                            }
                        }
                    }
                }
                times.sort_by(f64::total_cmp);
                times
            });
            (seed, out)
        })
        .collect();

    let mut rows = Vec::with_capacity(per_replica.len());
    let mut all_times: Vec<f64> = Vec::new();
    let mut per_replica_times: Vec<&[f64]> = Vec::new();
    for (replica, (seed, outcome)) in per_replica.iter().enumerate() {
        match outcome {
            Ok(times) => {
                rows.push(format!(
                    "{replica},{seed},ok,{},{}",
                    times.len(),
                    times.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(";")
                ));
                all_times.extend_from_slice(times);
                per_replica_times.push(times);
            }
            Err(e) => rows.push(format!("{replica},{seed},error:{e},0,")),
        }
    }

    // the near-critical window needs a four-arm estimate at scale N
    let pi4 = estimate_four_arm(
        params.threshold.round() as u32,
        params.pi4_replicas,
        replica_seed(params.base_seed, 0xF0A4),
    )?;
    let mut window_stats = Vec::new();
    for &lambda in &params.lambdas {
        let lo = near_critical_p(params.threshold, -lambda, pi4.value)?;
        let hi = near_critical_p(params.threshold, lambda, pi4.value)?;
        let outside = per_replica_times
            .iter()
            .filter(|ts| ts.iter().any(|&t| t < lo.value || t > hi.value))
            .count();
        window_stats.push(serde_json::json!({
            "lambda": lambda,
            "p_minus": lo.value,
            "p_plus": hi.value,
            "clamped": lo.clamped || hi.clamped,
            "outside_fraction": outside as f64 / per_replica_times.len().max(1) as f64,
        }));
    }
    let in_band = all_times
        .iter()
        .filter(|&&t| t > 0.35 && t < 0.65)
        .count();
    let summary = serde_json::json!({
        "pi4_hat": pi4,
        "total_freeze_events": all_times.len(),
        "fraction_in_035_065": if all_times.is_empty() { 1.0 } else { in_band as f64 / all_times.len() as f64 },
        "windows": window_stats,
    });

    Ok(ExperimentResult {
        name: "freeze_window".into(),
        config: serde_json::to_value(params)?,
        header: "replica,seed,status,n_freeze_events,freeze_times".into(),
        rows,
        summary,
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Origin-freeze contrast across the four process variants at matched seeds,
/// with the freeze-time histogram of the origin under the modified diameter
/// rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OriginFreezeParams {
    pub threshold: f64,
    pub replicas: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub domain_radius: Option<f64>,
}

pub const VARIANTS: [(SizeRule, BoundaryRule, &str); 4] = [
    (SizeRule::Diameter, BoundaryRule::Original, "diam_original"),
    (SizeRule::Diameter, BoundaryRule::Modified, "diam_modified"),
    (SizeRule::Volume, BoundaryRule::Original, "vol_original"),
    (SizeRule::Volume, BoundaryRule::Modified, "vol_modified"),
];

const HISTOGRAM_BINS: usize = 20;

pub fn exp_origin_freeze(params: &OriginFreezeParams) -> Result<ExperimentResult> {
    if params.replicas < 1 {
        return Err(Error::InvalidConfig("need at least one replica".into()));
    }
    let start = Instant::now();
    let radius = params
        .domain_radius
        .unwrap_or_else(|| default_domain_radius(params.threshold));
    let domain = Arc::new(SiteSet::new(Region::centered_box(radius)));
    if !domain.contains(coord(0, 0)) {
        return Err(Error::InvalidConfig("domain must contain the origin".into()));
    }
    let seeds = SeedManifest::new(params.base_seed, params.replicas);

    struct VariantOutcome {
        froze: bool,
        freeze_time: f64,
        origin_diam: f64,
    }
    let per_replica: Vec<(u64, Result<Vec<VariantOutcome>>)> = seeds
        .seeds
        .par_iter()
        .map(|&seed| {
            // one field per replica, shared by all four variants
            let field = TauField::sample_on(domain.clone(), seed);
            let outcomes = VARIANTS
                .iter()
                .map(|&(rule, boundary, _)| {
                    let fin = run_with(&field, rule, boundary, params.threshold)?;
                    Ok(VariantOutcome {
                        froze: fin.origin_freezes()?,
                        freeze_time: fin.origin_freeze_time()?.unwrap_or(-1.0),
                        origin_diam: fin.origin_cluster_diameter()?,
                    })
                })
                .collect::<Result<Vec<_>>>();
            (seed, outcomes)
        })
        .collect();

    let mut rows = Vec::with_capacity(per_replica.len() * VARIANTS.len());
    let mut freeze_counts = [0u32; 4];
    let mut histogram = [0u32; HISTOGRAM_BINS];
    let mut ok_replicas = 0u32;
    for (replica, (seed, outcome)) in per_replica.iter().enumerate() {
        match outcome {
            Ok(variants) => {
                ok_replicas += 1;
                for (vi, v) in variants.iter().enumerate() {
                    rows.push(format!(
                        "{replica},{seed},ok,{},{},{},{}",
                        VARIANTS[vi].2,
                        v.froze as u8,
                        fmt_f64(v.freeze_time),
                        fmt_f64(v.origin_diam)
                    ));
                    if v.froze {
                        freeze_counts[vi] += 1;
                        if VARIANTS[vi].2 == "diam_modified" {
                            let bin = ((v.freeze_time * HISTOGRAM_BINS as f64) as usize)
                                .min(HISTOGRAM_BINS - 1);
                            histogram[bin] += 1;
                        }
                    }
                }
            }
            Err(e) => {
                for (_, _, name) in VARIANTS {
                    rows.push(format!("{replica},{seed},error:{e},{name},0,-1,-1"));
                }
            }
        }
    }

    let per_variant: Vec<serde_json::Value> = VARIANTS
        .iter()
        .enumerate()
        .map(|(vi, (_, _, name))| {
            let n = ok_replicas.max(1) as f64;
            let p = freeze_counts[vi] as f64 / n;
            let stderr = (p * (1.0 - p) / n).sqrt();
            serde_json::json!({
                "variant": name,
                "freeze_probability": p,
                "stderr": stderr,
                "ci95": [p - 1.96 * stderr, p + 1.96 * stderr],
            })
        })
        .collect();
    let summary = serde_json::json!({
        "replicas_ok": ok_replicas,
        "variants": per_variant,
        "modified_diam_freeze_time_histogram": {
            "bins": HISTOGRAM_BINS,
            "range": [0.0, 1.0],
            "counts": histogram.to_vec(),
        },
    });

    Ok(ExperimentResult {
        name: "origin_freeze".into(),
        config: serde_json::to_value(params)?,
        header: "replica,seed,status,variant,origin_froze,origin_freeze_time,origin_cluster_diameter".into(),
        rows,
        summary,
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Distribution of the origin's time-1 cluster diameter relative to the
/// threshold, under the diameter rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroClusterParams {
    pub threshold: f64,
    pub boundary: BoundaryRule,
    pub epsilons: Vec<f64>,
    pub replicas: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub domain_radius: Option<f64>,
}

pub fn exp_macro_cluster(params: &MacroClusterParams) -> Result<ExperimentResult> {
    if params.replicas < 1 {
        return Err(Error::InvalidConfig("need at least one replica".into()));
    }
    let start = Instant::now();
    let radius = params
        .domain_radius
        .unwrap_or_else(|| default_domain_radius(params.threshold));
    let domain = Arc::new(SiteSet::new(Region::centered_box(radius)));
    let seeds = SeedManifest::new(params.base_seed, params.replicas);

    let per_replica: Vec<(u64, Result<f64>)> = seeds
        .seeds
        .par_iter()
        .map(|&seed| {
            let field = TauField::sample_on(domain.clone(), seed);
            let out = run_with(&field, SizeRule::Diameter, params.boundary, params.threshold)
                .and_then(|fin| fin.origin_cluster_diameter());
            (seed, out)
        })
        .collect();

    let mut rows = Vec::with_capacity(per_replica.len());
    let mut ratios = Vec::new();
    for (replica, (seed, outcome)) in per_replica.iter().enumerate() {
        match outcome {
            Ok(diam) => {
                let ratio = diam / params.threshold;
                rows.push(format!(
                    "{replica},{seed},ok,{},{}",
                    fmt_f64(*diam),
                    fmt_f64(ratio)
                ));
                ratios.push(ratio);
            }
            Err(e) => rows.push(format!("{replica},{seed},error:{e},-1,-1")),
        }
    }

    let bands: Vec<serde_json::Value> = params
        .epsilons
        .iter()
        .map(|&eps| {
            let hit = ratios
                .iter()
                .filter(|&&r| r >= eps && r <= 1.0 - eps)
                .count();
            serde_json::json!({
                "epsilon": eps,
                "probability": hit as f64 / ratios.len().max(1) as f64,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "replicas_ok": ratios.len(),
        "bands": bands,
    });

    Ok(ExperimentResult {
        name: "macro_cluster".into(),
        config: serde_json::to_value(params)?,
        header: "replica,seed,status,origin_cluster_diameter,diameter_over_threshold".into(),
        rows,
        summary,
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Origin-freeze probability for the volume rule restricted to `B_m`, across
/// a grid of box radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeScanParams {
    pub threshold: f64,
    pub boundary: BoundaryRule,
    pub m_grid: Vec<f64>,
    pub replicas: u32,
    pub base_seed: u64,
}

pub fn exp_volume_scale_scan(params: &VolumeScanParams) -> Result<ExperimentResult> {
    if params.replicas < 1 {
        return Err(Error::InvalidConfig("need at least one replica".into()));
    }
    let start = Instant::now();
    let seeds = SeedManifest::new(params.base_seed, params.replicas);
    let mut rows = Vec::new();
    let mut scan = Vec::new();
    for &m in &params.m_grid {
        let domain = Arc::new(SiteSet::new(Region::centered_box(m)));
        if !domain.contains(coord(0, 0)) {
            return Err(Error::InvalidConfig(format!(
                "scan radius {m} leaves out the origin"
            )));
        }
        let per_replica: Vec<(u64, Result<(bool, f64)>)> = seeds
            .seeds
            .par_iter()
            .map(|&seed| {
                let field = TauField::sample_on(domain.clone(), seed);
                let out =
                    run_with(&field, SizeRule::Volume, params.boundary, params.threshold)
                        .and_then(|fin| {
                            Ok((
                                fin.origin_freezes()?,
                                fin.origin_freeze_time()?.unwrap_or(-1.0),
                            ))
                        });
                (seed, out)
            })
            .collect();
        let mut frozen = 0u32;
        let mut ok = 0u32;
        for (replica, (seed, outcome)) in per_replica.iter().enumerate() {
            match outcome {
                Ok((froze, t)) => {
                    ok += 1;
                    frozen += *froze as u32;
                    rows.push(format!(
                        "{},{replica},{seed},ok,{},{}",
                        fmt_f64(m),
                        *froze as u8,
                        fmt_f64(*t)
                    ));
                }
                Err(e) => rows.push(format!("{},{replica},{seed},error:{e},0,-1", fmt_f64(m))),
            }
        }
        scan.push(serde_json::json!({
            "m": m,
            "freeze_probability": frozen as f64 / ok.max(1) as f64,
            "replicas_ok": ok,
        }));
    }
    let summary = serde_json::json!({ "scan": scan });
    Ok(ExperimentResult {
        name: "volume_scan".into(),
        config: serde_json::to_value(params)?,
        header: "m,replica,seed,status,origin_froze,origin_freeze_time".into(),
        rows,
        summary,
        seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Convenience runner used by tests and the CLI: a single simulation from a
/// config.
pub fn simulate(
    rule: SizeRule,
    boundary: BoundaryRule,
    threshold: f64,
    domain_radius: f64,
    seed: u64,
) -> Result<FinalState> {
    let config = crate::frozen::ProcessConfig {
        rule,
        boundary,
        threshold,
        domain: Region::centered_box(domain_radius),
        seed,
    };
    crate::frozen::run(&config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freeze_window_trivial_lambda() {
        // a huge lambda clamps the window to (0,1): nothing falls outside
        let params = FreezeWindowParams {
            threshold: 8.0,
            k: 1.0,
            lambdas: vec![1e15],
            replicas: 8,
            base_seed: 5,
            domain_radius: Some(24.0),
            pi4_replicas: 400,
        };
        let result = exp_freeze_time_window(&params).unwrap();
        assert_eq!(result.rows.len(), 8);
        let windows = result.summary["windows"].as_array().unwrap();
        assert_eq!(windows[0]["outside_fraction"], 0.0);
    }

    #[test]
    fn origin_freeze_unreachable_threshold() {
        let params = OriginFreezeParams {
            threshold: f64::INFINITY,
            replicas: 5,
            base_seed: 1,
            domain_radius: Some(6.0),
        };
        let result = exp_origin_freeze(&params).unwrap();
        assert_eq!(result.rows.len(), 20); // replicas x variants
        for v in result.summary["variants"].as_array().unwrap() {
            assert_eq!(v["freeze_probability"], 0.0);
        }
    }

    #[test]
    fn origin_freeze_rows_are_deterministic() {
        let params = OriginFreezeParams {
            threshold: 5.0,
            replicas: 6,
            base_seed: 77,
            domain_radius: Some(15.0),
        };
        let a = exp_origin_freeze(&params).unwrap();
        let b = exp_origin_freeze(&params).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.seeds, b.seeds);
    }

    #[test]
    fn macro_cluster_unreachable_threshold_with_full_band() {
        let params = MacroClusterParams {
            threshold: f64::INFINITY,
            boundary: BoundaryRule::Original,
            epsilons: vec![0.0],
            replicas: 4,
            base_seed: 2,
            domain_radius: Some(6.0),
        };
        let result = exp_macro_cluster(&params).unwrap();
        // ratio 0 (diam/inf) lies in [0, 1]
        assert_eq!(result.summary["bands"][0]["probability"], 1.0);
    }

    #[test]
    fn modified_rule_keeps_macroscopic_band_occupied() {
        // at threshold 128 a fair share of origins still land in mid-size
        // non-frozen clusters under the modified rule
        let params = MacroClusterParams {
            threshold: 128.0,
            boundary: BoundaryRule::Modified,
            epsilons: vec![0.2],
            replicas: 24,
            base_seed: 0xE1,
            domain_radius: None,
        };
        let result = exp_macro_cluster(&params).unwrap();
        let p = result.summary["bands"][0]["probability"].as_f64().unwrap();
        assert!(p > 0.0, "band probability {p}");
    }

    #[test]
    fn volume_rule_freezes_origin_at_matching_scale() {
        for (boundary, seed) in [(BoundaryRule::Original, 0xE2), (BoundaryRule::Modified, 0xE3)]
        {
            let params = VolumeScanParams {
                threshold: 50.0,
                boundary,
                m_grid: vec![50.0],
                replicas: 60,
                base_seed: seed,
            };
            let result = exp_volume_scale_scan(&params).unwrap();
            let p = result.summary["scan"][0]["freeze_probability"]
                .as_f64()
                .unwrap();
            assert!(p > 0.0, "{boundary:?}: freeze probability {p}");
        }
    }

    #[test]
    fn volume_scan_schema_and_small_domain() {
        let params = VolumeScanParams {
            threshold: 40.0,
            boundary: BoundaryRule::Original,
            m_grid: vec![2.0, 4.0],
            replicas: 3,
            base_seed: 4,
        };
        let result = exp_volume_scale_scan(&params).unwrap();
        assert_eq!(result.rows.len(), 2 * 3);
        // |B_2| < 40: freezing impossible at the first grid point
        assert_eq!(result.summary["scan"][0]["freeze_probability"], 0.0);
    }

    #[test]
    fn result_files_round_trip(){
        let dir = tempfile::tempdir().unwrap();
        let params = VolumeScanParams {
            threshold: 3.0,
            boundary: BoundaryRule::Modified,
            m_grid: vec![3.0],
            replicas: 2,
            base_seed: 9,
        };
        let result = exp_volume_scale_scan(&params).unwrap();
        let paths = result.write_to_dir(dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv.lines().count(), 1 + result.rows.len());
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(summary["experiment"], "volume_scan");
        let manifest: SeedManifest =
            serde_json::from_str(&std::fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert_eq!(manifest, result.seeds);
    }
}
