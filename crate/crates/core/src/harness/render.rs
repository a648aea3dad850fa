//! Raster rendering of a terminal configuration.
//!
//! Each site is drawn at its embedded coordinates. Frozen sites run along a
//! dark-to-light blue ramp by freeze time (lighter means later), black
//! non-frozen sites are red, and white sites stay white. The output bytes
//! are a pure function of the input.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::frozen::{FinalState, SiteState};
use crate::{Error, Result};

pub const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
pub const RED: Rgb<u8> = Rgb([190, 30, 40]);
const BLUE_DARK: [f64; 3] = [15.0, 30.0, 110.0];
const BLUE_LIGHT: [f64; 3] = [170.0, 215.0, 255.0];

/// Blue ramp position for a freeze time in [0,1].
pub fn blue_ramp(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0);
    let mut px = [0u8; 3];
    for (i, p) in px.iter_mut().enumerate() {
        *p = (BLUE_DARK[i] + t * (BLUE_LIGHT[i] - BLUE_DARK[i])).round() as u8;
    }
    Rgb(px)
}

/// Visual class of a site, uniform across boundary rules: a site counts as
/// frozen when it carries a freeze time, whether that state is primitive
/// (modified rule) or derived (original rule).
pub fn site_color(state: SiteState, freeze_time: f64) -> Rgb<u8> {
    if freeze_time >= 0.0 {
        blue_ramp(freeze_time)
    } else if state == SiteState::White {
        WHITE
    } else {
        RED
    }
}

/// Site-to-pixel map for one rendering.
#[derive(Debug, Clone, Copy)]
pub struct RasterMap {
    min_x: f64,
    max_y: f64,
    pub scale: u32,
    pub width: u32,
    pub height: u32,
}

impl RasterMap {
    pub fn new(final_state: &FinalState, scale: u32) -> RasterMap {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for v in final_state.sites().sites() {
            let (ex, ey) = v.embed();
            min_x = min_x.min(ex);
            max_x = max_x.max(ex);
            min_y = min_y.min(ey);
            max_y = max_y.max(ey);
        }
        let s = scale as f64;
        RasterMap {
            min_x,
            max_y,
            scale,
            width: ((max_x - min_x) * s).round() as u32 + 2 * scale + 1,
            height: ((max_y - min_y) * s).round() as u32 + 2 * scale + 1,
        }
    }

    pub fn pixel(&self, v: crate::lattice::LatticeCoord) -> (u32, u32) {
        let (ex, ey) = v.embed();
        let s = self.scale as f64;
        let px = ((ex - self.min_x) * s).round() as u32 + self.scale;
        let py = ((self.max_y - ey) * s).round() as u32 + self.scale;
        (px, py)
    }
}

/// Render to an in-memory image. The scale must be at least 2 so distinct
/// sites land on distinct pixels.
pub fn render(final_state: &FinalState, scale: u32) -> Result<RgbImage> {
    if scale < 2 {
        return Err(Error::InvalidConfig("render scale must be >= 2".into()));
    }
    if final_state.sites().is_empty() {
        return Err(Error::InvalidConfig("nothing to render".into()));
    }
    let map = RasterMap::new(final_state, scale);
    let mut img = RgbImage::from_pixel(map.width, map.height, WHITE);
    // square dots of side scale-1 leave a one-pixel gap between neighbors
    let dot = (scale as i64 - 1).max(1);
    let off = dot / 2;
    for i in 0..final_state.sites().len() as u32 {
        let color = site_color(
            final_state.states()[i as usize],
            final_state.freeze_times()[i as usize],
        );
        let (px, py) = map.pixel(final_state.sites().site(i));
        for dx in 0..dot {
            for dy in 0..dot {
                let x = px as i64 + dx - off;
                let y = py as i64 + dy - off;
                if x >= 0 && y >= 0 && (x as u32) < map.width && (y as u32) < map.height {
                    img.put_pixel(x as u32, y as u32, color);
                }
            }
        }
    }
    Ok(img)
}

/// Render straight to a PNG file.
pub fn render_to_file(final_state: &FinalState, path: &Path, scale: u32) -> Result<()> {
    let img = render(final_state, scale)?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frozen::{run, BoundaryRule, ProcessConfig, SizeRule};
    use crate::lattice::Region;

    fn cfg(rule: SizeRule, boundary: BoundaryRule, threshold: f64) -> ProcessConfig {
        ProcessConfig {
            rule,
            boundary,
            threshold,
            domain: Region::centered_box(6.0),
            seed: 21,
        }
    }

    #[test]
    fn all_black_renders_all_red() {
        let fin = run(&cfg(SizeRule::Volume, BoundaryRule::Original, f64::INFINITY)).unwrap();
        let img = render(&fin, 2).unwrap();
        let map = RasterMap::new(&fin, 2);
        for v in fin.sites().sites() {
            let (px, py) = map.pixel(*v);
            assert_eq!(*img.get_pixel(px, py), RED);
        }
    }

    #[test]
    fn frozen_singletons_render_blue_only() {
        let fin = run(&cfg(SizeRule::Volume, BoundaryRule::Modified, 1.0)).unwrap();
        let img = render(&fin, 2).unwrap();
        let map = RasterMap::new(&fin, 2);
        for v in fin.sites().sites() {
            let (px, py) = map.pixel(*v);
            let Rgb([r, g, b]) = *img.get_pixel(px, py);
            assert!(b >= 110 && b > r && g >= 30, "not on the blue ramp: {r},{g},{b}");
        }
    }

    #[test]
    fn later_freezes_are_lighter() {
        let a = blue_ramp(0.1);
        let b = blue_ramp(0.9);
        assert!(b.0[0] > a.0[0] && b.0[1] > a.0[1] && b.0[2] > a.0[2]);
    }

    #[test]
    fn sites_map_to_distinct_pixels() {
        let fin = run(&cfg(SizeRule::Diameter, BoundaryRule::Modified, 4.0)).unwrap();
        let map = RasterMap::new(&fin, 2);
        let mut seen = std::collections::HashSet::new();
        for v in fin.sites().sites() {
            assert!(seen.insert(map.pixel(*v)));
        }
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let fin = run(&cfg(SizeRule::Volume, BoundaryRule::Original, 3.0)).unwrap();
        let missing = std::path::Path::new("/nonexistent-dir/out.png");
        assert!(render_to_file(&fin, missing, 2).is_err());
        assert!(render(&fin, 1).is_err());
    }

    #[test]
    fn render_bytes_deterministic() {
        let fin = run(&cfg(SizeRule::Diameter, BoundaryRule::Modified, 5.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.png");
        let p2 = dir.path().join("b.png");
        render_to_file(&fin, &p1, 2).unwrap();
        render_to_file(&fin, &p2, 2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert!(!b1.is_empty());
        assert_eq!(b1, b2);
    }
}
