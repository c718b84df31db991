//! Shift-and-add refocusing of a camera-array light field.
//!
//! Each view is translated so that projections of the chosen focal plane
//! line up with the central view, then the views are averaged (or summed).
//! Out-of-range samples are excluded from the average instead of being
//! treated as zeros, so borders are not darkened.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{CameraArrayGeometry, ViewIndex};
use crate::image::Image;
use crate::lightfield::LightField;

/// Focal plane selection.
///
/// `Alpha` uses the normalized refocus parameter `alpha = z / (z + f)`, so
/// `alpha = 1` is the far-field limit (no shifts) and the per-baseline shift
/// factor `1/alpha - 1` equals `f / z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefocusTarget {
    Alpha(f64),
    Depth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Mean,
    Sum,
}

/// How samples that fall outside a view are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Missing samples are dropped and the mean uses the per-pixel valid count.
    #[default]
    Exclude,
    /// Views wrap around (used for Fourier-domain identities).
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefocusConfig {
    pub target: RefocusTarget,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub boundary: Boundary,
}

impl RefocusConfig {
    pub fn at_depth(depth: f64) -> Self {
        Self {
            target: RefocusTarget::Depth(depth),
            interpolation: Interpolation::default(),
            normalization: Normalization::default(),
            boundary: Boundary::default(),
        }
    }

    pub fn at_alpha(alpha: f64) -> Self {
        Self { target: RefocusTarget::Alpha(alpha), ..Self::at_depth(1.0) }
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.target {
            RefocusTarget::Alpha(a) if !(a > 0.0 && a <= 1.0) => {
                Err(Error::invalid(format!("alpha must lie in (0, 1] (got {a})")))
            }
            RefocusTarget::Depth(z) => ensure_positive("refocus depth", z).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Converts an object depth to the equivalent alpha for focal length `f`.
    pub fn alpha_for_depth(depth: f64, focal_length: f64) -> f64 {
        depth / (depth + focal_length)
    }
}

/// Shift (in pixels) between adjacent views for the configured focal plane.
pub fn shift_per_step(config: &RefocusConfig, geometry: &CameraArrayGeometry) -> Result<f64> {
    config.validate()?;
    geometry.validate()?;
    let f_over_z = match config.target {
        RefocusTarget::Alpha(a) => 1.0 / a - 1.0,
        RefocusTarget::Depth(z) => geometry.focal_length / z,
    };
    Ok(f_over_z * geometry.baseline / geometry.pixel_pitch)
}

/// Translation applied to `view` before accumulation: the view's offset from
/// the array center (in baselines) times the per-step shift.
pub fn shift_for_view(view: ViewIndex, config: &RefocusConfig, geometry: &CameraArrayGeometry) -> Result<(f64, f64)> {
    let step = shift_per_step(config, geometry)?;
    let (su, sv) = geometry.view_offset_steps(view);
    Ok((su * step, sv * step))
}

/// Refocuses `lf` onto the configured plane.
pub fn refocus(lf: &LightField, config: &RefocusConfig) -> Result<Image> {
    if lf.views().is_empty() {
        return Err(Error::invalid("empty light field"));
    }
    let geometry = lf.geometry();
    let shifts = geometry.views().map(|v| shift_for_view(v, config, geometry)).collect::<Result<Vec<_>>>()?;
    if let Some(s) = shifts.iter().find(|(dx, dy)| !dx.is_finite() || !dy.is_finite()) {
        return Err(Error::invalid(format!("non-finite refocus shift {s:?}")));
    }

    let (w, h, channels) = lf.view_dims();
    let mut planes = Vec::with_capacity(channels);
    for c in 0..channels {
        let sources: Vec<(&[f64], (f64, f64))> =
            lf.views().iter().zip(&shifts).map(|(img, s)| (img.channel(c), *s)).collect();
        planes.push(shift_and_add(&sources, w, h, config.interpolation, config.boundary, config.normalization));
    }
    let data: Vec<f64> = planes.into_iter().flatten().map(|v| v.max(0.0)).collect();
    Ok(Image::from_raw(w, h, channels, data))
}

/// Translates each `w x h` plane by its shift (`out(x) = plane(x - shift)`) and
/// reduces them in input order.
pub(crate) fn shift_and_add(
    sources: &[(&[f64], (f64, f64))],
    w: usize,
    h: usize,
    interpolation: Interpolation,
    boundary: Boundary,
    normalization: Normalization,
) -> Vec<f64> {
    let shifted: Vec<(Vec<f64>, Vec<u8>)> =
        sources.par_iter().map(|(plane, shift)| translate(plane, w, h, *shift, interpolation, boundary)).collect();

    let mut acc = vec![0.0; w * h];
    let mut count = vec![0u32; w * h];
    for (vals, valid) in &shifted {
        for i in 0..w * h {
            if valid[i] != 0 {
                acc[i] += vals[i];
                count[i] += 1;
            }
        }
    }
    if normalization == Normalization::Mean {
        for (a, n) in acc.iter_mut().zip(&count) {
            *a = if *n > 0 { *a / f64::from(*n) } else { 0.0 };
        }
    }
    acc
}

fn translate(
    plane: &[f64],
    w: usize,
    h: usize,
    (dx, dy): (f64, f64),
    interpolation: Interpolation,
    boundary: Boundary,
) -> (Vec<f64>, Vec<u8>) {
    let mut out = vec![0.0; w * h];
    let mut valid = vec![0u8; w * h];
    for y in 0..h {
        let sy = y as f64 - dy;
        for x in 0..w {
            let sx = x as f64 - dx;
            let sample = match interpolation {
                Interpolation::Nearest => sample_nearest(plane, w, h, sx, sy, boundary),
                Interpolation::Bilinear => sample_bilinear(plane, w, h, sx, sy, boundary),
            };
            if let Some(v) = sample {
                out[y * w + x] = v;
                valid[y * w + x] = 1;
            }
        }
    }
    (out, valid)
}

fn resolve(i: i64, n: usize, boundary: Boundary) -> Option<usize> {
    match boundary {
        Boundary::Periodic => Some(i.rem_euclid(n as i64) as usize),
        Boundary::Exclude => (0..n as i64).contains(&i).then_some(i as usize),
    }
}

fn sample_nearest(plane: &[f64], w: usize, h: usize, sx: f64, sy: f64, boundary: Boundary) -> Option<f64> {
    let x = resolve(sx.round() as i64, w, boundary)?;
    let y = resolve(sy.round() as i64, h, boundary)?;
    Some(plane[y * w + x])
}

fn sample_bilinear(plane: &[f64], w: usize, h: usize, sx: f64, sy: f64, boundary: Boundary) -> Option<f64> {
    let x0f = sx.floor();
    let y0f = sy.floor();
    let fx = sx - x0f;
    let fy = sy - y0f;
    let (x0, y0) = (x0f as i64, y0f as i64);
    // A zero fractional part means the far neighbor carries no weight, so it
    // may lie outside the raster.
    let x1 = if fx == 0.0 { x0 } else { x0 + 1 };
    let y1 = if fy == 0.0 { y0 } else { y0 + 1 };
    let xa = resolve(x0, w, boundary)?;
    let xb = resolve(x1, w, boundary)?;
    let ya = resolve(y0, h, boundary)?;
    let yb = resolve(y1, h, boundary)?;
    let top = plane[ya * w + xa] * (1.0 - fx) + plane[ya * w + xb] * fx;
    let bottom = plane[yb * w + xa] * (1.0 - fx) + plane[yb * w + xb] * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(grid: usize, disparity: f64) -> CameraArrayGeometry {
        // f * b / (z * p) = disparity at z = object_depth = 1
        CameraArrayGeometry::new(grid, grid, disparity, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn central_view_has_no_shift() {
        let g = geom(3, 4.0);
        let s = shift_for_view(ViewIndex::new(1, 1), &RefocusConfig::at_depth(0.3), &g).unwrap();
        assert_eq!(s, (0.0, 0.0));
    }

    #[test]
    fn shift_matches_rig_arithmetic() {
        let g = CameraArrayGeometry::new(3, 1, 0.02, 0.004, 3.45e-6, 0.7).unwrap();
        let (dx, dy) = shift_for_view(ViewIndex::new(2, 0), &RefocusConfig::at_depth(0.7), &g).unwrap();
        // 0.004 * 0.02 / (0.7 * 3.45e-6)
        assert!((dx - 33.126_293).abs() < 1e-5, "{dx}");
        assert_eq!(dy, 0.0);

        let g2 = g.with_baseline(0.04).unwrap();
        let (dx2, _) = shift_for_view(ViewIndex::new(2, 0), &RefocusConfig::at_depth(0.7), &g2).unwrap();
        assert!((dx2 - 2.0 * dx).abs() < 1e-9);
    }

    #[test]
    fn alpha_and_depth_agree() {
        let g = CameraArrayGeometry::new(3, 1, 0.02, 0.004, 3.45e-6, 0.7).unwrap();
        let a = RefocusConfig::alpha_for_depth(0.7, 0.004);
        let s1 = shift_per_step(&RefocusConfig::at_alpha(a), &g).unwrap();
        let s2 = shift_per_step(&RefocusConfig::at_depth(0.7), &g).unwrap();
        assert!((s1 - s2).abs() < 1e-9);
        assert_eq!(shift_per_step(&RefocusConfig::at_alpha(1.0), &g).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_targets() {
        let g = geom(3, 1.0);
        assert!(shift_for_view(ViewIndex::new(0, 0), &RefocusConfig::at_depth(0.0), &g).is_err());
        assert!(shift_for_view(ViewIndex::new(0, 0), &RefocusConfig::at_depth(-1.0), &g).is_err());
        assert!(shift_for_view(ViewIndex::new(0, 0), &RefocusConfig::at_alpha(0.0), &g).is_err());
        assert!(shift_for_view(ViewIndex::new(0, 0), &RefocusConfig::at_alpha(1.5), &g).is_err());
    }

    #[test]
    fn alpha_one_is_plain_average() {
        let g = geom(2, 1.0);
        let lf = LightField::from_fn(g, |v| Image::constant(3, 2, 1, (v.u + 2 * v.v) as f64)).unwrap();
        let out = refocus(&lf, &RefocusConfig::at_alpha(1.0)).unwrap();
        assert!(out.as_slice().iter().all(|&x| (x - 1.5).abs() < 1e-15));
    }

    #[test]
    fn single_view_is_identity() {
        let g = geom(1, 3.0);
        let img = Image::from_fn(5, 4, |x, y| (x * 7 + y) as f64 / 40.0).unwrap();
        let lf = LightField::new(g, vec![img.clone()]).unwrap();
        assert_eq!(refocus(&lf, &RefocusConfig::at_depth(0.25)).unwrap(), img);
    }

    #[test]
    fn border_uses_valid_count() {
        // Two views of a constant field shifted apart: the mean stays constant
        // even where only one view contributes.
        let g = CameraArrayGeometry::new(2, 1, 2.0, 1.0, 1.0, 1.0).unwrap();
        let lf = LightField::from_fn(g, |_| Image::constant(6, 3, 1, 0.4)).unwrap();
        let out = refocus(&lf, &RefocusConfig::at_depth(1.0)).unwrap();
        assert!(out.as_slice().iter().all(|&x| (x - 0.4).abs() < 1e-15));
    }

    #[test]
    fn bilinear_half_pixel_shift() {
        let plane = [0.0, 1.0, 0.0, 0.0];
        let (out, valid) = translate(&plane, 4, 1, (0.5, 0.0), Interpolation::Bilinear, Boundary::Exclude);
        assert_eq!(valid, vec![0, 1, 1, 1]);
        assert_eq!(&out[1..], &[0.5, 0.5, 0.0]);
    }
}
