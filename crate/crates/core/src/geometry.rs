//! Camera-array geometry and the object/camera/sensor plane mapping.
//!
//! All planes are fronto-parallel. The object plane sits at depth 0, the
//! camera (pinhole) plane at `object_depth`, and each sensor a focal length
//! behind its pinhole. Sensor coordinates are expressed on an upright virtual
//! sensor, so an object offset `+x` lands at `+x` on every view.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Position of one view in the camera grid. `(0, 0)` is the grid corner;
/// `u` runs along sensor columns (x), `v` along sensor rows (y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ViewIndex {
    pub u: usize,
    pub v: usize,
}

impl ViewIndex {
    pub const fn new(u: usize, v: usize) -> Self {
        Self { u, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraArrayGeometry {
    pub grid_u: usize,
    pub grid_v: usize,
    /// Distance between adjacent camera centers (m).
    pub baseline: f64,
    pub focal_length: f64,
    /// Sensor pixel size (m).
    pub pixel_pitch: f64,
    /// Distance from the object plane to the camera plane (m).
    pub object_depth: f64,
}

impl CameraArrayGeometry {
    pub fn new(
        grid_u: usize,
        grid_v: usize,
        baseline: f64,
        focal_length: f64,
        pixel_pitch: f64,
        object_depth: f64,
    ) -> Result<Self> {
        let g = Self { grid_u, grid_v, baseline, focal_length, pixel_pitch, object_depth };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_u == 0 || self.grid_v == 0 {
            return Err(Error::invalid(format!(
                "camera grid must be at least 1x1 (got {}x{})",
                self.grid_u, self.grid_v
            )));
        }
        ensure_positive("baseline", self.baseline)?;
        ensure_positive("focal_length", self.focal_length)?;
        ensure_positive("pixel_pitch", self.pixel_pitch)?;
        ensure_positive("object_depth", self.object_depth)?;
        Ok(())
    }

    pub fn view_count(&self) -> usize {
        self.grid_u * self.grid_v
    }

    /// Row-major iteration over all views, `v` outer.
    pub fn views(&self) -> impl Iterator<Item = ViewIndex> + '_ {
        (0..self.grid_v).flat_map(move |v| (0..self.grid_u).map(move |u| ViewIndex::new(u, v)))
    }

    pub fn linear_index(&self, view: ViewIndex) -> usize {
        view.v * self.grid_u + view.u
    }

    pub fn contains(&self, view: ViewIndex) -> bool {
        view.u < self.grid_u && view.v < self.grid_v
    }

    /// Camera offset from the array center in units of baselines. Even grids
    /// give half-integer offsets.
    pub fn view_offset_steps(&self, view: ViewIndex) -> (f64, f64) {
        (view.u as f64 - (self.grid_u as f64 - 1.0) / 2.0, view.v as f64 - (self.grid_v as f64 - 1.0) / 2.0)
    }

    /// Camera center relative to the array center (m).
    pub fn camera_offset(&self, view: ViewIndex) -> (f64, f64) {
        let (su, sv) = self.view_offset_steps(view);
        (su * self.baseline, sv * self.baseline)
    }

    /// Object-plane distance covered by one sensor pixel at `object_depth`.
    pub fn object_pixel_scale(&self) -> f64 {
        self.object_depth * self.pixel_pitch / self.focal_length
    }

    /// Disparity in pixels between adjacent views for a plane at `depth`.
    pub fn disparity_px(&self, depth: f64) -> Result<f64> {
        ensure_positive("depth", depth)?;
        Ok(self.focal_length * self.baseline / (depth * self.pixel_pitch))
    }

    pub fn with_baseline(&self, baseline: f64) -> Result<Self> {
        Self::new(self.grid_u, self.grid_v, baseline, self.focal_length, self.pixel_pitch, self.object_depth)
    }
}

/// Sampling of the emitting object plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlane {
    /// Meters per object-plane pixel.
    pub pixel_scale: f64,
    /// Object-plane position of the image center (m).
    #[serde(default)]
    pub origin: (f64, f64),
}

impl ObjectPlane {
    pub fn new(pixel_scale: f64, origin: (f64, f64)) -> Result<Self> {
        ensure_positive("pixel_scale", pixel_scale)?;
        ensure_finite("origin.x", origin.0)?;
        ensure_finite("origin.y", origin.1)?;
        Ok(Self { pixel_scale, origin })
    }

    /// Object-plane position of the (continuous) pixel coordinate `(px, py)`
    /// in a `width x height` raster; integer coordinates are pixel centers.
    pub fn pixel_to_object(&self, px: f64, py: f64, width: usize, height: usize) -> (f64, f64) {
        (
            self.origin.0 + (px - (width as f64 - 1.0) / 2.0) * self.pixel_scale,
            self.origin.1 + (py - (height as f64 - 1.0) / 2.0) * self.pixel_scale,
        )
    }
}

/// Projects an object-plane point through the pinhole of `view`.
///
/// Returns the displacement from the sensor center in (fractional) pixels:
/// `f / z * (point - camera_offset) / pixel_pitch`.
pub fn map_object_to_sensor(point: (f64, f64), view: ViewIndex, geometry: &CameraArrayGeometry) -> Result<(f64, f64)> {
    ensure_finite("point.x", point.0)?;
    ensure_finite("point.y", point.1)?;
    geometry.validate()?;
    if !geometry.contains(view) {
        return Err(Error::invalid(format!(
            "view ({}, {}) outside {}x{} grid",
            view.u, view.v, geometry.grid_u, geometry.grid_v
        )));
    }
    let (cx, cy) = geometry.camera_offset(view);
    let m = geometry.focal_length / (geometry.object_depth * geometry.pixel_pitch);
    Ok(((point.0 - cx) * m, (point.1 - cy) * m))
}

/// Converts a displacement from the sensor center to raster coordinates.
pub fn displacement_to_pixel(disp: (f64, f64), width: usize, height: usize) -> (f64, f64) {
    (disp.0 + (width as f64 - 1.0) / 2.0, disp.1 + (height as f64 - 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig() -> CameraArrayGeometry {
        CameraArrayGeometry::new(3, 3, 0.02, 0.004, 3.45e-6, 0.7).unwrap()
    }

    #[test]
    fn on_axis_point_hits_center_of_central_view() {
        let d = map_object_to_sensor((0.0, 0.0), ViewIndex::new(1, 1), &rig()).unwrap();
        assert_eq!(d, (0.0, 0.0));
    }

    #[test]
    fn similar_triangles() {
        let g = rig();
        let (dx, dy) = map_object_to_sensor((0.01, 0.0), ViewIndex::new(1, 1), &g).unwrap();
        // 0.004 / 0.7 * 0.01 = 5.7142857e-5 m on the sensor
        assert!((dx * g.pixel_pitch - 5.714_285_714e-5).abs() < 1e-12);
        assert!((dx - 16.563_146).abs() < 1e-5);
        assert_eq!(dy, 0.0);

        let (dx2, _) = map_object_to_sensor((0.01, 0.0), ViewIndex::new(2, 1), &g).unwrap();
        let expected = g.focal_length / g.object_depth * g.baseline / g.pixel_pitch;
        assert!(((dx - dx2) - expected).abs() < 1e-9);
    }

    #[test]
    fn even_grid_has_half_integer_center() {
        let g = CameraArrayGeometry::new(2, 4, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(g.view_offset_steps(ViewIndex::new(0, 0)), (-0.5, -1.5));
        assert_eq!(g.view_offset_steps(ViewIndex::new(1, 3)), (0.5, 1.5));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CameraArrayGeometry::new(0, 1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(CameraArrayGeometry::new(1, 1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(map_object_to_sensor((f64::NAN, 0.0), ViewIndex::new(0, 0), &rig()).is_err());
        assert!(map_object_to_sensor((0.0, 0.0), ViewIndex::new(3, 0), &rig()).is_err());
    }
}
