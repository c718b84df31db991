use crate::error::{Error, Result};
use crate::geometry::{CameraArrayGeometry, ViewIndex};
use crate::image::Image;

/// A grid of views `L(u, v, s, t)` captured by a camera array.
#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    geometry: CameraArrayGeometry,
    views: Vec<Image>,
}

impl LightField {
    /// `views` are ordered row-major with `v` outer (see [`CameraArrayGeometry::views`]).
    pub fn new(geometry: CameraArrayGeometry, views: Vec<Image>) -> Result<Self> {
        geometry.validate()?;
        if views.len() != geometry.view_count() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} grid needs {} views, got {}",
                geometry.grid_u,
                geometry.grid_v,
                geometry.view_count(),
                views.len()
            )));
        }
        let dims = views[0].dims();
        if let Some(i) = views.iter().position(|v| v.dims() != dims) {
            return Err(Error::DimensionMismatch(format!("view {i} is {:?}, view 0 is {:?}", views[i].dims(), dims)));
        }
        Ok(Self { geometry, views })
    }

    /// Builds a light field by evaluating `f` for every view.
    pub fn from_fn(geometry: CameraArrayGeometry, mut f: impl FnMut(ViewIndex) -> Result<Image>) -> Result<Self> {
        let views = geometry.views().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::new(geometry, views)
    }

    pub fn geometry(&self) -> &CameraArrayGeometry {
        &self.geometry
    }

    pub fn views(&self) -> &[Image] {
        &self.views
    }

    pub fn into_views(self) -> Vec<Image> {
        self.views
    }

    pub fn view(&self, index: ViewIndex) -> &Image {
        &self.views[self.geometry.linear_index(index)]
    }

    pub fn indexed_views(&self) -> impl Iterator<Item = (ViewIndex, &Image)> {
        self.geometry.views().zip(self.views.iter())
    }

    pub fn central_view(&self) -> &Image {
        self.view(ViewIndex::new(self.geometry.grid_u / 2, self.geometry.grid_v / 2))
    }

    /// `(width, height, channels)` shared by every view.
    pub fn view_dims(&self) -> (usize, usize, usize) {
        self.views[0].dims()
    }

    /// Linear combination `a * self + b * other` of two fields on the same grid.
    pub fn combine(&self, a: f64, other: &LightField, b: f64) -> Result<LightField> {
        if self.geometry != other.geometry || self.view_dims() != other.view_dims() {
            return Err(Error::DimensionMismatch("light fields differ in geometry or view size".into()));
        }
        let views = self
            .views
            .iter()
            .zip(&other.views)
            .map(|(x, y)| {
                let (w, h, c) = x.dims();
                let data = x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect();
                Image::from_vec(w, h, c, data)
            })
            .collect::<Result<Vec<_>>>()?;
        LightField::new(self.geometry, views)
    }
}
