use crate::error::{Error, Result};

/// Linear-intensity raster with one or three channels.
///
/// Samples are stored planar (`channel`, `row`, `column`) as `f64`. Every
/// sample is finite and non-negative; the nominal range is `[0, 1]` but
/// values above one are allowed (fluence, unnormalized renders).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::check_dims(width, height, channels)?;
        Ok(Self { width, height, channels, data: vec![0.0; width * height * channels] })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid(format!("image sample must be finite and >= 0 (got {value})")));
        }
        let mut img = Self::zeros(width, height, channels)?;
        img.data.fill(value);
        Ok(img)
    }

    /// Builds an image from planar samples, validating the sample invariants.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_dims(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("sample {i} is {v}; samples must be finite and >= 0")));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds a single-channel image from a row-major closure.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, 1, data)
    }

    /// Constructs without validating sample values; callers guarantee the
    /// invariants (used on hot paths that clamp explicitly).
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { width, height, channels, data }
    }

    fn check_dims(width: usize, height: usize, channels: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be >= 1 (got {width}x{height})")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images have 1 or 3 channels (got {channels})")));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.dims() == other.dims()
    }

    pub fn pixels_per_channel(&self) -> usize {
        self.width * self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixels_per_channel();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Sets a sample. Panics if the value breaks the non-negativity invariant.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "image samples must be finite and >= 0 (got {value})");
        let idx = (c * self.height + y) * self.width + x;
        self.data[idx] = value;
    }

    /// Single-channel copy of channel `c`.
    pub fn extract_channel(&self, c: usize) -> Image {
        Image::from_raw(self.width, self.height, 1, self.channel(c).to_vec())
    }

    /// Stacks single-channel planes into one image.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        let first = planes.first().ok_or_else(|| Error::invalid("no channels given"))?;
        let mut data = Vec::with_capacity(first.pixels_per_channel() * planes.len());
        for p in planes {
            if p.width != first.width || p.height != first.height || p.channels != 1 {
                return Err(Error::DimensionMismatch("channel planes differ in size".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Image::from_vec(first.width, first.height, planes.len(), data)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Multiplies every sample by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Result<Image> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::invalid(format!("scale factor must be finite and >= 0 (got {factor})")));
        }
        Ok(Image::from_raw(self.width, self.height, self.channels, self.data.iter().map(|v| v * factor).collect()))
    }

    /// Divides by the maximum sample so the peak becomes one. All-zero images
    /// are returned unchanged.
    pub fn peak_normalized(&self) -> Image {
        let m = self.max_value();
        if m > 0.0 {
            Image::from_raw(self.width, self.height, self.channels, self.data.iter().map(|v| v / m).collect())
        } else {
            self.clone()
        }
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(Image::from_vec(1, 1, 1, vec![-0.1]).is_err());
        assert!(Image::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Image::from_vec(0, 1, 1, vec![]).is_err());
        assert!(Image::from_vec(1, 1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn planar_indexing() {
        let img = Image::from_vec(2, 1, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(img.get(1, 0, 0), 1.0);
        assert_eq!(img.get(0, 0, 2), 4.0);
        assert_eq!(img.extract_channel(1).as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn peak_normalization() {
        let img = Image::from_vec(2, 1, 1, vec![0.5, 2.0]).unwrap();
        assert_eq!(img.peak_normalized().as_slice(), &[0.25, 1.0]);
        let zero = Image::zeros(2, 2, 1).unwrap();
        assert_eq!(zero.peak_normalized(), zero);
    }
}
