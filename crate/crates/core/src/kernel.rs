use crate::error::{Error, Result};

/// Dense 2-D convolution kernel with odd extents, centered on the middle sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Kernel2D {
    /// Row-major samples; each must be finite and non-negative.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel extents must be odd (got {width}x{height})")));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} kernel needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("kernel samples must be finite and >= 0"));
        }
        Ok(Self { width, height, data })
    }

    pub fn impulse() -> Self {
        Self { width: 1, height: 1, data: vec![1.0] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn half_width(&self) -> usize {
        self.width / 2
    }

    pub fn half_height(&self) -> usize {
        self.height / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sample at offset `(dx, dy)` from the center; zero outside the support.
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let x = dx + self.half_width() as i64;
        let y = dy + self.half_height() as i64;
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    pub fn center(&self) -> f64 {
        self.at(0, 0)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|v| v * factor).collect())
    }

    /// `weight * self + delta`, i.e. the kernel plus a unit impulse at its center.
    pub fn plus_impulse(&self, weight: f64) -> Result<Self> {
        let mut k = self.scaled(weight)?;
        let c = k.half_height() * k.width + k.half_width();
        k.data[c] += 1.0;
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_and_impulse() {
        let k = Kernel2D::new(3, 1, vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(k.at(-1, 0), 0.25);
        assert_eq!(k.at(0, 0), 0.5);
        assert_eq!(k.at(2, 0), 0.0);
        assert_eq!(k.at(0, 1), 0.0);
        let p = k.plus_impulse(2.0).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 2.0, 0.5]);
    }

    #[test]
    fn rejects_even_or_negative() {
        assert!(Kernel2D::new(2, 1, vec![0.5, 0.5]).is_err());
        assert!(Kernel2D::new(1, 1, vec![-1.0]).is_err());
    }
}
