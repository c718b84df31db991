//! 2-D real FFTs over `realfft`/`rustfft`.
//!
//! Real planes are stored as half spectra: `width / 2 + 1` complex columns by
//! `height` rows. Spectrum buffers are recycled through a small per-thread
//! pool so repeated transforms of one size do not keep faulting in fresh
//! memory.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::kernel::Kernel2D;

pub(crate) type C64 = Complex<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const COLUMN_BLOCK: usize = 16;
const POOL_SIZE: usize = 4;

thread_local! {
    static POOL: RefCell<Vec<Vec<C64>>> = const { RefCell::new(Vec::new()) };
}

/// Smallest `n >= target` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(target: usize) -> usize {
    let mut n = target.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Half spectrum of a real `width x height` plane, row-major over
/// `cols = width / 2 + 1` columns.
pub(crate) struct Spectrum {
    pub data: Vec<C64>,
}

impl Spectrum {
    fn zeros(n: usize) -> Self {
        let reused = POOL.with(|p| {
            let mut pool = p.borrow_mut();
            let i = pool.iter().position(|b| b.capacity() >= n)?;
            Some(pool.swap_remove(i))
        });
        let data = match reused {
            Some(mut b) => {
                b.clear();
                b.resize(n, ZERO);
                b
            }
            None => vec![ZERO; n],
        };
        Self { data }
    }
}

impl Drop for Spectrum {
    fn drop(&mut self) {
        let buf = std::mem::take(&mut self.data);
        // Ignored during thread teardown, when the pool may already be gone.
        let _ = POOL.try_with(|p| {
            let mut pool = p.borrow_mut();
            if pool.len() < POOL_SIZE {
                pool.push(buf);
            }
        });
    }
}

/// Plans for one grid size.
pub(crate) struct Fft2 {
    pub width: usize,
    pub height: usize,
    pub cols: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        Self {
            width,
            height,
            cols: width / 2 + 1,
            r2c: real.plan_fft_forward(width),
            c2r: real.plan_fft_inverse(width),
            col_fwd: complex.plan_fft_forward(height),
            col_inv: complex.plan_fft_inverse(height),
        }
    }

    /// Frequency indices `(kx, ky)` of spectrum entry `i`; `kx` is never
    /// negative.
    pub fn frequency(&self, i: usize) -> (usize, usize) {
        (i % self.cols, i / self.cols)
    }

    /// Transform of a real `w x h` plane placed at the top-left corner of the
    /// grid and zero-padded.
    pub fn forward_plane(&self, plane: &[f64], w: usize, h: usize) -> Spectrum {
        let mut spec = Spectrum::zeros(self.cols * self.height);
        let mut row = self.r2c.make_input_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for y in 0..h {
            row.fill(0.0);
            row[..w].copy_from_slice(&plane[y * w..(y + 1) * w]);
            self.r2c
                .process_with_scratch(&mut row, &mut spec.data[y * self.cols..(y + 1) * self.cols], &mut scratch)
                .expect("buffer lengths come from the plan");
        }
        self.columns(&mut spec.data, false);
        spec
    }

    /// Transform of a kernel centered at the origin, with negative offsets
    /// wrapped and any support wider than the grid folded.
    pub fn forward_kernel(&self, kernel: &Kernel2D) -> Spectrum {
        let (hw, hh) = (kernel.half_width() as i64, kernel.half_height() as i64);
        let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for dy in -hh..=hh {
            let row = rows.entry(dy.rem_euclid(self.height as i64) as usize).or_insert_with(|| vec![0.0; self.width]);
            for dx in -hw..=hw {
                row[dx.rem_euclid(self.width as i64) as usize] += kernel.at(dx, dy);
            }
        }
        let mut spec = Spectrum::zeros(self.cols * self.height);
        let mut scratch = self.r2c.make_scratch_vec();
        for (y, mut row) in rows {
            self.r2c
                .process_with_scratch(&mut row, &mut spec.data[y * self.cols..(y + 1) * self.cols], &mut scratch)
                .expect("buffer lengths come from the plan");
        }
        self.columns(&mut spec.data, false);
        spec
    }

    /// Inverse transform without the `1 / (width * height)` factor; appends
    /// `scale` times the top-left `w x h` window to `out`.
    pub fn inverse_into(&self, spec: &mut Spectrum, w: usize, h: usize, scale: f64, out: &mut Vec<f64>) {
        self.columns(&mut spec.data, true);
        let mut row = self.c2r.make_output_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        let nyquist = self.width.is_multiple_of(2).then_some(self.cols - 1);
        for y in 0..h {
            let input = &mut spec.data[y * self.cols..(y + 1) * self.cols];
            // A real plane has real DC and Nyquist bins; drop round-off.
            input[0].im = 0.0;
            if let Some(n) = nyquist {
                input[n].im = 0.0;
            }
            self.c2r.process_with_scratch(input, &mut row, &mut scratch).expect("buffer lengths come from the plan");
            out.extend(row[..w].iter().map(|v| v * scale));
        }
    }

    /// Column transforms, gathered a block at a time into a contiguous buffer
    /// so the working set stays in cache for large grids.
    fn columns(&self, data: &mut [C64], inverse: bool) {
        let (cols, h) = (self.cols, self.height);
        let fft = if inverse { &self.col_inv } else { &self.col_fwd };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        let mut block = vec![ZERO; COLUMN_BLOCK * h];
        for x0 in (0..cols).step_by(COLUMN_BLOCK) {
            let n = COLUMN_BLOCK.min(cols - x0);
            for y in 0..h {
                for (b, v) in data[y * cols + x0..y * cols + x0 + n].iter().enumerate() {
                    block[b * h + y] = *v;
                }
            }
            fft.process_with_scratch(&mut block[..n * h], &mut scratch);
            for y in 0..h {
                for (b, v) in data[y * cols + x0..y * cols + x0 + n].iter_mut().enumerate() {
                    *v = block[b * h + y];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(7), 8);
        assert_eq!(next_fast_len(383), 384);
        assert_eq!(next_fast_len(385), 400);
        assert_eq!(next_fast_len(639), 640);
    }

    #[test]
    fn round_trip() {
        for (w, h) in [(4, 3), (5, 4), (7, 7)] {
            let plane: Vec<f64> = (0..w * h).map(|i| (i * i % 7) as f64).collect();
            let fft = Fft2::new(w + 2, h + 1);
            let mut spec = fft.forward_plane(&plane, w, h);
            let mut out = Vec::new();
            fft.inverse_into(&mut spec, w, h, 1.0 / ((w + 2) * (h + 1)) as f64, &mut out);
            for (a, b) in out.iter().zip(&plane) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_spectrum_of_impulse_is_flat() {
        let fft = Fft2::new(6, 5);
        let spec = fft.forward_kernel(&Kernel2D::impulse());
        assert!(spec.data.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }
}
