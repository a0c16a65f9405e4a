//! 3D transform abstraction and DFT index bookkeeping.
//!
//! Volumes are stored x-fastest: `index = x + width * (y + height * z)`.
//! Transforms follow the FFTW convention: the forward transform uses
//! `exp(-2πi jk/n)`, the inverse `exp(+2πi jk/n)`, and neither normalizes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Extent of a volume along x (width), y (height) and z (depth / slices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims3 {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
}

impl Dims3 {
    pub const fn new(width: usize, height: usize, depth: usize) -> Self {
        Self { width, height, depth }
    }

    pub const fn len(&self) -> usize {
        self.width * self.height * self.depth
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn slice_len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub const fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.width * (y + self.height * z)
    }
}

/// An unnormalized complex 3D DFT pair.
pub trait Transform3 {
    fn forward(&mut self, data: &mut [Complex64], dims: Dims3);
    fn inverse(&mut self, data: &mut [Complex64], dims: Dims3);
}

impl<T: Transform3 + ?Sized> Transform3 for &mut T {
    fn forward(&mut self, data: &mut [Complex64], dims: Dims3) {
        (**self).forward(data, dims)
    }
    fn inverse(&mut self, data: &mut [Complex64], dims: Dims3) {
        (**self).inverse(data, dims)
    }
}

/// Signed frequency of DFT bin `k` out of `n` for sampling rate `fs`.
/// Bins at or above `n/2` map to negative frequencies.
pub fn frequency_of_index(k: usize, n: usize, fs: f64) -> f64 {
    debug_assert!(k < n);
    // k < n/2 compared in integers so odd n is handled exactly. The upper
    // half is written as -(n-k)/n rather than k/n - 1 so that bins k and n-k
    // carry bit-identical magnitudes.
    if 2 * k < n {
        k as f64 / n as f64 * fs
    } else {
        -((n - k) as f64 / n as f64) * fs
    }
}

/// Frequencies of all `n` bins of one axis.
pub fn axis_frequencies(n: usize, fs: f64) -> Vec<f64> {
    (0..n).map(|k| frequency_of_index(k, n, fs)).collect()
}

/// Direct separable DFT, `O(N · (W + H + D))`. Slow, but exact enough to
/// serve as a reference and usable where no FFT library is available.
#[derive(Debug, Default, Clone)]
pub struct NaiveDft {
    scratch: Vec<Complex64>,
}

impl NaiveDft {
    pub fn new() -> Self {
        Self::default()
    }

    fn transform(&mut self, data: &mut [Complex64], dims: Dims3, sign: f64) {
        assert_eq!(data.len(), dims.len(), "buffer does not match dimensions");
        let strides = [1, dims.width, dims.width * dims.height];
        let extents = [dims.width, dims.height, dims.depth];
        for axis in 0..3 {
            let n = extents[axis];
            if n <= 1 {
                continue;
            }
            let stride = strides[axis];
            let twiddles: Vec<Complex64> = (0..n)
                .map(|m| {
                    let a = sign * 2.0 * PI * m as f64 / n as f64;
                    Complex64::new(libm::cos(a), libm::sin(a))
                })
                .collect();
            self.scratch.clear();
            self.scratch.resize(n, Complex64::new(0.0, 0.0));
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for start in line_starts(dims, axis) {
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[start + j * stride];
                }
                for k in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, v) in line.iter().enumerate() {
                        acc += v * twiddles[(j * k) % n];
                    }
                    self.scratch[k] = acc;
                }
                for (k, v) in self.scratch.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }
}

/// Offsets of the first element of every line running along `axis`.
pub fn line_starts(dims: Dims3, axis: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    match axis {
        0 => {
            for z in 0..dims.depth {
                for y in 0..dims.height {
                    starts.push(dims.index(0, y, z));
                }
            }
        }
        1 => {
            for z in 0..dims.depth {
                for x in 0..dims.width {
                    starts.push(dims.index(x, 0, z));
                }
            }
        }
        _ => {
            for y in 0..dims.height {
                for x in 0..dims.width {
                    starts.push(dims.index(x, y, 0));
                }
            }
        }
    }
    starts
}

impl Transform3 for NaiveDft {
    fn forward(&mut self, data: &mut [Complex64], dims: Dims3) {
        self.transform(data, dims, -1.0)
    }
    fn inverse(&mut self, data: &mut [Complex64], dims: Dims3) {
        self.transform(data, dims, 1.0)
    }
}
