//! `Transform3` backed by rustfft. Each instance owns its plans and scratch
//! buffers, so give every worker thread its own.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use stcsf_core::fft::{Dims3, Transform3};

pub struct RustFft {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    gathered: Vec<Complex64>,
}

impl Default for RustFft {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for RustFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RustFft").field("plans", &self.plans.len()).finish()
    }
}

impl RustFft {
    pub fn new() -> Self {
        Self { planner: FftPlanner::new(), plans: HashMap::new(), scratch: Vec::new(), gathered: Vec::new() }
    }

    fn plan(&mut self, n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
        let planner = &mut self.planner;
        self.plans
            .entry((n, forward))
            .or_insert_with(|| {
                let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
                planner.plan_fft(n, dir)
            })
            .clone()
    }

    /// Transforms every contiguous run of `n` values in `buf`.
    fn run_lines(&mut self, buf: &mut [Complex64], n: usize, forward: bool) {
        let fft = self.plan(n, forward);
        let need = fft.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        fft.process_with_scratch(buf, &mut self.scratch[..need]);
    }

    fn transform(&mut self, data: &mut [Complex64], dims: Dims3, forward: bool) {
        assert_eq!(data.len(), dims.len(), "buffer does not match dimensions");
        let Dims3 { width: w, height: h, depth: d } = dims;
        if w > 1 {
            self.run_lines(data, w, forward);
        }
        let mut gathered = std::mem::take(&mut self.gathered);
        if h > 1 {
            // columns of each slice, gathered x-major
            gathered.resize(w * h, Complex64::new(0.0, 0.0));
            for slice in data.chunks_exact_mut(w * h) {
                for y in 0..h {
                    for x in 0..w {
                        gathered[x * h + y] = slice[x + w * y];
                    }
                }
                self.run_lines(&mut gathered, h, forward);
                for y in 0..h {
                    for x in 0..w {
                        slice[x + w * y] = gathered[x * h + y];
                    }
                }
            }
        }
        if d > 1 {
            let plane = w * h;
            gathered.resize(plane * d, Complex64::new(0.0, 0.0));
            for z in 0..d {
                for p in 0..plane {
                    gathered[p * d + z] = data[p + plane * z];
                }
            }
            self.run_lines(&mut gathered[..plane * d], d, forward);
            for z in 0..d {
                for p in 0..plane {
                    data[p + plane * z] = gathered[p * d + z];
                }
            }
        }
        self.gathered = gathered;
    }
}

impl Transform3 for RustFft {
    fn forward(&mut self, data: &mut [Complex64], dims: Dims3) {
        self.transform(data, dims, true)
    }
    fn inverse(&mut self, data: &mut [Complex64], dims: Dims3) {
        self.transform(data, dims, false)
    }
}
