//! Discrete Volterra convolution for the rough Heston variance.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Below this block length the online convolution sums directly.
const DIRECT_BLOCK: usize = 64;

/// Kernel weights K(m dt) = C (m dt)^(H - 1/2) for lags m = 1..=n.
#[derive(Clone)]
pub struct VolterraKernel {
    weights: Vec<f64>,
    /// Padded power-of-two length of the recursion.
    span: usize,
    /// Per block length `len` (a power of two): forward and inverse plans
    /// and the spectrum of K[0..len].
    levels: Vec<Level>,
}

#[derive(Clone)]
struct Level {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for VolterraKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolterraKernel")
            .field("max_lag", &self.max_lag())
            .finish()
    }
}

impl VolterraKernel {
    pub fn power_law(c: f64, hurst: f64, dt: f64, n: usize) -> Self {
        let mut weights = vec![0.0; n + 1];
        let expo = hurst - 0.5;
        for (m, w) in weights.iter_mut().enumerate().skip(1) {
            *w = if expo == 0.0 {
                c
            } else {
                c * (m as f64 * dt).powf(expo)
            };
        }
        Self::from_weights(weights)
    }

    fn from_weights(weights: Vec<f64>) -> Self {
        let span = weights.len().next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut levels = Vec::new();
        let mut len = span;
        while len > DIRECT_BLOCK {
            let forward = planner.plan_fft_forward(len);
            let inverse = planner.plan_fft_inverse(len);
            let mut spectrum: Vec<Complex<f64>> = (0..len)
                .map(|m| Complex::new(weights.get(m).copied().unwrap_or(0.0), 0.0))
                .collect();
            forward.process(&mut spectrum);
            let scale = 1.0 / len as f64;
            spectrum.iter_mut().for_each(|z| *z *= scale);
            levels.push(Level {
                len,
                forward,
                inverse,
                spectrum,
            });
            len /= 2;
        }
        Self {
            weights,
            span,
            levels,
        }
    }

    #[inline]
    pub fn at_lag(&self, m: usize) -> f64 {
        self.weights[m]
    }

    pub fn max_lag(&self) -> usize {
        self.weights.len() - 1
    }

    /// Run v_i = sum_{j<i} K(i - j) inc_j online for i = 0..=max_lag.
    ///
    /// `step(i, acc_i)` receives the accumulated forcing at step i and
    /// returns inc_i. Blocks are combined by FFT convolution, O(n log^2 n).
    pub fn solve<F: FnMut(usize, f64) -> f64>(&self, mut step: F) {
        let n = self.weights.len();
        let mut acc = vec![0.0; self.span];
        let mut inc = vec![0.0; self.span];
        let mut buf = vec![Complex::new(0.0, 0.0); self.span];
        self.block(0, self.span, 0, n, &mut acc, &mut inc, &mut buf, &mut step);
    }

    #[allow(clippy::too_many_arguments)]
    fn block<F: FnMut(usize, f64) -> f64>(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        n: usize,
        acc: &mut [f64],
        inc: &mut [f64],
        buf: &mut [Complex<f64>],
        step: &mut F,
    ) {
        if lo >= n {
            return;
        }
        let len = hi - lo;
        if len <= DIRECT_BLOCK {
            let top = hi.min(n);
            for i in lo..top {
                let x = step(i, acc[i]);
                inc[i] = x;
                for k in i + 1..top {
                    acc[k] += self.weights[k - i] * x;
                }
            }
            return;
        }
        let mid = lo + len / 2;
        self.block(lo, mid, depth + 1, n, acc, inc, buf, step);
        if mid < n {
            // acc[k] += sum_{j in [lo, mid)} inc_j K[k - j] for k in [mid, hi);
            // circular wrap only lands on outputs below mid
            let level = &self.levels[depth];
            debug_assert_eq!(level.len, len);
            let b = &mut buf[..len];
            for (q, z) in b.iter_mut().enumerate() {
                let v = if q < len / 2 { inc[lo + q] } else { 0.0 };
                *z = Complex::new(v, 0.0);
            }
            level.forward.process(b);
            for (z, k) in b.iter_mut().zip(&level.spectrum) {
                *z *= k;
            }
            level.inverse.process(b);
            for (k, z) in (mid..hi.min(n)).zip(&b[len / 2..]) {
                acc[k] += z.re;
            }
        }
        self.block(mid, hi, depth + 1, n, acc, inc, buf, step);
    }
}

/// Running state of v_i = v0 + sum_{j<i} K(t_i - t_j) inc_j.
///
/// Each pushed increment is scattered forward into the accumulator, so the
/// cost is O(n^2 / 2) multiply-adds over a path.
pub struct VolterraAccumulator<'k> {
    kernel: &'k VolterraKernel,
    acc: Vec<f64>,
    next: usize,
}

impl<'k> VolterraAccumulator<'k> {
    pub fn new(kernel: &'k VolterraKernel) -> Self {
        Self {
            kernel,
            acc: vec![0.0; kernel.max_lag() + 1],
            next: 0,
        }
    }

    /// Accumulated forcing at the next step index.
    pub fn current(&self) -> f64 {
        self.acc[self.next]
    }

    /// Register the increment of the current step and advance.
    pub fn push(&mut self, inc: f64) {
        let j = self.next;
        let tail = &mut self.acc[j + 1..];
        let w = &self.kernel.weights[1..=tail.len()];
        for (a, k) in tail.iter_mut().zip(w) {
            *a += k * inc;
        }
        self.next += 1;
    }
}
