//! Type-I discrete sine transform through a complex FFT of the odd extension.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// `Y_n = Σ_{j=1}^{K-1} y_j sin(π n j / K)` for `n = 1..K-1`.
///
/// The transform is its own inverse up to a factor `K/2`.
pub struct SineTransform {
    intervals: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub fn new(intervals: usize) -> Self {
        assert!(
            intervals >= 2,
            "sine transform needs at least two intervals"
        );
        let fft = FftPlanner::new().plan_fft_forward(2 * intervals);
        SineTransform { intervals, fft }
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Transforms `input` (length `K-1`, missing trailing entries are zeros)
    /// into `output` (length `K-1`).
    pub fn apply(&self, input: &[Complex64], output: &mut [Complex64]) {
        let k = self.intervals;
        assert!(input.len() < k && output.len() == k - 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * k];
        for (j, &y) in input.iter().enumerate() {
            buf[j + 1] = y;
            buf[2 * k - 1 - j] = -y;
        }
        self.fft.process(&mut buf);
        // FFT of the odd extension is -2i·Y_n.
        for (n, out) in output.iter_mut().enumerate() {
            let z = buf[n + 1];
            *out = Complex64::new(-z.im / 2.0, z.re / 2.0);
        }
    }
}
