use ndarray::Array2;

use super::{hz_to_mel_slaney, mel_to_hz_slaney, FeatureError, MelConfig};
use crate::Scalar;

/// Triangular mel filterbank over one-sided FFT bins.
///
/// Filter `m` rises from breakpoint `m` to `m + 1` and falls to `m + 2`,
/// scaled by `2 / (f[m + 2] - f[m])` so every filter has unit area.
#[derive(Debug, Clone)]
pub struct MelFilterbank<T> {
    weights: Array2<T>,
    breakpoints_hz: Vec<f64>,
    /// Per filter, the half-open range of bins with nonzero weight.
    support: Vec<(usize, usize)>,
    sample_rate: u32,
    n_fft: usize,
}

impl<T: Scalar> MelFilterbank<T> {
    pub fn new(cfg: &MelConfig, n_fft: usize, sample_rate: u32) -> Result<Self, FeatureError> {
        cfg.validate(sample_rate)?;
        if n_fft < 2 {
            return Err(FeatureError::InvalidConfig(format!("n_fft {n_fft} too small")));
        }
        let mel_lo: f64 = hz_to_mel_slaney(cfg.fmin)?;
        let mel_hi: f64 = hz_to_mel_slaney(cfg.fmax)?;
        let n_points = cfg.n_mels + 2;
        let breakpoints_hz: Vec<f64> = (0..n_points)
            .map(|i| mel_to_hz_slaney(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_points - 1) as f64))
            .collect();

        let n_bins = n_fft / 2 + 1;
        let bin_hz = f64::from(sample_rate) / n_fft as f64;
        let mut fb = Self {
            weights: Array2::zeros((cfg.n_mels, n_bins)),
            breakpoints_hz,
            support: Vec::with_capacity(cfg.n_mels),
            sample_rate,
            n_fft,
        };
        for m in 0..cfg.n_mels {
            let mut lo = n_bins;
            let mut hi = 0;
            for k in 0..n_bins {
                let w = fb.response(m, k as f64 * bin_hz);
                if w > 0.0 {
                    lo = lo.min(k);
                    hi = k + 1;
                }
                fb.weights[(m, k)] = T::of(w);
            }
            fb.support.push(if lo < hi { (lo, hi) } else { (0, 0) });
        }
        Ok(fb)
    }

    /// Continuous response of filter `m` at `hz`, in 64-bit precision.
    pub fn response(&self, m: usize, hz: f64) -> f64 {
        let f = &self.breakpoints_hz;
        let lower = (hz - f[m]) / (f[m + 1] - f[m]);
        let upper = (f[m + 2] - hz) / (f[m + 2] - f[m + 1]);
        lower.min(upper).max(0.0) * self.peak(m)
    }

    /// Height of filter `m` at its center breakpoint.
    pub fn peak(&self, m: usize) -> f64 {
        2.0 / (self.breakpoints_hz[m + 2] - self.breakpoints_hz[m])
    }

    pub fn weights(&self) -> &Array2<T> {
        &self.weights
    }

    /// The `n_mels + 2` filter edges in Hz.
    pub fn breakpoints_hz(&self) -> &[f64] {
        &self.breakpoints_hz
    }

    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Projects a `n_bins x n_frames` magnitude matrix onto the mel channels,
    /// accumulating in 64-bit precision.
    pub fn apply(&self, magnitude: &Array2<T>) -> Array2<T> {
        assert_eq!(magnitude.nrows(), self.n_bins(), "magnitude rows must match filterbank bins");
        let n_frames = magnitude.ncols();
        let mut out = Array2::zeros((self.n_mels(), n_frames));
        for (m, &(lo, hi)) in self.support.iter().enumerate() {
            for t in 0..n_frames {
                let mut acc = 0.0f64;
                for k in lo..hi {
                    acc += self.weights[(m, k)].as_f64() * magnitude[(k, t)].as_f64();
                }
                out[(m, t)] = T::of(acc);
            }
        }
        out
    }
}
