use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{FeatureError, SpectrogramConfig};
use crate::audio_io::AudioBuffer;
use crate::Scalar;

/// `(n_fft / 2 + 1) x n_frames` STFT magnitudes.
pub type StftMagnitude<T> = Array2<T>;

/// Frames produced for `len` samples under centered padding.
pub fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

/// DFT-even Hann window: `0.5 * (1 - cos(2 pi n / N))`.
pub fn periodic_hann<T: Scalar>(len: usize) -> Vec<T> {
    (0..len)
        .map(|n| T::of(0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())))
        .collect()
}

/// Maps an index in padded coordinates onto the signal by mirror reflection
/// about the end samples (the edge sample itself is not repeated). Repeats the
/// reflection when the padding exceeds the signal length.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let j = i.rem_euclid(period);
    if j < len as isize {
        j as usize
    } else {
        (period - j) as usize
    }
}

pub fn stft_magnitude<T: Scalar>(buf: &AudioBuffer<T>, cfg: &SpectrogramConfig) -> Result<StftMagnitude<T>, FeatureError> {
    cfg.validate()?;
    let x = buf.samples();
    if x.is_empty() {
        return Err(FeatureError::EmptyAudio);
    }
    let n_fft = cfg.n_fft;
    let pad = (n_fft / 2) as isize;
    let n_frames = frame_count(x.len(), cfg.hop);

    // window centered inside the FFT frame, zeros elsewhere
    let mut window = vec![T::zero(); n_fft];
    let offset = (n_fft - cfg.win_length) / 2;
    window[offset..offset + cfg.win_length].copy_from_slice(&periodic_hann::<T>(cfg.win_length));

    let fft = FftPlanner::<T>::new().plan_fft_forward(n_fft);
    let mut frame = vec![Complex::new(T::zero(), T::zero()); n_fft];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let mut out = Array2::zeros((cfg.n_bins(), n_frames));

    for t in 0..n_frames {
        let start = (t * cfg.hop) as isize - pad;
        for (n, slot) in frame.iter_mut().enumerate() {
            let s = x[reflect(start + n as isize, x.len())];
            *slot = Complex::new(s * window[n], T::zero());
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        for (k, c) in frame.iter().take(cfg.n_bins()).enumerate() {
            out[(k, t)] = c.norm();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_matches_numpy_reflect_mode() {
        // np.pad([0,1,2,3], 3, mode="reflect") -> [3,2,1,0,1,2,3,2,1,0]
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(reflect(-5, 1), 0);
        assert_eq!(reflect(-3, 2), 1);
    }

    #[test]
    fn hann_is_periodic() {
        let w: Vec<f64> = periodic_hann(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[1] - w[7]).abs() < 1e-15);
    }

    #[test]
    fn one_second_gives_87_frames() {
        let buf = AudioBuffer::new(vec![0.0f64; 22_050], 22_050).unwrap();
        let mag = stft_magnitude(&buf, &SpectrogramConfig::default()).unwrap();
        assert_eq!(mag.dim(), (513, 87));
        assert!(mag.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_sample_input() {
        let buf = AudioBuffer::new(vec![0.5f64], 22_050).unwrap();
        let mag = stft_magnitude(&buf, &SpectrogramConfig::default()).unwrap();
        assert_eq!(mag.ncols(), 1);
        // constant frame: all energy in DC, equal to 0.5 * window sum = 0.5 * 512
        assert!((mag[(0, 0)] - 256.0).abs() < 1e-9);
    }

    #[test]
    fn short_window_is_centered() {
        let cfg = SpectrogramConfig { n_fft: 16, win_length: 8, hop: 4, ..Default::default() };
        let buf = AudioBuffer::new(vec![1.0f64; 64], 22_050).unwrap();
        let mag = stft_magnitude(&buf, &cfg).unwrap();
        // DC of a constant frame equals the window sum (4 for an 8-point periodic Hann)
        assert!((mag[(0, 5)] - 4.0).abs() < 1e-12);
    }
}
