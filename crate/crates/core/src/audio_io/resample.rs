//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc kernel.
//!
//! The conversion ratio `out/in` is reduced to `up/down`. Output sample `n`
//! sits at input time `n * down / up`; its fractional part selects one of
//! `up` filter phases. The kernel spans [`ZERO_CROSSINGS`] zero crossings of
//! the lower of the two rates, so when upsampling every phase has 64 taps and
//! when downsampling the support stretches by `down / up`.

use super::{AudioBuffer, AudioError};
use crate::Scalar;

/// Kaiser window shape parameter.
pub const KAISER_BETA: f64 = 12.0;
/// Zero crossings covered by the kernel (both sides), in lower-rate periods.
pub const ZERO_CROSSINGS: usize = 64;
/// Passband cutoff as a fraction of the lower Nyquist frequency; leaves room
/// for the transition band to end at Nyquist.
const ROLLOFF: f64 = 0.88;
/// Beyond this many phases coefficients are evaluated per output sample.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    up: u64,
    /// Taps on each side of the output instant.
    half: usize,
    cutoff: f64,
    support: f64,
    norm: f64,
    table: Option<Vec<f64>>,
}

impl Kernel {
    fn new(up: u64, down: u64) -> Self {
        let scale = (up as f64 / down as f64).min(1.0);
        let support = (ZERO_CROSSINGS / 2) as f64 / scale;
        let mut kernel = Self {
            up,
            half: support.ceil() as usize,
            cutoff: 0.5 * scale * ROLLOFF,
            support,
            norm: bessel_i0(KAISER_BETA),
            table: None,
        };
        if up <= MAX_TABLE_PHASES {
            let taps = 2 * kernel.half;
            let mut table = vec![0.0; up as usize * taps];
            for (p, row) in table.chunks_exact_mut(taps).enumerate() {
                kernel.fill_phase(p as u64, row);
            }
            kernel.table = Some(table);
        }
        kernel
    }

    fn taps(&self) -> usize {
        2 * self.half
    }

    fn weight(&self, t: f64) -> f64 {
        let u = t / self.support;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / self.norm;
        let x = 2.0 * self.cutoff * t;
        let sinc = if x == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        2.0 * self.cutoff * sinc * window
    }

    /// Tap `i` multiplies input sample `base + i + 1 - half`.
    fn fill_phase(&self, phase: u64, out: &mut [f64]) {
        let frac = phase as f64 / self.up as f64;
        for (i, w) in out.iter_mut().enumerate() {
            let offset = i as f64 + 1.0 - self.half as f64;
            *w = self.weight(frac - offset);
        }
        // unity DC gain in every phase
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|w| *w /= sum);
    }
}

/// Converts `buf` to `target_rate`.
///
/// Output length is `round(len * target_rate / rate)`. Samples outside the
/// input are treated as zero. Equal rates return an exact copy.
pub fn resample<T: Scalar>(buf: &AudioBuffer<T>, target_rate: u32) -> Result<AudioBuffer<T>, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    let source_rate = buf.sample_rate();
    if source_rate == target_rate {
        return Ok(buf.clone());
    }

    let g = gcd(u64::from(target_rate), u64::from(source_rate));
    let (up, down) = (u64::from(target_rate) / g, u64::from(source_rate) / g);
    let input: Vec<f64> = buf.samples().iter().map(|s| s.as_f64()).collect();
    let n_in = input.len() as u128;
    let n_out = ((2 * n_in * u128::from(up) + u128::from(down)) / (2 * u128::from(down))) as usize;

    let kernel = Kernel::new(up, down);
    let taps = kernel.taps();
    let mut scratch = vec![0.0; taps];
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u128 {
        let pos = n * u128::from(down);
        let base = (pos / u128::from(up)) as i64;
        let phase = (pos % u128::from(up)) as u64;
        let coeffs: &[f64] = match &kernel.table {
            Some(table) => &table[phase as usize * taps..(phase as usize + 1) * taps],
            None => {
                kernel.fill_phase(phase, &mut scratch);
                &scratch
            }
        };
        let first = base + 1 - kernel.half as i64;
        let mut acc = 0.0;
        for (i, &w) in coeffs.iter().enumerate() {
            let k = first + i as i64;
            if k >= 0 && (k as usize) < input.len() {
                acc += w * input[k as usize];
            }
        }
        out.push(T::of(acc));
    }
    AudioBuffer::new(out, target_rate)
}
