//! Slaney mel scale: linear below 1 kHz, logarithmic above.

use super::FeatureError;
use crate::Scalar;

const LINEAR_HZ_PER_MEL: f64 = 200.0 / 3.0;
const LOG_REGION_HZ: f64 = 1000.0;
const LOG_REGION_MEL: f64 = LOG_REGION_HZ / LINEAR_HZ_PER_MEL;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel_slaney<T: Scalar>(hz: T) -> Result<T, FeatureError> {
    let f = hz.as_f64();
    if f < 0.0 || f.is_nan() {
        return Err(FeatureError::NegativeFrequency(f));
    }
    let mel = if f < LOG_REGION_HZ {
        f / LINEAR_HZ_PER_MEL
    } else {
        LOG_REGION_MEL + (f / LOG_REGION_HZ).ln() / log_step()
    };
    Ok(T::of(mel))
}

/// Inverse of [`hz_to_mel_slaney`]; negative mel values extrapolate linearly.
pub fn mel_to_hz_slaney<T: Scalar>(mel: T) -> T {
    let m = mel.as_f64();
    let hz = if m < LOG_REGION_MEL {
        m * LINEAR_HZ_PER_MEL
    } else {
        LOG_REGION_HZ * (log_step() * (m - LOG_REGION_MEL)).exp()
    };
    T::of(hz)
}
