#![allow(dead_code)]

use std::f64::consts::PI;

use ttsprep::dataset::{CorpusManifest, Emotion, Utterance};

/// Table rows in print order.
pub const REFERENCE_SPEAKERS: [&str; 11] = [
    "kss-f",
    "ketts-30f",
    "ketts-30m",
    "ketts2-20m",
    "ketts2-30f",
    "ketts2-40m",
    "ketts2-50f",
    "ketts2-50m",
    "ketts2-60f",
    "ketts3-f",
    "ketts3-m",
];

/// Printed hours per cell, columns neu ang dis fea hap sad sur.
pub const REFERENCE_PRINTED: [[Option<&str>; 7]; 11] = {
    const N: Option<&str> = None;
    [
        [Some("12.59"), N, N, N, N, N, N],
        [Some("3.52"), Some("3.46"), Some("3.51"), Some("3.68"), Some("5.13"), Some("3.75"), Some("3.56")],
        [Some("3.37"), Some("3.29"), Some("3.31"), Some("3.51"), Some("3.50"), Some("3.73"), Some("3.40")],
        [Some("0.72"), Some("0.72"), Some("0.74"), Some("0.76"), Some("0.69"), Some("0.75"), Some("0.70")],
        [Some("0.66"), Some("0.65"), Some("0.67"), Some("0.65"), Some("0.70"), Some("0.68"), Some("0.68")],
        [Some("0.73"), Some("0.69"), Some("0.70"), Some("0.75"), Some("0.69"), Some("0.74"), Some("0.69")],
        [Some("0.73"), Some("0.71"), Some("0.71"), Some("0.70"), Some("0.72"), Some("0.71"), Some("0.69")],
        [Some("0.68"), Some("0.68"), Some("0.69"), Some("0.67"), Some("0.68"), Some("0.68"), Some("0.65")],
        [Some("0.77"), Some("0.68"), Some("0.67"), Some("0.68"), Some("0.72"), Some("0.72"), Some("0.67")],
        [Some("3.96"), Some("1.34"), N, Some("1.27"), Some("1.44"), Some("1.64"), N],
        [Some("3.90"), Some("1.43"), N, Some("1.18"), Some("1.39"), Some("1.48"), N],
    ]
};
pub const REFERENCE_ROW_TOTALS: [&str; 11] =
    ["12.59", "26.61", "24.12", "5.09", "4.69", "4.98", "4.98", "4.73", "4.90", "9.64", "9.38"];
pub const REFERENCE_COLUMN_TOTALS: [&str; 7] = ["31.63", "13.65", "11.01", "13.85", "15.64", "14.87", "11.05"];
pub const REFERENCE_GRAND_TOTAL: &str = "111.70";

/// Whole-second cell durations that round to every printed cell, row total,
/// column total and the grand total at once. Rounding the printed cells
/// alone and summing gives 111.71, so the cells have to be chosen jointly.
pub const REFERENCE_SECONDS: [[Option<u64>; 7]; 11] = {
    const N: Option<u64> = None;
    [
        [Some(45341), N, N, N, N, N, N],
        [Some(12678), Some(12473), Some(12618), Some(13252), Some(18450), Some(13482), Some(12833)],
        [Some(12149), Some(11861), Some(11933), Some(12653), Some(12582), Some(13410), Some(12257)],
        [Some(2609), Some(2574), Some(2681), Some(2718), Some(2470), Some(2717), Some(2537)],
        [Some(2374), Some(2357), Some(2416), Some(2322), Some(2537), Some(2430), Some(2430)],
        [Some(2610), Some(2468), Some(2537), Some(2682), Some(2466), Some(2681), Some(2501)],
        [Some(2645), Some(2573), Some(2573), Some(2502), Some(2574), Some(2542), Some(2501)],
        [Some(2430), Some(2430), Some(2466), Some(2429), Some(2465), Some(2465), Some(2325)],
        [Some(2754), Some(2465), Some(2394), Some(2430), Some(2574), Some(2604), Some(2401)],
        [Some(14238), Some(4806), N, Some(4589), Some(5201), Some(5887), N],
        [Some(14022), Some(5130), N, Some(4265), Some(5002), Some(5331), N],
    ]
};

/// Hours as printed, rounded half-up to hundredths from whole seconds.
pub fn hours_str(seconds: u64) -> String {
    let h = (seconds * 100 + 1800) / 3600;
    format!("{}.{:02}", h / 100, h % 100)
}

pub fn utterance(id: &str, speaker: &str, emotion: Emotion, duration_s: f64) -> Utterance {
    Utterance {
        id: id.into(),
        audio_path: format!("{id}.wav"),
        text: "안녕하세요".into(),
        speaker: speaker.into(),
        emotion,
        duration_s: Some(duration_s),
        n_mel_frames: None,
        flags: vec![],
    }
}

/// Reference corpus with every non-empty cell split into `per_cell` utterances whose
/// durations add up to the cell's seconds.
pub fn reference_corpus(per_cell: u64) -> CorpusManifest {
    let mut utts = Vec::new();
    for (r, speaker) in REFERENCE_SPEAKERS.iter().enumerate() {
        for emotion in Emotion::ALL {
            let Some(total) = REFERENCE_SECONDS[r][usize::from(emotion.code())] else { continue };
            let base = total / per_cell;
            for k in 0..per_cell {
                let d = if k + 1 == per_cell { total - base * (per_cell - 1) } else { base };
                utts.push(utterance(&format!("{speaker}-{}-{k:03}", emotion.abbrev()), speaker, emotion, d as f64));
            }
        }
    }
    CorpusManifest::from_utterances(utts, 22_050).unwrap()
}

pub fn sine(freq: f64, amp: f64, len: usize, rate: u32) -> Vec<f64> {
    (0..len).map(|n| amp * (2.0 * PI * freq * n as f64 / f64::from(rate)).sin()).collect()
}

/// Full-scale 300 Hz + 1 kHz + 2.5 kHz.
pub fn multitone(len: usize, rate: u32) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / f64::from(rate);
            [300.0, 1000.0, 2500.0].iter().map(|f| (2.0 * PI * f * t).sin() / 3.0).sum()
        })
        .collect()
}

/// Upper 0.999 quantile of chi-square for the given degrees of freedom.
pub fn chi2_999(df: usize) -> f64 {
    match df {
        1 => 10.827566170662733,
        6 => 22.457744484825323,
        66 => 107.25787977487072,
        _ => panic!("no critical value tabulated for {df} degrees of freedom"),
    }
}

pub fn chi_square(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}
