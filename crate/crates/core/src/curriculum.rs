//! Three-stage curriculum: one speaker's neutral speech, then every speaker's
//! neutral speech, then the whole corpus.
//!
//! Optimizer, clipping and noise-scale values are carried as metadata for an
//! external trainer; nothing here computes gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CorpusManifest, Emotion, Utterance};
use crate::sampler::ClipSpec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurriculumError {
    #[error("iteration {iteration} is past the end of the plan ({total} iterations)")]
    PlanExhausted { iteration: u64, total: u64 },
    #[error("stage speaker {0:?} is not in the corpus")]
    UnknownStageSpeaker(String),
    #[error("stage {index} ({name}) matches no utterances")]
    EmptyStage { index: usize, name: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}

/// Which utterances a stage trains on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageFilter {
    /// Neutral utterances of one speaker.
    SingleSpeaker { speaker: String },
    /// Neutral utterances of every speaker.
    NeutralOnly,
    All,
}

impl StageFilter {
    pub fn matches(&self, utt: &Utterance) -> bool {
        match self {
            StageFilter::SingleSpeaker { speaker } => utt.speaker == *speaker && utt.emotion == Emotion::Neutral,
            StageFilter::NeutralOnly => utt.emotion == Emotion::Neutral,
            StageFilter::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub filter: StageFilter,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub algorithm: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty weight, when one is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
}

impl OptimizerSettings {
    fn adam(learning_rate: f64, weight_decay: Option<f64>) -> Self {
        Self { algorithm: "adam".into(), learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-6, weight_decay }
    }
}

/// Global batch split evenly across devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceBatch {
    pub size: u32,
    pub devices: u32,
}

impl DeviceBatch {
    pub fn per_device(&self) -> u32 {
        self.size / self.devices
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocoderPlan {
    pub optimizer: OptimizerSettings,
    pub batch: DeviceBatch,
    pub iterations: u64,
    pub grad_clip_norm: f64,
    /// Clip length; utterances shorter than it are excluded from training.
    pub clip: ClipSpec,
    pub weight_norm: bool,
    pub init_checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPlan {
    pub stages: Vec<Stage>,
    pub acoustic_optimizer: OptimizerSettings,
    pub grad_clip_norm: f64,
    pub acoustic_batch: DeviceBatch,
    pub vocoder: VocoderPlan,
    pub z_sigma_train: f64,
    pub z_sigma_infer: f64,
    /// An operator may extend a stage past its budget.
    pub manual_advance: bool,
    pub reset_optimizer_on_stage: bool,
}

impl Default for TrainingPlan {
    fn default() -> Self {
        default_plan()
    }
}

pub fn default_plan() -> TrainingPlan {
    TrainingPlan {
        stages: vec![
            Stage {
                name: "single-speaker-neutral".into(),
                filter: StageFilter::SingleSpeaker { speaker: "kss-f".into() },
                iterations: 20_000,
            },
            Stage { name: "multi-speaker-neutral".into(), filter: StageFilter::NeutralOnly, iterations: 30_000 },
            Stage { name: "multi-speaker-emotional".into(), filter: StageFilter::All, iterations: 65_000 },
        ],
        acoustic_optimizer: OptimizerSettings::adam(1e-3, Some(1e-6)),
        grad_clip_norm: 1.0,
        acoustic_batch: DeviceBatch { size: 64, devices: 4 },
        vocoder: VocoderPlan {
            optimizer: OptimizerSettings::adam(1e-4, None),
            batch: DeviceBatch { size: 24, devices: 3 },
            iterations: 400_000,
            grad_clip_norm: 1.0,
            clip: ClipSpec::default(),
            weight_norm: true,
            init_checkpoint: "waveglow_256channels_universal_v5.pt".into(),
        },
        z_sigma_train: 1.0,
        z_sigma_infer: 0.75,
        manual_advance: false,
        reset_optimizer_on_stage: false,
    }
}

/// Plan as written to disk, with the cumulative stage ends spelled out.
#[derive(Debug, Serialize)]
pub struct PlanDocument<'a> {
    #[serde(flatten)]
    pub plan: &'a TrainingPlan,
    pub stage_boundaries: Vec<u64>,
    pub total_iterations: u64,
}

impl TrainingPlan {
    pub fn validate(&self) -> Result<(), CurriculumError> {
        let bad = |m: String| Err(CurriculumError::InvalidPlan(m));
        if self.stages.is_empty() {
            return bad("no stages".into());
        }
        if let Some(s) = self.stages.iter().find(|s| s.iterations == 0) {
            return bad(format!("stage {} has zero iterations", s.name));
        }
        let positive = [
            ("acoustic learning rate", self.acoustic_optimizer.learning_rate),
            ("grad_clip_norm", self.grad_clip_norm),
            ("vocoder learning rate", self.vocoder.optimizer.learning_rate),
            ("vocoder grad_clip_norm", self.vocoder.grad_clip_norm),
            ("z_sigma_train", self.z_sigma_train),
            ("z_sigma_infer", self.z_sigma_infer),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return bad(format!("{name} must be positive, got {v}"));
        }
        for b in [self.acoustic_batch, self.vocoder.batch] {
            if b.size == 0 || b.devices == 0 || b.size % b.devices != 0 {
                return bad(format!("batch {} does not split over {} devices", b.size, b.devices));
            }
        }
        if self.vocoder.iterations == 0 || self.vocoder.clip.clip_frames == 0 {
            return bad("vocoder iterations and clip length must be positive".into());
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> u64 {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    /// Cumulative end iteration of each stage.
    pub fn boundaries(&self) -> Vec<u64> {
        self.stages
            .iter()
            .scan(0u64, |acc, s| {
                *acc += s.iterations;
                Some(*acc)
            })
            .collect()
    }

    pub fn document(&self) -> PlanDocument<'_> {
        PlanDocument { plan: self, stage_boundaries: self.boundaries(), total_iterations: self.total_iterations() }
    }
}

/// Index of the stage whose half-open iteration range contains `iteration`.
pub fn stage_at(plan: &TrainingPlan, iteration: u64) -> Result<usize, CurriculumError> {
    plan.boundaries()
        .iter()
        .position(|&end| iteration < end)
        .ok_or(CurriculumError::PlanExhausted { iteration, total: plan.total_iterations() })
}

/// One sub-manifest per stage, in stage order.
pub fn materialize(plan: &TrainingPlan, corpus: &CorpusManifest) -> Result<Vec<CorpusManifest>, CurriculumError> {
    plan.validate()?;
    for stage in &plan.stages {
        if let StageFilter::SingleSpeaker { speaker } = &stage.filter {
            if !corpus.utterances().iter().any(|u| u.speaker == *speaker) {
                return Err(CurriculumError::UnknownStageSpeaker(speaker.clone()));
            }
        }
    }
    plan.stages
        .iter()
        .enumerate()
        .map(|(index, stage)| {
            let sub = corpus.filter(|u| stage.filter.matches(u));
            if sub.is_empty() {
                Err(CurriculumError::EmptyStage { index, name: stage.name.clone() })
            } else {
                Ok(sub)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Utterance;

    #[test]
    fn default_budgets() {
        let plan = default_plan();
        assert!(plan.validate().is_ok());
        assert_eq!(plan.stages[0].iterations, 20_000);
        assert_eq!(plan.stages[1].iterations, 30_000);
        assert_eq!(plan.stages[2].iterations, 65_000);
        assert_eq!(plan.total_iterations(), 115_000);
        assert_eq!(plan.boundaries(), vec![20_000, 50_000, 115_000]);
        assert_eq!(plan.acoustic_batch.per_device(), 16);
        assert_eq!(plan.vocoder.batch.per_device(), 8);
        assert_eq!(plan.acoustic_optimizer.weight_decay, Some(1e-6));
        assert_eq!(plan.vocoder.clip.clip_frames, 16_000);
    }

    #[test]
    fn stage_lookup() {
        let plan = default_plan();
        assert_eq!(stage_at(&plan, 0), Ok(0));
        assert_eq!(stage_at(&plan, 19_999), Ok(0));
        assert_eq!(stage_at(&plan, 20_000), Ok(1));
        assert_eq!(stage_at(&plan, 49_999), Ok(1));
        assert_eq!(stage_at(&plan, 50_000), Ok(2));
        assert_eq!(stage_at(&plan, 114_999), Ok(2));
        assert_eq!(stage_at(&plan, 115_000), Err(CurriculumError::PlanExhausted { iteration: 115_000, total: 115_000 }));
    }

    #[test]
    fn invalid_plans() {
        let mut p = default_plan();
        p.stages.clear();
        assert!(p.validate().is_err());
        let mut p = default_plan();
        p.stages[1].iterations = 0;
        assert!(p.validate().is_err());
        let mut p = default_plan();
        p.z_sigma_infer = 0.0;
        assert!(p.validate().is_err());
        let mut p = default_plan();
        p.acoustic_batch.devices = 3;
        assert!(p.validate().is_err());
    }

    fn utt(id: &str, speaker: &str, emotion: Emotion) -> Utterance {
        Utterance {
            id: id.into(),
            audio_path: String::new(),
            text: "가".into(),
            speaker: speaker.into(),
            emotion,
            duration_s: Some(1.0),
            n_mel_frames: None,
            flags: vec![],
        }
    }

    #[test]
    fn materialize_errors() {
        let plan = default_plan();
        let no_kss = CorpusManifest::from_utterances(vec![utt("a", "ketts-30f", Emotion::Neutral)], 22_050).unwrap();
        assert_eq!(materialize(&plan, &no_kss), Err(CurriculumError::UnknownStageSpeaker("kss-f".into())));

        let kss_angry_only = CorpusManifest::from_utterances(vec![utt("a", "kss-f", Emotion::Anger)], 22_050).unwrap();
        assert!(matches!(materialize(&plan, &kss_angry_only), Err(CurriculumError::EmptyStage { index: 0, .. })));
    }

    #[test]
    fn document_carries_boundaries() {
        let plan = default_plan();
        let v = serde_json::to_value(plan.document()).unwrap();
        assert_eq!(v["stage_boundaries"], serde_json::json!([20_000, 50_000, 115_000]));
        assert_eq!(v["stages"][0]["filter"], serde_json::json!({"kind": "single_speaker", "speaker": "kss-f"}));
        let back: TrainingPlan = serde_json::from_value(v).unwrap();
        assert_eq!(back, plan);
    }
}
