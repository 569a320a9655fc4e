mod common;

use proptest::prelude::*;
use ttsprep::dataset::{
    compute_stats, export_conditioning_spec, full_grid, validate_for_training, CorpusManifest, DatasetError, Emotion,
    Utterance, UtteranceFlag,
};

use common::*;

#[test]
fn fixture_renders_every_printed_value() {
    let mut grand = 0;
    let mut cols = [0u64; 7];
    for r in 0..11 {
        let mut row = 0;
        for c in 0..7 {
            assert_eq!(REFERENCE_SECONDS[r][c].is_some(), REFERENCE_PRINTED[r][c].is_some());
            if let (Some(s), Some(p)) = (REFERENCE_SECONDS[r][c], REFERENCE_PRINTED[r][c]) {
                assert_eq!(hours_str(s), p, "cell {r},{c}");
                row += s;
                cols[c] += s;
            }
        }
        assert_eq!(hours_str(row), REFERENCE_ROW_TOTALS[r]);
        grand += row;
    }
    for c in 0..7 {
        assert_eq!(hours_str(cols[c]), REFERENCE_COLUMN_TOTALS[c]);
    }
    assert_eq!(hours_str(grand), REFERENCE_GRAND_TOTAL);
}

#[test]
fn stats_reproduce_reference_table() {
    let corpus = reference_corpus(3);
    assert_eq!(corpus.pairs().len(), 67);
    let stats = compute_stats(&corpus);
    assert_eq!(stats.grand_total.to_string(), "111.70");
    assert_eq!(stats.rows.len(), 11);
    for (r, row) in stats.rows.iter().enumerate() {
        assert_eq!(row.speaker, REFERENCE_SPEAKERS[r]);
        assert_eq!(row.total.unwrap().to_string(), REFERENCE_ROW_TOTALS[r]);
        for c in 0..7 {
            assert_eq!(row.cells[c].map(|d| d.to_string()).as_deref(), REFERENCE_PRINTED[r][c], "{} col {c}", row.speaker);
        }
    }
    assert_eq!(stats.rows[0].total.unwrap().to_string(), "12.59");
    for c in 0..7 {
        assert_eq!(stats.column_totals[c].unwrap().to_string(), REFERENCE_COLUMN_TOTALS[c]);
    }

    let table = stats.render_table();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 13);
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    assert_eq!(header, ["Speaker", "all", "neu", "ang", "dis", "fea", "hap", "sad", "sur"]);
    assert!(lines[12].starts_with("all"));
    assert!(lines[12].contains("111.70"));
    let kss: Vec<&str> = lines[1].split_whitespace().collect();
    assert_eq!(kss, ["kss-f", "12.59", "12.59"]);
}

#[test]
fn stats_json_carries_hours() {
    let stats = compute_stats(&reference_corpus(1));
    let json = stats.to_json();
    assert_eq!(json["total_hours"], 111.70);
    assert_eq!(json["rows"][0]["all_hours"], 12.59);
    assert_eq!(json["utterances"], 67);
}

#[test]
fn training_readiness_on_table_shape() {
    let corpus = reference_corpus(1);
    let speakers: Vec<String> = REFERENCE_SPEAKERS.iter().map(|s| s.to_string()).collect();
    let report = validate_for_training(&corpus, &full_grid(&speakers), 16_000);
    assert_eq!(report.missing_pairs.len(), 11 * 7 - 67);
    assert_eq!(report.unknown_mel_frames.len(), 67);
    let spec = export_conditioning_spec(&corpus).unwrap();
    assert_eq!(spec.speakers.len(), 11);
    assert_eq!(spec.neutral().value.as_deref(), Some(&[0.0, 0.0, 0.0][..]));
}

#[test]
fn manifest_errors_point_at_lines() {
    let ok = r#"{"id":"a","audio":"a.wav","text":"가","speaker":"s","emotion":"neutral"}"#;
    let dup = format!("{ok}\n\n{ok}\n");
    assert!(matches!(
        CorpusManifest::parse_jsonl(&dup),
        Err(DatasetError::DuplicateId { line: 3, first_line: 1, .. })
    ));
    let bad = format!("{ok}\n{}\n", ok.replace("neutral", "bored").replace("\"a\"", "\"b\""));
    assert!(matches!(CorpusManifest::parse_jsonl(&bad), Err(DatasetError::UnknownEmotion { line: 2, .. })));
    let missing = r#"{"id":"a","audio":"a.wav","text":"가","speaker":"s"}"#;
    assert!(matches!(CorpusManifest::parse_jsonl(missing), Err(DatasetError::MissingField { line: 1, .. })));
}

fn arb_utterance() -> impl Strategy<Value = Utterance> {
    (
        "[a-z0-9_-]{1,12}",
        "[가-힣 ]{1,20}",
        prop::sample::select(REFERENCE_SPEAKERS.to_vec()),
        prop::sample::select(Emotion::ALL.to_vec()),
        prop::option::of(1e-3f64..1e4),
        prop::option::of(1u64..1_000_000),
        any::<bool>(),
    )
        .prop_map(|(id, text, speaker, emotion, duration_s, n_mel_frames, flagged)| Utterance {
            audio_path: format!("wav/{id}.wav"),
            id,
            text,
            speaker: speaker.to_string(),
            emotion,
            duration_s,
            n_mel_frames,
            flags: if flagged { vec![UtteranceFlag::NoSpeechDetected] } else { vec![] },
        })
}

proptest! {
    #[test]
    fn manifest_jsonl_roundtrip(utts in prop::collection::vec(arb_utterance(), 0..30)) {
        let mut seen = std::collections::HashSet::new();
        let utts: Vec<Utterance> = utts.into_iter().filter(|u| seen.insert(u.id.clone())).collect();
        let corpus = CorpusManifest::from_utterances(utts, 22_050).unwrap();
        let back = CorpusManifest::parse_jsonl(&corpus.to_jsonl()).unwrap();
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn totals_are_sums_of_cells(utts in prop::collection::vec(arb_utterance(), 1..40)) {
        let mut seen = std::collections::HashSet::new();
        let utts: Vec<Utterance> = utts.into_iter().filter(|u| seen.insert(u.id.clone())).collect();
        let stats = compute_stats(&CorpusManifest::from_utterances(utts, 22_050).unwrap());
        let rows: u64 = stats.rows.iter().filter_map(|r| r.total).map(|d| d.micros).sum();
        let cols: u64 = stats.column_totals.iter().flatten().map(|d| d.micros).sum();
        prop_assert_eq!(rows, stats.grand_total.micros);
        prop_assert_eq!(cols, stats.grand_total.micros);
    }
}
