use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use ttsprep::text_frontend::{
    compose_syllable, decompose_syllable, text_to_graphemes, SymbolTable, TextError, CODA_COUNT, NUCLEUS_COUNT,
    ONSET_COUNT, SYLLABLE_BASE, SYLLABLE_LAST,
};
use unicode_normalization::UnicodeNormalization;

#[test]
fn every_syllable_roundtrips() {
    let started = std::time::Instant::now();
    assert_eq!((ONSET_COUNT, NUCLEUS_COUNT, CODA_COUNT), (19, 21, 28));
    let mut count = 0;
    for cp in SYLLABLE_BASE..=SYLLABLE_LAST {
        let ch = char::from_u32(cp).unwrap();
        let j = decompose_syllable(ch).unwrap();
        assert!(j.onset < 19 && j.nucleus < 21 && j.coda < 28);
        assert_eq!(compose_syllable(j.onset, j.nucleus, j.coda).unwrap(), ch);
        count += 1;
    }
    assert_eq!(count, 11_172);
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn ids_spell_the_canonical_decomposition() {
    let table = SymbolTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let ch = char::from_u32(SYLLABLE_BASE + (rng.next_u64() % 11_172) as u32).unwrap();
        let seq = text_to_graphemes(&ch.to_string(), &table).unwrap();
        let spelled: String = seq.ids.iter().map(|&id| table.symbol(id).unwrap()).collect();
        let nfd: String = ch.to_string().nfd().collect();
        assert_eq!(spelled, nfd, "{ch}");
    }
}

#[test]
fn whitespace_and_rejections() {
    let table = SymbolTable::default();
    let a = text_to_graphemes("  안녕   하세요 ", &table).unwrap();
    let b = text_to_graphemes("안녕 하세요", &table).unwrap();
    assert_eq!(a.ids, b.ids);
    assert_eq!(text_to_graphemes(" \t ", &table), Err(TextError::EmptyText));
    assert_eq!(
        text_to_graphemes("가x", &table),
        Err(TextError::UnsupportedCharacter { ch: 'x', byte_offset: 3 })
    );
}

#[test]
fn symbol_table_json_roundtrip() {
    let table = SymbolTable::default();
    let json = serde_json::to_string(&table).unwrap();
    let back: SymbolTable = serde_json::from_str(&json).unwrap();
    assert_eq!(back, table);
}

fn hangul_or_extra() -> impl Strategy<Value = char> {
    prop_oneof![
        4 => (SYLLABLE_BASE..=SYLLABLE_LAST).prop_map(|c| char::from_u32(c).unwrap()),
        1 => prop::sample::select(vec![' ', '.', ',', '?', '!', '0', '7', '\u{201C}']),
    ]
}

proptest! {
    #[test]
    fn longer_text_never_yields_fewer_ids(
        base in prop::collection::vec(hangul_or_extra(), 1..40),
        tail in prop::collection::vec(hangul_or_extra(), 0..20),
    ) {
        let table = SymbolTable::default();
        let s: String = base.iter().collect();
        let t: String = base.iter().chain(&tail).collect();
        if let Ok(short) = text_to_graphemes(&s, &table) {
            let long = text_to_graphemes(&t, &table).unwrap();
            prop_assert!(long.len() >= short.len());
            prop_assert_eq!(&long.ids[..short.len()], &short.ids[..]);
        }
    }

    #[test]
    fn ids_are_in_table(chars in prop::collection::vec(hangul_or_extra(), 1..60)) {
        let table = SymbolTable::default();
        let s: String = chars.iter().collect();
        if let Ok(seq) = text_to_graphemes(&s, &table) {
            for id in seq.ids {
                prop_assert!((id as usize) < table.len() && id != 0);
                prop_assert!(id != table.coda_id(0));
            }
        }
    }
}
