use diaclid_core::langid::{
    build_shallow, gen_training_vectors, predict, train_langid, ChunkConfig, LangidTrainConfig,
    PresenceVector,
};
use diaclid_core::nn::Module;
use diaclid_core::table::canonical_index;
use diaclid_core::Language;
use proptest::prelude::*;

const GERMAN: &str = "Die große Straße führt über die Brücke zum Schloss. Müde Bäcker öffnen früh \
    ihre Läden, und die Kinder gehen fröhlich zur Schule. Im Süden schmückt man die Häuser mit \
    Blumen, während im Norden oft kühler Wind weht. Der Bürgermeister grüßt alle Bürger freundlich.";

const SPANISH: &str = "El niño come una manzana en la mañana. Mañana iremos al mercado con la \
    señora. El año pasado vimos una montaña muy alta en España, y la piña era dulce.";

fn small_config(n: usize) -> ChunkConfig {
    ChunkConfig {
        samples_per_language: n,
        ..ChunkConfig::default()
    }
}

#[test]
fn german_vectors_stay_in_the_german_row() {
    let data = gen_training_vectors(&[(Language::German, GERMAN)], &small_config(200), 3).unwrap();
    assert_eq!(data.train.len() + data.validation.len(), 200);
    assert_eq!(data.train.len(), 180);
    for v in data.train.iter().chain(&data.validation) {
        assert_eq!(v.language, Language::German);
        assert!(!v.vector.is_empty());
        for i in v.vector.indices() {
            assert!(Language::German.diacritics().iter().any(|&c| canonical_index(c) == Some(i)));
        }
    }
}

#[test]
fn vector_generation_is_deterministic() {
    let texts = [(Language::German, GERMAN), (Language::Spanish, SPANISH)];
    let a = gen_training_vectors(&texts, &small_config(50), 9).unwrap();
    assert_eq!(a, gen_training_vectors(&texts, &small_config(50), 9).unwrap());
    assert_ne!(a, gen_training_vectors(&texts, &small_config(50), 10).unwrap());
}

#[test]
fn text_without_diacritics_is_insufficient() {
    let r = gen_training_vectors(&[(Language::German, "nur einfache worte hier")], &small_config(5), 1);
    assert!(r.is_err());
}

#[test]
fn one_language_training_predicts_that_language() {
    let data = gen_training_vectors(&[(Language::Spanish, SPANISH)], &small_config(100), 1).unwrap();
    let config = LangidTrainConfig {
        epochs: 5,
        ..LangidTrainConfig::default()
    };
    let (net, log) = train_langid(&data, &config, 1).unwrap();
    assert_eq!(log.len(), 5);
    for v in &data.validation {
        assert_eq!(predict(&net, &v.vector).unwrap().language, Some(Language::Spanish));
    }
}

#[test]
fn training_is_deterministic() {
    let texts = [(Language::German, GERMAN), (Language::Spanish, SPANISH)];
    let data = gen_training_vectors(&texts, &small_config(60), 2).unwrap();
    let config = LangidTrainConfig {
        epochs: 3,
        ..LangidTrainConfig::default()
    };
    let (a, la) = train_langid(&data, &config, 4).unwrap();
    let (b, lb) = train_langid(&data, &config, 4).unwrap();
    assert_eq!(la, lb);
    let mut wa = Vec::new();
    a.visit_params("", &mut |_, p| wa.extend_from_slice(p.value.data()));
    let mut wb = Vec::new();
    b.visit_params("", &mut |_, p| wb.extend_from_slice(p.value.data()));
    assert_eq!(wa, wb);
}

#[test]
fn zero_vector_is_indeterminate() {
    let p = predict(&build_shallow(0), &PresenceVector::EMPTY).unwrap();
    assert_eq!(p.language, None);
    assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn saturated_logits_stay_finite() {
    let mut net = build_shallow(0);
    net.visit_params_mut("", &mut |_, p| p.value.data_mut().iter_mut().for_each(|w| *w *= 1e3));
    let all = PresenceVector::from_indices(0..85);
    let p = predict(&net, &all).unwrap();
    assert!(p.probabilities.iter().all(|x| x.is_finite()));
    assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

fn diacritic_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['a', 'ß', 'é', 'ñ', ' ', 'ö', 'ž', 'x', 'Å', 'ű']), 0..30)
        .prop_map(|v| v.into_iter().collect())
}

proptest! {
    #[test]
    fn presence_is_a_union_homomorphism(a in diacritic_text(), b in diacritic_text()) {
        let joined = format!("{a}{b}");
        prop_assert_eq!(
            PresenceVector::from_text(&joined),
            PresenceVector::from_text(&a) | PresenceVector::from_text(&b)
        );
    }

    #[test]
    fn distribution_sums_to_one(bits in prop::collection::vec(0usize..85, 1..10), seed in 0u64..50) {
        let p = predict(&build_shallow(seed), &PresenceVector::from_indices(bits)).unwrap();
        prop_assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.language.is_some());
        prop_assert_eq!(p.language.unwrap(), p.argmax());
    }

    #[test]
    fn duplicate_evidence_is_idempotent(bits in prop::collection::vec(0usize..85, 1..10)) {
        let once = PresenceVector::from_indices(bits.clone());
        let twice = PresenceVector::from_indices(bits.iter().chain(&bits).copied());
        prop_assert_eq!(once, twice);
    }
}
