use draftmarks_core::config::Thresholds;
use draftmarks_core::ingest::replay_session;
use draftmarks_core::model::DocumentHistory;
use draftmarks_core::text::lcs_pairs;
use draftmarks_core::trace::{analyze, GenerationKind, SegmentOrigin};
use draftmarks_testkit::checks::{
    check_chains, check_discards, check_edits, check_feedback, check_kinds, check_segments,
};
use draftmarks_testkit::oracles;
use draftmarks_testkit::{random_log, GenLimits};
use proptest::prelude::*;

fn history(seed: u64) -> DocumentHistory {
    replay_session(&random_log(seed, GenLimits::default())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn segmentation_partitions_and_is_verbatim(seed in any::<u64>()) {
        let th = Thresholds::default();
        let h = history(seed);
        check_segments(&h, &analyze(&h, &th).unwrap(), &th);
    }

    #[test]
    fn chains_are_disjoint_ordered_and_justified(seed in any::<u64>()) {
        let th = Thresholds::default();
        let h = history(seed);
        check_chains(&h, &analyze(&h, &th).unwrap(), &th);
    }

    #[test]
    fn discards_are_sound(seed in any::<u64>()) {
        let th = Thresholds::default();
        let h = history(seed);
        check_discards(&h, &analyze(&h, &th).unwrap());
    }

    #[test]
    fn edit_traces_round_trip(seed in any::<u64>()) {
        let th = Thresholds::default();
        let h = history(seed);
        check_edits(&h, &analyze(&h, &th).unwrap());
    }

    #[test]
    fn classification_is_total(seed in any::<u64>()) {
        let th = Thresholds::default();
        let h = history(seed);
        let t = analyze(&h, &th).unwrap();
        check_kinds(&h, &t, &th);
        check_feedback(&h, &t, &th);
    }

    #[test]
    fn lcs_matches_memoized_oracle(
        a in proptest::collection::vec(0u8..5, 0..14),
        b in proptest::collection::vec(proptest::option::weighted(0.9, 0u8..5), 0..14),
    ) {
        let words = ["a", "b", "c", "d", "e"];
        let a: Vec<&str> = a.iter().map(|&i| words[i as usize]).collect();
        let b: Vec<Option<&str>> = b.iter().map(|o| o.map(|i| words[i as usize])).collect();
        let pairs = lcs_pairs(&a, &b);
        prop_assert_eq!(pairs.len(), oracles::lcs_len(&a, &b));
        for w in pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        for &(i, j) in &pairs {
            prop_assert_eq!(Some(a[i]), b[j]);
        }
    }

    #[test]
    fn text_measures_match_oracles(x in "[a-zA-Z ,.!é]{0,60}", y in "[a-zA-Z ,.!é]{0,60}") {
        prop_assert_eq!(draftmarks_core::text::words(&x), oracles::words(&x));
        let c = draftmarks_core::text::containment(&x, &y);
        prop_assert!((c - oracles::containment(&x, &y)).abs() < 1e-12);
        let d = draftmarks_core::text::normalized_word_distance(&x, &y);
        prop_assert!((d - oracles::normalized_distance(&x, &y)).abs() < 1e-12);
    }
}

#[test]
fn fuzzed_histories_produce_every_trace_kind() {
    let th = Thresholds::default();
    let (mut chains, mut discards, mut prompt_runs, mut tonal, mut edited, mut integrated) =
        (0, 0, 0, 0, 0, 0);
    for seed in 0..300 {
        let h = history(seed);
        let t = analyze(&h, &th).unwrap();
        chains += t.chains.len();
        discards += t.discards.len();
        prompt_runs += t
            .segments
            .values()
            .flatten()
            .filter(|s| s.origin == SegmentOrigin::FromPrompt)
            .count();
        tonal += t.kinds.values().filter(|&&k| k == GenerationKind::TonalShift).count();
        edited += t.edits.values().filter(|e| !e.is_empty()).count();
        integrated += t.feedback.iter().filter(|f| f.integrated).count();
    }
    for (name, n) in [
        ("chains", chains),
        ("discards", discards),
        ("prompt runs", prompt_runs),
        ("tonal shifts", tonal),
        ("edited nodes", edited),
        ("integrated feedback", integrated),
    ] {
        assert!(n > 0, "generator never produced {name}");
    }
}
