use std::sync::Arc;

use proptest::prelude::*;

use twistlab::enumeration::{enumerate_tilings, sample_tilings};
use twistlab::generators::Generators;
use twistlab::grid::{parse_disk, Disk};
use twistlab::hamilton::find_hamilton;
use twistlab::io::{
    cycle_from_json, cycle_to_json, parse_ascii, render_ascii, render_svg, tiling_from_str, tiling_to_json,
    tiling_to_string, word_from_json, word_to_json,
};

fn rect(w: i32, h: i32) -> Arc<Disk> {
    Arc::new(Disk::rectangle(w, h).unwrap())
}

#[test]
fn ascii_round_trip_on_enumerated_corpora() {
    for (w, h, n) in [(2, 2, 2), (2, 3, 4), (3, 3, 2)] {
        for t in enumerate_tilings(rect(w, h), n, 1_000_000).unwrap() {
            for per_row in [1, 3, 8] {
                assert_eq!(parse_ascii(&render_ascii(&t, per_row)).unwrap(), t);
            }
        }
    }
}

#[test]
fn json_round_trip_on_an_irregular_disk() {
    let d = Arc::new(parse_disk("000..\n00011\n00011\n000..".replace(['0', '1'], "#").as_str()).unwrap());
    for t in enumerate_tilings(d.clone(), 2, 1_000_000).unwrap() {
        let s = tiling_to_string(&t);
        assert_eq!(tiling_from_str(&s, Some(d.clone())).unwrap(), t);
        assert_eq!(parse_ascii(&render_ascii(&t, 8)).unwrap(), t);
    }
}

#[test]
fn json_field_layout() {
    let t = enumerate_tilings(rect(2, 2), 2, 100).unwrap().remove(0);
    let v = serde_json::to_value(tiling_to_json(&t)).unwrap();
    assert_eq!(v["disk"], serde_json::json!([[0, 0], [0, 1], [1, 0], [1, 1]]));
    assert!(v["floors"][0]["down"].is_array() && v["floors"][0]["horiz"].is_array() && v["floors"][0]["up"].is_array());
    assert!(v.get("bottom").is_none());
}

#[test]
fn invalid_tiling_json_is_rejected() {
    let bad = r#"{"disk":[[0,0],[1,0]],"floors":[{"down":[],"horiz":[],"up":[]}]}"#;
    assert!(tiling_from_str(bad, None).is_err());
    let far = r#"{"disk":[[0,0],[1,0]],"floors":[{"down":[],"horiz":[[[0,0],[2,0]]],"up":[]}]}"#;
    assert!(tiling_from_str(far, None).is_err());
    assert!(tiling_from_str("not json", None).is_err());
}

#[test]
fn cycle_and_word_round_trip() {
    let d = rect(4, 4);
    let g = find_hamilton(&d, true, true).unwrap();
    let pts = cycle_to_json(&d, &g);
    assert_eq!(cycle_from_json(&d, &pts).unwrap(), g);
    let gs = Generators::new(d.clone(), g);
    for t in sample_tilings(d.clone(), 2, 20, 1).unwrap() {
        let w = gs.decompose(&t).unwrap();
        let js = serde_json::to_string(&word_to_json(&d, &w)).unwrap();
        let back = word_from_json(&d, &serde_json::from_str::<Vec<_>>(&js).unwrap()).unwrap();
        assert_eq!(back, w);
    }
}

#[test]
fn svg_is_well_formed() {
    let t = sample_tilings(rect(3, 4), 4, 1, 2).unwrap().remove(0);
    let s = render_svg(&t, 2);
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    assert_eq!(s.matches("<g ").count(), 4);
    assert_eq!(s.matches("<g ").count(), s.matches("</g>").count());
}

proptest! {
    #[test]
    fn sampled_tilings_round_trip(seed in any::<u64>(), w in 2i32..5, n in 1usize..4) {
        let d = rect(w, 4);
        let n = 2 * n;
        let t = sample_tilings(d.clone(), n, 1, seed).unwrap().remove(0);
        prop_assert_eq!(&parse_ascii(&render_ascii(&t, 3)).unwrap(), &t);
        prop_assert_eq!(&tiling_from_str(&tiling_to_string(&t), None).unwrap(), &t);
    }
}
