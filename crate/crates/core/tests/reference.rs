use std::path::PathBuf;

use detbound::datamodel::{load_detections, load_ground_truth};
use detbound::evaluator::{evaluate, EvalConfig, Metrics};
use detbound::geometry::{decode_rle, encode_rle, iou_mask, rle_from_string, rle_to_box, rle_to_string, Bitmask};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/reference").join(name)
}

fn json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[test]
fn twelve_numbers_match_the_reference_tool() {
    let ds = load_ground_truth(fixture("gt.json")).unwrap();
    let dets = load_detections(fixture("dets.json"), &ds).unwrap();
    let m = evaluate(&ds, &dets, &EvalConfig::default()).unwrap().metrics();
    let want = json("expected.json");
    for (name, got) in Metrics::NAMES.iter().zip(m.to_array()) {
        let w = want["stats"][name].as_f64().unwrap();
        assert!((got - w).abs() <= 1e-6, "{name}: {got} vs reference {w}");
    }
}

#[test]
fn compressed_strings_from_the_reference_tool() {
    let fx = json("rle_strings.json");
    let masks = fx["masks"].as_array().unwrap();
    let mut decoded = Vec::new();
    for m in masks {
        let (h, w) = (m["size"][0].as_u64().unwrap() as u32, m["size"][1].as_u64().unwrap() as u32);
        let s = m["counts"].as_str().unwrap();
        let rle = rle_from_string(s, w, h).unwrap();
        assert_eq!(rle_to_string(&rle), s);
        let bits: Vec<bool> = m["bits_row_major"].as_str().unwrap().chars().map(|c| c == '1').collect();
        let mask = Bitmask::from_bits(w, h, bits).unwrap();
        assert_eq!(decode_rle(&rle), mask);
        assert_eq!(rle_to_string(&encode_rle(&mask)), s);
        assert_eq!(rle.area(), m["area"].as_u64().unwrap());
        let want: Vec<f64> = m["bbox"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        match rle_to_box(&rle) {
            Some(b) => assert_eq!(b.to_array().to_vec(), want),
            None => assert_eq!(want, vec![0.0; 4]),
        }
        decoded.push(rle);
    }
    for p in fx["iou"].as_array().unwrap() {
        let (a, b) = (p["a"].as_u64().unwrap() as usize, p["b"].as_u64().unwrap() as usize);
        let got = iou_mask(&decoded[a], &decoded[b]).unwrap();
        assert!((got - p["iou"].as_f64().unwrap()).abs() < 1e-12, "pair {a}, {b}");
    }
}
