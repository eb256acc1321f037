use std::io::Cursor;

use household_sid::config::RunConfig;
use household_sid::dataset::{load_dataset, read_dataset, save_dataset, write_dataset, HouseholdDataset};
use household_sid::simulation::simulate;

fn small() -> RunConfig {
    RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/small.json")).unwrap()
}

fn dev() -> Vec<HouseholdDataset> {
    simulate(&small().simulation).unwrap().dev
}

fn err(text: &str) -> String {
    read_dataset(Cursor::new(text)).unwrap_err().to_string()
}

#[test]
fn save_then_load_is_lossless() {
    let dev = dev();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dev.jsonl");
    save_dataset(&path, &dev).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), dev);

    // Writing what was read back reproduces the file byte for byte.
    let first = std::fs::read(&path).unwrap();
    let mut second = Vec::new();
    write_dataset(&mut second, &load_dataset(&path).unwrap()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn awkward_floats_survive_the_round_trip() {
    let mut dev = dev();
    let awkward = [0.1 + 0.2, 1e-300, -2.2250738585072014e-308, 1.0 / 3.0, f64::MAX];
    let utt = &mut dev[0].utterances[0];
    let dense = utt.views.values_mut().find(|v| v.len() >= awkward.len()).unwrap();
    dense[..awkward.len()].copy_from_slice(&awkward);
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev).unwrap();
    assert_eq!(read_dataset(Cursor::new(buf)).unwrap(), dev);
}

#[test]
fn households_keep_first_seen_order() {
    let dev = dev();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev).unwrap();
    let ids: Vec<_> = read_dataset(Cursor::new(buf)).unwrap().into_iter().map(|h| h.id).collect();
    let expected: Vec<_> = dev.iter().map(|h| h.id.clone()).collect();
    assert_eq!(ids, expected);
}

#[test]
fn empty_input_is_rejected() {
    assert!(err("").contains("dataset contains no households"));
    assert!(err("\n\n").contains("dataset contains no households"));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dev = dev();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev[..1]).unwrap();
    let mut text = String::from_utf8(buf).unwrap();
    text.push_str("{not json\n");
    let lines = text.lines().count();
    assert!(err(&text).contains(&format!("line {lines}: malformed record")), "{}", err(&text));
}

#[test]
fn dimension_mismatch_names_the_utterance() {
    let dev = dev();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev[..1]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[3]).unwrap();
    let utt_id = rec["utt_id"].as_str().unwrap().to_string();
    let view = rec["views"].as_object_mut().unwrap().values_mut().find(|v| v.is_array()).unwrap();
    view.as_array_mut().unwrap().pop();
    lines[3] = rec.to_string();
    let msg = err(&lines.join("\n"));
    assert!(msg.contains(&utt_id) && msg.contains("expected"), "{msg}");
}

#[test]
fn duplicate_utterance_ids_are_rejected() {
    let dev = dev();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev[..1]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let first = text.lines().next().unwrap();
    let msg = err(&format!("{text}{first}\n"));
    assert!(msg.contains("duplicate utt_id"), "{msg}");
}

#[test]
fn speaker_without_enrollment_is_rejected() {
    let dev = dev();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &dev[..1]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let target = dev[0].classes()[0].clone();
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            !(v["role"] == "enrolled" && v["speaker"] == target.as_str())
        })
        .collect();
    let msg = err(&kept.join("\n"));
    assert!(msg.contains("zero enrolled utterances") || msg.contains("enrolled speakers"), "{msg}");
}

#[test]
fn missing_file_is_an_io_error() {
    let e = load_dataset("/nonexistent/dir/dev.jsonl").unwrap_err();
    assert_eq!(e.exit_code(), 4);
}
