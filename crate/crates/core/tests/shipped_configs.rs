//! Every experiment file shipped under `configs/` must parse cleanly, survive
//! a serialize/parse round trip, and collectively exercise all five modes.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use spikesim::harness::{parse_config, serialize_config, Mode};

fn shipped_configs() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut found = Vec::new();
    for entry in fs::read_dir(&dir).expect("configs/ directory exists") {
        let path = entry.expect("readable directory entry").path();
        if path.extension().map(|e| e == "cfg") != Some(true) {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(&path).expect("readable config file");
        found.push((name, text));
    }
    found.sort();
    found
}

#[test]
fn every_shipped_config_parses_cleanly() {
    let files = shipped_configs();
    assert!(files.len() >= 10, "expected a full catalog, found {}", files.len());
    for (name, text) in &files {
        match parse_config(text) {
            Ok(_) => {}
            Err(issues) => {
                let listing: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
                panic!("{name} does not parse:\n{}", listing.join("\n"));
            }
        }
    }
}

#[test]
fn shipped_configs_round_trip_through_the_serializer() {
    for (name, text) in shipped_configs() {
        let cfg = match parse_config(&text) {
            Ok(cfg) => cfg,
            Err(_) => continue,
        };
        let canonical = serialize_config(&cfg);
        let reparsed = parse_config(&canonical)
            .unwrap_or_else(|_| panic!("{name}: canonical form does not parse"));
        assert_eq!(cfg, reparsed, "{name}: round trip changed the config");
        assert_eq!(
            canonical,
            serialize_config(&reparsed),
            "{name}: serializer is not idempotent"
        );
    }
}

#[test]
fn the_catalog_covers_every_mode() {
    let mut seen = BTreeSet::new();
    for (_, text) in shipped_configs() {
        if let Ok(cfg) = parse_config(&text) {
            seen.insert(cfg.mode.name());
        }
    }
    for mode in [Mode::Analyze, Mode::Simulate, Mode::Compete, Mode::Eig, Mode::Sweep] {
        assert!(seen.contains(mode.name()), "no shipped config uses mode {}", mode.name());
    }
}
