mod common;

use common::*;
use xlperm::config::AnalysisConfig;
use xlperm::frontend::MethodRef;
use xlperm::mapping::{CheckAtom, Condition, ExtractOptions, Origin, ProtectionMap};
use xlperm::pipeline::{extract_corpus, extract_sources, Extraction};

fn extract(files: &[(String, String)]) -> Extraction {
    extract_sources(files, &AnalysisConfig::default(), &ExtractOptions::default()).unwrap()
}

fn api(s: &str) -> MethodRef {
    MethodRef::parse(s).unwrap()
}

fn perm(p: &str) -> Condition {
    Condition::permission(&format!("android.permission.{p}"))
}

#[test]
fn open_camera_is_camera_or_self_pid() {
    let ex = extract_corpus(&corpus_dir("camera-open"), &AnalysisConfig::default(), &ExtractOptions::default()).unwrap();
    assert_eq!(ex.map.entries.len(), 1);
    let e = &ex.map.entries[0];
    assert_eq!(e.api, api("android.hardware.camera2.CameraManager.openCamera/3"));
    assert_eq!(e.condition, Condition::or(vec![perm("CAMERA"), Condition::atom(CheckAtom::PidSelf)]));
    assert_eq!(e.origin, Origin::Native);
    assert!(!e.approximate);
}

#[test]
fn radio_and_media_entries() {
    let ex = extract(&corpus_files(&["radio", "media"]));
    let want = [
        ("android.hardware.radio.RadioManager.openTuner/5", "ACCESS_FM_RADIO"),
        ("android.media.MediaPlayer.setDataSource/1", "INTERNET"),
        ("android.media.MediaRecorder.setAudioSource/1", "RECORD_AUDIO"),
        ("android.media.MediaRecorder.setVideoSource/1", "CAMERA"),
    ];
    let got: Vec<(String, Condition)> = ex.map.entries.iter().map(|e| (e.api.to_string(), e.condition.clone())).collect();
    let want: Vec<(String, Condition)> = want.iter().map(|(a, p)| (a.to_string(), perm(p))).collect();
    assert_eq!(got, want);
}

#[test]
fn check_free_service_gives_no_entry() {
    let ex = extract(&corpus_files(&["camera-info"]));
    assert_eq!(ex.linkage.pairs.len(), 1);
    assert!(ex.map.entries.is_empty());
    assert!(ex.cfg.is_empty());
}

#[test]
fn full_set_is_union_of_parts() {
    let full = extract(&corpus_files(FULL_SET));
    let mut parts = ProtectionMap::default();
    for c in FULL_SET {
        parts.entries.extend(extract(&corpus_files(&[c])).map.entries);
    }
    parts.sort();
    assert_eq!(full.map.entries, parts.entries);
}

#[test]
fn every_entry_is_a_nontrivial_api_in_the_graph() {
    let config = AnalysisConfig::default();
    for seed in 0..30 {
        let ex = extract(&random_corpus(seed));
        for e in &ex.map.entries {
            assert!(config.is_api_package(e.api.owner.as_deref().unwrap()));
            assert!(ex.cfg.entry_of(&e.api).is_some());
            assert!(ex.cfg.api_candidates.contains(&e.api));
            assert_ne!(e.condition, Condition::True);
            assert_eq!(e.condition, e.condition.normalize());
        }
    }
}

#[test]
fn api_package_filter_applies() {
    let config = AnalysisConfig { api_package_prefixes: vec!["com.vendor.".into()], ..Default::default() };
    let ex = extract_sources(&corpus_files(FULL_SET), &config, &ExtractOptions::default()).unwrap();
    assert!(ex.map.entries.is_empty());
    assert!(!ex.cfg.is_empty());
}

#[test]
fn random_corpora_match_brute_force_paths() {
    let mut nonempty = 0;
    for seed in 0..60 {
        let ex = extract(&random_corpus(seed));
        if ex.cfg.nodes.len() > 50 {
            continue;
        }
        let oracle = brute_force_conditions(&ex.cfg);
        for (api, want) in &oracle {
            match (want, ex.map.get(api)) {
                (None, None) => {}
                (Some(w), Some(got)) => {
                    nonempty += 1;
                    assert!(truth_equal(w, &got.condition), "seed {seed} {api}: {w:?} vs {:?}", got.condition);
                }
                (w, got) => panic!("seed {seed} {api}: oracle {w:?}, map {got:?}"),
            }
        }
        assert_eq!(ex.map.entries.len(), oracle.values().filter(|c| c.is_some()).count());
    }
    assert!(nonempty >= 20, "generator produced too few guarded APIs ({nonempty})");
}

#[test]
fn per_path_entries_or_to_the_summary() {
    let per = ExtractOptions { per_path: true };
    for seed in 0..30 {
        let files = random_corpus(seed);
        let summary = extract(&files).map;
        let paths = extract_sources(&files, &AnalysisConfig::default(), &per).unwrap().map;
        for e in &summary.entries {
            let mine: Vec<_> = paths.entries.iter().filter(|p| p.api == e.api).collect();
            assert!(!mine.is_empty());
            assert!(mine.iter().all(|p| p.path.as_ref().is_some_and(|n| !n.is_empty())));
            let joined = Condition::or(mine.iter().map(|p| p.condition.clone()).collect());
            assert!(truth_equal(&joined, &e.condition), "seed {seed} {}", e.api);
        }
        assert!(paths.entries.iter().all(|p| summary.get(&p.api).is_some()));
    }
}

#[test]
fn path_budget_falls_back_to_weaker_condition() {
    let tight = AnalysisConfig { path_budget: 1, ..Default::default() };
    let mut approximated = 0;
    for seed in 0..40 {
        let files = random_corpus(seed);
        let exact = extract(&files).map;
        let approx = extract_sources(&files, &tight, &ExtractOptions::default()).unwrap();
        for e in &approx.map.entries {
            if !e.approximate {
                continue;
            }
            approximated += 1;
            assert!(approx.diagnostics.iter().any(|d| d.to_string().contains("PATH_EXPLOSION")));
            // Each exact path conjunction implies the OR of reachable checks.
            if let Some(x) = exact.get(&e.api) {
                let atoms: Vec<CheckAtom> = x.condition.atoms().union(&e.condition.atoms()).cloned().collect();
                for bits in 0u32..1 << atoms.len() {
                    let v = |a: &CheckAtom| bits >> atoms.iter().position(|b| b == a).unwrap() & 1 == 1;
                    assert!(!x.condition.eval(&v) || e.condition.eval(&v), "seed {seed} {}", e.api);
                }
            }
        }
    }
    assert!(approximated > 0);
}

#[test]
fn extraction_is_order_independent() {
    for seed in 0..10 {
        let mut files = random_corpus(seed);
        files.extend(corpus_files(&["radio"]));
        let a = extract(&files).map.to_json_bytes();
        files.reverse();
        let b = extract(&files).map.to_json_bytes();
        assert_eq!(a, b);
    }
}
