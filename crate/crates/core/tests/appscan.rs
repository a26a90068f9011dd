mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use common::*;
use proptest::prelude::*;
use xlperm::appscan::{
    detect_component_hijacking, detect_over_privilege, load_permission_db, parse_manifest, reachable_apis, scan_app,
    AppBundle, Finding, FindingKind, PermissionDb, ProtectionLevel,
};
use xlperm::config::AnalysisConfig;
use xlperm::frontend::{parse_source, MethodRef};
use xlperm::mapping::{CheckAtom, Condition, ExtractOptions, Origin, ProtectionEntry, ProtectionMap};
use xlperm::pipeline::extract_sources;

const BUDGET: Duration = Duration::from_secs(10);

fn full_map() -> ProtectionMap {
    extract_sources(&corpus_files(FULL_SET), &AnalysisConfig::default(), &ExtractOptions::default()).unwrap().map
}

fn fixture_db() -> PermissionDb {
    let p = fixtures().join("permdb/fixture.json");
    load_permission_db(&std::fs::read_to_string(&p).unwrap(), "fixture.json").unwrap()
}

fn of_kind(f: &[Finding], k: FindingKind) -> Vec<&Finding> {
    f.iter().filter(|x| x.kind == k).collect()
}

fn api(s: &str) -> MethodRef {
    MethodRef::parse(s).unwrap()
}

#[test]
fn reached_internet_api_is_not_over_privilege() {
    let app = AppBundle::load(&app_dir("com.example.angelnumbers")).unwrap();
    let mut map = full_map();
    let db = fixture_db();
    let f = detect_over_privilege(&app, &map, &db, BUDGET).unwrap();
    assert!(f.iter().all(|x| x.subject != "android.permission.INTERNET"), "{f:?}");

    // Without the native-derived entry, the declared permission looks unused.
    map.remove(&api("android.media.MediaPlayer.setDataSource/1")).unwrap();
    let f = detect_over_privilege(&app, &map, &db, BUDGET).unwrap();
    let internet: Vec<_> = f.iter().filter(|x| x.subject == "android.permission.INTERNET").collect();
    assert_eq!(internet.len(), 1);
}

fn mms_with(edit: impl FnOnce(&mut xlperm::appscan::AppManifest)) -> AppBundle {
    let dir = app_dir("com.android.mms");
    let base = AppBundle::load(&dir).unwrap();
    let mut manifest = base.manifest.clone();
    edit(&mut manifest);
    AppBundle::from_parts(&dir, manifest, base.units).unwrap()
}

#[test]
fn exported_recording_service_is_hijackable() {
    let app = AppBundle::load(&app_dir("com.android.mms")).unwrap();
    let f = scan_app(&app, &full_map(), &fixture_db(), &AnalysisConfig::default()).unwrap();
    let hj = of_kind(&f, FindingKind::ComponentHijacking);
    assert_eq!(hj.len(), 1);
    assert_eq!(hj[0].subject, "com.android.mms.transaction.NoConfirmationSendService");
    assert_eq!(hj[0].detail, ["android.permission.CAMERA", "android.permission.RECORD_AUDIO"]);
    assert_eq!(
        hj[0].evidence,
        ["android.media.MediaRecorder.setAudioSource/1", "android.media.MediaRecorder.setVideoSource/1"]
    );
}

#[test]
fn unexported_or_signature_guarded_service_is_safe() {
    let (map, db) = (full_map(), fixture_db());
    let app = mms_with(|m| m.components[0].exported = false);
    assert!(detect_component_hijacking(&app, &map, &db, BUDGET).unwrap().is_empty());

    let app = mms_with(|m| {
        m.components[0].guard_permissions.insert("com.android.mms.permission.TRUSTED_SENDER".into());
    });
    assert!(detect_component_hijacking(&app, &map, &db, BUDGET).unwrap().is_empty());

    // Guarding with exactly the dangerous permissions also closes the hole.
    let app = mms_with(|m| {
        m.components[0].guard_permissions.insert("android.permission.CAMERA".into());
        m.components[0].guard_permissions.insert("android.permission.RECORD_AUDIO".into());
    });
    assert!(detect_component_hijacking(&app, &map, &db, BUDGET).unwrap().is_empty());
}

#[test]
fn unknown_permission_level_is_an_error() {
    let app = AppBundle::load(&app_dir("com.android.mms")).unwrap();
    let err = scan_app(&app, &full_map(), &PermissionDb::builtin(), &AnalysisConfig::default()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("SEND_RESPOND_VIA_MESSAGE"));
}

// ---- synthetic apps -------------------------------------------------------

fn synthetic_map(perms: &[&str]) -> ProtectionMap {
    let mut map = ProtectionMap::default();
    for (i, p) in perms.iter().enumerate() {
        map.entries.push(ProtectionEntry {
            api: api(&format!("android.x.Api.m{i}/0")),
            origin: Origin::Native,
            condition: Condition::or(vec![Condition::permission(p), Condition::atom(CheckAtom::PidSelf)]),
            approximate: false,
            path: None,
        });
    }
    map.sort();
    map
}

fn synthetic_app(code: &str, uses: &[&str], exported: bool, guards: &[&str]) -> AppBundle {
    let q = |xs: &[&str]| xs.iter().map(|x| format!("\"{x}\"")).collect::<Vec<_>>().join(",");
    let manifest = format!(
        r#"{{"package":"com.t","uses_permissions":[{}],"components":[{{"name":"com.t.Main","kind":"service","exported":{exported},"guard_permissions":[{}],"entry_methods":["com.t.Main.entry/0"]}}]}}"#,
        q(uses),
        q(guards)
    );
    let manifest = parse_manifest(&manifest, "manifest.json").unwrap();
    let src = format!("package com.t;\n\nimport android.x.Api;\n\npublic class Main {{\n{code}}}\n");
    let unit = parse_source(&src, "src/com/t/Main.mjava").unwrap();
    AppBundle::from_parts(Path::new("com.t"), manifest, vec![unit]).unwrap()
}

#[test]
fn five_method_chain_reaches_two_apis() {
    let map = synthetic_map(&["p.A", "p.B", "p.C"]);
    let code = "    private Api api = new Api();\n\n\
                protected void entry() {\n        one();\n    }\n\n\
                private void one() {\n        two();\n    }\n\n\
                private void two() {\n        api.m0();\n        three();\n    }\n\n\
                private void three() {\n        four();\n    }\n\n\
                private void four() {\n        api.m2();\n    }\n\n\
                private void unused() {\n        api.m1();\n    }\n";
    let app = synthetic_app(code, &[], true, &[]);
    let r = reachable_apis(&app, &[api("com.t.Main.entry/0")], &map, BUDGET);
    assert!(!r.truncated);
    assert_eq!(r.apis, BTreeSet::from([api("android.x.Api.m0/0"), api("android.x.Api.m2/0")]));
}

#[test]
fn empty_bodies_reach_nothing() {
    let map = synthetic_map(&["p.A"]);
    let app = synthetic_app("    protected void entry() {\n    }\n\n    public void other() {\n    }\n", &[], true, &[]);
    let r = reachable_apis(&app, &app.whole_app_start(), &map, BUDGET);
    assert!(r.apis.is_empty());
}

#[test]
fn zero_budget_suppresses_over_privilege() {
    let map = synthetic_map(&["p.A"]);
    let app = synthetic_app("    protected void entry() {\n        int x = 1;\n    }\n", &["p.A"], true, &[]);
    let db = PermissionDb { levels: [("p.A".to_string(), ProtectionLevel::Normal)].into() };
    assert_eq!(detect_over_privilege(&app, &map, &db, BUDGET).unwrap().len(), 1);
    assert!(detect_over_privilege(&app, &map, &db, Duration::ZERO).unwrap().is_empty());
}

// ---- detector oracle --------------------------------------------------------

const POOL: &[(&str, ProtectionLevel)] = &[
    ("p.Dang1", ProtectionLevel::Dangerous),
    ("p.Dang2", ProtectionLevel::Dangerous),
    ("p.Norm", ProtectionLevel::Normal),
    ("p.Sig", ProtectionLevel::Signature),
];

fn pool_db() -> PermissionDb {
    PermissionDb { levels: POOL.iter().map(|(p, l)| (p.to_string(), *l)).collect() }
}

#[derive(Debug, Clone)]
struct Case {
    /// Permission (index into POOL) protecting each API.
    api_perm: Vec<usize>,
    called: BTreeSet<usize>,
    uses: BTreeSet<usize>,
    guards: BTreeSet<usize>,
    exported: bool,
}

fn case_strategy() -> impl Strategy<Value = Case> {
    prop::collection::vec(0..POOL.len(), 1..5).prop_flat_map(|api_perm| {
        let n = api_perm.len();
        (
            Just(api_perm),
            prop::collection::btree_set(0..n, 0..=n),
            prop::collection::btree_set(0..POOL.len(), 0..=POOL.len()),
            prop::collection::btree_set(0..POOL.len(), 0..=2),
            any::<bool>(),
        )
            .prop_map(|(api_perm, called, uses, guards, exported)| Case { api_perm, called, uses, guards, exported })
    })
}

fn run_case(c: &Case) -> Vec<Finding> {
    let perms: Vec<&str> = c.api_perm.iter().map(|&i| POOL[i].0).collect();
    let map = synthetic_map(&perms);
    let calls: String = c.called.iter().map(|i| format!("        api.m{i}();\n")).collect();
    let code = format!("    private Api api = new Api();\n\n    protected void entry() {{\n{calls}        int x = 1;\n    }}\n");
    let name = |s: &BTreeSet<usize>| s.iter().map(|&i| POOL[i].0).collect::<Vec<_>>();
    let app = synthetic_app(&code, &name(&c.uses), c.exported, &name(&c.guards));
    scan_app(&app, &map, &pool_db(), &AnalysisConfig::default()).unwrap()
}

/// Set-level restatement of both detectors.
fn expected(c: &Case) -> (BTreeSet<String>, Option<Vec<String>>) {
    let required: BTreeSet<usize> = c.called.iter().map(|&i| c.api_perm[i]).collect();
    let over = c.uses.difference(&required).map(|&i| POOL[i].0.to_string()).collect();
    let dangerous: BTreeSet<usize> =
        required.iter().copied().filter(|&i| POOL[i].1 == ProtectionLevel::Dangerous).collect();
    let sig_guard = c.guards.iter().any(|&i| POOL[i].1 == ProtectionLevel::Signature);
    let exposed: Vec<String> = dangerous.difference(&c.guards).map(|&i| POOL[i].0.to_string()).collect();
    let hijack = (c.exported && !sig_guard && !exposed.is_empty()).then_some(exposed);
    (over, hijack)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn detectors_match_set_oracle(c in case_strategy()) {
        let f = run_case(&c);
        let (over, hijack) = expected(&c);
        let got_over: BTreeSet<String> =
            of_kind(&f, FindingKind::OverPrivilege).iter().map(|x| x.subject.clone()).collect();
        prop_assert_eq!(got_over, over);
        let hj = of_kind(&f, FindingKind::ComponentHijacking);
        prop_assert_eq!(hj.first().map(|x| x.detail.clone()), hijack);
        prop_assert!(hj.len() <= 1);
    }

    #[test]
    fn calling_more_apis_never_adds_over_privilege(c in case_strategy(), extra in 0usize..5) {
        let before = of_kind(&run_case(&c), FindingKind::OverPrivilege).len();
        let mut more = c.clone();
        more.called.insert(extra % c.api_perm.len());
        prop_assert!(of_kind(&run_case(&more), FindingKind::OverPrivilege).len() <= before);
    }

    #[test]
    fn adding_a_guard_never_adds_hijacking(c in case_strategy(), g in 0..POOL.len()) {
        let before = of_kind(&run_case(&c), FindingKind::ComponentHijacking).len();
        let mut more = c.clone();
        more.guards.insert(g);
        prop_assert!(of_kind(&run_case(&more), FindingKind::ComponentHijacking).len() <= before);
    }
}
