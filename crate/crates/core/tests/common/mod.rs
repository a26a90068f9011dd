#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use xlperm::cfg::{CrossCfg, NodeRole};
use xlperm::frontend::MethodRef;
use xlperm::mapping::{CheckAtom, Condition};
use xlperm::pipeline::{read_corpus, SourceFiles};

pub const FULL_SET: &[&str] = &["camera-open", "radio", "media"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus_dir(name: &str) -> PathBuf {
    fixtures().join("corpora").join(name)
}

pub fn app_dir(name: &str) -> PathBuf {
    fixtures().join("apps").join(name)
}

pub fn corpus_files(names: &[&str]) -> SourceFiles {
    let mut out = Vec::new();
    for n in names {
        out.extend(read_corpus(&corpus_dir(n)).unwrap());
    }
    out.sort();
    out
}

/// Recursively copy `src` into `dst`, creating entries in forward or
/// reverse name order (changes directory-entry order on most filesystems).
pub fn copy_tree(src: &Path, dst: &Path, reverse: bool) {
    fs::create_dir_all(dst).unwrap();
    let mut entries: Vec<_> = fs::read_dir(src).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    if reverse {
        entries.reverse();
    }
    for p in entries {
        let to = dst.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &to, reverse);
        } else {
            fs::copy(&p, &to).unwrap();
        }
    }
}

/// The camera, radio and media corpora merged into one directory.
pub fn assemble_full_corpus(dst: &Path, reverse: bool) {
    let mut names = FULL_SET.to_vec();
    if reverse {
        names.reverse();
    }
    for n in names {
        copy_tree(&corpus_dir(n), dst, reverse);
    }
}

pub fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

// ---- truth tables ----------------------------------------------------

/// Reference evaluation, deliberately not `Condition::eval`.
pub fn holds(c: &Condition, on: &dyn Fn(&CheckAtom) -> bool) -> bool {
    match c {
        Condition::True => true,
        Condition::Unsatisfiable => false,
        Condition::Atom(a) => on(a),
        Condition::And(cs) => cs.iter().fold(true, |acc, x| acc & holds(x, on)),
        Condition::Or(cs) => cs.iter().fold(false, |acc, x| acc | holds(x, on)),
    }
}

pub fn truth_equal(a: &Condition, b: &Condition) -> bool {
    let atoms: Vec<CheckAtom> = a.atoms().union(&b.atoms()).cloned().collect();
    assert!(atoms.len() <= 16, "too many atoms for a truth table");
    (0u32..1 << atoms.len()).all(|bits| {
        let v = |x: &CheckAtom| bits >> atoms.iter().position(|y| y == x).unwrap() & 1 == 1;
        holds(a, &v) == holds(b, &v)
    })
}

// ---- brute-force path oracle ------------------------------------------

/// For every API candidate: `None` when no maximal simple path from its
/// entry meets a check, else OR over such paths of the AND of their checks.
/// Works straight off the edge list with plain recursion.
pub fn brute_force_conditions(g: &CrossCfg) -> BTreeMap<MethodRef, Option<Condition>> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for e in &g.edges {
        adj.entry(e.from).or_default().insert(e.to);
    }
    fn walk(
        g: &CrossCfg,
        adj: &BTreeMap<usize, BTreeSet<usize>>,
        path: &mut Vec<usize>,
        out: &mut Vec<Condition>,
    ) {
        let last = *path.last().unwrap();
        let next: Vec<usize> =
            adj.get(&last).into_iter().flatten().copied().filter(|n| !path.contains(n)).collect();
        if next.is_empty() {
            let checks: Vec<Condition> = path
                .iter()
                .filter(|&&n| g.nodes[n].role == NodeRole::Check)
                .map(|&n| g.nodes[n].condition.clone().unwrap())
                .collect();
            if !checks.is_empty() {
                out.push(Condition::And(checks));
            }
            return;
        }
        for n in next {
            path.push(n);
            walk(g, adj, path, out);
            path.pop();
        }
    }
    let mut res = BTreeMap::new();
    for api in &g.api_candidates {
        let start = g.nodes.iter().find(|n| &n.method == api && n.role == NodeRole::Entry).unwrap().id;
        let mut conds = Vec::new();
        walk(g, &adj, &mut vec![start], &mut conds);
        res.insert(api.clone(), (!conds.is_empty()).then(|| Condition::Or(conds)));
    }
    res
}

// ---- random corpora -----------------------------------------------------

pub const GEN_ATOMS: &[&str] = &["gen.perm.A", "gen.perm.B", "gen.perm.C"];

fn guard_text(rng: &mut StdRng) -> String {
    let perm = |rng: &mut StdRng| GEN_ATOMS[rng.gen_range(0..GEN_ATOMS.len())];
    let deny = match rng.gen_range(0..4) {
        0 => "getCallingPid() != getpid()".to_string(),
        1 => {
            let (a, b) = (perm(rng), perm(rng));
            format!("!checkCallingPermission(String16(\"{a}\")) && !checkCallingPermission(String16(\"{b}\"))")
        }
        2 => format!("getCallingPid() != getpid() && !checkCallingPermission(String16(\"{}\"))", perm(rng)),
        _ => format!("!checkCallingPermission(String16(\"{}\"))", perm(rng)),
    };
    format!("    if ({deny}) {{\n        return PERMISSION_DENIED;\n    }}\n")
}

/// A small framework: `android.gen.Api` with public methods that each reach
/// a JNI-registered native function, plus native helpers calling each other
/// (cycles included) with random permission / PID guards.
pub fn random_corpus(seed: u64) -> SourceFiles {
    let mut rng = StdRng::seed_from_u64(seed);
    let apis = rng.gen_range(1..=3);
    let helpers = rng.gen_range(1..=4);
    let mut java = String::from("package android.gen;\n\npublic class Api {\n");
    for i in 0..apis {
        java += &format!("    public void api{i}() {{\n        n{i}();\n    }}\n\n    private native void n{i}();\n\n");
    }
    java += "}\n";

    let mut native = String::from("namespace android {\n\nstatic const char* const kPath = \"android/gen/Api\";\n\n");
    for h in 0..helpers {
        native += &format!("static int helper{h}() {{\n");
        for _ in 0..rng.gen_range(0..=3) {
            if rng.gen_bool(0.5) {
                native += &guard_text(&mut rng);
            } else {
                native += &format!("    helper{}();\n", rng.gen_range(0..helpers));
            }
        }
        native += "    return OK;\n}\n\n";
    }
    for i in 0..apis {
        native += &format!("static void gen_n{i}(JNIEnv* env, jobject thiz) {{\n");
        for _ in 0..rng.gen_range(1..=2) {
            native += &format!("    helper{}();\n", rng.gen_range(0..helpers));
        }
        native += "}\n\n";
    }
    native += "static const JNINativeMethod gMethods[] = {\n";
    for i in 0..apis {
        native += &format!("    {{\"n{i}\", \"()V\", (void*)gen_n{i}}},\n");
    }
    native += "};\n\nint register_android_gen_Api(JNIEnv* env) {\n    return RegisterMethodsOrDie(env, kPath, gMethods, NELEM(gMethods));\n}\n\n}\n";
    vec![
        ("framework/java/android/gen/Api.mjava".to_string(), java),
        ("framework/native/gen/gen_api.mcpp".to_string(), native),
    ]
}
