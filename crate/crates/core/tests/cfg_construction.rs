mod common;

use common::*;
use xlperm::cfg::{build_cross_cfg, CfgBuilder, EdgeKind, Evidence, NodeRole, Resolver};
use xlperm::config::AnalysisConfig;
use xlperm::frontend::{build_symbol_table, parse_source, Language, MethodInfo, MethodRef, SourceUnit, SymbolTable};
use xlperm::linkage::{link, Linkage};
use xlperm::pipeline::parse_all;

struct World {
    symtab: SymbolTable,
    linkage: Linkage,
    config: AnalysisConfig,
}

impl World {
    fn from_files(files: &[(String, String)]) -> World {
        let units = parse_all(files).unwrap();
        Self::from_units(&units)
    }

    fn from_units(units: &[SourceUnit]) -> World {
        let symtab = build_symbol_table(units).unwrap();
        let linkage = link(units, &symtab).unwrap();
        World { symtab, linkage, config: AnalysisConfig::default() }
    }

    fn native(text: &str) -> World {
        Self::from_units(&[parse_source(text, "t.mcpp").unwrap()])
    }

    fn java(text: &str) -> World {
        Self::from_units(&[parse_source(text, "T.mjava").unwrap()])
    }

    fn builder(&self) -> CfgBuilder<'_> {
        CfgBuilder::new(&self.symtab, &self.linkage.registry, &self.config)
    }

    fn resolver(&self) -> Resolver<'_> {
        Resolver::new(&self.symtab, &self.linkage.registry, &self.config)
    }

    /// The bodied method `name` whose owner's last segment is `class`
    /// (`None` for a free function).
    fn method(&self, class: Option<&str>, name: &str) -> &MethodInfo {
        let hits: Vec<&MethodInfo> = self
            .symtab
            .methods
            .values()
            .filter(|m| m.key.name == name && m.decl.body.is_some())
            .filter(|m| match (class, m.key.owner.as_deref()) {
                (Some(c), Some(o)) => o.rsplit('.').next() == Some(c),
                (None, o) => o.is_none_or(|o| !self.symtab.types.contains_key(o)),
                _ => false,
            })
            .collect();
        assert_eq!(hits.len(), 1, "{class:?}.{name}");
        hits[0]
    }

    fn key(&self, class: Option<&str>, name: &str) -> MethodRef {
        self.method(class, name).key.clone()
    }
}

/// A one-API framework whose JNI function body is `native_body`, followed
/// by `extra` native definitions.
fn jni_world(native_body: &str, extra: &str) -> Vec<(String, String)> {
    let java = "package android.t;\n\npublic class Api {\n    public void go() {\n        n();\n    }\n\n    private native void n();\n}\n";
    let native = format!(
        "namespace android {{\n\n{extra}\nstatic void t_n(JNIEnv* env, jobject thiz) {{\n{native_body}}}\n\n\
         static const JNINativeMethod gMethods[] = {{\n    {{\"n\", \"()V\", (void*)t_n}},\n}};\n\n\
         int register_t(JNIEnv* env) {{\n    return RegisterMethodsOrDie(env, \"android/t/Api\", gMethods, NELEM(gMethods));\n}}\n\n}}\n"
    );
    vec![("java/android/t/Api.mjava".into(), java.into()), ("native/t.mcpp".into(), native)]
}

#[test]
fn camera_native_fragment_has_one_check() {
    let w = World::from_files(&corpus_files(&["camera-open"]));
    let entry = w.key(Some("CameraService"), "connectDevice");
    let mut b = w.builder();
    let frag = b.build_native_fragment(&entry);
    let names: Vec<&str> = frag.methods.iter().map(|m| m.name.as_str()).collect();
    assert!(names.contains(&"connectHelper") && names.contains(&"validateConnectLocked"), "{names:?}");
    assert!(b.contains_security_check(&frag));
    let checks: usize = frag
        .methods
        .iter()
        .map(|m| b.method_nodes(m).unwrap().stmts.iter().filter(|s| s.role == NodeRole::Check).count())
        .sum();
    assert_eq!(checks, 1);
}

#[test]
fn trivial_body_is_entry_plus_return() {
    let w = World::native("int f() {\n    return OK;\n}\n");
    let mut b = w.builder();
    let nodes = b.method_nodes(&w.key(None, "f")).unwrap();
    assert_eq!(nodes.stmts.len() + 1, 2);
    assert_eq!(nodes.stmts[0].role, NodeRole::Return);
    assert!(!nodes.has_check());
}

#[test]
fn recursive_method_calls_its_own_entry() {
    let extra = "static int f(int n) {\n    if (!checkCallingPermission(String16(\"t.perm.X\"))) {\n        return PERMISSION_DENIED;\n    }\n    return f(n);\n}\n";
    let files = jni_world("    f(1);\n", extra);
    let w = World::from_files(&files);
    let f = w.key(None, "f");
    let mut b = w.builder();
    let nodes = b.method_nodes(&f).unwrap().clone();
    assert_eq!(nodes.stmts.len() + 1, 4);
    assert!(nodes.stmts.iter().any(|s| s.calls.contains(&f)));

    let g = build_cross_cfg(&w.symtab, &w.linkage.registry, &w.linkage.pairs, &w.config);
    let f_nodes: Vec<_> = g.nodes.iter().filter(|n| n.method == f).collect();
    assert_eq!(f_nodes.len(), 4);
    let entry = g.entry_of(&f).unwrap();
    assert!(f_nodes.iter().any(|n| g.has_edge(n.id, entry, EdgeKind::Call)));
}

#[test]
fn check_three_calls_deep_is_found() {
    let src = "static void a() {\n    b();\n}\n\nstatic void b() {\n    c();\n}\n\nstatic void c() {\n    d();\n}\n\n\
               static int d() {\n    if (!checkCallingPermission(String16(\"t.perm.X\"))) {\n        return PERMISSION_DENIED;\n    }\n    return OK;\n}\n\n\
               static void e() {\n    c();\n}\n";
    let w = World::native(src);
    let mut b = w.builder();
    let frag = b.build_native_fragment(&w.key(None, "a"));
    assert_eq!(frag.methods.len(), 4);
    assert!(b.contains_security_check(&frag));

    let w = World::native(&src.replace("if (!checkCallingPermission(String16(\"t.perm.X\"))) {\n        return PERMISSION_DENIED;\n    }\n", ""));
    let mut b = w.builder();
    let frag = b.build_native_fragment(&w.key(None, "a"));
    assert!(!b.contains_security_check(&frag));
}

#[test]
fn diamond_callers_have_one_frontier() {
    let w = World::java(
        "package android.d;\n\npublic class D {\n\
         private void e() {\n        int x = 1;\n    }\n\
         private void a() {\n        e();\n    }\n\
         private void b() {\n        e();\n    }\n\
         public void c() {\n        a();\n        b();\n    }\n}\n",
    );
    let mut b = w.builder();
    let frag = b.build_java_fragment_backward(&w.key(Some("D"), "e"));
    assert_eq!(frag.methods.len(), 4);
    assert_eq!(frag.api_candidates.iter().map(|m| m.name.as_str()).collect::<Vec<_>>(), ["c"]);
}

#[test]
fn uncalled_public_entry_is_its_own_candidate() {
    let w = World::java("package android.d;\n\npublic class D {\n    public void solo() {\n        int x = 1;\n    }\n}\n");
    let solo = w.key(Some("D"), "solo");
    let mut b = w.builder();
    let frag = b.build_java_fragment_backward(&solo);
    assert_eq!(frag.methods.len(), 1);
    assert!(frag.api_candidates.contains(&solo));

    let w = World::java("package android.d;\n\npublic class D {\n    private void hidden() {\n        int x = 1;\n    }\n}\n");
    let mut b = w.builder();
    assert!(b.build_java_fragment_backward(&w.key(Some("D"), "hidden")).api_candidates.is_empty());
}

#[test]
fn strong_pointer_traced_through_service_lookup() {
    let w = World::from_files(&corpus_files(&["media"]));
    let ctor = w.method(Some("MediaRecorder"), "MediaRecorder");
    assert_eq!(ctor.language, Language::Cpp);
    let mut r = w.resolver();
    let b = r.resolve_strong_pointer(ctor, "service");
    assert!(b.bound_type.as_deref().is_some_and(|t| t.ends_with("MediaPlayerService")), "{b:?}");
    assert_eq!(b.evidence, Some(Evidence::ReturnType));
    let notifier = w.method(Some("IMediaDeathNotifier"), "getMediaPlayerService").key.owner.clone().unwrap();
    let cached = r.resolve_member_variable(&notifier, "sMediaPlayerService");
    assert!(cached.bound_type.as_deref().is_some_and(|t| t.ends_with("MediaPlayerService")), "{cached:?}");
    assert_eq!(cached.evidence, Some(Evidence::MemberInit));

    let class = ctor.key.owner.clone().unwrap();
    let m = r.resolve_member_variable(&class, "mMediaRecorder");
    assert!(m.bound_type.as_deref().is_some_and(|t| t.ends_with("MediaRecorderClient")), "{m:?}");
}

#[test]
fn constructor_binding_and_unknowns() {
    let w = World::native(
        "class Foo {\npublic:\n    void run();\n};\n\nvoid Foo::run() {\n    return;\n}\n\n\
         class Holder {\npublic:\n    Holder();\n    void reset();\n    void use();\nprivate:\n    sp<Foo> mFoo;\n    sp<Foo> mNever;\n};\n\n\
         Holder::Holder() {\n    mFoo = new Foo();\n}\n\n\
         void Holder::reset() {\n    mFoo = new Foo();\n}\n\n\
         void Holder::use() {\n    sp<Foo> local = new Foo();\n    local->run();\n}\n",
    );
    let mut r = w.resolver();
    let local = r.resolve_strong_pointer(w.method(Some("Holder"), "use"), "local");
    assert!(local.bound_type.as_deref().is_some_and(|t| t.ends_with("Foo")));
    assert_eq!(local.evidence, Some(Evidence::Constructor));

    let holder = w.method(Some("Holder"), "use").key.owner.clone().unwrap();
    let twice = r.resolve_member_variable(&holder, "mFoo");
    assert!(twice.bound_type.as_deref().is_some_and(|t| t.ends_with("Foo")));
    let never = r.resolve_member_variable(&holder, "mNever");
    assert_eq!(never.bound_type, None);
    assert!(r.take_diagnostics().iter().all(|d| d.code != "BINDING_CONFLICT"));
}

#[test]
fn two_implementers_are_reported_ambiguous() {
    let w = World::native(
        "class IThing {\npublic:\n    virtual int poke() = 0;\n};\n\n\
         class A : public IThing {\npublic:\n    int poke();\n};\n\n\
         class B : public IThing {\npublic:\n    int poke();\n};\n\n\
         int A::poke() {\n    return OK;\n}\n\nint B::poke() {\n    return OK;\n}\n\n\
         void user(sp<IThing> t) {\n    t->poke();\n}\n",
    );
    let iface = w.symtab.types.keys().find(|t| t.ends_with("IThing")).unwrap().clone();
    let mut r = w.resolver();
    let targets = r.resolve_virtual_call(&iface, "poke", 0);
    assert!(targets.is_empty());
    assert!(r.take_diagnostics().iter().any(|d| d.code == "AMBIGUOUS_DISPATCH"));
}

#[test]
fn xlang_edge_counts() {
    let w = World::from_files(&corpus_files(&["camera-open"]));
    let g = build_cross_cfg(&w.symtab, &w.linkage.registry, &w.linkage.pairs, &w.config);
    assert_eq!(g.xlang_edges().count(), 1);

    let w = World::from_files(&corpus_files(FULL_SET));
    let g = build_cross_cfg(&w.symtab, &w.linkage.registry, &w.linkage.pairs, &w.config);
    assert!(g.xlang_edges().count() >= 3);
    for e in g.xlang_edges() {
        assert_eq!(g.nodes[e.from].language, Language::Java);
        assert_eq!(g.nodes[e.to].language, Language::Cpp);
        assert_eq!(g.nodes[e.from].role, NodeRole::Entry);
        assert_eq!(g.nodes[e.to].role, NodeRole::Entry);
    }
}

#[test]
fn graph_is_deterministic() {
    let files = corpus_files(FULL_SET);
    let dump = |files: &[(String, String)]| {
        let w = World::from_files(files);
        let g = build_cross_cfg(&w.symtab, &w.linkage.registry, &w.linkage.pairs, &w.config);
        (g.nodes_text(), g.edges_text())
    };
    let a = dump(&files);
    assert_eq!(a, dump(&files));
    let mut rev = files.clone();
    rev.reverse();
    assert_eq!(a, dump(&rev));
}

#[test]
fn renaming_a_helper_keeps_graph_shape() {
    let extra = "static int helper() {\n    if (!checkCallingPermission(String16(\"t.perm.X\"))) {\n        return PERMISSION_DENIED;\n    }\n    return OK;\n}\n";
    let shape = |files: Vec<(String, String)>| {
        let w = World::from_files(&files);
        let g = build_cross_cfg(&w.symtab, &w.linkage.registry, &w.linkage.pairs, &w.config);
        let mut roles: Vec<_> = g.nodes.iter().map(|n| (n.role, n.language)).collect();
        roles.sort();
        let mut kinds: Vec<_> = g.edges.iter().map(|e| e.kind).collect();
        kinds.sort();
        (roles, kinds)
    };
    let a = shape(jni_world("    helper();\n", extra));
    let b = shape(jni_world("    zz_renamed();\n", &extra.replace("helper", "zz_renamed")));
    assert_eq!(a, b);
    assert!(a.0.iter().any(|(r, _)| *r == NodeRole::Check));
}
