use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;

use pss_cli::{parse, parse_term};
use pss_core::harness::{enum_terms, EnumSpec, Instance};
use pss_core::{ExtContext, Term};

fn pss(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pss"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("omega.pss", "let w = \\x <= Top . x x;\nlet Omega = w w;\nlet OmegaP = \\y <= w . y w;\n"),
        ("id.pss", "let id = \\x <= Top . x;\n"),
        ("empty-goal.pss", "-- nothing to check\nlet id = \\x <= Top . x;\n"),
        ("goal.pss", "context x <= Top; y <= x; stack\nsub y <= x\n"),
        ("bad.pss", "let id = \\x <= Top x;\n"),
        ("nowf.pss", "context x <= Top; stack\nwf x x\n"),
    ];
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn exit_codes() {
    let d = workspace();
    let p = d.path();
    let (code, out, _) = pss(p, &["wf", "omega.pss", "Omega", "--fuel", "200"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("unknown: "), "{out}");
    assert_eq!(pss(p, &["sub", "id.pss", "id", "Top"]).0, 0);
    assert_eq!(pss(p, &["sub", "id.pss", "Top", "id"]).0, 1);
    let (code, _, err) = pss(p, &["check", "empty-goal.pss"]);
    assert_eq!(code, 3);
    assert!(err.contains("no goal"), "{err}");
    assert_eq!(pss(p, &["check", "goal.pss"]).0, 0);
    assert_eq!(pss(p, &["check", "nowf.pss"]).0, 1);
    assert_eq!(pss(p, &["wf", "id.pss", "id"]).0, 0);
    assert_eq!(pss(p, &["wf", "id.pss", "nope"]).0, 3);
    assert_eq!(pss(p, &["wf", "missing.pss", "id"]).0, 3);
    assert_eq!(pss(p, &["suite", "no-such-suite"]).0, 3);
    assert_eq!(pss(p, &["frobnicate"]).0, 3);
    let (code, _, err) = pss(p, &["wf", "bad.pss", "id"]);
    assert_eq!(code, 3);
    assert!(err.contains("bad.pss:1:"), "{err}");
}

#[test]
fn normalize_and_superpath_text() {
    let d = workspace();
    let (code, out, _) = pss(d.path(), &["normalize", "id.pss", "id Top"]);
    assert_eq!((code, out.as_str()), (0, "yes\nTop\n"));
    let (code, out, _) = pss(d.path(), &["superpath", "id.pss", "id"]);
    assert_eq!(code, 0);
    assert_eq!(out, "yes\n0: \\x <= Top . x\n1: \\x <= Top . Top\n2: Top\n");
}

fn check_schema(v: &Value, code: i32) {
    let obj = v.as_object().expect("object");
    for key in obj.keys() {
        assert!(
            ["command", "verdict", "fuel_used", "witness", "superpath", "counterexample", "reason", "report"]
                .contains(&key.as_str()),
            "unexpected key {key}"
        );
    }
    assert!(obj["command"].is_string());
    assert!(obj["fuel_used"].is_u64());
    let want = match obj["verdict"].as_str().unwrap() {
        "yes" => 0,
        "no" => 1,
        "unknown" => 2,
        other => panic!("verdict {other}"),
    };
    assert_eq!(want, code);
    if want == 2 {
        assert!(obj["reason"].is_string());
    }
}

#[test]
fn json_schema_and_exit_agree() {
    let d = workspace();
    let runs: &[&[&str]] = &[
        &["wf", "omega.pss", "Omega", "--json", "--fuel", "1000"],
        &["superpath", "omega.pss", "OmegaP", "--json", "--fuel", "1000"],
        &["sub", "id.pss", "id", "Top", "--json"],
        &["sub", "id.pss", "Top", "id", "--json"],
        &["wf", "id.pss", "id", "--json"],
        &["normalize", "omega.pss", "Omega", "--json", "--fuel", "50"],
        &["check", "goal.pss", "--json", "--trace"],
        &["suite", "stair-golden", "--json"],
    ];
    for args in runs {
        let (code, out, _) = pss(d.path(), args);
        let v: Value = serde_json::from_str(out.trim()).unwrap_or_else(|e| panic!("{args:?}: {e}: {out}"));
        check_schema(&v, code);
    }
    let (_, out, _) = pss(d.path(), &["sub", "id.pss", "id", "Top", "--json"]);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["witness"]["left"][0], "\\x <= Top . x");
    assert_eq!(v["witness"]["meet"], "Top");
}

#[test]
fn wf_trace_prints_a_verified_derivation() {
    let d = workspace();
    let (code, out, _) = pss(d.path(), &["wf", "id.pss", "id Top", "--trace"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"rule\": \"W-App\""), "{out}");
}

#[test]
fn printed_terms_reparse() {
    for t in enum_terms(&EnumSpec::terms(6, &["x", "y"])) {
        let s = t.to_string();
        assert_eq!(parse_term(&s).unwrap(), t, "{s}");
    }
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![Just(Term::Top), prop::sample::select(vec!["x", "y", "f$1"]).prop_map(Term::var)];
    leaf.prop_recursive(6, 40, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["x", "y", "z"]), inner.clone(), inner.clone())
                .prop_map(|(x, a, b)| Term::abs(x, a, b)),
            (inner.clone(), inner).prop_map(|(f, v)| Term::app(f, v)),
        ]
    })
}

proptest! {
    #[test]
    fn round_trip_random(t in arb_term()) {
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }
}

#[test]
fn counterexample_text_replays() {
    let d = workspace();
    let ctx = ExtContext::empty().push_annot("x", Term::Top).push_arg(Term::var("x"));
    let t = parse_term("(\\a <= x . a) x").unwrap();
    let inst = Instance::new("commutation", ctx.clone(), vec![t.clone()]);
    let text = inst.to_pss("example");
    let f = parse(&text).unwrap();
    assert_eq!(f.property.as_deref(), Some("commutation"));
    assert_eq!(f.context, Some(ctx));
    assert_eq!(f.definitions[0].1, t);
    std::fs::write(d.path().join("cx.pss"), text).unwrap();
    assert_eq!(pss(d.path(), &["replay", "cx.pss"]).0, 0);

    std::fs::write(d.path().join("g.pss"), "property stair-golden;\n").unwrap();
    assert_eq!(pss(d.path(), &["replay", "g.pss"]).0, 0);
    std::fs::write(d.path().join("np.pss"), "let a = Top;\n").unwrap();
    assert_eq!(pss(d.path(), &["replay", "np.pss"]).0, 3);
}

#[test]
fn suite_seed_is_deterministic() {
    let d = workspace();
    let a = pss(d.path(), &["suite", "no-supertop", "--seed", "5", "--json"]);
    let b = pss(d.path(), &["suite", "no-supertop", "--seed", "5", "--json"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}
