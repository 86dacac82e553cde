use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn msheaf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msheaf"))
}

fn run(args: &[&str]) -> Output {
    msheaf().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("msheaf-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn coxeter_a3_has_24_vertices() {
    let out = run(&["graph", "coxeter", "--type", "A3", "--parabolic", ""]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["vertices"].as_array().unwrap().len(), 24);
}

#[test]
fn builtin_subgeneric() {
    let out = run(&["graph", "builtin", "--name", "subgeneric"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 2);
    assert_eq!(v["edges"].as_array().unwrap().len(), 1);
    assert_eq!(run(&["graph", "builtin", "--name", "nope"]).status.code(), Some(2));
}

#[test]
fn tilt_twice_is_identity() {
    let dir = scratch("tilt");
    let g = dir.join("g.json");
    let t = dir.join("t.json");
    run(&["graph", "coxeter", "--type", "A2", "--out", path(&g)]);
    run(&["graph", "tilt", "--graph", path(&g), "--out", path(&t)]);
    let back = run(&["graph", "tilt", "--graph", path(&t)]);
    assert_eq!(back.stdout, fs::read(&g).unwrap());
}

#[test]
fn reduce_keeps_proportional_edges() {
    let dir = scratch("reduce");
    let g = dir.join("g.json");
    run(&["graph", "coxeter", "--type", "A2", "--out", path(&g)]);
    let out = run(&["graph", "reduce", "--graph", path(&g), "--gamma", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["edges"].as_array().unwrap().len() < 9);
    assert_eq!(
        run(&["graph", "reduce", "--graph", path(&g), "--gamma", "0,0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn zalg_a2_generator_degrees() {
    let dir = scratch("zalg");
    let g = dir.join("g.json");
    run(&["graph", "coxeter", "--type", "A2", "--out", path(&g)]);
    let out = run(&["zalg", "--graph", path(&g), "--max-degree", "14"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["cap"], 14);
    assert_eq!(v["result"]["generator_degrees"], serde_json::json!([0, 2, 2, 4, 4, 6]));
}

#[test]
fn flags_on_subgeneric_structure_algebra() {
    let dir = scratch("flags");
    let g = dir.join("g.json");
    let m = dir.join("m.json");
    run(&["graph", "builtin", "--name", "subgeneric", "--out", path(&g)]);
    run(&["zalg", "--graph", path(&g), "--max-degree", "8", "--out", path(&m)]);
    let out = run(&["flags", "--module", path(&m), "--max-degree", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(
        v["result"]["verma_flag"]["degrees"],
        serde_json::json!({"x": [0], "y": [2]})
    );
    assert_eq!(v["result"]["flabby"]["flabby"], true);
}

#[test]
fn localize_verma_is_skyscraper() {
    let dir = scratch("localize");
    let m = dir.join("v.json");
    let text = r#"{
        "graph": {"dim": 2, "vertices": ["x", "y"],
                  "edges": [{"u": "x", "v": "y", "label": ["1", "0"]}],
                  "relations": [["x", "y"]]},
        "coords": ["x"],
        "generators": [{"degree": 0, "tuple": [[[[0, 0], "1"]]]}]
    }"#;
    fs::write(&m, text).unwrap();
    let out = run(&["localize", "--module", path(&m), "--max-degree", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["result"]["support"], serde_json::json!(["x"]));
    assert_eq!(v["result"]["stalk_hilbert"]["x"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(v["result"]["edge_hilbert"]["x-y"], serde_json::json!([0, 0, 0, 0]));
}

#[test]
fn sections_of_localized_module() {
    let dir = scratch("sections");
    let g = dir.join("g.json");
    let m = dir.join("m.json");
    let s = dir.join("s.json");
    run(&["graph", "builtin", "--name", "subgeneric", "--out", path(&g)]);
    run(&["zalg", "--graph", path(&g), "--max-degree", "8", "--out", path(&m)]);
    run(&["localize", "--module", path(&m), "--max-degree", "8", "--out", path(&s)]);
    let out = run(&["sections", "--sheaf", path(&s), "--open", "x,y"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["generator_degrees"], serde_json::json!([0, 2]));
    let out = run(&["sections", "--sheaf", path(&s), "--open", "y"]);
    assert_eq!(json(&out)["result"]["is_open"], false);
}

#[test]
fn verify_kl_a2_passes() {
    let out = run(&["verify", "kl", "--type", "A2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["comparisons"].as_array().unwrap().len(), 6);
}

#[test]
fn verify_kl_a3_singular() {
    let out = run(&[
        "verify",
        "kl",
        "--type",
        "A3",
        "--w",
        "s2 s1 s3 s2",
        "--max-degree",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["result"]["comparisons"][0]["rows"].as_array().unwrap();
    let s2 = rows.iter().find(|r| r["vertex"] == "s2").unwrap();
    assert_eq!(s2["stalk"], "1 + t^2");
    assert_eq!(v["result"]["kl_table"]["s2"], serde_json::json!([1, 1]));
}

#[test]
fn bmp_rejects_non_gkm_graph() {
    let dir = scratch("nongkm");
    let g = dir.join("g.json");
    let text = r#"{"dim": 2, "vertices": ["x", "y", "z"],
        "edges": [{"u": "x", "v": "y", "label": ["1", "0"]},
                  {"u": "x", "v": "z", "label": ["2", "0"]}],
        "relations": [["x", "y"], ["x", "z"]]}"#;
    fs::write(&g, text).unwrap();
    let out = run(&["bmp", "--graph", path(&g), "--vertex", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn bmp_cap_abort_and_schema_errors() {
    let dir = scratch("abort");
    let g = dir.join("g.json");
    let t = dir.join("t.json");
    run(&["graph", "coxeter", "--type", "A2", "--out", path(&g)]);
    run(&["graph", "tilt", "--graph", path(&g), "--out", path(&t)]);
    let out = run(&["bmp", "--graph", path(&t), "--vertex", "s1s2s1", "--max-degree", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["bmp", "--graph", path(&t), "--vertex", "s1s2s1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cap"], 12);

    let bad = dir.join("bad.json");
    fs::write(&bad, "{\"dim\": 2}").unwrap();
    assert_eq!(run(&["zalg", "--graph", path(&bad)]).status.code(), Some(2));
    assert_eq!(
        run(&["zalg", "--graph", path(&t), "--max-degree", "7"]).status.code(),
        Some(2)
    );
}

#[test]
fn reports_are_byte_identical() {
    let dir = scratch("determinism");
    let g = dir.join("g.json");
    let t = dir.join("t.json");
    run(&["graph", "coxeter", "--type", "A2", "--out", path(&g)]);
    run(&["graph", "tilt", "--graph", path(&g), "--out", path(&t)]);
    let cases: [&[&str]; 3] = [
        &["zalg", "--graph", path(&g), "--max-degree", "10"],
        &["bmp", "--graph", path(&t), "--vertex", "s1s2s1"],
        &["verify", "kl", "--type", "A3", "--w", "s2 s1 s3 s2"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        let c = msheaf().args(args).env("MSHEAF_THREADS", "1").output().unwrap();
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?}");
    }
}

#[test]
fn timing_is_opt_in() {
    let out = run(&["verify", "kl", "--type", "I2(3)", "--w", "s1"]);
    assert!(json(&out).get("wall_time_ms").is_none());
    let out = run(&["--timing", "verify", "kl", "--type", "I2(3)", "--w", "s1"]);
    assert!(json(&out)["wall_time_ms"].is_u64());
}
