use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use sublev::output::{read_frames, RunManifest};
use sublev::{config, run_text, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sublev"))
}

fn base(task: Value) -> Value {
    json!({
        "family": {"builtin": "drift-uncertainty"},
        "datum": {"builtin": "paper-example-dynkin2"},
        "grid": {"lo": -4.0, "hi": 4.0, "n": 257},
        "scheme": {"dt": 0.0078125},
        "task": task,
        "outputs": {"csv": "table.csv"},
        "rng_seed": 5
    })
}

fn run(cfg: &Value, dir: &Path) -> (i32, RunManifest) {
    let out = run_text(&cfg.to_string(), &RunOptions { out_dir: dir.to_path_buf(), seed: None });
    (out.exit_code, out.manifest)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn dynkin2_evolve_reports_golden_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(json!({"kind": "evolve", "times": [0.5, 1.0, 1.5, 2.0], "points": [0.0]}));
    cfg["grid"]["n"] = json!(1025);
    cfg["outputs"] = json!({"csv": "evolve.csv", "svg": "evolve.svg", "binary": "frames.bin"});
    let (code, manifest) = run(&cfg, dir.path());
    assert_eq!(code, 0, "{manifest:?}");
    let rows = read_csv(&dir.path().join("evolve.csv"));
    let got: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for (g, want) in got.iter().zip([1.0, 1.0, 1.5, 2.0]) {
        assert!((g - want).abs() < 5e-2, "{got:?}");
    }
    // Nonempty argmax labels for positive times.
    assert!(rows.iter().all(|r| r[3].starts_with("b=")));
    assert_eq!(manifest.artifacts, vec!["evolve.csv", "evolve.svg", "frames.bin"]);
    let svg = std::fs::read_to_string(dir.path().join("evolve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 5);
    let (times, frames) = read_frames(&mut std::fs::File::open(dir.path().join("frames.bin")).unwrap()).unwrap();
    assert_eq!(times, vec![0.5, 1.0, 1.5, 2.0]);
    assert!((frames[3].interpolate(&[0.0]).unwrap() - got[3]).abs() < 1e-15);
}

#[test]
fn exact_method_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(json!({"kind": "evolve", "times": [0.5, 0.75, 1.0, 1.5, 2.0], "points": [0.0], "method": "exact"}));
    cfg["grid"]["n"] = json!(1025);
    assert_eq!(run(&cfg, dir.path()).0, 0);
    let got: Vec<f64> = read_csv(&dir.path().join("table.csv")).iter().map(|r| r[2].parse().unwrap()).collect();
    for (g, want) in got.iter().zip([1.0, 1.0, 1.0, 1.5, 2.0]) {
        assert!((g - want).abs() < 2e-2, "{got:?}");
    }
    cfg["family"] = json!({"builtin": "g-heat"});
    assert_eq!(run(&cfg, dir.path()).0, 2);
}

#[test]
fn dynkin_on_singleton_collapses() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(json!({"kind": "dynkin", "cases": [{"t": 0.25, "x": 0.3}, {"t": 0.5, "x": -0.7}]}));
    cfg["family"] = json!({"builtin": "brownian"});
    cfg["datum"] = json!({"builtin": "gaussian"});
    cfg["grid"] = json!({"lo": -8.0, "hi": 8.0, "n": 257});
    cfg["scheme"]["dt"] = json!(0.015625);
    let (code, m) = run(&cfg, dir.path());
    assert_eq!(code, 0, "{m:?}");
    for r in read_csv(&dir.path().join("table.csv")) {
        let v: Vec<f64> = r[2..7].iter().map(|s| s.parse().unwrap()).collect();
        let (lower, middle, upper, tol) = (v[0], v[1], v[2], v[4]);
        assert!((upper - lower).abs() <= 2.0 * tol && (middle - upper).abs() <= tol, "{r:?}");
    }
}

#[test]
fn malformed_configs_exit_2_with_only_a_manifest() {
    let bad = [
        "{ not json".to_string(),
        base(json!({"kind": "evolve", "times": [0.5]})).to_string().replace("\"rng_seed\"", "\"rng_sed\""),
        base(json!({"kind": "evolve", "times": [0.5], "bogus": 1})).to_string(),
        base(json!({"kind": "fly"})).to_string(),
        {
            let mut c = base(json!({"kind": "evolve", "times": [0.5]}));
            c["family"] = json!({"builtin": "no-such-family"});
            c.to_string()
        },
        {
            let mut c = base(json!({"kind": "evolve", "times": [0.5]}));
            c["datum"] = json!({"values": [1.0, 2.0]});
            c.to_string()
        },
        base(json!({"kind": "evolve", "times": [0.3333]})).to_string(),
        {
            let mut c = base(json!({"kind": "evolve", "times": [0.5]}));
            c["family"] = json!({"members": [{"label": "a", "diffusion": -1.0}]});
            c.to_string()
        },
    ];
    for text in bad {
        let dir = tempfile::tempdir().unwrap();
        let out = run_text(&text, &RunOptions { out_dir: dir.path().to_path_buf(), seed: None });
        assert_eq!(out.exit_code, 2, "{text}");
        assert!(out.manifest.error.is_some());
        assert_eq!(listing(dir.path()), vec!["manifest.json"], "{text}");
        let on_disk: RunManifest = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(on_disk.exit_code, 2);
        assert!(on_disk.artifacts.is_empty());
    }
}

#[test]
fn runtime_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(json!({"kind": "hjb", "times": [0.5]}));
    cfg["scheme"]["hjb_dt"] = json!(0.5);
    assert_eq!(run(&cfg, dir.path()).0, 3);
    let cfg = base(json!({"kind": "mc", "t_final": 1.0, "k": [4], "n_paths": 10, "x": 0.0}));
    let (code, m) = run(&cfg, dir.path());
    assert_eq!(code, 3);
    assert!(m.error.unwrap().contains("budget"));
}

#[test]
fn failed_checks_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(json!({"kind": "tightness", "radii": [0.5, 1.0, 2.0], "eps": 1e-3}));
    cfg["family"] = json!({"builtin": "remark-lk85", "size": 4});
    let (code, m) = run(&cfg, dir.path());
    assert_eq!(code, 1);
    let tight = m.checks.iter().find(|c| c.name == "tight").unwrap();
    assert!(!tight.pass);
    assert!(m.checks.iter().find(|c| c.name == "test_function_bracketing").unwrap().pass);
    cfg["task"]["radii"] = json!([0.5, 1.0, 2.0, 4.0, 8.0]);
    assert_eq!(run(&cfg, dir.path()).0, 0);
}

fn examples() -> Vec<Value> {
    let mut v = vec![
        base(json!({"kind": "symbol", "xi": [0.0, 1.0, 2.5]})),
        base(json!({"kind": "generator", "points": [-1.0, 0.0, 0.7]})),
        base(json!({"kind": "evolve", "times": [0.5, 1.0], "points": [0.0]})),
        base(json!({"kind": "hjb", "times": [0.25], "points": [0.0], "viscosity_probes": 5})),
        base(json!({"kind": "lipschitz", "t_grid": [0.125, 0.25]})),
        base(json!({"kind": "pmp", "cases": 5})),
        base(json!({"kind": "slope", "x": 0.1, "t_grid": [0.0, 0.125], "s_list": [0.0625]})),
        base(json!({"kind": "crosscheck", "t_final": 0.25})),
    ];
    let mut mc = base(json!({"kind": "mc", "t_final": 0.5, "k": [1, 2], "n_paths": 200, "x": 0.1}));
    mc["family"] = json!({"members": [{"label": "down", "drift": -1.0}, {"label": "up", "drift": 1.0, "jumps": [[0.5, 1.0]]}]});
    mc["datum"] = json!({"builtin": "gaussian"});
    v.push(mc);
    let mut tab = base(json!({"kind": "tightness", "radii": [0.5, 2.0], "eps": 0.1, "x": 0.3}));
    tab["family"] = json!({"labels": ["a"], "nodes": [-1.0, 1.0], "table": [[{"jumps": [[1.0, 1.0]]}, {"diffusion": 1.0}]]});
    v.push(tab);
    let mut sampled = base(json!({"kind": "generator"}));
    sampled["datum"] = json!({"values": (0..257).map(|i| (i as f64 / 40.0).sin()).collect::<Vec<_>>()});
    v.push(sampled);
    v
}

#[test]
fn every_example_task_runs() {
    for cfg in examples() {
        let dir = tempfile::tempdir().unwrap();
        let (code, m) = run(&cfg, dir.path());
        assert!(code == 0 || code == 1, "{}: {m:?}", cfg["task"]);
        assert!(dir.path().join("table.csv").exists());
    }
}

#[test]
fn rerun_from_manifest_is_bit_identical() {
    let mut mc = examples().into_iter().find(|c| c["task"]["kind"] == "mc").unwrap();
    mc["task"]["n_paths"] = json!(2000);
    let evolve = base(json!({"kind": "evolve", "times": [0.5, 1.0]}));
    for cfg in [evolve, mc] {
        let a = tempfile::tempdir().unwrap();
        let (code, m) = run(&cfg, a.path());
        assert!(code <= 1);
        let b = tempfile::tempdir().unwrap();
        let replay = m.config.clone().unwrap();
        let (code2, m2) = run(&replay, b.path());
        assert_eq!(code, code2);
        assert_eq!(m.config_hash, m2.config_hash);
        assert_eq!(std::fs::read(a.path().join("table.csv")).unwrap(), std::fs::read(b.path().join("table.csv")).unwrap());
    }
}

#[test]
fn seed_override_changes_hash_and_estimates() {
    let cfg = examples().into_iter().find(|c| c["task"]["kind"] == "mc").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = run_text(&cfg.to_string(), &RunOptions { out_dir: dir.path().into(), seed: None });
    let first = std::fs::read(dir.path().join("table.csv")).unwrap();
    let b = run_text(&cfg.to_string(), &RunOptions { out_dir: dir.path().into(), seed: Some(99) });
    assert_ne!(a.manifest.config_hash, b.manifest.config_hash);
    assert_eq!(b.manifest.config.unwrap()["rng_seed"], json!(99));
    assert_ne!(first, std::fs::read(dir.path().join("table.csv")).unwrap());
}

/// Validator for the subset of JSON Schema the generated schema uses.
fn validates(schema: &Value, root: &Value, v: &Value) -> bool {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.rsplit('/').next().unwrap();
        return validates(&root["definitions"][name], root, v);
    }
    if let Some(any) = schema.get("anyOf").and_then(Value::as_array) {
        if !any.iter().any(|s| validates(s, root, v)) {
            return false;
        }
    }
    if let Some(one) = schema.get("oneOf").and_then(Value::as_array) {
        if one.iter().filter(|s| validates(s, root, v)).count() != 1 {
            return false;
        }
    }
    if let Some(all) = schema.get("allOf").and_then(Value::as_array) {
        if !all.iter().all(|s| validates(s, root, v)) {
            return false;
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            return false;
        }
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return false;
        }
    }
    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if v.as_f64().is_some_and(|x| x < min) {
            return false;
        }
    }
    if let Value::Array(items) = v {
        if schema.get("minItems").and_then(Value::as_u64).is_some_and(|n| (items.len() as u64) < n)
            || schema.get("maxItems").and_then(Value::as_u64).is_some_and(|n| (items.len() as u64) > n)
        {
            return false;
        }
        if let Some(item) = schema.get("items") {
            if !items.iter().all(|x| validates(item, root, x)) {
                return false;
            }
        }
    }
    if let Value::Object(map) = v {
        if let Some(req) = schema.get("required").and_then(Value::as_array) {
            if !req.iter().all(|k| map.contains_key(k.as_str().unwrap())) {
                return false;
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, x) in map {
            match props.and_then(|p| p.get(k)) {
                Some(s) => {
                    if !validates(s, root, x) {
                        return false;
                    }
                }
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => return false,
                None => {}
            }
        }
    }
    true
}

/// Every object key in `v`, as a path of object keys and array indices.
fn key_paths(v: &Value, prefix: &mut Vec<Value>, out: &mut Vec<Vec<Value>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                prefix.push(json!(k));
                out.push(prefix.clone());
                key_paths(x, prefix, out);
                prefix.pop();
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate().take(2) {
                prefix.push(json!(i));
                key_paths(x, prefix, out);
                prefix.pop();
            }
        }
        _ => {}
    }
}

fn delete(v: &Value, path: &[Value]) -> Value {
    let mut out = v.clone();
    let mut cur = &mut out;
    for p in &path[..path.len() - 1] {
        cur = match p {
            Value::String(k) => &mut cur[k.as_str()],
            Value::Number(i) => &mut cur[i.as_u64().unwrap() as usize],
            _ => unreachable!(),
        };
    }
    cur.as_object_mut().unwrap().remove(path.last().unwrap().as_str().unwrap());
    out
}

#[test]
fn schema_and_parser_agree_on_every_key_deletion() {
    let schema = config::schema();
    let (mut required_deletions, mut total) = (0, 0);
    for cfg in examples() {
        assert!(validates(&schema, &schema, &cfg), "{cfg}");
        let mut paths = Vec::new();
        key_paths(&cfg, &mut Vec::new(), &mut paths);
        for p in paths {
            let mutated = delete(&cfg, &p);
            let by_schema = validates(&schema, &schema, &mutated);
            let by_parser = config::parse(&mutated.to_string()).is_ok();
            assert_eq!(by_schema, by_parser, "deleting {p:?} from {cfg}");
            total += 1;
            if !by_schema {
                required_deletions += 1;
                let dir = tempfile::tempdir().unwrap();
                assert_eq!(run(&mutated, dir.path()).0, 2);
            }
        }
    }
    assert!(required_deletions > 50 && total > required_deletions, "{required_deletions} / {total}");
}

#[test]
fn schema_rejects_added_keys_like_the_parser() {
    let schema = config::schema();
    for cfg in examples() {
        let mut paths = Vec::new();
        key_paths(&cfg, &mut Vec::new(), &mut paths);
        for p in paths {
            let parent = &p[..p.len() - 1];
            let mut mutated = cfg.clone();
            let mut cur = &mut mutated;
            for q in parent {
                cur = match q {
                    Value::String(k) => &mut cur[k.as_str()],
                    Value::Number(i) => &mut cur[i.as_u64().unwrap() as usize],
                    _ => unreachable!(),
                };
            }
            cur.as_object_mut().unwrap().insert("unexpected".into(), json!(1));
            assert!(!validates(&schema, &schema, &mutated), "{p:?}");
            assert!(config::parse(&mutated.to_string()).is_err(), "{p:?}");
        }
    }
}

#[test]
fn binary_subcommands() {
    let out = bin().arg("schema").output().unwrap();
    assert!(out.status.success());
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, config::schema());

    let out = bin().arg("builtins").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["drift-uncertainty", "g-heat", "remark-lk85", "poisson-uncertain", "brownian", "paper-example-dynkin2", "sin-window"] {
        assert!(text.contains(name), "{name}");
    }
    let out = bin().args(["builtins", "poisson"]).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn binary_run_exit_codes_and_json_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, base(json!({"kind": "evolve", "times": [0.5], "points": [0.0]})).to_string()).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"family\": 3}").unwrap();
    let out_dir = dir.path().join("out");
    for (cfg, want) in [(&good, 0), (&bad, 2)] {
        let out = bin().arg("run").arg(cfg).arg("--out").arg(&out_dir).args(["--seed", "3"]).output().unwrap();
        assert_eq!(out.status.code(), Some(want));
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert!(!stderr.is_empty());
        for line in stderr.lines() {
            let rec: Value = serde_json::from_str(line).unwrap();
            assert!(rec["level"].is_string() && rec["event"].is_string());
        }
    }
    let missing = bin().arg("run").arg(dir.path().join("nope.json")).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("mc.json");
    let mut cfg = examples().into_iter().find(|c| c["task"]["kind"] == "mc").unwrap();
    cfg["task"]["n_paths"] = json!(3000);
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let status = bin().env("SUBLEV_THREADS", threads).arg("run").arg(&cfg_path).arg("--out").arg(&out).status().unwrap();
        assert!(status.code().unwrap() <= 1);
        tables.push(std::fs::read(out.join("table.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}
