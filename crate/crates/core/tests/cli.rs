use std::path::Path;
use std::process::{Command, Output};

fn hdfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdfactor"))
        .args(args)
        .env_remove("HDFACTOR_SEED")
        .output()
        .unwrap()
}

fn hdfactor_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdfactor"))
        .args(args)
        .env("HDFACTOR_SEED", seed)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn factor_prints_result_and_exits_zero() {
    let o = hdfactor(&["factor", "35", "--dim", "512"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["kind"], "factor");
    assert_eq!(v["data"]["result"]["predicted_factors"], serde_json::json!([5, 7]));
    assert_eq!(v["data"]["result"]["correct"], true);
    assert_eq!(v["data"]["codebook"]["largest_prime"], 17);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["factor", "3"],
        vec!["factor", "-5"],
        vec!["factor", "twelve"],
        vec!["factor"],
        vec!["factor", "35", "--format", "xml"],
        vec!["kernel", "--elements", ""],
        vec!["kernel", "--elements", "log:-1"],
        vec!["mindim", "--threshold", "1.01"],
        vec!["mindim", "--threshold", "0"],
        vec!["sweep", "--cardinalities", "64", "--trials", "0"],
        vec!["nonsense"],
    ] {
        let o = hdfactor(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn unsolved_exits_two() {
    // 512 primes in 32 dimensions is far past capacity
    let o = hdfactor(&["factor", "603329", "--codebook", "window", "--count", "512", "--dim", "32", "--max-iters", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["data"]["result"]["correct"], false);
}

#[test]
fn help_and_version_exit_zero() {
    for args in [vec!["--help"], vec!["--version"], vec!["factor", "--help"], vec!["sweep", "--help"]] {
        assert_eq!(hdfactor(&args).status.code(), Some(0), "{args:?}");
    }
    let help = String::from_utf8(hdfactor(&["factor", "--help"]).stdout).unwrap();
    for d in ["[default: 1024]", "[default: full]", "[default: auto]", "[default: 512]", "HDFACTOR_SEED"] {
        assert!(help.contains(d), "missing {d}");
    }
}

#[test]
fn seed_flag_beats_environment() {
    let base = ["factor", "77", "--dim", "256"];
    let from_env = stdout_json(&hdfactor_env(&base, "42"));
    assert_eq!(from_env["data"]["codebook"]["seed"], 42);
    let mut args = base.to_vec();
    args.extend(["--seed", "5"]);
    let flagged = stdout_json(&hdfactor_env(&args, "42"));
    assert_eq!(flagged["data"]["codebook"]["seed"], 5);
    let default = stdout_json(&hdfactor(&base));
    assert_eq!(default["data"]["codebook"]["seed"], 1);
    assert_eq!(hdfactor_env(&base, "abc").status.code(), Some(1));
}

#[test]
fn config_file_seed_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let with = dir.path().join("with.toml");
    let without = dir.path().join("without.toml");
    std::fs::write(&with, "cardinalities = [8]\ndims = [64]\ntrials_per_cell = 5\nseed = 3\n").unwrap();
    std::fs::write(&without, "cardinalities = [8]\ndims = [64]\ntrials_per_cell = 5\n").unwrap();
    for (cfg, expect) in [(&with, 3), (&without, 9)] {
        let out = dir.path().join("o.csv");
        let o = hdfactor_env(
            &["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
            "9",
        );
        assert_eq!(o.status.code(), Some(0));
        let m = json(&dir.path().join("o.csv.manifest.json"));
        assert_eq!(m["data"]["seed"], expect);
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "cardinalites = [8]\n").unwrap();
    let o = hdfactor(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cardinalites"));
}

#[test]
fn factor_manifest_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = hdfactor(&[
        "factor", "221", "--codebook", "window", "--count", "32", "--dim", "512", "--trace", "--seed", "8",
        "--out", a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let manifest = dir.path().join("a.json.manifest.json");
    let m = json(&manifest);
    assert_eq!(m["kind"], "manifest");
    assert_eq!(m["data"]["subcommand"], "factor");
    assert_eq!(m["data"]["config"]["s"], "221");
    let o = hdfactor(&["factor", "--manifest", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(json(&a)["data"]["result"]["trace"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn manifest_of_wrong_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.csv");
    assert_eq!(hdfactor(&["kernel", "--runs", "1", "--grid", "50", "--out", k.to_str().unwrap()]).status.code(), Some(0));
    let m = dir.path().join("k.csv.manifest.json");
    assert_eq!(hdfactor(&["factor", "--manifest", m.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(hdfactor(&["sweep", "--config", m.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn saved_codebook_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let cb = dir.path().join("book.bin");
    let a = hdfactor(&["factor", "143", "--dim", "512", "--seed", "4", "--save-codebook", cb.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    let b = hdfactor(&["factor", "143", "--load-codebook", cb.to_str().unwrap()]);
    assert_eq!(b.status.code(), Some(0));
    let (ra, rb) = (stdout_json(&a), stdout_json(&b));
    assert_eq!(ra["data"]["result"], rb["data"]["result"]);
    assert_eq!(rb["data"]["codebook"]["seed"], 4);
    let mut bytes = std::fs::read(&cb).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&cb, bytes).unwrap();
    assert_eq!(hdfactor(&["factor", "143", "--load-codebook", cb.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn memory_budget_warns_without_failing() {
    let o = hdfactor(&["factor", "35", "--dim", "512", "--memory-budget-mb", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn restarts_use_fresh_base_vectors() {
    let o = hdfactor(&["factor", "603329", "--codebook", "window", "--count", "512", "--dim", "32", "--max-iters", "5", "--restarts", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["data"]["attempts"], 3);
    assert_eq!(v["data"]["codebook"]["stream"], 2);
}

#[test]
fn csv_outputs_carry_preamble_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.csv");
    let o = hdfactor(&["kernel", "--elements", "log:2,1.5", "--betas", "3", "--runs", "2", "--grid", "10", "--out", k.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&k).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hdfactor kernel schema_version=1");
    assert_eq!(lines[1], "beta,x,mean_sim,std_sim");
    assert_eq!(lines.len(), 12);

    let s = hdfactor(&["sweep", "--cardinalities", "8,16", "--dims", "64", "--trials", "10"]);
    assert_eq!(s.status.code(), Some(0));
    let text = String::from_utf8(s.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "cardinality,n,k,trials,accuracy,mean_iterations,convergence_rate,wall_time_s");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("8,64,2,10,"));
}

#[test]
fn mindim_reports_slope() {
    let o = hdfactor(&["mindim", "--cardinalities", "8,16", "--dims", "16,32,64,128", "--trials", "20", "--repeats", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["kind"], "mindim");
    assert_eq!(v["data"]["rows"].as_array().unwrap().len(), 2);
    assert!(v["data"]["slopes"][0]["slope"].is_number());
}
