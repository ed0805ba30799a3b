use std::path::PathBuf;
use std::process::{Command, Output};

fn geokv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geokv")).args(args).output().expect("binary runs")
}

fn data(rel: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    root.join(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn optimize_prints_a_feasible_decision() {
    let o = geokv(&["optimize", "nine-regions", &data("workloads/tokyo_read_heavy.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(d["feasible"], true);
    assert!(d["breakdown"]["total"].as_f64().unwrap() > 0.0);
    assert!(d["latencies"][0]["get_ms"].as_f64().unwrap() <= 200.0);
}

#[test]
fn model_file_and_preset_name_agree() {
    let w = data("workloads/sydney_tokyo.json");
    let a = geokv(&["optimize", "nine-regions", &w]);
    let b = geokv(&["optimize", &data("nine_regions.json"), &w]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn impossible_target_exits_2() {
    let o = geokv(&["optimize", "nine-regions", &data("workloads/tokyo_read_heavy.json"), "--slo-get", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("infeasible"));
    let d: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(d["feasible"], false);
}

#[test]
fn fixed_code_on_cheap_servers_misses_a_tight_read_target() {
    let w = data("workloads/tokyo_read_heavy.json");
    let loose = geokv(&["optimize", "nine-regions", &w, "--slo-get", "400", "--policy", "fixed-cas-5-3"]);
    assert_eq!(loose.status.code(), Some(0), "{}", stderr(&loose));
    let d: serde_json::Value = serde_json::from_str(&stdout(&loose)).unwrap();
    assert_eq!(d["configuration"]["k"], 3);
    let tight = geokv(&["optimize", "nine-regions", &w, "--slo-get", "200", "--policy", "fixed-cas-5-3"]);
    assert_eq!(tight.status.code(), Some(2));
}

#[test]
fn malformed_input_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "{ \"lambda\": ").unwrap();
    let o = geokv(&["optimize", "nine-regions", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.json"), "{}", stderr(&o));

    let o = geokv(&["optimize", &dir.path().join("missing.json").display().to_string(), &data("workloads/sydney_tokyo.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));

    let o = geokv(&["optimize", "nine-regions", &data("workloads/sydney_tokyo.json"), "--policy", "fastest"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_histories_check() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = data("scenarios/reconfig_demo.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let h = dir.path().join(format!("h{i}.jsonl"));
        let o = geokv(&["simulate", &scenario, "--duration", "30", "--history-out", h.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("reconfiguration 0 -> 1"));
        outputs.push((stdout(&o), std::fs::read_to_string(&h).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let h = dir.path().join("h0.jsonl");
    let o = geokv(&["check", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("linearizable"));

    let other = geokv(&["simulate", &scenario, "--duration", "30", "--seed", "99"]);
    assert_ne!(stdout(&other), outputs[0].0);
}

#[test]
fn simulate_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let o = geokv(&["simulate", &data("scenarios/cas_with_failure.json"), "--stats-out", stats.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(s["ops_incomplete"], 0);
    assert!(s["network_dollars_per_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_flags_a_stale_read() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("stale.jsonl");
    let ops = [
        r#"{"op_id":0,"kind":"PUT","key":"k","origin":0,"t_invoke":0.0,"t_respond":10.0,"value_written":1}"#,
        r#"{"op_id":1,"kind":"PUT","key":"k","origin":0,"t_invoke":20.0,"t_respond":30.0,"value_written":2}"#,
        r#"{"op_id":2,"kind":"GET","key":"k","origin":1,"t_invoke":40.0,"t_respond":50.0,"value_read":1}"#,
    ];
    std::fs::write(&h, ops.join("\n")).unwrap();
    let o = geokv(&["check", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("not linearizable"));

    std::fs::write(&h, "not json\n").unwrap();
    assert_eq!(geokv(&["check", h.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn empty_sweep_prints_only_the_header() {
    let o = geokv(&["sweep", "nine-regions", &data("workloads/tokyo_read_heavy.json"), "--slo-range", "300:200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn sweep_moves_from_replication_to_coding() {
    let o = geokv(&["sweep", "nine-regions", &data("workloads/tokyo_read_heavy.json"), "--slo-range", "100:400"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let header = rows.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    let (slo, protocol) = (col("slo_ms"), col("protocol"));
    let chosen: Vec<(f64, String)> = rows
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[slo].parse().unwrap(), r[protocol].to_string())
        })
        .collect();
    assert_eq!(chosen.len(), 7);
    let first_cas = chosen.iter().position(|c| c.1 == "cas").expect("coding appears");
    assert!(chosen[..first_cas].iter().any(|c| c.1 == "abd"));
    assert!(chosen[first_cas..].iter().all(|c| c.1 == "cas"));
}
