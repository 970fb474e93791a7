use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn ofdma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ofdma")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write(p: &Path, v: &Value) {
    fs::write(p, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn worked_example() -> Value {
    json!({
        "size": 4,
        "triples": [[1, 2, 2], [1, 2, 4], [2, 1, 2], [2, 1, 3], [3, 2, 2], [3, 4, 3], [4, 3, 1]]
    })
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = ofdma(&["gen", "--k", "3", "--n", "6", "--seed", "7", "--out", path(p)]);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = dir.path().join("c.json");
    ofdma(&["gen", "--k", "3", "--n", "6", "--seed", "8", "--out", path(&c)]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let v = read(&a);
    assert_eq!(v["K"], 3);
    assert_eq!(v["N"], 6);
}

#[test]
fn gen_directory_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for p in [&a, &b] {
        let o = ofdma(&["gen", "--k", "2", "--n", "4", "--seed", "7", "--count", "3", "--objective", "both", "--out", path(p)]);
        assert_eq!(code(&o), 0);
    }
    for i in 0..3 {
        let name = format!("instance-{i:04}.json");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    assert_eq!(read(&a.join("gen-spec.json"))["seed"], 7);
}

#[test]
fn single_user_dispatches_to_waterfill() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("one.json");
    write(
        &inst,
        &json!({
            "K": 1, "N": 3,
            "direct_gain": [[1.0, 0.5, 2.0]],
            "noise": [[1.0, 1.0, 1.0]],
            "subcarrier_budget": [[4.0, 4.0, 4.0]],
            "rate_target": [3.0]
        }),
    );
    let o = ofdma(&["solve", path(&inst)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["method"], "waterfill");
    assert_eq!(r["status"], "Optimal");
    let rate = r["rates"][0].as_f64().unwrap();
    assert!(rate >= 3.0 - 1e-8 && rate < 3.0 + 1e-6, "{rate}");
}

#[test]
fn worked_example_gadget_solves_exactly() {
    let dir = TempDir::new().unwrap();
    let tdm = dir.path().join("tdm.json");
    let inst = dir.path().join("gadget.json");
    write(&tdm, &worked_example());
    let o = ofdma(&["reduce", "--input", path(&tdm), "--out", path(&inst)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let sidecar = read(&dir.path().join("gadget.sidecar.json"));
    assert_eq!(sidecar["source"], worked_example());
    assert_eq!(sidecar["user_roles"].as_array().unwrap().len(), 4);
    assert_eq!(sidecar["variant"]["variant"], "feasibility");

    let report = dir.path().join("report.json");
    let o = ofdma(&["solve", path(&inst), "--method", "exact", "--report", path(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("status=Optimal"));
    let r = read(&report);
    assert_eq!(r["status"], "Optimal");
    for rate in r["rates"].as_array().unwrap() {
        assert!((rate.as_f64().unwrap() - 3.0).abs() < 1e-8, "{rate}");
    }
}

#[test]
fn padded_reduce_writes_roles() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("padded.json");
    let side = dir.path().join("roles.json");
    let o = ofdma(&[
        "reduce", "--random", "2", "--seed", "3", "--variant", "feasibility-c", "--c", "3/1",
        "--out", path(&inst), "--sidecar", path(&side),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let i = read(&inst);
    assert_eq!(i["K"], 3);
    assert_eq!(i["N"], 9);
    let s = read(&side);
    assert_eq!(s["user_roles"], json!(["type-i", "type-i", "type-ii"]));
    assert_eq!(s["c"], "3/1");

    let o = ofdma(&["reduce", "--random", "2", "--seed", "3", "--variant", "feasibility", "--c", "3/2", "--out", path(&inst)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn two_users_ten_subcarriers_within_budget() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    ofdma(&["gen", "--k", "2", "--n", "10", "--seed", "1", "--target", "0.5:1", "--out", path(&inst)]);
    let o = ofdma(&["solve", path(&inst), "--method", "exact"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["status"], "Optimal");
    assert!(r["residuals"]["rate_slack"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn budget_exceeded_exits_four() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    ofdma(&["gen", "--k", "2", "--n", "10", "--seed", "1", "--out", path(&inst)]);
    let o = ofdma(&["--enum-budget", "1e4", "solve", path(&inst), "--method", "exact"]);
    assert_eq!(code(&o), 4);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["status"], "BudgetExceeded");
    assert!(r["alloc"].is_null());
}

#[test]
fn infeasible_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    write(
        &inst,
        &json!({
            "K": 2, "N": 2,
            "direct_gain": [[1.0, 1.0], [1.0, 1.0]],
            "noise": [[1.0, 1.0], [1.0, 1.0]],
            "subcarrier_budget": [[1.0, 1.0], [1.0, 1.0]],
            "rate_target": [5.0, 0.5]
        }),
    );
    let o = ofdma(&["solve", path(&inst)]);
    assert_eq!(code(&o), 2);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["status"], "Infeasible");
    assert_eq!(r["method"], "assignment");
}

#[test]
fn validation_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("bad.json");
    write(
        &inst,
        &json!({
            "K": 1, "N": 2,
            "direct_gain": [[1.0, -1.0]],
            "noise": [[1.0, 1.0]],
            "subcarrier_budget": [[1.0, 1.0]],
            "rate_target": [1.0]
        }),
    );
    let o = ofdma(&["solve", path(&inst)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("direct_gain"));

    fs::write(&inst, "{ not json").unwrap();
    assert_eq!(code(&ofdma(&["solve", path(&inst)])), 3);
}

#[test]
fn verify_small_directory_agrees() {
    let dir = TempDir::new().unwrap();
    write(&dir.path().join("worked.json"), &worked_example());
    write(&dir.path().join("uncovered.json"), &json!({"size": 2, "triples": [[1, 1, 1], [2, 1, 2]]}));
    let o = ofdma(&["verify", "--dir", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("worked.json: K=4 |R|=7 3dm=yes ofdma=yes agree"), "{out}");
    assert!(out.contains("uncovered.json: K=2 |R|=2 3dm=no ofdma=no agree"), "{out}");
}

#[test]
fn verify_reports_disagreement() {
    // No match exists, but every user can reach its target on the gadget.
    let dir = TempDir::new().unwrap();
    write(
        &dir.path().join("closure.json"),
        &json!({"size": 2, "triples": [[1, 1, 1], [1, 2, 1], [1, 2, 2], [2, 2, 1]]}),
    );
    let o = ofdma(&["verify", "--dir", path(dir.path())]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("3dm=no ofdma=yes DISAGREE"));
}

#[test]
fn verify_random_is_seeded() {
    let a = ofdma(&["verify", "--random", "6", "--seed", "2", "--max-k", "3"]);
    let b = ofdma(&["verify", "--random", "6", "--seed", "2", "--max-k", "3"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("verify: 6 instances"));
}

#[test]
fn bench_square_ensemble_columns_agree() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let o = ofdma(&[
        "bench", "--k", "3", "--n", "3", "--count", "6", "--seed", "4", "--methods", "assignment,exact",
        "--out", path(&csv_path),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["instance", "method", "status", "value", "wall_time"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], pair[1][0]);
        assert_eq!((&pair[0][1], &pair[1][1]), ("assignment", "exact"));
        assert_eq!(pair[0][2], pair[1][2]);
        if &pair[0][2] == "Optimal" {
            let a: f64 = pair[0][3].parse().unwrap();
            let e: f64 = pair[1][3].parse().unwrap();
            assert!((a - e).abs() <= 1e-8 * a.max(1.0), "{a} vs {e}");
        }
    }
}

#[test]
fn bench_reads_a_generated_directory() {
    let dir = TempDir::new().unwrap();
    let ens = dir.path().join("ens");
    ofdma(&["gen", "--k", "2", "--n", "3", "--seed", "5", "--count", "3", "--objective", "utility", "--out", path(&ens)]);
    let csv_path = dir.path().join("out.csv");
    let o = ofdma(&[
        "bench", "--dir", path(&ens), "--methods", "exact,transport", "--utility", "min-rate", "--out", path(&csv_path),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.contains("instance-0000,exact,Optimal,"));
    assert!(text.contains("instance-0000,transport,NotApplicable,"));
}

#[test]
fn report_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    ofdma(&["gen", "--k", "2", "--n", "4", "--seed", "9", "--objective", "utility", "--out", path(&inst)]);
    let report = dir.path().join("r.json");
    let o = ofdma(&["solve", path(&inst), "--utility", "proportional-fairness", "--report", path(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(&report);
    assert_eq!(v["objective"], json!({"kind": "utility", "utility": "proportional-fairness"}));
    for file in [&report, &inst] {
        let v = read(file);
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(again, v);
    }

    // Feeding the reported allocation back reproduces the reported rates bit for bit.
    let inst_v = read(&inst);
    for (k, row) in v["alloc"].as_array().unwrap().iter().enumerate() {
        let r: f64 = row
            .as_array()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let g = inst_v["direct_gain"][k][n].as_f64().unwrap();
                let e = inst_v["noise"][k][n].as_f64().unwrap();
                (1.0 + g * p.as_f64().unwrap() / e).log2()
            })
            .sum();
        assert_eq!(r, v["rates"][k].as_f64().unwrap());
    }
}

#[test]
fn weighted_transport() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    write(
        &inst,
        &json!({
            "K": 2, "N": 2,
            "direct_gain": [[1.0, 1.0], [1.0, 1.0]],
            "noise": [[1.0, 1.0], [1.0, 1.0]],
            "subcarrier_budget": [[3.0, 3.0], [3.0, 3.0]],
            "rate_target": [1.0, 1.0]
        }),
    );
    let o = ofdma(&["solve", path(&inst), "--objective", "utility", "--weights", "3,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["method"], "transport");
    // user 0 takes both subcarriers: 3 * 2 * log2(4) / 2
    assert!((r["value"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    assert_eq!(r["rates"], json!([4.0, 0.0]));
}
