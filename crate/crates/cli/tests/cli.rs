use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sketchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(args)
        .env_remove("SKETCHLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic_and_well_formed() {
    let a = sketchlab(&["gen", "--n", "5", "--d", "7", "--seed", "11"]);
    let b = sketchlab(&["gen", "--n", "5", "--d", "7", "--seed", "11"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 5);
    assert!(text
        .lines()
        .all(|l| l.len() == 7 && l.chars().all(|c| c == '0' || c == '1')));
}

#[test]
fn exact_sketch_answers_match_the_database() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.txt");
    let blob = dir.path().join("db.blob");
    std::fs::write(&db, "1100\n1110\n0111\n1101\n").unwrap();
    let out = sketchlab(&[
        "sketch",
        "-i",
        path(&db),
        "--algo",
        "release-db",
        "--semantics",
        "for-each-estimator",
        "--k",
        "2",
        "--epsilon",
        "1/8",
        "-o",
        path(&blob),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["payload_bits"], 16);
    assert_eq!(summary["closed_form_bits"], 16);
    assert_eq!(
        std::fs::metadata(&blob).unwrap().len(),
        summary["file_bytes"].as_u64().unwrap()
    );

    let out = sketchlab(&[
        "query",
        "--sketch",
        path(&blob),
        "--itemset",
        "1,2",
        "--itemset",
        "3,4",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let answers = json(&out)["answers"].clone();
    assert_eq!(answers[0]["estimate"], 0.75);
    assert_eq!(answers[1]["estimate"], 0.25);
    assert_eq!(answers[1]["itemset"], serde_json::json!([3, 4]));

    let out = sketchlab(&[
        "query",
        "--sketch",
        path(&blob),
        "--itemset",
        "1,2",
        "--semantics",
        "for-each-indicator",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("built for for-each-estimator"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn bad_queries_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.bin");
    let blob = dir.path().join("s.blob");
    assert_eq!(
        code(&sketchlab(&[
            "gen",
            "--n",
            "20",
            "--d",
            "6",
            "-o",
            path(&db)
        ])),
        0
    );
    let out = sketchlab(&[
        "sketch",
        "-i",
        path(&db),
        "--algo",
        "subsample",
        "--semantics",
        "for-all-indicator",
        "--k",
        "2",
        "--epsilon",
        "0.25",
        "-o",
        path(&blob),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = sketchlab(&["query", "--sketch", path(&blob), "--itemset", "1,7"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("attribute 7"), "{}", stderr(&out));
    let out = sketchlab(&["query", "--sketch", path(&blob), "--itemset", "1,2,3"]);
    assert_eq!(code(&out), 2);
    let out = sketchlab(&[
        "query",
        "--sketch",
        path(&dir.path().join("absent")),
        "--itemset",
        "1,2",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sketch_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.txt");
    std::fs::write(&db, "10\n01\n").unwrap();
    let out = sketchlab(&[
        "sketch",
        "-i",
        path(&db),
        "--algo",
        "release-db",
        "--semantics",
        "for-all-indicator",
        "--k",
        "3",
        "--epsilon",
        "0.1",
        "-o",
        path(&dir.path().join("x")),
    ]);
    assert_eq!(code(&out), 2);
    let out = sketchlab(&[
        "sketch",
        "-i",
        path(&db),
        "--algo",
        "median-boost",
        "--semantics",
        "for-all-indicator",
        "--k",
        "1",
        "--epsilon",
        "0.1",
        "-o",
        path(&dir.path().join("x")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_shatter_reports_the_string_count() {
    let out = sketchlab(&["verify-shatter", "--d", "16", "--kprime", "2"]);
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).contains("64 strings checked"),
        "{}",
        stdout(&out)
    );
    let out = sketchlab(&["verify-shatter", "--d", "12", "--kprime", "2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn shatter_prints_vectors_and_table() {
    let out = sketchlab(&["shatter", "--d", "9", "--kprime", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("rounded down to 8"));
    let text = stdout(&out);
    let (db, table) = text.split_once("\n\n").unwrap();
    // d = 8, k' = 2: four shattered vectors over 8 attributes
    assert_eq!(db.lines().count(), 4);
    assert!(db.lines().all(|l| l.len() == 8));
    let mut rows = csv::Reader::from_reader(table.as_bytes());
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 16);
    assert_eq!(&records[0][0], "0000");
    // T_s has one attribute per column group
    assert!(records.iter().all(|r| r[1].split(' ').count() == 2));

    let out = sketchlab(&["shatter", "--d", "3", "--kprime", "2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn indicator_capacity_violation_is_rejected() {
    let out = sketchlab(&[
        "attack",
        "indicator",
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "1/5",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("1/epsilon > C(d/2, k-1)"),
        "{}",
        stderr(&out)
    );
    let out = sketchlab(&[
        "attack",
        "indicator",
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "0.3",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn indicator_attack_recovers_messages() {
    let args = [
        "--d",
        "16",
        "--k",
        "2",
        "--epsilon",
        "1/8",
        "--trials",
        "5",
        "--seed",
        "3",
    ];
    let out = sketchlab(&[&["attack", "indicator"][..], &args].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["message_bits"], 64);
    assert_eq!(report["sketch_bits"], 128);
    assert_eq!(report["recovered_frac"], 1.0);
    assert_eq!(report["exact_success_rate"], 1.0);
    assert_eq!(report["trials"], 5);

    let alias = sketchlab(&[&["attack-indicator"][..], &args].concat());
    assert_eq!(alias.stdout, out.stdout);
}

#[test]
fn indicator_modes_run() {
    let out = sketchlab(&[
        "attack",
        "indicator",
        "--d",
        "8",
        "--k",
        "2",
        "--mode",
        "inner-product",
        "--trials",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["exact_success_rate"], 1.0);
    let out = sketchlab(&[
        "attack",
        "indicator",
        "--d",
        "8",
        "--k",
        "3",
        "--epsilon",
        "0.01",
        "--mode",
        "amplified",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["exact_success_rate"], 1.0);
    let out = sketchlab(&[
        "attack",
        "indicator",
        "--d",
        "8",
        "--k",
        "2",
        "--mode",
        "amplified",
        "--epsilon",
        "0.01",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn estimator_attack_reports_spectrum() {
    let args = [
        "--d0",
        "2",
        "--n",
        "8",
        "--c",
        "2",
        "--k",
        "3",
        "--epsilon",
        "0.01",
        "--trials",
        "3",
    ];
    let out = sketchlab(&[&["attack", "estimator"][..], &args].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    for key in [
        "sigma_min",
        "section_ratio",
        "blocks_recovered",
        "message_exact",
        "sketch_bits",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["message_exact"], true);
    assert_eq!(report["blocks_recovered"], report["blocks_total"]);
    assert!(report["sigma_min"].as_f64().unwrap() > 0.0);

    let alias = sketchlab(&[&["attack-estimator"][..], &args].concat());
    assert_eq!(alias.stdout, out.stdout);
}

#[test]
fn estimator_attack_failure_exits_3() {
    let out = sketchlab(&[
        "attack",
        "estimator",
        "--d0",
        "2",
        "--n",
        "8",
        "--c",
        "2",
        "--k",
        "3",
        "--epsilon",
        "0.45",
        "--delta",
        "0.01",
        "--sketch",
        "subsample",
        "--trials",
        "10",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    // the report is still written
    assert!(json(&out)["exact_success_rate"].as_f64().unwrap() < 0.99);
    let out = sketchlab(&[
        "attack",
        "estimator",
        "--d0",
        "9",
        "--n",
        "8",
        "--c",
        "2",
        "--k",
        "3",
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(code(&out), 2);
}

fn bench_rows(args: &[&str]) -> Vec<csv::StringRecord> {
    let out = sketchlab(&[&["bench"][..], args].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn bench_header_and_winner() {
    let out = sketchlab(&[
        "bench",
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "1/8",
        "--n",
        "4",
        "--trials",
        "4",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let header = stdout(&out).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "algo,semantics,d,k,epsilon,delta,n,seed,cell_seed,payload_bits,theorem1_bits,winner,\
         empirical_failure_rate,failures,trials,wall_time_ms,error"
    );
    let rows = bench_rows(&[
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "1/8",
        "--n",
        "4",
        "--trials",
        "4",
    ]);
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(&r[7], "0");
        if r[1].ends_with("estimator") {
            assert_eq!(&r[11], "release-db");
            assert_eq!(&r[10], "32");
        }
        if &r[0] == "release-db" {
            assert_eq!(&r[9], "32");
            assert_eq!(&r[12], "0.0");
        }
    }
}

#[test]
fn bench_is_reproducible() {
    let args = [
        "bench",
        "--d",
        "6",
        "--k",
        "2",
        "--epsilon",
        "0.25",
        "--n",
        "40",
        "--trials",
        "10",
        "--seed",
        "5",
    ];
    let a = sketchlab(&args);
    let b = sketchlab(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(args)
        .env("SKETCHLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn bench_subsample_size_ignores_n() {
    let rows = bench_rows(&[
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "0.25",
        "--n",
        "10,100,1000",
        "--algos",
        "subsample",
        "--semantics",
        "for-all-estimator",
        "--trials",
        "2",
    ]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[9] == rows[0][9]));
}

#[test]
fn bench_records_cell_failures() {
    let rows = bench_rows(&[
        "--d",
        "8",
        "--k",
        "2,0",
        "--epsilon",
        "1/8",
        "--n",
        "4",
        "--semantics",
        "for-all-indicator",
        "--trials",
        "2",
    ]);
    assert_eq!(rows.len(), 6);
    assert!(rows[..3].iter().all(|r| r[16].is_empty()));
    assert!(rows[3..]
        .iter()
        .all(|r| r[16].contains("k") && r[9].is_empty()));

    let out = sketchlab(&[
        "bench",
        "--d",
        "8",
        "--k",
        "0",
        "--epsilon",
        "1/8",
        "--n",
        "4",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_json_mirrors_csv() {
    let out = sketchlab(&[
        "bench",
        "--d",
        "8",
        "--k",
        "2",
        "--epsilon",
        "1/8",
        "--n",
        "4",
        "--format",
        "json",
        "--trials",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let records = json(&out);
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 12);
    assert_eq!(records[0]["algo"], "release-db");
    assert_eq!(records[0]["payload_bits"], 32);
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(["verify-shatter", "--d", "8", "--kprime", "2"])
        .env("SKETCHLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
