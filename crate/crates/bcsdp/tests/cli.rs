use std::path::Path;
use std::process::{Command, Output};

use bcsdp::graph::{validate_partition, TimetablingInstance};
use bcsdp::ingest::{parse_dimacs, parse_native, parse_partition};

fn bcsdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcsdp"))
        .args(args)
        .env("BCSDP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let native = dir.path().join("k.bcsdp");
    let dimacs = dir.path().join("k.col");
    stdout(&bcsdp(&["gen", "kneser:6,2", "--m", "4", "-o", path(&native)]));
    stdout(&bcsdp(&[
        "convert",
        path(&native),
        "--to",
        "dimacs",
        "-o",
        path(&dimacs),
    ]));
    let doc = parse_native(&std::fs::read_to_string(&native).unwrap()).unwrap();
    let g = parse_dimacs(&std::fs::read_to_string(&dimacs).unwrap()).unwrap();
    assert_eq!(doc.instance.graph, g);
    assert_eq!(doc.instance.m, 4);
    assert_eq!(g.n(), 15);
}

#[test]
fn bound_csv_is_stable_apart_from_timing() {
    let args = ["bound", "--gen", "kneser:5,2", "--m", "2", "--output-format", "csv"];
    let a = csv_rows(&stdout(&bcsdp(&args)));
    let b = csv_rows(&stdout(&bcsdp(&args)));
    assert_eq!(a.len(), 1);
    let strip = |r: &csv::StringRecord| {
        r.iter()
            .enumerate()
            .filter(|&(i, _)| i != 6)
            .map(|(_, f)| f.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a[0]), strip(&b[0]));
    let bound: f64 = a[0][3].parse().unwrap();
    assert!((bound - 5.0).abs() < 0.05, "{bound}");
    assert_eq!(&a[0][4], "5");
    assert_eq!(&a[0][7], "converged");
}

#[test]
fn bound_accepts_negative_offset() {
    let out = stdout(&bcsdp(&[
        "bound",
        "--gen",
        "kneser:6,2",
        "--m-offset",
        "-2",
        "--output-format",
        "json",
    ]));
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    // the unbounded witness of K(6,2) has a class of 5
    assert_eq!(rows[0]["m"], 3);
}

#[test]
fn colour_writes_a_valid_partition() {
    let dir = tempfile::tempdir().unwrap();
    let part_path = dir.path().join("p.txt");
    let out = stdout(&bcsdp(&[
        "colour",
        "--gen",
        "gnp:14,0.5,3",
        "--m",
        "3",
        "--partition",
        path(&part_path),
        "--output-format",
        "csv",
    ]));
    let rows = csv_rows(&out);
    assert_eq!(&rows[0][4], "yes");
    let part = parse_partition(&std::fs::read_to_string(&part_path).unwrap()).unwrap();
    let g = bcsdp::graph::gen_gnp(14, 0.5, 3).unwrap();
    assert!(validate_partition(&TimetablingInstance::bounded(g, 3), &part).ok());
    assert_eq!(part.len().to_string(), rows[0][3]);
}

#[test]
fn bench_without_data_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcsdp(&[
        "bench",
        "toronto-sta83",
        "--data-dir",
        path(dir.path()),
        "--output-format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(csv_rows(&text)
        .iter()
        .all(|r| r.iter().next_back() == Some("missing-data")));
}

#[test]
fn random_sweep_runs() {
    let out = stdout(&bcsdp(&[
        "bench",
        "random-sweep",
        "--n",
        "10",
        "--seeds",
        "2",
        "--m",
        "3",
        "--output-format",
        "csv",
    ]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(&r[10], "pass", "{r:?}");
        assert_eq!(r.iter().next_back(), Some("ok"));
    }
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = bcsdp(&["bound", "--gen", "petersen", "--m", "2", "--m-offset", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bcsdp(&["bound", "--gen", "nonsense:3"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
