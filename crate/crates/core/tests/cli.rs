//! End-to-end runs of the `dtt` binary.

use std::path::Path;
use std::process::{Command, Output};

use digital_twins::io::read_result_table;

fn dtt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtt"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dtt(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn pipeline_from_simulation_to_discoveries() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "simulate",
            "--out",
            "sim",
            "--n",
            "40",
            "--p",
            "60",
            "--chromosomes",
            "2",
            "--h2",
            "0.3",
            "--causal",
            "2",
            "--external",
            "80",
            "--seed",
            "3",
        ],
    );
    for file in [
        "map.tsv",
        "haplotypes.txt",
        "pedigree.tsv",
        "phenotype.tsv",
        "gwas.tsv",
        "causal.tsv",
    ] {
        assert!(dir.join("sim").join(file).exists(), "{file} missing");
    }
    ok(
        dir,
        &[
            "fit",
            "--gwas",
            "sim/gwas.tsv",
            "--out",
            "model.json",
            "--lambda-count",
            "5",
            "--folds",
            "3",
        ],
    );

    ok(
        dir,
        &["dtt", "--data", "sim", "-K", "19", "--out", "global.tsv"],
    );
    let global = read_result_table(dir.join("global.tsv")).unwrap();
    assert_eq!(global.rows.len(), 2);
    for row in &global.rows {
        let grid = row.p_value * 20.0;
        assert!(
            (grid - grid.round()).abs() < 1e-9,
            "p = {} is not a multiple of 1/20",
            row.p_value
        );
    }
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("global.tsv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 1);

    let local_args = [
        "ldtt",
        "--data",
        "sim",
        "--stat",
        "loss",
        "--model",
        "model.json",
        "--group-size",
        "5000000",
        "--method",
        "bh",
        "-K",
        "19",
        "--out",
        "local.tsv",
    ];
    ok(dir, &local_args);
    let local = read_result_table(dir.join("local.tsv")).unwrap();
    assert!(local.rows.iter().any(|r| r.weight > 0.0));
    assert!(local.rows.iter().all(|r| r.procedure == "bh"));
    let first = std::fs::read(dir.join("local.tsv")).unwrap();
    ok(dir, &local_args);
    assert_eq!(
        std::fs::read(dir.join("local.tsv")).unwrap(),
        first,
        "same seed, same output"
    );

    ok(
        dir,
        &[
            "ldtt-indep",
            "--data",
            "sim",
            "--group-size",
            "5000000",
            "--method",
            "seqstep",
            "--c",
            "0.5",
            "-K",
            "19",
            "--out",
            "indep.tsv",
        ],
    );
    assert_eq!(
        read_result_table(dir.join("indep.tsv")).unwrap().rows.len(),
        local.rows.len()
    );

    ok(
        dir,
        &[
            "tdt",
            "--data",
            "sim",
            "--out",
            "tdt.tsv",
            "--manhattan",
            "tdt.csv",
        ],
    );
    assert_eq!(
        read_result_table(dir.join("tdt.tsv")).unwrap().rows.len(),
        120
    );
    let csv = std::fs::read_to_string(dir.join("tdt.csv")).unwrap();
    assert_eq!(csv.lines().count(), 121);

    ok(
        dir,
        &[
            "combine",
            "--input",
            "local.tsv",
            "--method",
            "accumulation",
            "--out",
            "combined.tsv",
        ],
    );
    let combined = read_result_table(dir.join("combined.tsv")).unwrap();
    assert_eq!(combined.p_values(), local.p_values());
    assert!(combined.rows.iter().all(|r| r.procedure == "accumulation"));
}

#[test]
fn packed_dataset_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "simulate", "--out", "sim", "--n", "10", "--p", "30", "--packed",
        ],
    );
    assert!(dir.join("sim/haplotypes.dttb").exists());
    ok(dir, &["dtt", "--data", "sim", "-K", "9", "--out", "g.tsv"]);
}

#[test]
fn confounded_demo_prints_both_tests() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["demo-confounded"]);
    assert!(out.contains("permutation test p-value"));
    assert!(out.contains("digital twin test p-value: 1"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(dtt(tmp.path(), &[]).status.code(), Some(2));
    assert_eq!(dtt(tmp.path(), &["dtt", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        dtt(
            tmp.path(),
            &["combine", "--input", "x.tsv", "--method", "nope", "--out", "y.tsv"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn input_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dtt(tmp.path(), &["dtt", "--data", "nowhere", "--out", "x.tsv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));

    std::fs::write(tmp.path().join("bad.tsv"), "group_id\tchrom\n").unwrap();
    let out = dtt(
        tmp.path(),
        &[
            "combine", "--input", "bad.tsv", "--method", "bh", "--out", "y.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}
