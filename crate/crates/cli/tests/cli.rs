//! End-to-end tests of the command-line surface: every subcommand, the
//! exit-code contract (0 success, 1 usage, 2 data, 3 invariant), and the
//! byte-level determinism guarantees.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eclipsehash"))
}

/// Runs with `args`, asserting the expected exit code; returns the output.
fn run_expect(code: i32, args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn eclipsehash");
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {:?}\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_ok(args: &[&str]) -> Output {
    run_expect(0, args)
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Generates a small dataset under `dir` and returns (records, queries) paths.
fn gen_toy(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let prefix = dir.join("toy");
    run_ok(&[
        "gen",
        "--dim",
        "16",
        "--records",
        "300",
        "--queries",
        "60",
        "--seed",
        &seed.to_string(),
        "--out",
        prefix.to_str().unwrap(),
    ]);
    (dir.join("toy.records.fvecs"), dir.join("toy.queries.fvecs"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// CSV body rows: drops `#` comment lines and the column-header line.
fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_is_deterministic_and_rejects_zero_records() {
    let t = TempDir::new().unwrap();
    let (r1, q1) = gen_toy(t.path(), 7);
    // fvecs framing: 4-byte length plus 16 little-endian f32 per vector.
    assert_eq!(fs::metadata(&r1).unwrap().len(), 300 * (4 + 16 * 4));
    assert_eq!(fs::metadata(&q1).unwrap().len(), 60 * (4 + 16 * 4));

    let t2 = TempDir::new().unwrap();
    let (r2, q2) = gen_toy(t2.path(), 7);
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    assert_eq!(fs::read(&q1).unwrap(), fs::read(&q2).unwrap());

    let t3 = TempDir::new().unwrap();
    let (r3, _) = gen_toy(t3.path(), 8);
    assert_ne!(fs::read(&r1).unwrap(), fs::read(&r3).unwrap());

    let out = t.path().join("none");
    run_expect(
        1,
        &["gen", "--dim", "8", "--records", "0", "--queries", "5", "--seed", "1", "--out", s(&out)],
    );
}

#[test]
fn hash_writes_codes_with_sidecar_and_reuses_saved_family() {
    let t = TempDir::new().unwrap();
    let (records, _) = gen_toy(t.path(), 7);
    let codes = t.path().join("rec.codes");
    let family = t.path().join("fam.bin");
    run_ok(&[
        "hash", "--method", "eh", "--bits", "64", "--c", "0", "--d", "8",
        "--data", s(&records), "--codes-out", s(&codes), "--family-out", s(&family),
        "--seed", "7",
    ]);
    // 64 bits -> exactly one 8-byte word per code.
    assert_eq!(fs::metadata(&codes).unwrap().len(), 300 * 8);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("rec.codes.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["method"], "eh");
    assert_eq!(sidecar["bits"], 64);
    assert_eq!(sidecar["count"], 300);
    assert_eq!(sidecar["words_per_code"], 1);
    assert_eq!(sidecar["c"], 0.0);
    assert_eq!(sidecar["d"], 8.0);
    assert_eq!(sidecar["seed"], 7);

    // Reload the family (no seed needed) -> byte-identical codes.
    let again = t.path().join("rec2.codes");
    run_ok(&["hash", "--family", s(&family), "--data", s(&records), "--codes-out", s(&again)]);
    assert_eq!(fs::read(&codes).unwrap(), fs::read(&again).unwrap());
    assert_eq!(
        fs::read(t.path().join("rec.codes.json")).unwrap(),
        fs::read(t.path().join("rec2.codes.json")).unwrap()
    );

    // Restating matching flags alongside --family is allowed...
    run_ok(&[
        "hash", "--family", s(&family), "--method", "eh", "--bits", "64", "--c", "0", "--d", "8",
        "--seed", "7", "--data", s(&records), "--codes-out", s(&again),
    ]);
    // ...but contradicting the stored family is a usage error.
    run_expect(
        1,
        &["hash", "--family", s(&family), "--bits", "32", "--data", s(&records), "--codes-out", s(&again)],
    );

    // A 100-bit code occupies two words.
    let wide = t.path().join("wide.codes");
    run_ok(&[
        "hash", "--method", "lh", "--bits", "100", "--data", s(&records),
        "--codes-out", s(&wide), "--seed", "7",
    ]);
    assert_eq!(fs::metadata(&wide).unwrap().len(), 300 * 16);
}

#[test]
fn hash_flag_misuse_is_a_usage_error() {
    let t = TempDir::new().unwrap();
    let (records, _) = gen_toy(t.path(), 7);
    let codes = t.path().join("z.codes");
    // c/d on a method that takes none.
    run_expect(
        1,
        &["hash", "--method", "lh", "--bits", "32", "--c", "0.5", "--data", s(&records), "--codes-out", s(&codes), "--seed", "1"],
    );
    // eh missing d.
    run_expect(
        1,
        &["hash", "--method", "eh", "--bits", "32", "--c", "0", "--data", s(&records), "--codes-out", s(&codes), "--seed", "1"],
    );
    // eh with c outside [-1, 1].
    run_expect(
        1,
        &["hash", "--method", "eh", "--bits", "32", "--c", "2", "--d", "8", "--data", s(&records), "--codes-out", s(&codes), "--seed", "1"],
    );
    // Sampling without a seed.
    run_expect(
        1,
        &["hash", "--method", "lh", "--bits", "32", "--data", s(&records), "--codes-out", s(&codes)],
    );
    // Missing data file is a data error, not usage.
    run_expect(
        2,
        &["hash", "--method", "lh", "--bits", "32", "--data", s(&t.path().join("absent.fvecs")), "--codes-out", s(&codes), "--seed", "1"],
    );
}

#[test]
fn hash_is_bit_identical_across_thread_counts() {
    let t = TempDir::new().unwrap();
    let (records, _) = gen_toy(t.path(), 7);
    let one = t.path().join("t1.codes");
    let three = t.path().join("t3.codes");
    run_ok(&[
        "hash", "--threads", "1", "--method", "eh", "--bits", "96", "--c", "0.25", "--d", "6",
        "--data", s(&records), "--codes-out", s(&one), "--seed", "11",
    ]);
    run_ok(&[
        "hash", "--threads", "3", "--method", "eh", "--bits", "96", "--c", "0.25", "--d", "6",
        "--data", s(&records), "--codes-out", s(&three), "--seed", "11",
    ]);
    assert_eq!(fs::read(&one).unwrap(), fs::read(&three).unwrap());
}

/// Hashes records and queries with one shared eh family; returns the two
/// codes paths.
fn hash_pair(dir: &Path, records: &Path, queries: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let rec_codes = dir.join(format!("rec{seed}.codes"));
    let query_codes = dir.join(format!("q{seed}.codes"));
    let family = dir.join(format!("fam{seed}.bin"));
    run_ok(&[
        "hash", "--method", "eh", "--bits", "64", "--c", "0", "--d", "8",
        "--data", s(records), "--codes-out", s(&rec_codes), "--family-out", s(&family),
        "--seed", &seed.to_string(),
    ]);
    run_ok(&["hash", "--family", s(&family), "--data", s(queries), "--codes-out", s(&query_codes)]);
    (rec_codes, query_codes)
}

#[test]
fn eval_round_trips_csv_and_json() {
    let t = TempDir::new().unwrap();
    let (records, queries) = gen_toy(t.path(), 7);
    let (rec_codes, query_codes) = hash_pair(t.path(), &records, &queries, 7);

    let csv_path = t.path().join("eval.csv");
    run_ok(&[
        "eval", "--codes", s(&rec_codes), s(&query_codes),
        "--data", s(&records), s(&queries), "--out", s(&csv_path),
    ]);
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().next(), Some("# eclipsehash v1"));
    assert_eq!(csv.lines().nth(1), Some("method,c,d,B,k,seed,mean_recall"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(&row[..6], ["eh", "0", "8", "64", "3", "7"]); // k defaults to 1% of 300
    let recall: f64 = row[6].parse().unwrap();
    assert!((0.0..=1.0).contains(&recall), "recall {recall}");

    // JSON output carries the same row.
    let json_path = t.path().join("eval.json");
    run_ok(&[
        "eval", "--codes", s(&rec_codes), s(&query_codes),
        "--data", s(&records), s(&queries), "--out", s(&json_path),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["method"], "eh");
    assert_eq!(v["bits"], 64);
    assert_eq!(v["k"], 3);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["mean_recall"].as_f64().unwrap(), recall);

    // Explicit k overrides the percentage default.
    run_ok(&[
        "eval", "--codes", s(&rec_codes), s(&query_codes),
        "--data", s(&records), s(&queries), "--k", "5", "--out", s(&csv_path),
    ]);
    let rows = data_rows(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows[0][4], "5");

    // Codes from two different families are rejected as inconsistent data.
    let (other_rec, _) = hash_pair(t.path(), &records, &queries, 9);
    run_expect(
        2,
        &["eval", "--codes", s(&other_rec), s(&query_codes), "--data", s(&records), s(&queries), "--out", s(&csv_path)],
    );
}

#[test]
fn sweep_single_cell_agrees_with_eval_and_grid_reports_optimum() {
    let t = TempDir::new().unwrap();
    let (records, queries) = gen_toy(t.path(), 7);

    // A 1x1 sweep must reproduce eval on codes hashed with the same seed.
    let (rec_codes, query_codes) = hash_pair(t.path(), &records, &queries, 7);
    let eval_csv = t.path().join("eval.csv");
    run_ok(&[
        "eval", "--codes", s(&rec_codes), s(&query_codes),
        "--data", s(&records), s(&queries), "--k", "3", "--out", s(&eval_csv),
    ]);
    let eval_recall = data_rows(&fs::read_to_string(&eval_csv).unwrap())[0][6].clone();

    let sweep_csv = t.path().join("sweep.csv");
    run_ok(&[
        "sweep", "--data", s(&records), s(&queries), "--methods", "eh",
        "--c-grid", "0", "--d-grid", "8", "--bits", "64", "--k", "3",
        "--seed", "7", "--out", s(&sweep_csv),
    ]);
    let sweep_text = fs::read_to_string(&sweep_csv).unwrap();
    let rows = data_rows(&sweep_text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][6], eval_recall, "1x1 sweep differs from eval");

    // A 2x2 grid with one baseline: four eh rows, one lh row, and an
    // optimum trailer pointing at the best eh cell.
    run_ok(&[
        "sweep", "--data", s(&records), s(&queries), "--methods", "eh,lh",
        "--c-grid", "0,0.5", "--d-grid", "4,8", "--bits", "64", "--k", "3",
        "--seed", "7", "--out", s(&sweep_csv),
    ]);
    let text = fs::read_to_string(&sweep_csv).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    assert!(rows[..4].iter().all(|r| r[0] == "eh"));
    assert_eq!(rows[4][0], "lh");
    assert_eq!((rows[4][1].as_str(), rows[4][2].as_str()), ("", ""));
    let c_opt = text.lines().find(|l| l.starts_with("# c_opt,")).unwrap();
    let d_opt = text.lines().find(|l| l.starts_with("# d_opt,")).unwrap();
    assert!(["0", "0.5"].contains(&&c_opt["# c_opt,".len()..]));
    assert!(["4", "8"].contains(&&d_opt["# d_opt,".len()..]));
    let best: f64 = text
        .lines()
        .find(|l| l.starts_with("# best_recall,"))
        .unwrap()["# best_recall,".len()..]
        .parse()
        .unwrap();
    let max_eh = rows[..4]
        .iter()
        .map(|r| r[6].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, max_eh);

    // The sweep is about eh; leaving it out is a usage error.
    run_expect(
        1,
        &["sweep", "--data", s(&records), s(&queries), "--methods", "lh", "--seed", "7", "--out", s(&sweep_csv)],
    );
}

#[test]
fn ratio_curve_is_nondecreasing_and_reports_d_star() {
    let t = TempDir::new().unwrap();
    let (records, _) = gen_toy(t.path(), 7);
    let csv_path = t.path().join("ratio.csv");
    let out = run_ok(&[
        "ratio", "--data", s(&records), "--d-grid", "1,2,3,4,5,6,8", "--out", s(&csv_path),
    ]);
    assert!(stdout_of(&out).contains("d_star"));
    let rows = data_rows(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 7);
    let ratios: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1]), "not monotone: {ratios:?}");
    assert!(ratios.iter().all(|r| (0.0..=1.0).contains(r)));

    // A grid that never reaches 99% still succeeds and says so.
    let out = run_ok(&["ratio", "--data", s(&records), "--d-grid", "0.001", "--out", s(&csv_path)]);
    assert!(stdout_of(&out).contains("beyond the supplied grid"));
}

#[test]
fn bench_writes_one_row_per_method_and_code_length() {
    let t = TempDir::new().unwrap();
    let csv_path = t.path().join("bench.csv");
    run_ok(&[
        "bench", "--methods", "lh,eh", "--bits-list", "16,32", "--repeats", "3",
        "--dim", "8", "--vectors", "40", "--seed", "5", "--out", s(&csv_path),
    ]);
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.contains("# seed,5"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r[0] == "eh").count(), 2);
    for row in &rows {
        let per_vector: f64 = row[2].parse().unwrap();
        assert!(per_vector > 0.0, "non-positive timing in {row:?}");
    }
}

#[test]
fn connectivity_splits_spheres_but_never_eh() {
    let t = TempDir::new().unwrap();
    let json_path = t.path().join("conn.json");

    // One sphere on a line: inside is one interval, outside is two rays.
    run_ok(&[
        "connectivity", "--method", "hs", "--dim", "1", "--bits", "1",
        "--resolution", "128", "--seed", "3", "--out", s(&json_path),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["components"]["1"], 1);
    assert_eq!(v["components"]["0"], 2);

    // Joining the far field through a single point reconnects the outside.
    run_ok(&[
        "connectivity", "--method", "hs", "--dim", "1", "--bits", "1",
        "--resolution", "128", "--seed", "3", "--compactify", "--out", s(&json_path),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["components"]["0"], 1);

    // eh regions stay whole, on a line and in the plane.
    run_ok(&[
        "connectivity", "--method", "eh", "--params", "c=0,d=4", "--dim", "1", "--bits", "2",
        "--box", "-6,6", "--resolution", "128", "--seed", "3", "--out", s(&json_path),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    for (code, count) in v["components"].as_object().unwrap() {
        assert_eq!(count.as_u64(), Some(1), "code {code} split");
    }
    run_ok(&[
        "connectivity", "--method", "eh", "--params", "c=0.5,d=3", "--dim", "2", "--bits", "2",
        "--box", "-8,8", "--resolution", "96", "--seed", "4", "--out", s(&json_path),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    for (code, count) in v["components"].as_object().unwrap() {
        assert_eq!(count.as_u64(), Some(1), "code {code} split");
    }
}

#[test]
fn connectivity_rejects_bad_flags() {
    let t = TempDir::new().unwrap();
    let json_path = t.path().join("conn.json");
    // params on a method that takes none.
    run_expect(
        1,
        &["connectivity", "--method", "hs", "--params", "c=0,d=1", "--dim", "1", "--seed", "3", "--out", s(&json_path)],
    );
    // eh without params.
    run_expect(
        1,
        &["connectivity", "--method", "eh", "--dim", "1", "--seed", "3", "--out", s(&json_path)],
    );
    // Unsupported ambient dimension.
    run_expect(
        1,
        &["connectivity", "--method", "eh", "--params", "c=0,d=4", "--dim", "3", "--seed", "3", "--out", s(&json_path)],
    );
}

#[test]
fn malformed_inputs_are_data_errors() {
    let t = TempDir::new().unwrap();
    let (records, queries) = gen_toy(t.path(), 7);
    let (rec_codes, query_codes) = hash_pair(t.path(), &records, &queries, 7);
    let out_csv = t.path().join("out.csv");

    // Codes blob without its sidecar.
    let junk = t.path().join("junk.codes");
    fs::write(&junk, b"not codes").unwrap();
    run_expect(
        2,
        &["eval", "--codes", s(&junk), s(&query_codes), "--data", s(&records), s(&queries), "--out", s(&out_csv)],
    );

    // Truncated fvecs payload.
    let bad = t.path().join("bad.fvecs");
    fs::write(&bad, [16, 0, 0, 0, 1, 2, 3]).unwrap();
    run_expect(
        2,
        &["eval", "--codes", s(&rec_codes), s(&query_codes), "--data", s(&bad), s(&queries), "--out", s(&out_csv)],
    );
}
