//! Subcommand implementations: load inputs, call the library, write machine
//! output to files, and print a one-line human summary to stdout.

use crate::args::{
    BenchArgs, Command, ConnectivityArgs, EvalArgs, GenArgs, HashArgs, RatioArgs, SweepArgs,
};
use crate::Failure;
use eclipsehash::connectivity::{connectivity_check, suggested_box, GridBox};
use eclipsehash::eval::{self, RecallResult, SweepGrid};
use eclipsehash::io;
use eclipsehash::{Dataset, HashFamily, Method, Seed, StreamPurpose};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// First line of every CSV this tool writes; versions the column order.
const CSV_VERSION_LINE: &str = "# eclipsehash v1";

/// Column order for recall rows, shared by `eval` and `sweep`.
const RECALL_HEADER: &str = "method,c,d,B,k,seed,mean_recall";

type CmdResult = Result<(), Failure>;

pub fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Hash(a) => hash(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Ratio(a) => ratio(a),
        Command::Bench(a) => bench(a),
        Command::Connectivity(a) => connectivity(a),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Maps a library error to a data failure, for call sites where the error
/// reflects file content or the filesystem rather than flag values.
pub fn data_err(e: eclipsehash::Error) -> Failure {
    Failure::Data(e.to_string())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> Failure {
    Failure::Data(msg.into())
}

fn wio(e: std::io::Error) -> Failure {
    data(format!("write failed: {e}"))
}

/// Appends `suffix` to the file name (keeping any existing extension).
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn create_out(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}

/// Like [`data_err`], but names the file when the library reports a bare
/// IO error (format errors already carry their path).
fn read_err(path: &Path, e: eclipsehash::Error) -> Failure {
    match e {
        eclipsehash::Error::Io(io) => data(format!("{}: {io}", path.display())),
        other => data_err(other),
    }
}

fn load_vectors(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let vectors = io::load_vectors(path).map_err(|e| read_err(path, e))?;
    if vectors.is_empty() {
        return Err(data(format!("{}: no vectors", path.display())));
    }
    Ok(vectors)
}

fn load_dataset(records: &Path, queries: &Path) -> Result<Dataset, Failure> {
    let r = load_vectors(records)?;
    let q = load_vectors(queries)?;
    Dataset::new(name_of(records), r, q).map_err(data_err)
}

fn name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Resolves the `--k`/`--k-percent` pair; `None` means the library default
/// (1% of the record count, rounded up).
fn resolve_k(
    k: Option<usize>,
    k_percent: Option<f64>,
    n_records: usize,
) -> Result<Option<usize>, Failure> {
    match (k, k_percent) {
        (Some(0), _) => Err(usage("--k must be at least 1")),
        (Some(k), _) => Ok(Some(k)),
        (None, Some(p)) => {
            if !(p.is_finite() && p > 0.0 && p <= 100.0) {
                return Err(usage(format!("--k-percent must lie in (0, 100], got {p}")));
            }
            Ok(Some(((n_records as f64 * p / 100.0).ceil() as usize).max(1)))
        }
        (None, None) => Ok(None),
    }
}

/// First occurrence of each method, in flag order.
fn dedup_methods(methods: &[Method]) -> Vec<Method> {
    let mut out = Vec::new();
    for &m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn recall_csv_row(r: &RecallResult) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.method,
        opt_cell(r.c),
        opt_cell(r.d),
        r.bits,
        r.k,
        r.seed,
        r.mean_recall
    )
}

// ---------------------------------------------------------------------------
// gen

fn gen(a: GenArgs) -> CmdResult {
    let ds = io::gen_synthetic(a.dim, a.records, a.queries, Seed(a.seed))?;
    let record_path = with_suffix(&a.out, ".records.fvecs");
    let query_path = with_suffix(&a.out, ".queries.fvecs");
    io::write_fvecs(&record_path, ds.records()).map_err(data_err)?;
    io::write_fvecs(&query_path, ds.queries()).map_err(data_err)?;
    println!(
        "wrote {} records to {} and {} queries to {} ({}-d standard normal, seed {})",
        a.records,
        record_path.display(),
        a.queries,
        query_path.display(),
        a.dim,
        a.seed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// hash

fn hash(a: HashArgs) -> CmdResult {
    // Flag-shape validation first, so misuse is reported before any IO.
    if a.family.is_none() {
        let method = a.method.expect("clap requires --method without --family");
        if method != Method::Eh && (a.c.is_some() || a.d.is_some()) {
            return Err(usage(format!("--c and --d apply only to eh, not {method}")));
        }
        if method == Method::Eh && (a.c.is_none() || a.d.is_none()) {
            return Err(usage("eh needs both --c and --d"));
        }
    }
    let data = load_vectors(&a.data)?;
    let (family, seed) = match &a.family {
        Some(path) => {
            let (family, header) = io::load_family(path).map_err(|e| read_err(path, e))?;
            check_family_flags(&a, &family, &header)?;
            (family, header.seed.map(Seed))
        }
        None => {
            let seed = Seed(a.seed.expect("clap requires --seed without --family"));
            let family = HashFamily::sample(
                a.method.expect("validated above"),
                data[0].len(),
                a.bits.expect("clap requires --bits without --family"),
                a.c,
                a.d,
                &mut seed.stream(StreamPurpose::Family),
            )?;
            (family, Some(seed))
        }
    };
    let codes = family.batch_hash(&data)?;
    io::save_codes(&a.codes_out, &codes, &family, seed).map_err(data_err)?;
    if let Some(family_out) = &a.family_out {
        io::save_family(family_out, &family, seed).map_err(data_err)?;
    }
    let params = match family.eh_params() {
        Some((c, d)) => format!(", c={c}, d={d}"),
        None => String::new(),
    };
    let saved = match &a.family_out {
        Some(p) => format!("; family saved to {}", p.display()),
        None => String::new(),
    };
    println!(
        "hashed {} vectors into {}-bit {} codes{} -> {} (sidecar {}.json){}",
        codes.len(),
        family.code_len(),
        family.method(),
        params,
        a.codes_out.display(),
        a.codes_out.display(),
        saved
    );
    Ok(())
}

/// When hashing with a stored family, any family-shape flags also supplied
/// must agree with what the file holds.
fn check_family_flags(a: &HashArgs, family: &HashFamily, header: &io::FamilyHeader) -> CmdResult {
    if let Some(m) = a.method {
        if m != family.method() {
            return Err(usage(format!(
                "--method {m} does not match the loaded family ({})",
                family.method()
            )));
        }
    }
    if let Some(b) = a.bits {
        if b != family.code_len() {
            return Err(usage(format!(
                "--bits {b} does not match the loaded family ({} bits)",
                family.code_len()
            )));
        }
    }
    match family.eh_params() {
        None => {
            if a.c.is_some() || a.d.is_some() {
                return Err(usage(format!(
                    "--c and --d apply only to eh, not {}",
                    family.method()
                )));
            }
        }
        Some((fc, fd)) => {
            if let Some(c) = a.c {
                if c != fc {
                    return Err(usage(format!(
                        "--c {c} does not match the loaded family (c={fc})"
                    )));
                }
            }
            if let Some(d) = a.d {
                if d != fd {
                    return Err(usage(format!(
                        "--d {d} does not match the loaded family (d={fd})"
                    )));
                }
            }
        }
    }
    if let Some(s) = a.seed {
        if header.seed != Some(s) {
            let stored = header
                .seed
                .map_or_else(|| "none".to_string(), |v| v.to_string());
            return Err(usage(format!(
                "--seed {s} does not match the loaded family (seed {stored})"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

fn eval_cmd(a: EvalArgs) -> CmdResult {
    let ds = load_dataset(&a.data[0], &a.data[1])?;
    let (record_codes, record_side) =
        io::load_codes(&a.codes[0]).map_err(|e| read_err(&a.codes[0], e))?;
    let (query_codes, query_side) =
        io::load_codes(&a.codes[1]).map_err(|e| read_err(&a.codes[1], e))?;
    if record_side.method != query_side.method
        || record_side.bits != query_side.bits
        || record_side.c != query_side.c
        || record_side.d != query_side.d
        || record_side.seed != query_side.seed
    {
        return Err(data(
            "record and query codes were not produced by the same family (sidecars disagree)",
        ));
    }
    if record_codes.len() != ds.records().len() {
        return Err(data(format!(
            "{} holds {} codes but {} holds {} vectors",
            a.codes[0].display(),
            record_codes.len(),
            a.data[0].display(),
            ds.records().len()
        )));
    }
    if query_codes.len() != ds.queries().len() {
        return Err(data(format!(
            "{} holds {} codes but {} holds {} vectors",
            a.codes[1].display(),
            query_codes.len(),
            a.data[1].display(),
            ds.queries().len()
        )));
    }
    let seed = record_side.seed.ok_or_else(|| {
        data(format!(
            "{}.json records no seed; re-encode with --seed so results carry their provenance",
            a.codes[0].display()
        ))
    })?;
    let k = resolve_k(a.k, a.k_percent, ds.records().len())?
        .unwrap_or_else(|| eval::default_k(ds.records().len()));
    let truth = eval::ground_truth(&ds, k).map_err(data_err)?;
    let mean_recall =
        eval::mean_recall_from_codes(&truth, &record_codes, &query_codes).map_err(data_err)?;
    let row = RecallResult {
        method: record_side.method,
        c: record_side.c,
        d: record_side.d,
        bits: record_side.bits,
        k,
        seed,
        mean_recall,
    };

    let mut out = create_out(&a.out)?;
    if a.out.extension().and_then(|e| e.to_str()) == Some("json") {
        serde_json::to_writer_pretty(&mut out, &row).map_err(|e| data(e.to_string()))?;
        writeln!(out).map_err(wio)?;
    } else {
        writeln!(out, "{CSV_VERSION_LINE}").map_err(wio)?;
        writeln!(out, "{RECALL_HEADER}").map_err(wio)?;
        writeln!(out, "{}", recall_csv_row(&row)).map_err(wio)?;
    }
    out.flush().map_err(wio)?;

    println!(
        "mean recall@{} over {} queries: {:.4} ({}, B={}, seed {}) -> {}",
        k,
        ds.queries().len(),
        mean_recall,
        row.method,
        row.bits,
        seed,
        a.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

fn sweep(a: SweepArgs) -> CmdResult {
    let methods = dedup_methods(&a.methods);
    if !methods.contains(&Method::Eh) {
        return Err(usage(
            "--methods must include eh; the sweep varies its (c, d) parameters",
        ));
    }
    let baselines: Vec<Method> = methods.into_iter().filter(|&m| m != Method::Eh).collect();
    let ds = load_dataset(&a.data[0], &a.data[1])?;
    let grid = match (a.c_grid, a.d_grid) {
        (Some(c), Some(d)) => SweepGrid::new(c, d)?,
        (None, None) => SweepGrid::default_for(&ds).map_err(data_err)?,
        (Some(c), None) => {
            SweepGrid::new(c, SweepGrid::default_for(&ds).map_err(data_err)?.d_values)?
        }
        (None, Some(d)) => {
            SweepGrid::new(SweepGrid::default_for(&ds).map_err(data_err)?.c_values, d)?
        }
    };
    let k = resolve_k(a.k, a.k_percent, ds.records().len())?;
    let outcome = eval::sweep(&ds, &grid, a.bits, k, &baselines, Seed(a.seed))?;

    let mut out = create_out(&a.out)?;
    writeln!(out, "{CSV_VERSION_LINE}").map_err(wio)?;
    writeln!(out, "{RECALL_HEADER}").map_err(wio)?;
    for row in &outcome.rows {
        writeln!(out, "{}", recall_csv_row(row)).map_err(wio)?;
    }
    writeln!(out, "# c_opt,{}", outcome.c_opt).map_err(wio)?;
    writeln!(out, "# d_opt,{}", outcome.d_opt).map_err(wio)?;
    writeln!(out, "# best_recall,{}", outcome.best_recall).map_err(wio)?;
    out.flush().map_err(wio)?;

    println!(
        "swept a {}x{} (c, d) grid at B={} (k={}, seed {}): best mean recall {:.4} at c={}, d={}",
        grid.c_values.len(),
        grid.d_values.len(),
        a.bits,
        outcome.rows[0].k,
        a.seed,
        outcome.best_recall,
        outcome.c_opt,
        outcome.d_opt
    );
    for row in &outcome.rows[outcome.rows.len() - baselines.len()..] {
        println!("  baseline {}: {:.4}", row.method, row.mean_recall);
    }
    println!("wrote {} rows to {}", outcome.rows.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ratio

fn ratio(a: RatioArgs) -> CmdResult {
    let records = load_vectors(&a.data)?;
    let ds = Dataset::new(name_of(&a.data), records, Vec::new()).map_err(data_err)?;
    let mut grid = match a.d_grid {
        Some(g) => g,
        None => SweepGrid::default_for(&ds).map_err(data_err)?.d_values,
    };
    grid.sort_unstable_by(f64::total_cmp);
    grid.dedup();

    let mut out = create_out(&a.out)?;
    writeln!(out, "{CSV_VERSION_LINE}").map_err(wio)?;
    writeln!(out, "d,ratio").map_err(wio)?;
    for &d in &grid {
        writeln!(out, "{},{}", d, eval::ratio(&ds, d)?).map_err(wio)?;
    }
    out.flush().map_err(wio)?;

    match eval::d_star(&ds, &grid) {
        Ok(s) => println!(
            "d_star for {} ({} records, {}-d): exact {:.6}, on this grid {:.6}",
            ds.name(),
            ds.records().len(),
            ds.dim(),
            s.exact,
            s.on_grid
        ),
        Err(_) => {
            // The grid never crosses 99%, so report the exact radius against
            // a sentinel beyond every record and say the grid missed it.
            let beyond = ds
                .records()
                .iter()
                .map(|x| eclipsehash::linalg::norm(x))
                .fold(0.0f64, f64::max)
                + 1.0;
            let s = eval::d_star(&ds, &[beyond]).map_err(data_err)?;
            println!(
                "d_star for {} ({} records, {}-d): exact {:.6}, beyond the supplied grid",
                ds.name(),
                ds.records().len(),
                ds.dim(),
                s.exact
            );
        }
    }
    println!("wrote {} (d, ratio) rows to {}", grid.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

fn bench(a: BenchArgs) -> CmdResult {
    let methods = dedup_methods(&a.methods);
    let seed = Seed(a.seed);
    let data = match &a.data {
        Some(path) => load_vectors(path)?,
        None => io::gen_synthetic(a.dim, a.vectors, 0, seed)?.into_parts().0,
    };
    let dim = data[0].len();

    let mut rows = Vec::new();
    for &bits in &a.bits_list {
        for &method in &methods {
            let (c, d) = if method == Method::Eh {
                (Some(a.c), Some(a.d))
            } else {
                (None, None)
            };
            // Every family starts from a fresh stream of the same seed, so
            // methods share their Gaussian draws where shapes match.
            let family = HashFamily::sample(
                method,
                dim,
                bits,
                c,
                d,
                &mut seed.stream(StreamPurpose::Family),
            )?;
            let timing = eval::bench_hash(&family, &data, a.repeats)?;
            println!(
                "  {} B={}: {:.3e} s/vector (median of {} passes)",
                method, bits, timing.per_vector_seconds, a.repeats
            );
            rows.push(timing);
        }
    }

    let mut out = create_out(&a.out)?;
    writeln!(out, "{CSV_VERSION_LINE}").map_err(wio)?;
    writeln!(out, "# dim,{dim}").map_err(wio)?;
    writeln!(out, "# vectors,{}", data.len()).map_err(wio)?;
    writeln!(out, "# repeats,{}", a.repeats).map_err(wio)?;
    writeln!(out, "# seed,{}", a.seed).map_err(wio)?;
    writeln!(out, "method,B,per_vector_seconds").map_err(wio)?;
    for t in &rows {
        writeln!(out, "{},{},{}", t.method, t.bits, t.per_vector_seconds).map_err(wio)?;
    }
    out.flush().map_err(wio)?;
    println!("wrote {} timings to {}", rows.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// connectivity

fn connectivity(a: ConnectivityArgs) -> CmdResult {
    if !(1..=2).contains(&a.dim) {
        return Err(usage(format!("--dim must be 1 or 2, got {}", a.dim)));
    }
    let (c, d) = parse_params(a.params.as_deref(), a.method)?;
    let family = HashFamily::sample(
        a.method,
        a.dim,
        a.bits,
        c,
        d,
        &mut Seed(a.seed).stream(StreamPurpose::Family),
    )?;
    let bounds = match a.box_ {
        Some((lo, hi)) => GridBox::cube(lo, hi, a.dim)?,
        None => suggested_box(&family, 0.25)?,
    };
    let counts = connectivity_check(&family, &bounds, a.resolution, a.compactify)?;
    let components: BTreeMap<String, usize> = counts
        .iter()
        .map(|(code, &n)| (code.to_string(), n))
        .collect();

    let report = serde_json::json!({
        "method": a.method,
        "bits": a.bits,
        "dim": a.dim,
        "seed": a.seed,
        "resolution": a.resolution,
        "compactify": a.compactify,
        "box": { "min": bounds.min(), "max": bounds.max() },
        "components": components,
    });
    let mut out = create_out(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| data(e.to_string()))?;
    writeln!(out).map_err(wio)?;
    out.flush().map_err(wio)?;

    let split: Vec<(&String, usize)> = components
        .iter()
        .filter(|&(_, &n)| n > 1)
        .map(|(code, &n)| (code, n))
        .collect();
    println!(
        "{} {} codes observed at resolution {}; {} split into multiple pieces; wrote {}",
        components.len(),
        a.method,
        a.resolution,
        split.len(),
        a.out.display()
    );
    if a.method == Method::Eh {
        if let Some((code, n)) = split.first() {
            return Err(Failure::Invariant(format!(
                "eh code {code} occupies {n} disconnected regions"
            )));
        }
    }
    Ok(())
}

/// Parses `--params` ("c=0,d=32"): both keys required for eh, none allowed
/// for any other method.
fn parse_params(
    params: Option<&str>,
    method: Method,
) -> Result<(Option<f64>, Option<f64>), Failure> {
    let Some(s) = params else {
        return if method == Method::Eh {
            Err(usage("eh needs --params \"c=<height>,d=<scale>\""))
        } else {
            Ok((None, None))
        };
    };
    if method != Method::Eh {
        return Err(usage(format!("--params applies only to eh, not {method}")));
    }
    let (mut c, mut d) = (None, None);
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((key, value)) = part.split_once('=') else {
            return Err(usage(format!("bad parameter `{part}`; expected key=value")));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad number in `{part}`")))?;
        match key.trim() {
            "c" => c = Some(value),
            "d" => d = Some(value),
            other => {
                return Err(usage(format!("unknown parameter `{other}`; eh takes c and d")));
            }
        }
    }
    if c.is_none() || d.is_none() {
        return Err(usage("eh needs both c and d in --params"));
    }
    Ok((c, d))
}
