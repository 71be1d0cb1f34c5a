//! One line per primary acceptance criterion. Run with
//! `cargo test -p qrmap-core --test acceptance`.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are expected to fail; the run only
//! errors if the set of failures differs from that list.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use qrmap::codec::{
    decode_bytes, decode_minifloat, decode_program, encode_minifloat, encode_program,
    encode_program_with, program_stats, BitStream, DecodeError, EncodeError, EncodeOptions,
    MinifloatError, RoundingMode, DIALECT_QRMAP, FORMAT_VERSION, MAGIC, QR_CAPACITY_BITS,
};
use qrmap::corpus::{plant, PLANT_IR};
use qrmap::ir::{parse_program, print};
use qrmap::model::{validate, Condition, FloatFormat, VertexId};
use qrmap::qrio::{embed, extract, EcLevel, QrError, QrParams};
use qrmap::routing::{brute_force_path, shortest_path, RouteError, SearchRequest};
use qrmap::vm::{format_transcript, run_script, ScriptInput, VmOptions};
use rand::Rng;

const GOLDEN_ROUND_TRIP_LIMIT: Duration = Duration::from_secs(1);
const ROUTING_ORACLE_LIMIT: Duration = Duration::from_secs(10);
const ROUTING_GRAPHS: usize = 200;
const FUZZ_INPUTS: usize = 100_000;
/// Costs and minifloat values are compared with zero tolerance.
const COST_TOLERANCE: f64 = 0.0;
const REFERENCE_BITS: usize = 3241;

/// The 5.4 m arc is not a (3,4) minifloat, so an exact encoding is refused and
/// the rounded encoding decodes to 5.5 m, which is not structurally equal.
const KNOWN_UNATTAINABLE: &[&str] = &["golden round-trip"];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lossy() -> EncodeOptions {
    EncodeOptions {
        float_mode: RoundingMode::RoundNearest,
    }
}

fn golden_round_trip() -> Outcome {
    let t = Instant::now();
    let original = parse_program(PLANT_IR).map_err(|e| e.to_string())?;
    let report = validate(&original);
    check(
        report.errors().count() == 0,
        format!("validation: {report}"),
    )?;

    let mut notes = Vec::new();
    let stream = match encode_program(&original) {
        Ok(s) => s,
        Err(EncodeError::FloatNotRepresentable { value, nearest }) => {
            notes.push(format!("exact encode refused {value} (nearest {nearest})"));
            encode_program_with(&original, lossy())
                .map_err(|e| e.to_string())?
                .stream
        }
        Err(e) => return Err(e.to_string()),
    };
    let decoded = decode_program(&stream).map_err(|e| e.to_string())?;
    let reprinted = parse_program(&print(&decoded)).map_err(|e| e.to_string())?;
    let equal = reprinted == original;
    if !equal {
        notes.push("decoded program differs from the listing".into());
    }

    let again = encode_program(&reprinted).map_err(|e| e.to_string())?;
    let identical = again == stream;
    notes.push(format!("recompile bit-identical: {identical}"));
    let elapsed = t.elapsed();
    notes.push(format!("{elapsed:.2?} (limit {GOLDEN_ROUND_TRIP_LIMIT:?})"));
    let detail = notes.join("; ");
    check(
        equal && identical && elapsed < GOLDEN_ROUND_TRIP_LIMIT,
        detail.clone(),
    )?;
    Ok(detail)
}

fn capacity_budget() -> Outcome {
    let report = program_stats(&plant(), lossy()).map_err(|e| e.to_string())?;
    let headline = report
        .to_string()
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let detail = format!(
        "{headline}; largest section {}; reference figure {REFERENCE_BITS} bits",
        report.largest_section()
    );
    check(
        report.bits <= QR_CAPACITY_BITS && report.fits(),
        detail.clone(),
    )?;
    Ok(detail)
}

fn any_of(targets: &[usize]) -> Condition {
    Condition::any_of(
        targets
            .iter()
            .map(|&t| Condition::node_is(VertexId::from(t))),
    )
    .expect("non-empty")
}

fn routing_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(2024);
    let mut reachable = 0;
    for i in 0..ROUTING_GRAPHS {
        let n = rng.random_range(1..=10);
        let program = common::random_network(&mut rng, n, 3 * n);
        let origin = rng.random_range(0..n);
        let mut targets: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        if targets.is_empty() {
            targets.push(rng.random_range(0..n));
        }
        let req = SearchRequest::new(VertexId::from(origin), "length", any_of(&targets));
        let fast = shortest_path(&program, &req);
        let slow = brute_force_path(&program, &req);
        let reference = common::reference_route(&program, origin, &targets);
        match (fast, slow, reference) {
            (Ok(a), Ok(b), Some((cost, path))) => {
                reachable += 1;
                let fast_path: Vec<usize> = a.vertices.iter().map(|v| v.index()).collect();
                check(
                    (a.total_cost - b.total_cost).abs() <= COST_TOLERANCE
                        && (a.total_cost - cost).abs() <= COST_TOLERANCE
                        && a == b
                        && fast_path == path,
                    format!("graph {i}: {a:?} vs {b:?} vs {path:?}"),
                )?;
            }
            (Err(RouteError::Unreachable(_)), Err(RouteError::Unreachable(_)), None) => {}
            (a, b, c) => return Err(format!("graph {i}: {a:?} / {b:?} / {c:?}")),
        }
    }
    let elapsed = t.elapsed();
    let detail = format!("{ROUTING_GRAPHS} graphs, {reachable} reachable, {elapsed:.2?} (limit {ROUTING_ORACLE_LIMIT:?})");
    check(elapsed < ROUTING_ORACLE_LIMIT, detail.clone())?;
    Ok(detail)
}

fn worked_routes() -> Outcome {
    let program = plant();
    let mut parts = Vec::new();
    for (origin, target, path, cost) in [
        (6, 1, [6, 5, 4, 2, 1].as_slice(), 21.9),
        (3, 4, [3, 2, 4].as_slice(), 9.5),
    ] {
        let req = SearchRequest::new(VertexId::from(origin - 1), "length", any_of(&[target - 1]));
        let route = shortest_path(&program, &req).map_err(|e| e.to_string())?;
        let oracle = brute_force_path(&program, &req).map_err(|e| e.to_string())?;
        let got: Vec<usize> = route.vertices.iter().map(|v| v.index() + 1).collect();
        let unit = route
            .unit
            .map(|u| program.header.units[u.index()].symbol.as_str());
        let line = format!("{got:?} {} {}", route.total_cost, unit.unwrap_or("?"));
        check(
            got == path
                && (route.total_cost - cost).abs() <= COST_TOLERANCE
                && route == oracle
                && unit == Some("m"),
            format!("{origin} -> {target}: {line}"),
        )?;
        parts.push(line);
    }
    Ok(parts.join(", "))
}

fn golden(name: &str) -> Result<String, String> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name]
        .iter()
        .collect();
    std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))
}

fn vm_transcripts() -> Outcome {
    let program = plant();
    let options = VmOptions {
        origin: Some(VertexId(1)),
        ..VmOptions::default()
    };
    let sessions: [(&str, &[&str]); 3] = [
        ("emergency.transcript", &["Emergency"]),
        ("assembly_line_8.transcript", &["Assembly line", "8"]),
        ("assembly_line_15.transcript", &["Assembly line", "15"]),
    ];
    for (file, answers) in sessions {
        let inputs: Vec<ScriptInput> = answers
            .iter()
            .map(|a| ScriptInput::Answer(a.to_string()))
            .collect();
        let expected = golden(file)?;
        let runs: Vec<String> = (0..3)
            .map(|_| {
                run_script(&program, options.clone(), &inputs)
                    .map(|s| format_transcript(s.transcript()))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        check(
            runs.iter().all(|r| *r == expected),
            format!("{file} differs:\n{}", runs[0]),
        )?;
    }
    Ok(format!(
        "{} sessions byte-identical over 3 runs",
        sessions.len()
    ))
}

fn minifloat() -> Outcome {
    let f = FloatFormat::new(3, 4);
    let mut representable = 0;
    for bits in 0u32..256 {
        match decode_minifloat(bits, f) {
            Ok(v) => {
                representable += 1;
                let back =
                    encode_minifloat(v, f, RoundingMode::Exact).map_err(|e| e.to_string())?;
                check(
                    back.value.to_bits() == v.to_bits(),
                    format!("pattern {bits:#x}: {v} -> {}", back.value),
                )?;
            }
            Err(MinifloatError::ReservedExponent(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    check(
        encode_minifloat(5.0, f, RoundingMode::Exact).is_ok(),
        "5.0 rejected",
    )?;
    let rejected = matches!(
        encode_minifloat(5.4, f, RoundingMode::Exact),
        Err(MinifloatError::NotRepresentable { .. })
    );
    check(rejected, "5.4 accepted in exact mode")?;
    let rounded =
        encode_minifloat(5.4, f, RoundingMode::RoundNearest).map_err(|e| e.to_string())?;
    check(
        rounded.value == 5.5,
        format!("5.4 rounded to {}", rounded.value),
    )?;

    let mut rng = common::rng(99);
    let samples = 20_000;
    for _ in 0..samples {
        let format = FloatFormat::new(rng.random_range(2..=8), rng.random_range(1..=23));
        let x = if rng.random_bool(0.5) {
            common::representable(&mut rng, format)
        } else {
            f64::from(rng.random_range(-100_000i32..100_000))
                / f64::from(rng.random_range(1..=1000))
        };
        let exact = encode_minifloat(x, format, RoundingMode::Exact);
        let round_trips = match encode_minifloat(x, format, RoundingMode::RoundNearest) {
            Ok(code) => decode_minifloat(code.bits, format).is_ok_and(|y| y == x),
            Err(_) => false,
        };
        check(exact.is_ok() == round_trips, format!("{x} in {format:?}"))?;
    }
    Ok(format!(
        "{representable}/256 patterns decode and re-encode; 5.4 -> 5.5; {samples} random widths"
    ))
}

fn fuzz() -> Outcome {
    let mut rng = common::rng(7);
    let mut crashes = 0;
    let mut accepted = 0;
    let [m0, m1] = MAGIC.to_be_bytes();
    let frame = [m0, m1, (DIALECT_QRMAP << 4) | FORMAT_VERSION];
    for i in 0..FUZZ_INPUTS {
        let len = rng.random_range(0..96);
        let mut bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        // half of the inputs carry a valid frame so the section decoders are reached
        if i % 2 == 0 && bytes.len() >= 3 {
            bytes[..3].copy_from_slice(&frame);
        }
        match catch_unwind(AssertUnwindSafe(|| decode_bytes(&bytes))) {
            Err(_) => crashes += 1,
            Ok(Ok(p)) => {
                accepted += 1;
                check(
                    validate(&p).is_valid(),
                    "decoder returned an invalid program",
                )?;
            }
            Ok(Err(_)) => {}
        }
    }
    check(crashes == 0, format!("{crashes} panics on random input"))?;

    let golden = encode_program_with(&plant(), lossy())
        .map_err(|e| e.to_string())?
        .stream;
    let mut other = Vec::new();
    for len in 0..golden.len() {
        let mut cut: BitStream = golden.clone();
        cut.truncate(len);
        match catch_unwind(AssertUnwindSafe(|| decode_program(&cut))) {
            Err(_) => return Err(format!("panic on truncation to {len} bits")),
            Ok(Err(DecodeError::TruncatedStream { .. } | DecodeError::Invalid(_))) => {}
            Ok(r) => other.push(format!("{len}: {r:?}")),
        }
    }
    check(
        other.is_empty(),
        format!("unexpected truncation results: {}", other.join("; ")),
    )?;
    Ok(format!(
        "{FUZZ_INPUTS} random inputs, 0 panics, {accepted} accepted; {} truncations rejected",
        golden.len()
    ))
}

fn qr_round_trip() -> Outcome {
    let mut rng = common::rng(1);
    for len in [0usize, 1, 100, 2953] {
        let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let png = embed(&payload, &QrParams::default()).map_err(|e| format!("{len} bytes: {e}"))?;
        let back = extract(&png).map_err(|e| format!("{len} bytes: {e}"))?;
        check(
            back == payload,
            format!("{len} bytes came back as {}", back.len()),
        )?;
    }
    let over = vec![0u8; 2954];
    let rejected = matches!(
        embed(&over, &QrParams::default()),
        Err(QrError::PayloadTooLarge { .. })
    );
    check(rejected, "2954 bytes accepted")?;
    Ok(format!(
        "0, 1, 100, 2953 bytes at EC {}; 2954 rejected",
        EcLevel::L
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden round-trip", golden_round_trip),
        ("capacity budget", capacity_budget),
        ("routing oracle equivalence", routing_oracle),
        ("worked-example routes", worked_routes),
        ("vm golden transcripts", vm_transcripts),
        ("minifloat correctness", minifloat),
        ("fuzz safety", fuzz),
        ("qr round-trip", qr_round_trip),
    ];
    let mut out = std::io::stdout().lock();
    let mut unexpected = Vec::new();
    for (name, run) in criteria {
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let known = KNOWN_UNATTAINABLE.contains(&name);
        let line = match (&outcome, known) {
            (Ok(d), false) => format!("PASS {name}: {d}"),
            (Err(d), true) => format!("FAIL {name} (known unattainable): {d}"),
            (Err(d), false) => {
                unexpected.push(name);
                format!("FAIL {name}: {d}")
            }
            (Ok(d), true) => {
                unexpected.push(name);
                format!("PASS {name} (listed as unattainable; update the list): {d}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    if !unexpected.is_empty() {
        writeln!(out, "unexpected results: {}", unexpected.join(", ")).unwrap();
        std::process::exit(1);
    }
}
