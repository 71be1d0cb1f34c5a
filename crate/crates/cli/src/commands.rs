use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qrmap::codec::{encode_program_with, program_stats, EncodeOptions, RoundingMode};
use qrmap::ir::print;
use qrmap::model::{Condition, Program, VertexId};
use qrmap::qrio::{capacity_report, embed, encode_symbol, symbol_version, ImageFormat, QrParams};
use qrmap::routing::{describe_route, Network, SearchRequest};
use qrmap::vm::{format_transcript, VmOptions};
use serde_json::json;

use crate::args::{CompileArgs, DecompileArgs, InspectArgs, RouteArgs, RunArgs};
use crate::input::load_path;
use crate::session::{parse_answers, render_event, Session};
use crate::summary::ProgramSummary;

pub fn float_options(lossy: bool) -> EncodeOptions {
    EncodeOptions {
        float_mode: if lossy {
            RoundingMode::RoundNearest
        } else {
            RoundingMode::Exact
        },
    }
}

fn load(path: &Path) -> Result<Program> {
    load_path(path)
        .map(|l| l.program)
        .with_context(|| format!("loading {}", path.display()))
}

pub fn vertex(n: u64, program: &Program) -> Result<VertexId> {
    VertexId::from_one_based(n)
        .filter(|v| v.index() < program.graph.len())
        .ok_or_else(|| {
            anyhow!(
                "vertex {n} does not exist (the graph has {} vertices, numbered from 1)",
                program.graph.len()
            )
        })
}

fn write_json(out: &mut impl Write, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn image_format(args: &CompileArgs, path: &Path) -> ImageFormat {
    args.format
        .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("svg") => ImageFormat::Svg,
            _ => ImageFormat::Png,
        })
}

pub fn compile(args: &CompileArgs, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let program = load(&args.input)?;
    let options = float_options(args.lossy_floats);
    let encoded = encode_program_with(&program, options)?;
    let format = program.header.effective_float_format();
    for q in &encoded.quantized {
        writeln!(
            err,
            "warning: float {:?} → {:?} ({} exponent bits, {} mantissa bits)",
            q.original, q.encoded, format.exp_bits, format.mant_bits
        )?;
    }
    let bytes = encoded.stream.as_bytes();
    let bin = args
        .output
        .clone()
        .unwrap_or_else(|| args.input.with_extension("qrmap-bin"));
    if bin == args.input {
        bail!(
            "output {} would overwrite the input; pass --output",
            bin.display()
        );
    }
    std::fs::write(&bin, bytes).with_context(|| format!("writing {}", bin.display()))?;
    let report = program_stats(&program, options)?;

    let mut qr = None;
    if let Some(path) = &args.qr {
        let params = QrParams {
            version: args.qr_version,
            ec: args.ec_level,
            scale: args.scale,
            format: image_format(args, path),
        };
        let version = symbol_version(&encode_symbol(bytes, params.version, params.ec)?);
        let image = embed(bytes, &params)?;
        std::fs::write(path, image).with_context(|| format!("writing {}", path.display()))?;
        qr = Some((path, version, params));
    }

    if args.json {
        let quantized: Vec<_> = encoded
            .quantized
            .iter()
            .map(|q| json!({ "original": q.original, "encoded": q.encoded }))
            .collect();
        let qr = qr.map(|(path, version, params)| {
            json!({ "path": path, "version": version, "ec_level": params.ec, "format": params.format })
        });
        return write_json(
            out,
            &json!({ "output": bin, "size": report, "quantized": quantized, "qr": qr }),
        );
    }
    writeln!(out, "wrote {} ({} bytes)", bin.display(), bytes.len())?;
    write!(out, "{report}")?;
    if let Some((path, version, params)) = qr {
        writeln!(
            out,
            "wrote {} (QR version {version}, EC {})",
            path.display(),
            params.ec
        )?;
    }
    Ok(())
}

pub fn decompile(args: &DecompileArgs, out: &mut impl Write) -> Result<()> {
    let text = print(&load(&args.input)?);
    match &args.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn inspect(args: &InspectArgs, out: &mut impl Write) -> Result<()> {
    let program = load(&args.input)?;
    let summary = ProgramSummary::of(&program);
    let report = program_stats(&program, float_options(args.lossy_floats))?;
    let capacity = capacity_report(report.bytes);
    if args.json {
        return write_json(
            out,
            &json!({ "summary": summary, "size": report, "qr": capacity }),
        );
    }
    write!(out, "{summary}")?;
    write!(out, "{report}")?;
    let versions: Vec<String> = capacity
        .iter()
        .map(|c| match c.min_version {
            Some(v) => format!("{} v{v}", c.ec),
            None => format!("{} too large", c.ec),
        })
        .collect();
    writeln!(out, "smallest QR symbol: {}", versions.join(", "))?;
    Ok(())
}

pub fn run(args: &RunArgs, input: &mut impl BufRead, out: &mut impl Write) -> Result<()> {
    let program = load(&args.input)?;
    let options = VmOptions {
        origin: args.origin.map(|n| vertex(n, &program)).transpose()?,
        default_weight: args.default_weight,
        ..VmOptions::default()
    };
    let transcript_to_stdout = args.transcript.as_deref() == Some(Path::new("-"));
    let mut sink = std::io::sink();
    let human: &mut dyn Write = if transcript_to_stdout { &mut sink } else { out };
    let mut session = Session::start(&program, options, human)?;
    match &args.answers {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            session.run_scripted(&parse_answers(&text)?)?;
        }
        None => session.run_interactive(input)?,
    }
    let state = session.into_state();
    let transcript = format_transcript(state.transcript());
    match &args.transcript {
        Some(_) if transcript_to_stdout => out.write_all(transcript.as_bytes())?,
        Some(path) => std::fs::write(path, transcript)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {}
    }
    Ok(())
}

pub fn route(args: &RouteArgs, out: &mut impl Write) -> Result<()> {
    let program = load(&args.input)?;
    let origin = match args.origin {
        Some(n) => vertex(n, &program)?,
        None => program
            .header
            .origin
            .ok_or_else(|| anyhow!("the program defines no origin; pass --origin"))?,
    };
    let (condition, weight) = match args.quick {
        Some(i) => {
            let qc = program
                .quick_choices
                .get(i)
                .ok_or_else(|| anyhow!("quick choice {i} does not exist"))?;
            (qc.condition.clone(), qc.weight_attr.clone())
        }
        None => {
            let targets = args
                .to
                .iter()
                .map(|&n| vertex(n, &program).map(Condition::node_is))
                .collect::<Result<Vec<_>>>()?;
            let condition =
                Condition::any_of(targets).ok_or_else(|| anyhow!("pass --to or --quick"))?;
            (condition, args.weight.clone())
        }
    };
    let network = Network::new(&program)?;
    let request = SearchRequest {
        default_weight: args.default_weight,
        ..SearchRequest::new(origin, weight.clone(), condition)
    };
    let route = network.shortest_path(&request)?;
    let steps = describe_route(&network, &route, &weight);
    let unit = route
        .unit
        .and_then(|u| program.unit_symbol(u))
        .map(str::to_string);
    if args.json {
        return write_json(
            out,
            &json!({ "route": route, "steps": steps, "unit": unit }),
        );
    }
    render_event(&qrmap::vm::Event::RouteFound { route, steps, unit }, out)?;
    Ok(())
}
