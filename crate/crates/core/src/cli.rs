//! Command-line surface: decompose, reconstruct, export, inspect, benchmark,
//! and generate fixtures.
//!
//! Exit codes are a stable contract: 0 success, 1 I/O, 2 usage or range
//! errors, 3 data corruption. Every run is reproducible from the config echo
//! embedded in its outputs. HEXASHRINK_THREADS caps worker parallelism.

use crate::codec::{compress_payload, CodecId};
use crate::container;
use crate::entropy::entropy_report;
use crate::error::{Error, Result};
use crate::grdecl::{self, LevelTag, ParseOptions};
use crate::grid::{
    CornerPointModel, GridDims, HorizontalFaultPolicy, PropertyKind, QuantizationParams,
};
use crate::props::footprint;
use crate::pyramid::{
    analyze_streaming, synthesize_to_level, CodecConfig, Pyramid, SlabPlan,
};
use crate::synthetic::{self, GeneratorSpec};
use crate::vtk::{export_vtk, VtkOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "hexashrink",
    version,
    about = "Exactly reversible multiresolution decomposition of corner-point meshes"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose a GRDECL model into a multiresolution .hxs container.
    Decompose(DecomposeArgs),
    /// Reconstruct one resolution level from a container as GRDECL.
    Reconstruct(ReconstructArgs),
    /// Export one resolution level as a legacy-text VTK unstructured grid.
    ExportVtk(ExportVtkArgs),
    /// Per-level histograms, continuous ranges, and chunk statistics.
    Stats(StatsArgs),
    /// Compression-ratio and timing tables over synthetic fixtures.
    Bench(BenchArgs),
    /// Generate a synthetic corner-point model.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CodecArg {
    Store,
    Deflate,
    BwtBlock,
    LzMarkov,
}

impl From<CodecArg> for CodecId {
    fn from(c: CodecArg) -> CodecId {
        match c {
            CodecArg::Store => CodecId::Store,
            CodecArg::Deflate => CodecId::Deflate,
            CodecArg::BwtBlock => CodecId::BwtBlock,
            CodecArg::LzMarkov => CodecId::LzMarkov,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Args, Debug)]
struct QuantArgs {
    /// Geometry scale exponent (coordinates quantized at 10^E per unit).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(0..=9))]
    geom_scale: u8,
    /// Continuous-property scale exponent.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=9))]
    prop_scale: u8,
}

impl QuantArgs {
    fn params(&self) -> QuantizationParams {
        QuantizationParams {
            geom_exp: self.geom_scale,
            prop_exp: self.prop_scale,
        }
    }
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Input GRDECL file.
    input: PathBuf,
    /// Output container path.
    #[arg(short, long)]
    output: PathBuf,
    /// Decomposition depth (1..=max for the grid).
    #[arg(long, default_value_t = 1)]
    levels: u32,
    /// Codec for every payload kind.
    #[arg(long, value_enum, default_value = "deflate")]
    codec: CodecArg,
    /// Override the codec for one payload kind (repeatable):
    /// approx|detail|activity|selection=CODEC.
    #[arg(long = "codec-for", value_name = "KIND=CODEC")]
    codec_for: Vec<String>,
    /// Force a property kind (repeatable): NAME=continuous|categorical.
    #[arg(long = "kind", value_name = "NAME=KIND")]
    kinds: Vec<String>,
    /// Fault-equality tolerance in quantized z units (recorded in the
    /// container when nonzero).
    #[arg(long, default_value_t = 0)]
    epsilon: i64,
    /// Divert horizontal-fault top corners into a side channel instead of
    /// rejecting the model.
    #[arg(long)]
    allow_horizontal_faults: bool,
    /// Stream the base level in this many k-slabs.
    #[arg(long, default_value_t = 1)]
    slabs: usize,
    #[command(flatten)]
    quant: QuantArgs,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Input container.
    input: PathBuf,
    /// Resolution level to reconstruct (0 = original, negative = coarser).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    level: i32,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ExportVtkArgs {
    /// Input container.
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    level: i32,
    #[arg(short, long)]
    output: PathBuf,
    /// Emit inactive cells too, flagged by an ACTNUM array.
    #[arg(long)]
    keep_inactive: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Input container (.hxs) or GRDECL file.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    quant: QuantArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Fixture names (see `generate --help` for the set).
    #[arg(long, value_delimiter = ',', default_values_t = [
        "smooth32".to_string(), "fault16".to_string(), "interp24".to_string()
    ])]
    fixtures: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [
        CodecArg::Deflate, CodecArg::BwtBlock, CodecArg::LzMarkov
    ])]
    codecs: Vec<CodecArg>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Fixture name: flat8, smooth32, smooth64, histo64, fault16, carved16,
    /// random12, interp24, or custom via --dims.
    fixture: String,
    #[arg(short, long)]
    output: PathBuf,
    /// Override dims as NIxNJxNK.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    quant: QuantArgs,
}

fn parse_dims(text: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<_> = text.split('x').collect();
    let bad = || Error::SpecInvalid(format!("dims {text:?} are not NIxNJxNK"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0usize; 3];
    for (s, p) in out.iter_mut().zip(parts) {
        *s = p.parse().map_err(|_| bad())?;
    }
    Ok((out[0], out[1], out[2]))
}

/// Named fixture registry shared by `generate` and `bench`.
pub fn fixture_by_name(
    name: &str,
    dims: Option<(usize, usize, usize)>,
    seed: u64,
) -> Result<GeneratorSpec> {
    let d = |def: (usize, usize, usize)| dims.unwrap_or(def);
    let mut spec = match name {
        "flat8" => {
            let (a, b, c) = d((8, 8, 4));
            GeneratorSpec::flat_layered(a, b, c)
        }
        "smooth32" => {
            let (a, b, c) = d((32, 32, 32));
            GeneratorSpec::smooth(a, b, c)
        }
        "smooth64" => {
            let (a, b, c) = d((64, 64, 64));
            GeneratorSpec::smooth(a, b, c)
        }
        "histo64" => {
            let (a, b, c) = d((64, 64, 32));
            GeneratorSpec::smooth(a, b, c)
        }
        "fault16" => {
            let (a, b, c) = d((16, 16, 8));
            GeneratorSpec::single_fault(a, b, c, a / 2, 50.0)
        }
        "carved16" => {
            let (a, b, c) = d((16, 16, 8));
            GeneratorSpec::carved(a, b, c)
        }
        "random12" => {
            let (a, b, c) = d((12, 12, 12));
            GeneratorSpec::randomized(a, b, c, 2, 0.6, seed)
        }
        "interp24" => {
            let (a, b, c) = d((24, 24, 24));
            GeneratorSpec::interpolated(a, b, c)
        }
        other => {
            return Err(Error::SpecInvalid(format!(
                "unknown fixture {other:?} (expected flat8, smooth32, smooth64, histo64, fault16, carved16, random12, interp24)"
            )))
        }
    };
    spec.seed = seed;
    Ok(spec)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(Error::Io)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(Error::Io)
}

fn parse_kind_overrides(args: &[String]) -> Result<Vec<(String, PropertyKind)>> {
    args.iter()
        .map(|spec| {
            let (name, kind) = spec
                .split_once('=')
                .ok_or_else(|| Error::SpecInvalid(format!("bad --kind {spec:?}")))?;
            let kind = match kind.to_ascii_lowercase().as_str() {
                "continuous" => PropertyKind::Continuous,
                "categorical" => PropertyKind::Categorical,
                _ => return Err(Error::SpecInvalid(format!("bad property kind {kind:?}"))),
            };
            Ok((name.to_ascii_uppercase(), kind))
        })
        .collect()
}

fn codec_config(base: CodecArg, overrides: &[String]) -> Result<CodecConfig> {
    let mut cfg = CodecConfig::uniform(base.into());
    for spec in overrides {
        let (kind, codec) = spec
            .split_once('=')
            .ok_or_else(|| Error::SpecInvalid(format!("bad --codec-for {spec:?}")))?;
        let codec = CodecId::from_name(codec)?;
        match kind {
            "approx" => cfg.approx = codec,
            "detail" => cfg.detail = codec,
            "activity" => cfg.activity = codec,
            "selection" => cfg.selection = codec,
            _ => {
                return Err(Error::SpecInvalid(format!(
                    "unknown payload kind {kind:?}"
                )))
            }
        }
    }
    Ok(cfg)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<()> {
    let input = read_file(&args.input)?;
    let options = ParseOptions {
        quant: args.quant.params(),
        kind_overrides: parse_kind_overrides(&args.kinds)?,
        fault_policy: if args.allow_horizontal_faults {
            HorizontalFaultPolicy::SideChannel
        } else {
            HorizontalFaultPolicy::Reject
        },
    };
    let model = grdecl::parse(&input, &options)?;
    let plan = SlabPlan::split(model.dims.nk, args.slabs.max(1));
    let mut pyramid = analyze_streaming(&model, &plan, args.levels, args.epsilon, None)?;
    pyramid.codecs = codec_config(args.codec, &args.codec_for)?;
    let bytes = container::serialize(&pyramid);
    write_file(&args.output, &bytes)?;

    println!("config: {}", std::env::args().skip(1).collect::<Vec<_>>().join(" "));
    println!(
        "decomposed {} ({} cells) to {} levels -> {}",
        args.input.display(),
        model.dims.cell_count(),
        args.levels,
        args.output.display()
    );
    let mut dims = model.dims;
    for l in 1..=args.levels {
        dims = dims.coarsened();
        println!("  level -{l}: {}x{}x{} cells", dims.ni, dims.nj, dims.nk);
    }
    let report = entropy_report(&pyramid);
    let mut by_level: std::collections::BTreeMap<i16, (usize, usize)> = Default::default();
    for c in &report.chunks {
        let e = by_level.entry(c.level).or_default();
        e.0 += c.raw_len;
        e.1 += c.compressed_len;
    }
    for (level, (raw, comp)) in &by_level {
        println!("  chunks level {level}: {raw} raw -> {comp} compressed");
    }
    println!(
        "  container: {} bytes; ratio vs input file: {:.2}",
        bytes.len(),
        input.len() as f64 / bytes.len() as f64
    );
    Ok(())
}

fn load_pyramid(path: &Path) -> Result<Pyramid> {
    container::deserialize(&read_file(path)?)
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let pyramid = load_pyramid(&args.input)?;
    let model = synthesize_to_level(&pyramid, args.level)?;
    let tag = LevelTag {
        level: args.level,
        base_dims: pyramid.header.dims,
    };
    let bytes = grdecl::write(&model, (args.level != 0).then_some(tag));
    write_file(&args.output, &bytes)?;
    println!("config: {}", std::env::args().skip(1).collect::<Vec<_>>().join(" "));
    println!(
        "reconstructed level {} ({}x{}x{} cells) -> {}",
        args.level,
        model.dims.ni,
        model.dims.nj,
        model.dims.nk,
        args.output.display()
    );
    Ok(())
}

fn cmd_export_vtk(args: &ExportVtkArgs) -> Result<()> {
    let pyramid = load_pyramid(&args.input)?;
    let model = synthesize_to_level(&pyramid, args.level)?;
    let bytes = export_vtk(
        &model,
        &VtkOptions {
            keep_inactive: args.keep_inactive,
            level: args.level,
            base_dims: Some(pyramid.header.dims),
        },
    );
    write_file(&args.output, &bytes)?;
    println!("config: {}", std::env::args().skip(1).collect::<Vec<_>>().join(" "));
    println!(
        "exported level {} ({} cells shown) -> {}",
        args.level,
        if args.keep_inactive {
            model.dims.cell_count()
        } else {
            model.actnum.active_count()
        },
        args.output.display()
    );
    Ok(())
}

/// Per-level property statistics of one reconstructed model.
fn level_stats(
    out: &mut String,
    model: &CornerPointModel,
    level: i32,
    base: GridDims,
    format: ReportFormat,
) {
    let cells = model.dims.cell_count() as f64;
    let depth = level.unsigned_abs();
    for field in &model.properties {
        match field.kind {
            PropertyKind::Categorical => {
                let mut counts: std::collections::BTreeMap<i64, usize> = Default::default();
                for &v in &field.values {
                    *counts.entry(v).or_default() += 1;
                }
                for (class, count) in counts {
                    let p = count as f64 / cells;
                    match format {
                        ReportFormat::Text => {
                            let _ = writeln!(
                                out,
                                "  level {level} {} class {class}: {:.4}",
                                field.name, p
                            );
                        }
                        ReportFormat::Csv => {
                            let _ = writeln!(
                                out,
                                "histogram,{},{level},{class},{p:.12}",
                                field.name
                            );
                        }
                    }
                }
            }
            PropertyKind::Continuous => {
                let d = model.dims;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for k in 0..d.nk {
                    for j in 0..d.nj {
                        for i in 0..d.ni {
                            let div = footprint(&base, depth, i, j, k);
                            let v = crate::props::haar_display_value(
                                field.values[d.cell_index(i, j, k)],
                                model.quant.prop_exp,
                                div,
                            );
                            lo = lo.min(v);
                            hi = hi.max(v);
                            sum += v;
                        }
                    }
                }
                match format {
                    ReportFormat::Text => {
                        let _ = writeln!(
                            out,
                            "  level {level} {}: min {lo:.6} mean {:.6} max {hi:.6}",
                            field.name,
                            sum / cells
                        );
                    }
                    ReportFormat::Csv => {
                        let _ = writeln!(
                            out,
                            "continuous,{},{level},{lo:.6},{:.6},{hi:.6}",
                            field.name,
                            sum / cells
                        );
                    }
                }
            }
        }
    }
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let mut out = String::new();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match args.format {
        ReportFormat::Text => {
            let _ = writeln!(out, "stats ({echo})");
        }
        ReportFormat::Csv => {
            let _ = writeln!(out, "# hexashrink stats: {echo}");
        }
    }
    let is_container = read_file(&args.input)?.starts_with(&container::MAGIC);
    if is_container {
        let pyramid = load_pyramid(&args.input)?;
        let base = pyramid.header.dims;
        for t in (-(pyramid.header.levels as i32)..=0).rev() {
            match synthesize_to_level(&pyramid, t) {
                Ok(model) => level_stats(&mut out, &model, t, base, args.format),
                Err(Error::MissingChunk(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let report = entropy_report(&pyramid);
        for c in &report.chunks {
            match args.format {
                ReportFormat::Text => {
                    let _ = writeln!(
                        out,
                        "  chunk {} [{}] {} -> {} bytes, byte entropy {:.3}, zeros {:.3}",
                        c.label,
                        c.codec.name(),
                        c.raw_len,
                        c.compressed_len,
                        c.byte_entropy,
                        c.zero_ratio
                    );
                }
                ReportFormat::Csv => {
                    let _ = writeln!(
                        out,
                        "chunk,{},{},{},{},{:.4},{:.4},{:.4}",
                        c.label,
                        c.codec.name(),
                        c.raw_len,
                        c.compressed_len,
                        c.byte_entropy,
                        c.symbol_entropy,
                        c.zero_ratio
                    );
                }
            }
        }
        match args.format {
            ReportFormat::Text => {
                let _ = writeln!(
                    out,
                    "  total {} raw -> {} compressed (ratio {:.2})",
                    report.raw_total,
                    report.compressed_total,
                    report.ratio()
                );
            }
            ReportFormat::Csv => {
                let _ = writeln!(
                    out,
                    "total,,,{},{},{:.4}",
                    report.raw_total,
                    report.compressed_total,
                    report.ratio()
                );
            }
        }
    } else {
        let options = ParseOptions {
            quant: args.quant.params(),
            ..Default::default()
        };
        let model = grdecl::parse(&read_file(&args.input)?, &options)?;
        level_stats(&mut out, &model, 0, model.dims, args.format);
    }
    match &args.output {
        Some(path) => write_file(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

/// One bench row: ratios for raw and per-level containers plus timings.
pub struct BenchRow {
    pub fixture: String,
    pub codec: CodecId,
    pub raw_size: usize,
    pub ratio_none: f64,
    pub ratio_per_level: Vec<f64>,
    pub analysis_secs: f64,
    pub synthesis_secs: f64,
}

/// Measure one fixture under one codec across every level depth.
pub fn bench_fixture(spec: &GeneratorSpec, codec: CodecId) -> Result<BenchRow> {
    let quant = QuantizationParams::default();
    let model = synthetic::generate(spec, quant)?;
    let raw = grdecl::write(&model, None);
    let ratio_none = raw.len() as f64 / compress_payload(&raw, codec).len().max(1) as f64;

    let max = model.dims.max_levels();
    let mut ratio_per_level = Vec::with_capacity(max as usize);
    let mut analysis_secs = f64::INFINITY;
    let mut synthesis_secs = f64::INFINITY;
    for levels in 1..=max {
        let t0 = Instant::now();
        let mut pyramid = analyze_streaming(&model, &SlabPlan::single(model.dims.nk), levels, 0, None)?;
        let analysis = t0.elapsed().as_secs_f64();
        pyramid.codecs = CodecConfig::uniform(codec);
        let bytes = container::serialize(&pyramid);
        ratio_per_level.push(raw.len() as f64 / bytes.len().max(1) as f64);
        let t1 = Instant::now();
        let back = synthesize_to_level(&pyramid, 0)?;
        let synthesis = t1.elapsed().as_secs_f64();
        debug_assert_eq!(back, model);
        // Deepest decomposition carries the most transform work; keep the
        // fastest of the observed runs per stage to damp scheduler noise.
        if levels == max {
            analysis_secs = analysis_secs.min(analysis);
            synthesis_secs = synthesis_secs.min(synthesis);
        }
    }
    Ok(BenchRow {
        fixture: String::new(),
        codec,
        raw_size: raw.len(),
        ratio_none,
        ratio_per_level,
        analysis_secs,
        synthesis_secs,
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match args.format {
        ReportFormat::Text => println!("bench ({echo})"),
        ReportFormat::Csv => {
            println!("# hexashrink bench: {echo}");
            println!("fixture,codec,level,ratio,analysis_s,synthesis_s");
        }
    }
    for name in &args.fixtures {
        let spec = fixture_by_name(name, None, args.seed)?;
        for &codec in &args.codecs {
            let mut row = bench_fixture(&spec, codec.into())?;
            row.fixture = name.clone();
            match args.format {
                ReportFormat::Text => {
                    let deep_lo = row
                        .ratio_per_level
                        .iter()
                        .skip(1)
                        .copied()
                        .fold(f64::INFINITY, f64::min);
                    let deep_hi = row.ratio_per_level.iter().skip(1).copied().fold(0.0, f64::max);
                    println!(
                        "{} [{}] raw {} bytes | none {:.2} | 1 {:.2} | 2..{} {deep_lo:.2}-{deep_hi:.2} | analysis {:.3}s synthesis {:.3}s",
                        row.fixture,
                        row.codec.name(),
                        row.raw_size,
                        row.ratio_none,
                        row.ratio_per_level[0],
                        row.ratio_per_level.len(),
                        row.analysis_secs,
                        row.synthesis_secs,
                    );
                }
                ReportFormat::Csv => {
                    println!(
                        "{},{},none,{:.4},{:.4},{:.4}",
                        row.fixture,
                        row.codec.name(),
                        row.ratio_none,
                        row.analysis_secs,
                        row.synthesis_secs
                    );
                    for (l, r) in row.ratio_per_level.iter().enumerate() {
                        println!(
                            "{},{},{},{r:.4},,",
                            row.fixture,
                            row.codec.name(),
                            l + 1
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let dims = args.dims.as_deref().map(parse_dims).transpose()?;
    let spec = fixture_by_name(&args.fixture, dims, args.seed)?;
    let model = synthetic::generate(&spec, args.quant.params())?;
    write_file(&args.output, &grdecl::write(&model, None))?;
    println!(
        "generated {} ({}x{}x{} cells, {} properties) -> {}",
        args.fixture,
        model.dims.ni,
        model.dims.nj,
        model.dims.nk,
        model.properties.len(),
        args.output.display()
    );
    Ok(())
}

/// Entry point shared by the binary and tests.
pub fn run() -> Result<()> {
    if let Ok(threads) = std::env::var("HEXASHRINK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::ExportVtk(a) => cmd_export_vtk(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Generate(a) => cmd_generate(a),
    }
}
