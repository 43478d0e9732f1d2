//! Acceptance suite: one test per criterion, each printing a pass line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use hexashrink::codec::{compress_payload, CodecId, ALL_CODECS};
use hexashrink::container;
use hexashrink::fault::{derive_config_map, NORTH, SOUTH};
use hexashrink::grdecl;
use hexashrink::grid::{PropertyKind, QuantizationParams};
use hexashrink::lift;
use hexashrink::props;
use hexashrink::pyramid::{
    analyze_pyramid, analyze_streaming, synthesize_to_level, CodecConfig, SlabPlan,
};
use hexashrink::synthetic::{self, GeneratorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn pass(criterion: u32, name: &str, detail: String) {
    println!("criterion {criterion} ({name}): PASS — {detail}");
}

/// 1. Exact reversibility on >= 200 randomized models (dims 1..33, 0-3
/// faults, ACTNUM density 0.2..1.0, one continuous + one categorical field),
/// decomposed to max level, through the container, in under five minutes.
#[test]
fn criterion_01_exact_reversibility() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_810);
    let n_models = 200;
    for trial in 0..n_models {
        let ni = rng.gen_range(1..=33);
        let nj = rng.gen_range(1..=33);
        let nk = rng.gen_range(1..=33);
        let faults = rng.gen_range(0..=3);
        let density = rng.gen_range(0.2..=1.0);
        let spec = GeneratorSpec::randomized(ni, nj, nk, faults, density, trial as u64);
        let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
        assert_eq!(model.properties.len(), 2, "one categorical + one continuous");

        let levels = model.dims.max_levels();
        let mut pyramid = analyze_pyramid(&model, levels).unwrap();
        pyramid.codecs = CodecConfig::uniform(ALL_CODECS[trial % ALL_CODECS.len()]);
        let bytes = container::serialize(&pyramid);
        let back = container::deserialize(&bytes).unwrap();
        let restored = synthesize_to_level(&back, 0).unwrap();
        assert_eq!(restored.nodez, model.nodez, "geometry, trial {trial}");
        assert_eq!(restored.pillars, model.pillars, "pillars, trial {trial}");
        assert_eq!(restored.actnum, model.actnum, "ACTNUM, trial {trial}");
        assert_eq!(restored.properties, model.properties, "properties, trial {trial}");
        assert_eq!(restored, model, "full model, trial {trial}");
    }
    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "runtime bound: {elapsed:?} for {n_models} models"
    );
    pass(
        1,
        "exact reversibility",
        format!("{n_models} randomized models, max depth, all codecs, in {elapsed:.1?}"),
    );
}

/// 2. Border equations: 1e5 random integer signals of lengths 1..=65 keep
/// the first and last approximation pinned to the first and last sample and
/// round-trip exactly (integer tolerance 0).
#[test]
fn criterion_02_border_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 100_000;
    for trial in 0..trials {
        let n = 1 + trial % 65;
        let z: Vec<i64> = (0..n).map(|_| rng.gen_range(-1_000_000..=1_000_000)).collect();
        let pair = lift::analyze_1d(&z);
        assert_eq!(pair.approx[0], z[0], "a[0] = z[0], n={n}");
        assert_eq!(
            *pair.approx.last().unwrap(),
            *z.last().unwrap(),
            "a[last] = z[last], n={n}"
        );
        assert_eq!(lift::synthesize_1d(&pair).unwrap(), z, "roundtrip, n={n}");
    }
    pass(2, "border equations", format!("{trials} signals, lengths 1..=65"));
}

/// 3. Fault-config soundness: every assignment of up to four distinct labels
/// to the quadrants yields a configuration in the twelve-state set, never a
/// single active axis. Exhaustive, under a second.
#[test]
fn criterion_03_fault_config_soundness() {
    let t0 = Instant::now();
    let mut seen = std::collections::HashSet::new();
    // 4 labels cover every equality partition of 4 values.
    for a in 0..4i64 {
        for b in 0..4i64 {
            for c in 0..4i64 {
                for d in 0..4i64 {
                    let mut axes = 0u8;
                    if a != b {
                        axes |= NORTH;
                    }
                    if c != d {
                        axes |= SOUTH;
                    }
                    if b != d {
                        axes |= 4; // EAST
                    }
                    if a != c {
                        axes |= 8; // WEST
                    }
                    let active = axes.count_ones();
                    assert_ne!(active, 1, "single-axis config from ({a},{b},{c},{d})");
                    seen.insert(axes);
                }
            }
        }
    }
    assert_eq!(seen.len(), 12, "exactly the twelve-state set");
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    pass(
        3,
        "fault-config soundness",
        format!("256 assignments, 12 states, {elapsed:.2?}"),
    );
}

/// 4. Fault persistence: the single-fault fixture keeps its trace (active
/// axes along the fault line) in the configuration map at every level down
/// to -3.
#[test]
fn criterion_04_fault_persistence() {
    let spec = GeneratorSpec::single_fault(16, 16, 8, 8, 50.0);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let pyramid = analyze_pyramid(&model, 3).unwrap();
    for t in [0, -1, -2, -3] {
        let level = synthesize_to_level(&pyramid, t).unwrap();
        let map = derive_config_map(&level.nodez, 0);
        let trace_i = 8usize >> t.unsigned_abs();
        let nj = level.dims.nj;
        for j in 1..nj {
            let cfg = map.get(trace_i, j);
            assert!(
                cfg.has(NORTH) || cfg.has(SOUTH),
                "trace lost at level {t}, node ({trace_i}, {j})"
            );
        }
    }
    pass(4, "fault persistence", "trace active at levels 0..-3".into());
}

/// 5. Histogram coherence: 64x64x32 fixture, four rock types in layered
/// 0.4/0.3/0.2/0.1 proportions; per-class proportions at levels -1..-3 stay
/// within 5 percentage points of level 0 and the value sets nest. Under 30s.
#[test]
fn criterion_05_histogram_coherence() {
    let t0 = Instant::now();
    let spec = GeneratorSpec::smooth(64, 64, 32);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let rock = model
        .properties
        .iter()
        .find(|f| f.kind == PropertyKind::Categorical)
        .unwrap();
    assert_eq!(rock.universe.len(), 4);

    let histogram = |values: &[i64]| -> std::collections::BTreeMap<i64, f64> {
        let mut h = std::collections::BTreeMap::new();
        for &v in values {
            *h.entry(v).or_insert(0.0) += 1.0;
        }
        for p in h.values_mut() {
            *p /= values.len() as f64;
        }
        h
    };
    let base_hist = histogram(&rock.values);
    let base_classes: std::collections::BTreeSet<i64> = rock.values.iter().copied().collect();

    let pyramid = analyze_pyramid(&model, 3).unwrap();
    let mut worst: f64 = 0.0;
    for t in [-1, -2, -3] {
        let level = synthesize_to_level(&pyramid, t).unwrap();
        let field = level
            .properties
            .iter()
            .find(|f| f.kind == PropertyKind::Categorical)
            .unwrap();
        let hist = histogram(&field.values);
        let classes: std::collections::BTreeSet<i64> = field.values.iter().copied().collect();
        assert!(
            classes.is_subset(&base_classes),
            "level {t} introduced classes outside the base set"
        );
        for (&class, &p0) in &base_hist {
            let p = hist.get(&class).copied().unwrap_or(0.0);
            let dev = (p - p0).abs() * 100.0;
            worst = worst.max(dev);
            assert!(
                dev <= 5.0,
                "level {t} class {class}: {:.2}% vs {:.2}% (dev {dev:.2} pp)",
                p * 100.0,
                p0 * 100.0
            );
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime bound: {elapsed:?}");
    pass(
        5,
        "histogram coherence",
        format!("worst deviation {worst:.2} pp, {elapsed:.1?}"),
    );
}

/// 6. Sum conservation: the continuous scheme's coarse totals equal the fine
/// totals exactly at every level, on every fixture.
#[test]
fn criterion_06_sum_conservation() {
    let fixtures = [
        GeneratorSpec::smooth(16, 16, 16),
        GeneratorSpec::carved(12, 14, 10),
        GeneratorSpec::single_fault(8, 8, 8, 4, 25.0),
        GeneratorSpec::randomized(11, 9, 7, 2, 0.4, 6),
        GeneratorSpec::randomized(33, 5, 17, 3, 0.9, 7),
    ];
    let mut checked = 0;
    for spec in &fixtures {
        let mut spec = spec.clone();
        spec.porosity = true;
        let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
        let levels = model.dims.max_levels();
        let pyramid = analyze_pyramid(&model, levels).unwrap();
        for (f, info) in pyramid.header.fields.iter().enumerate() {
            if info.kind != PropertyKind::Continuous {
                continue;
            }
            let fine_total: i128 = model.properties[f].values.iter().map(|&v| v as i128).sum();
            for t in -(levels as i32)..=0 {
                let level = synthesize_to_level(&pyramid, t).unwrap();
                let total: i128 = level.properties[f].values.iter().map(|&v| v as i128).sum();
                assert_eq!(total, fine_total, "level {t} of {}", info.name);
                checked += 1;
            }
        }
    }
    pass(6, "sum conservation", format!("{checked} level totals, exact"));
}

/// 7. Compression trend on the smooth layered 64^3 fixture with the
/// deflate-class codec: a one-level decomposition beats compressing the raw
/// file, and ratios across levels 2..max vary by at most 10% relative.
#[test]
fn criterion_07_compression_trend() {
    let spec = GeneratorSpec::smooth(64, 64, 64);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let raw = grdecl::write(&model, None);
    let ratio_none = raw.len() as f64 / compress_payload(&raw, CodecId::Deflate).len() as f64;

    let max = model.dims.max_levels();
    let mut ratios = Vec::new();
    for levels in 1..=max {
        let mut pyramid = analyze_pyramid(&model, levels).unwrap();
        pyramid.codecs = CodecConfig::uniform(CodecId::Deflate);
        let bytes = container::serialize(&pyramid);
        ratios.push(raw.len() as f64 / bytes.len() as f64);
    }
    assert!(
        ratios[0] > ratio_none,
        "ratio(L=1) {} must beat raw deflate {}",
        ratios[0],
        ratio_none
    );
    let deep = &ratios[1..];
    let lo = deep.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = deep.iter().copied().fold(0.0f64, f64::max);
    let variation = (hi - lo) / lo;
    assert!(
        variation <= 0.10,
        "levels 2..{max} ratios vary {:.1}% (range {lo:.2}..{hi:.2})",
        variation * 100.0
    );
    pass(
        7,
        "compression trend",
        format!(
            "none {ratio_none:.2} < L1 {:.2}; L2..{max} within {:.1}%",
            ratios[0],
            variation * 100.0
        ),
    );
}

/// 8. Asymmetry trend: synthesis wall time strictly below analysis wall time
/// on every benchmark fixture (minimum over repeated interleaved runs).
#[test]
fn criterion_08_asymmetry_trend() {
    let fixtures = [
        ("smooth64", GeneratorSpec::smooth(64, 64, 64)),
        ("fault32", GeneratorSpec::single_fault(32, 32, 16, 16, 50.0)),
        ("carved32", GeneratorSpec::carved(32, 32, 16)),
    ];
    let mut lines = Vec::new();
    for (name, spec) in &fixtures {
        let model = synthetic::generate(spec, QuantizationParams::default()).unwrap();
        let levels = model.dims.max_levels();
        let mut best_analysis = f64::INFINITY;
        let mut best_synthesis = f64::INFINITY;
        for _ in 0..7 {
            let t0 = Instant::now();
            let pyramid = analyze_pyramid(&model, levels).unwrap();
            best_analysis = best_analysis.min(t0.elapsed().as_secs_f64());
            let t1 = Instant::now();
            let back = synthesize_to_level(&pyramid, 0).unwrap();
            best_synthesis = best_synthesis.min(t1.elapsed().as_secs_f64());
            assert_eq!(back.dims, model.dims);
        }
        assert!(
            best_synthesis < best_analysis,
            "{name}: synthesis {best_synthesis:.4}s not below analysis {best_analysis:.4}s"
        );
        lines.push(format!(
            "{name} A {best_analysis:.3}s > S {best_synthesis:.3}s"
        ));
    }
    pass(8, "asymmetry trend", lines.join("; "));
}

/// 9. Slab equivalence: 2-, 3-, and 7-slab streaming analyses of the 64^3
/// fixture serialize to containers byte-identical to the whole-grid path.
#[test]
fn criterion_09_slab_equivalence() {
    let spec = GeneratorSpec::smooth(64, 64, 64);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let levels = 4;
    let whole = {
        let pyramid =
            analyze_streaming(&model, &SlabPlan::single(model.dims.nk), levels, 0, None).unwrap();
        container::serialize(&pyramid)
    };
    for slabs in [2usize, 3, 7] {
        let plan = SlabPlan::split(model.dims.nk, slabs);
        assert_eq!(plan.ranges.len(), slabs);
        let pyramid = analyze_streaming(&model, &plan, levels, 0, None).unwrap();
        let bytes = container::serialize(&pyramid);
        assert_eq!(bytes, whole, "{slabs}-slab container differs");
    }
    pass(
        9,
        "slab equivalence",
        format!("2/3/7-slab containers identical ({} bytes)", whole.len()),
    );
}

/// 10. Modelet exhaustive oracle: every universe within {0..7}, every
/// (mode, value) pair round-trips; the flip predicate never strands a
/// detail. Exhaustive, under a second.
#[test]
fn criterion_10_modelet_exhaustive() {
    let t0 = Instant::now();
    let mut cases = 0usize;
    for mask in 1u16..256 {
        let omega: Vec<i64> = (0..8).filter(|&b| mask & (1 << b) != 0).collect();
        for &mode in &omega {
            for &value in &omega {
                let d = props::modelet_detail(value, mode, &omega);
                let back = props::modelet_reconstruct(mode, d, &omega)
                    .expect("flip predicate must stay reconstructible");
                assert_eq!(back, value, "omega {omega:?} mode {mode} value {value}");
                cases += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    pass(
        10,
        "modelet exhaustive oracle",
        format!("{cases} (universe, mode, value) cases, {elapsed:.2?}"),
    );
}

/// The parse -> quantize -> analyze -> serialize -> compress -> decompress ->
/// deserialize -> synthesize -> write loop reproduces the quantized model
/// bit-exactly through GRDECL text as well.
#[test]
fn end_to_end_through_text() {
    let spec = GeneratorSpec::randomized(14, 11, 9, 2, 0.7, 99);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let text = grdecl::write(&model, None);
    let parsed = grdecl::parse(&text, &grdecl::ParseOptions::default()).unwrap();
    let pyramid = analyze_pyramid(&parsed, 3).unwrap();
    let bytes = container::serialize(&pyramid);
    let back = container::deserialize(&bytes).unwrap();
    let restored = synthesize_to_level(&back, 0).unwrap();
    assert_eq!(grdecl::write(&restored, None), text);
}

/// Progressive prefix: truncating the stream right after one level's chunks
/// still reconstructs that level exactly.
#[test]
fn progressive_prefix_property() {
    let spec = GeneratorSpec::randomized(16, 16, 16, 1, 0.8, 123);
    let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
    let pyramid = analyze_pyramid(&model, 3).unwrap();
    let bytes = container::serialize(&pyramid);
    let reference = synthesize_to_level(&pyramid, -2).unwrap();
    // Find a cut that keeps everything up to the tag -2 chunks: shrink until
    // level -2 still synthesizes but level -1 does not.
    let mut cut = bytes.len();
    let mut found = false;
    while cut > 0 {
        cut -= 1;
        if let Ok(partial) = container::deserialize(&bytes[..cut]) {
            let deep = synthesize_to_level(&partial, -2);
            let fine = synthesize_to_level(&partial, -1);
            if fine.is_err() {
                if let Ok(m) = deep {
                    assert_eq!(m, reference);
                    found = true;
                }
                break;
            }
        }
    }
    assert!(found, "no truncation point separates levels -2 and -1");
}
