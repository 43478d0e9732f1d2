//! Per-chunk entropy and compression statistics.

use crate::codec::{compress_payload, CodecId};
use crate::container::{build_chunks, kind_name};
use crate::pyramid::Pyramid;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct ChunkStat {
    pub label: String,
    pub level: i16,
    pub kind: &'static str,
    pub codec: CodecId,
    pub raw_len: usize,
    pub compressed_len: usize,
    /// Shannon entropy of the raw bytes, bits per byte.
    pub byte_entropy: f64,
    /// Shannon entropy over width-sized symbols, bits per symbol.
    pub symbol_entropy: f64,
    /// Fraction of symbols equal to zero.
    pub zero_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub chunks: Vec<ChunkStat>,
    pub raw_total: usize,
    pub compressed_total: usize,
}

impl EntropyReport {
    /// Compression ratio of the payload set (uncompressed over compressed).
    pub fn ratio(&self) -> f64 {
        if self.compressed_total == 0 {
            return 1.0;
        }
        self.raw_total as f64 / self.compressed_total as f64
    }
}

fn shannon(counts: &std::collections::HashMap<u64, usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &n in counts.values() {
        let p = n as f64 / total as f64;
        h -= p * p.log2();
    }
    h
}

fn byte_entropy(data: &[u8]) -> f64 {
    let mut counts = [0usize; 256];
    for &b in data {
        counts[b as usize] += 1;
    }
    let total = data.len();
    if total == 0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &n in counts.iter().filter(|&&n| n > 0) {
        let p = n as f64 / total as f64;
        h -= p * p.log2();
    }
    h
}

fn symbol_stats(data: &[u8], width: u8) -> (f64, f64) {
    let w = if width == 0 { 1 } else { width as usize };
    let mut counts = std::collections::HashMap::new();
    let mut zeros = 0usize;
    let mut total = 0usize;
    for chunk in data.chunks_exact(w) {
        let mut sym = 0u64;
        for (s, &b) in chunk.iter().enumerate() {
            sym |= (b as u64) << (8 * s);
        }
        *counts.entry(sym).or_insert(0) += 1;
        if sym == 0 {
            zeros += 1;
        }
        total += 1;
    }
    let zero_ratio = if total == 0 {
        0.0
    } else {
        zeros as f64 / total as f64
    };
    (shannon(&counts, total), zero_ratio)
}

/// Measure every chunk of the pyramid: raw and compressed size under its
/// configured codec, byte and symbol entropies, and zero-symbol ratio.
pub fn entropy_report(pyramid: &Pyramid) -> EntropyReport {
    let chunks = build_chunks(pyramid);
    let stats: Vec<ChunkStat> = chunks
        .par_iter()
        .map(|c| {
            let compressed = compress_payload(&c.raw, c.codec);
            let (symbol_entropy, zero_ratio) = symbol_stats(&c.raw, c.width);
            ChunkStat {
                label: c.label(&pyramid.header.fields),
                level: c.level,
                kind: kind_name(c.kind),
                codec: c.codec,
                raw_len: c.raw.len(),
                compressed_len: compressed.len(),
                byte_entropy: byte_entropy(&c.raw),
                symbol_entropy,
                zero_ratio,
            }
        })
        .collect();
    let raw_total = stats.iter().map(|s| s.raw_len).sum();
    let compressed_total = stats.iter().map(|s| s.compressed_len).sum();
    EntropyReport {
        chunks: stats,
        raw_total,
        compressed_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuantizationParams;
    use crate::pyramid::analyze_pyramid;
    use crate::synthetic::{self, GeneratorSpec};

    #[test]
    fn constant_detail_chunks_have_zero_entropy() {
        // Flat constant-thickness mesh: every geometry detail is zero.
        let model = synthetic::generate(
            &GeneratorSpec::flat_layered(8, 8, 4),
            QuantizationParams::default(),
        )
        .unwrap();
        let pyramid = analyze_pyramid(&model, 2).unwrap();
        let report = entropy_report(&pyramid);
        let geo_detail = report
            .chunks
            .iter()
            .find(|c| c.label == "geometry-z/detail/level0")
            .unwrap();
        assert!(geo_detail.zero_ratio > 0.99, "{geo_detail:?}");
        // Totals are the sum of chunk sizes.
        assert_eq!(
            report.raw_total,
            report.chunks.iter().map(|c| c.raw_len).sum::<usize>()
        );
        assert_eq!(
            report.compressed_total,
            report.chunks.iter().map(|c| c.compressed_len).sum::<usize>()
        );
    }

    #[test]
    fn entropy_bounds() {
        let model = synthetic::generate(
            &GeneratorSpec::randomized(8, 8, 8, 2, 0.7, 2),
            QuantizationParams::default(),
        )
        .unwrap();
        let pyramid = analyze_pyramid(&model, 3).unwrap();
        let report = entropy_report(&pyramid);
        for c in &report.chunks {
            assert!((0.0..=8.0).contains(&c.byte_entropy), "{}", c.label);
            assert!((0.0..=1.0).contains(&c.zero_ratio), "{}", c.label);
        }
        assert!(report.raw_total > 0 && report.compressed_total > 0);
    }
}
