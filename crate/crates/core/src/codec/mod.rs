//! Pluggable lossless byte compressors.
//!
//! Codec ids name algorithm families, not tools:
//!
//! - `store`: identity; guarantees operability without any compressor.
//! - `deflate`: raw DEFLATE streams (LZ77 + Huffman).
//! - `bwt-block`: block-sorting coder in the Burrows-Wheeler family
//!   (BWT, move-to-front, zero run-length coding, canonical Huffman).
//! - `lz-markov`: LZ77 with an adaptive binary range coder over Markov
//!   contexts.
//!
//! Every codec satisfies decompress(compress(x)) == x and compresses
//! deterministically, which the container's canonical-bytes guarantee
//! depends on.

mod bwt;
mod lzm;

use crate::error::{Error, Result};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecId {
    Store = 0,
    Deflate = 1,
    BwtBlock = 2,
    LzMarkov = 3,
}

pub const ALL_CODECS: [CodecId; 4] = [
    CodecId::Store,
    CodecId::Deflate,
    CodecId::BwtBlock,
    CodecId::LzMarkov,
];

impl CodecId {
    pub fn name(self) -> &'static str {
        match self {
            CodecId::Store => "store",
            CodecId::Deflate => "deflate",
            CodecId::BwtBlock => "bwt-block",
            CodecId::LzMarkov => "lz-markov",
        }
    }

    pub fn from_name(name: &str) -> Result<CodecId> {
        ALL_CODECS
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::CodecUnavailable(name.to_string()))
    }

    pub fn from_tag(tag: u8) -> Result<CodecId> {
        ALL_CODECS
            .into_iter()
            .find(|&c| c as u8 == tag)
            .ok_or_else(|| Error::CodecUnavailable(format!("tag {tag}")))
    }
}

/// Compress a payload with the named codec.
pub fn compress_payload(data: &[u8], codec: CodecId) -> Vec<u8> {
    match codec {
        CodecId::Store => data.to_vec(),
        CodecId::Deflate => {
            let mut enc =
                flate2::write::DeflateEncoder::new(Vec::new(), flate2::Compression::new(6));
            enc.write_all(data).expect("in-memory deflate");
            enc.finish().expect("in-memory deflate")
        }
        CodecId::BwtBlock => bwt::compress(data),
        CodecId::LzMarkov => lzm::compress(data),
    }
}

/// Losslessly invert [`compress_payload`]. `expected_len` is the known
/// uncompressed size from the chunk directory.
pub fn decompress_payload(data: &[u8], codec: CodecId, expected_len: usize) -> Result<Vec<u8>> {
    let out = match codec {
        CodecId::Store => data.to_vec(),
        CodecId::Deflate => {
            let mut dec = flate2::write::DeflateDecoder::new(Vec::with_capacity(expected_len));
            dec.write_all(data)
                .and_then(|_| dec.finish())
                .map_err(|e| Error::CorruptDetail(format!("deflate stream: {e}")))?
        }
        CodecId::BwtBlock => bwt::decompress(data, expected_len)?,
        CodecId::LzMarkov => lzm::decompress(data, expected_len)?,
    };
    if out.len() != expected_len {
        return Err(Error::CorruptDetail(format!(
            "decompressed length {} does not match directory entry {}",
            out.len(),
            expected_len
        )));
    }
    Ok(out)
}

/// CRC-32C (Castagnoli), reflected, init and final xor 0xFFFFFFFF.
pub fn crc32c(data: &[u8]) -> u32 {
    const TABLE: [u32; 256] = {
        let mut table = [0u32; 256];
        let mut i = 0;
        while i < 256 {
            let mut crc = i as u32;
            let mut b = 0;
            while b < 8 {
                crc = if crc & 1 != 0 {
                    (crc >> 1) ^ 0x82F6_3B78
                } else {
                    crc >> 1
                };
                b += 1;
            }
            table[i] = crc;
            i += 1;
        }
        table
    };
    let mut crc = !0u32;
    for &byte in data {
        crc = TABLE[((crc ^ byte as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    !crc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn crc32c_check_vector() {
        assert_eq!(crc32c(b"123456789"), 0xE306_9283);
        assert_eq!(crc32c(b""), 0);
    }

    fn payload_suite() -> Vec<Vec<u8>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut suite = vec![
            vec![],
            vec![0u8],
            vec![7u8; 1],
            vec![0u8; 100_000],
            vec![0xAB; 3],
            (0..=255u8).collect::<Vec<_>>(),
            b"abracadabra abracadabra abracadabra".to_vec(),
        ];
        // Random bytes (incompressible).
        suite.push((0..65_537).map(|_| rng.gen()).collect());
        // Runs with sporadic noise (typical detail-plane shape).
        let mut runny = vec![0u8; 200_000];
        for _ in 0..500 {
            let at = rng.gen_range(0..runny.len());
            runny[at] = rng.gen();
        }
        suite.push(runny);
        // Repeating structure with period > 1.
        suite.push((0..100_000).map(|i| ((i * 7) % 251) as u8).collect());
        suite
    }

    #[test]
    fn all_codecs_roundtrip() {
        for payload in payload_suite() {
            for codec in ALL_CODECS {
                let packed = compress_payload(&payload, codec);
                let back = decompress_payload(&packed, codec, payload.len()).unwrap();
                assert_eq!(back, payload, "codec {} len {}", codec.name(), payload.len());
            }
        }
    }

    #[test]
    fn zero_payload_shrinks_random_does_not() {
        let zeros = vec![0u8; 1 << 20];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<u8> = (0..1 << 20).map(|_| rng.gen()).collect();
        for codec in [CodecId::Deflate, CodecId::BwtBlock, CodecId::LzMarkov] {
            let packed = compress_payload(&zeros, codec);
            assert!(
                packed.len() * 100 < zeros.len(),
                "{}: {} bytes for 1 MiB of zeros",
                codec.name(),
                packed.len()
            );
            let packed = compress_payload(&noise, codec);
            assert!(
                packed.len() * 100 >= noise.len() * 99,
                "{}: implausible {} bytes for incompressible input",
                codec.name(),
                packed.len()
            );
        }
    }

    #[test]
    fn deterministic_compression() {
        let payload: Vec<u8> = (0..50_000).map(|i| ((i * 31) % 253) as u8).collect();
        for codec in ALL_CODECS {
            assert_eq!(
                compress_payload(&payload, codec),
                compress_payload(&payload, codec)
            );
        }
    }

    #[test]
    fn unknown_codec_rejected() {
        assert!(matches!(
            CodecId::from_name("zpaq"),
            Err(Error::CodecUnavailable(_))
        ));
        assert!(matches!(CodecId::from_tag(9), Err(Error::CodecUnavailable(_))));
    }
}
