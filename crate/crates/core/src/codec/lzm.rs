//! LZ77 with an adaptive binary range coder over Markov contexts.
//!
//! Greedy hash-chain matching feeds a carry-less range coder. Literals are
//! coded through a bit tree conditioned on the previous byte's high bits;
//! match lengths use a three-tier tree (2..9, 10..17, 18..273) and distances
//! a 6-bit slot tree with direct extra bits. Probabilities are 11-bit with
//! shift-5 adaptation.

use crate::error::{Error, Result};

const PROB_BITS: u32 = 11;
const PROB_INIT: u16 = 1 << (PROB_BITS - 1);
const MOVE_BITS: u32 = 5;
const TOP: u32 = 1 << 24;

const MIN_MATCH: usize = 3;
const MAX_MATCH: usize = 273;
const HASH_BITS: u32 = 16;
const CHAIN_TRIES: usize = 48;

struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Encoder {
            low: 0,
            range: !0,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            self.out.push(self.cache.wrapping_add(carry));
            for _ in 1..self.cache_size {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.cache = (self.low >> 24) as u8;
            self.cache_size = 0;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    fn encode_bit(&mut self, prob: &mut u16, bit: u32) {
        let bound = (self.range >> PROB_BITS) * (*prob as u32);
        if bit == 0 {
            self.range = bound;
            *prob += ((1 << PROB_BITS) - *prob) >> MOVE_BITS;
        } else {
            self.low += bound as u64;
            self.range -= bound;
            *prob -= *prob >> MOVE_BITS;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn encode_direct(&mut self, value: u32, bits: u32) {
        for b in (0..bits).rev() {
            self.range >>= 1;
            let bit = (value >> b) & 1;
            if bit == 1 {
                self.low += self.range as u64;
            }
            while self.range < TOP {
                self.range <<= 8;
                self.shift_low();
            }
        }
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct Decoder<'a> {
    code: u32,
    range: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(data: &'a [u8]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::CorruptDetail("range stream truncated".into()));
        }
        let mut d = Decoder {
            code: 0,
            range: !0,
            data,
            pos: 1, // first byte is the encoder cache flush, always 0
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.data.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn decode_bit(&mut self, prob: &mut u16) -> u32 {
        let bound = (self.range >> PROB_BITS) * (*prob as u32);
        let bit = if self.code < bound {
            self.range = bound;
            *prob += ((1 << PROB_BITS) - *prob) >> MOVE_BITS;
            0
        } else {
            self.code -= bound;
            self.range -= bound;
            *prob -= *prob >> MOVE_BITS;
            1
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte() as u32;
        }
        bit
    }

    fn decode_direct(&mut self, bits: u32) -> u32 {
        let mut value = 0u32;
        for _ in 0..bits {
            self.range >>= 1;
            let bit = if self.code >= self.range {
                self.code -= self.range;
                1
            } else {
                0
            };
            value = (value << 1) | bit;
            while self.range < TOP {
                self.range <<= 8;
                self.code = (self.code << 8) | self.next_byte() as u32;
            }
        }
        value
    }
}

/// Fixed-size bit tree: `BITS` decisions, MSB first.
struct BitTree<const N: usize> {
    probs: [u16; N],
    bits: u32,
}

impl<const N: usize> BitTree<N> {
    fn new(bits: u32) -> Self {
        debug_assert_eq!(1usize << bits, N);
        BitTree {
            probs: [PROB_INIT; N],
            bits,
        }
    }

    fn encode(&mut self, enc: &mut Encoder, value: u32) {
        let mut node = 1usize;
        for b in (0..self.bits).rev() {
            let bit = (value >> b) & 1;
            enc.encode_bit(&mut self.probs[node], bit);
            node = (node << 1) | bit as usize;
        }
    }

    fn decode(&mut self, dec: &mut Decoder) -> u32 {
        let mut node = 1usize;
        for _ in 0..self.bits {
            let bit = dec.decode_bit(&mut self.probs[node]);
            node = (node << 1) | bit as usize;
        }
        node as u32 - (1 << self.bits)
    }
}

/// Length model: 2..9 | 10..17 | 18..273.
struct LenModel {
    choice: u16,
    choice2: u16,
    low: BitTree<8>,
    mid: BitTree<8>,
    high: BitTree<256>,
}

impl LenModel {
    fn new() -> Self {
        LenModel {
            choice: PROB_INIT,
            choice2: PROB_INIT,
            low: BitTree::new(3),
            mid: BitTree::new(3),
            high: BitTree::new(8),
        }
    }

    fn encode(&mut self, enc: &mut Encoder, len: usize) {
        let v = len - 2;
        if v < 8 {
            enc.encode_bit(&mut self.choice, 0);
            self.low.encode(enc, v as u32);
        } else if v < 16 {
            enc.encode_bit(&mut self.choice, 1);
            enc.encode_bit(&mut self.choice2, 0);
            self.mid.encode(enc, (v - 8) as u32);
        } else {
            enc.encode_bit(&mut self.choice, 1);
            enc.encode_bit(&mut self.choice2, 1);
            self.high.encode(enc, (v - 16) as u32);
        }
    }

    fn decode(&mut self, dec: &mut Decoder) -> usize {
        let v = if dec.decode_bit(&mut self.choice) == 0 {
            self.low.decode(dec)
        } else if dec.decode_bit(&mut self.choice2) == 0 {
            self.mid.decode(dec) + 8
        } else {
            self.high.decode(dec) + 16
        };
        v as usize + 2
    }
}

struct Models {
    is_match: u16,
    literal: Vec<BitTree<256>>,
    len: LenModel,
    slot: BitTree<64>,
}

impl Models {
    fn new() -> Self {
        Models {
            is_match: PROB_INIT,
            literal: (0..8).map(|_| BitTree::new(8)).collect(),
            len: LenModel::new(),
            slot: BitTree::new(6),
        }
    }

    fn lit_ctx(prev: u8) -> usize {
        (prev >> 5) as usize
    }
}

fn dist_slot(dist: u32) -> u32 {
    if dist < 4 {
        dist
    } else {
        let bits = 31 - dist.leading_zeros();
        (bits << 1) | ((dist >> (bits - 1)) & 1)
    }
}

#[inline]
fn hash4(data: &[u8], pos: usize) -> usize {
    let v = u32::from_le_bytes([data[pos], data[pos + 1], data[pos + 2], data[pos + 3]]);
    (v.wrapping_mul(0x9E37_79B1) >> (32 - HASH_BITS)) as usize
}

pub fn compress(data: &[u8]) -> Vec<u8> {
    let mut enc = Encoder::new();
    let mut models = Models::new();
    let n = data.len();

    let mut head = vec![u32::MAX; 1 << HASH_BITS];
    let mut chain = vec![u32::MAX; n];

    let mut pos = 0usize;
    let mut prev_byte = 0u8;
    while pos < n {
        // Find the longest match via the hash chain.
        let mut best_len = 0usize;
        let mut best_dist = 0u32;
        if pos + MIN_MATCH + 1 <= n && pos + 4 <= n {
            let h = hash4(data, pos);
            let mut cand = head[h];
            let mut tries = CHAIN_TRIES;
            while cand != u32::MAX && tries > 0 {
                let c = cand as usize;
                let limit = (n - pos).min(MAX_MATCH);
                let mut l = 0usize;
                while l < limit && data[c + l] == data[pos + l] {
                    l += 1;
                }
                if l > best_len {
                    best_len = l;
                    best_dist = (pos - c) as u32;
                    if l == limit {
                        break;
                    }
                }
                cand = chain[c];
                tries -= 1;
            }
        }

        let take_match = best_len >= MIN_MATCH
            && !(best_len == MIN_MATCH && best_dist > (1 << 14));
        if take_match {
            enc.encode_bit(&mut models.is_match, 1);
            models.len.encode(&mut enc, best_len);
            let d = best_dist - 1;
            let slot = dist_slot(d);
            models.slot.encode(&mut enc, slot);
            if slot >= 4 {
                let extra_bits = (slot >> 1) - 1;
                let base = (2 | (slot & 1)) << extra_bits;
                enc.encode_direct(d - base, extra_bits);
            }
            // Index the skipped positions.
            let end = pos + best_len;
            while pos < end {
                if pos + 4 <= n {
                    let h = hash4(data, pos);
                    chain[pos] = head[h];
                    head[h] = pos as u32;
                }
                pos += 1;
            }
            prev_byte = data[pos - 1];
        } else {
            enc.encode_bit(&mut models.is_match, 0);
            let b = data[pos];
            models.literal[Models::lit_ctx(prev_byte)].encode(&mut enc, b as u32);
            if pos + 4 <= n {
                let h = hash4(data, pos);
                chain[pos] = head[h];
                head[h] = pos as u32;
            }
            prev_byte = b;
            pos += 1;
        }
    }
    enc.finish()
}

pub fn decompress(data: &[u8], expected_len: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(expected_len);
    if expected_len == 0 {
        return Ok(out);
    }
    let mut dec = Decoder::new(data)?;
    let mut models = Models::new();
    let mut prev_byte = 0u8;
    while out.len() < expected_len {
        if dec.decode_bit(&mut models.is_match) == 1 {
            let len = models.len.decode(&mut dec);
            let slot = models.slot.decode(&mut dec);
            let d = if slot < 4 {
                slot
            } else {
                let extra_bits = (slot >> 1) - 1;
                let base = (2 | (slot & 1)) << extra_bits;
                base + dec.decode_direct(extra_bits)
            };
            let dist = d as usize + 1;
            if dist > out.len() || out.len() + len > expected_len {
                return Err(Error::CorruptDetail("match outside window".into()));
            }
            let start = out.len() - dist;
            for s in 0..len {
                let b = out[start + s];
                out.push(b);
            }
            prev_byte = *out.last().unwrap();
        } else {
            let b = models.literal[Models::lit_ctx(prev_byte)].decode(&mut dec) as u8;
            out.push(b);
            prev_byte = b;
        }
    }
    Ok(out)
}
