//! Block-sorting coder: Burrows-Wheeler transform, move-to-front, zero
//! run-length coding, canonical Huffman.
//!
//! Input is cut into 1 MiB blocks. Each block stores its raw length, the
//! primary row of the transform, the coded symbol count, the Huffman code
//! lengths, and the bitstream. The transform uses a virtual sentinel that
//! sorts before every byte, so rotation order equals suffix order and the
//! suffix array comes from plain prefix doubling.

use crate::error::{Error, Result};

const BLOCK: usize = 1 << 20;
/// Symbol alphabet after MTF + zero-run coding: RUNA, RUNB, then byte
/// values 1..=255 shifted by one.
const ALPHABET: usize = 257;
const RUNA: u16 = 0;
const RUNB: u16 = 1;

/// Suffix array of `data` with an implicit trailing sentinel smaller than
/// every byte. Returned array has length n + 1 and starts with the sentinel
/// suffix.
fn suffix_array(data: &[u8]) -> Vec<u32> {
    let n = data.len() + 1;
    let mut sa: Vec<u32> = (0..n as u32).collect();
    // Rank of the sentinel is 0.
    let mut rank: Vec<u32> = (0..n)
        .map(|i| if i < data.len() { data[i] as u32 + 1 } else { 0 })
        .collect();
    let mut tmp = vec![0u32; n];
    let mut k = 1usize;
    loop {
        let key = |i: u32| {
            let second = if (i as usize) + k < n {
                rank[i as usize + k] + 1
            } else {
                0
            };
            ((rank[i as usize] as u64) << 32) | second as u64
        };
        sa.sort_unstable_by_key(|&i| key(i));
        tmp[sa[0] as usize] = 0;
        let mut distinct = 1u32;
        for w in 1..n {
            if key(sa[w]) != key(sa[w - 1]) {
                distinct += 1;
            }
            tmp[sa[w] as usize] = distinct - 1;
        }
        rank.copy_from_slice(&tmp);
        if distinct as usize == n || k >= n {
            break;
        }
        k *= 2;
    }
    sa
}

/// Forward transform: last column without the sentinel, plus the row where
/// the sentinel would sit.
fn bwt_forward(data: &[u8]) -> (Vec<u8>, u32) {
    let sa = suffix_array(data);
    let mut last = Vec::with_capacity(data.len());
    let mut primary = 0u32;
    for (row, &p) in sa.iter().enumerate() {
        if p == 0 {
            primary = row as u32;
        } else {
            last.push(data[p as usize - 1]);
        }
    }
    (last, primary)
}

fn bwt_inverse(last: &[u8], primary: u32) -> Result<Vec<u8>> {
    let n = last.len();
    let primary = primary as usize;
    if primary > n {
        return Err(Error::CorruptDetail("block-sort primary row out of range".into()));
    }
    // Full last column with the sentinel (symbol -1) at `primary`.
    // Column mapping: LF(row) = first-column position of the symbol at
    // `row`. The sentinel occupies first-column row 0.
    let mut counts = [0u32; 256];
    for &b in last {
        counts[b as usize] += 1;
    }
    let mut starts = [0u32; 256];
    let mut acc = 1u32; // row 0 belongs to the sentinel
    for s in 0..256 {
        starts[s] = acc;
        acc += counts[s];
    }
    // lf[row in full matrix] for non-sentinel symbols.
    let mut lf = vec![0u32; n + 1];
    let mut seen = [0u32; 256];
    for full_row in 0..=n {
        if full_row == primary {
            lf[full_row] = 0;
        } else {
            let idx = if full_row < primary { full_row } else { full_row - 1 };
            let b = last[idx] as usize;
            lf[full_row] = starts[b] + seen[b];
            seen[b] += 1;
        }
    }
    // Walk backward from the rotation that starts with the sentinel.
    let mut out = vec![0u8; n];
    let mut row = 0u32;
    for t in (0..n).rev() {
        if row as usize == primary {
            return Err(Error::CorruptDetail("block-sort walk hit the sentinel".into()));
        }
        let idx = if (row as usize) < primary {
            row as usize
        } else {
            row as usize - 1
        };
        out[t] = last[idx];
        row = lf[row as usize];
    }
    Ok(out)
}

/// Move-to-front followed by zero-run coding. Zero runs are written in
/// bijective base 2 over RUNA/RUNB; nonzero ranks shift up by one.
fn mtf_rle_encode(data: &[u8]) -> Vec<u16> {
    let mut order: Vec<u8> = (0..=255).collect();
    let mut out = Vec::with_capacity(data.len() / 2 + 16);
    let mut zero_run = 0u64;
    let flush = |run: &mut u64, out: &mut Vec<u16>| {
        let mut r = *run;
        while r > 0 {
            if r & 1 == 1 {
                out.push(RUNA);
                r = (r - 1) >> 1;
            } else {
                out.push(RUNB);
                r = (r - 2) >> 1;
            }
        }
        *run = 0;
    };
    for &b in data {
        let pos = order.iter().position(|&o| o == b).unwrap();
        if pos == 0 {
            zero_run += 1;
            continue;
        }
        flush(&mut zero_run, &mut out);
        order.copy_within(0..pos, 1);
        order[0] = b;
        out.push(pos as u16 + 1);
    }
    flush(&mut zero_run, &mut out);
    out
}

fn mtf_rle_decode(symbols: &[u16], raw_len: usize) -> Result<Vec<u8>> {
    let mut order: Vec<u8> = (0..=255).collect();
    let mut out = Vec::with_capacity(raw_len);
    let mut run = 0u64;
    let mut bit = 0u32;
    let mut idx = 0usize;
    while idx <= symbols.len() {
        let sym = symbols.get(idx).copied();
        match sym {
            Some(RUNA) | Some(RUNB) => {
                let w = if sym == Some(RUNA) { 1u64 } else { 2u64 };
                run += w << bit;
                bit += 1;
                idx += 1;
                continue;
            }
            _ => {}
        }
        for _ in 0..run {
            out.push(order[0]);
        }
        run = 0;
        bit = 0;
        match sym {
            Some(s) => {
                let pos = s as usize - 1;
                if pos >= order.len() {
                    return Err(Error::CorruptDetail("move-to-front rank out of range".into()));
                }
                let b = order[pos];
                order.copy_within(0..pos, 1);
                order[0] = b;
                out.push(b);
                idx += 1;
            }
            None => break,
        }
    }
    if out.len() != raw_len {
        return Err(Error::CorruptDetail(format!(
            "block decoded to {} bytes, expected {raw_len}",
            out.len()
        )));
    }
    Ok(out)
}

/// Huffman code lengths by the package-free two-queue method; lengths are
/// unbounded (the canonical decoder walks lengths incrementally).
fn code_lengths(freqs: &[u64; ALPHABET]) -> [u8; ALPHABET] {
    #[derive(Clone)]
    struct Node {
        weight: u64,
        symbols: Vec<u16>,
    }
    let mut lengths = [0u8; ALPHABET];
    let mut leaves: Vec<Node> = freqs
        .iter()
        .enumerate()
        .filter(|&(_, &f)| f > 0)
        .map(|(s, &f)| Node {
            weight: f,
            symbols: vec![s as u16],
        })
        .collect();
    match leaves.len() {
        0 => return lengths,
        1 => {
            lengths[leaves[0].symbols[0] as usize] = 1;
            return lengths;
        }
        _ => {}
    }
    leaves.sort_by_key(|n| n.weight);
    let mut queue: std::collections::VecDeque<Node> = std::collections::VecDeque::new();
    let mut li = 0usize;
    let take = |leaves: &[Node], li: &mut usize, queue: &mut std::collections::VecDeque<Node>| {
        let from_leaf = match (leaves.get(*li), queue.front()) {
            (Some(l), Some(q)) => l.weight <= q.weight,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if from_leaf {
            let n = leaves[*li].clone();
            *li += 1;
            n
        } else {
            queue.pop_front().unwrap()
        }
    };
    loop {
        let a = take(&leaves, &mut li, &mut queue);
        let b = take(&leaves, &mut li, &mut queue);
        for &s in a.symbols.iter().chain(&b.symbols) {
            lengths[s as usize] += 1;
        }
        let merged = Node {
            weight: a.weight + b.weight,
            symbols: {
                let mut v = a.symbols;
                v.extend(b.symbols);
                v
            },
        };
        if li == leaves.len() && queue.is_empty() {
            let _ = merged;
            break;
        }
        queue.push_back(merged);
        if li == leaves.len() && queue.len() == 1 {
            break;
        }
    }
    lengths
}

/// Canonical code values from lengths: shorter codes first, ties by symbol.
fn canonical_codes(lengths: &[u8; ALPHABET]) -> Vec<(u32, u8)> {
    let max_len = lengths.iter().copied().max().unwrap_or(0);
    let mut codes = vec![(0u32, 0u8); ALPHABET];
    let mut code = 0u32;
    for len in 1..=max_len {
        for s in 0..ALPHABET {
            if lengths[s] == len {
                codes[s] = (code, len);
                code += 1;
            }
        }
        code <<= 1;
    }
    codes
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    bits: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter {
            out: Vec::new(),
            acc: 0,
            bits: 0,
        }
    }

    fn put(&mut self, code: u32, len: u8) {
        // MSB-first.
        for b in (0..len).rev() {
            self.acc = (self.acc << 1) | ((code >> b) & 1) as u64;
            self.bits += 1;
            if self.bits == 8 {
                self.out.push(self.acc as u8);
                self.acc = 0;
                self.bits = 0;
            }
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            self.out.push((self.acc << (8 - self.bits)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    bit: u32,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0, bit: 0 }
    }

    fn read_bit(&mut self) -> Result<u32> {
        let byte = *self
            .data
            .get(self.pos)
            .ok_or_else(|| Error::CorruptDetail("bitstream truncated".into()))?;
        let bit = (byte >> (7 - self.bit)) & 1;
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(bit as u32)
    }
}

/// Incremental canonical decoder: per length, the first code value and the
/// symbols of that length in canonical order.
struct CanonicalDecoder {
    /// (first code, symbols) per length, index 0 unused.
    by_len: Vec<(u32, Vec<u16>)>,
}

impl CanonicalDecoder {
    fn new(lengths: &[u8; ALPHABET]) -> Self {
        let max_len = lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut by_len = vec![(0u32, Vec::new()); max_len + 1];
        let mut code = 0u32;
        for len in 1..=max_len {
            by_len[len].0 = code;
            for s in 0..ALPHABET {
                if lengths[s] as usize == len {
                    by_len[len].1.push(s as u16);
                    code += 1;
                }
            }
            code <<= 1;
        }
        CanonicalDecoder { by_len }
    }

    fn decode(&self, reader: &mut BitReader) -> Result<u16> {
        let mut code = 0u32;
        for len in 1..self.by_len.len() {
            code = (code << 1) | reader.read_bit()?;
            let (first, symbols) = &self.by_len[len];
            let offset = code.wrapping_sub(*first) as usize;
            if !symbols.is_empty() && offset < symbols.len() {
                return Ok(symbols[offset]);
            }
        }
        Err(Error::CorruptDetail("invalid prefix code".into()))
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn get_u32(data: &[u8], at: &mut usize) -> Result<u32> {
    let end = *at + 4;
    let slice = data
        .get(*at..end)
        .ok_or_else(|| Error::CorruptDetail("block header truncated".into()))?;
    *at = end;
    Ok(u32::from_le_bytes(slice.try_into().unwrap()))
}

pub fn compress(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for block in data.chunks(BLOCK).chain(if data.is_empty() {
        // One empty block keeps the framing uniform.
        Some(&data[0..0])
    } else {
        None
    }) {
        let (last, primary) = bwt_forward(block);
        let symbols = mtf_rle_encode(&last);
        let mut freqs = [0u64; ALPHABET];
        for &s in &symbols {
            freqs[s as usize] += 1;
        }
        let lengths = code_lengths(&freqs);
        let codes = canonical_codes(&lengths);
        let mut writer = BitWriter::new();
        for &s in &symbols {
            let (code, len) = codes[s as usize];
            debug_assert!(len > 0);
            writer.put(code, len);
        }
        let stream = writer.finish();
        put_u32(&mut out, block.len() as u32);
        put_u32(&mut out, primary);
        put_u32(&mut out, symbols.len() as u32);
        out.extend_from_slice(&lengths.map(|l| l));
        put_u32(&mut out, stream.len() as u32);
        out.extend_from_slice(&stream);
    }
    out
}

pub fn decompress(data: &[u8], expected_len: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(expected_len);
    let mut at = 0usize;
    loop {
        if at == data.len() {
            break;
        }
        let raw_len = get_u32(data, &mut at)? as usize;
        let primary = get_u32(data, &mut at)?;
        let n_symbols = get_u32(data, &mut at)? as usize;
        let lengths_slice = data
            .get(at..at + ALPHABET)
            .ok_or_else(|| Error::CorruptDetail("code length table truncated".into()))?;
        at += ALPHABET;
        let mut lengths = [0u8; ALPHABET];
        lengths.copy_from_slice(lengths_slice);
        let stream_len = get_u32(data, &mut at)? as usize;
        let stream = data
            .get(at..at + stream_len)
            .ok_or_else(|| Error::CorruptDetail("bitstream truncated".into()))?;
        at += stream_len;

        let decoder = CanonicalDecoder::new(&lengths);
        let mut reader = BitReader::new(stream);
        let mut symbols = Vec::with_capacity(n_symbols);
        for _ in 0..n_symbols {
            symbols.push(decoder.decode(&mut reader)?);
        }
        let last = mtf_rle_decode(&symbols, raw_len)?;
        out.extend(bwt_inverse(&last, primary)?);
        if out.len() >= expected_len {
            break;
        }
    }
    Ok(out)
}
