//! The `.hxs` container: a chunked, progressively ordered archive of a
//! pyramid.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "HXSH" | version u16.u16
//! header: dims (3 x u64), levels u32, geometry/property scale exponents,
//!         fault epsilon i64, per-kind codec tags, field roster (name, kind,
//!         class universe)
//! chunk directory: count u32, then per chunk
//!         field u16 | level i16 | kind u8 | codec u8 | width u8 | pad u8 |
//!         offset u64 | compressed length u64 | raw length u64 | crc32c u32
//! chunk data, back to back in directory order
//! ```
//!
//! Chunks are ordered header-first, coarsest approximations next, then
//! detail sets from coarsest to finest, so a stream truncated after level t's
//! chunks still reconstructs level t. Integer payloads are packed at the
//! minimal byte width covering their range (recorded per chunk), activity
//! payloads are bit-packed, and each chunk is independently compressed and
//! checksummed over its stored bytes. Unknown chunk kinds are preserved
//! verbatim for forward compatibility.

use crate::codec::{compress_payload, crc32c, decompress_payload, CodecId};
use crate::error::{Error, Result};
use crate::fault::GeomLevel;
use crate::fault::{GeometryDetail, LevelLayout};
use crate::grid::{
    present_quadrants, GridDims, NodeZField, OpaqueBlock, PropertyKind, QuantizationParams,
};
use crate::pyramid::{
    level_dims, CodecConfig, FieldInfo, LevelData, LevelDetail, Pyramid, PyramidHeader, RawChunk,
    Sidecar,
};
use rayon::prelude::*;
use std::collections::HashMap;

pub const MAGIC: [u8; 4] = *b"HXSH";
pub const VERSION_MAJOR: u16 = 1;
pub const VERSION_MINOR: u16 = 0;

pub const FIELD_GEOM_Z: u16 = 0;
pub const FIELD_PILLARS: u16 = 1;
pub const FIELD_ACTIVITY: u16 = 2;
pub const FIELD_PROP0: u16 = 3;
pub const FIELD_TOP_Z: u16 = 0xFFFE;
pub const FIELD_EXTRAS: u16 = 0xFFFF;

pub const KIND_APPROX: u8 = 0;
pub const KIND_DETAIL: u8 = 1;
pub const KIND_ACTIVITY: u8 = 2;
pub const KIND_SELECTION: u8 = 3;
pub const KIND_SIDECAR: u8 = 4;

pub fn kind_name(kind: u8) -> &'static str {
    match kind {
        KIND_APPROX => "approx",
        KIND_DETAIL => "detail",
        KIND_ACTIVITY => "activity",
        KIND_SELECTION => "selection",
        KIND_SIDECAR => "sidecar",
        _ => "unknown",
    }
}

/// Minimal signed byte width covering the slice.
fn min_width(values: &[i64]) -> u8 {
    let (mut lo, mut hi) = (0i64, 0i64);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo >= i8::MIN as i64 && hi <= i8::MAX as i64 {
        1
    } else if lo >= i16::MIN as i64 && hi <= i16::MAX as i64 {
        2
    } else if lo >= i32::MIN as i64 && hi <= i32::MAX as i64 {
        4
    } else {
        8
    }
}

fn pack_ints_with_width(values: &[i64], width: u8, out: &mut Vec<u8>) {
    match width {
        1 => out.extend(values.iter().map(|&v| v as i8 as u8)),
        2 => {
            for &v in values {
                out.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }
        4 => {
            for &v in values {
                out.extend_from_slice(&(v as i32).to_le_bytes());
            }
        }
        _ => {
            for &v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

fn pack_ints(values: &[i64]) -> (u8, Vec<u8>) {
    let width = min_width(values);
    let mut out = Vec::with_capacity(values.len() * width as usize);
    pack_ints_with_width(values, width, &mut out);
    (width, out)
}

fn unpack_ints(bytes: &[u8], width: u8, count: usize) -> Result<Vec<i64>> {
    let w = width as usize;
    if ![1usize, 2, 4, 8].contains(&w) || bytes.len() < count * w {
        return Err(Error::CorruptDetail(format!(
            "integer payload of {} bytes cannot hold {count} values at width {width}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for c in bytes[..count * w].chunks_exact(w) {
        out.push(match width {
            1 => c[0] as i8 as i64,
            2 => i16::from_le_bytes(c.try_into().unwrap()) as i64,
            4 => i32::from_le_bytes(c.try_into().unwrap()) as i64,
            _ => i64::from_le_bytes(c.try_into().unwrap()),
        });
    }
    Ok(out)
}

fn pack_bits(bits: &[bool], out: &mut Vec<u8>) {
    for chunk in bits.chunks(8) {
        let mut b = 0u8;
        for (s, &bit) in chunk.iter().enumerate() {
            if bit {
                b |= 1 << s;
            }
        }
        out.push(b);
    }
}

fn unpack_bits(bytes: &[u8], count: usize) -> Result<Vec<bool>> {
    if bytes.len() < count.div_ceil(8) {
        return Err(Error::CorruptDetail(format!(
            "bit payload of {} bytes cannot hold {count} bits",
            bytes.len()
        )));
    }
    Ok((0..count).map(|s| bytes[s / 8] & (1 << (s % 8)) != 0).collect())
}

/// Present quadrant slots of a node lattice, in payload order.
fn quadrant_slots(dims: &GridDims) -> Vec<(usize, usize, crate::grid::Quadrant)> {
    let mut slots = Vec::new();
    for j in 0..=dims.nj {
        for i in 0..=dims.ni {
            for q in present_quadrants(dims, i, j) {
                slots.push((i, j, q));
            }
        }
    }
    slots
}

/// One chunk before compression.
#[derive(Debug, Clone)]
pub struct BuiltChunk {
    pub field: u16,
    pub level: i16,
    pub kind: u8,
    pub codec: CodecId,
    pub width: u8,
    pub raw: Vec<u8>,
}

impl BuiltChunk {
    pub fn label(&self, fields: &[FieldInfo]) -> String {
        let field = match self.field {
            FIELD_GEOM_Z => "geometry-z".to_string(),
            FIELD_PILLARS => "pillars".to_string(),
            FIELD_ACTIVITY => "activity".to_string(),
            FIELD_TOP_Z => "top-z".to_string(),
            FIELD_EXTRAS => "extras".to_string(),
            f => fields
                .get((f - FIELD_PROP0) as usize)
                .map(|i| i.name.clone())
                .unwrap_or_else(|| format!("field-{f}")),
        };
        format!("{}/{}/level{}", field, kind_name(self.kind), self.level)
    }
}

fn geom_z_approx_payload(geom: &GeomLevel) -> Vec<i64> {
    let slots = quadrant_slots(&geom.dims);
    let mut values = Vec::with_capacity(slots.len() * (geom.dims.nk + 1));
    for k in 0..=geom.dims.nk {
        for &(i, j, q) in &slots {
            values.push(geom.nodez.get(q, i, j, k));
        }
    }
    values
}

fn activity_payload(vert: &[bool], act: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(vert.len().div_ceil(8) + act.len().div_ceil(8));
    pack_bits(vert, &mut out);
    pack_bits(act, &mut out);
    out
}

fn geom_detail_payload(detail: &GeometryDetail) -> Vec<u8> {
    let (w1, d) = pack_ints(&detail.z_details);
    let (w2, r) = pack_ints(&detail.z_residuals);
    let mut out = Vec::with_capacity(2 + d.len() + r.len());
    out.push(w1);
    out.extend_from_slice(&d);
    out.push(w2);
    out.extend_from_slice(&r);
    out
}

fn extras_payload(extras: &[OpaqueBlock]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(extras.len() as u32).to_le_bytes());
    for b in extras {
        let kw = b.keyword.as_bytes();
        let tx = b.text.as_bytes();
        out.extend_from_slice(&(kw.len() as u16).to_le_bytes());
        out.extend_from_slice(kw);
        out.extend_from_slice(&(tx.len() as u32).to_le_bytes());
        out.extend_from_slice(tx);
    }
    out
}

fn parse_extras(bytes: &[u8]) -> Result<Vec<OpaqueBlock>> {
    let corrupt = || Error::CorruptDetail("extras payload truncated".into());
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<Vec<u8>> {
        let s = bytes.get(at..at + n).ok_or_else(corrupt)?;
        at += n;
        Ok(s.to_vec())
    };
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let mut blocks = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let kw_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let keyword = String::from_utf8(take(kw_len)?).map_err(|_| corrupt())?;
        let tx_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let text = String::from_utf8(take(tx_len)?).map_err(|_| corrupt())?;
        blocks.push(OpaqueBlock { keyword, text });
    }
    Ok(blocks)
}

/// Assemble every chunk of the pyramid, uncompressed, in container order.
pub fn build_chunks(pyramid: &Pyramid) -> Vec<BuiltChunk> {
    let cfg = pyramid.codecs;
    let levels = pyramid.header.levels;
    let base_tag = -(levels as i16);
    let mut chunks = Vec::new();

    let (w, raw) = pack_ints(&geom_z_approx_payload(&pyramid.base.geom));
    chunks.push(BuiltChunk {
        field: FIELD_GEOM_Z,
        level: base_tag,
        kind: KIND_APPROX,
        codec: cfg.approx,
        width: w,
        raw,
    });
    let pillar_values: Vec<i64> = pyramid
        .base
        .geom
        .pillars
        .planes
        .iter()
        .flat_map(|p| p.iter().copied())
        .collect();
    let (w, raw) = pack_ints(&pillar_values);
    chunks.push(BuiltChunk {
        field: FIELD_PILLARS,
        level: base_tag,
        kind: KIND_APPROX,
        codec: cfg.approx,
        width: w,
        raw,
    });
    chunks.push(BuiltChunk {
        field: FIELD_ACTIVITY,
        level: base_tag,
        kind: KIND_ACTIVITY,
        codec: cfg.activity,
        width: 0,
        raw: activity_payload(&pyramid.base.geom.vert_act, &pyramid.base.geom.actnum),
    });
    for (f, values) in pyramid.base.props.iter().enumerate() {
        let (w, raw) = pack_ints(values);
        chunks.push(BuiltChunk {
            field: FIELD_PROP0 + f as u16,
            level: base_tag,
            kind: KIND_APPROX,
            codec: cfg.approx,
            width: w,
            raw,
        });
    }

    for (idx, detail) in pyramid.details.iter().enumerate() {
        let tag = base_tag + 1 + idx as i16;
        let detail = detail
            .as_ref()
            .expect("serializing a pyramid with missing detail levels");
        let sel: Vec<i64> = detail.geometry.selection.iter().map(|&s| s as i64).collect();
        let (w, raw) = pack_ints(&sel);
        chunks.push(BuiltChunk {
            field: FIELD_GEOM_Z,
            level: tag,
            kind: KIND_SELECTION,
            codec: cfg.selection,
            width: w,
            raw,
        });
        chunks.push(BuiltChunk {
            field: FIELD_GEOM_Z,
            level: tag,
            kind: KIND_DETAIL,
            codec: cfg.detail,
            width: 0,
            raw: geom_detail_payload(&detail.geometry),
        });
        let (w, raw) = pack_ints(&detail.geometry.pillar_details);
        chunks.push(BuiltChunk {
            field: FIELD_PILLARS,
            level: tag,
            kind: KIND_DETAIL,
            codec: cfg.detail,
            width: w,
            raw,
        });
        chunks.push(BuiltChunk {
            field: FIELD_ACTIVITY,
            level: tag,
            kind: KIND_ACTIVITY,
            codec: cfg.activity,
            width: 0,
            raw: activity_payload(&detail.geometry.vert_act, &detail.geometry.actnum),
        });
        for (f, values) in detail.props.iter().enumerate() {
            let (w, raw) = pack_ints(values);
            chunks.push(BuiltChunk {
                field: FIELD_PROP0 + f as u16,
                level: tag,
                kind: KIND_DETAIL,
                codec: cfg.detail,
                width: w,
                raw,
            });
        }
    }

    if let Sidecar::Present(top_z) = &pyramid.top_z {
        let (w, raw) = pack_ints(top_z);
        chunks.push(BuiltChunk {
            field: FIELD_TOP_Z,
            level: 0,
            kind: KIND_SIDECAR,
            codec: cfg.approx,
            width: w,
            raw,
        });
    }
    if let Sidecar::Present(extras) = &pyramid.extras {
        chunks.push(BuiltChunk {
            field: FIELD_EXTRAS,
            level: 0,
            kind: KIND_SIDECAR,
            codec: cfg.approx,
            width: 0,
            raw: extras_payload(extras),
        });
    }
    chunks
}

fn write_header(pyramid: &Pyramid, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION_MAJOR.to_le_bytes());
    out.extend_from_slice(&VERSION_MINOR.to_le_bytes());
    let h = &pyramid.header;
    out.extend_from_slice(&(h.dims.ni as u64).to_le_bytes());
    out.extend_from_slice(&(h.dims.nj as u64).to_le_bytes());
    out.extend_from_slice(&(h.dims.nk as u64).to_le_bytes());
    out.extend_from_slice(&h.levels.to_le_bytes());
    out.push(h.quant.geom_exp);
    out.push(h.quant.prop_exp);
    out.extend_from_slice(&h.epsilon.to_le_bytes());
    let cfg = pyramid.codecs;
    out.extend_from_slice(&[
        cfg.approx as u8,
        cfg.detail as u8,
        cfg.activity as u8,
        cfg.selection as u8,
    ]);
    out.extend_from_slice(&(h.fields.len() as u16).to_le_bytes());
    for f in &h.fields {
        out.push(match f.kind {
            PropertyKind::Continuous => 0,
            PropertyKind::Categorical => 1,
        });
        let name = f.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        if f.kind == PropertyKind::Categorical {
            out.extend_from_slice(&(f.universe.len() as u32).to_le_bytes());
            for &v in &f.universe {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .data
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::CorruptDetail("container header truncated".into()))?;
        self.at += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

fn read_header(r: &mut Reader) -> Result<(PyramidHeader, CodecConfig)> {
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let major = r.u16()?;
    let minor = r.u16()?;
    if major != VERSION_MAJOR {
        return Err(Error::VersionUnsupported { major, minor });
    }
    let ni = r.u64()? as usize;
    let nj = r.u64()? as usize;
    let nk = r.u64()? as usize;
    let levels = r.u32()?;
    let geom_exp = r.u8()?;
    let prop_exp = r.u8()?;
    let epsilon = r.i64()?;
    let codecs = CodecConfig {
        approx: CodecId::from_tag(r.u8()?)?,
        detail: CodecId::from_tag(r.u8()?)?,
        activity: CodecId::from_tag(r.u8()?)?,
        selection: CodecId::from_tag(r.u8()?)?,
    };
    let n_fields = r.u16()?;
    let mut fields = Vec::with_capacity(n_fields as usize);
    for _ in 0..n_fields {
        let kind = match r.u8()? {
            0 => PropertyKind::Continuous,
            1 => PropertyKind::Categorical,
            k => return Err(Error::CorruptDetail(format!("unknown property kind tag {k}"))),
        };
        let name_len = r.u16()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::CorruptDetail("field name is not UTF-8".into()))?;
        let universe = if kind == PropertyKind::Categorical {
            let n = r.u32()? as usize;
            let mut u = Vec::with_capacity(n);
            for _ in 0..n {
                u.push(r.i64()?);
            }
            u
        } else {
            Vec::new()
        };
        fields.push(FieldInfo { name, kind, universe });
    }
    let dims = GridDims::new(ni, nj, nk)?;
    Ok((
        PyramidHeader {
            dims,
            levels,
            quant: QuantizationParams { geom_exp, prop_exp },
            epsilon,
            fields,
        },
        codecs,
    ))
}

/// Serialize a pyramid to container bytes. Deterministic: the same pyramid
/// always produces identical bytes.
pub fn serialize(pyramid: &Pyramid) -> Vec<u8> {
    let chunks = build_chunks(pyramid);
    let compressed: Vec<Vec<u8>> = chunks
        .par_iter()
        .map(|c| compress_payload(&c.raw, c.codec))
        .collect();

    let mut out = Vec::new();
    write_header(pyramid, &mut out);
    let total = chunks.len() + pyramid.unknown_chunks.len();
    out.extend_from_slice(&(total as u32).to_le_bytes());

    let mut offset = 0u64;
    let mut dir: Vec<u8> = Vec::with_capacity(total * 36);
    let mut push_entry = |dir: &mut Vec<u8>,
                          field: u16,
                          level: i16,
                          kind: u8,
                          codec: u8,
                          width: u8,
                          comp: &[u8],
                          raw_len: u64| {
        dir.extend_from_slice(&field.to_le_bytes());
        dir.extend_from_slice(&level.to_le_bytes());
        dir.push(kind);
        dir.push(codec);
        dir.push(width);
        dir.push(0);
        dir.extend_from_slice(&offset.to_le_bytes());
        dir.extend_from_slice(&(comp.len() as u64).to_le_bytes());
        dir.extend_from_slice(&raw_len.to_le_bytes());
        dir.extend_from_slice(&crc32c(comp).to_le_bytes());
        offset += comp.len() as u64;
    };
    for (c, comp) in chunks.iter().zip(&compressed) {
        push_entry(&mut dir, c.field, c.level, c.kind, c.codec as u8, c.width, comp, c.raw.len() as u64);
    }
    for u in &pyramid.unknown_chunks {
        push_entry(&mut dir, u.field, u.level, u.kind, u.codec, u.width, &u.compressed, u.raw_len);
    }
    out.extend_from_slice(&dir);
    for comp in &compressed {
        out.extend_from_slice(comp);
    }
    for u in &pyramid.unknown_chunks {
        out.extend_from_slice(&u.compressed);
    }
    out
}

#[derive(Debug, Clone)]
struct DirEntry {
    field: u16,
    level: i16,
    kind: u8,
    codec: u8,
    width: u8,
    offset: u64,
    comp_len: u64,
    raw_len: u64,
    crc: u32,
}

fn entry_label(e: &DirEntry, fields: &[FieldInfo]) -> String {
    BuiltChunk {
        field: e.field,
        level: e.level,
        kind: e.kind,
        codec: CodecId::Store,
        width: e.width,
        raw: Vec::new(),
    }
    .label(fields)
}

/// Parse container bytes back into a pyramid. Checksums are validated for
/// every chunk whose bytes are present; chunks beyond a truncation point are
/// marked missing and only fail the levels that need them.
pub fn deserialize(bytes: &[u8]) -> Result<Pyramid> {
    let mut r = Reader { data: bytes, at: 0 };
    let (header, codecs) = read_header(&mut r)?;
    let n_chunks = r.u32()? as usize;
    let mut entries = Vec::with_capacity(n_chunks);
    for _ in 0..n_chunks {
        let field = r.u16()?;
        let level = r.i16()?;
        let kind = r.u8()?;
        let codec = r.u8()?;
        let width = r.u8()?;
        let _pad = r.u8()?;
        let offset = r.u64()?;
        let comp_len = r.u64()?;
        let raw_len = r.u64()?;
        let crc = r.u32()?;
        entries.push(DirEntry {
            field,
            level,
            kind,
            codec,
            width,
            offset,
            comp_len,
            raw_len,
            crc,
        });
    }
    let data_start = r.at;

    // Decompress present chunks in parallel; None marks truncated bytes.
    let payloads: Vec<Option<Result<Vec<u8>>>> = entries
        .par_iter()
        .map(|e| {
            let start = data_start + e.offset as usize;
            let end = start + e.comp_len as usize;
            let comp = bytes.get(start..end)?;
            Some((|| {
                if crc32c(comp) != e.crc {
                    return Err(Error::ChecksumMismatch(entry_label(e, &header.fields)));
                }
                let codec = CodecId::from_tag(e.codec)?;
                decompress_payload(comp, codec, e.raw_len as usize)
            })())
        })
        .collect();

    let mut known: HashMap<(u16, i16, u8), (u8, Vec<u8>)> = HashMap::new();
    let mut truncated: Vec<DirEntry> = Vec::new();
    let mut unknown_chunks = Vec::new();
    for (e, payload) in entries.iter().zip(payloads) {
        let recognized = e.kind <= KIND_SIDECAR
            && (e.field < FIELD_PROP0 + header.fields.len() as u16
                || e.field == FIELD_TOP_Z
                || e.field == FIELD_EXTRAS);
        match payload {
            None => truncated.push(e.clone()),
            Some(Err(err)) => return Err(err),
            Some(Ok(raw)) => {
                if recognized {
                    known.insert((e.field, e.level, e.kind), (e.width, raw));
                } else {
                    let start = data_start + e.offset as usize;
                    unknown_chunks.push(RawChunk {
                        field: e.field,
                        level: e.level,
                        kind: e.kind,
                        codec: e.codec,
                        width: e.width,
                        raw_len: e.raw_len,
                        compressed: bytes[start..start + e.comp_len as usize].to_vec(),
                    });
                }
            }
        }
    }

    let levels = header.levels;
    let base_tag = -(levels as i16);
    let base_dims = level_dims(header.dims, levels);
    let missing = Error::MissingChunk;

    // Base approximations are mandatory.
    let (w, raw) = known
        .remove(&(FIELD_GEOM_Z, base_tag, KIND_APPROX))
        .ok_or_else(|| missing(format!("geometry-z/approx/level{base_tag}")))?;
    let slots = quadrant_slots(&base_dims);
    let values = unpack_ints(&raw, w, slots.len() * (base_dims.nk + 1))?;
    let mut nodez = NodeZField::zeroed(base_dims);
    let mut cursor = 0usize;
    for k in 0..=base_dims.nk {
        for &(i, j, q) in &slots {
            nodez.set(q, i, j, k, values[cursor]);
            cursor += 1;
        }
    }

    let (w, raw) = known
        .remove(&(FIELD_PILLARS, base_tag, KIND_APPROX))
        .ok_or_else(|| missing(format!("pillars/approx/level{base_tag}")))?;
    let pcount = base_dims.pillar_count();
    let values = unpack_ints(&raw, w, 6 * pcount)?;
    let mut pillars = crate::grid::PillarSet::zeroed(base_dims);
    for c in 0..6 {
        pillars.planes[c].copy_from_slice(&values[c * pcount..(c + 1) * pcount]);
    }

    let (_, raw) = known
        .remove(&(FIELD_ACTIVITY, base_tag, KIND_ACTIVITY))
        .ok_or_else(|| missing(format!("activity/activity/level{base_tag}")))?;
    let nverts = base_dims.node_count();
    let vert_act = unpack_bits(&raw, nverts)?;
    let actnum = unpack_bits(&raw[nverts.div_ceil(8)..], base_dims.cell_count())?;

    let mut base_props = Vec::with_capacity(header.fields.len());
    for f in 0..header.fields.len() {
        let (w, raw) = known
            .remove(&(FIELD_PROP0 + f as u16, base_tag, KIND_APPROX))
            .ok_or_else(|| missing(format!("{}/approx/level{base_tag}", header.fields[f].name)))?;
        base_props.push(unpack_ints(&raw, w, base_dims.cell_count())?);
    }

    let base = LevelData {
        geom: GeomLevel {
            dims: base_dims,
            nodez,
            pillars,
            vert_act,
            actnum,
        },
        props: base_props,
    };

    // Detail levels: present only when every chunk of the level decoded.
    let mut details: Vec<Option<LevelDetail>> = Vec::with_capacity(levels as usize);
    for idx in 0..levels {
        let tag = base_tag + 1 + idx as i16;
        let fine_dims = level_dims(header.dims, levels - 1 - idx);
        let fine_nk1 = fine_dims.nk + 1;
        let level = (|| -> Result<Option<LevelDetail>> {
            let Some((w, raw)) = known.remove(&(FIELD_GEOM_Z, tag, KIND_SELECTION)) else {
                return Ok(None);
            };
            let coarse_dims = fine_dims.coarsened();
            let n_sel = (coarse_dims.ni + 1) * (coarse_dims.nj + 1);
            let selection: Vec<u8> = unpack_ints(&raw, w, n_sel)?
                .into_iter()
                .map(|v| v as u8)
                .collect();
            let layout = LevelLayout::from_selection(fine_dims, selection.clone())?;

            let Some((_, raw)) = known.remove(&(FIELD_GEOM_Z, tag, KIND_DETAIL)) else {
                return Ok(None);
            };
            let n_details = layout.k_details * layout.coarse_slots.len();
            let w1 = *raw
                .first()
                .ok_or_else(|| Error::CorruptDetail("empty geometry detail chunk".into()))?;
            let sec1 = 1 + n_details * w1 as usize;
            let z_details = unpack_ints(
                raw.get(1..sec1)
                    .ok_or_else(|| Error::CorruptDetail("geometry detail chunk truncated".into()))?,
                w1,
                n_details,
            )?;
            let w2 = *raw
                .get(sec1)
                .ok_or_else(|| Error::CorruptDetail("geometry detail chunk truncated".into()))?;
            let n_res = fine_nk1 * layout.residual_slots.len();
            let z_residuals = unpack_ints(&raw[sec1 + 1..], w2, n_res)?;

            let Some((w, raw)) = known.remove(&(FIELD_PILLARS, tag, KIND_DETAIL)) else {
                return Ok(None);
            };
            let (ni1, nj1, _) = fine_dims.node_dims();
            use crate::lift::{approx_len, detail_len, LiftMode};
            let n_pd = 6
                * (detail_len(ni1, LiftMode::NodeAxis) * nj1
                    + approx_len(ni1, LiftMode::NodeAxis) * detail_len(nj1, LiftMode::NodeAxis));
            let pillar_details = unpack_ints(&raw, w, n_pd)?;

            let Some((_, raw)) = known.remove(&(FIELD_ACTIVITY, tag, KIND_ACTIVITY)) else {
                return Ok(None);
            };
            let nverts = fine_dims.node_count();
            let vert_act = unpack_bits(&raw, nverts)?;
            let actnum = unpack_bits(&raw[nverts.div_ceil(8)..], fine_dims.cell_count())?;

            let mut props = Vec::with_capacity(header.fields.len());
            for (f, info) in header.fields.iter().enumerate() {
                let Some((w, raw)) = known.remove(&(FIELD_PROP0 + f as u16, tag, KIND_DETAIL))
                else {
                    return Ok(None);
                };
                let count = match info.kind {
                    PropertyKind::Continuous => fine_dims.cell_count() - coarse_dims.cell_count(),
                    PropertyKind::Categorical => fine_dims.cell_count(),
                };
                props.push(unpack_ints(&raw, w, count)?);
            }

            Ok(Some(LevelDetail {
                geometry: GeometryDetail {
                    selection,
                    z_details,
                    z_residuals,
                    pillar_details,
                    vert_act,
                    actnum,
                },
                props,
            }))
        })()?;
        details.push(level);
    }

    let top_z = match known.remove(&(FIELD_TOP_Z, 0, KIND_SIDECAR)) {
        Some((w, raw)) => Sidecar::Present(unpack_ints(&raw, w, 4 * header.dims.cell_count())?),
        None if truncated.iter().any(|e| e.field == FIELD_TOP_Z) => Sidecar::Missing,
        None => Sidecar::None,
    };
    let extras = match known.remove(&(FIELD_EXTRAS, 0, KIND_SIDECAR)) {
        Some((_, raw)) => Sidecar::Present(parse_extras(&raw)?),
        None if truncated.iter().any(|e| e.field == FIELD_EXTRAS) => Sidecar::Missing,
        None => Sidecar::None,
    };

    Ok(Pyramid {
        header,
        base,
        details,
        codecs,
        top_z,
        extras,
        unknown_chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::{analyze_pyramid, synthesize_to_level};
    use crate::synthetic::{self, GeneratorSpec};

    fn sample_pyramid() -> Pyramid {
        let model = synthetic::generate(
            &GeneratorSpec::randomized(9, 7, 6, 2, 0.5, 21),
            QuantizationParams::default(),
        )
        .unwrap();
        analyze_pyramid(&model, 3).unwrap()
    }

    #[test]
    fn roundtrip_equal_pyramid_and_canonical_bytes() {
        let pyramid = sample_pyramid();
        let bytes = serialize(&pyramid);
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back, pyramid);
        assert_eq!(serialize(&back), bytes);
    }

    #[test]
    fn bad_magic_and_version() {
        let pyramid = sample_pyramid();
        let mut bytes = serialize(&pyramid);
        bytes[0] = b'X';
        assert!(matches!(deserialize(&bytes), Err(Error::BadMagic)));
        let mut bytes = serialize(&pyramid);
        bytes[4] = 9;
        assert!(matches!(
            deserialize(&bytes),
            Err(Error::VersionUnsupported { major: 9, .. })
        ));
    }

    #[test]
    fn corrupted_chunk_names_itself() {
        let pyramid = sample_pyramid();
        let mut bytes = serialize(&pyramid);
        let n = bytes.len();
        bytes[n - 3] ^= 0x40;
        match deserialize(&bytes) {
            Err(Error::ChecksumMismatch(what)) => {
                assert!(what.contains("level0") || what.contains("sidecar"), "{what}");
            }
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
    }

    #[test]
    fn truncation_keeps_coarser_levels() {
        let pyramid = sample_pyramid();
        let bytes = serialize(&pyramid);
        // Cut the stream inside the data region.
        let cut = bytes.len() * 6 / 10;
        let back = deserialize(&bytes[..cut]).unwrap();
        assert!(back.details.iter().any(|d| d.is_none()));
        let coarsest = synthesize_to_level(&back, -3).unwrap();
        let reference = synthesize_to_level(&pyramid, -3).unwrap();
        assert_eq!(coarsest, reference);
        assert!(matches!(
            synthesize_to_level(&back, 0),
            Err(Error::MissingChunk(_))
        ));
    }

    #[test]
    fn unknown_trailing_chunks_preserved() {
        let mut pyramid = sample_pyramid();
        pyramid.unknown_chunks.push(RawChunk {
            field: 0x1234,
            level: 0,
            kind: 9,
            codec: CodecId::Store as u8,
            width: 0,
            raw_len: 4,
            compressed: vec![1, 2, 3, 4],
        });
        let bytes = serialize(&pyramid);
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back.unknown_chunks, pyramid.unknown_chunks);
        assert_eq!(serialize(&back), bytes);
    }

    #[test]
    fn codec_choice_roundtrips() {
        let model = synthetic::generate(
            &GeneratorSpec::single_fault(8, 8, 8, 4, 30.0),
            QuantizationParams::default(),
        )
        .unwrap();
        for codec in crate::codec::ALL_CODECS {
            let mut pyramid = analyze_pyramid(&model, 2).unwrap();
            pyramid.codecs = CodecConfig::uniform(codec);
            let bytes = serialize(&pyramid);
            let back = deserialize(&bytes).unwrap();
            assert_eq!(synthesize_to_level(&back, 0).unwrap(), model);
        }
    }
}
