//! GRDECL subset reader and writer.
//!
//! Supported keywords: SPECGRID/DIMENS, COORD, ZCORN, ACTNUM, PORO, PERM*,
//! NTG, SATNUM, ROCKTYPE, FIPNUM. `--` starts a comment to end of line,
//! tokens are whitespace-separated, `N*V` repeats V N times, and `/`
//! terminates each keyword's data. Unknown keywords are preserved verbatim
//! (through their terminating slash) and bypass every transform.
//!
//! Numbers are converted to fixed point exactly: the decimal digits are
//! shifted against the target scale in integer arithmetic (round half away
//! from zero), never through a float, so parse(write(model)) reproduces the
//! quantized model bit for bit.

use crate::error::{Error, Result};
use crate::grid::{
    zcorn_to_nodez, ActnumField, CellPropertyField, CornerPointModel, GridDims,
    HorizontalFaultPolicy, OpaqueBlock, PropertyKind, QuantizationParams, WORKING_RANGE,
};
use crate::props::footprint;
use std::fmt::Write as _;

/// Keywords the transforms understand; everything else is opaque.
const CONTINUOUS_KEYWORDS: [&str; 2] = ["PORO", "NTG"];
const CATEGORICAL_KEYWORDS: [&str; 3] = ["SATNUM", "ROCKTYPE", "FIPNUM"];

fn known_kind(keyword: &str) -> Option<PropertyKind> {
    if CONTINUOUS_KEYWORDS.contains(&keyword) || keyword.starts_with("PERM") {
        Some(PropertyKind::Continuous)
    } else if CATEGORICAL_KEYWORDS.contains(&keyword) {
        Some(PropertyKind::Categorical)
    } else {
        None
    }
}

/// Parse options: quantization, per-name kind overrides, and the horizontal
/// fault policy.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub quant: QuantizationParams,
    pub kind_overrides: Vec<(String, PropertyKind)>,
    pub fault_policy: HorizontalFaultPolicy,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
    /// Byte offset of the token start in the source.
    offset: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self, ch: char) {
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn skip_space_and_comments(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let mut chars = rest.chars();
            match chars.next() {
                Some(c) if c.is_whitespace() => self.bump(c),
                Some('-') if rest.starts_with("--") => {
                    while let Some(c) = self.src[self.pos..].chars().next() {
                        self.bump(c);
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    /// Next whitespace-delimited token; `/` always stands alone.
    fn next(&mut self) -> Option<Token<'a>> {
        self.skip_space_and_comments();
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        if start >= self.src.len() {
            return None;
        }
        if self.src[start..].starts_with('/') {
            self.bump('/');
            return Some(Token {
                text: "/",
                line,
                col,
                offset: start,
            });
        }
        let mut end = start;
        for c in self.src[start..].chars() {
            if c.is_whitespace() || c == '/' {
                break;
            }
            self.bump(c);
            end = self.pos;
        }
        Some(Token {
            text: &self.src[start..end],
            line,
            col,
            offset: start,
        })
    }
}

fn syntax(tok: &Token, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line: tok.line,
        col: tok.col,
        msg: msg.into(),
    }
}

/// Exact decimal-to-fixed-point conversion: round(text * 10^exp), half away
/// from zero, in integer arithmetic. Accepts fixed notation and E/D
/// exponents.
pub fn parse_fixed(text: &str, exp: u8) -> Option<i64> {
    let bytes = text.as_bytes();
    let mut idx = 0usize;
    let negative = match bytes.first()? {
        b'-' => {
            idx = 1;
            true
        }
        b'+' => {
            idx = 1;
            false
        }
        _ => false,
    };
    let mut mantissa: i128 = 0;
    let mut digits = 0usize;
    let mut frac_digits = 0i32;
    let mut seen_point = false;
    let mut exponent: i32 = 0;
    while idx < bytes.len() {
        match bytes[idx] {
            b'0'..=b'9' => {
                mantissa = mantissa
                    .checked_mul(10)?
                    .checked_add((bytes[idx] - b'0') as i128)?;
                digits += 1;
                if seen_point {
                    frac_digits += 1;
                }
                idx += 1;
            }
            b'.' if !seen_point => {
                seen_point = true;
                idx += 1;
            }
            b'e' | b'E' | b'd' | b'D' => {
                idx += 1;
                let mut esign = 1i32;
                if idx < bytes.len() && (bytes[idx] == b'+' || bytes[idx] == b'-') {
                    if bytes[idx] == b'-' {
                        esign = -1;
                    }
                    idx += 1;
                }
                let mut e = 0i32;
                let mut any = false;
                while idx < bytes.len() && bytes[idx].is_ascii_digit() {
                    e = e.checked_mul(10)?.checked_add((bytes[idx] - b'0') as i32)?;
                    any = true;
                    idx += 1;
                }
                if !any || idx != bytes.len() {
                    return None;
                }
                exponent = esign * e;
            }
            _ => return None,
        }
    }
    if digits == 0 {
        return None;
    }
    let shift = exp as i32 - frac_digits + exponent;
    let value: i128 = if shift >= 0 {
        mantissa.checked_mul(10i128.checked_pow(shift as u32)?)?
    } else if -shift > 38 {
        0
    } else {
        let div = 10i128.checked_pow((-shift) as u32)?;
        let q = mantissa / div;
        let r = mantissa % div;
        if 2 * r >= div {
            q + 1
        } else {
            q
        }
    };
    let value = if negative { -value } else { value };
    if value.unsigned_abs() >= WORKING_RANGE as u128 {
        return None;
    }
    Some(value as i64)
}

/// True when the token is a plain integer literal (no point, no exponent).
fn is_integer_form(text: &str) -> bool {
    let t = text.strip_prefix(['-', '+']).unwrap_or(text);
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
}

struct ArrayReader<'a, 'l> {
    lexer: &'l mut Lexer<'a>,
    keyword: String,
    /// Remaining repeats of the current value.
    pending: Option<(usize, &'a str)>,
    all_integers: bool,
    done: bool,
}

impl<'a, 'l> ArrayReader<'a, 'l> {
    fn new(lexer: &'l mut Lexer<'a>, keyword: &str) -> Self {
        ArrayReader {
            lexer,
            keyword: keyword.to_string(),
            pending: None,
            all_integers: true,
            done: false,
        }
    }

    /// Next raw value token, expanding `N*V` repeats, until the slash.
    fn next_value(&mut self) -> Result<Option<&'a str>> {
        if let Some((count, text)) = self.pending {
            if count > 1 {
                self.pending = Some((count - 1, text));
            } else {
                self.pending = None;
            }
            return Ok(Some(text));
        }
        if self.done {
            return Ok(None);
        }
        let tok = match self.lexer.next() {
            Some(t) => t,
            None => {
                return Err(Error::Syntax {
                    line: self.lexer.line,
                    col: self.lexer.col,
                    msg: format!("unterminated {} section (missing '/')", self.keyword),
                })
            }
        };
        if tok.text == "/" {
            self.done = true;
            return Ok(None);
        }
        let text = if let Some(star) = tok.text.find('*') {
            let (count_s, value_s) = tok.text.split_at(star);
            let value_s = &value_s[1..];
            let count: usize = count_s
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| syntax(&tok, format!("bad repeat count {count_s:?}")))?;
            if value_s.is_empty() {
                return Err(syntax(&tok, "repeat without a value"));
            }
            if count > 1 {
                self.pending = Some((count - 1, value_s));
            }
            value_s
        } else {
            tok.text
        };
        if !is_integer_form(text) {
            self.all_integers = false;
        }
        Ok(Some(text))
    }

    fn read_exact_fixed(&mut self, expected: usize, exp: u8) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(expected);
        while let Some(text) = self.next_value()? {
            let v = parse_fixed(text, exp).ok_or_else(|| Error::Syntax {
                line: self.lexer.line,
                col: self.lexer.col,
                msg: format!("bad number {text:?} in {}", self.keyword),
            })?;
            out.push(v);
            if out.len() > expected {
                return Err(Error::LengthMismatch {
                    keyword: self.keyword.clone(),
                    expected,
                    actual: out.len(),
                });
            }
        }
        if out.len() != expected {
            return Err(Error::LengthMismatch {
                keyword: self.keyword.clone(),
                expected,
                actual: out.len(),
            });
        }
        Ok(out)
    }
}

/// Parse a GRDECL byte stream into a quantized model.
pub fn parse(bytes: &[u8], options: &ParseOptions) -> Result<CornerPointModel> {
    let src = std::str::from_utf8(bytes).map_err(|e| Error::Syntax {
        line: 0,
        col: 0,
        msg: format!("input is not text: {e}"),
    })?;
    let mut lexer = Lexer::new(src);

    let mut dims: Option<GridDims> = None;
    let mut coord: Option<Vec<i64>> = None;
    let mut zcorn: Option<Vec<i64>> = None;
    let mut actnum: Option<Vec<bool>> = None;
    let mut properties: Vec<CellPropertyField> = Vec::new();
    let mut extras: Vec<OpaqueBlock> = Vec::new();

    while let Some(tok) = lexer.next() {
        let keyword = tok.text.to_ascii_uppercase();
        match keyword.as_str() {
            "SPECGRID" | "DIMENS" => {
                let mut reader = ArrayReader::new(&mut lexer, &keyword);
                let mut nums: Vec<usize> = Vec::new();
                while let Some(text) = reader.next_value()? {
                    // SPECGRID trails a numres count and a coordinate-type
                    // letter; only the leading integers matter.
                    if let Ok(n) = text.parse::<usize>() {
                        if nums.len() < 3 {
                            nums.push(n);
                        }
                    }
                }
                if nums.len() < 3 || nums.iter().any(|&n| n == 0) {
                    return Err(syntax(&tok, "SPECGRID/DIMENS needs three positive integers"));
                }
                dims = Some(GridDims::new(nums[0], nums[1], nums[2])?);
            }
            "COORD" => {
                let d = dims.ok_or(Error::MissingDims)?;
                let expected = 6 * d.pillar_count();
                let mut reader = ArrayReader::new(&mut lexer, &keyword);
                coord = Some(reader.read_exact_fixed(expected, options.quant.geom_exp)?);
            }
            "ZCORN" => {
                let d = dims.ok_or(Error::MissingDims)?;
                let expected = 8 * d.cell_count();
                let mut reader = ArrayReader::new(&mut lexer, &keyword);
                zcorn = Some(reader.read_exact_fixed(expected, options.quant.geom_exp)?);
            }
            "ACTNUM" => {
                let d = dims.ok_or(Error::MissingDims)?;
                let mut reader = ArrayReader::new(&mut lexer, &keyword);
                let raw = reader.read_exact_fixed(d.cell_count(), 0)?;
                let mut flags = Vec::with_capacity(raw.len());
                for v in raw {
                    match v {
                        0 => flags.push(false),
                        1 => flags.push(true),
                        other => {
                            return Err(syntax(&tok, format!("ACTNUM value {other} is not 0 or 1")))
                        }
                    }
                }
                actnum = Some(flags);
            }
            _ => {
                let declared = options
                    .kind_overrides
                    .iter()
                    .find(|(name, _)| name.eq_ignore_ascii_case(&keyword))
                    .map(|(_, k)| *k)
                    .or_else(|| known_kind(&keyword));
                if declared.is_some() && dims.is_some() {
                    let d = dims.unwrap();
                    let mut reader = ArrayReader::new(&mut lexer, &keyword);
                    // Collect raw tokens first: inference needs their form.
                    let mut raw: Vec<&str> = Vec::with_capacity(d.cell_count());
                    while let Some(text) = reader.next_value()? {
                        raw.push(text);
                        if raw.len() > d.cell_count() {
                            return Err(Error::LengthMismatch {
                                keyword: keyword.clone(),
                                expected: d.cell_count(),
                                actual: raw.len(),
                            });
                        }
                    }
                    if raw.len() != d.cell_count() {
                        return Err(Error::LengthMismatch {
                            keyword: keyword.clone(),
                            expected: d.cell_count(),
                            actual: raw.len(),
                        });
                    }
                    let kind = declared.unwrap();
                    let exp = match kind {
                        PropertyKind::Continuous => options.quant.prop_exp,
                        PropertyKind::Categorical => 0,
                    };
                    let mut values = Vec::with_capacity(raw.len());
                    for text in raw {
                        let v = parse_fixed(text, exp).ok_or_else(|| Error::Syntax {
                            line: tok.line,
                            col: tok.col,
                            msg: format!("bad number {text:?} in {keyword}"),
                        })?;
                        values.push(v);
                    }
                    properties.push(match kind {
                        PropertyKind::Continuous => CellPropertyField::continuous(keyword, values),
                        PropertyKind::Categorical => {
                            CellPropertyField::categorical(keyword, values)
                        }
                    });
                } else if dims.is_some()
                    && looks_like_property(&lexer, dims.unwrap().cell_count())
                {
                    // Unnamed property array: kind from token forms
                    // (integers are categorical by default).
                    let d = dims.unwrap();
                    let mut reader = ArrayReader::new(&mut lexer, &keyword);
                    let mut raw: Vec<&str> = Vec::with_capacity(d.cell_count());
                    while let Some(text) = reader.next_value()? {
                        raw.push(text);
                        if raw.len() > d.cell_count() {
                            return Err(Error::LengthMismatch {
                                keyword: keyword.clone(),
                                expected: d.cell_count(),
                                actual: raw.len(),
                            });
                        }
                    }
                    if raw.len() != d.cell_count() {
                        return Err(Error::LengthMismatch {
                            keyword: keyword.clone(),
                            expected: d.cell_count(),
                            actual: raw.len(),
                        });
                    }
                    let kind = if reader.all_integers {
                        PropertyKind::Categorical
                    } else {
                        PropertyKind::Continuous
                    };
                    let exp = match kind {
                        PropertyKind::Continuous => options.quant.prop_exp,
                        PropertyKind::Categorical => 0,
                    };
                    let mut values = Vec::with_capacity(raw.len());
                    for text in raw {
                        let v = parse_fixed(text, exp).ok_or_else(|| Error::Syntax {
                            line: tok.line,
                            col: tok.col,
                            msg: format!("bad number {text:?} in {keyword}"),
                        })?;
                        values.push(v);
                    }
                    properties.push(match kind {
                        PropertyKind::Continuous => CellPropertyField::continuous(keyword, values),
                        PropertyKind::Categorical => {
                            CellPropertyField::categorical(keyword, values)
                        }
                    });
                } else {
                    // Opaque block: raw text through its terminating slash.
                    let start = tok.offset;
                    loop {
                        match lexer.next() {
                            Some(t) if t.text == "/" => break,
                            Some(_) => {}
                            None => {
                                return Err(syntax(
                                    &tok,
                                    format!("unterminated unknown section {keyword}"),
                                ))
                            }
                        }
                    }
                    extras.push(OpaqueBlock {
                        keyword,
                        text: src[start..lexer.pos].to_string(),
                    });
                }
            }
        }
    }

    let dims = dims.ok_or(Error::MissingDims)?;
    let coord = coord.ok_or_else(|| Error::LengthMismatch {
        keyword: "COORD".into(),
        expected: 6 * dims.pillar_count(),
        actual: 0,
    })?;
    let zcorn = zcorn.ok_or_else(|| Error::LengthMismatch {
        keyword: "ZCORN".into(),
        expected: 8 * dims.cell_count(),
        actual: 0,
    })?;

    let mut model = CornerPointModel::new(dims, options.quant);
    for (chunk, p) in coord.chunks_exact(6).zip(0..) {
        let (i, j) = (p % (dims.ni + 1), p / (dims.ni + 1));
        let idx = dims.pillar_index(i, j);
        for c in 0..6 {
            model.pillars.planes[c][idx] = chunk[c];
        }
    }
    let (nodez, side) = zcorn_to_nodez(&zcorn, &dims, options.fault_policy)?;
    model.nodez = nodez;
    model.top_z_sidechannel = side;
    model.actnum = ActnumField {
        dims,
        values: actnum.unwrap_or_else(|| vec![true; dims.cell_count()]),
    };
    model.properties = properties;
    model.extras = extras;
    Ok(model)
}

/// Heuristic for unnamed cell arrays: the block consists purely of numeric
/// (or repeat) tokens up to its slash and expands to exactly one value per
/// cell. Checked on a lookahead clone so nothing is consumed.
fn looks_like_property(lexer: &Lexer, cells: usize) -> bool {
    let mut probe = Lexer {
        src: lexer.src,
        pos: lexer.pos,
        line: lexer.line,
        col: lexer.col,
    };
    let mut count = 0usize;
    while let Some(t) = probe.next() {
        if t.text == "/" {
            return count == cells;
        }
        let (n, body) = match t.text.find('*') {
            Some(star) => {
                let (c, rest) = t.text.split_at(star);
                match c.parse::<usize>() {
                    Ok(n) if n >= 1 => (n, &rest[1..]),
                    _ => return false,
                }
            }
            None => (1, t.text),
        };
        if parse_fixed(body, 6).is_none() {
            return false;
        }
        count += n;
        if count > cells {
            return false;
        }
    }
    false
}

/// Format a fixed-point integer at scale 10^exp with exactly `exp`
/// fractional digits.
pub fn format_fixed(v: i64, exp: u8) -> String {
    if exp == 0 {
        return v.to_string();
    }
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    let scale = 10u64.pow(exp as u32);
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = exp as usize)
}

/// Format the exact rational numer / (10^exp * divisor) with `exp`
/// fractional digits, rounding half away from zero. Coarse-level continuous
/// values are stored sums; the divisor is the cell's base footprint.
fn format_scaled(numer: i64, exp: u8, divisor: u64) -> String {
    if divisor == 1 {
        return format_fixed(numer, exp);
    }
    let sign = if numer < 0 { "-" } else { "" };
    let a = numer.unsigned_abs() as u128;
    let scale = 10u128.pow(exp as u32);
    let den = scale * divisor as u128;
    let mut whole = a / den;
    let rem = a % den;
    let scaled = rem * scale;
    let mut frac = scaled / den;
    if 2 * (scaled % den) >= den {
        frac += 1;
        if frac == scale {
            frac = 0;
            whole += 1;
        }
    }
    if exp == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac:0width$}", width = exp as usize)
    }
}

/// Which pyramid level a written file represents; divisors for continuous
/// display values derive from the base dims.
#[derive(Debug, Clone, Copy)]
pub struct LevelTag {
    pub level: i32,
    pub base_dims: GridDims,
}

struct SectionWriter<'a> {
    out: &'a mut String,
    count_on_line: usize,
    run_value: Option<String>,
    run_len: usize,
}

impl<'a> SectionWriter<'a> {
    fn new(out: &'a mut String, keyword: &str) -> Self {
        out.push_str(keyword);
        out.push('\n');
        SectionWriter {
            out,
            count_on_line: 0,
            run_value: None,
            run_len: 0,
        }
    }

    fn emit(&mut self, text: &str) {
        if self.count_on_line == 8 {
            self.out.push('\n');
            self.count_on_line = 0;
        }
        self.out.push(' ');
        self.out.push_str(text);
        self.count_on_line += 1;
    }

    fn flush_run(&mut self) {
        if let Some(v) = self.run_value.take() {
            if self.run_len >= 4 {
                self.emit(&format!("{}*{}", self.run_len, v));
            } else {
                for _ in 0..self.run_len {
                    self.emit(&v);
                }
            }
            self.run_len = 0;
        }
    }

    fn push(&mut self, text: String) {
        match &self.run_value {
            Some(v) if *v == text => self.run_len += 1,
            _ => {
                self.flush_run();
                self.run_value = Some(text);
                self.run_len = 1;
            }
        }
    }

    fn finish(mut self) {
        self.flush_run();
        self.out.push_str(" /\n\n");
    }
}

/// Write a model as a self-contained GRDECL document. `level` tags coarse
/// exports (continuous values get their display divisors); level 0 output
/// reparses bit-exactly.
pub fn write(model: &CornerPointModel, level: Option<LevelTag>) -> Vec<u8> {
    let dims = model.dims;
    let quant = model.quant;
    let mut out = String::new();
    let lvl = level.map(|l| l.level).unwrap_or(0);
    let _ = writeln!(
        out,
        "-- hexashrink export: level {} dims {}x{}x{} geom_scale 1e{} prop_scale 1e{}",
        lvl, dims.ni, dims.nj, dims.nk, quant.geom_exp, quant.prop_exp
    );
    out.push('\n');

    let _ = writeln!(out, "SPECGRID\n {} {} {} 1 F /\n", dims.ni, dims.nj, dims.nk);

    let mut w = SectionWriter::new(&mut out, "COORD");
    for j in 0..=dims.nj {
        for i in 0..=dims.ni {
            let p = dims.pillar_index(i, j);
            for c in 0..6 {
                w.push(format_fixed(model.pillars.planes[c][p], quant.geom_exp));
            }
        }
    }
    w.finish();

    let zcorn =
        crate::grid::nodez_to_zcorn(&model.nodez, &dims, model.top_z_sidechannel.as_deref())
            .expect("model nodez extent matches dims");
    let mut w = SectionWriter::new(&mut out, "ZCORN");
    for v in &zcorn {
        w.push(format_fixed(*v, quant.geom_exp));
    }
    w.finish();

    let mut w = SectionWriter::new(&mut out, "ACTNUM");
    for &a in &model.actnum.values {
        w.push(if a { "1".into() } else { "0".into() });
    }
    w.finish();

    let depth = level.map(|l| l.level.unsigned_abs()).unwrap_or(0);
    for field in &model.properties {
        let mut w = SectionWriter::new(&mut out, &field.name);
        match field.kind {
            PropertyKind::Categorical => {
                for &v in &field.values {
                    w.push(v.to_string());
                }
            }
            PropertyKind::Continuous => {
                if depth == 0 {
                    for &v in &field.values {
                        w.push(format_fixed(v, quant.prop_exp));
                    }
                } else {
                    let base = level.unwrap().base_dims;
                    for k in 0..dims.nk {
                        for j in 0..dims.nj {
                            for i in 0..dims.ni {
                                let div = footprint(&base, depth, i, j, k) as u64;
                                let v = field.values[dims.cell_index(i, j, k)];
                                w.push(format_scaled(v, quant.prop_exp, div));
                            }
                        }
                    }
                }
            }
        }
        w.finish();
    }

    for block in &model.extras {
        out.push_str(&block.text);
        out.push_str("\n\n");
    }

    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{self, GeneratorSpec};

    fn opts() -> ParseOptions {
        ParseOptions::default()
    }

    #[test]
    fn parse_fixed_exactly() {
        assert_eq!(parse_fixed("1234.5678", 3), Some(1234568));
        assert_eq!(parse_fixed("0.2345", 6), Some(234500));
        assert_eq!(parse_fixed("-0.0005", 3), Some(-1));
        assert_eq!(parse_fixed("1.5E+2", 0), Some(150));
        assert_eq!(parse_fixed("2.5e-1", 2), Some(25));
        assert_eq!(parse_fixed("1.0D0", 1), Some(10));
        assert_eq!(parse_fixed("7", 3), Some(7000));
        assert_eq!(parse_fixed("x", 3), None);
        assert_eq!(parse_fixed("1.2.3", 3), None);
        assert_eq!(parse_fixed("", 3), None);
    }

    #[test]
    fn single_cell_fragment() {
        let text = "DIMENS\n 1 1 1 /\nCOORD\n 0 0 0 0 0 1  1 0 0 1 0 1  0 1 0 0 1 1  1 1 0 1 1 1 /\nZCORN\n 8*0.5 /\n";
        let model = parse(text.as_bytes(), &opts()).unwrap();
        assert_eq!(model.dims, GridDims::new(1, 1, 1).unwrap());
        // All corner depths 500 at scale 1e3.
        let zcorn = crate::grid::nodez_to_zcorn(&model.nodez, &model.dims, None).unwrap();
        assert_eq!(zcorn, vec![500; 8]);
    }

    #[test]
    fn actnum_run_length_semantics() {
        let text = "DIMENS\n 3 2 1 /\nCOORD\n 72*0 /\nZCORN\n 24*0 24*1 /\nACTNUM\n 3*1 0 2*1 /\n";
        let model = parse(text.as_bytes(), &opts()).unwrap();
        assert_eq!(model.actnum.values, vec![true, true, true, false, true, true]);
    }

    #[test]
    fn missing_dims_and_length_errors() {
        assert!(matches!(
            parse(b"COORD\n 0 /\n", &opts()),
            Err(Error::MissingDims)
        ));
        let short = "DIMENS\n 1 1 1 /\nCOORD\n 0 0 0 /\n";
        assert!(matches!(
            parse(short.as_bytes(), &opts()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unknown_keyword_preserved() {
        let text = "MAPAXES\n 0. 100. 0. 0. 0. 100. /\nDIMENS\n 1 1 1 /\nCOORD\n 24*0 /\nZCORN\n 4*0 4*1 /\nGRIDUNIT\n METRES /\n";
        let model = parse(text.as_bytes(), &opts()).unwrap();
        // MAPAXES is six numbers but precedes DIMENS, so it stays opaque;
        // GRIDUNIT carries a word.
        assert_eq!(model.extras.len(), 2);
        assert_eq!(model.extras[0].keyword, "MAPAXES");
        assert!(model.extras[0].text.ends_with('/'));
        assert_eq!(model.extras[1].keyword, "GRIDUNIT");
        let again = parse(&write(&model, None), &opts()).unwrap();
        assert_eq!(again.extras, model.extras);
    }

    #[test]
    fn kind_inference_and_overrides() {
        let text = "DIMENS\n 2 1 1 /\nCOORD\n 36*0 /\nZCORN\n 8*0 8*1 /\nSATNUM\n 1 2 /\nPORO\n 0.1 0.25 /\nMYFIELD\n 0.5 1 /\nMYCLASS\n 3 4 /\n";
        let model = parse(text.as_bytes(), &opts()).unwrap();
        assert_eq!(model.properties[0].kind, PropertyKind::Categorical);
        assert_eq!(model.properties[0].values, vec![1, 2]);
        assert_eq!(model.properties[1].kind, PropertyKind::Continuous);
        assert_eq!(model.properties[1].values, vec![100_000, 250_000]);
        // Unnamed arrays: reals are continuous, integers categorical.
        assert_eq!(model.properties[2].kind, PropertyKind::Continuous);
        assert_eq!(model.properties[3].kind, PropertyKind::Categorical);

        let mut o = opts();
        o.kind_overrides
            .push(("MYCLASS".into(), PropertyKind::Continuous));
        let model2 = parse(text.as_bytes(), &o).unwrap();
        assert_eq!(model2.properties[3].kind, PropertyKind::Continuous);
        assert_eq!(model2.properties[3].values, vec![3_000_000, 4_000_000]);
    }

    #[test]
    fn write_emits_runs() {
        let model = synthetic::generate(
            &GeneratorSpec::flat_layered(3, 2, 2),
            QuantizationParams::default(),
        )
        .unwrap();
        let text = String::from_utf8(write(&model, None)).unwrap();
        // All-active ACTNUM collapses to one maximal run.
        assert!(text.contains("ACTNUM\n 12*1 /"), "{text}");
    }

    #[test]
    fn coarse_level_writes_display_means() {
        // 2x1x1 cells of PORO 0.1 and 0.3: one level of the sum scheme gives
        // a single coarse cell whose display value is the mean 0.2.
        let text = "DIMENS\n 2 1 1 /\nCOORD\n 36*0 /\nZCORN\n 8*0 8*10 /\nPORO\n 0.1 0.3 /\n";
        let model = parse(text.as_bytes(), &opts()).unwrap();
        let pyramid = crate::pyramid::analyze_pyramid(&model, 1).unwrap();
        let coarse = crate::pyramid::synthesize_to_level(&pyramid, -1).unwrap();
        assert_eq!(coarse.properties[0].values, vec![400_000]); // stored sum
        let out = String::from_utf8(write(
            &coarse,
            Some(LevelTag {
                level: -1,
                base_dims: model.dims,
            }),
        ))
        .unwrap();
        assert!(out.contains("PORO\n 0.200000 /"), "{out}");
    }

    #[test]
    fn roundtrip_randomized_models() {
        for seed in 0..12u64 {
            let spec = GeneratorSpec::randomized(
                1 + (seed as usize * 3) % 7,
                1 + (seed as usize * 5) % 6,
                1 + (seed as usize * 7) % 5,
                usize::from(seed % 3 == 0),
                if seed % 2 == 0 { 1.0 } else { 0.6 },
                seed,
            );
            let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
            let bytes = write(&model, None);
            let back = parse(&bytes, &opts()).unwrap();
            assert_eq!(back, model, "seed {seed}");
            // Canonical form: writing again yields identical bytes.
            assert_eq!(write(&back, None), bytes);
        }
    }
}
