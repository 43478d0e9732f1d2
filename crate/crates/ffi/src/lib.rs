//! C ABI over the mesh codec: opaque handles, integer status codes, and a
//! thread-local last-error message. The committed header lives at
//! `include/hexashrink.h`; keep it in sync with the exported surface (the
//! `header_matches_exports` test cross-checks the symbol list).
//!
//! Conventions:
//! - Every fallible call returns `hxs_status` and writes its result through
//!   an out pointer that is left untouched on failure.
//! - Status codes mirror the CLI exit contract: 1 I/O, 2 usage/range,
//!   3 data corruption.
//! - Buffers returned through `hxs_bytes_free` and handles through their
//!   `*_free` functions; all free functions accept NULL.

use hexashrink::codec::CodecId;
use hexashrink::container;
use hexashrink::error::Error;
use hexashrink::grdecl::{self, LevelTag, ParseOptions};
use hexashrink::grid::{CornerPointModel, QuantizationParams};
use hexashrink::pyramid::{
    analyze_streaming, synthesize_to_level, CodecConfig, Pyramid, SlabPlan,
};
use hexashrink::vtk::{export_vtk, VtkOptions};
use libc::{c_char, c_int, size_t};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::ptr;

/// Opaque corner-point model handle.
pub struct HxsModel(CornerPointModel);
/// Opaque pyramid handle.
pub struct HxsPyramid(Pyramid);

pub const HXS_OK: c_int = 0;
pub const HXS_ERR_IO: c_int = 1;
pub const HXS_ERR_USAGE: c_int = 2;
pub const HXS_ERR_DATA: c_int = 3;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(err: &Error) -> c_int {
    let msg = CString::new(err.to_string()).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    err.exit_code() as c_int
}

fn usage_error(msg: &str) -> c_int {
    set_error(&Error::SpecInvalid(msg.to_string()))
}

/// Version string of the underlying library; static, never freed.
#[no_mangle]
pub extern "C" fn hxs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last error on this thread; valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn hxs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn slice_arg<'a>(data: *const u8, len: size_t) -> Option<&'a [u8]> {
    if data.is_null() && len != 0 {
        return None;
    }
    Some(if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(data, len)
    })
}

/// Parse GRDECL text into a model.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` to a writable slot.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_parse_grdecl(
    data: *const u8,
    len: size_t,
    geom_exp: u32,
    prop_exp: u32,
    out: *mut *mut HxsModel,
) -> c_int {
    let Some(bytes) = slice_arg(data, len) else {
        return usage_error("null data pointer");
    };
    if out.is_null() || geom_exp > 9 || prop_exp > 9 {
        return usage_error("bad output pointer or scale exponent");
    }
    let options = ParseOptions {
        quant: QuantizationParams {
            geom_exp: geom_exp as u8,
            prop_exp: prop_exp as u8,
        },
        ..Default::default()
    };
    match grdecl::parse(bytes, &options) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(HxsModel(model)));
            HXS_OK
        }
        Err(e) => set_error(&e),
    }
}

/// Generate a named synthetic fixture (see the CLI `generate` help).
///
/// # Safety
/// `fixture` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_generate(
    fixture: *const c_char,
    seed: u64,
    out: *mut *mut HxsModel,
) -> c_int {
    if fixture.is_null() || out.is_null() {
        return usage_error("null argument");
    }
    let Ok(name) = CStr::from_ptr(fixture).to_str() else {
        return usage_error("fixture name is not UTF-8");
    };
    let spec = match hexashrink::cli::fixture_by_name(name, None, seed) {
        Ok(s) => s,
        Err(e) => return set_error(&e),
    };
    match hexashrink::synthetic::generate(&spec, QuantizationParams::default()) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(HxsModel(model)));
            HXS_OK
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `model` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_free(model: *mut HxsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Cell counts of the model.
///
/// # Safety
/// `model` must be a live handle; dim pointers may be NULL to skip.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_dims(
    model: *const HxsModel,
    ni: *mut u64,
    nj: *mut u64,
    nk: *mut u64,
) {
    if model.is_null() {
        return;
    }
    let dims = (*model).0.dims;
    if !ni.is_null() {
        *ni = dims.ni as u64;
    }
    if !nj.is_null() {
        *nj = dims.nj as u64;
    }
    if !nk.is_null() {
        *nk = dims.nk as u64;
    }
}

/// Decompose a model `levels` steps with one codec for every payload kind
/// ("store", "deflate", "bwt-block", or "lz-markov").
///
/// # Safety
/// `model` live, `codec` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_decompose(
    model: *const HxsModel,
    levels: u32,
    codec: *const c_char,
    out: *mut *mut HxsPyramid,
) -> c_int {
    if model.is_null() || codec.is_null() || out.is_null() {
        return usage_error("null argument");
    }
    let Ok(codec) = CStr::from_ptr(codec).to_str() else {
        return usage_error("codec name is not UTF-8");
    };
    let codec = match CodecId::from_name(codec) {
        Ok(c) => c,
        Err(e) => return set_error(&e),
    };
    let m = &(*model).0;
    match analyze_streaming(m, &SlabPlan::single(m.dims.nk), levels, 0, None) {
        Ok(mut pyramid) => {
            pyramid.codecs = CodecConfig::uniform(codec);
            *out = Box::into_raw(Box::new(HxsPyramid(pyramid)));
            HXS_OK
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `pyramid` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_free(pyramid: *mut HxsPyramid) {
    if !pyramid.is_null() {
        drop(Box::from_raw(pyramid));
    }
}

/// Stored decomposition depth.
///
/// # Safety
/// `pyramid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_levels(pyramid: *const HxsPyramid) -> u32 {
    if pyramid.is_null() {
        return 0;
    }
    (*pyramid).0.header.levels
}

unsafe fn give_bytes(bytes: Vec<u8>, out: *mut *mut u8, out_len: *mut size_t) -> c_int {
    let mut boxed = bytes.into_boxed_slice();
    *out_len = boxed.len();
    *out = boxed.as_mut_ptr();
    std::mem::forget(boxed);
    HXS_OK
}

/// Release a buffer returned by this library.
///
/// # Safety
/// `(data, len)` must be exactly as returned and not already freed.
#[no_mangle]
pub unsafe extern "C" fn hxs_bytes_free(data: *mut u8, len: size_t) {
    if !data.is_null() {
        drop(Box::from_raw(std::slice::from_raw_parts_mut(data, len)));
    }
}

/// Serialize a pyramid to container bytes.
///
/// # Safety
/// `pyramid` live; `out`/`out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_serialize(
    pyramid: *const HxsPyramid,
    out: *mut *mut u8,
    out_len: *mut size_t,
) -> c_int {
    if pyramid.is_null() || out.is_null() || out_len.is_null() {
        return usage_error("null argument");
    }
    give_bytes(container::serialize(&(*pyramid).0), out, out_len)
}

/// Parse container bytes into a pyramid.
///
/// # Safety
/// `data` must point to `len` readable bytes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_deserialize(
    data: *const u8,
    len: size_t,
    out: *mut *mut HxsPyramid,
) -> c_int {
    let Some(bytes) = slice_arg(data, len) else {
        return usage_error("null data pointer");
    };
    if out.is_null() {
        return usage_error("null output pointer");
    }
    match container::deserialize(bytes) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(HxsPyramid(p)));
            HXS_OK
        }
        Err(e) => set_error(&e),
    }
}

/// Reconstruct the model at `level` (0 = original, negative = coarser).
///
/// # Safety
/// `pyramid` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_reconstruct(
    pyramid: *const HxsPyramid,
    level: i32,
    out: *mut *mut HxsModel,
) -> c_int {
    if pyramid.is_null() || out.is_null() {
        return usage_error("null argument");
    }
    match synthesize_to_level(&(*pyramid).0, level) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(HxsModel(model)));
            HXS_OK
        }
        Err(e) => set_error(&e),
    }
}

/// Reconstruct one level and render it as GRDECL text in one call (coarse
/// levels get their display divisors).
///
/// # Safety
/// `pyramid` live; `out`/`out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_reconstruct_grdecl(
    pyramid: *const HxsPyramid,
    level: i32,
    out: *mut *mut u8,
    out_len: *mut size_t,
) -> c_int {
    if pyramid.is_null() || out.is_null() || out_len.is_null() {
        return usage_error("null argument");
    }
    let p = &(*pyramid).0;
    match synthesize_to_level(p, level) {
        Ok(model) => {
            let tag = LevelTag {
                level,
                base_dims: p.header.dims,
            };
            give_bytes(grdecl::write(&model, (level != 0).then_some(tag)), out, out_len)
        }
        Err(e) => set_error(&e),
    }
}

/// Reconstruct one level and render it as a legacy-text VTK grid.
///
/// # Safety
/// `pyramid` live; `out`/`out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_pyramid_export_vtk(
    pyramid: *const HxsPyramid,
    level: i32,
    keep_inactive: c_int,
    out: *mut *mut u8,
    out_len: *mut size_t,
) -> c_int {
    if pyramid.is_null() || out.is_null() || out_len.is_null() {
        return usage_error("null argument");
    }
    let p = &(*pyramid).0;
    match synthesize_to_level(p, level) {
        Ok(model) => {
            let options = VtkOptions {
                keep_inactive: keep_inactive != 0,
                level,
                base_dims: Some(p.header.dims),
            };
            give_bytes(export_vtk(&model, &options), out, out_len)
        }
        Err(e) => set_error(&e),
    }
}

/// Render a model as GRDECL text (level-0 form; parses back bit-exactly).
///
/// # Safety
/// `model` live; `out`/`out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hxs_model_write_grdecl(
    model: *const HxsModel,
    out: *mut *mut u8,
    out_len: *mut size_t,
) -> c_int {
    if model.is_null() || out.is_null() || out_len.is_null() {
        return usage_error("null argument");
    }
    give_bytes(grdecl::write(&(*model).0, None), out, out_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    unsafe fn check(status: c_int) {
        if status != HXS_OK {
            let msg = CStr::from_ptr(hxs_last_error()).to_string_lossy().into_owned();
            panic!("ffi status {status}: {msg}");
        }
    }

    #[test]
    fn full_cycle_through_the_c_surface() {
        unsafe {
            let mut model: *mut HxsModel = ptr::null_mut();
            let name = CString::new("fault16").unwrap();
            check(hxs_model_generate(name.as_ptr(), 7, &mut model));
            let (mut ni, mut nj, mut nk) = (0u64, 0u64, 0u64);
            hxs_model_dims(model, &mut ni, &mut nj, &mut nk);
            assert_eq!((ni, nj, nk), (16, 16, 8));

            let mut text: *mut u8 = ptr::null_mut();
            let mut text_len: size_t = 0;
            check(hxs_model_write_grdecl(model, &mut text, &mut text_len));
            let original = std::slice::from_raw_parts(text, text_len).to_vec();

            let codec = CString::new("deflate").unwrap();
            let mut pyramid: *mut HxsPyramid = ptr::null_mut();
            check(hxs_model_decompose(model, 3, codec.as_ptr(), &mut pyramid));
            assert_eq!(hxs_pyramid_levels(pyramid), 3);

            let mut bytes: *mut u8 = ptr::null_mut();
            let mut bytes_len: size_t = 0;
            check(hxs_pyramid_serialize(pyramid, &mut bytes, &mut bytes_len));

            let mut back: *mut HxsPyramid = ptr::null_mut();
            check(hxs_pyramid_deserialize(bytes, bytes_len, &mut back));
            let mut restored: *mut u8 = ptr::null_mut();
            let mut restored_len: size_t = 0;
            check(hxs_pyramid_reconstruct_grdecl(back, 0, &mut restored, &mut restored_len));
            assert_eq!(
                std::slice::from_raw_parts(restored, restored_len),
                &original[..],
                "bit-exact level 0 through the C surface"
            );

            let mut vtk: *mut u8 = ptr::null_mut();
            let mut vtk_len: size_t = 0;
            check(hxs_pyramid_export_vtk(back, -1, 0, &mut vtk, &mut vtk_len));
            assert!(std::slice::from_raw_parts(vtk, vtk_len)
                .starts_with(b"# vtk DataFile Version 3.0"));

            hxs_bytes_free(text, text_len);
            hxs_bytes_free(bytes, bytes_len);
            hxs_bytes_free(restored, restored_len);
            hxs_bytes_free(vtk, vtk_len);
            hxs_pyramid_free(pyramid);
            hxs_pyramid_free(back);
            hxs_model_free(model);
        }
    }

    #[test]
    fn errors_set_status_and_message() {
        unsafe {
            let mut model: *mut HxsModel = ptr::null_mut();
            let status =
                hxs_model_parse_grdecl(b"BOGUS\n".as_ptr(), 6, 3, 6, &mut model);
            assert_eq!(status, HXS_ERR_DATA);
            assert!(model.is_null());
            let msg = CStr::from_ptr(hxs_last_error()).to_string_lossy().into_owned();
            assert!(!msg.is_empty());

            let name = CString::new("no-such-fixture").unwrap();
            assert_eq!(hxs_model_generate(name.as_ptr(), 0, &mut model), HXS_ERR_USAGE);

            let mut pyr: *mut HxsPyramid = ptr::null_mut();
            assert_eq!(hxs_pyramid_deserialize(b"nope".as_ptr(), 4, &mut pyr), HXS_ERR_DATA);

            // Free functions tolerate NULL.
            hxs_model_free(ptr::null_mut());
            hxs_pyramid_free(ptr::null_mut());
            hxs_bytes_free(ptr::null_mut(), 0);
        }
    }

    /// The committed header must declare every exported symbol.
    #[test]
    fn header_matches_exports() {
        let header = include_str!("../include/hexashrink.h");
        for symbol in [
            "hxs_version",
            "hxs_last_error",
            "hxs_model_parse_grdecl",
            "hxs_model_generate",
            "hxs_model_free",
            "hxs_model_dims",
            "hxs_model_decompose",
            "hxs_model_write_grdecl",
            "hxs_pyramid_free",
            "hxs_pyramid_levels",
            "hxs_pyramid_serialize",
            "hxs_pyramid_deserialize",
            "hxs_pyramid_reconstruct",
            "hxs_pyramid_reconstruct_grdecl",
            "hxs_pyramid_export_vtk",
            "hxs_bytes_free",
        ] {
            assert!(header.contains(symbol), "header misses {symbol}");
        }
    }
}
