//! C interface.
//!
//! Every function returns a status code: 0 ok, 1 bad argument, 2 output
//! buffer too small, 3 exhausted/corrupt stream, 4 malformed table or row
//! index, 5 call-sequence violation.  Handles are opaque and must be
//! released with the matching `_free`; they hold no process-global state,
//! so independent handles are safe to drive from different threads.
//!
//! The streaming decoder copies the input buffer up front, so the caller
//! may release it as soon as `rc_decoder_new` returns.  The pointer from
//! `rc_encoder_data` stays valid until `rc_encoder_free`.

use std::os::raw::c_void;

use crate::stream::{
    decode_with_means, encode_with_means, IndexedModel, Status, StreamDecoder, StreamEncoder,
};

fn status(result: Result<(), Status>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) => e.code(),
    }
}

unsafe fn in_slice<'a, T>(ptr: *const T, n: usize) -> Option<&'a [T]> {
    if n == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, n))
    }
}

unsafe fn out_slice<'a, T>(ptr: *mut T, n: usize) -> Option<&'a mut [T]> {
    if n == 0 {
        Some(&mut [])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(ptr, n))
    }
}

/// One-shot encode of `n` symbols with per-symbol Gaussian means and
/// scales.  Writes at most `cap` bytes to `out` and the true length to
/// `written`; a 12 bytes/symbol + 64 budget is always sufficient.
#[no_mangle]
pub unsafe extern "C" fn rc_encode(
    symbols: *const i32,
    n: usize,
    mu: *const f32,
    sigma: *const f32,
    out: *mut u8,
    cap: usize,
    written: *mut usize,
) -> i32 {
    let (symbols, mu, sigma) = match (in_slice(symbols, n), in_slice(mu, n), in_slice(sigma, n)) {
        (Some(s), Some(m), Some(g)) => (s, m, g),
        _ => return Status::Arg.code(),
    };
    if written.is_null() {
        return Status::Arg.code();
    }
    let data = match encode_with_means(symbols, mu, sigma) {
        Ok(d) => d,
        Err(e) => return e.code(),
    };
    *written = data.len();
    if data.len() > cap {
        return Status::Capacity.code();
    }
    if !data.is_empty() {
        if out.is_null() {
            return Status::Arg.code();
        }
        std::ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    }
    0
}

/// Mirror of [`rc_encode`].
#[no_mangle]
pub unsafe extern "C" fn rc_decode(
    buf: *const u8,
    len: usize,
    n: usize,
    mu: *const f32,
    sigma: *const f32,
    out: *mut i32,
) -> i32 {
    let (buf, mu, sigma) = match (in_slice(buf, len), in_slice(mu, n), in_slice(sigma, n)) {
        (Some(b), Some(m), Some(g)) => (b, m, g),
        _ => return Status::Arg.code(),
    };
    let out = match out_slice(out, n) {
        Some(o) => o,
        None => return Status::Arg.code(),
    };
    match decode_with_means(buf, n, mu, sigma) {
        Ok(values) => {
            out.copy_from_slice(&values);
            0
        }
        Err(e) => e.code(),
    }
}

#[no_mangle]
pub extern "C" fn rc_encoder_new() -> *mut c_void {
    Box::into_raw(Box::new(StreamEncoder::new())) as *mut c_void
}

unsafe fn encoder<'a>(handle: *mut c_void) -> Option<&'a mut StreamEncoder> {
    (handle as *mut StreamEncoder).as_mut()
}

unsafe fn decoder<'a>(handle: *mut c_void) -> Option<&'a mut StreamDecoder> {
    (handle as *mut StreamDecoder).as_mut()
}

/// Append mean-removed Gaussian symbols with per-symbol scales.
#[no_mangle]
pub unsafe extern "C" fn rc_encoder_push_gaussian(
    handle: *mut c_void,
    symbols: *const i32,
    n: usize,
    sigma: *const f32,
) -> i32 {
    let enc = match encoder(handle) {
        Some(e) => e,
        None => return Status::Arg.code(),
    };
    match (in_slice(symbols, n), in_slice(sigma, n)) {
        (Some(s), Some(g)) => status(enc.push_gaussian(s, g)),
        _ => Status::Arg.code(),
    }
}

/// Append symbols coded against caller-supplied cumulative rows of shape
/// `rows x cols`; `indexes[i]` picks the row for symbol `i` and `lo` is
/// the value of the first alphabet slot.
#[no_mangle]
pub unsafe extern "C" fn rc_encoder_push_indexed(
    handle: *mut c_void,
    symbols: *const i32,
    n: usize,
    cdf: *const u32,
    rows: usize,
    cols: usize,
    indexes: *const i32,
    lo: i32,
) -> i32 {
    let enc = match encoder(handle) {
        Some(e) => e,
        None => return Status::Arg.code(),
    };
    let (symbols, cdf, indexes) = match (
        in_slice(symbols, n),
        in_slice(cdf, rows.saturating_mul(cols)),
        in_slice(indexes, n),
    ) {
        (Some(s), Some(c), Some(i)) => (s, c, i),
        _ => return Status::Arg.code(),
    };
    let model = match IndexedModel::new(cdf, rows, cols) {
        Ok(m) => m,
        Err(e) => return e.code(),
    };
    status(enc.push_indexed(symbols, &model, indexes, lo))
}

#[no_mangle]
pub unsafe extern "C" fn rc_encoder_finish(handle: *mut c_void) -> i32 {
    match encoder(handle) {
        Some(enc) => status(enc.finish()),
        None => Status::Arg.code(),
    }
}

/// Expose the finished byte stream; valid until `rc_encoder_free`.
#[no_mangle]
pub unsafe extern "C" fn rc_encoder_data(
    handle: *mut c_void,
    ptr: *mut *const u8,
    len: *mut usize,
) -> i32 {
    let enc = match encoder(handle) {
        Some(e) => e,
        None => return Status::Arg.code(),
    };
    if ptr.is_null() || len.is_null() {
        return Status::Arg.code();
    }
    match enc.data() {
        Ok(data) => {
            *ptr = data.as_ptr();
            *len = data.len();
            0
        }
        Err(e) => e.code(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn rc_encoder_free(handle: *mut c_void) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut StreamEncoder));
    }
}

/// Start decoding a finished stream; the buffer is copied.
#[no_mangle]
pub unsafe extern "C" fn rc_decoder_new(buf: *const u8, len: usize) -> *mut c_void {
    let data = match in_slice(buf, len) {
        Some(b) => b.to_vec(),
        None => return std::ptr::null_mut(),
    };
    Box::into_raw(Box::new(StreamDecoder::new(data))) as *mut c_void
}

#[no_mangle]
pub unsafe extern "C" fn rc_decoder_read_gaussian(
    handle: *mut c_void,
    count: usize,
    sigma: *const f32,
    out: *mut i32,
) -> i32 {
    let dec = match decoder(handle) {
        Some(d) => d,
        None => return Status::Arg.code(),
    };
    match (in_slice(sigma, count), out_slice(out, count)) {
        (Some(g), Some(o)) => status(dec.read_gaussian(g, o)),
        _ => Status::Arg.code(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn rc_decoder_read_indexed(
    handle: *mut c_void,
    count: usize,
    cdf: *const u32,
    rows: usize,
    cols: usize,
    indexes: *const i32,
    out: *mut i32,
    lo: i32,
) -> i32 {
    let dec = match decoder(handle) {
        Some(d) => d,
        None => return Status::Arg.code(),
    };
    let (cdf, indexes, out) = match (
        in_slice(cdf, rows.saturating_mul(cols)),
        in_slice(indexes, count),
        out_slice(out, count),
    ) {
        (Some(c), Some(i), Some(o)) => (c, i, o),
        _ => return Status::Arg.code(),
    };
    let model = match IndexedModel::new(cdf, rows, cols) {
        Ok(m) => m,
        Err(e) => return e.code(),
    };
    status(dec.read_indexed(&model, indexes, lo, out))
}

#[no_mangle]
pub unsafe extern "C" fn rc_decoder_free(handle: *mut c_void) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut StreamDecoder));
    }
}
