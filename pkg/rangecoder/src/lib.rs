//! Carry-less range coder with Gaussian and table-driven symbol models.
//!
//! The crate ships three layers:
//!
//! * [`coder`]: the raw 32-bit integer range coder.
//! * [`stream`]: symbol streams over Gaussian scales or caller-supplied
//!   quantized tables, with an escape path that keeps any `i32` codable.
//! * [`ffi`]: the C interface (`rc_*`), built as a `cdylib` for callers
//!   that drive the coder through `dlopen`/ctypes.
//!
//! There is also a small command-line binary for offline use: it codes a
//! symbol file against a side-channel file of per-symbol means and scales
//! (see `src/main.rs` for the formats).
//!
//! All model math is written against IEEE-exact double operations rather
//! than libm, so a given input produces the same bytes on every platform.

pub mod coder;
pub mod ffi;
pub mod gaussian;
pub mod stream;
pub mod tables;

pub use stream::{
    decode_with_means, encode_with_means, IndexedModel, Status, StreamDecoder, StreamEncoder,
};
