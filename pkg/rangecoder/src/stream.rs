//! Symbol-level streams on top of the raw range coder.
//!
//! Two models are supported and may be interleaved freely, as long as the
//! decoder mirrors the encoder call for call:
//!
//! * **Gaussian**: each symbol carries its own scale; the mean is either
//!   zero (the caller codes mean-removed residuals) or supplied separately
//!   and rounded half away from zero on both sides.  Scales snap to a
//!   fixed geometric grid and each grid level lazily builds one quantized
//!   table over the alphabet `[-radius, radius]` plus an escape slot.
//! * **Indexed**: the caller supplies quantized cumulative rows (see
//!   [`crate::gaussian::quantize_masses`] for the quantization rule) and a
//!   row index per symbol; the alphabet starts at `lo` and the final slot
//!   is the escape.
//!
//! Escaped values append a side bit and an Exp-Golomb distance after the
//! escape slot, so any `i32` round-trips regardless of the model.

use crate::coder::{escape_decode, escape_encode, RangeDecoder, RangeEncoder, TOTAL};
use crate::gaussian::LevelCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum Status {
    Ok = 0,
    /// Null pointer or inconsistent argument lengths.
    Arg = 1,
    /// One-shot output buffer too small.
    Capacity = 2,
    /// Decoder ran past the end of the byte stream.
    Stream = 3,
    /// Malformed cumulative table or row index out of range.
    Table = 4,
    /// Call sequence violation (push after finish, data before finish).
    State = 5,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Mean quantization shared by encoder and decoder: round half away from
/// zero, clamped so escape distances stay within the one-shot byte budget.
fn rounded_mean(mu: f32) -> i64 {
    let m = (mu as f64).round();
    m.clamp(-2147483648.0, 2147483648.0) as i64
}

/// Validated view over caller-supplied cumulative rows.
pub struct IndexedModel<'a> {
    cdf: &'a [u32],
    rows: usize,
    cols: usize,
}

impl<'a> IndexedModel<'a> {
    pub fn new(cdf: &'a [u32], rows: usize, cols: usize) -> Result<Self, Status> {
        if rows == 0 || cols < 3 || cdf.len() != rows * cols {
            return Err(Status::Table);
        }
        for r in 0..rows {
            let row = &cdf[r * cols..(r + 1) * cols];
            if row[0] != 0 || row[cols - 1] != TOTAL {
                return Err(Status::Table);
            }
            for w in row.windows(2) {
                if w[1] <= w[0] {
                    return Err(Status::Table);
                }
            }
        }
        Ok(IndexedModel { cdf, rows, cols })
    }

    /// Alphabet size; the escape slot sits right after it.
    fn alphabet(&self) -> i64 {
        (self.cols - 2) as i64
    }

    fn row(&self, index: usize) -> &[u32] {
        &self.cdf[index * self.cols..(index + 1) * self.cols]
    }
}

pub struct StreamEncoder {
    rc: Option<RangeEncoder>,
    cache: LevelCache,
    data: Vec<u8>,
}

impl StreamEncoder {
    pub fn new() -> Self {
        StreamEncoder { rc: Some(RangeEncoder::new()), cache: LevelCache::new(), data: Vec::new() }
    }

    fn push_one_gaussian(&mut self, v: i64, sigma: f32) {
        let table = self.cache.get(sigma);
        let slot = table.slot_of(v);
        let (cum, freq) = table.span(slot);
        let radius = table.radius;
        let escape = slot == table.alphabet() as usize;
        let rc = self.rc.as_mut().unwrap();
        rc.encode(cum, freq);
        if escape {
            escape_encode(rc, v, -radius, radius);
        }
    }

    pub fn push_gaussian(&mut self, symbols: &[i32], sigma: &[f32]) -> Result<(), Status> {
        if self.rc.is_none() {
            return Err(Status::State);
        }
        if symbols.len() != sigma.len() {
            return Err(Status::Arg);
        }
        for (&v, &s) in symbols.iter().zip(sigma) {
            self.push_one_gaussian(v as i64, s);
        }
        Ok(())
    }

    pub fn push_gaussian_with_means(
        &mut self,
        symbols: &[i32],
        mu: &[f32],
        sigma: &[f32],
    ) -> Result<(), Status> {
        if self.rc.is_none() {
            return Err(Status::State);
        }
        if symbols.len() != mu.len() || symbols.len() != sigma.len() {
            return Err(Status::Arg);
        }
        for i in 0..symbols.len() {
            let delta = symbols[i] as i64 - rounded_mean(mu[i]);
            self.push_one_gaussian(delta, sigma[i]);
        }
        Ok(())
    }

    pub fn push_indexed(
        &mut self,
        symbols: &[i32],
        model: &IndexedModel,
        indexes: &[i32],
        lo: i32,
    ) -> Result<(), Status> {
        let rc = match self.rc.as_mut() {
            Some(rc) => rc,
            None => return Err(Status::State),
        };
        if symbols.len() != indexes.len() {
            return Err(Status::Arg);
        }
        let alphabet = model.alphabet();
        for (&v, &index) in symbols.iter().zip(indexes) {
            if index < 0 || index as usize >= model.rows {
                return Err(Status::Table);
            }
            let row = model.row(index as usize);
            let k = v as i64 - lo as i64;
            let slot = if (0..alphabet).contains(&k) { k as usize } else { alphabet as usize };
            rc.encode(row[slot], row[slot + 1] - row[slot]);
            if slot == alphabet as usize {
                escape_encode(rc, v as i64, lo as i64, lo as i64 + alphabet - 1);
            }
        }
        Ok(())
    }

    pub fn finish(&mut self) -> Result<(), Status> {
        match self.rc.take() {
            Some(rc) => {
                self.data = rc.finish();
                Ok(())
            }
            None => Err(Status::State),
        }
    }

    pub fn data(&self) -> Result<&[u8], Status> {
        if self.rc.is_some() {
            return Err(Status::State);
        }
        Ok(&self.data)
    }
}

pub struct StreamDecoder {
    rc: RangeDecoder,
    cache: LevelCache,
}

impl StreamDecoder {
    pub fn new(data: Vec<u8>) -> Self {
        StreamDecoder { rc: RangeDecoder::new(data), cache: LevelCache::new() }
    }

    fn read_one_gaussian(&mut self, sigma: f32) -> i64 {
        let table = self.cache.get(sigma);
        let target = self.rc.target();
        let slot = table.cum.partition_point(|&c| c <= target) - 1;
        let (cum, freq) = table.span(slot);
        let radius = table.radius;
        let escape = slot == table.alphabet() as usize;
        let value = table.value_of_slot(slot);
        self.rc.update(cum, freq);
        if escape {
            escape_decode(&mut self.rc, -radius, radius)
        } else {
            value
        }
    }

    pub fn read_gaussian(&mut self, sigma: &[f32], out: &mut [i32]) -> Result<(), Status> {
        if sigma.len() != out.len() {
            return Err(Status::Arg);
        }
        for i in 0..out.len() {
            out[i] = self.read_one_gaussian(sigma[i]) as i32;
            if self.rc.fault() {
                return Err(Status::Stream);
            }
        }
        Ok(())
    }

    pub fn read_gaussian_with_means(
        &mut self,
        mu: &[f32],
        sigma: &[f32],
        out: &mut [i32],
    ) -> Result<(), Status> {
        if mu.len() != out.len() || sigma.len() != out.len() {
            return Err(Status::Arg);
        }
        for i in 0..out.len() {
            let delta = self.read_one_gaussian(sigma[i]);
            out[i] = delta.wrapping_add(rounded_mean(mu[i])) as i32;
            if self.rc.fault() {
                return Err(Status::Stream);
            }
        }
        Ok(())
    }

    pub fn read_indexed(
        &mut self,
        model: &IndexedModel,
        indexes: &[i32],
        lo: i32,
        out: &mut [i32],
    ) -> Result<(), Status> {
        if indexes.len() != out.len() {
            return Err(Status::Arg);
        }
        let alphabet = model.alphabet();
        for i in 0..out.len() {
            let index = indexes[i];
            if index < 0 || index as usize >= model.rows {
                return Err(Status::Table);
            }
            let row = model.row(index as usize);
            let target = self.rc.target();
            let slot = row.partition_point(|&c| c <= target) - 1;
            self.rc.update(row[slot], row[slot + 1] - row[slot]);
            let value = if slot == alphabet as usize {
                escape_decode(&mut self.rc, lo as i64, lo as i64 + alphabet - 1)
            } else {
                lo as i64 + slot as i64
            };
            out[i] = value as i32;
            if self.rc.fault() {
                return Err(Status::Stream);
            }
        }
        Ok(())
    }
}

/// One-call encode of Gaussian symbols with per-symbol means and scales.
pub fn encode_with_means(symbols: &[i32], mu: &[f32], sigma: &[f32]) -> Result<Vec<u8>, Status> {
    let mut enc = StreamEncoder::new();
    enc.push_gaussian_with_means(symbols, mu, sigma)?;
    enc.finish()?;
    Ok(std::mem::take(&mut enc.data))
}

/// Mirror of [`encode_with_means`].
pub fn decode_with_means(
    data: &[u8],
    count: usize,
    mu: &[f32],
    sigma: &[f32],
) -> Result<Vec<i32>, Status> {
    let mut dec = StreamDecoder::new(data.to_vec());
    let mut out = vec![0i32; count];
    dec.read_gaussian_with_means(mu, sigma, &mut out)?;
    Ok(out)
}
