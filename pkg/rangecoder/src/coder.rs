//! 32-bit carry-less range coder with 16-bit frequency precision.
//!
//! The encoder keeps the active interval as `[low, low + range)` inside a
//! sliding 32-bit window.  A byte is emitted as soon as the top 8 bits of
//! the interval are settled; when the interval straddles a byte boundary
//! but has shrunk below 2^16 it is clipped to the boundary instead, which
//! wastes a fraction of a bit but means a later symbol can never propagate
//! a carry into bytes that already left the encoder.  All state is integer,
//! so encoder and decoder stay in lockstep on any platform.

/// Frequencies in a model row must sum to exactly this.
pub const TOTAL: u32 = 1 << 16;

const TOP: u32 = 1 << 24;
const BOT: u32 = 1 << 16;

pub struct RangeEncoder {
    low: u32,
    range: u32,
    out: Vec<u8>,
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, out: Vec::new() }
    }

    /// Narrow the interval to the slice `[cum, cum + freq) / TOTAL`.
    ///
    /// Requires `freq >= 1` and `cum + freq <= TOTAL`.
    pub fn encode(&mut self, cum: u32, freq: u32) {
        debug_assert!(freq >= 1 && cum + freq <= TOTAL);
        let r = self.range / TOTAL;
        self.low = self.low.wrapping_add(r * cum);
        self.range = r * freq;
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                // Straddling a byte boundary with a tiny interval: clip to
                // the boundary so no carry can ever reach emitted bytes.
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    /// Encode one bit at probability 1/2.  Used for escape payloads.
    pub fn encode_bit(&mut self, bit: bool) {
        let half = TOTAL / 2;
        self.encode(if bit { half } else { 0 }, half);
    }

    /// Flush the remaining state.  After this the byte stream determines
    /// every encoded symbol unambiguously.
    ///
    /// Renormalization leaves `range >= 2^16`, so the interval always
    /// contains a value whose bottom 16 bits are zero.  Only its top two
    /// bytes are written; the decoder reconstructs the zero tail itself,
    /// saving two bytes per stream.
    pub fn finish(mut self) -> Vec<u8> {
        let v = self.low.wrapping_add(self.low.wrapping_neg() & (BOT - 1));
        self.out.push((v >> 24) as u8);
        self.out.push((v >> 16) as u8);
        self.out
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }
}

pub struct RangeDecoder {
    low: u32,
    range: u32,
    code: u32,
    buf: Vec<u8>,
    pos: usize,
    pad: u32,
    primed: bool,
    fault: bool,
}

impl RangeDecoder {
    pub fn new(buf: Vec<u8>) -> Self {
        RangeDecoder {
            low: 0,
            range: u32::MAX,
            code: 0,
            buf,
            pos: 0,
            pad: 0,
            primed: false,
            fault: false,
        }
    }

    /// The encoder drops the two zero bytes at the tail of every stream,
    /// so the decoder regenerates up to two of them before a read past the
    /// end counts as corruption.
    fn next_byte(&mut self) -> u32 {
        match self.buf.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                b as u32
            }
            None if self.pad < 2 => {
                self.pad += 1;
                0
            }
            None => {
                self.fault = true;
                0
            }
        }
    }

    fn prime(&mut self) {
        if !self.primed {
            self.primed = true;
            for _ in 0..4 {
                self.code = (self.code << 8) | self.next_byte();
            }
        }
    }

    /// Cumulative-frequency target of the next symbol, in `[0, TOTAL)`.
    /// The caller locates the symbol whose slice contains it and then
    /// confirms with [`RangeDecoder::update`].
    pub fn target(&mut self) -> u32 {
        self.prime();
        let r = self.range / TOTAL;
        let t = self.code.wrapping_sub(self.low) / r;
        t.min(TOTAL - 1)
    }

    /// Mirror of [`RangeEncoder::encode`] for the symbol chosen from
    /// [`RangeDecoder::target`].
    pub fn update(&mut self, cum: u32, freq: u32) {
        let r = self.range / TOTAL;
        self.low = self.low.wrapping_add(r * cum);
        self.range = r * freq;
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.code = (self.code << 8) | self.next_byte();
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    pub fn decode_bit(&mut self) -> bool {
        let half = TOTAL / 2;
        let bit = self.target() >= half;
        self.update(if bit { half } else { 0 }, half);
        bit
    }

    /// True once any read has run past the end of the stream.  Well-formed
    /// streams never trip this; decoded values after a fault are garbage.
    pub fn fault(&self) -> bool {
        self.fault
    }
}

/// Order-0 Exp-Golomb over the raw bit layer: `m + 1` written as
/// `floor(log2(m + 1))` zero bits followed by the value bits.
pub fn eg0_encode(enc: &mut RangeEncoder, m: u64) {
    let v = m + 1;
    let bits = 64 - v.leading_zeros(); // position of the leading one
    for _ in 0..bits - 1 {
        enc.encode_bit(false);
    }
    for i in (0..bits).rev() {
        enc.encode_bit((v >> i) & 1 == 1);
    }
}

pub fn eg0_decode(dec: &mut RangeDecoder) -> u64 {
    let mut zeros = 0u32;
    while !dec.decode_bit() {
        zeros += 1;
        if zeros > 63 || dec.fault() {
            return 0; // fault flag already records the corruption
        }
    }
    let mut v: u64 = 1;
    for _ in 0..zeros {
        v = (v << 1) | dec.decode_bit() as u64;
    }
    v - 1
}

/// Escape payload for a value outside the inclusive alphabet `[a, b]`:
/// one side bit, then the Exp-Golomb distance past the violated bound.
pub fn escape_encode(enc: &mut RangeEncoder, v: i64, a: i64, b: i64) {
    debug_assert!(v < a || v > b);
    if v > b {
        enc.encode_bit(false);
        eg0_encode(enc, (v - b - 1) as u64);
    } else {
        enc.encode_bit(true);
        eg0_encode(enc, (a - v - 1) as u64);
    }
}

pub fn escape_decode(dec: &mut RangeDecoder, a: i64, b: i64) -> i64 {
    let below = dec.decode_bit();
    // Wrapping arithmetic: a corrupt stream may hand back a huge distance,
    // which must yield garbage, not a panic.
    let m = eg0_decode(dec) as i64;
    if below {
        a.wrapping_sub(1).wrapping_sub(m)
    } else {
        b.wrapping_add(1).wrapping_add(m)
    }
}
