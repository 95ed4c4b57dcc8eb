//! Quantized Gaussian frequency tables, built with deterministic math.
//!
//! Probability masses come from an exponential and an error-function
//! approximation written entirely in terms of IEEE-exact operations
//! (+, -, *, /, round, bit manipulation).  Unlike libm's `exp`/`erf`,
//! which differ between platforms in the last few bits, these routines
//! produce bit-identical doubles everywhere, so the quantized tables --
//! and therefore the coded bytes -- match across machines.

use crate::coder::TOTAL;
use crate::tables;

/// Deterministic exp(x) for the ranges the Gaussian model needs.
/// Accurate to ~1e-14 relative, which is far below the 2^-16 frequency
/// granularity the result feeds into.
pub fn exp_det(x: f64) -> f64 {
    if x < -745.0 {
        return 0.0;
    }
    if x > 709.0 {
        return f64::INFINITY;
    }
    // exp(x) = 2^k * exp(r), r = x - k*ln2 in [-ln2/2, ln2/2].
    // The split constant keeps k*LN2_HI exact for |k| < 2^20.
    const INV_LN2: f64 = 1.4426950408889634;
    const LN2_HI: f64 = f64::from_bits(0x3fe62e42fee00000);
    const LN2_LO: f64 = f64::from_bits(0x3dea39ef35793c76);
    let kf = (x * INV_LN2).round();
    let r = (x - kf * LN2_HI) - kf * LN2_LO;
    // Taylor series for exp(r); degree 12 leaves ~1e-16 on this interval.
    let mut p = 1.0 / 479001600.0;
    const INV_FACT: [f64; 12] = [
        1.0,
        1.0,
        1.0 / 2.0,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5040.0,
        1.0 / 40320.0,
        1.0 / 362880.0,
        1.0 / 3628800.0,
        1.0 / 39916800.0,
    ];
    for i in (0..12).rev() {
        p = p * r + INV_FACT[i];
    }
    scale_pow2(p, kf as i64)
}

/// Multiply by 2^k through exponent-bit surgery; handles the subnormal
/// tail by splitting the shift.
fn scale_pow2(x: f64, k: i64) -> f64 {
    if k >= -1022 {
        x * pow2(k)
    } else {
        x * pow2(-500) * pow2(k + 500)
    }
}

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// Deterministic complementary error function.
/// Abramowitz-Stegun style rational-times-exponential fit; absolute error
/// below 2e-7, again dwarfed by 16-bit frequency rounding.
pub fn erfc_det(x: f64) -> f64 {
    let ax = if x < 0.0 { -x } else { x };
    let t = 1.0 / (1.0 + 0.3275911 * ax);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let e = exp_det(-ax * ax);
    let ec = poly * e;
    if x >= 0.0 {
        ec
    } else {
        2.0 - ec
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Mass of the unit bin centred on integer `v` under a zero-mean Gaussian.
pub fn bin_mass(v: i64, sigma: f64) -> f64 {
    let inv = 1.0 / (sigma * SQRT2);
    let lo = (v as f64 - 0.5) * inv;
    let hi = (v as f64 + 0.5) * inv;
    let m = 0.5 * (erfc_det(lo) - erfc_det(hi));
    if m > 0.0 {
        m
    } else {
        0.0
    }
}

/// One quantized table: alphabet `[-radius, radius]` plus a final escape
/// slot, as a cumulative row summing to exactly 2^16 with every slot >= 1.
pub struct LevelTable {
    pub radius: i64,
    pub cum: Vec<u32>,
}

impl LevelTable {
    pub fn build(sigma: f64) -> LevelTable {
        // 4.5 sigma keeps escapes below ~1e-5 per symbol while the floor
        // overhead stays under half a percent of the entropy at every level.
        let mut radius = (4.5 * sigma).ceil() as i64;
        radius = radius.clamp(1, 4096);
        let slots = (2 * radius + 2) as usize; // alphabet + escape
        let mut masses = Vec::with_capacity(slots);
        for v in -radius..=radius {
            masses.push(bin_mass(v, sigma));
        }
        let covered: f64 = masses.iter().sum();
        masses.push((1.0 - covered).max(0.0));
        LevelTable { radius, cum: quantize_masses(&masses) }
    }

    pub fn alphabet(&self) -> i64 {
        2 * self.radius + 1
    }

    /// Slot index of value `v`, or the escape slot when out of range.
    pub fn slot_of(&self, v: i64) -> usize {
        if v >= -self.radius && v <= self.radius {
            (v + self.radius) as usize
        } else {
            self.alphabet() as usize
        }
    }

    pub fn value_of_slot(&self, slot: usize) -> i64 {
        slot as i64 - self.radius
    }

    pub fn span(&self, slot: usize) -> (u32, u32) {
        (self.cum[slot], self.cum[slot + 1] - self.cum[slot])
    }
}

/// Largest-remainder quantization to a cumulative row: every slot gets a
/// floor of 1, the remaining budget is split proportionally, and leftover
/// units go to the largest fractional parts (ties to the lower index).
pub fn quantize_masses(masses: &[f64]) -> Vec<u32> {
    let n = masses.len();
    debug_assert!(n + 1 < TOTAL as usize);
    let budget = (TOTAL as usize - n) as f64;
    let total: f64 = masses.iter().sum();
    let scaled: Vec<f64> = if total > 0.0 {
        masses.iter().map(|&m| m * (budget / total)).collect()
    } else {
        masses.iter().map(|_| budget / n as f64).collect()
    };
    let mut base: Vec<u64> = scaled.iter().map(|&s| s as u64).collect();
    let mut used: u64 = base.iter().sum();
    if used > budget as u64 {
        // Upward float rounding can push a floor past the exact budget;
        // shave the excess from the largest slots.
        let mut over = used - budget as u64;
        let mut big: Vec<usize> = (0..n).collect();
        big.sort_by(|&a, &b| base[b].cmp(&base[a]).then(a.cmp(&b)));
        for &i in &big {
            if over == 0 {
                break;
            }
            let take = over.min(base[i]);
            base[i] -= take;
            over -= take;
        }
        used = budget as u64;
    }
    let mut deficit = budget as u64 - used;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - base[a] as f64;
        let rb = scaled[b] - base[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut freq: Vec<u64> = base.iter().map(|&b| b + 1).collect();
    for &i in &order {
        if deficit == 0 {
            break;
        }
        freq[i] += 1;
        deficit -= 1;
    }
    let mut cum = Vec::with_capacity(n + 1);
    let mut acc = 0u64;
    cum.push(0);
    for f in freq {
        acc += f;
        cum.push(acc as u32);
    }
    debug_assert_eq!(acc, TOTAL as u64);
    cum
}

/// Lazily built per-level tables; owned per coder instance so concurrent
/// coders never share mutable state.
pub struct LevelCache {
    slots: Vec<Option<LevelTable>>,
}

impl LevelCache {
    pub fn new() -> Self {
        let mut slots = Vec::with_capacity(tables::LEVELS);
        slots.resize_with(tables::LEVELS, || None);
        LevelCache { slots }
    }

    pub fn get(&mut self, sigma: f32) -> &LevelTable {
        let idx = tables::level_index(sigma);
        if self.slots[idx].is_none() {
            self.slots[idx] = Some(LevelTable::build(tables::level_value(idx)));
        }
        self.slots[idx].as_ref().unwrap()
    }
}
