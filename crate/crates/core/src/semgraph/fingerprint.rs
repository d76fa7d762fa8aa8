//! Numeric stand-in for symbolic equivalence of value vectors.
//!
//! Two value vectors are treated as the same semantics when every entry
//! quantizes to the same cell. Entries with magnitude below one sit on an
//! absolute grid of `REL_TOL`; larger entries are split into a binary
//! exponent and a mantissa rounded to `REL_TOL`, so the cell width is at most
//! `REL_TOL * |v|`. NaN and the two infinities get their own cells.

use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;

pub const REL_TOL: f64 = 1.0 / SCALE;
/// Extra input rows appended to every task when fingerprinting.
pub const PROBE_ROWS: usize = 16;
const PROBE_SEED: u64 = 0x5EED_F1A9_0000_0016;

/// 128-bit digest of a quantized value vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint(pub u128);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// The fixed probe rows for a task of `arity` input columns.
///
/// Column `i` of the probe matrix depends only on `i`, never on `arity`.
pub fn probe_inputs(arity: usize) -> DataMatrix {
    let columns = (0..arity)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (0..PROBE_ROWS).map(|_| rng.random_range(-4.0..4.0)).collect()
        })
        .collect();
    DataMatrix::from_columns(columns)
}

const SCALE: f64 = 1e9;

/// Quantization cell of one entry: `(tag, bucket, cell)`.
fn quantize(v: f64) -> (u8, i32, i64) {
    if v.is_nan() {
        return (1, 0, 0);
    }
    if v.is_infinite() {
        return (if v > 0.0 { 2 } else { 3 }, 0, 0);
    }
    let a = v.abs();
    let (bucket, cell) = if a < 1.0 {
        let q = libm::round(a * SCALE) as i64;
        if q >= SCALE as i64 {
            (1, SCALE as i64)
        } else {
            (0, q)
        }
    } else {
        let bits = a.to_bits();
        let e = ((bits >> 52) & 0x7ff) as i32 - 1023;
        let m = f64::from_bits((bits & ((1u64 << 52) - 1)) | (1023u64 << 52));
        let q = libm::round(m * SCALE) as i64;
        if q >= 2 * SCALE as i64 {
            (e + 2, SCALE as i64)
        } else {
            (e + 1, q)
        }
    };
    if cell == 0 {
        return (0, 0, 0);
    }
    (if v < 0.0 { 5 } else { 4 }, bucket, cell)
}

const FNV_OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
const FNV_PRIME: u128 = 0x0000000001000000000000000000013B;

fn feed(h: &mut u128, bytes: &[u8]) {
    for &b in bytes {
        *h ^= b as u128;
        *h = h.wrapping_mul(FNV_PRIME);
    }
}

/// Digest of the task-row values followed by the probe-row values.
pub fn value_fingerprint(values: &[f64], probes: &[f64]) -> Fingerprint {
    let mut h = FNV_OFFSET;
    feed(&mut h, &(values.len() as u64).to_le_bytes());
    for &v in values.iter().chain(probes) {
        let (tag, bucket, cell) = quantize(v);
        feed(&mut h, &[tag]);
        feed(&mut h, &bucket.to_le_bytes());
        feed(&mut h, &cell.to_le_bytes());
    }
    Fingerprint(h)
}
