//! Small shared helpers: hashing, seed derivation, decimal formatting.

/// FNV-1a over a byte slice. Used for parameter and config hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// FNV-1a over f32 values via their little-endian bytes.
pub fn hash_f32(values: &[f32]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for b in v.to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Derive an independent stream seed from a base seed and a stream tag
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Round to one decimal, half away from zero in decimal terms.
///
/// A tiny bias keeps values that are exactly x.x5 in decimal (but stored
/// just below it in binary, e.g. 70.05) rounding up the way a reader of
/// a printed table expects.
pub fn round1(x: f64) -> f64 {
    let biased = x * 10.0 + x.signum() * 1e-6;
    biased.round() / 10.0
}

/// Format a fraction as a percentage with one decimal, e.g. 0.701 -> "70.1".
pub fn fmt_pct1(frac: f64) -> String {
    format!("{:.1}", round1(frac * 100.0))
}

/// Format a signed percentage-point difference, e.g. "+13.7" / "-12.7".
pub fn fmt_diff1(diff_pct: f64) -> String {
    let r = round1(diff_pct);
    if r >= 0.0 {
        format!("+{r:.1}")
    } else {
        format!("{r:.1}")
    }
}
