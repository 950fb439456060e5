//! Deterministic seed derivation. All randomness in a run flows from one
//! root seed split per (individual, cell, repeat) so that jobs stay
//! reproducible regardless of scheduling order.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a path of components.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(root);
    for &c in path {
        s = splitmix64(s ^ splitmix64(c.wrapping_add(0x517c_c1b7_2722_0a95)));
    }
    s
}

/// Hash a string label into a seed component.
pub fn label(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
