//! Nimber multiplication.
//!
//! Together with bitwise exclusive-or as addition, nimber multiplication
//! turns the naturals below any Fermat 2-power `2^(2^m)` into a finite field
//! of characteristic two. The recursion below uses the two classical
//! reduction rules for a Fermat 2-power `F = 2^(2^k)`:
//!
//! * `F ⊗ x = F · x` (ordinary product) for `x < F`,
//! * `F ⊗ F = 3F/2 = F ⊕ F/2`.

/// Nimber product of two naturals.
pub fn nim_mul(x: u64, y: u64) -> u64 {
    if x < 2 || y < 2 {
        // 0 annihilates, 1 is the multiplicative identity.
        return x * y;
    }
    // Smallest half-width h (a power of two) with x, y < 2^(2h).
    let mut h: u32 = 1;
    while h < 32 && ((x >> (2 * h)) != 0 || (y >> (2 * h)) != 0) {
        h *= 2;
    }
    let f = 1u64 << h;
    let (a1, a0) = (x >> h, x & (f - 1));
    let (b1, b0) = (y >> h, y & (f - 1));
    let low = nim_mul(a0, b0);
    let high = nim_mul(a1, b1);
    // Karatsuba-style: mid = a1 b0 ⊕ a0 b1.
    let mid = nim_mul(a0 ^ a1, b0 ^ b1) ^ low ^ high;
    // a1 b1 F² = a1 b1 (F ⊕ F/2) = (high << h) ⊕ (high ⊗ F/2).
    let carry = nim_mul(high, f >> 1);
    ((high ^ mid) << h) ^ carry ^ low
}

/// Multiplicative inverse in the nim-field of order `2^(2^m)`, found by
/// exhaustive scan of the block. Returns `None` for 0.
pub fn nim_inv_in_block(x: u64, block: u64) -> Option<u64> {
    if x == 0 {
        return None;
    }
    (0..block).find(|&y| nim_mul(x, y) == 1)
}
