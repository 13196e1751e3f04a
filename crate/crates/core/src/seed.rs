//! Child-seed derivation.
//!
//! `mix_seed(master, [a, b, ...])` folds each index into the state with the
//! SplitMix64 finalizer: `h = fmix(h ^ fmix(index + GOLDEN))`, starting from
//! `h = fmix(master)`. The result depends only on its inputs, never on
//! execution order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_seed(master: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(fmix(master.wrapping_add(GOLDEN)), |h, &i| {
            fmix(h ^ fmix(i.wrapping_add(GOLDEN)))
        })
}
