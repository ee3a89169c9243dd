use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream for `(seed, index)`, so parallel work draws the
/// same numbers regardless of scheduling.
pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for a sub-task family, keeping families from colliding for one seed.
pub(crate) fn sub_stream(seed: u64, family: u64, index: u64) -> ChaCha8Rng {
    stream(seed ^ family.wrapping_mul(0x9E37_79B9_7F4A_7C15), index)
}
