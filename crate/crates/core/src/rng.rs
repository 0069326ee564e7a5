//! Seeded linear congruential generator and Fisher–Yates shuffle.
//!
//! Every permutation in the pipeline (train/dev split, ordered-encoding
//! order, split tie-break ranks) comes from this recipe so that any
//! implementation can reproduce it bit for bit:
//!
//! * state is a `u64`, initialised to the seed reinterpreted as `u64`
//!   (two's complement for negative seeds);
//! * each draw advances `state = state * 6364136223846793005 + 1442695040888963407`
//!   (wrapping, mod 2^64) and returns the new state;
//! * a draw in `[0, bound)` is the high 64 bits of the 128-bit product
//!   `draw * bound`;
//! * the shuffle starts from the identity `[0, 1, .., n-1]` and, for
//!   `i = n-1` down to `1`, swaps position `i` with `j = below(i + 1)`.

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: i64) -> Self {
        Self { state: seed as u64 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform draw in `[0, bound)`. `bound` must be non-zero.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

/// Permutation of `0..n` drawn with the documented recipe.
pub fn permutation(n: usize, seed: i64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Lcg::new(seed);
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        perm.swap(i, j);
    }
    perm
}
