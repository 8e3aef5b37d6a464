use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded ChaCha8 stream. ChaCha output is specified bit for bit, so a seed
/// reproduces the same draws on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            draws: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of values drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Independent stream for the work unit `index` (seed XOR index).
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.seed ^ index)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }

    pub fn range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Fair bit.
    pub fn coin(&mut self) -> bool {
        self.uniform() < 0.5
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        self.draws += 1;
        self.rng.gen_range(0..n as u64) as usize
    }
}

/// SplitMix64 finalizer; decorrelates neighbouring seeds.
pub fn mix_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(7);
        let mut b = RngStream::new(7);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.below(13), b.below(13));
        }
        assert_eq!(a.draws(), 200);
    }

    #[test]
    fn pinned_first_draws() {
        // Guards against silent changes in the generator or its seeding.
        let mut r = RngStream::new(42);
        let first: Vec<u64> = (0..3).map(|_| (r.uniform() * 1e6) as u64).collect();
        assert_eq!(first, vec![681896, 950275, 427516]);
        // SplitMix64 reference output for state 0.
        assert_eq!(mix_seed(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(RngStream::new(42).uniform(), RngStream::new(43).uniform());
    }

    #[test]
    fn substreams_differ() {
        let base = RngStream::new(99);
        let mut s0 = base.substream(0);
        let mut s1 = base.substream(1);
        assert_eq!(s0.seed(), 99);
        assert_ne!(s0.uniform(), s1.uniform());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = RngStream::new(1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
