//! Seeded pseudo-random generator used everywhere determinism matters.
//!
//! SplitMix64 (Steele, Lea & Flood 2014): a 64-bit counter-based generator
//! with a fixed output mix. Every shuffle permutation, weight initialization
//! and synthetic dataset in this crate derives from it, so traces and trained
//! weights are bit-reproducible across platforms.

/// SplitMix64 generator. Copyable value semantics; no shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, bound)` via modulo reduction.
    ///
    /// The modulo bias is below 2^-32 for every bound used here; the fixed
    /// reduction rule is part of the portable permutation contract.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform f64 in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard-normal sample via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        // Avoid ln(0) by shifting the first uniform off zero.
        let u1 = (self.next_u64() >> 11) as f64 + 1.0;
        let u1 = u1 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
