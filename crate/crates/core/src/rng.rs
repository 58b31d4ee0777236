//! Replayable Gaussian noise addressed by `(seed, replica, step)`.
//!
//! Each replica reads its own ChaCha8 stream (`set_stream(replica)`), so
//! replicas never share state and can run on any thread. Normals are made
//! by Box-Muller from two 64-bit words per pair of steps:
//!
//! ```text
//! steps 2k, 2k+1  <-  u32 words [4k, 4k+4) of the replica stream
//! ```
//!
//! The fixed word budget per step makes the stream seekable, which is what
//! lets two drift families be driven by exactly the same Brownian increments.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Maps 64 random bits to a uniform in `(0, 1]`.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
}

/// Mixes a task path into a fresh 64-bit seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal stream for one replica.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    step: u64,
    spare: Option<f64>,
    seed: u64,
    replica: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        Self {
            rng,
            step: 0,
            spare: None,
            seed,
            replica,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Index of the next normal to be produced.
    pub fn position(&self) -> u64 {
        self.step
    }

    /// Repositions the stream so the next normal is the one for `step`.
    pub fn seek(&mut self, step: u64) {
        let pair = step / 2;
        self.rng.set_word_pos(pair as u128 * 4);
        self.spare = None;
        self.step = pair * 2;
        if step % 2 == 1 {
            self.next_normal();
        }
    }

    #[inline]
    fn pair(&mut self) -> (f64, f64) {
        let u1 = open_unit(self.rng.next_u64());
        let u2 = open_unit(self.rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TWO_PI * u2).sin_cos();
        (r * c, r * s)
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        self.step += 1;
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.pair();
        self.spare = Some(b);
        a
    }

    /// Uniform on `(0, 1]` drawn from the same stream. Consumes one step.
    pub fn next_uniform(&mut self) -> f64 {
        // keep the step/word alignment: a uniform consumes a whole normal slot
        let z = self.next_normal();
        // Phi(z) is uniform; computed via erfc for accuracy in the tails
        0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
    }

    /// The normal for an arbitrary step, leaving the stream untouched.
    pub fn normal_at(&self, step: u64) -> f64 {
        let mut other = self.clone();
        other.seek(step);
        other.next_normal()
    }
}

/// An independent stream of uniforms for bookkeeping decisions (resampling,
/// bridge-crossing tests) that must not disturb the Brownian stream.
#[derive(Clone, Debug)]
pub struct AuxUniforms {
    rng: ChaCha8Rng,
}

impl AuxUniforms {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xA5A5_0F0F));
        rng.set_stream(replica);
        Self { rng }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64).ceil() as usize).clamp(1, n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_bit_exact() {
        let mut a = NoiseStream::new(42, 7);
        let mut b = NoiseStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_normal().to_bits(), b.next_normal().to_bits());
        }
    }

    #[test]
    fn seeking_matches_sequential_reads() {
        let mut s = NoiseStream::new(3, 11);
        let seq: Vec<f64> = (0..257).map(|_| s.next_normal()).collect();
        let fresh = NoiseStream::new(3, 11);
        for &k in &[0u64, 1, 2, 3, 100, 101, 255, 256] {
            assert_eq!(fresh.normal_at(k).to_bits(), seq[k as usize].to_bits(), "step {k}");
        }
        let mut t = NoiseStream::new(3, 11);
        t.seek(101);
        assert_eq!(t.position(), 101);
        assert_eq!(t.next_normal().to_bits(), seq[101].to_bits());
        assert_eq!(t.next_normal().to_bits(), seq[102].to_bits());
    }

    #[test]
    fn replicas_are_distinct() {
        let a = NoiseStream::new(1, 0).normal_at(0);
        let b = NoiseStream::new(1, 1).normal_at(0);
        let c = NoiseStream::new(2, 0).normal_at(0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moments_are_standard_normal() {
        let mut s = NoiseStream::new(99, 0);
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = s.next_normal();
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        let nf = n as f64;
        assert!((m1 / nf).abs() < 4.0 / nf.sqrt());
        assert!((m2 / nf - 1.0).abs() < 4.0 * (2.0 / nf).sqrt());
        assert!((m4 / nf - 3.0).abs() < 4.0 * (96.0 / nf).sqrt());
    }

    #[test]
    fn aux_index_in_range() {
        let mut u = AuxUniforms::new(5, 2);
        for _ in 0..10_000 {
            assert!(u.index(7) < 7);
        }
    }
}
