//! Counter-based random streams.
//!
//! Every random decision in a run is drawn from a stream addressed by a key
//! path `(seed, run, purpose, step, unit)`. A stream's output depends only on
//! its address, never on how many other streams were opened before it, so
//! per-agent and per-group work can be split across threads without changing
//! results.
//!
//! The generator itself is SplitMix64 with a keyed starting state: cheap to
//! construct (one multiply-xorshift chain per key component) and good enough
//! statistically for Monte Carlo work. It is not cryptographic.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a stream is used for. Distinct purposes never share draws even when
/// they use the same step and unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Ages = 1,
    Households,
    Occupations,
    AppOwnership,
    Seeding,
    OccupationLayer,
    RandomLayer,
    Infection,
    InfectionBranch,
    Progression,
    Testing,
    TestDelay,
    QuarantineEnter,
    QuarantineBreak,
    Vaccination,
    Immunization,
    DctInform,
    MctTrace,
    Compliance,
    Calibration,
}

/// A position in the key tree. Cheap to copy; deriving children is pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self(mix64(seed ^ 0x5851_F42D_4C95_7F2D))
    }

    /// Key of one run inside an ensemble.
    pub fn for_run(seed: u64, run_index: u64) -> Self {
        Self::root(seed).child(run_index)
    }

    pub fn child(self, tag: u64) -> Self {
        Self(mix64(self.0.rotate_left(23) ^ mix64(tag.wrapping_add(GOLDEN_GAMMA))))
    }

    pub fn purpose(self, purpose: Purpose) -> Self {
        self.child(purpose as u64)
    }

    /// Stream for `(purpose, step, unit)` under this key.
    pub fn stream(self, purpose: Purpose, step: u32, unit: u64) -> RngStream {
        RngStream::from_key(self.purpose(purpose).child(u64::from(step)).child(unit))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// SplitMix64 stream starting at a keyed state.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn from_key(key: StreamKey) -> Self {
        Self { state: key.0 }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.uniform() < p
        }
    }

    /// Uniform integer in `0..n` (`n > 0`), Lemire's multiply-shift method.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        loop {
            let x = self.next_u64();
            let m = u128::from(x) * u128::from(n);
            let low = m as u64;
            if low >= n.wrapping_neg() % n {
                return (m >> 64) as u64;
            }
        }
    }

    /// Index drawn from a discrete distribution given by `probs`
    /// (assumed to sum to one; the last index absorbs rounding).
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_depend_only_on_address() {
        let key = StreamKey::for_run(1234, 3);
        let mut a = key.stream(Purpose::Infection, 7, 42);
        // opening unrelated streams in between must not matter
        let _ = key.stream(Purpose::Testing, 7, 42).next_u64();
        let mut b = key.stream(Purpose::Infection, 7, 42);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_addresses_diverge() {
        let key = StreamKey::for_run(1234, 0);
        let x = key.stream(Purpose::Infection, 7, 42).next_u64();
        assert_ne!(x, key.stream(Purpose::Infection, 7, 43).next_u64());
        assert_ne!(x, key.stream(Purpose::Infection, 8, 42).next_u64());
        assert_ne!(x, key.stream(Purpose::Progression, 7, 42).next_u64());
        assert_ne!(x, StreamKey::for_run(1234, 1).stream(Purpose::Infection, 7, 42).next_u64());
    }

    #[test]
    fn uniform_mean_and_range() {
        let mut s = StreamKey::root(9).stream(Purpose::Calibration, 0, 0);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        // sd of the mean = sqrt(1/12 / n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4e-3, "{mean}");
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut s = StreamKey::root(1).stream(Purpose::Calibration, 0, 1);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[s.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }
}
