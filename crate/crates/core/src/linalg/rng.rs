use crate::{Matrix, Scalar};

/// Seeded pseudorandom generator with uniform and standard-normal sampling.
///
/// The generator is SplitMix64: a 64-bit Weyl counter (increment
/// `0x9E3779B97F4A7C15`) whose output is finalised with two xor-shift
/// multiplies. Uniform doubles take the high 53 bits of an output word;
/// normals come from the Box–Muller transform with the spare value cached.
/// Everything is plain integer and `f64` arithmetic, so a given seed yields
/// the same stream on every platform.
///
/// A generator is single-owner mutable state; derive independent streams
/// with [`Rng::derive`] instead of sharing one across concurrent work.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_normal: Option<f64>,
}

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare_normal: None,
        }
    }

    /// Independent stream addressed by `(seed, stream)`.
    ///
    /// Mixes the stream tag through one SplitMix64 round before seeding, so
    /// nearby tags land in unrelated parts of the state space.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut tag_rng = Rng::new(stream.wrapping_mul(0xA076_1D64_78BD_642F) ^ seed);
        let mixed = tag_rng.next_u64();
        Rng::new(seed ^ mixed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform<S: Scalar>(&mut self) -> S {
        S::cast(self.next_f64())
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn uniform_in<S: Scalar>(&mut self, lo: S, hi: S) -> S {
        lo + (hi - lo) * self.uniform::<S>()
    }

    /// Standard normal sample (Box–Muller).
    pub fn normal<S: Scalar>(&mut self) -> S {
        if let Some(z) = self.spare_normal.take() {
            return S::cast(z);
        }
        // Shift into (0, 1] so the log argument never hits zero.
        let u1 = ((self.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        S::cast(radius * angle.cos())
    }

    /// Uniform index in `0..n` via multiply-shift. Panics when `n` is 0.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.index(i + 1);
            slice.swap(i, j);
        }
    }
}

/// Matrix of i.i.d. standard-normal entries, filled in row-major order.
pub fn sample_normal<S: Scalar>(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<S> {
    assert!(rows >= 1 && cols >= 1, "sample_normal needs a non-empty shape");
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::from_vec(rows, cols, data)
}
