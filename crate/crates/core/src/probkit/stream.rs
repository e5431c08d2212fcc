//! Seeded, splittable random streams and the discrete samplers built on them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::special::{binom_mass, ln_gamma};
use crate::error::{check_probability, domain, Result};

/// Means below this use sequential-search inversion.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Identifies one reproducible stream: a seed plus a substream selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream_id: u64,
}

/// A ChaCha20 generator keyed by `(seed, stream_id)`. Each stream id selects
/// one of the cipher's 2^64 independent streams.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: StreamKey,
    rng: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            key: StreamKey { seed, stream_id },
            rng,
        }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Child stream `index` of this stream. The child depends only on this
    /// stream's key and `index`, never on how many draws were taken.
    pub fn substream(&self, index: u64) -> RandomStream {
        let seed = splitmix64(self.key.seed ^ splitmix64(self.key.stream_id));
        RandomStream::new(seed, index)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform on (0, 1).
    fn open_uniform(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        sample_poisson(mean, self)
    }

    pub fn binomial(&mut self, n: u64, p: f64) -> Result<u64> {
        sample_binomial(n, p, self)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Draws from Poisson(mean). Inversion by sequential search below
/// [`POISSON_INVERSION_LIMIT`], Hörmann's transformed rejection (PTRS) above.
pub fn sample_poisson(mean: f64, stream: &mut RandomStream) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return domain(format!("Poisson mean must be finite and non-negative, got {mean}"));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < POISSON_INVERSION_LIMIT {
        Ok(poisson_inversion(mean, stream))
    } else {
        Ok(poisson_ptrs(mean, stream))
    }
}

fn poisson_inversion(mean: f64, stream: &mut RandomStream) -> u64 {
    let u = stream.uniform();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // cdf can stall just below 1 in floating point; the mass past 400 is nil for mean < 30
    while u > cdf && k < 400 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn poisson_ptrs(mean: f64, stream: &mut RandomStream) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = stream.uniform() - 0.5;
        let v = stream.open_uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Draws from Binomial(n, p) by inversion: sequential from zero when the
/// mean of the smaller tail is below 30, otherwise outward from the mode.
pub fn sample_binomial(n: u64, p: f64, stream: &mut RandomStream) -> Result<u64> {
    check_probability("p", p)?;
    if n == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(n);
    }
    let flipped = p > 0.5;
    let q = if flipped { 1.0 - p } else { p };
    let k = if (n as f64) * q < POISSON_INVERSION_LIMIT {
        binomial_sequential(n, q, stream)
    } else {
        binomial_from_mode(n, q, stream)
    };
    Ok(if flipped { n - k } else { k })
}

fn binomial_sequential(n: u64, q: f64, stream: &mut RandomStream) -> u64 {
    let u = stream.uniform();
    let r = q / (1.0 - q);
    let mut pmf = binom_mass(0.0, n as f64, q, 1.0 - q);
    let mut cdf = pmf;
    let mut k = 0u64;
    while u > cdf && k < n {
        pmf *= r * (n - k) as f64 / (k + 1) as f64;
        k += 1;
        cdf += pmf;
    }
    k
}

fn binomial_from_mode(n: u64, q: f64, stream: &mut RandomStream) -> u64 {
    let u = stream.uniform();
    let nf = n as f64;
    let r = q / (1.0 - q);
    let mode = (((n + 1) as f64) * q).floor().min(nf) as u64;
    let p_mode = binom_mass(mode as f64, nf, q, 1.0 - q);
    let mut acc = p_mode;
    if u < acc {
        return mode;
    }
    let (mut lo, mut p_lo) = (mode, p_mode);
    let (mut hi, mut p_hi) = (mode, p_mode);
    let mut last = mode;
    loop {
        let can_up = hi < n;
        let can_down = lo > 0;
        if !can_up && !can_down {
            return last;
        }
        if can_up {
            p_hi *= r * (n - hi) as f64 / (hi + 1) as f64;
            hi += 1;
            acc += p_hi;
            last = hi;
            if u < acc {
                return hi;
            }
        }
        if can_down {
            p_lo *= lo as f64 / ((n - lo + 1) as f64 * r);
            lo -= 1;
            acc += p_lo;
            last = lo;
            if u < acc {
                return lo;
            }
        }
    }
}
