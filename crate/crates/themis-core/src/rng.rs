//! Counter-addressed random streams.
//!
//! Every `(seed, year, sample)` triple owns its own ChaCha8 stream, so a
//! sample's draws never depend on which other samples ran or in what order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::{norm_cdf, norm_ppf, norm_sf};

pub fn stream(seed: u64, year_index: u32, sample: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(year_index) << 32) | u64::from(sample));
    rng
}

/// Uniform on the open interval (0, 1).
pub fn uniform_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    norm_ppf(uniform_open(rng))
}

/// Normal(mean, std) restricted to `[lower, upper]`, by inversion; consumes
/// exactly one draw.
pub fn truncated_normal(rng: &mut impl RngCore, mean: f64, std: f64, lower: Option<f64>, upper: Option<f64>) -> f64 {
    let u = uniform_open(rng);
    let clamp = |x: f64| {
        let x = lower.map_or(x, |l| x.max(l));
        upper.map_or(x, |h| x.min(h))
    };
    if !(std > 0.0) {
        return clamp(mean);
    }
    let a = lower.map_or(f64::NEG_INFINITY, |l| (l - mean) / std);
    let b = upper.map_or(f64::INFINITY, |h| (h - mean) / std);
    // Work in whichever tail keeps the CDF values away from 1.
    let z = if a > 0.0 {
        let (sa, sb) = (norm_sf(a), norm_sf(b));
        -norm_ppf(sa - u * (sa - sb))
    } else {
        let (fa, fb) = (norm_cdf(a), norm_cdf(b));
        norm_ppf(fa + u * (fb - fa))
    };
    clamp(mean + std * z)
}
