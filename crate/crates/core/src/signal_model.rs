//! Sparse channels, PN training sequences and noisy observations
//! `y(t) = h^T x(t) + z(t)`.
//!
//! Each trial is driven by one 64-bit seed. The channel draw, the training
//! sequence and the noise come from disjoint ChaCha streams keyed by that
//! seed, so e.g. changing the channel length leaves the noise draws intact.

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};

const CHANNEL_STREAM: u64 = 0;
const TRAINING_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds `parts` into `master` with the SplitMix64 finalizer.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(master), |acc, &p| {
        mix(acc.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix(p)))
    })
}

/// Linear noise power giving `snr_db` for training power `signal_power`.
/// `+inf` dB maps to a noise-free channel.
pub fn noise_power_for_snr(snr_db: f64, signal_power: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        signal_power / 10f64.powf(snr_db / 10.0)
    }
}

/// Ground-truth sparse channel with unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<f64>,
    support: Vec<usize>,
}

impl ChannelRealization {
    /// Wraps an explicit tap vector; the support is its nonzero positions.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("channel needs at least one tap"));
        }
        let support = taps
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { taps, support })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Sorted nonzero positions.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

/// Draws `sparsity` positions uniformly without replacement, gives each an
/// independent N(0, 1) gain and scales the vector to unit l2 norm.
pub fn generate_channel(n_taps: usize, sparsity: usize, seed: u64) -> Result<ChannelRealization> {
    if n_taps == 0 || sparsity == 0 || sparsity > n_taps {
        return Err(Error::config(format!(
            "need 1 <= sparsity <= n_taps, got sparsity {sparsity} with n_taps {n_taps}"
        )));
    }
    let mut rng = substream(seed, CHANNEL_STREAM);
    let mut support = index::sample(&mut rng, n_taps, sparsity).into_vec();
    support.sort_unstable();
    let gains: Vec<f64> = loop {
        let g: Vec<f64> = (0..sparsity).map(|_| StandardNormal.sample(&mut rng)).collect();
        if g.iter().all(|&v| v != 0.0) {
            break g;
        }
    };
    let norm = gains.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut taps = vec![0.0; n_taps];
    for (&i, g) in support.iter().zip(&gains) {
        taps[i] = g / norm;
    }
    Ok(ChannelRealization { taps, support })
}

/// `h^T x + sqrt(noise_power) * noise_draw`.
pub fn observe(channel: &ChannelRealization, regressor: &[f64], noise_power: f64, noise_draw: f64) -> Result<f64> {
    check_len(channel.n_taps(), regressor.len())?;
    let clean: f64 = channel.taps.iter().zip(regressor).map(|(h, x)| h * x).sum();
    Ok(clean + noise_power.sqrt() * noise_draw)
}

/// Seeded source of training windows and noisy observations.
///
/// The scalar training sequence is i.i.d. equiprobable `+-sqrt(P0)`;
/// `x(t)` is the `t`-th 32-bit word of the training stream, so any time
/// index can be read directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStream {
    pub seed: u64,
    pub n_taps: usize,
    pub noise_power: f64,
    pub signal_power: f64,
}

impl SampleStream {
    pub fn new(seed: u64, n_taps: usize, noise_power: f64, signal_power: f64) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::config("stream needs at least one tap"));
        }
        if !(noise_power >= 0.0) || !noise_power.is_finite() {
            return Err(Error::config(format!("noise power {noise_power} must be finite and >= 0")));
        }
        if !(signal_power > 0.0) || !signal_power.is_finite() {
            return Err(Error::config(format!("signal power {signal_power} must be finite and > 0")));
        }
        Ok(Self {
            seed,
            n_taps,
            noise_power,
            signal_power,
        })
    }

    fn amplitude(&self) -> f64 {
        self.signal_power.sqrt()
    }

    fn chip(&self, word: u32) -> f64 {
        if word & 1 == 1 {
            self.amplitude()
        } else {
            -self.amplitude()
        }
    }

    /// Scalar training sample `x(t)`.
    pub fn scalar_at(&self, t: usize) -> f64 {
        let mut rng = substream(self.seed, TRAINING_STREAM);
        rng.set_word_pos(t as u128);
        self.chip(rng.next_u32())
    }

    /// `[x(t), x(t-1), ..., x(t-N+1)]`, zero where the index is negative.
    pub fn regressor_at(&self, t: usize) -> Vec<f64> {
        (0..self.n_taps)
            .map(|lag| if lag <= t { self.scalar_at(t - lag) } else { 0.0 })
            .collect()
    }

    /// Endless `(x(t), y(t))` sequence for `t = 0, 1, ...` against `channel`.
    pub fn samples<'a>(&self, channel: &'a ChannelRealization) -> Result<Samples<'a>> {
        check_len(self.n_taps, channel.n_taps())?;
        Ok(Samples {
            stream: *self,
            channel,
            training: substream(self.seed, TRAINING_STREAM),
            noise: substream(self.seed, NOISE_STREAM),
            window: vec![0.0; self.n_taps],
        })
    }
}

/// Sliding-window iterator returned by [`SampleStream::samples`].
pub struct Samples<'a> {
    stream: SampleStream,
    channel: &'a ChannelRealization,
    training: ChaCha8Rng,
    noise: ChaCha8Rng,
    window: Vec<f64>,
}

impl Iterator for Samples<'_> {
    type Item = (Vec<f64>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        self.window.rotate_right(1);
        self.window[0] = self.stream.chip(self.training.next_u32());
        let draw: f64 = StandardNormal.sample(&mut self.noise);
        let y = observe(self.channel, &self.window, self.stream.noise_power, draw)
            .expect("window length checked at construction");
        Some((self.window.clone(), y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn fig1_shaped_channel() {
        let h = generate_channel(16, 3, 11).unwrap();
        assert_eq!(h.n_taps(), 16);
        assert_eq!(h.sparsity(), 3);
        assert_eq!(h.taps().iter().filter(|&&v| v != 0.0).count(), 3);
        let norm = h.taps().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_channel_and_determinism() {
        let h = generate_channel(8, 8, 5).unwrap();
        assert_eq!(h.sparsity(), 8);
        assert_eq!(h, generate_channel(8, 8, 5).unwrap());
        assert_ne!(h, generate_channel(8, 8, 6).unwrap());
    }

    #[test]
    fn channel_rejects_bad_sparsity() {
        assert!(generate_channel(4, 5, 0).is_err());
        assert!(generate_channel(4, 0, 0).is_err());
        assert!(generate_channel(0, 0, 0).is_err());
    }

    #[test]
    fn support_is_uniform() {
        let mut counts = [0usize; 10];
        for seed in 0..10_000 {
            counts[generate_channel(10, 1, seed).unwrap().support()[0]] += 1;
        }
        for c in counts {
            let freq = c as f64 / 10_000.0;
            assert!((freq - 0.1).abs() <= 0.01, "{counts:?}");
        }
    }

    #[test]
    fn regressor_window_examples() {
        let s = SampleStream::new(9, 4, 0.0, 1.0).unwrap();
        let r0 = s.regressor_at(0);
        assert_eq!(&r0[1..], &[0.0, 0.0, 0.0]);
        assert_eq!(r0[0].abs(), 1.0);
        for t in 0..12 {
            let r = s.regressor_at(t);
            let energy: f64 = r.iter().map(|v| v * v).sum();
            assert_eq!(energy, (t + 1).min(4) as f64);
            let next = s.regressor_at(t + 1);
            assert_eq!(&r[..3], &next[1..]);
        }
    }

    #[test]
    fn signal_power_scales_chips() {
        let s = SampleStream::new(1, 3, 0.0, 4.0).unwrap();
        for t in 0..20 {
            assert_eq!(s.scalar_at(t).abs(), 2.0);
        }
    }

    #[test]
    fn sequential_samples_match_random_access() {
        let h = generate_channel(5, 2, 3).unwrap();
        let s = SampleStream::new(77, 5, 0.0, 1.0).unwrap();
        for (t, (x, y)) in s.samples(&h).unwrap().take(40).enumerate() {
            assert_eq!(x, s.regressor_at(t));
            assert_abs_diff_eq!(y, observe(&h, &x, 0.0, 0.0).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn noise_draws_do_not_depend_on_channel_length() {
        let noise_of = |n: usize| -> Vec<f64> {
            let zero = ChannelRealization::from_taps(vec![0.0; n]).unwrap();
            let s = SampleStream::new(123, n, 0.5, 1.0).unwrap();
            s.samples(&zero).unwrap().take(50).map(|(_, y)| y).collect()
        };
        assert_eq!(noise_of(4), noise_of(60));
    }

    #[test]
    fn observe_examples() {
        let h = ChannelRealization::from_taps(vec![0.6, 0.0, -0.8]).unwrap();
        assert_eq!(observe(&h, &[1.0, 1.0, 1.0], 0.0, 3.0).unwrap(), 0.6 - 0.8);
        let zero = ChannelRealization::from_taps(vec![0.0; 3]).unwrap();
        assert_eq!(observe(&zero, &[1.0, -1.0, 1.0], 0.25, 2.0).unwrap(), 1.0);
        assert!(observe(&h, &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn noise_variance_matches_configuration() {
        let n = 100_000;
        let h = generate_channel(4, 2, 8).unwrap();
        let s = SampleStream::new(2024, 4, 0.1, 1.0).unwrap();
        let resid: Vec<f64> = s
            .samples(&h)
            .unwrap()
            .take(n)
            .map(|(x, y)| y - observe(&h, &x, 0.0, 0.0).unwrap())
            .collect();
        let mean = resid.iter().sum::<f64>() / n as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = 0.1 * (2.0 / n as f64).sqrt();
        assert!((var - 0.1).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn realized_snr_matches_configured_db() {
        let snr_db = 10.0;
        let noise_power = noise_power_for_snr(snr_db, 1.0);
        assert_abs_diff_eq!(noise_power, 0.1, epsilon = 1e-15);
        assert_eq!(noise_power_for_snr(f64::INFINITY, 1.0), 0.0);

        let n = 50_000;
        let h = generate_channel(6, 3, 1).unwrap();
        let s = SampleStream::new(5, 6, noise_power, 1.0).unwrap();
        let (mut sig, mut noise) = (0.0, 0.0);
        for (x, y) in s.samples(&h).unwrap().take(n) {
            let clean = observe(&h, &x, 0.0, 0.0).unwrap();
            sig += clean * clean;
            noise += (y - clean) * (y - clean);
        }
        let realized = 10.0 * (sig / noise).log10();
        assert!((realized - snr_db).abs() < 0.1, "{realized}");
    }

    #[test]
    fn derived_seeds_separate_parts() {
        let a = derive_seed(1, &[3, 10, 0]);
        assert_eq!(a, derive_seed(1, &[3, 10, 0]));
        assert_ne!(a, derive_seed(1, &[3, 10, 1]));
        assert_ne!(a, derive_seed(2, &[3, 10, 0]));
        assert_ne!(derive_seed(1, &[1, 2]), derive_seed(1, &[2, 1]));
    }

    proptest! {
        #[test]
        fn channels_have_unit_norm_and_k_taps(n in 1usize..64, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let h = generate_channel(n, k, seed).unwrap();
            let norm = h.taps().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert_eq!(h.taps().iter().filter(|&&v| v != 0.0).count(), k);
            prop_assert!(h.support().iter().all(|&i| i < n && h.taps()[i] != 0.0));
        }
    }
}
