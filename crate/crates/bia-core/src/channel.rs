//! Block-fading channel sampling.
//!
//! Channels are constant within coherence blocks of `tau` consecutive slots
//! and switch to independent realizations between blocks. Entries are
//! circularly symmetric complex Gaussian with magnitudes kept inside a
//! configurable band by rejection resampling, since the model requires
//! coefficients bounded away from zero and infinity. Sampling is a pure
//! function of the problem, the horizon, and the spec (including its seed).

use crate::net::CBProblem;
use crate::{C64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

/// Spatial statistics of the fading process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spatial {
    /// All links identically distributed.
    Iid,
    /// Independent but not identically distributed: each link keeps a fixed
    /// scale drawn uniformly from [0.5, 2] across the whole realization.
    IndependentScaled,
}

/// Statistical contract for one sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingSpec {
    /// Coherence block length in slots (≥ 1).
    pub tau: usize,
    /// Spatial distribution across links.
    pub spatial: Spatial,
    /// Complex-magnitude acceptance band, `0 < lo < hi`.
    pub mag_bounds: (f64, f64),
    /// RNG seed; identical seeds give identical realizations.
    pub seed: u64,
}

impl FadingSpec {
    /// i.i.d. fading with the default magnitude band [0.05, 20].
    pub fn default_with_seed(seed: u64) -> Self {
        FadingSpec { tau: 1, spatial: Spatial::Iid, mag_bounds: (0.05, 20.0), seed }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mag_bounds;
        if self.tau < 1 {
            return Err(Error::InvalidParameter("coherence block length must be at least 1".into()));
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("magnitude bounds ({lo}, {hi}) must satisfy 0 < lo < hi < ∞")));
        }
        Ok(())
    }
}

/// Sampled fading coefficients for every connected link over a slot horizon.
///
/// `coefficients[(r, t)][n]` is the `receiver antennas × transmitter
/// antennas` matrix for slot `n+1`; consecutive slots in the same coherence
/// block hold identical copies.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub horizon: usize,
    pub coefficients: BTreeMap<(String, String), Vec<nalgebra::DMatrix<C64>>>,
}

impl ChannelRealization {
    /// Coefficient matrix of link `(r, t)` at 1-based slot `n`.
    pub fn at(&self, r: &str, t: &str, n: usize) -> &nalgebra::DMatrix<C64> {
        &self.coefficients[&(r.to_string(), t.to_string())][n - 1]
    }
}

/// One complex Gaussian entry with magnitude rejection-resampled into the
/// band, after applying the per-link scale. Returns the entry and how many
/// draws it took.
fn bounded_entry(rng: &mut impl Rng, scale: f64, (lo, hi): (f64, f64)) -> (C64, u64) {
    let mut draws = 0;
    loop {
        draws += 1;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let h = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2 * scale;
        let mag = h.norm();
        if mag >= lo && mag <= hi {
            return (h, draws);
        }
        // With the default band virtually every draw is accepted; a bound
        // this tight only triggers for pathological user-supplied bands.
        assert!(draws < 10_000, "magnitude band ({lo}, {hi}) rejects essentially all fading draws");
    }
}

/// Samples a block-fading realization over `horizon` slots.
///
/// Entries are i.i.d. circularly symmetric complex Gaussian per link and
/// block; under [`Spatial::IndependentScaled`] each link additionally keeps
/// one scale from U[0.5, 2], making links independent but not identically
/// distributed. Deterministic given `spec.seed`.
pub fn sample_channels(p: &CBProblem, horizon: usize, spec: &FadingSpec) -> Result<ChannelRealization> {
    sample_channels_with(p, horizon, spec, |_, _| spec.tau)
}

/// Like [`sample_channels`] but with a per-link coherence override, used to
/// probe which links of a scheme actually need coherence (e.g. holding one
/// receiver's inbound channels block-constant while all others vary every
/// slot). `tau_of(r, t)` gives the block length for link `(r, t)`.
pub fn sample_channels_with(
    p: &CBProblem,
    horizon: usize,
    spec: &FadingSpec,
    tau_of: impl Fn(&str, &str) -> usize,
) -> Result<ChannelRealization> {
    spec.validate()?;
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1 slot".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut coefficients = BTreeMap::new();
    let mut entries_emitted = 0u64;
    let mut draws_used = 0u64;
    for (r, t) in &p.topology.connectivity {
        let rows = p.topology.receivers[r] as usize;
        let cols = p.topology.transmitters[t] as usize;
        let scale = match spec.spatial {
            Spatial::Iid => 1.0,
            Spatial::IndependentScaled => rng.gen_range(0.5..=2.0),
        };
        let tau = tau_of(r, t).max(1);
        let mut slots: Vec<nalgebra::DMatrix<C64>> = Vec::with_capacity(horizon);
        for n in 0..horizon {
            if n % tau == 0 {
                let block = nalgebra::DMatrix::from_fn(rows, cols, |_, _| {
                    let (h, draws) = bounded_entry(&mut rng, scale, spec.mag_bounds);
                    entries_emitted += 1;
                    draws_used += draws;
                    h
                });
                slots.push(block);
            } else {
                slots.push(slots[n - 1].clone());
            }
        }
        coefficients.insert((r.clone(), t.clone()), slots);
    }
    // Small realizations can legitimately hit a rejection on their only
    // entry, so the rarity check carries an absolute allowance.
    debug_assert!(
        (draws_used as f64) < 1.5 * entries_emitted as f64 + 8.0,
        "rejection resampling should be rare"
    );
    Ok(ChannelRealization { horizon, coefficients })
}
