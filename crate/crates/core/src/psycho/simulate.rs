use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::PsychError;
use crate::enhance::EnhancementMethod;
use crate::tonepip::{TonePipSequenceSpec, PRESET_FREQUENCIES};

/// Oracle listener standing in for a human participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerProfile {
    pub participant_id: String,
    /// Effective hearing threshold per test frequency, dB SPL.
    pub thresholds_db: BTreeMap<u32, f64>,
    pub true_mu: BTreeMap<EnhancementMethod, f64>,
    pub true_sigma: f64,
    pub seed: u64,
}

impl ListenerProfile {
    pub fn validate(&self) -> Result<(), PsychError> {
        if !(self.true_sigma > 0.0 && self.true_sigma.is_finite()) {
            return Err(PsychError::InvalidProfile(format!("true_sigma {} must be > 0", self.true_sigma)));
        }
        Ok(())
    }
}

/// Pips whose SPL strictly exceeds the listener's threshold. The first pip of
/// a descending sequence plays at `presentation_level_db`; a frequency with no
/// threshold is inaudible.
pub fn simulate_tonepip_response(
    profile: &ListenerProfile,
    spec: &TonePipSequenceSpec,
    presentation_level_db: f64,
) -> u32 {
    let threshold = profile
        .thresholds_db
        .get(&spec.frequency_hz)
        .copied()
        .unwrap_or(f64::INFINITY);
    (1..=spec.n_pips)
        .filter(|k| presentation_level_db + (spec.pip_level_dbfs(*k) - spec.ref_level_dbfs) > threshold)
        .count() as u32
}

/// Bernoulli draw at `Phi((snr - mu) / sigma)`.
pub fn simulate_word_response<R: Rng + ?Sized>(
    profile: &ListenerProfile,
    method: EnhancementMethod,
    snr_db: f64,
    rng: &mut R,
) -> Result<bool, PsychError> {
    profile.validate()?;
    let mu = profile.true_mu.get(&method).ok_or(PsychError::UnknownMethod(method))?;
    let p = 0.5 * erfc(-(snr_db - mu) / (profile.true_sigma * std::f64::consts::SQRT_2));
    Ok(rng.random::<f64>() < p)
}

/// Parameters of a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_listeners: usize,
    /// Listeners whose mean pip count falls inside [9, 13].
    pub n_in_range: usize,
    /// SPL of the reference tone and first pip.
    pub l_ref_db: f64,
    pub true_mu: BTreeMap<EnhancementMethod, f64>,
    pub true_sigma: f64,
    /// SD of the per-listener offset added to every condition mean.
    pub listener_sd_db: f64,
    /// SRT penalty for listeners outside the pip range.
    pub out_of_range_shift_db: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_listeners: 39,
            n_in_range: 25,
            l_ref_db: 64.0,
            true_mu: BTreeMap::from([
                (EnhancementMethod::Mask1chIrm, -12.0),
                (EnhancementMethod::Mvdr2chIrm, -5.0),
                (EnhancementMethod::Mvdr2chEst, -4.5),
                (EnhancementMethod::Unprocessed, -1.0),
            ]),
            true_sigma: 2.5,
            listener_sd_db: 1.0,
            out_of_range_shift_db: 4.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedListener {
    pub profile: ListenerProfile,
    /// Designed mean pip count.
    pub designed_mean_pips: f64,
    pub in_range: bool,
}

/// Listener for whom every frequency yields exactly `n` audible pips at
/// `l_ref`: threshold half a step below pip `n`.
fn thresholds_for(counts: [u32; 4], l_ref: f64) -> BTreeMap<u32, f64> {
    PRESET_FREQUENCIES
        .iter()
        .zip(counts)
        .map(|(f, n)| (*f, l_ref - 5.0 * (n as f64 - 1.0) - 2.5))
        .collect()
}

/// Deterministic cohort: the first `n_in_range` listeners have mean pip
/// counts in [9, 13]; the rest alternate below 9 and above 13.
pub fn build_cohort(spec: &CohortSpec) -> Result<Vec<SimulatedListener>, PsychError> {
    if spec.n_in_range > spec.n_listeners {
        return Err(PsychError::InvalidProfile("n_in_range exceeds n_listeners".into()));
    }
    if !(spec.true_sigma > 0.0) || !(spec.listener_sd_db >= 0.0) {
        return Err(PsychError::InvalidProfile("sigma and listener SD must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let offset = Normal::new(0.0, spec.listener_sd_db).map_err(|e| PsychError::InvalidProfile(e.to_string()))?;
    let mut out = Vec::with_capacity(spec.n_listeners);
    for i in 0..spec.n_listeners {
        let in_range = i < spec.n_in_range;
        let counts: [u32; 4] = if in_range {
            let base = rng.random_range(9..=13u32);
            // jitter one frequency while keeping the mean inside [9, 13]
            let mut c = [base; 4];
            let j = rng.random_range(0..4);
            c[j] = match base {
                9 => 10,
                13 => 12,
                b => b + if rng.random::<bool>() { 1 } else { 0 },
            };
            c
        } else if (i - spec.n_in_range).is_multiple_of(2) {
            let base = rng.random_range(3..=8u32);
            [base, base, base + 1, base]
        } else {
            let base = rng.random_range(14..=15u32);
            [base, 14, base, 15]
        };
        let mean = counts.iter().sum::<u32>() as f64 / 4.0;
        let shift = offset.sample(&mut rng) + if in_range { 0.0 } else { spec.out_of_range_shift_db };
        let true_mu = spec.true_mu.iter().map(|(m, mu)| (*m, mu + shift)).collect();
        out.push(SimulatedListener {
            profile: ListenerProfile {
                participant_id: format!("sim{i:03}"),
                thresholds_db: thresholds_for(counts, spec.l_ref_db),
                true_mu,
                true_sigma: spec.true_sigma,
                seed: spec.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            },
            designed_mean_pips: mean,
            in_range,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(threshold: f64) -> ListenerProfile {
        ListenerProfile {
            participant_id: "x".into(),
            thresholds_db: PRESET_FREQUENCIES.iter().map(|f| (*f, threshold)).collect(),
            true_mu: BTreeMap::from([(EnhancementMethod::Unprocessed, -3.0)]),
            true_sigma: 2.0,
            seed: 1,
        }
    }

    #[test]
    fn pip_counts() {
        let spec = TonePipSequenceSpec::default();
        assert_eq!(simulate_tonepip_response(&profile(0.0), &spec, 64.0), 13);
        assert_eq!(simulate_tonepip_response(&profile(70.0), &spec, 64.0), 0);
        assert_eq!(simulate_tonepip_response(&profile(f64::NEG_INFINITY), &spec, 64.0), 15);
    }

    #[test]
    fn word_response_rates() {
        let p = profile(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hits = (0..100_000)
            .filter(|_| simulate_word_response(&p, EnhancementMethod::Unprocessed, -3.0, &mut rng).unwrap())
            .count();
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);
        assert!((0..1000).all(|_| simulate_word_response(&p, EnhancementMethod::Unprocessed, 17.0, &mut rng).unwrap()));
        assert!(simulate_word_response(&p, EnhancementMethod::Mask1chIrm, 0.0, &mut rng).is_err());
        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| simulate_word_response(&p, EnhancementMethod::Unprocessed, -2.0, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn cohort_shape() {
        let cohort = build_cohort(&CohortSpec::default()).unwrap();
        assert_eq!(cohort.len(), 39);
        let mut in_range = 0;
        for l in &cohort {
            let counts: Vec<u32> = PRESET_FREQUENCIES
                .iter()
                .map(|f| simulate_tonepip_response(&l.profile, &TonePipSequenceSpec::at(*f), 64.0))
                .collect();
            let mean = counts.iter().sum::<u32>() as f64 / 4.0;
            assert_eq!(mean, l.designed_mean_pips);
            assert_eq!((9.0..=13.0).contains(&mean), l.in_range);
            in_range += usize::from(l.in_range);
        }
        assert_eq!(in_range, 25);
        assert_eq!(build_cohort(&CohortSpec::default()).unwrap(), cohort);
    }
}
