use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{ConditionCell, PsychError};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const DIAMETER_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 20_000;
/// Margin added on both sides of the observed SNR range to bound mu.
const MU_MARGIN_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bootstrap {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub guess_rate: f64,
    pub lapse_rate: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub bootstrap: Option<Bootstrap>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            guess_rate: 0.0,
            lapse_rate: 0.0,
            sigma_min: 0.1,
            sigma_max: 30.0,
            bootstrap: None,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<(), PsychError> {
        let bad = |m: &str| Err(PsychError::InvalidOptions(m.to_string()));
        if !(0.0..1.0).contains(&self.guess_rate) || !(0.0..1.0).contains(&self.lapse_rate) {
            return bad("guess and lapse rates must lie in [0, 1)");
        }
        if self.guess_rate + self.lapse_rate >= 1.0 {
            return bad("guess + lapse must be below 1");
        }
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite()) {
            return bad("need 0 < sigma_min < sigma_max");
        }
        if let Some(b) = &self.bootstrap {
            if b.resamples < 2 || !(b.level > 0.0 && b.level < 1.0) {
                return bad("bootstrap needs >= 2 resamples and a level in (0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsychFit {
    pub mu: f64,
    pub sigma: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub ci_mu: Option<(f64, f64)>,
    pub guess_rate: f64,
    pub lapse_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl PsychFit {
    /// Predicted proportion correct at `snr_db`.
    pub fn predict(&self, snr_db: f64) -> f64 {
        let phi = 0.5 * erfc(-(snr_db - self.mu) / (self.sigma * SQRT_2));
        self.guess_rate + (1.0 - self.guess_rate - self.lapse_rate) * phi
    }
}

struct Objective<'a> {
    cells: &'a [(f64, u32, u32)],
    guess: f64,
    lapse: f64,
}

impl Objective<'_> {
    /// ln P and ln(1 - P), accurate in both tails when guess = lapse = 0.
    fn log_probs(&self, z: f64) -> (f64, f64) {
        let phi = 0.5 * erfc(-z / SQRT_2);
        let phic = 0.5 * erfc(z / SQRT_2);
        let span = 1.0 - self.guess - self.lapse;
        let p = self.guess + span * phi;
        let q = self.lapse + span * phic;
        (p.max(f64::MIN_POSITIVE).ln(), q.max(f64::MIN_POSITIVE).ln())
    }

    fn neg_log_likelihood(&self, mu: f64, sigma: f64) -> f64 {
        -self
            .cells
            .iter()
            .map(|&(x, n, k)| {
                let (lp, lq) = self.log_probs((x - mu) / sigma);
                let mut ll = 0.0;
                if k > 0 {
                    ll += k as f64 * lp;
                }
                if n > k {
                    ll += (n - k) as f64 * lq;
                }
                ll
            })
            .sum::<f64>()
    }
}

struct Bounds {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Bounds {
    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.lo[0], self.hi[0]), p[1].clamp(self.lo[1], self.hi[1])]
    }
}

struct Minimum {
    x: [f64; 2],
    f: f64,
    converged: bool,
}

fn diameter(s: &[([f64; 2], f64); 3]) -> f64 {
    let d = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    d(&s[0].0, &s[1].0).max(d(&s[0].0, &s[2].0)).max(d(&s[1].0, &s[2].0))
}

/// Nelder-Mead with vertices projected onto the box.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2], bounds: &Bounds) -> Minimum {
    let eval = |p: [f64; 2]| {
        let p = bounds.clamp(p);
        (p, f(p))
    };
    let mut s = [
        eval(start),
        eval([start[0] + step[0], start[1]]),
        eval([start[0], start[1] + step[1]]),
    ];
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..MAX_ITERATIONS {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&s) < DIAMETER_TOL {
            return Minimum {
                x: s[0].0,
                f: s[0].1,
                converged: true,
            };
        }
        let centroid = lerp(s[0].0, s[1].0, 0.5);
        let worst = s[2];
        let r = eval(lerp(centroid, worst.0, -1.0));
        if r.1 < s[0].1 {
            let e = eval(lerp(centroid, worst.0, -2.0));
            s[2] = if e.1 < r.1 { e } else { r };
        } else if r.1 < s[1].1 {
            s[2] = r;
        } else {
            let c = if r.1 < worst.1 {
                eval(lerp(centroid, r.0, 0.5))
            } else {
                eval(lerp(centroid, worst.0, 0.5))
            };
            if c.1 < worst.1.min(r.1) {
                s[2] = c;
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    *v = eval(lerp(best, v.0, 0.5));
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: s[0].0,
        f: s[0].1,
        converged: false,
    }
}

fn fit_counts(cells: &[(f64, u32, u32)], opts: &FitOptions) -> Minimum {
    let objective = Objective {
        cells,
        guess: opts.guess_rate,
        lapse: opts.lapse_rate,
    };
    let lo_x = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi_x = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let bounds = Bounds {
        lo: [lo_x - MU_MARGIN_DB, opts.sigma_min],
        hi: [hi_x + MU_MARGIN_DB, opts.sigma_max],
    };
    let mid = 0.5 * (lo_x + hi_x);
    let span = (hi_x - lo_x).max(1.0);
    let starts = [
        [mid, (span / 4.0).clamp(opts.sigma_min, opts.sigma_max)],
        [lo_x, (span / 10.0).clamp(opts.sigma_min, opts.sigma_max)],
        [hi_x, (span / 2.0).clamp(opts.sigma_min, opts.sigma_max)],
    ];
    let f = |p: [f64; 2]| objective.neg_log_likelihood(p[0], p[1]);
    starts
        .iter()
        .map(|s| nelder_mead(f, *s, [span / 4.0, 1.0], &bounds))
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("three starts")
}

fn validated_counts(cells: &[ConditionCell]) -> Result<Vec<(f64, u32, u32)>, PsychError> {
    let mut out = Vec::with_capacity(cells.len());
    for c in cells {
        if c.n_correct > c.n_trials || !c.snr_db.is_finite() {
            return Err(PsychError::InvalidCell {
                snr_db: c.snr_db,
                n_correct: c.n_correct,
                n_trials: c.n_trials,
            });
        }
        if c.n_trials > 0 {
            out.push((c.snr_db, c.n_trials, c.n_correct));
        }
    }
    let mut snrs: Vec<f64> = out.iter().map(|c| c.0).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    if snrs.len() < 2 {
        return Err(PsychError::InsufficientData(snrs.len()));
    }
    Ok(out)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Maximum-likelihood cumulative-Gaussian fit of
/// `P(correct | x) = guess + (1 - guess - lapse) * Phi((x - mu) / sigma)`.
pub fn fit_psychometric(cells: &[ConditionCell], opts: &FitOptions) -> Result<PsychFit, PsychError> {
    opts.validate()?;
    let counts = validated_counts(cells)?;
    let total: u32 = counts.iter().map(|c| c.1).sum();
    let correct: u32 = counts.iter().map(|c| c.2).sum();
    let degenerate = match correct {
        0 => Some("all responses wrong; mu is unidentifiable"),
        c if c == total => Some("all responses correct; mu is unidentifiable"),
        _ => None,
    };
    let best = fit_counts(&counts, opts);
    let mut diagnostic = degenerate.map(str::to_string);
    if diagnostic.is_none() && !best.converged {
        diagnostic = Some(format!("simplex did not shrink below {DIAMETER_TOL} in {MAX_ITERATIONS} iterations"));
    }
    let converged = best.converged && degenerate.is_none();

    let ci_mu = match (&opts.bootstrap, converged) {
        (Some(b), true) => {
            let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
            let mut mus = Vec::with_capacity(b.resamples);
            for _ in 0..b.resamples {
                let resampled: Vec<(f64, u32, u32)> = counts
                    .iter()
                    .map(|&(x, n, k)| {
                        let draw = Binomial::new(n as u64, k as f64 / n as f64)
                            .map(|d| d.sample(&mut rng) as u32)
                            .unwrap_or(k);
                        (x, n, draw)
                    })
                    .collect();
                mus.push(fit_counts(&resampled, opts).x[0]);
            }
            mus.sort_by(f64::total_cmp);
            let tail = 0.5 * (1.0 - b.level);
            Some((percentile(&mus, tail), percentile(&mus, 1.0 - tail)))
        }
        _ => None,
    };

    Ok(PsychFit {
        mu: best.x[0],
        sigma: best.x[1],
        log_likelihood: -best.f,
        converged,
        ci_mu,
        guess_rate: opts.guess_rate,
        lapse_rate: opts.lapse_rate,
        diagnostic,
    })
}
