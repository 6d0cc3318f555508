//! Maximum-likelihood psychometric fit with a bootstrap interval.

use sitest::enhance::EnhancementMethod;
use sitest::psycho::{fit_psychometric, srt, Bootstrap, ConditionCell, FitOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let correct = [3, 6, 11, 16, 19];
    let cells: Vec<ConditionCell> = [-9.0, -6.0, -3.0, 0.0, 3.0]
        .iter()
        .zip(correct)
        .map(|(snr, k)| ConditionCell {
            method: EnhancementMethod::Mvdr2chIrm,
            snr_db: *snr,
            n_trials: 20,
            n_correct: k,
        })
        .collect();
    let opts = FitOptions {
        bootstrap: Some(Bootstrap::default()),
        ..FitOptions::default()
    };
    let fit = fit_psychometric(&cells, &opts)?;
    println!("mu {:.2} dB, sigma {:.2} dB, log L {:.3}", fit.mu, fit.sigma, fit.log_likelihood);
    if let Some((lo, hi)) = fit.ci_mu {
        println!("95 % interval for mu: [{lo:.2}, {hi:.2}]");
    }
    println!("SRT {:.2} dB", srt(&fit)?);
    for c in &cells {
        println!("  {:+} dB: observed {:.2}, fitted {:.2}", c.snr_db, c.rate(), fit.predict(c.snr_db));
    }
    Ok(())
}
