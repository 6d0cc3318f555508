//! A full simulated experiment: 39 listeners through the session service,
//! then screening, fitting and per-condition SRT summary.

use sitest::cli::{analyze_bundle, simulate_sessions, SimulateConfig};
use sitest::psycho::FitOptions;
use sitest::tonepip::ScreeningRule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (bundle, cohort) = simulate_sessions(&SimulateConfig::default())?;
    println!("{} listeners, {} answers", cohort.len(), bundle.answers.len());
    let analysis = analyze_bundle(&bundle, &ScreeningRule::default(), &FitOptions::default())?;
    println!("kept {} / rejected {}", analysis.screening.kept.len(), analysis.screening.rejected.len());
    for s in &analysis.summary {
        println!("{:>12}: mean SRT {:+.2} dB (sd {:.2}, n {})", s.method, s.mean_db, s.sd_db.unwrap_or(f64::NAN), s.n);
    }
    Ok(())
}
