//! Analyse a chirp with the 512/256 Hann STFT and resynthesize it.

use sitest::dsp::{istft, rms_db, stft, AudioBuffer, StftParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 16000.0;
    let x: Vec<f64> = (0..16000)
        .map(|n| {
            let t = n as f64 / fs;
            0.3 * (2.0 * std::f64::consts::PI * (200.0 * t + 900.0 * t * t)).sin()
        })
        .collect();
    let signal = AudioBuffer::mono(x, 16000)?;
    let params = StftParams::default();
    let spec = stft(&signal, &params)?;
    println!("{} frames x {} bins", spec.frames(), spec.bins());

    let y = istft(&spec)?;
    let err: Vec<f64> = signal.channel(0)?.iter().zip(y.channel(0)?).map(|(a, b)| a - b).collect();
    let err = AudioBuffer::mono(err, 16000)?;
    println!(
        "signal {:.2} dBFS, reconstruction error {:?}",
        rms_db(&signal, 0)?.dbfs().unwrap_or(f64::NEG_INFINITY),
        rms_db(&err, 0)?.dbfs()
    );
    Ok(())
}
