//! Render a two-microphone babble scene at every grid SNR and check the
//! measured SNR.

use sitest::dsp::{write_wav, PcmFormat};
use sitest::scene::{render_scene, synth_babble, synth_word, SceneConfig, SourcePosition, SNR_GRID_DB};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let word = synth_word("hamonise", 16000)?;
    let babble = synth_babble(10.0, 16, 16000, 1)?;
    let position = SourcePosition::preset(2)?;
    println!("source at {:.0} deg, {:.0} cm", position.azimuth_deg, position.distance_cm);
    let out = std::env::temp_dir().join("sitest_scene");
    std::fs::create_dir_all(&out)?;
    for snr in SNR_GRID_DB {
        let obs = render_scene(&word, &SceneConfig::new(position, snr, 7), &babble)?;
        let path = out.join(format!("mix_{snr:+}.wav"));
        write_wav(&path, &obs.mixture, PcmFormat::Float32)?;
        println!("target {snr:+} dB, measured {:+.3} dB -> {}", obs.measured_snr_db(), path.display());
    }
    Ok(())
}
