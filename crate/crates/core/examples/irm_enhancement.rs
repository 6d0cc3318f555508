//! Oracle ideal-ratio-mask enhancement of the reference channel.

use sitest::dsp::StftParams;
use sitest::enhance::{enhance, EnhancementMethod};
use sitest::scene::{render_scene, synth_babble, synth_word, SceneConfig, SourcePosition, SNR_GRID_DB};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let word = synth_word("kotonari", 16000)?;
    let babble = synth_babble(10.0, 16, 16000, 2)?;
    for snr in SNR_GRID_DB {
        let obs = render_scene(&word, &SceneConfig::new(SourcePosition::preset(5)?, snr, 3), &babble)?;
        let out = enhance(&obs, EnhancementMethod::Mask1chIrm, &StftParams::default())?;
        println!(
            "input {:+.2} dB -> oracle output {:+.2} dB (gain {:.2} dB)",
            out.input_snr_db,
            out.oracle_snr_db,
            out.oracle_snr_db - out.input_snr_db
        );
    }
    Ok(())
}
