//! Mask-based MVDR with oracle and noise-period masks, plus the underlying
//! steering and weight computation.

use sitest::dsp::{stft, StftParams};
use sitest::enhance::{
    compute_irm, enhance, estimate_scms, mvdr_weights, steering_vector, EnhancementMethod, REF_CHANNEL,
};
use sitest::scene::{render_scene, synth_babble, synth_word, SceneConfig, SourcePosition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let word = synth_word("sakanamo", 16000)?;
    let babble = synth_babble(10.0, 16, 16000, 4)?;
    let obs = render_scene(&word, &SceneConfig::new(SourcePosition::preset(1)?, -6.0, 9), &babble)?;
    let params = StftParams::default();

    for m in EnhancementMethod::ALL {
        let out = enhance(&obs, m, &params)?;
        println!("{m:>12}: oracle output SNR {:+.2} dB, {} flagged bins", out.oracle_snr_db, out.flagged_frequencies.len());
    }

    let specs = (0..2).map(|c| stft(&obs.mixture.select(c)?, &params)).collect::<Result<Vec<_>, _>>()?;
    let s1 = stft(&obs.speech_image.select(REF_CHANNEL)?, &params)?;
    let v1 = stft(&obs.noise_image.select(REF_CHANNEL)?, &params)?;
    let scms = estimate_scms(&compute_irm(&s1, &v1)?, &specs)?;
    let a = steering_vector(&scms, REF_CHANNEL)?;
    let bf = mvdr_weights(&a.vectors, &scms, REF_CHANNEL)?;
    let f = 64;
    let (w, af) = (bf.weights[f], a.vectors[f]);
    let response = w[0].conj() * af[0] + w[1].conj() * af[1];
    println!("bin {f} ({} Hz): w^H a = {response:.6}, a_ref = {:.6}", f * 16000 / 512, af[0]);
    Ok(())
}
