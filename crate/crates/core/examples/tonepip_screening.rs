//! Tone-pip sequences, listening levels and participant screening.

use sitest::tonepip::{
    gen_tonepip_sequence, listening_level, screen_participants, threshold_spl, ParticipantRecord, ScreeningRule,
    TonePipResult, TonePipSequenceSpec, PRESET_FREQUENCIES,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = gen_tonepip_sequence(&TonePipSequenceSpec::at(1000), 48000)?;
    println!("1 kHz sequence: {:.2} s, {} pips", seq.audio.duration_secs(), seq.pips.len());
    for p in seq.pips.iter().step_by(4) {
        println!("  pip {:>2} at {:>6.1} dBFS", p.index, p.level_dbfs);
    }

    let n = 13;
    let l_lis = listening_level(n)?.db().unwrap_or(f64::NAN);
    println!("{n} pips heard: L_lis {l_lis} dB, threshold {} dB SPL at L_ref 64", threshold_spl(64.0, l_lis));

    let counts = [("a", [11, 12, 10, 11]), ("b", [6, 7, 5, 8]), ("c", [15, 14, 15, 14]), ("d", [9, 9, 9, 9])];
    let records: Vec<ParticipantRecord> = counts
        .iter()
        .map(|(id, c)| {
            let pips = PRESET_FREQUENCIES
                .iter()
                .zip(c)
                .map(|(f, n)| TonePipResult::new(*f, *n, 15))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ParticipantRecord::new(*id, pips))
        })
        .collect::<Result<_, sitest::tonepip::TonePipError>>()?;
    let outcome = screen_participants(&records, &ScreeningRule::default(), None)?;
    for row in outcome.report(&records) {
        println!("{} mean {:.2}: {} {}", row.participant_id, row.mean_pips.unwrap_or(f64::NAN), row.decision, row.reason.unwrap_or_default());
    }
    Ok(())
}
