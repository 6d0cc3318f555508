use super::PsychError;

const VOWEL_ROWS: [(&str, char); 5] = [
    ("あかさたなはまやらわがざだばぱぁゃゎ", 'あ'),
    ("いきしちにひみりぎじぢびぴぃ", 'い'),
    ("うくすつぬふむゆるぐずづぶぷぅゅゔ", 'う'),
    ("えけせてねへめれげぜでべぺぇ", 'え'),
    ("おこそとのほもよろをごぞどぼぽぉょ", 'お'),
];

fn vowel_of(c: char) -> Option<char> {
    VOWEL_ROWS.iter().find(|(row, _)| row.contains(c)).map(|(_, v)| *v)
}

fn fold_width(c: char) -> char {
    match c {
        '\u{3000}' => ' ',
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        // katakana → hiragana
        '\u{30A1}'..='\u{30F6}' => char::from_u32(c as u32 - 0x60).unwrap_or(c),
        _ => c,
    }
}

/// Trim, fold full-width ASCII, map katakana onto hiragana, spell the
/// long-vowel mark as the preceding vowel, and lowercase ASCII.
pub fn normalize_answer(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars().map(fold_width) {
        if c == 'ー' {
            match out.chars().last().and_then(vowel_of) {
                Some(v) => out.push(v),
                None => out.push(c),
            }
        } else {
            out.push(c.to_ascii_lowercase());
        }
    }
    out.trim().to_string()
}

/// Whole-word match after normalization.
pub fn score_answer(response: &str, truth: &str) -> Result<bool, PsychError> {
    let truth = normalize_answer(truth);
    if truth.is_empty() {
        return Err(PsychError::EmptyTruth);
    }
    Ok(normalize_answer(response) == truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_near_miss() {
        assert!(score_answer("kasanema", "kasanema").unwrap());
        assert!(!score_answer("kasanemo", "kasanema").unwrap());
        assert!(score_answer("  KasaNema ", "kasanema").unwrap());
        assert!(score_answer("ｋａｓａｎｅｍａ", "kasanema").unwrap());
        assert!(score_answer("", "").is_err());
        assert!(!score_answer("", "kasa").unwrap());
    }

    #[test]
    fn kana_scripts_unify() {
        // table oracle: each katakana code point sits 0x60 above its hiragana
        assert!(score_answer("サクラモチ", "さくらもち").unwrap());
        assert!(score_answer("ヴァ", "ゔぁ").unwrap());
        assert_eq!(normalize_answer("カー"), "かあ");
        assert_eq!(normalize_answer("コーヒー"), "こおひい");
        assert_eq!(normalize_answer("ンー"), "んー");
        assert!(score_answer("ケーキ", "けえき").unwrap());
    }
}
