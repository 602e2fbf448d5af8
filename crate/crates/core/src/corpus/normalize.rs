//! Text cleanup applied to every sentence on ingestion.

/// Cleans one piece of text.
///
/// Repairs UTF-8 that was decoded as Windows-1252/Latin-1 (`â€™` → `’`,
/// `Ã©` → `é`), maps typographic quotes to ASCII, en/em dashes to `-`, the
/// ellipsis character to `...`, and collapses whitespace runs to one space.
/// The result is a fixed point: normalizing it again changes nothing.
pub fn normalize_text(raw: &str) -> String {
    let repaired = repair_mojibake(raw);
    let mut mapped = String::with_capacity(repaired.len());
    for c in repaired.chars() {
        match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' => mapped.push('\''),
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' => mapped.push('"'),
            '\u{2013}' | '\u{2014}' => mapped.push('-'),
            '\u{2026}' => mapped.push_str("..."),
            other => mapped.push(other),
        }
    }
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Undoes double-encoded UTF-8 until nothing more can be repaired.
///
/// Only two families are recognized: two-byte sequences led by `Â`/`Ã`
/// (Latin-1 supplement) and three-byte sequences `â` + 0x80..=0x84 + tail
/// (general punctuation, `€`, `™`). Anything else is left untouched, which
/// keeps legitimate accented text from being mangled.
pub fn repair_mojibake(raw: &str) -> String {
    let mut current: Vec<char> = raw.chars().collect();
    loop {
        let (next, changed) = repair_pass(&current);
        if !changed {
            return current.into_iter().collect();
        }
        current = next;
    }
}

fn repair_pass(chars: &[char]) -> (Vec<char>, bool) {
    let mut out = Vec::with_capacity(chars.len());
    let mut changed = false;
    let mut i = 0;
    while i < chars.len() {
        if let Some((decoded, used)) = decode_at(&chars[i..]) {
            out.push(decoded);
            i += used;
            changed = true;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    (out, changed)
}

fn decode_at(window: &[char]) -> Option<(char, usize)> {
    let lead = cp1252_byte(*window.first()?)?;
    let second = window.get(1).copied().and_then(cp1252_byte)?;
    match lead {
        0xC2 | 0xC3 if is_continuation(second) => decode(&[lead, second]).map(|c| (c, 2)),
        0xE2 if (0x80..=0x84).contains(&second) => {
            let third = window.get(2).copied().and_then(cp1252_byte)?;
            if !is_continuation(third) {
                return None;
            }
            decode(&[lead, second, third]).map(|c| (c, 3))
        }
        _ => None,
    }
}

fn decode(bytes: &[u8]) -> Option<char> {
    std::str::from_utf8(bytes).ok()?.chars().next()
}

fn is_continuation(b: u8) -> bool {
    (0x80..=0xBF).contains(&b)
}

/// Byte that `c` would have come from if the text was decoded as Windows-1252
/// (falling back to Latin-1 for the five bytes Windows-1252 leaves undefined).
fn cp1252_byte(c: char) -> Option<u8> {
    let code = c as u32;
    if (0x80..=0xFF).contains(&code) {
        return Some(code as u8);
    }
    let b = match c {
        '€' => 0x80,
        '‚' => 0x82,
        'ƒ' => 0x83,
        '„' => 0x84,
        '…' => 0x85,
        '†' => 0x86,
        '‡' => 0x87,
        'ˆ' => 0x88,
        '‰' => 0x89,
        'Š' => 0x8A,
        '‹' => 0x8B,
        'Œ' => 0x8C,
        'Ž' => 0x8E,
        '‘' => 0x91,
        '’' => 0x92,
        '“' => 0x93,
        '”' => 0x94,
        '•' => 0x95,
        '–' => 0x96,
        '—' => 0x97,
        '˜' => 0x98,
        '™' => 0x99,
        'š' => 0x9A,
        '›' => 0x9B,
        'œ' => 0x9C,
        'ž' => 0x9E,
        'Ÿ' => 0x9F,
        _ => return None,
    };
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collapses_whitespace() {
        assert_eq!(normalize_text("  hello   world "), "hello world");
        assert_eq!(normalize_text("a\t\n b\u{a0}c"), "a b c");
    }

    #[test]
    fn straightens_quotes() {
        assert_eq!(normalize_text("“quoted”"), "\"quoted\"");
        assert_eq!(normalize_text("it’s ‘fine’"), "it's 'fine'");
    }

    #[test]
    fn maps_dashes_and_ellipsis() {
        assert_eq!(normalize_text("wait — now…"), "wait - now...");
        assert_eq!(normalize_text("1990–1995"), "1990-1995");
    }

    #[test]
    fn repairs_double_encoded_utf8() {
        assert_eq!(normalize_text("itâ€™s"), "it's");
        assert_eq!(normalize_text("cafÃ©"), "café");
        assert_eq!(normalize_text("â€œhiâ€\u{9d}"), "\"hi\"");
        assert_eq!(normalize_text("costs Â£5"), "costs £5");
        assert_eq!(normalize_text("waitâ€¦"), "wait...");
    }

    #[test]
    fn repairs_triple_encoding() {
        // "é" encoded twice over.
        assert_eq!(normalize_text("cafÃƒÂ©"), "café");
    }

    #[test]
    fn leaves_real_accents_alone() {
        assert_eq!(normalize_text("Ærøskøbing naïve CAFÉ…"), "Ærøskøbing naïve CAFÉ...");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
        }

        #[test]
        fn idempotent_on_mojibake_alphabet(s in "[ aÃÂâ€™œ©£\u{9d}\u{a0}“”…—–]{0,30}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
        }

        #[test]
        fn no_edge_or_double_spaces(s in "\\PC{0,40}") {
            let n = normalize_text(&s);
            prop_assert!(!n.starts_with(' ') && !n.ends_with(' '));
            prop_assert!(!n.contains("  "));
        }
    }
}
