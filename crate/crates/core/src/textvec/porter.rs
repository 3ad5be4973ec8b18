//! The classic Porter (1980) suffix-stripping algorithm.
//!
//! Operates on lower-case ASCII tokens. Digits are treated as consonants.
//! Non-ASCII input is returned unchanged.

fn consonant_flags(w: &[u8]) -> Vec<bool> {
    let mut flags: Vec<bool> = Vec::with_capacity(w.len());
    for (i, &c) in w.iter().enumerate() {
        let f = match c {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !flags[i - 1],
            _ => true,
        };
        flags.push(f);
    }
    flags
}

/// Number of vowel-consonant transitions, the `m` of `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let f = consonant_flags(w);
    f.windows(2).filter(|p| !p[0] && p[1]).count()
}

fn contains_vowel(w: &[u8]) -> bool {
    consonant_flags(w).iter().any(|&c| !c)
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && consonant_flags(w)[n - 1]
}

fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    if n < 3 {
        return false;
    }
    let f = consonant_flags(w);
    f[n - 3] && !f[n - 2] && f[n - 1] && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

type Cond = fn(&[u8]) -> bool;

fn m_gt0(s: &[u8]) -> bool {
    measure(s) > 0
}

fn m_gt1(s: &[u8]) -> bool {
    measure(s) > 1
}

/// Applies the first rule whose suffix matches. If that rule's condition
/// fails the word is returned untouched.
fn apply_rules(w: Vec<u8>, rules: &[(&str, &str, Cond)]) -> Vec<u8> {
    for &(suffix, repl, cond) in rules {
        let suffix = suffix.as_bytes();
        if w.ends_with(suffix) {
            let stem = &w[..w.len() - suffix.len()];
            if cond(stem) {
                let mut out = stem.to_vec();
                out.extend_from_slice(repl.as_bytes());
                return out;
            }
            return w;
        }
    }
    w
}

fn always(_: &[u8]) -> bool {
    true
}

fn step1a(w: Vec<u8>) -> Vec<u8> {
    apply_rules(
        w,
        &[
            ("sses", "ss", always),
            ("ies", "i", always),
            ("ss", "ss", always),
            ("s", "", always),
        ],
    )
}

fn step1b(w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"eed") {
        let stem = &w[..w.len() - 3];
        if measure(stem) > 0 {
            let mut out = stem.to_vec();
            out.extend_from_slice(b"ee");
            return out;
        }
        return w;
    }
    let mut stem = None;
    for suffix in [&b"ed"[..], &b"ing"[..]] {
        if w.ends_with(suffix) {
            let s = &w[..w.len() - suffix.len()];
            if contains_vowel(s) {
                stem = Some(s.to_vec());
                break;
            }
        }
    }
    let Some(mut s) = stem else {
        return w;
    };
    for (suffix, repl) in [("at", "ate"), ("bl", "ble"), ("iz", "ize")] {
        if s.ends_with(suffix.as_bytes()) {
            s.truncate(s.len() - 2);
            s.extend_from_slice(repl.as_bytes());
            return s;
        }
    }
    if ends_double_consonant(&s) {
        if !matches!(s[s.len() - 1], b'l' | b's' | b'z') {
            s.pop();
        }
        return s;
    }
    if measure(&s) == 1 && ends_cvc(&s) {
        s.push(b'e');
    }
    s
}

fn step1c(w: Vec<u8>) -> Vec<u8> {
    apply_rules(w, &[("y", "i", contains_vowel)])
}

fn step2(w: Vec<u8>) -> Vec<u8> {
    apply_rules(
        w,
        &[
            ("ational", "ate", m_gt0),
            ("tional", "tion", m_gt0),
            ("enci", "ence", m_gt0),
            ("anci", "ance", m_gt0),
            ("izer", "ize", m_gt0),
            ("abli", "able", m_gt0),
            ("alli", "al", m_gt0),
            ("entli", "ent", m_gt0),
            ("eli", "e", m_gt0),
            ("ousli", "ous", m_gt0),
            ("ization", "ize", m_gt0),
            ("ation", "ate", m_gt0),
            ("ator", "ate", m_gt0),
            ("alism", "al", m_gt0),
            ("iveness", "ive", m_gt0),
            ("fulness", "ful", m_gt0),
            ("ousness", "ous", m_gt0),
            ("aliti", "al", m_gt0),
            ("iviti", "ive", m_gt0),
            ("biliti", "ble", m_gt0),
        ],
    )
}

fn step3(w: Vec<u8>) -> Vec<u8> {
    apply_rules(
        w,
        &[
            ("icate", "ic", m_gt0),
            ("ative", "", m_gt0),
            ("alize", "al", m_gt0),
            ("iciti", "ic", m_gt0),
            ("ical", "ic", m_gt0),
            ("ful", "", m_gt0),
            ("ness", "", m_gt0),
        ],
    )
}

fn m_gt1_st(s: &[u8]) -> bool {
    m_gt1(s) && matches!(s.last(), Some(b's' | b't'))
}

fn step4(w: Vec<u8>) -> Vec<u8> {
    apply_rules(
        w,
        &[
            ("al", "", m_gt1),
            ("ance", "", m_gt1),
            ("ence", "", m_gt1),
            ("er", "", m_gt1),
            ("ic", "", m_gt1),
            ("able", "", m_gt1),
            ("ible", "", m_gt1),
            ("ant", "", m_gt1),
            ("ement", "", m_gt1),
            ("ment", "", m_gt1),
            ("ent", "", m_gt1),
            ("ion", "", m_gt1_st),
            ("ou", "", m_gt1),
            ("ism", "", m_gt1),
            ("ate", "", m_gt1),
            ("iti", "", m_gt1),
            ("ous", "", m_gt1),
            ("ive", "", m_gt1),
            ("ize", "", m_gt1),
        ],
    )
}

fn step5a(mut w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
    w
}

fn step5b(mut w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"ll") && measure(&w[..w.len() - 1]) > 1 {
        w.pop();
    }
    w
}

/// One pass of the classic Porter stemmer.
///
/// This is not idempotent: `"agreed"` becomes `"agre"`, which itself stems to
/// `"agr"`. Use [`super::stem`] when a fixed point is needed.
pub fn porter_stem(word: &str) -> String {
    if !word.is_ascii() {
        return word.to_string();
    }
    let mut w = word.to_ascii_lowercase().into_bytes();
    w = step1a(w);
    w = step1b(w);
    w = step1c(w);
    w = step2(w);
    w = step3(w);
    w = step4(w);
    w = step5a(w);
    w = step5b(w);
    String::from_utf8(w).expect("ascii in, ascii out")
}
