//! Starter packs checked against hand-written string surgery.

use udkit::morph::{analyze, compile_rules, Transducer, STARTER_V1, STARTER_V2};

const LEMMAS: [&str; 20] = [
    "sulat", "bili", "basa", "luto", "kain", "inom", "aral", "tawag", "gawa", "dala", "takbo",
    "lakad", "sayaw", "linis", "hugas", "tulog", "upo", "bigay", "kuha", "trabaho",
];

fn is_vowel(c: char) -> bool {
    "aeiou".contains(c)
}

fn infix(word: &str, affix: &str) -> Option<String> {
    let onset = word.chars().take_while(|&c| !is_vowel(c)).count();
    let (head, tail): (String, String) = (word.chars().take(onset).collect(), word.chars().skip(onset).collect());
    (!tail.is_empty()).then(|| format!("{head}{affix}{tail}"))
}

fn redup(word: &str) -> Option<String> {
    let c: Vec<char> = word.chars().collect();
    if is_vowel(c[0]) {
        Some(format!("{}{word}", c[0]))
    } else if c.len() > 1 && is_vowel(c[1]) {
        Some(format!("{}{}{word}", c[0], c[1]))
    } else {
        None
    }
}

fn suffix(word: &str, s: &str, after_vowel: Option<bool>) -> Option<String> {
    let last = word.chars().last()?;
    match after_vowel {
        Some(v) if is_vowel(last) != v => None,
        _ => Some(format!("{word}{s}")),
    }
}

fn surgery(rule: &str, word: &str) -> Option<String> {
    match rule {
        "infix-um" => infix(word, "um"),
        "infix-in" => infix(word, "in"),
        "redup-cv" => redup(word),
        "prefix-nag" => Some(format!("nag{word}")),
        "suffix-hin" => suffix(word, "hin", Some(true)),
        "suffix-in" => suffix(word, "in", Some(false)),
        other => panic!("no oracle for {other}"),
    }
}

/// Licensed sequences, spelled out by hand for each pack.
fn sequences(v2: bool) -> Vec<Vec<&'static str>> {
    let mut seqs = vec![
        vec!["infix-um"],
        vec!["infix-in"],
        vec!["redup-cv"],
        vec!["redup-cv", "infix-um"],
        vec!["redup-cv", "infix-in"],
    ];
    if v2 {
        seqs.extend([
            vec!["prefix-nag"],
            vec!["suffix-hin"],
            vec!["suffix-in"],
            vec!["redup-cv", "prefix-nag"],
            vec!["redup-cv", "suffix-hin"],
            vec!["redup-cv", "suffix-in"],
        ]);
    }
    seqs
}

fn check_inversion(t: &Transducer, v2: bool) -> usize {
    let mut checked = 0;
    for lemma in LEMMAS {
        for seq in sequences(v2) {
            let expected = seq.iter().try_fold(lemma.to_owned(), |w, r| surgery(r, &w));
            let generated = t.generate(lemma, &seq);
            assert_eq!(generated, expected.iter().cloned().collect::<Vec<_>>(), "{lemma} {seq:?}");
            for surface in generated {
                let found = analyze(&surface, t)
                    .iter()
                    .any(|a| a.lemma == lemma && a.rule_trace == seq);
                assert!(found, "{surface} does not analyse back to {lemma} {seq:?}");
                checked += 1;
            }
        }
    }
    checked
}

#[test]
fn v1_generation_matches_surgery_and_inverts() {
    let t = compile_rules(STARTER_V1).unwrap();
    assert!(check_inversion(&t, false) >= 90);
}

#[test]
fn v2_generation_matches_surgery_and_inverts() {
    let t = compile_rules(STARTER_V2).unwrap();
    let n = check_inversion(&t, true);
    assert!(n >= 150, "{n}");
}

#[test]
fn v2_analyses_include_every_v1_analysis() {
    let v1 = compile_rules(STARTER_V1).unwrap();
    let v2 = compile_rules(STARTER_V2).unwrap();
    let mut words: Vec<String> = LEMMAS.iter().map(|l| l.to_string()).collect();
    for lemma in LEMMAS {
        for seq in sequences(true) {
            words.extend(v2.generate(lemma, &seq));
        }
    }
    for w in &words {
        let wide = analyze(w, &v2);
        for a in analyze(w, &v1) {
            assert!(wide.contains(&a), "{w}: {a:?} missing from v2");
        }
    }
}

#[test]
fn sumulat_under_a_single_infix_rule() {
    let t = compile_rules("INFIX um AFTER_ONSET").unwrap();
    for lemma in LEMMAS {
        let expected = infix(lemma, "um").unwrap();
        assert_eq!(t.generate(lemma, &["infix-um"]), vec![expected.clone()]);
        assert!(analyze(&expected, &t).iter().any(|a| a.lemma == lemma));
    }
}
