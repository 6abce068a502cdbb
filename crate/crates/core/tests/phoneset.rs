use std::path::Path;

use mispro::phoneset::{normalize_phone, Phone, PhoneInventory, Scheme, SchemeMapping};
use mispro::Error;
use proptest::prelude::*;

const TIMIT_48: [&str; 48] = [
    "iy", "ih", "eh", "ae", "ix", "ax", "ah", "uw", "uh", "ao", "aa", "ey", "ay", "oy", "aw", "ow",
    "l", "el", "r", "y", "w", "er", "m", "n", "en", "ng", "ch", "jh", "dh", "b", "d", "dx", "g",
    "p", "t", "k", "z", "zh", "v", "f", "th", "s", "sh", "hh", "cl", "vcl", "epi", "sil",
];

fn phone(s: &str) -> Phone {
    Phone::from_symbol(s).unwrap()
}

#[test]
fn ipa_matches_concordance_fixture() {
    let m = SchemeMapping::builtin(Scheme::Ipa);
    let text = include_str!("fixtures/ipa_arpabet_concordance.tsv");
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (ipa, arpa) = line.split_once('\t').unwrap();
        let got = normalize_phone(ipa, &m).unwrap_or_else(|e| panic!("{ipa}: {e}"));
        assert_eq!(got, phone(arpa), "{ipa}");
        checked += 1;
    }
    assert!(checked >= 40);
}

#[test]
fn spec_examples() {
    let arpa = SchemeMapping::builtin(Scheme::Arpabet);
    let timit = SchemeMapping::builtin(Scheme::Timit);
    assert_eq!(normalize_phone("AE1", &arpa).unwrap(), phone("AE"));
    assert_eq!(normalize_phone("ax", &timit).unwrap(), phone("AH"));
    assert_eq!(normalize_phone("dx", &timit).unwrap(), phone("T"));
    assert_eq!(normalize_phone("æ", &SchemeMapping::builtin(Scheme::Ipa)).unwrap(), phone("AE"));
}

#[test]
fn timit_48_is_total() {
    let timit = SchemeMapping::builtin(Scheme::Timit);
    for sym in TIMIT_48 {
        assert!(normalize_phone(sym, &timit).is_ok(), "{sym} has no canonical image");
    }
}

#[test]
fn glottal_stop_is_unmappable_in_ipa() {
    let m = SchemeMapping::builtin(Scheme::Ipa);
    assert!(matches!(normalize_phone("ʔ", &m), Err(Error::UnmappableSymbol { .. })));
    assert!(matches!(normalize_phone("", &m), Err(Error::EmptySymbol)));
}

#[test]
fn inventory_rejects_duplicates_and_wrong_counts() {
    let origin = Path::new("inv.txt");
    let all: Vec<&str> = Phone::all().map(Phone::symbol).collect();
    let mut dup = all.clone();
    dup[1] = dup[0];
    assert!(matches!(PhoneInventory::parse(&dup.join("\n"), origin), Err(Error::DuplicateSymbol(_))));
    assert!(matches!(
        PhoneInventory::parse(&all[..39].join("\n"), origin),
        Err(Error::WrongCount { found: 39, expected: 40 })
    ));
    let inv = PhoneInventory::parse(&all.join("\n"), origin).unwrap();
    assert_eq!(PhoneInventory::parse(&inv.to_text(), origin).unwrap(), inv);
    assert_eq!(PhoneInventory::default().len(), 40);
}

fn any_mapped_symbol() -> impl Strategy<Value = (Scheme, String)> {
    let mut pool = Vec::new();
    for scheme in [Scheme::Ipa, Scheme::Arpabet, Scheme::Timit] {
        let m = SchemeMapping::builtin(scheme);
        for (src, image) in m.entries() {
            if image.is_some() {
                pool.push((scheme, src.to_string()));
            }
        }
    }
    for p in Phone::all() {
        pool.push((Scheme::Arpabet, format!("{}1", p.symbol())));
    }
    proptest::sample::select(pool)
}

proptest! {
    #[test]
    fn normalization_is_idempotent((scheme, sym) in any_mapped_symbol()) {
        let once = normalize_phone(&sym, &SchemeMapping::builtin(scheme)).unwrap();
        for target in [Scheme::Ipa, Scheme::Arpabet, Scheme::Timit] {
            let twice = normalize_phone(once.symbol(), &SchemeMapping::builtin(target)).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
