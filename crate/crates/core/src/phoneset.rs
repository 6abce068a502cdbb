//! Canonical phone inventory and symbol normalization.
//!
//! The inventory is the 39 English phones of the CMU ARPAbet set plus a
//! silence marker `SIL`. Annotation schemes (IPA, extended ARPAbet, TIMIT)
//! are folded onto it through tab-separated mapping tables that ship in
//! `data/` and can be replaced at run time.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Canonical symbols. The position here is the phone's identity, not its
/// output-node ordinal (that comes from [`PhoneInventory`]).
const CANONICAL: [&str; 40] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH", "SIL",
];

pub const INVENTORY_SIZE: usize = CANONICAL.len();

const DEFAULT_INVENTORY: &str = include_str!("../data/inventory.txt");
const DEFAULT_TIMIT: &str = include_str!("../data/timit.map");
const DEFAULT_ARPABET: &str = include_str!("../data/arpabet.map");
const DEFAULT_IPA: &str = include_str!("../data/ipa.map");

/// A normalized phone: one of the 40 canonical symbols.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phone(u8);

impl Phone {
    pub const SIL: Phone = Phone(39);

    pub fn from_symbol(symbol: &str) -> Option<Phone> {
        CANONICAL
            .iter()
            .position(|s| *s == symbol)
            .map(|i| Phone(i as u8))
    }

    pub fn symbol(self) -> &'static str {
        CANONICAL[self.0 as usize]
    }

    pub fn is_silence(self) -> bool {
        self == Phone::SIL
    }

    /// Position in the fixed canonical list (alphabetical, `SIL` last).
    pub fn canonical_index(self) -> usize {
        self.0 as usize
    }

    pub fn from_canonical_index(index: usize) -> Option<Phone> {
        (index < INVENTORY_SIZE).then_some(Phone(index as u8))
    }

    pub fn all() -> impl Iterator<Item = Phone> {
        (0..INVENTORY_SIZE as u8).map(Phone)
    }
}

impl fmt::Debug for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Phone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phone::from_symbol(s).ok_or_else(|| Error::UnknownPhone {
            symbol: s.to_string(),
        })
    }
}

impl Serialize for Phone {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Phone {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered phone list; the order fixes which probe output node scores which
/// phone, so it is stored alongside every trained probe.
#[derive(Clone, PartialEq, Eq)]
pub struct PhoneInventory {
    phones: Vec<Phone>,
    ordinal: [u8; INVENTORY_SIZE],
}

impl fmt::Debug for PhoneInventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.phones).finish()
    }
}

impl Default for PhoneInventory {
    fn default() -> Self {
        Self::parse(DEFAULT_INVENTORY, Path::new("<builtin inventory>"))
            .expect("builtin inventory is valid")
    }
}

impl PhoneInventory {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses one symbol per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut phones = Vec::with_capacity(INVENTORY_SIZE);
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            if line.is_empty() {
                continue;
            }
            let symbol = line.split('\t').next().unwrap_or(line).trim();
            let phone = Phone::from_symbol(symbol).ok_or_else(|| {
                Error::parse(origin, lineno + 1, format!("{symbol:?} is not a canonical phone"))
            })?;
            if phones.contains(&phone) {
                return Err(Error::DuplicateSymbol(symbol.to_string()));
            }
            phones.push(phone);
        }
        Self::from_phones(phones)
    }

    pub fn from_phones(phones: Vec<Phone>) -> Result<Self> {
        if phones.len() != INVENTORY_SIZE {
            return Err(Error::WrongCount {
                found: phones.len(),
                expected: INVENTORY_SIZE,
            });
        }
        let mut ordinal = [u8::MAX; INVENTORY_SIZE];
        for (i, p) in phones.iter().enumerate() {
            if ordinal[p.canonical_index()] != u8::MAX {
                return Err(Error::DuplicateSymbol(p.symbol().to_string()));
            }
            ordinal[p.canonical_index()] = i as u8;
        }
        Ok(Self { phones, ordinal })
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn phone(&self, ordinal: usize) -> Phone {
        self.phones[ordinal]
    }

    pub fn ordinal(&self, phone: Phone) -> usize {
        self.ordinal[phone.canonical_index()] as usize
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        Phone::from_symbol(symbol).map(|p| self.ordinal(p))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.phones {
            out.push_str(p.symbol());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ipa,
    Arpabet,
    Timit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ipa => "ipa",
            Scheme::Arpabet => "arpabet",
            Scheme::Timit => "timit",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ipa" => Ok(Scheme::Ipa),
            "arpabet" | "arpabet-extended" => Ok(Scheme::Arpabet),
            "timit" => Ok(Scheme::Timit),
            other => Err(Error::Config(format!("unknown phone scheme {other:?}"))),
        }
    }
}

/// Source-symbol table for one annotation scheme. `None` entries mark
/// symbols that are known but have no canonical image.
#[derive(Debug, Clone)]
pub struct SchemeMapping {
    scheme: Scheme,
    entries: HashMap<String, Option<Phone>>,
}

impl SchemeMapping {
    pub fn builtin(scheme: Scheme) -> Self {
        let text = match scheme {
            Scheme::Ipa => DEFAULT_IPA,
            Scheme::Arpabet => DEFAULT_ARPABET,
            Scheme::Timit => DEFAULT_TIMIT,
        };
        Self::parse(scheme, text, Path::new("<builtin mapping>")).expect("builtin mapping is valid")
    }

    pub fn load(scheme: Scheme, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(scheme, &text, path)
    }

    /// Parses `source<TAB>target` lines; a target of `-` marks the source as
    /// unmappable.
    pub fn parse(scheme: Scheme, text: &str, origin: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            if line.is_empty() {
                continue;
            }
            let (source, target) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno + 1, "expected source<TAB>target"))?;
            let target = target.trim();
            let image = if target == "-" {
                None
            } else {
                Some(Phone::from_symbol(target).ok_or_else(|| {
                    Error::parse(origin, lineno + 1, format!("{target:?} is not a canonical phone"))
                })?)
            };
            let key = fold_key(scheme, source.trim());
            if entries.insert(key.clone(), image).is_some() {
                return Err(Error::parse(origin, lineno + 1, format!("duplicate source {key:?}")));
            }
        }
        Ok(Self { scheme, entries })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Iterates the explicit table entries (canonical identities are implied).
    pub fn entries(&self) -> impl Iterator<Item = (&str, Option<Phone>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        // `h#` is a TIMIT symbol, so only a `#` at the start of a field opens a comment.
        Some(pos) if pos == 0 || line[..pos].ends_with(char::is_whitespace) => line[..pos].trim(),
        _ => line.trim(),
    }
}

fn strip_stress(symbol: &str) -> &str {
    symbol.trim_end_matches(|c: char| c.is_ascii_digit())
}

fn fold_key(scheme: Scheme, symbol: &str) -> String {
    match scheme {
        Scheme::Arpabet => strip_stress(symbol).to_ascii_uppercase(),
        Scheme::Timit => strip_stress(symbol).to_ascii_lowercase(),
        Scheme::Ipa => symbol
            .chars()
            .filter(|c| !matches!(c, 'ˈ' | 'ˌ' | 'ː' | 'ˑ' | '\u{0361}' | '\u{035C}'))
            .collect(),
    }
}

/// Maps a raw annotation token onto the canonical inventory.
///
/// Stress digits are stripped first. Symbols absent from the table are
/// accepted when they already are canonical, which makes the mapping
/// idempotent.
pub fn normalize_phone(symbol: &str, mapping: &SchemeMapping) -> Result<Phone> {
    let symbol = symbol.trim();
    if symbol.is_empty() {
        return Err(Error::EmptySymbol);
    }
    let key = fold_key(mapping.scheme, symbol);
    let unmappable = || Error::UnmappableSymbol {
        symbol: symbol.to_string(),
        scheme: mapping.scheme.to_string(),
    };
    match mapping.entries.get(&key) {
        Some(Some(p)) => Ok(*p),
        Some(None) => Err(unmappable()),
        None => Phone::from_symbol(&strip_stress(symbol).to_ascii_uppercase())
            .ok_or_else(unmappable),
    }
}

/// What ingestion does with a token that has no canonical image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnmappablePolicy {
    #[default]
    Abort,
    Skip,
}
