//! Ternary phonological feature tables, corpus-label → IPA mapping, feature
//! contrasts and analogy quadruplet enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

/// PanPhon `ipa_all.csv` (24 ternary features).
pub const PANPHON_TABLE: &str = include_str!("../data/panphon_ipa_all.csv");
/// TIMIT label → IPA mapping; labels with no PanPhon entry are absent.
pub const TIMIT_MAPPING: &str = include_str!("../data/timit_ipa.tsv");
/// Balanced 20-phone inventory used by the synthetic corpus generator.
pub const TOY_TABLE: &str = include_str!("../data/toy_inventory.csv");

#[derive(Debug, Error)]
pub enum PhonologyError {
    #[error("feature table is empty")]
    EmptyTable,
    #[error("line {line}: unknown feature value {value:?} for phone {phone:?}, feature {feature}")]
    UnknownFeatureValue { line: usize, phone: String, feature: String, value: String },
    #[error("line {line}: duplicate phone {phone:?}")]
    DuplicatePhone { line: usize, phone: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowLength { line: usize, expected: usize, found: usize },
    #[error("header must start with \"ipa\" followed by feature names")]
    BadHeader,
    #[error("phone {0:?} not in feature table")]
    PhoneMissing(String),
    #[error("feature {0:?} not in feature table")]
    FeatureMissing(String),
    #[error("mapping {label:?} -> {ipa:?}: phone not in feature table")]
    MappedPhoneNotInTable { label: String, ipa: String },
    #[error("mapping line {line}: {reason}")]
    MalformedMapping { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureValue {
    Minus,
    Zero,
    Plus,
}

impl FeatureValue {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" => Some(Self::Plus),
            "-" => Some(Self::Minus),
            "0" => Some(Self::Zero),
            _ => None,
        }
    }

    /// `+1`, `-1` or `0`.
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
            Self::Zero => 0.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Plus => '+',
            Self::Minus => '-',
            Self::Zero => '0',
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NaturalClass {
    Vowel,
    Consonant,
}

/// Phone → ternary feature vector. Phones keep file order.
#[derive(Debug, Clone)]
pub struct PhonoFeatureTable {
    feature_names: Vec<String>,
    phones: Vec<String>,
    values: Vec<FeatureValue>,
    index: HashMap<String, usize>,
}

impl PhonoFeatureTable {
    /// Parses a CSV whose header is `ipa,<feature names...>` and whose cells
    /// are `+`, `-` or `0`.
    pub fn parse(text: &str) -> Result<Self, PhonologyError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(PhonologyError::EmptyTable),
        };
        if header.get(0) != Some("ipa") || header.len() < 2 {
            return Err(PhonologyError::BadHeader);
        }
        let feature_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let width = feature_names.len();
        let mut phones = Vec::new();
        let mut values = Vec::new();
        let mut index = HashMap::new();
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != width + 1 {
                return Err(PhonologyError::RowLength { line, expected: width + 1, found: rec.len() });
            }
            let phone = rec[0].to_string();
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let v = FeatureValue::parse(cell).ok_or_else(|| PhonologyError::UnknownFeatureValue {
                    line,
                    phone: phone.clone(),
                    feature: feature_names[j].clone(),
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
            if index.insert(phone.clone(), phones.len()).is_some() {
                return Err(PhonologyError::DuplicatePhone { line, phone });
            }
            phones.push(phone);
        }
        if phones.is_empty() {
            return Err(PhonologyError::EmptyTable);
        }
        Ok(Self { feature_names, phones, values, index })
    }

    pub fn load(path: &Path) -> Result<Self, PhonologyError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn panphon() -> Self {
        Self::parse(PANPHON_TABLE).expect("bundled PanPhon table parses")
    }

    pub fn toy() -> Self {
        Self::parse(TOY_TABLE).expect("bundled toy table parses")
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn phones(&self) -> &[String] {
        &self.phones
    }

    pub fn contains(&self, phone: &str) -> bool {
        self.index.contains_key(phone)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize, PhonologyError> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| PhonologyError::FeatureMissing(name.to_string()))
    }

    pub fn row(&self, phone: &str) -> Result<&[FeatureValue], PhonologyError> {
        let i = *self.index.get(phone).ok_or_else(|| PhonologyError::PhoneMissing(phone.to_string()))?;
        let w = self.feature_names.len();
        Ok(&self.values[i * w..(i + 1) * w])
    }

    pub fn value(&self, phone: &str, feature: &str) -> Result<FeatureValue, PhonologyError> {
        let j = self.feature_index(feature)?;
        Ok(self.row(phone)?[j])
    }

    /// Vowel iff `syl` is `+`.
    pub fn natural_class_of(&self, phone: &str) -> Result<NaturalClass, PhonologyError> {
        Ok(if self.value(phone, "syl")? == FeatureValue::Plus { NaturalClass::Vowel } else { NaturalClass::Consonant })
    }

    /// Features whose values differ between `a` and `b`, with direction.
    pub fn feature_diff(&self, a: &str, b: &str) -> Result<FeatureDiff, PhonologyError> {
        let (ra, rb) = (self.row(a)?, self.row(b)?);
        Ok(FeatureDiff(
            ra.iter()
                .zip(rb)
                .enumerate()
                .filter(|(_, (x, y))| x != y)
                .map(|(feature, (&from, &to))| FeatureChange { feature, from, to })
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureChange {
    /// Column index in the owning table.
    pub feature: usize,
    pub from: FeatureValue,
    pub to: FeatureValue,
}

/// Directed feature contrast between two phones, ordered by column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FeatureDiff(pub Vec<FeatureChange>);

impl FeatureDiff {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> FeatureDiff {
        FeatureDiff(self.0.iter().map(|c| FeatureChange { feature: c.feature, from: c.to, to: c.from }).collect())
    }

    /// `[voi:+>-, cor:->+]` style rendering.
    pub fn describe(&self, table: &PhonoFeatureTable) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|c| format!("{}:{}>{}", table.feature_names[c.feature], c.from, c.to))
            .collect();
        format!("[{}]", parts.join(", "))
    }
}

/// Corpus label → IPA phone.
#[derive(Debug, Clone, Default)]
pub struct PhoneMapping {
    map: BTreeMap<String, String>,
}

impl PhoneMapping {
    /// Parses `label<TAB>ipa` rows; lines starting with `#` and blank lines
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self, PhonologyError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| PhonologyError::MalformedMapping { line: i + 1, reason };
            let mut parts = line.split('\t');
            let (label, ipa) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(p), None) if !l.is_empty() && !p.is_empty() => (l, p),
                _ => return Err(bad("expected `label<TAB>ipa`".into())),
            };
            if map.insert(label.to_string(), ipa.to_string()).is_some() {
                return Err(bad(format!("label {label:?} mapped twice")));
            }
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self, PhonologyError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn timit() -> Self {
        Self::parse(TIMIT_MAPPING).expect("bundled TIMIT mapping parses")
    }

    /// Every phone in `table` maps to itself.
    pub fn identity(table: &PhonoFeatureTable) -> Self {
        Self { map: table.phones().iter().map(|p| (p.clone(), p.clone())).collect() }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Self { map: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect() }
    }

    /// Fails if any mapped IPA phone is missing from `table`.
    pub fn validate(&self, table: &PhonoFeatureTable) -> Result<(), PhonologyError> {
        for (label, ipa) in &self.map {
            if !table.contains(ipa) {
                return Err(PhonologyError::MappedPhoneNotInTable { label: label.clone(), ipa: ipa.clone() });
            }
        }
        Ok(())
    }

    pub fn map_label(&self, label: &str) -> Option<&str> {
        self.map.get(label).map(String::as_str)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// IPA phone for a corpus label, or `None` when the label is unmapped.
pub fn map_corpus_phone<'m>(label: &str, mapping: &'m PhoneMapping) -> Option<&'m str> {
    mapping.map_label(label)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoneCount {
    pub phone: String,
    pub count: usize,
}

/// Phones kept after mapping and frequency filtering.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Inventory {
    /// Surviving IPA phones, sorted, with occurrence counts.
    pub phones: Vec<PhoneCount>,
    /// Mapped phones dropped for occurring fewer than `min_count` times.
    pub rare: Vec<PhoneCount>,
    /// Corpus labels with no mapping, with counts.
    pub unmapped: BTreeMap<String, usize>,
    pub min_count: usize,
}

impl Inventory {
    pub fn phone_names(&self) -> Vec<String> {
        self.phones.iter().map(|p| p.phone.clone()).collect()
    }

    pub fn phone_set(&self) -> BTreeSet<String> {
        self.phones.iter().map(|p| p.phone.clone()).collect()
    }
}

pub const DEFAULT_MIN_COUNT: usize = 50;

/// Counts mapped phone occurrences in `split` (all utterances for `None`) and
/// keeps phones with at least `min_count` segments.
pub fn filter_inventory(
    corpus: &Corpus,
    split: Option<&str>,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    min_count: usize,
) -> Inventory {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut unmapped: BTreeMap<String, usize> = BTreeMap::new();
    for (_, u) in corpus.split(split) {
        for seg in &u.segments {
            match mapping.map_label(&seg.phone) {
                Some(ipa) if table.contains(ipa) => *counts.entry(ipa.to_string()).or_default() += 1,
                _ => *unmapped.entry(seg.phone.clone()).or_default() += 1,
            }
        }
    }
    let (keep, rare): (Vec<_>, Vec<_>) = counts
        .into_iter()
        .map(|(phone, count)| PhoneCount { phone, count })
        .partition(|p| p.count >= min_count);
    if keep.is_empty() {
        warn!("no phone occurs at least {min_count} times; inventory is empty");
    }
    Inventory { phones: keep, rare, unmapped, min_count }
}

/// Phones `(a, b, c, d)` with `diff(a, b) == diff(c, d)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnalogyQuadruplet {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

impl AnalogyQuadruplet {
    pub fn new(a: &str, b: &str, c: &str, d: &str) -> Self {
        Self { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn phones(&self) -> [&str; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

impl fmt::Display for AnalogyQuadruplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}+{}≈{}", self.b, self.a, self.c, self.d)
    }
}

/// All analogy quadruplets over `phones`.
///
/// Ordered pairs `(a, b)` are grouped by their directed feature contrast; any
/// two distinct pairs in a group with `a ≠ c` and `b ≠ d` form a quadruplet.
/// Of a quadruplet and its pair-swapped twin only the one with
/// `(a, b) < (c, d)` is kept. Output is sorted lexicographically.
pub fn enumerate_quadruplets(
    phones: &[String],
    table: &PhonoFeatureTable,
) -> Result<Vec<AnalogyQuadruplet>, PhonologyError> {
    let phones: Vec<&str> = phones.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect();
    let mut groups: BTreeMap<FeatureDiff, Vec<(&str, &str)>> = BTreeMap::new();
    for &a in &phones {
        for &b in &phones {
            if a == b {
                continue;
            }
            let diff = table.feature_diff(a, b)?;
            if !diff.is_empty() {
                groups.entry(diff).or_default().push((a, b));
            }
        }
    }
    let mut out = Vec::new();
    for pairs in groups.values() {
        for (i, &(a, b)) in pairs.iter().enumerate() {
            for &(c, d) in &pairs[i + 1..] {
                if a == c || b == d {
                    continue;
                }
                let (first, second) = if (a, b) < (c, d) { ((a, b), (c, d)) } else { ((c, d), (a, b)) };
                out.push(AnalogyQuadruplet::new(first.0, first.1, second.0, second.1));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use FeatureValue::*;

    #[test]
    fn panphon_lookups() {
        let t = PhonoFeatureTable::panphon();
        assert_eq!(t.feature_names().len(), 24);
        for f in ["syl", "voi", "cor", "distr", "lab", "hi", "lo", "back", "round", "nas", "son", "strid"] {
            t.feature_index(f).unwrap();
        }
        assert_eq!(t.value("m", "nas").unwrap(), Plus);
        assert_eq!(t.natural_class_of("æ").unwrap(), NaturalClass::Vowel);
        assert_eq!(t.natural_class_of("m").unwrap(), NaturalClass::Consonant);
        assert!(matches!(t.natural_class_of("not-a-phone"), Err(PhonologyError::PhoneMissing(_))));
    }

    #[test]
    fn diff_b_t_matches_table() {
        let t = PhonoFeatureTable::panphon();
        let d = t.feature_diff("b", "t").unwrap();
        assert_eq!(d.describe(&t), "[voi:+>-, cor:->+, distr:0>-, lab:+>-]");
        assert!(t.feature_diff("p", "p").unwrap().is_empty());
        assert_eq!(t.feature_diff("t", "b").unwrap(), d.reversed());
    }

    #[test]
    fn table_parse_errors() {
        assert!(matches!(PhonoFeatureTable::parse(""), Err(PhonologyError::EmptyTable)));
        assert!(matches!(PhonoFeatureTable::parse("ipa,voi\n"), Err(PhonologyError::EmptyTable)));
        match PhonoFeatureTable::parse("ipa,voi,nas\nm,+,?\n") {
            Err(PhonologyError::UnknownFeatureValue { line, value, .. }) => assert_eq!((line, value.as_str()), (2, "?")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            PhonoFeatureTable::parse("ipa,voi\nm,+\nm,-\n"),
            Err(PhonologyError::DuplicatePhone { line: 3, .. })
        ));
    }

    #[test]
    fn timit_mapping() {
        let t = PhonoFeatureTable::panphon();
        let m = PhoneMapping::timit();
        m.validate(&t).unwrap();
        assert_eq!(map_corpus_phone("ae", &m), Some("æ"));
        for silent in ["pau", "h#", "epi", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl"] {
            assert_eq!(map_corpus_phone(silent, &m), None, "{silent}");
        }
    }

    #[test]
    fn mapping_to_unknown_phone_fails_validation() {
        let t = PhonoFeatureTable::toy();
        let m = PhoneMapping::from_pairs([("x", "V0"), ("y", "nope")]);
        assert!(matches!(m.validate(&t), Err(PhonologyError::MappedPhoneNotInTable { .. })));
    }

    #[test]
    fn single_phone_has_no_quadruplets() {
        let t = PhonoFeatureTable::panphon();
        assert!(enumerate_quadruplets(&["p".into()], &t).unwrap().is_empty());
    }

    #[test]
    fn stop_square_gives_four_quadruplets() {
        // voicing and place contrasts both close the square
        let t = PhonoFeatureTable::panphon();
        let phones: Vec<String> = ["p", "b", "t", "d"].iter().map(|s| s.to_string()).collect();
        let q = enumerate_quadruplets(&phones, &t).unwrap();
        let expected = vec![
            AnalogyQuadruplet::new("b", "d", "p", "t"),
            AnalogyQuadruplet::new("b", "p", "d", "t"),
            AnalogyQuadruplet::new("d", "b", "t", "p"),
            AnalogyQuadruplet::new("p", "b", "t", "d"),
        ];
        assert_eq!(q, expected);
        for x in &q {
            assert_eq!(t.feature_diff(&x.a, &x.b).unwrap(), t.feature_diff(&x.c, &x.d).unwrap());
        }
    }
}
