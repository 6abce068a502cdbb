use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::{
    label_utterance, read_annotations, read_spans, AlignConfig, AnnotationRecord, PronLabel,
    TargetPhoneInstance,
};
use crate::error::{Error, Result};
use crate::featureio::{read_features, read_header, UtteranceFeatures};
use crate::phoneset::{Scheme, SchemeMapping, UnmappablePolicy};
use crate::util::atomic_write;

/// A corpus description: one entry per utterance, stored as TOML.
///
/// ```toml
/// corpus = "epadb"
/// span_scheme = "arpabet"
/// annotation_scheme = "arpabet"
///
/// [[utterance]]
/// utt_id = "spk1_001"
/// speaker = "spk1"
/// l1 = "es"
/// split = "dev"
/// features = "feats/spk1_001.mpkf"
/// spans = "spans.txt"
/// annotation = "annotations.tsv"
/// ```
///
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub corpus: String,
    #[serde(default = "default_scheme")]
    pub span_scheme: Scheme,
    #[serde(default = "default_scheme")]
    pub annotation_scheme: Scheme,
    #[serde(default)]
    pub unmappable: UnmappablePolicy,
    #[serde(default, rename = "utterance")]
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_scheme() -> Scheme {
    Scheme::Arpabet
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub speaker: String,
    #[serde(default)]
    pub l1: String,
    pub split: String,
    pub features: PathBuf,
    pub spans: PathBuf,
    /// Absent for native material, whose phones all count as correct.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest =
            toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        atomic_write(path, text.as_bytes())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn entries_in<'a>(&'a self, split: &'a str) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn speakers(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|e| (e.speaker.clone(), e.l1.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestReport {
    pub corpus: String,
    pub utterances: usize,
    pub speakers: usize,
    pub positives: usize,
    pub negatives: usize,
    pub ignored: usize,
    pub per_split: BTreeMap<String, usize>,
}

/// An utterance with its features and labeled target spans.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub utt_id: String,
    pub speaker_id: String,
    pub l1: String,
    pub split: String,
    pub features: UtteranceFeatures,
    pub targets: Vec<TargetPhoneInstance>,
    pub labels: Vec<PronLabel>,
}

struct FileCache<'m> {
    manifest: &'m DatasetManifest,
    span_map: SchemeMapping,
    ann_map: SchemeMapping,
    spans: HashMap<PathBuf, BTreeMap<String, Vec<TargetPhoneInstance>>>,
    annotations: HashMap<PathBuf, BTreeMap<String, AnnotationRecord>>,
}

impl<'m> FileCache<'m> {
    fn new(manifest: &'m DatasetManifest) -> Self {
        Self {
            manifest,
            span_map: SchemeMapping::builtin(manifest.span_scheme),
            ann_map: SchemeMapping::builtin(manifest.annotation_scheme),
            spans: HashMap::new(),
            annotations: HashMap::new(),
        }
    }

    fn existing(&self, p: &Path) -> Result<PathBuf> {
        let full = self.manifest.resolve(p);
        if !full.is_file() {
            return Err(Error::MissingFile(full));
        }
        Ok(full)
    }

    fn spans_for(&mut self, entry: &ManifestEntry) -> Result<Vec<TargetPhoneInstance>> {
        let path = self.existing(&entry.spans)?;
        if !self.spans.contains_key(&path) {
            let parsed = read_spans(&path, &self.span_map)?;
            self.spans.insert(path.clone(), parsed);
        }
        self.spans[&path]
            .get(&entry.utt_id)
            .cloned()
            .ok_or_else(|| Error::MissingUtterance(format!("{} in {}", entry.utt_id, path.display())))
    }

    fn annotation_for(&mut self, entry: &ManifestEntry) -> Result<Option<AnnotationRecord>> {
        let Some(rel) = &entry.annotation else {
            return Ok(None);
        };
        let path = self.existing(rel)?;
        if !self.annotations.contains_key(&path) {
            let parsed = read_annotations(&path, &self.ann_map, self.manifest.unmappable)?;
            self.annotations.insert(path.clone(), parsed);
        }
        self.annotations[&path]
            .get(&entry.utt_id)
            .cloned()
            .map(Some)
            .ok_or_else(|| Error::MissingUtterance(format!("{} in {}", entry.utt_id, path.display())))
    }

    fn labeled(&mut self, entry: &ManifestEntry, n_frames: usize) -> Result<(Vec<TargetPhoneInstance>, Vec<PronLabel>)> {
        let spans = self.spans_for(entry)?;
        if let Some(bad) = spans.iter().find(|s| s.end_frame > n_frames) {
            return Err(Error::SpanOutOfRange {
                start: bad.start_frame,
                end: bad.end_frame,
                n_frames,
            });
        }
        let record = self.annotation_for(entry)?;
        let labeled = label_utterance(&spans, record.as_ref(), &AlignConfig::default())?;
        Ok(labeled.into_iter().map(|l| (l.instance, l.label)).unzip())
    }
}

fn check_unique(manifest: &DatasetManifest) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in &manifest.entries {
        if !seen.insert(e.utt_id.as_str()) {
            return Err(Error::DuplicateUttId(e.utt_id.clone()));
        }
    }
    Ok(())
}

/// Checks every referenced file and tallies label counts without loading
/// feature payloads.
pub fn validate_manifest(manifest: &DatasetManifest) -> Result<ManifestReport> {
    check_unique(manifest)?;
    let mut cache = FileCache::new(manifest);
    let mut report = ManifestReport {
        corpus: manifest.corpus.clone(),
        utterances: manifest.entries.len(),
        speakers: manifest.speakers().len(),
        ..Default::default()
    };
    for entry in &manifest.entries {
        let header = read_header(&cache.existing(&entry.features)?)?;
        let (_, labels) = cache.labeled(entry, header.n_frames)?;
        for label in labels {
            match label {
                PronLabel::Positive => report.positives += 1,
                PronLabel::Negative => report.negatives += 1,
                PronLabel::Ignored => report.ignored += 1,
            }
        }
        *report.per_split.entry(entry.split.clone()).or_default() += 1;
    }
    Ok(report)
}

/// Loads features and labels for the entries of the given splits (all
/// entries when `splits` is empty), in manifest order.
pub fn load_corpus(manifest: &DatasetManifest, splits: &[&str], layer_norm: bool) -> Result<Vec<Utterance>> {
    check_unique(manifest)?;
    let mut cache = FileCache::new(manifest);
    let mut out = Vec::new();
    for entry in &manifest.entries {
        if !splits.is_empty() && !splits.contains(&entry.split.as_str()) {
            continue;
        }
        let mut features = read_features(&cache.existing(&entry.features)?)?;
        features.utt_id = entry.utt_id.clone();
        features.speaker_id = entry.speaker.clone();
        if layer_norm {
            features = features.layer_normalized();
        }
        let (targets, labels) = cache.labeled(entry, features.n_frames)?;
        out.push(Utterance {
            utt_id: entry.utt_id.clone(),
            speaker_id: entry.speaker.clone(),
            l1: entry.l1.clone(),
            split: entry.split.clone(),
            features,
            targets,
            labels,
        });
    }
    Ok(out)
}
