use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Annotation, Corpus, EmotionLabel, Source};
use crate::{Error, Result};

/// One line of the corpus export: an annotation with its painting metadata inlined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub painting_id: String,
    #[serde(default)]
    pub art_style: String,
    #[serde(default)]
    pub image_ref: String,
    pub emotion: EmotionLabel,
    pub utterance: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_painting_id: Option<String>,
}

impl AnnotationRecord {
    pub fn into_parts(self) -> (String, String, Annotation) {
        let annotation = Annotation {
            painting_id: self.painting_id,
            emotion: self.emotion,
            utterance: self.utterance,
            source: self.source,
            worker_id: self.worker_id,
            query_painting_id: self.query_painting_id,
        };
        (self.art_style, self.image_ref, annotation)
    }
}

impl Corpus {
    pub fn records(&self) -> impl Iterator<Item = AnnotationRecord> + '_ {
        self.paintings().flat_map(|p| {
            p.annotations.iter().map(move |a| AnnotationRecord {
                painting_id: a.painting_id.clone(),
                art_style: p.art_style.clone(),
                image_ref: p.image_ref.clone(),
                emotion: a.emotion,
                utterance: a.utterance.clone(),
                source: a.source,
                worker_id: a.worker_id.clone(),
                query_painting_id: a.query_painting_id.clone(),
            })
        })
    }

    pub fn from_records(name: impl Into<String>, records: impl IntoIterator<Item = AnnotationRecord>) -> Result<Self> {
        let mut corpus = Corpus::new(name);
        for record in records {
            let (art_style, image_ref, annotation) = record.into_parts();
            annotation.validate()?;
            corpus.push_annotation(&art_style, &image_ref, annotation);
        }
        Ok(corpus)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for record in self.records() {
            let line = serde_json::to_string(&record).map_err(|source| Error::Json { line: 0, source })?;
            writeln!(out, "{line}").map_err(|e| Error::io("<jsonl writer>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(name: impl Into<String>, input: impl BufRead) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<jsonl reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?;
            records.push(record);
        }
        Corpus::from_records(name, records)
    }
}

pub fn write_corpus_jsonl(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    corpus.write_jsonl(&mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Corpus::read_jsonl(name, BufReader::new(file))
}
