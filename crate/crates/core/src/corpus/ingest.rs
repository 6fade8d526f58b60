use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{Annotation, Corpus, EmotionLabel, Source};
use crate::{Error, Result};

/// CSV column names. Defaults follow the public ArtEmis release.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub painting: String,
    pub emotion: String,
    pub utterance: String,
    pub art_style: String,
    pub image_ref: String,
    pub worker_id: String,
    pub query_painting: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            painting: "painting".into(),
            emotion: "emotion".into(),
            utterance: "utterance".into(),
            art_style: "art_style".into(),
            image_ref: "image_ref".into(),
            worker_id: "worker_id".into(),
            query_painting: "query_painting".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedRow>,
}

impl IngestOutcome {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

struct Columns {
    painting: usize,
    emotion: usize,
    utterance: usize,
    art_style: Option<usize>,
    image_ref: Option<usize>,
    worker_id: Option<usize>,
    query_painting: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, mapping: &ColumnMapping) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let required = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
        Ok(Columns {
            painting: required(&mapping.painting)?,
            emotion: required(&mapping.emotion)?,
            utterance: required(&mapping.utterance)?,
            art_style: find(&mapping.art_style),
            image_ref: find(&mapping.image_ref),
            worker_id: find(&mapping.worker_id),
            query_painting: find(&mapping.query_painting),
        })
    }
}

/// Reads an annotation CSV. Malformed rows are skipped and reported; a missing
/// required column or an unreadable file is fatal.
pub fn ingest_annotations(path: impl AsRef<Path>, source: Source, mapping: &ColumnMapping) -> Result<IngestOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    ingest_reader(file, &name, source, mapping)
}

pub(crate) fn ingest_reader(
    reader: impl Read,
    name: &str,
    source: Source,
    mapping: &ColumnMapping,
) -> Result<IngestOutcome> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, mapping)?;
    let mut corpus = Corpus::new(name);
    let mut skipped = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                // Broken UTF-8 or quoting inside a row; the reader resynchronises on the next record.
                skipped.push(SkippedRow { line, reason: e.to_string() });
                continue;
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(line);
        match parse_row(&record, &cols, source) {
            Ok((annotation, art_style, image_ref)) => corpus.push_annotation(&art_style, &image_ref, annotation),
            Err(reason) => skipped.push(SkippedRow { line, reason }),
        }
    }
    for row in &skipped {
        warn!(line = row.line, reason = %row.reason, "skipped annotation row");
    }
    Ok(IngestOutcome { corpus, skipped })
}

fn parse_row(
    record: &csv::StringRecord,
    cols: &Columns,
    source: Source,
) -> std::result::Result<(Annotation, String, String), String> {
    let get = |i: usize| record.get(i).map(str::trim).unwrap_or("");
    let opt = |i: Option<usize>| i.map(get).filter(|s| !s.is_empty()).map(str::to_string);

    let painting_id = get(cols.painting);
    if painting_id.is_empty() {
        return Err("empty painting id".into());
    }
    let emotion: EmotionLabel = get(cols.emotion).parse().map_err(|e: Error| e.to_string())?;
    let annotation = Annotation {
        painting_id: painting_id.to_string(),
        emotion,
        utterance: get(cols.utterance).to_string(),
        source,
        worker_id: opt(cols.worker_id),
        query_painting_id: opt(cols.query_painting),
    };
    annotation.validate().map_err(|e| e.to_string())?;
    Ok((annotation, opt(cols.art_style).unwrap_or_default(), opt(cols.image_ref).unwrap_or_default()))
}

/// Writes a corpus as annotation CSV using the default column names. Optional columns are
/// emitted only when some annotation uses them.
pub fn write_annotations_csv(out: impl std::io::Write, corpus: &Corpus) -> Result<()> {
    let m = ColumnMapping::default();
    let with_workers = corpus.annotations().any(|a| a.worker_id.is_some());
    let with_query = corpus.annotations().any(|a| a.query_painting_id.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header =
        vec![m.art_style.as_str(), m.painting.as_str(), m.emotion.as_str(), m.utterance.as_str(), m.image_ref.as_str()];
    if with_workers {
        header.push(m.worker_id.as_str());
    }
    if with_query {
        header.push(m.query_painting.as_str());
    }
    w.write_record(&header)?;
    for p in corpus.paintings() {
        for a in &p.annotations {
            let mut row = vec![
                p.art_style.as_str(),
                p.id.as_str(),
                a.emotion.as_str(),
                a.utterance.as_str(),
                p.image_ref.as_str(),
            ];
            if with_workers {
                row.push(a.worker_id.as_deref().unwrap_or(""));
            }
            if with_query {
                row.push(a.query_painting_id.as_deref().unwrap_or(""));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<annotation csv>", e))
}
