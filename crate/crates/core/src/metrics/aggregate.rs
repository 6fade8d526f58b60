use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bleu, cider_d, rouge_l, tokenize};
use crate::corpus::EmotionLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub painting_id: String,
    pub generated: Vec<String>,
    pub references: Vec<Vec<String>>,
    pub grounding_emotion: Option<EmotionLabel>,
}

/// One line of the evaluation input file, before tokenisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub painting_id: String,
    #[serde(default)]
    pub emotion: Option<EmotionLabel>,
    pub generated: String,
    pub references: Vec<String>,
}

impl EvalInstance {
    pub fn from_text(
        painting_id: impl Into<String>,
        generated: &str,
        references: impl IntoIterator<Item = impl AsRef<str>>,
        grounding_emotion: Option<EmotionLabel>,
    ) -> Result<Self> {
        let references: Vec<_> = references.into_iter().map(|r| tokenize(r.as_ref())).collect();
        let painting_id = painting_id.into();
        if references.is_empty() {
            return Err(Error::InvalidRecord(format!("`{painting_id}` has no references")));
        }
        Ok(EvalInstance { painting_id, generated: tokenize(generated), references, grounding_emotion })
    }
}

impl TryFrom<EvalRecord> for EvalInstance {
    type Error = Error;

    fn try_from(r: EvalRecord) -> Result<Self> {
        EvalInstance::from_text(r.painting_id, &r.generated, &r.references, r.emotion)
    }
}

pub fn read_eval_instances(path: impl AsRef<Path>) -> Result<Vec<EvalInstance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EvalRecord = serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?;
        out.push(record.try_into()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricScores {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub cider_d: f64,
}

impl MetricScores {
    pub const NAMES: [&'static str; 6] = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L", "CIDEr-D"];

    pub fn values(&self) -> [f64; 6] {
        [self.bleu1, self.bleu2, self.bleu3, self.bleu4, self.rouge_l, self.cider_d]
    }

    fn from_values(v: [f64; 6]) -> Self {
        MetricScores { bleu1: v[0], bleu2: v[1], bleu3: v[2], bleu4: v[3], rouge_l: v[4], cider_d: v[5] }
    }

    /// Elementwise mean; zeros for an empty input.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a MetricScores>) -> MetricScores {
        let mut sum = [0.0; 6];
        let mut n = 0usize;
        for s in items {
            for (acc, v) in sum.iter_mut().zip(s.values()) {
                *acc += v;
            }
            n += 1;
        }
        if n == 0 {
            return MetricScores::default();
        }
        MetricScores::from_values(sum.map(|v| v / n as f64))
    }
}

/// Scores every instance. CIDEr-D document frequencies come from this instance set.
pub fn score_instances(instances: &[EvalInstance]) -> Result<Vec<MetricScores>> {
    let items: Vec<(&[String], &[Vec<String>])> =
        instances.iter().map(|i| (i.generated.as_slice(), i.references.as_slice())).collect();
    let cider = cider_d(&items);
    instances
        .par_iter()
        .zip(cider.par_iter())
        .map(|(inst, &cider)| {
            let (g, r) = (&inst.generated, &inst.references);
            Ok(MetricScores {
                bleu1: bleu(g, r, 1)?,
                bleu2: bleu(g, r, 2)?,
                bleu3: bleu(g, r, 3)?,
                bleu4: bleu(g, r, 4)?,
                rouge_l: rouge_l(g, r)?,
                cider_d: cider,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub painting_id: String,
    pub emotion: Option<EmotionLabel>,
    pub scores: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionGroup {
    pub emotion: EmotionLabel,
    pub count: usize,
    pub mean: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerEmotion {
    /// Non-empty groups in label order.
    pub groups: Vec<EmotionGroup>,
    /// Unweighted mean of the group means.
    pub headline: MetricScores,
    /// Emotions with no instance; left out of the headline.
    pub missing: Vec<EmotionLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub instances: Vec<InstanceScores>,
    /// Unweighted mean over instances ("per caption").
    pub overall: MetricScores,
    /// Present only when every instance carries a grounding emotion.
    pub per_emotion: Option<PerEmotion>,
}

pub fn aggregate(instances: &[EvalInstance], scores: &[MetricScores]) -> Result<MetricReport> {
    if instances.len() != scores.len() {
        return Err(Error::InvalidParameter(format!("{} instances but {} score rows", instances.len(), scores.len())));
    }
    let overall = MetricScores::mean(scores);
    let per_emotion = if instances.iter().all(|i| i.grounding_emotion.is_some()) && !instances.is_empty() {
        let mut groups = Vec::new();
        let mut missing = Vec::new();
        for emotion in EmotionLabel::ALL {
            let members: Vec<&MetricScores> = instances
                .iter()
                .zip(scores)
                .filter(|(i, _)| i.grounding_emotion == Some(emotion))
                .map(|(_, s)| s)
                .collect();
            if members.is_empty() {
                missing.push(emotion);
            } else {
                groups.push(EmotionGroup { emotion, count: members.len(), mean: MetricScores::mean(members) });
            }
        }
        let headline = MetricScores::mean(groups.iter().map(|g| &g.mean));
        Some(PerEmotion { groups, headline, missing })
    } else {
        None
    };
    let instances = instances
        .iter()
        .zip(scores)
        .map(|(i, s)| InstanceScores { painting_id: i.painting_id.clone(), emotion: i.grounding_emotion, scores: *s })
        .collect();
    Ok(MetricReport { instances, overall, per_emotion })
}

pub fn evaluate(instances: &[EvalInstance]) -> Result<MetricReport> {
    aggregate(instances, &score_instances(instances)?)
}

impl MetricReport {
    /// Metric rows with per-caption and per-emotion columns, then one column per emotion.
    pub fn write_table_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["metric".to_string(), "per_caption".to_string(), "per_emotion".to_string()];
        header.extend(EmotionLabel::ALL.iter().map(|e| e.as_str().to_string()));
        w.write_record(&header)?;
        for (m, name) in MetricScores::NAMES.iter().enumerate() {
            let mut row = vec![name.to_string(), format!("{:.6}", self.overall.values()[m])];
            match &self.per_emotion {
                Some(pe) => {
                    row.push(format!("{:.6}", pe.headline.values()[m]));
                    for e in EmotionLabel::ALL {
                        let cell =
                            pe.groups.iter().find(|g| g.emotion == e).map(|g| format!("{:.6}", g.mean.values()[m]));
                        row.push(cell.unwrap_or_default());
                    }
                }
                None => row.extend(std::iter::repeat_n(String::new(), 10)),
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<metrics csv>", e))
    }
}
