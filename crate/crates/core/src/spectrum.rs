//! Extended-emotion analysis over per-caption probability vectors produced by an external
//! classifier: multi-label histograms and Pearson correlation between emotion series.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The 27 non-neutral GoEmotions categories, in their published order.
pub const DEFAULT_TAXONOMY: [&str; 27] = [
    "admiration",
    "amusement",
    "anger",
    "annoyance",
    "approval",
    "caring",
    "confusion",
    "curiosity",
    "desire",
    "disappointment",
    "disapproval",
    "disgust",
    "embarrassment",
    "excitement",
    "fear",
    "gratitude",
    "grief",
    "joy",
    "love",
    "nervousness",
    "optimism",
    "pride",
    "realization",
    "relief",
    "remorse",
    "sadness",
    "surprise",
];

pub const DEFAULT_HISTOGRAM_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionPrediction {
    /// Annotation key, conventionally `painting_id#index`.
    pub key: String,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    taxonomy: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    taxonomy: Vec<String>,
    predictions: Vec<EmotionPrediction>,
}

impl PredictionSet {
    pub fn new(taxonomy: Vec<String>, predictions: Vec<EmotionPrediction>) -> Result<Self> {
        if taxonomy.is_empty() {
            return Err(Error::Empty("taxonomy"));
        }
        for p in &predictions {
            if p.probs.len() != taxonomy.len() {
                return Err(Error::TaxonomyMismatch(format!(
                    "`{}` has {} probabilities for {} labels",
                    p.key,
                    p.probs.len(),
                    taxonomy.len()
                )));
            }
            if let Some(v) = p.probs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidRecord(format!("`{}` has probability {v} outside [0, 1]", p.key)));
            }
        }
        Ok(PredictionSet { taxonomy, predictions })
    }

    pub fn taxonomy(&self) -> &[String] {
        &self.taxonomy
    }

    pub fn predictions(&self) -> &[EmotionPrediction] {
        &self.predictions
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    /// Header line `{"taxonomy": [...]}` then one `{"key", "probs"}` object per line.
    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (_, header) = lines.next().ok_or(Error::Empty("prediction file"))?;
        let header = header.map_err(|e| Error::io("<predictions>", e))?;
        let header: Header = serde_json::from_str(&header).map_err(|source| Error::Json { line: 1, source })?;
        let mut predictions = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<predictions>", e))?;
            predictions.push(serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?);
        }
        PredictionSet::new(header.taxonomy, predictions)
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let header = to_json(&Header { taxonomy: self.taxonomy.clone() })?;
        writeln!(out, "{header}").map_err(|e| Error::io("<predictions>", e))?;
        for p in &self.predictions {
            writeln!(out, "{}", to_json(p)?).map_err(|e| Error::io("<predictions>", e))?;
        }
        Ok(())
    }

    fn series(&self, label: usize) -> Vec<f64> {
        self.predictions.iter().map(|p| p.probs[label]).collect()
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|source| Error::Json { line: 0, source })
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    PredictionSet::read(BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
}

/// Per label, the number of predictions whose probability strictly exceeds `threshold`.
pub fn emotion_histogram(set: &PredictionSet, threshold: f64) -> Vec<LabelCount> {
    set.taxonomy
        .iter()
        .enumerate()
        .map(|(j, label)| LabelCount {
            label: label.clone(),
            count: set.predictions.iter().filter(|p| p.probs[j] > threshold).count(),
        })
        .collect()
}

/// Symmetric label-by-label Pearson correlation. Entries involving a constant series are
/// `None` and the label is listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub undefined: Vec<String>,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Builds a matrix from raw values, e.g. for comparisons against reference heat maps.
    pub fn from_values(labels: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if values.len() != labels.len() || values.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidParameter("correlation matrix must be square and match its labels".into()));
        }
        Ok(CorrelationMatrix { labels, values, undefined: Vec::new() })
    }

    /// CSV with a label header row and label first column; undefined cells are `NA`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<correlation csv>", e))
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn pearson_matrix(set: &PredictionSet) -> Result<CorrelationMatrix> {
    if set.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 predictions, got {}", set.len())));
    }
    let m = set.taxonomy.len();
    let series: Vec<Vec<f64>> = (0..m).map(|j| set.series(j)).collect();
    let constant: Vec<bool> = series.iter().map(|s| s.iter().all(|&v| v == s[0])).collect();

    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let upper: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| (!constant[i] && !constant[j]).then(|| pearson(&series[i], &series[j])))
        .collect();

    let mut values = vec![vec![None; m]; m];
    for (i, row) in values.iter_mut().enumerate() {
        if !constant[i] {
            row[i] = Some(1.0);
        }
    }
    for (&(i, j), v) in pairs.iter().zip(upper) {
        values[i][j] = v;
        values[j][i] = v;
    }
    let undefined = set.taxonomy.iter().zip(&constant).filter(|(_, &c)| c).map(|(l, _)| l.clone()).collect();
    Ok(CorrelationMatrix { labels: set.taxonomy.clone(), values, undefined })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoreDistinctive {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalSummary {
    pub mean_abs_a: f64,
    pub mean_abs_b: f64,
    /// `mean_abs_a - mean_abs_b`.
    pub difference: f64,
    /// The matrix with the lower mean absolute off-diagonal correlation.
    pub more_distinctive: MoreDistinctive,
}

fn mean_abs_offdiagonal(m: &CorrelationMatrix) -> f64 {
    let vals: Vec<f64> = (0..m.size())
        .flat_map(|i| (0..m.size()).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter_map(|(i, j)| m.get(i, j))
        .map(f64::abs)
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

pub fn offdiagonal_comparison(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<OffDiagonalSummary> {
    if a.size() != b.size() {
        return Err(Error::InvalidParameter(format!("matrix sizes differ: {} vs {}", a.size(), b.size())));
    }
    if a.labels != b.labels {
        return Err(Error::TaxonomyMismatch("matrices use different label orders".into()));
    }
    let (mean_abs_a, mean_abs_b) = (mean_abs_offdiagonal(a), mean_abs_offdiagonal(b));
    let difference = mean_abs_a - mean_abs_b;
    let more_distinctive = if difference.abs() < 1e-12 {
        MoreDistinctive::Tie
    } else if difference > 0.0 {
        MoreDistinctive::B
    } else {
        MoreDistinctive::A
    };
    Ok(OffDiagonalSummary { mean_abs_a, mean_abs_b, difference, more_distinctive })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn set(labels: &[&str], rows: &[Vec<f64>]) -> PredictionSet {
        PredictionSet::new(
            labels.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .enumerate()
                .map(|(i, r)| EmotionPrediction { key: format!("k{i}"), probs: r.clone() })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn histogram_counts_above_threshold() {
        let mut probs = vec![0.1; 27];
        probs[4] = 0.9;
        let s = set(&DEFAULT_TAXONOMY, &[probs]);
        let h = emotion_histogram(&s, 0.5);
        assert_eq!(h.iter().map(|c| c.count).sum::<usize>(), 1);
        assert_eq!(h[4].count, 1);
        assert_eq!(h[4].label, "approval");

        let low = set(&DEFAULT_TAXONOMY, &[vec![0.2; 27], vec![0.5; 27]]);
        assert!(emotion_histogram(&low, 0.5).iter().all(|c| c.count == 0));
    }

    #[test]
    fn histogram_uniform_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..1000).map(|_| (0..27).map(|_| rng.random::<f64>()).collect()).collect();
        let s = set(&DEFAULT_TAXONOMY, &rows);
        for c in emotion_histogram(&s, 0.5) {
            assert!((450..=550).contains(&c.count), "{}: {}", c.label, c.count);
        }
    }

    #[test]
    fn identical_series_correlate_fully() {
        let s = set(&["a", "b"], &[vec![0.1, 0.1], vec![0.5, 0.5], vec![0.3, 0.3]]);
        let m = pearson_matrix(&s).unwrap();
        assert!((m.get(0, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_undefined() {
        let s = set(&["a", "b", "c"], &[vec![0.1, 0.4, 0.2], vec![0.5, 0.4, 0.1], vec![0.3, 0.4, 0.9]]);
        let m = pearson_matrix(&s).unwrap();
        assert_eq!(m.undefined, vec!["b".to_string()]);
        assert!(m.values[1].iter().all(Option::is_none));
        assert!((0..3).all(|i| m.get(i, 1).is_none()));
        assert!(m.get(0, 2).unwrap().is_finite());
        let mut csv = Vec::new();
        m.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("NA"));
    }

    #[test]
    fn five_by_three_hand_computed() {
        // Columns x, y, z over five predictions.
        let rows = vec![
            vec![0.1, 0.2, 0.9],
            vec![0.2, 0.1, 0.7],
            vec![0.3, 0.4, 0.8],
            vec![0.4, 0.3, 0.2],
            vec![0.5, 0.5, 0.1],
        ];
        let m = pearson_matrix(&set(&["x", "y", "z"], &rows)).unwrap();
        // x deviations: -0.2,-0.1,0,0.1,0.2 (Sxx=0.1); y: -0.1,-0.2,0.1,0,0.2 (Syy=0.1);
        // z mean 0.54: 0.36,0.16,0.26,-0.34,-0.44 (Szz=0.532).
        // Sxy = 0.02+0.02+0+0+0.04 = 0.08 -> 0.8
        // Sxz = -0.072-0.016+0-0.034-0.088 = -0.21 -> -0.21/sqrt(0.0572)
        // Syz = -0.036-0.032+0.026+0-0.088 = -0.13 -> -0.13/sqrt(0.0572)
        let sxz = -0.21 / (0.1f64 * 0.532).sqrt();
        let syz = -0.13 / (0.1f64 * 0.532).sqrt();
        assert!((m.get(0, 1).unwrap() - 0.8).abs() < 1e-9);
        assert!((m.get(0, 2).unwrap() - sxz).abs() < 1e-9);
        assert!((m.get(1, 2).unwrap() - syz).abs() < 1e-9);
    }

    #[test]
    fn too_few_predictions() {
        assert!(pearson_matrix(&set(&["a"], &[vec![0.3]])).is_err());
    }

    #[test]
    fn taxonomy_mismatch_rejected() {
        let r =
            PredictionSet::new(vec!["a".into()], vec![EmotionPrediction { key: "k".into(), probs: vec![0.1, 0.2] }]);
        assert!(matches!(r, Err(Error::TaxonomyMismatch(_))));
    }

    #[test]
    fn offdiagonal_cases() {
        let labels: Vec<String> = vec!["a".into(), "b".into()];
        let eye = CorrelationMatrix::from_values(
            labels.clone(),
            vec![vec![Some(1.0), Some(0.0)], vec![Some(0.0), Some(1.0)]],
        )
        .unwrap();
        let ones = CorrelationMatrix::from_values(labels.clone(), vec![vec![Some(1.0); 2]; 2]).unwrap();
        let s = offdiagonal_comparison(&eye, &ones).unwrap();
        assert_eq!((s.mean_abs_a, s.mean_abs_b), (0.0, 1.0));
        assert_eq!(s.more_distinctive, MoreDistinctive::A);
        let same = offdiagonal_comparison(&ones, &ones).unwrap();
        assert_eq!(same.difference, 0.0);
        assert_eq!(same.more_distinctive, MoreDistinctive::Tie);
        let three =
            CorrelationMatrix::from_values(vec!["a".into(), "b".into(), "c".into()], vec![vec![None; 3]; 3]).unwrap();
        assert!(offdiagonal_comparison(&eye, &three).is_err());
    }

    #[test]
    fn decorrelated_corpus_is_more_distinctive() {
        // Corpus A: fear and disappointment move together. Corpus B: independent.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a_rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let f: f64 = rng.random();
                vec![f, (f * 0.9 + rng.random::<f64>() * 0.1).min(1.0), rng.random()]
            })
            .collect();
        let b_rows: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let labels = ["fear", "disappointment", "joy"];
        let a = pearson_matrix(&set(&labels, &a_rows)).unwrap();
        let b = pearson_matrix(&set(&labels, &b_rows)).unwrap();
        let s = offdiagonal_comparison(&a, &b).unwrap();
        assert_eq!(s.more_distinctive, MoreDistinctive::B);
    }

    #[test]
    fn file_round_trip() {
        let s = set(&["a", "b"], &[vec![0.1, 0.9], vec![0.4, 0.6]]);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(PredictionSet::read(buf.as_slice()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn symmetric_unit_diagonal_and_scale_invariant(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 3..30),
            scale in 0.05f64..1.0,
            shift in 0.0f64..0.5,
        ) {
            let s = set(&["a", "b", "c", "d"], &rows);
            let m = pearson_matrix(&s).unwrap();
            for i in 0..4 {
                if let Some(d) = m.get(i, i) {
                    prop_assert!((d - 1.0).abs() <= 1e-12);
                }
                for j in 0..4 {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                    if let Some(v) = m.get(i, j) {
                        prop_assert!((-1.0..=1.0).contains(&v));
                    }
                }
            }
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| (v * scale + shift).min(1.0)).collect()).collect();
            // Only compare when the affine map stayed inside [0, 1] for every value.
            if rows.iter().flatten().all(|v| v * scale + shift <= 1.0) {
                let ms = pearson_matrix(&set(&["a", "b", "c", "d"], &scaled)).unwrap();
                for i in 0..4 {
                    for j in 0..4 {
                        match (m.get(i, j), ms.get(i, j)) {
                            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                            (x, y) => prop_assert_eq!(x.is_none(), y.is_none()),
                        }
                    }
                }
            }
        }
    }
}
