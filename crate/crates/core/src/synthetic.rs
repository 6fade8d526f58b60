//! Deterministic synthetic corpora with the kind of emotional bias found in crowd-sourced
//! art-emotion data: visually clustered paintings, clusters that lean toward one
//! sentiment, and near-duplicate generic captions inside each cluster.
//!
//! Also hosts [`ScriptedAnnotator`], a stand-in for a human worker that answers a
//! contrastive task with an opposite-sentiment emotion.

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, Corpus, EmotionLabel, FeatureSet, FeatureVector, Sentiment};

/// Words for the generic in-cluster captions.
const SCENE_WORDS: &[&str] = &[
    "the",
    "a",
    "painting",
    "colors",
    "light",
    "sky",
    "woman",
    "man",
    "trees",
    "river",
    "house",
    "field",
    "flowers",
    "water",
    "mountain",
    "boat",
    "figure",
    "face",
    "garden",
    "road",
    "sun",
    "clouds",
    "blue",
    "green",
    "red",
    "soft",
    "bright",
    "warm",
    "quiet",
    "nice",
    "pretty",
    "looks",
    "like",
    "makes",
    "me",
    "feel",
    "happy",
    "peaceful",
    "beautiful",
    "calm",
    "simple",
    "old",
    "village",
    "church",
    "city",
    "morning",
    "evening",
    "hills",
    "sea",
    "shore",
];

/// Words for detailed contrastive explanations; disjoint from [`SCENE_WORDS`].
const DETAIL_WORDS: &[&str] = &[
    "jagged",
    "crimson",
    "smear",
    "under",
    "brushstroke",
    "resembles",
    "mold",
    "rotting",
    "crooked",
    "silhouette",
    "lurking",
    "behind",
    "shutters",
    "volcano",
    "might",
    "erupt",
    "drowning",
    "sailor",
    "frantic",
    "gestures",
    "sickly",
    "yellowish",
    "bruised",
    "twisted",
    "branches",
    "claw",
    "at",
    "eerie",
    "stillness",
    "abandoned",
    "cradle",
    "playful",
    "puppy",
    "tumbling",
    "glittering",
    "sparkle",
    "festival",
    "lanterns",
    "laughing",
    "children",
    "chasing",
    "kites",
    "golden",
    "wheat",
    "swaying",
    "dancers",
    "twirling",
    "velvet",
    "ribbons",
    "grinning",
    "jester",
    "juggling",
    "oranges",
    "spilled",
    "wine",
    "stained",
    "tablecloth",
    "hollow",
    "eyes",
    "cracked",
    "porcelain",
    "doll",
    "broken",
    "window",
    "shattered",
    "mirror",
    "bleeding",
    "candle",
    "wax",
    "dripping",
    "rusted",
    "anchor",
    "chains",
    "tangled",
    "seaweed",
    "barnacles",
    "wrecked",
    "hull",
    "torn",
    "sail",
    "gull",
    "screaming",
    "scarecrow",
    "leaning",
    "fence",
    "splintered",
    "gate",
    "swinging",
    "lantern",
    "flickering",
    "moth",
    "wings",
    "dusty",
    "attic",
    "cobwebs",
    "spider",
    "creeping",
    "beetle",
    "crawling",
    "skull",
    "raven",
    "perched",
    "gallows",
    "rope",
    "fraying",
    "noose",
    "trembling",
    "hands",
    "clenched",
    "fists",
    "furrowed",
    "brow",
    "scowling",
    "soldier",
    "bayonet",
    "gleaming",
    "cannon",
    "smoke",
    "ash",
    "falling",
    "embers",
    "glowing",
    "forge",
    "blacksmith",
    "hammer",
    "anvil",
    "sparks",
    "flying",
    "parade",
    "confetti",
    "trumpets",
    "blaring",
    "balloons",
    "drifting",
    "carousel",
    "horses",
    "painted",
    "circus",
    "tent",
    "acrobat",
    "tightrope",
    "juggler",
    "clown",
    "nose",
    "feather",
    "hat",
    "peacock",
    "plume",
    "fountain",
    "splashing",
    "cherubs",
    "marble",
    "statue",
    "pillar",
    "ivy",
    "strangling",
    "ruins",
    "moss",
    "tombstone",
    "wreath",
    "wilted",
    "lilies",
    "funeral",
    "veil",
    "widow",
    "weeping",
    "mourners",
    "huddled",
    "coffin",
    "draped",
    "banquet",
    "roasted",
    "pheasant",
    "silver",
    "goblets",
    "grapes",
    "spilling",
    "lute",
    "strings",
    "harpsichord",
    "candelabra",
    "chandelier",
    "ballroom",
    "gown",
    "sequins",
    "masquerade",
    "mask",
    "kitten",
    "yarn",
    "kettle",
    "steaming",
    "teacup",
    "chipped",
    "biscuit",
    "crumbs",
    "picnic",
    "blanket",
    "checkered",
    "sunhat",
    "ribbon",
    "fluttering",
    "butterfly",
    "net",
    "meadow",
    "dandelion",
    "seeds",
    "floating",
];

/// Size of the detail vocabulary a scripted annotator uses for any one painting.
const DETAILS_PER_PAINTING: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub paintings: usize,
    pub paintings_per_cluster: usize,
    pub dim: usize,
    /// Fraction of clusters whose paintings lean positive.
    pub positive_cluster_share: f64,
    /// (positive, negative) annotation probabilities for positive-leaning paintings;
    /// the remainder is `something-else`.
    pub positive_lean: (f64, f64),
    pub negative_lean: (f64, f64),
    pub min_annotations: usize,
    pub max_annotations: usize,
    /// Standard deviation of per-coordinate noise around a cluster centre (centres have unit norm).
    pub spread: f64,
    pub caption_words: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            paintings: 1000,
            paintings_per_cluster: 25,
            dim: 64,
            positive_cluster_share: 0.67,
            positive_lean: (0.86, 0.02),
            negative_lean: (0.13, 0.75),
            min_annotations: 5,
            max_annotations: 7,
            spread: 0.04,
            caption_words: 9,
            seed: 2022,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// Paintings with features attached.
    pub corpus: Corpus,
    pub cluster_of: IndexMap<String, usize>,
    pub cluster_sentiment: Vec<Sentiment>,
}

fn draw_emotion(rng: &mut impl Rng, lean: (f64, f64)) -> EmotionLabel {
    let u: f64 = rng.random();
    let pool: &[EmotionLabel] = if u < lean.0 {
        &EmotionLabel::POSITIVE
    } else if u < lean.0 + lean.1 {
        &EmotionLabel::NEGATIVE
    } else {
        &[EmotionLabel::SomethingElse]
    };
    *pool.choose(rng).expect("non-empty pool")
}

impl SyntheticCorpus {
    pub fn generate(config: &SyntheticConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let clusters = config.paintings.div_ceil(config.paintings_per_cluster.max(1));

        let mut centers = Vec::with_capacity(clusters);
        let mut templates = Vec::with_capacity(clusters);
        let mut cluster_sentiment = Vec::with_capacity(clusters);
        let positive_clusters = (config.positive_cluster_share * clusters as f64).round() as usize;
        for c in 0..clusters {
            let mut v: Vec<f64> = (0..config.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            centers.push(v);
            templates
                .push((0..config.caption_words).map(|_| *SCENE_WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>());
            cluster_sentiment.push(if c < positive_clusters { Sentiment::Positive } else { Sentiment::Negative });
        }

        let mut corpus = Corpus::new("synthetic");
        let mut features = FeatureSet::with_dim(config.dim);
        let mut cluster_of = IndexMap::new();
        let styles = ["Impressionism", "Romanticism", "Baroque", "Realism", "Expressionism"];
        for i in 0..config.paintings {
            // Interleave clusters so cluster membership is not readable from id order.
            let c = i % clusters;
            let id = format!("painting_{i:05}");
            let lean = match cluster_sentiment[c] {
                Sentiment::Positive => config.positive_lean,
                _ => config.negative_lean,
            };
            let n = rng.random_range(config.min_annotations..=config.max_annotations);
            for _ in 0..n {
                let emotion = draw_emotion(&mut rng, lean);
                let mut words = templates[c].clone();
                let slot = rng.random_range(0..words.len());
                words[slot] = SCENE_WORDS.choose(&mut rng).unwrap();
                let mut a = Annotation::original(id.clone(), emotion, words.join(" "));
                a.worker_id = Some(format!("w{:03}", rng.random_range(0..200)));
                corpus.push_annotation(styles[c % styles.len()], &format!("{id}.jpg"), a);
            }
            let noise = StandardNormal;
            let values: Vec<f32> = centers[c]
                .iter()
                .map(|&x| (x + config.spread * Distribution::<f64>::sample(&noise, &mut rng)) as f32)
                .collect();
            features.insert(FeatureVector::new(id.clone(), values)).expect("uniform dimension");
            cluster_of.insert(id, c);
        }
        corpus.attach_features(features);
        SyntheticCorpus { corpus, cluster_of, cluster_sentiment }
    }
}

/// The fine details one sees in a given painting: a fixed subset of [`DETAIL_WORDS`] chosen
/// by the painting id, so explanations of different paintings rarely share words.
pub fn painting_details(painting_id: &str) -> Vec<&'static str> {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::stable_hash(painting_id.as_bytes()));
    DETAIL_WORDS.choose_multiple(&mut rng, DETAILS_PER_PAINTING).copied().collect()
}

/// What a scripted worker decides for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedAnswer {
    NoImage,
    Painting { painting_id: String, emotion: EmotionLabel, utterance: String },
}

/// A deterministic stand-in for a human annotator. It picks a random candidate, an emotion
/// of the sentiment opposite to the query, and explains it with details specific to the
/// chosen painting; with probability `no_image_rate` it declares that no candidate fits.
#[derive(Debug, Clone)]
pub struct ScriptedAnnotator {
    rng: ChaCha8Rng,
    pub no_image_rate: f64,
}

impl ScriptedAnnotator {
    pub fn new(seed: u64, no_image_rate: f64) -> Self {
        ScriptedAnnotator { rng: ChaCha8Rng::seed_from_u64(seed), no_image_rate }
    }

    pub fn answer(&mut self, candidates: &[String], query_sentiment: Sentiment) -> ScriptedAnswer {
        let opposite = match query_sentiment.opposite() {
            Some(s) if !candidates.is_empty() => s,
            _ => return ScriptedAnswer::NoImage,
        };
        if self.rng.random_bool(self.no_image_rate.clamp(0.0, 1.0)) {
            return ScriptedAnswer::NoImage;
        }
        let painting_id = candidates.choose(&mut self.rng).expect("non-empty").clone();
        let emotion = *opposite.emotions().choose(&mut self.rng).expect("four emotions");
        let details = painting_details(&painting_id);
        let len = self.rng.random_range(8..=12);
        let utterance = (0..len).map(|_| *details.choose(&mut self.rng).unwrap()).collect::<Vec<_>>().join(" ");
        ScriptedAnswer::Painting { painting_id, emotion, utterance }
    }
}
