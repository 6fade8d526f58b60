//! Caption metrics (BLEU-1..4, ROUGE-L, CIDEr-D), per-caption and per-emotion
//! aggregation, and the nearest-neighbour baseline speaker.

mod aggregate;
mod bleu;
mod cider;
mod rouge;
mod speaker;
mod tokenize;

pub use aggregate::{
    aggregate, evaluate, read_eval_instances, score_instances, EmotionGroup, EvalInstance, EvalRecord, InstanceScores,
    MetricReport, MetricScores, PerEmotion,
};
pub use bleu::bleu;
pub use cider::{cider_d, CIDER_MAX_N, CIDER_SIGMA};
pub use rouge::{rouge_l, ROUGE_BETA};
pub use speaker::{nn_speaker, SpeakerOutput, NN_SPEAKER_NEIGHBORS};
pub use tokenize::tokenize;
