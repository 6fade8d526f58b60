use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    /// Universal part-of-speech tag, e.g. `NOUN`, `VERB`, `PUNCT`.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedCaption {
    pub painting_id: String,
    pub tokens: Vec<TaggedToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagClass {
    Noun,
    Pronoun,
    Adjective,
    Adposition,
    Verb,
    Punctuation,
    /// Any other universal tag, and unrecognised tag strings.
    Other,
}

fn classify(tag: &str) -> TagClass {
    match tag.trim().to_ascii_uppercase().as_str() {
        "NOUN" => TagClass::Noun,
        "PRON" => TagClass::Pronoun,
        "ADJ" => TagClass::Adjective,
        "ADP" => TagClass::Adposition,
        "VERB" => TagClass::Verb,
        "PUNCT" | "." => TagClass::Punctuation,
        _ => TagClass::Other,
    }
}

/// Mean linguistic units per caption. Punctuation tokens are not words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosStats {
    pub captions: usize,
    pub words: f64,
    pub nouns: f64,
    pub pronouns: f64,
    pub adjectives: f64,
    pub adpositions: f64,
    pub verbs: f64,
    /// Tokens whose tag was neither tracked nor punctuation (includes unknown tags).
    pub other: f64,
}

pub fn pos_statistics(captions: &[TaggedCaption]) -> Result<PosStats> {
    if captions.is_empty() {
        return Err(Error::Empty("caption list"));
    }
    let mut sums = [0usize; 7];
    for caption in captions {
        for token in &caption.tokens {
            let class = classify(&token.tag);
            if class == TagClass::Punctuation {
                continue;
            }
            sums[0] += 1;
            let slot = match class {
                TagClass::Noun => 1,
                TagClass::Pronoun => 2,
                TagClass::Adjective => 3,
                TagClass::Adposition => 4,
                TagClass::Verb => 5,
                _ => 6,
            };
            sums[slot] += 1;
        }
    }
    let n = captions.len() as f64;
    let mean = |i: usize| sums[i] as f64 / n;
    Ok(PosStats {
        captions: captions.len(),
        words: mean(0),
        nouns: mean(1),
        pronouns: mean(2),
        adjectives: mean(3),
        adpositions: mean(4),
        verbs: mean(5),
        other: mean(6),
    })
}

/// Reads the tagged-token JSONL file, one caption per line.
pub fn read_tagged_captions(path: impl AsRef<Path>) -> Result<Vec<TaggedCaption>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?);
    }
    Ok(out)
}
