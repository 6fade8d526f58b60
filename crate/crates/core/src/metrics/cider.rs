use std::collections::{BTreeMap, HashMap, HashSet};

use tracing::warn;

use super::bleu::ngram_counts;

pub const CIDER_MAX_N: usize = 4;
pub const CIDER_SIGMA: f64 = 6.0;

/// Ordered so that sums over a vector run in the same order on every run.
type Vector<'a> = BTreeMap<Vec<&'a str>, f64>;

struct Weighted<'a> {
    vecs: Vec<Vector<'a>>,
    norms: Vec<f64>,
    len: usize,
}

fn weigh<'a, S: AsRef<str>>(tokens: &'a [S], df: &[HashMap<Vec<&str>, usize>], log_n: f64) -> Weighted<'a> {
    let mut vecs = Vec::with_capacity(CIDER_MAX_N);
    let mut norms = Vec::with_capacity(CIDER_MAX_N);
    for (n, df_n) in df.iter().enumerate() {
        let v: Vector<'a> = ngram_counts(tokens, n + 1)
            .into_iter()
            .map(|(g, tf)| {
                let d = df_n.get(&g).copied().unwrap_or(0).max(1) as f64;
                (g, tf as f64 * (log_n - d.ln()))
            })
            .collect();
        norms.push(v.values().map(|w| w * w).sum::<f64>().sqrt());
        vecs.push(v);
    }
    Weighted { vecs, norms, len: tokens.len() }
}

/// CIDEr-D for every generated caption, with document frequencies taken over the
/// references of the whole evaluation set.
///
/// Per order n = 1..4 the candidate and each reference become TF-IDF vectors
/// (`tf × (ln N − ln max(1, df))`); similarity is the clipped dot product
/// `Σ min(c, r) · r / (|c| |r|)` times the length penalty `exp(−Δ² / 2σ²)` with σ = 6.
/// The orders are averaged, the references averaged, and the result scaled by 10.
pub fn cider_d<S, R>(items: &[(&[S], &[R])]) -> Vec<f64>
where
    S: AsRef<str>,
    R: AsRef<[S]>,
{
    if items.len() < 2 {
        warn!(instances = items.len(), "CIDEr-D document frequencies are degenerate for fewer than two instances");
    }
    let mut df: Vec<HashMap<Vec<&str>, usize>> = vec![HashMap::new(); CIDER_MAX_N];
    for (_, refs) in items {
        for (n, df_n) in df.iter_mut().enumerate() {
            let grams: HashSet<Vec<&str>> =
                refs.iter().flat_map(|r| ngram_counts(r.as_ref(), n + 1).into_keys()).collect();
            for g in grams {
                *df_n.entry(g).or_insert(0) += 1;
            }
        }
    }
    let log_n = (items.len() as f64).ln();

    let weigh = |tokens| weigh(tokens, &df, log_n);

    items
        .iter()
        .map(|(generated, refs)| {
            if refs.is_empty() {
                return 0.0;
            }
            let cand = weigh(generated);
            let mut total = 0.0;
            for r in refs.iter() {
                let reference = weigh(r.as_ref());
                let delta = cand.len as f64 - reference.len as f64;
                let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
                let mut per_n = 0.0;
                for n in 0..CIDER_MAX_N {
                    let (cv, rv) = (&cand.vecs[n], &reference.vecs[n]);
                    let dot: f64 = cv.iter().filter_map(|(g, &c)| rv.get(g).map(|&r| c.min(r) * r)).sum();
                    let denom = cand.norms[n] * reference.norms[n];
                    if denom != 0.0 {
                        per_n += dot / denom * penalty;
                    }
                }
                total += per_n / CIDER_MAX_N as f64;
            }
            total / refs.len() as f64 * 10.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn self_similar_is_maximal() {
        let gens = [
            toks("a quiet harbor at dawn"),
            toks("a stormy sea"),
            toks("people dancing in a hall"),
            toks("dark woods"),
        ];
        let refs = [
            vec![toks("a quiet harbor at dawn")],
            vec![toks("waves crash on rocks")],
            vec![toks("a crowded ballroom")],
            vec![toks("a bright meadow")],
        ];
        let items: Vec<_> = gens.iter().zip(refs.iter()).map(|(g, r)| (g.as_slice(), r.as_slice())).collect();
        let scores = cider_d(&items);
        assert!((scores[0] - 10.0).abs() < 1e-9);
        assert!(scores[1..].iter().all(|&s| s < scores[0]));
    }

    #[test]
    fn no_shared_ngram_is_zero() {
        let g = [toks("x y z"), toks("p q")];
        let r = [vec![toks("a b c")], vec![toks("p q")]];
        let items: Vec<_> = g.iter().zip(r.iter()).map(|(g, r)| (g.as_slice(), r.as_slice())).collect();
        assert_eq!(cider_d(&items)[0], 0.0);
    }

    #[test]
    fn single_instance_is_zero() {
        let g = toks("a b");
        let r = vec![toks("a b")];
        assert_eq!(cider_d(&[(g.as_slice(), r.as_slice())]), vec![0.0]);
    }
}
