use crate::{Error, Result};

pub const ROUGE_BETA: f64 = 1.2;

pub(crate) fn lcs_len<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure (β = 1.2), maximised over references.
pub fn rouge_l<S: AsRef<str>, R: AsRef<[S]>>(generated: &[S], references: &[R]) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::Empty("reference list"));
    }
    if generated.is_empty() {
        return Ok(0.0);
    }
    let beta2 = ROUGE_BETA * ROUGE_BETA;
    let best = references
        .iter()
        .map(|r| {
            let r = r.as_ref();
            let lcs = lcs_len(generated, r);
            if lcs == 0 || r.is_empty() {
                return 0.0;
            }
            let p = lcs as f64 / generated.len() as f64;
            let rec = lcs as f64 / r.len() as f64;
            (1.0 + beta2) * p * rec / (rec + beta2 * p)
        })
        .fold(0.0, f64::max);
    Ok(best)
}
