//! Brute-force cosine kNN oracle and its tie-heavy fixture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 200 vectors in 64 dimensions; every tenth vector is a scaled copy of its predecessor so
/// exact distance ties occur.
pub fn fixture() -> Vec<(String, Vec<f32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    for i in 0..200 {
        let v = if i % 10 == 9 {
            rows[i - 1].1.iter().map(|x| x * 2.0).collect()
        } else {
            (0..64).map(|_| rng.random_range(-1.0f32..1.0)).collect()
        };
        rows.push((format!("v{i:03}"), v));
    }
    rows
}

pub fn brute_force(rows: &[(String, Vec<f32>)], q: usize, k: usize) -> Vec<(String, f64)> {
    let unit = |v: &[f32]| {
        let n = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        v.iter().map(|&x| x as f64 / n).collect::<Vec<_>>()
    };
    let qv = unit(&rows[q].1);
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != q)
        .map(|(_, (id, v))| {
            let dot: f64 = unit(v).iter().zip(&qv).map(|(a, b)| a * b).sum();
            (id.clone(), (1.0 - dot).max(0.0))
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}
