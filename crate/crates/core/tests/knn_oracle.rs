//! Exact cosine kNN against a brute-force f64 scan.

use emobalance_core::corpus::{FeatureSet, FeatureVector};
use emobalance_core::index::SimilarityIndex;
#[path = "support/knn.rs"]
mod oracle;

use oracle::{brute_force, fixture};

#[test]
fn matches_brute_force_for_every_query() {
    let rows = fixture();
    let set = FeatureSet::from_vectors(rows.iter().map(|(id, v)| FeatureVector::new(id.clone(), v.clone()))).unwrap();
    let index = SimilarityIndex::build(&set).unwrap();
    for k in [1, 10, 100] {
        for q in 0..rows.len() {
            let got = index.query(&rows[q].0, k).unwrap().neighbors;
            let want = brute_force(&rows, q, k);
            assert_eq!(got.len(), k);
            for (i, (g, (wid, wd))) in got.iter().zip(&want).enumerate() {
                assert!((g.distance - wd).abs() < 1e-6, "q={q} k={k} rank {i}");
                if &g.painting_id != wid {
                    // Only f32 rounding may reorder, and only between near-equal distances.
                    let other = want.iter().find(|(id, _)| id == &g.painting_id).map(|(_, d)| *d).unwrap_or(f64::NAN);
                    assert!((other - wd).abs() < 1e-6, "q={q} k={k} rank {i}: {} vs {wid}", g.painting_id);
                }
            }
        }
    }
}

#[test]
fn exact_duplicates_break_ties_by_id() {
    let rows = fixture();
    let set = FeatureSet::from_vectors(rows.iter().map(|(id, v)| FeatureVector::new(id.clone(), v.clone()))).unwrap();
    let index = SimilarityIndex::build(&set).unwrap();
    // v008 and v009 point the same way; from any third vector they are equidistant.
    let list = index.query("v000", 199).unwrap().neighbors;
    let p8 = list.iter().position(|n| n.painting_id == "v008").unwrap();
    let p9 = list.iter().position(|n| n.painting_id == "v009").unwrap();
    assert_eq!(list[p8].distance, list[p9].distance);
    assert_eq!(p9, p8 + 1);
    // The twin itself sits at distance zero.
    let nn = index.query("v008", 1).unwrap().neighbors;
    assert_eq!(nn[0].painting_id, "v009");
    assert!(nn[0].distance < 1e-6);
}
