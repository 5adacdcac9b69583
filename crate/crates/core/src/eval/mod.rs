//! Retrieval evaluation: P@K, mAP and the lexical-overlap breakdown.

mod metrics;
mod overlap;

pub use metrics::{
    evaluate, mean_average_precision, precision_at_k, EvalResult, Gold, QuestionOutcome, Rankings,
    DEFAULT_MAP_DEPTH,
};
pub use overlap::{lexical_overlap, overlap_bucket_eval, Bucket, OverlapBucketReport, MAX_BUCKET};

use crate::corpus::QaPair;

/// Each pair's own answer is its gold document.
pub fn gold_from_pairs(pairs: &[QaPair]) -> Gold {
    pairs.iter().map(|p| (p.id, p.id)).collect()
}

/// Fixed-width table: one row per result, one column per K, then mAP.
pub fn results_table(results: &[EvalResult]) -> String {
    let ks: Vec<usize> = results
        .first()
        .map(|r| r.p_at_k.keys().copied().collect())
        .unwrap_or_default();
    let mut out = format!("{:<12}", "method");
    for k in &ks {
        out.push_str(&format!(" {:>8}", format!("P@{k}")));
    }
    out.push_str(&format!(" {:>8}\n", "mAP"));
    for r in results {
        out.push_str(&format!("{:<12}", r.method));
        for k in &ks {
            match r.p_at_k.get(k) {
                Some(p) => out.push_str(&format!(" {p:>8.2}")),
                None => out.push_str(&format!(" {:>8}", "-")),
            }
        }
        out.push_str(&format!(" {:>8.2}\n", r.map_score));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::RankedList;
    use proptest::prelude::*;

    fn random_instance(ranks: &[Option<usize>]) -> (Rankings, Gold) {
        let mut rankings = Rankings::new();
        let mut gold = Gold::new();
        for (q, r) in ranks.iter().enumerate() {
            let q = q as u64;
            // distractors use ids >= 1_000_000; gold id is q
            let mut docs: Vec<u64> = (0..30).map(|d| 1_000_000 + d).collect();
            if let Some(r) = r {
                docs[r - 1] = q;
            }
            rankings.insert(
                q,
                RankedList::from_scores(
                    docs.iter().enumerate().map(|(i, &d)| (d, 100.0 - i as f64)),
                    30,
                ),
            );
            gold.insert(q, q);
        }
        (rankings, gold)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn p_at_k_monotone_and_map_is_mrr(ranks in proptest::collection::vec(proptest::option::of(1usize..=30), 1..25)) {
            let (r, g) = random_instance(&ranks);
            let mut prev = 0.0;
            for k in 1..=31 {
                let p = precision_at_k(&r, &g, k).unwrap();
                prop_assert!(p >= prev);
                prop_assert!((0.0..=100.0).contains(&p));
                prev = p;
            }
            let map = mean_average_precision(&r, &g).unwrap();
            let mrr = 100.0 * ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / ranks.len() as f64;
            prop_assert_eq!(map, mrr);
            prop_assert!(map <= precision_at_k(&r, &g, 30).unwrap());
        }

        #[test]
        fn overlap_symmetric_and_bounded(
            a in proptest::collection::vec("[a-h]", 0..12),
            b in proptest::collection::vec("[a-h]", 0..12),
        ) {
            let ta = crate::corpus::TokenizedText::new(0, a);
            let tb = crate::corpus::TokenizedText::new(1, b);
            let x = lexical_overlap(&ta, &tb);
            prop_assert_eq!(x, lexical_overlap(&tb, &ta));
            let distinct = |t: &crate::corpus::TokenizedText| t.tokens.iter().collect::<std::collections::HashSet<_>>().len();
            prop_assert!(x <= distinct(&ta).min(distinct(&tb)));
        }
    }

    #[test]
    fn table_layout() {
        let (r, g) = random_instance(&[Some(1), Some(3)]);
        let res = evaluate("bm25", &r, &g, &[1, 10], 100).unwrap();
        let table = results_table(&[res]);
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines[0], "method            P@1     P@10      mAP");
        assert_eq!(lines[1], "bm25            50.00   100.00    66.67");
    }
}
