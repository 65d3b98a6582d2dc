use coagent_edge::letor::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn records_with_labels(counts: &[(u8, usize)]) -> Vec<DocumentRecord> {
    let mut out = Vec::new();
    for &(label, n) in counts {
        for i in 0..n {
            out.push(DocumentRecord {
                relevance: label,
                query_id: "q".into(),
                features: vec![label as f64, i as f64],
            });
        }
    }
    out
}

/// Slot `k` of bucket at priority position `i` sorts by `(k, i)`; the slate is
/// the five smallest such pairs.
fn reference_slate(priority: &[u8], counts: &[usize]) -> Vec<u8> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &label) in priority.iter().enumerate() {
        for k in 0..counts[label as usize] {
            pairs.push((k, i));
        }
    }
    pairs.sort();
    pairs.iter().take(SLATE_SIZE).map(|&(_, i)| priority[i]).collect()
}

fn multiset_slates(dataset: Dataset) {
    let max = dataset.max_label() as usize;
    let mut patterns = vec![vec![]];
    for _ in 0..=max {
        patterns = patterns
            .into_iter()
            .flat_map(|p: Vec<usize>| (0..=6).map(move |c| [p.clone(), vec![c]].concat()))
            .collect();
    }
    let mut checked = 0;
    for counts in patterns {
        if counts.iter().sum::<usize>() < SLATE_SIZE {
            continue;
        }
        let labelled: Vec<(u8, usize)> = counts.iter().enumerate().map(|(l, &c)| (l as u8, c)).collect();
        let pool = QueryPool::build(&records_with_labels(&labelled), dataset, SLATE_SIZE).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(checked);
        let slate = pool.select_candidates("q", &mut rng).unwrap();
        assert_eq!(slate.relevances, reference_slate(dataset.priority(), &counts), "{counts:?}");
        let mut idx = slate.document_indices.clone();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), SLATE_SIZE);
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn slates_match_reference_for_every_bucket_pattern_mq2008() {
    multiset_slates(Dataset::Mq2008);
}

#[test]
fn slates_match_reference_for_every_bucket_pattern_mslr() {
    multiset_slates(Dataset::Mslr);
}

#[test]
fn feature_bounds_span_all_records() {
    let text = "0 qid:a 1:0 2:7\n1 qid:a 1:10 2:7\n2 qid:b 1:5 2:7\n";
    let recs = parse_letor(text.as_bytes()).unwrap();
    // Query b is dropped, but its record still shaped the bounds.
    let pool = QueryPool::build(&recs, Dataset::Mq2008, 2).unwrap();
    assert_eq!(pool.query_ids(), ["a"]);
    assert_eq!(pool.feature_bounds(), [(0.0, 10.0), (7.0, 7.0)]);
    let docs = pool.documents("a").unwrap();
    assert_eq!(&*docs[0].features, &[-1.0, 0.0]);
    assert_eq!(&*docs[1].features, &[1.0, 0.0]);
}

#[test]
fn label_domain_checked() {
    let recs = parse_letor("3 qid:a 1:0\n".as_bytes()).unwrap();
    assert!(QueryPool::build(&recs, Dataset::Mq2008, 1).is_err());
    assert!(QueryPool::build(&recs, Dataset::Mslr, 1).is_ok());
}

fn arb_records() -> impl Strategy<Value = Vec<DocumentRecord>> {
    (1usize..5).prop_flat_map(|dim| {
        prop::collection::vec(
            (0u8..=2, 0u8..4, prop::collection::vec(-1e3f64..1e3, dim)),
            1..40,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(relevance, q, features)| DocumentRecord {
                    relevance,
                    query_id: format!("q{q}"),
                    features,
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn normalized_features_in_range(recs in arb_records()) {
        let pool = QueryPool::build(&recs, Dataset::Mq2008, 1).unwrap();
        for (_, docs) in pool.queries() {
            for d in docs {
                prop_assert!(d.features.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(recs in arb_records()) {
        let pool = QueryPool::build(&recs, Dataset::Mq2008, 1).unwrap();
        let again = QueryPool::build(&pool.records(), Dataset::Mq2008, 1).unwrap();
        for ((qa, da), (qb, db)) in pool.queries().zip(again.queries()) {
            prop_assert_eq!(qa, qb);
            for (a, b) in da.iter().zip(db) {
                for (x, y) in a.features.iter().zip(b.features.iter()) {
                    prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
                }
            }
        }
    }

    #[test]
    fn letor_lines_round_trip(recs in arb_records()) {
        for r in &recs {
            let back = parse_letor_line(&r.to_letor_line()).unwrap();
            prop_assert_eq!(&back, r);
        }
    }

    #[test]
    fn cache_round_trip_is_bit_exact(recs in arb_records(), mslr: bool) {
        let ds = if mslr { Dataset::Mslr } else { Dataset::Mq2008 };
        let pool = QueryPool::build(&recs, ds, 1).unwrap();
        let mut bytes = Vec::new();
        write_pool_cache(&pool, &mut bytes).unwrap();
        let back = read_pool_cache(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.dataset(), pool.dataset());
        prop_assert_eq!(back.query_ids(), pool.query_ids());
        let bits = |p: &QueryPool| -> Vec<u64> {
            p.queries().flat_map(|(_, d)| d.iter().flat_map(|d| d.features.iter().map(|v| v.to_bits()).collect::<Vec<_>>())).collect()
        };
        prop_assert_eq!(bits(&back), bits(&pool));
        let bb: Vec<(u64, u64)> = back.feature_bounds().iter().map(|(a, b)| (a.to_bits(), b.to_bits())).collect();
        let pb: Vec<(u64, u64)> = pool.feature_bounds().iter().map(|(a, b)| (a.to_bits(), b.to_bits())).collect();
        prop_assert_eq!(bb, pb);
        let mut again = Vec::new();
        write_pool_cache(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }
}

#[test]
fn cache_rejects_bad_header() {
    let recs = parse_letor("0 qid:a 1:1\n".as_bytes()).unwrap();
    let pool = QueryPool::build(&recs, Dataset::Mq2008, 1).unwrap();
    let mut bytes = Vec::new();
    write_pool_cache(&pool, &mut bytes).unwrap();
    let mut wrong_version = bytes.clone();
    wrong_version[8] = 99;
    assert!(read_pool_cache(wrong_version.as_slice()).is_err());
    bytes[0] = b'X';
    assert!(read_pool_cache(bytes.as_slice()).is_err());
}
