use qaret::condenser::{condense, condense_corpus};
use qaret::corpus::{Preprocessor, QaPair};
use qaret::encoder::{cosine, TrainConfig};
use qaret::pipeline::{dense_rank, train_encoder, Method, Pipeline, PipelineConfig};
use qaret::sparse::InvertedIndex;
use qaret::synthetic::{generate, SyntheticConfig};

fn trained() -> (Vec<QaPair>, Pipeline) {
    let pairs = generate(&SyntheticConfig {
        pairs: 25,
        seed: 12,
        ..SyntheticConfig::default()
    });
    let pre = Preprocessor::default();
    let config = PipelineConfig::default();
    let condensed = condense_corpus(&pre, config.bm25, &pairs, config.condenser_k).unwrap();
    let train = TrainConfig {
        epochs: 4,
        dim: 8,
        ..TrainConfig::default()
    };
    let model = train_encoder(&pre, &pairs, &condensed, &train)
        .unwrap()
        .model;
    let (pipeline, _) = Pipeline::build(&pairs, Some(model), pre, config).unwrap();
    (pairs, pipeline)
}

// Recomputes two-stage scores from scratch: condense, encode, cosine.
#[test]
fn two_stage_scores_match_recomputation() {
    let (pairs, pipeline) = trained();
    let pre = pipeline.preprocessor();
    let model = pipeline.model().unwrap();
    let condensed = condense_corpus(
        pre,
        pipeline.config().bm25,
        &pairs,
        pipeline.config().condenser_k,
    )
    .unwrap();
    for p in pairs.iter().take(5) {
        let q = model
            .encode_tokens(&pre.process(&p.question, 0).tokens, 256)
            .unwrap();
        let ranked = pipeline
            .retrieve(&p.question, Method::TwoStage, pairs.len())
            .unwrap();
        assert_eq!(ranked.len(), pairs.len());
        for hit in ranked.hits() {
            let c = condensed.iter().find(|c| c.doc_id == hit.doc_id).unwrap();
            let doc: Vec<f64> = model
                .encode_tokens(&pre.process(&c.text(), c.doc_id).tokens, 256)
                .unwrap()
                .into_iter()
                .map(|x| x as f32 as f64)
                .collect();
            let want = cosine(&q, &doc);
            assert!(
                (hit.score - want).abs() < 1e-12,
                "doc {}: {} vs {want}",
                hit.doc_id,
                hit.score
            );
        }
    }
}

#[test]
fn positive_store_scaling_keeps_order() {
    let (pairs, pipeline) = trained();
    let model = pipeline.model().unwrap();
    let store = pipeline.store(Method::Dense).unwrap();
    let mut scaled = store.clone();
    scaled.scale_all(4.0);
    for p in pairs.iter().take(10) {
        let q = model
            .encode_tokens(&pipeline.preprocessor().process(&p.question, 0).tokens, 256)
            .unwrap();
        let a = dense_rank(store, &q, pairs.len())
            .doc_ids()
            .collect::<Vec<_>>();
        let b = dense_rank(&scaled, &q, pairs.len())
            .doc_ids()
            .collect::<Vec<_>>();
        assert_eq!(a, b);
    }
}

#[test]
fn every_method_returns_full_depth() {
    let (pairs, pipeline) = trained();
    for method in Method::ALL {
        let all = pipeline.retrieve_all(&pairs, method, 7).unwrap();
        assert_eq!(all.len(), pairs.len());
        assert!(all.values().all(|r| r.len() == 7));
    }
}

#[test]
fn dense_without_model_is_an_error() {
    let pairs = generate(&SyntheticConfig::default());
    let (pipeline, _) = Pipeline::build(
        &pairs,
        None,
        Preprocessor::default(),
        PipelineConfig::default(),
    )
    .unwrap();
    assert!(pipeline
        .retrieve(&pairs[0].question, Method::Bm25, 3)
        .is_ok());
    assert!(pipeline
        .retrieve(&pairs[0].question, Method::Dense, 3)
        .is_err());
}

fn per_query(pairs: &[QaPair], pipeline: &Pipeline) -> Pipeline {
    let config = PipelineConfig {
        condense_per_query: true,
        ..pipeline.config().clone()
    };
    let index = InvertedIndex::from_bytes(&pipeline.index().to_bytes()).unwrap();
    Pipeline::from_parts(
        Preprocessor::default(),
        config,
        index,
        pipeline.model().cloned(),
        pipeline.store(Method::Dense).cloned(),
        pipeline.store(Method::TwoStage).cloned(),
    )
    .unwrap()
    .with_passages(pairs)
}

#[test]
fn per_query_condensing_recondenses_against_the_question() {
    let (pairs, pipeline) = trained();
    let live = per_query(&pairs, &pipeline);
    let pre = pipeline.preprocessor();
    let model = pipeline.model().unwrap();
    let k = pipeline.config().condenser_k;
    for p in pairs.iter().take(5) {
        let q = model
            .encode_tokens(&pre.process(&p.question, 0).tokens, 256)
            .unwrap();
        let guide = pre.process(&p.question, 0);
        let ranked = live
            .retrieve(&p.question, Method::TwoStage, pairs.len())
            .unwrap();
        assert_eq!(ranked.len(), pairs.len());
        for hit in ranked.hits() {
            let pair = pairs.iter().find(|x| x.id == hit.doc_id).unwrap();
            let c = condense(
                pre,
                pipeline.config().bm25,
                pair.id,
                &pair.answer,
                Some(&guide),
                k,
            )
            .unwrap();
            let doc: Vec<f64> = model
                .encode_tokens(&pre.process(&c.text(), c.doc_id).tokens, 256)
                .map(|v| v.into_iter().map(|x| x as f32 as f64).collect())
                .unwrap_or_else(|| vec![0.0; model.dim()]);
            let want = cosine(&q, &doc);
            assert!((hit.score - want).abs() < 1e-12, "doc {}", hit.doc_id);
        }
        // the gold passage was condensed with this same question at index time
        let stored = pipeline
            .retrieve(&p.question, Method::TwoStage, pairs.len())
            .unwrap();
        let score = |r: &qaret::ranking::RankedList| {
            r.hits().iter().find(|h| h.doc_id == p.id).unwrap().score
        };
        assert!((score(&ranked) - score(&stored)).abs() < 1e-12);
    }
}

#[test]
fn per_query_condensing_needs_passages() {
    let (pairs, pipeline) = trained();
    let live = per_query(&pairs, &pipeline);
    let bare = Pipeline::from_parts(
        Preprocessor::default(),
        live.config().clone(),
        InvertedIndex::from_bytes(&pipeline.index().to_bytes()).unwrap(),
        pipeline.model().cloned(),
        None,
        pipeline.store(Method::TwoStage).cloned(),
    )
    .unwrap();
    assert!(bare
        .retrieve(&pairs[0].question, Method::TwoStage, 3)
        .is_err());
    assert!(bare.retrieve(&pairs[0].question, Method::Bm25, 3).is_ok());
}
