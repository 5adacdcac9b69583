use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use qaret::condenser::{condense_corpus, load_condensed, save_condensed};
use qaret::corpus::{
    extract_stopwords, load_jsonl, normalize, split_sentences, Preprocessor, QaPair, StopwordSet,
    TokenizedText, Vocabulary,
};
use qaret::encoder::EncoderModel;
use qaret::eval::{
    evaluate, gold_from_pairs, overlap_bucket_eval, results_table, OverlapBucketReport, Rankings,
};
use qaret::pipeline::{
    import_external_embeddings, rank_external, train_encoder_with_vocab, EmbeddingStore, Method,
    Pipeline,
};
use qaret::sparse::InvertedIndex;
use qaret::RankedList;

use crate::config::{AppConfig, Layout, Split};
use crate::error::{CliError, CliResult};

pub struct Context {
    pub config: AppConfig,
    pub layout: Layout,
}

/// Every configured split, train first.
struct Corpus {
    splits: Vec<(Split, Vec<QaPair>)>,
}

impl Corpus {
    fn load(layout: &Layout) -> CliResult<Self> {
        let mut splits = Vec::new();
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        for split in [Split::Train, Split::Dev, Split::Test] {
            let Some(path) = layout.split(split) else {
                continue;
            };
            let pairs = load_jsonl(path)?;
            if pairs.is_empty() {
                return Err(CliError::Data(format!(
                    "{} split {} is empty",
                    split.as_str(),
                    path.display()
                )));
            }
            for p in &pairs {
                if !seen.insert(p.id) {
                    return Err(CliError::Data(format!(
                        "pair id {} in {} appears in more than one split",
                        p.id,
                        path.display()
                    )));
                }
            }
            splits.push((split, pairs));
        }
        Ok(Self { splits })
    }

    fn get(&self, split: Split) -> Option<&[QaPair]> {
        self.splits
            .iter()
            .find(|(s, _)| *s == split)
            .map(|(_, p)| p.as_slice())
    }

    fn require(&self, split: Split) -> CliResult<&[QaPair]> {
        self.get(split).ok_or_else(|| {
            CliError::Usage(format!(
                "no {} split configured under [paths]",
                split.as_str()
            ))
        })
    }

    fn train(&self) -> &[QaPair] {
        &self.splits[0].1
    }

    /// Retrieval collection: the answer passages of every split.
    fn all(&self) -> Vec<QaPair> {
        self.splits
            .iter()
            .flat_map(|(_, p)| p.iter().cloned())
            .collect()
    }
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn load_preprocessor(ctx: &Context) -> CliResult<Preprocessor> {
    let mut pre = Preprocessor::new(StopwordSet::load(&ctx.layout.stopwords)?);
    pre.set_dense_stopwords(ctx.config.preprocessing.dense_stopwords);
    Ok(pre)
}

struct LengthStats {
    mean: f64,
    min: usize,
    max: usize,
}

fn length_stats(lengths: impl Iterator<Item = usize>) -> LengthStats {
    let v: Vec<usize> = lengths.collect();
    LengthStats {
        mean: v.iter().sum::<usize>() as f64 / v.len().max(1) as f64,
        min: v.iter().copied().min().unwrap_or(0),
        max: v.iter().copied().max().unwrap_or(0),
    }
}

fn corpus_stats(corpus: &Corpus) -> String {
    let raw = Preprocessor::default();
    let mut out = String::from("corpus statistics (tokens before stop-word removal)\n");
    out.push_str(&format!(
        "{:<6} {:>7} {:>8} {:>6} {:>6} {:>8} {:>6} {:>6} {:>9}\n",
        "split", "pairs", "q.mean", "q.min", "q.max", "a.mean", "a.min", "a.max", "sentences"
    ));
    for (split, pairs) in &corpus.splits {
        let q = length_stats(pairs.iter().map(|p| raw.process(&p.question, p.id).len()));
        let a = length_stats(pairs.iter().map(|p| raw.process(&p.answer, p.id).len()));
        let sentences = length_stats(
            pairs
                .iter()
                .map(|p| split_sentences(&normalize(&p.answer)).len()),
        );
        out.push_str(&format!(
            "{:<6} {:>7} {:>8.2} {:>6} {:>6} {:>8.2} {:>6} {:>6} {:>9.2}\n",
            split.as_str(),
            pairs.len(),
            q.mean,
            q.min,
            q.max,
            a.mean,
            a.min,
            a.max,
            sentences.mean
        ));
    }
    out
}

pub fn index(ctx: &Context) -> CliResult<()> {
    let (config, layout) = (&ctx.config, &ctx.layout);
    let corpus = Corpus::load(layout)?;
    let raw = Preprocessor::default();
    let train_docs: Vec<TokenizedText> = corpus
        .train()
        .iter()
        .map(|p| raw.process(&p.answer, p.id))
        .collect();
    let stopwords = extract_stopwords(&train_docs, config.preprocessing.stopwords);
    ensure_parent(&layout.stopwords)?;
    stopwords.save(&layout.stopwords)?;
    let mut pre = Preprocessor::new(stopwords);
    pre.set_dense_stopwords(config.preprocessing.dense_stopwords);

    let all = corpus.all();
    let pipeline = config.pipeline_config();
    let condensed = condense_corpus(&pre, pipeline.bm25, &all, pipeline.condenser_k)?;
    save_condensed(&layout.condensed, &condensed)?;

    let passages: Vec<TokenizedText> = all.iter().map(|p| pre.process(&p.answer, p.id)).collect();
    let index = InvertedIndex::build(&passages)?;
    ensure_parent(&layout.index)?;
    index.save(&layout.index)?;

    let limit = pipeline.max_tokens;
    let before = all
        .iter()
        .filter(|p| pre.process_dense(&p.answer, p.id).len() > limit)
        .count();
    let condensed_lens: Vec<usize> = condensed
        .iter()
        .map(|c| pre.process_dense(&c.text(), c.doc_id).len())
        .collect();
    let after = condensed_lens.iter().filter(|&&n| n > limit).count();

    print!("{}", corpus_stats(&corpus));
    println!(
        "stop-words: {} (lowest IDF over {} training passages)",
        pre.stopwords().len(),
        train_docs.len()
    );
    println!(
        "index: {} passages, {} terms, mean length {:.2} tokens",
        index.doc_count(),
        index.term_count(),
        index.avg_len()
    );
    println!(
        "condensed (K={}): mean length {:.2} tokens; passages over {limit} tokens: {before} before, {after} after",
        pipeline.condenser_k,
        length_stats(condensed_lens.into_iter()).mean
    );
    for path in [&layout.stopwords, &layout.condensed, &layout.index] {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn train(ctx: &Context) -> CliResult<()> {
    let (config, layout) = (&ctx.config, &ctx.layout);
    let corpus = Corpus::load(layout)?;
    let pre = load_preprocessor(ctx)?;
    let condensed = load_condensed(&layout.condensed)?;
    let all = corpus.all();
    let stale =
        condensed.len() != all.len() || condensed.iter().zip(&all).any(|(c, p)| c.doc_id != p.id);
    if stale {
        return Err(CliError::Data(format!(
            "{} does not match the configured splits; rerun `qaret index`",
            layout.condensed.display()
        )));
    }

    let train_pairs = corpus.train();
    let texts: Vec<TokenizedText> = train_pairs
        .iter()
        .map(|p| pre.process_dense(&p.question, p.id))
        .chain(all.iter().map(|p| pre.process_dense(&p.answer, p.id)))
        .collect();
    let vocab = Vocabulary::from_texts(&texts);
    let train_config = config.train_config();
    let outcome = train_encoder_with_vocab(
        &pre,
        vocab,
        train_pairs,
        &condensed[..train_pairs.len()],
        &train_config,
    )?;

    ensure_parent(&layout.model)?;
    outcome.model.save(&layout.model)?;
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in outcome.loss_history.iter().enumerate() {
        csv.push_str(&format!("{},{loss}\n", epoch + 1));
    }
    write_file(&layout.loss, &csv)?;

    let model = outcome.model;
    let (vocab_size, dim) = (model.vocab_size(), model.dim());
    let (pipeline, _) = Pipeline::build(&all, Some(model), pre, config.pipeline_config())?;
    fs::create_dir_all(&layout.stores)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", layout.stores.display())))?;
    for method in [Method::Dense, Method::TwoStage] {
        let store = pipeline
            .store(method)
            .ok_or_else(|| CliError::Internal(format!("no {method} store after build")))?;
        store.save(&layout.store(method))?;
    }

    println!(
        "trained on {} pairs: vocabulary {vocab_size}, dim {dim}, {} epochs, seed {}",
        train_pairs.len(),
        train_config.epochs,
        config.seed
    );
    if let (Some(first), Some(last)) = (outcome.loss_history.first(), outcome.loss_history.last()) {
        println!(
            "loss: epoch 1 {first:.6}, epoch {} {last:.6}",
            outcome.loss_history.len()
        );
    }
    println!("wrote {}", layout.model.display());
    println!("wrote {}", layout.loss.display());
    for method in [Method::Dense, Method::TwoStage] {
        println!("wrote {}", layout.store(method).display());
    }
    Ok(())
}

fn load_pipeline(ctx: &Context, method: Method) -> CliResult<Pipeline> {
    let layout = &ctx.layout;
    let pre = load_preprocessor(ctx)?;
    let index = InvertedIndex::load(&layout.index)?;
    let config = ctx.config.pipeline_config();
    let pipeline = if method.is_sparse() {
        Pipeline::from_parts(pre, config, index, None, None, None)?
    } else {
        let model = EncoderModel::load(&layout.model)?;
        let store = EmbeddingStore::load(&layout.store(method))?;
        let (dense, two_stage) = match method {
            Method::Dense => (Some(store), None),
            _ => (None, Some(store)),
        };
        Pipeline::from_parts(pre, config, index, Some(model), dense, two_stage)?
    };
    if method.is_sparse() {
        return Ok(pipeline);
    }
    let pipeline = if method == Method::TwoStage && ctx.config.condenser.per_query {
        pipeline.with_passages(&Corpus::load(layout)?.all())
    } else {
        pipeline
    };
    let passages = pipeline.store(method).map_or(0, |s| s.len());
    if passages != pipeline.doc_count() {
        return Err(CliError::Data(format!(
            "store holds {passages} passages but the index holds {}; rerun `qaret train`",
            pipeline.doc_count()
        )));
    }
    Ok(pipeline)
}

pub fn query(ctx: &Context, question: &str, top_k: usize) -> CliResult<()> {
    let method = ctx.config.retrieval.method;
    let pipeline = load_pipeline(ctx, method)?;
    let ranked = pipeline.retrieve(question, method, top_k)?;
    print!("{}", ranked.to_jsonl());
    Ok(())
}

/// External embeddings produced by another encoder, keyed like the dataset.
pub struct External {
    pub passages: PathBuf,
    pub queries: PathBuf,
}

struct Run {
    label: String,
    pairs: Vec<QaPair>,
    pre: Preprocessor,
    rankings: Rankings,
    /// Questions that became empty after preprocessing, scored as misses.
    empty: usize,
}

fn run(ctx: &Context, split: Split, external: Option<&External>) -> CliResult<Run> {
    let corpus = Corpus::load(&ctx.layout)?;
    let pairs = corpus.require(split)?.to_vec();
    let eval = &ctx.config.eval;
    let depth = eval
        .map_depth
        .max(eval.ks.iter().copied().max().unwrap_or(1));
    if let Some(ext) = external {
        let passages = import_external_embeddings(&ext.passages)?;
        let queries = import_external_embeddings(&ext.queries)?;
        for p in &pairs {
            if queries.get(p.id).is_none() {
                return Err(CliError::Data(format!(
                    "{} has no vector for question {}",
                    ext.queries.display(),
                    p.id
                )));
            }
        }
        let rankings = rank_external(&passages, &queries, depth)?
            .into_iter()
            .filter(|(id, _)| pairs.iter().any(|p| p.id == *id))
            .collect();
        return Ok(Run {
            label: "external".into(),
            pairs,
            pre: load_preprocessor(ctx)?,
            rankings,
            empty: 0,
        });
    }

    let method = ctx.config.retrieval.method;
    let pipeline = load_pipeline(ctx, method)?;
    let mut rankings = Rankings::new();
    let mut empty = 0;
    for p in &pairs {
        let query = pipeline.query_tokens(&p.question, p.id, method);
        let ranked = match pipeline.retrieve_tokens(&query, method, depth) {
            Ok(r) => r,
            Err(qaret::Error::Empty(_)) => {
                empty += 1;
                RankedList::from_scores(std::iter::empty(), depth)
            }
            Err(e) => {
                return Err(qaret::Error::Pair {
                    id: p.id,
                    source: Box::new(e),
                }
                .into())
            }
        };
        rankings.insert(p.id, ranked);
    }
    Ok(Run {
        label: method.to_string(),
        pairs,
        pre: load_preprocessor(ctx)?,
        rankings,
        empty,
    })
}

fn report_stem(ctx: &Context, split: Split, label: &str) -> PathBuf {
    ctx.layout
        .reports
        .join(format!("{}-{label}", split.as_str()))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn overlap_report(run: &Run) -> OverlapBucketReport {
    overlap_bucket_eval(&run.label, &run.pairs, &run.pre, &run.rankings)
}

pub fn eval(ctx: &Context, split: Split, external: Option<&External>) -> CliResult<()> {
    let run = run(ctx, split, external)?;
    let eval = &ctx.config.eval;
    let result = evaluate(
        &run.label,
        &run.rankings,
        &gold_from_pairs(&run.pairs),
        &eval.ks,
        eval.map_depth,
    )?;
    let overlap = overlap_report(&run);
    let table = results_table(std::slice::from_ref(&result));

    let stem = report_stem(ctx, split, &run.label);
    let json =
        serde_json::to_string_pretty(&result).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&with_suffix(&stem, ".json"), &(json + "\n"))?;
    write_file(
        &with_suffix(&stem, ".txt"),
        &format!("{table}\n{}", overlap.to_text()),
    )?;
    write_file(&with_suffix(&stem, "-overlap.csv"), &overlap.to_csv())?;

    println!("{} split, {} questions", split.as_str(), run.pairs.len());
    if run.empty > 0 {
        println!(
            "{} questions empty after preprocessing, scored as misses",
            run.empty
        );
    }
    print!("{table}");
    println!(
        "wrote {}.{{json,txt}} and {}-overlap.csv",
        stem.display(),
        stem.display()
    );
    Ok(())
}

pub fn analyze_overlap(ctx: &Context, split: Split) -> CliResult<()> {
    let run = run(ctx, split, None)?;
    let overlap = overlap_report(&run);
    let path = with_suffix(&report_stem(ctx, split, &run.label), "-overlap.csv");
    write_file(&path, &overlap.to_csv())?;
    print!("{}", overlap.to_text());
    println!("wrote {}", path.display());
    Ok(())
}
