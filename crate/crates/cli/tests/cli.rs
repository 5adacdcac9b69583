use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qaret::corpus::{save_jsonl, QaPair};
use qaret::encoder::EncoderModel;
use qaret::pipeline::EmbeddingStore;
use qaret::synthetic::{generate, SyntheticConfig};
use tempfile::TempDir;

fn qaret(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaret"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(&o),
        stderr(&o)
    );
    o
}

const CONFIG: &str = r#"
seed = 5

[paths]
train = "train.jsonl"
test = "test.jsonl"
work_dir = "work"

[preprocessing]
stopwords = 0

[train]
epochs = 12
dim = 12
batch_size = 8

[eval]
ks = [1, 3, 10]
"#;

/// Writes a config and a synthetic train/test split into a fresh directory.
fn fixture(config: &str, train: &[QaPair], test: &[QaPair]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("qaret.toml"), config).unwrap();
    save_jsonl(&dir.path().join("train.jsonl"), train).unwrap();
    save_jsonl(&dir.path().join("test.jsonl"), test).unwrap();
    dir
}

fn synthetic(n: usize) -> (Vec<QaPair>, Vec<QaPair>) {
    let pairs = generate(&SyntheticConfig {
        pairs: n,
        seed: 21,
        ..SyntheticConfig::default()
    });
    let test = pairs[n - 4..].to_vec();
    let train = pairs[..n - 4].to_vec();
    (train, test)
}

fn default_fixture() -> TempDir {
    let (train, test) = synthetic(14);
    fixture(CONFIG, &train, &test)
}

#[test]
fn index_writes_three_artifacts_and_counts_lines() {
    let dir = default_fixture();
    let out = ok(qaret(dir.path(), &["index"]));
    for name in ["stopwords.txt", "condensed.jsonl", "corpus.index"] {
        assert!(
            dir.path().join("work").join(name).is_file(),
            "{name} missing"
        );
    }
    let lines = fs::read_to_string(dir.path().join("train.jsonl"))
        .unwrap()
        .lines()
        .count();
    let row = stdout(&out)
        .lines()
        .find(|l| l.starts_with("train "))
        .map(|l| l.split_whitespace().nth(1).unwrap().to_owned())
        .unwrap();
    assert_eq!(row, lines.to_string());
    assert!(stdout(&out).contains("index: 14 passages"));
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = default_fixture();
    fs::remove_file(dir.path().join("train.jsonl")).unwrap();
    let out = qaret(dir.path(), &["index"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train.jsonl"), "{}", stderr(&out));
}

#[test]
fn malformed_dataset_is_a_data_error() {
    let dir = default_fixture();
    fs::write(
        dir.path().join("test.jsonl"),
        "{\"index\": 1, \"question\": \"q\"}\n",
    )
    .unwrap();
    let out = qaret(dir.path(), &["index"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let dir = default_fixture();
    assert_eq!(qaret(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        qaret(dir.path(), &["--method", "bm26", "query", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(qaret(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(qaret(dir.path(), &["--version"]).status.code(), Some(0));
    fs::write(dir.path().join("bad.toml"), "[condenser]\nk = 0\n").unwrap();
    let out = qaret(dir.path(), &["--config", "bad.toml", "index"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("condenser K"), "{}", stderr(&out));
}

#[test]
fn query_before_index_is_a_data_error() {
    let dir = default_fixture();
    let out = qaret(dir.path(), &["--method", "bm25", "query", "anything"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bm25_query_finds_the_passage_a_sentence_came_from() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    let (train, _) = synthetic(14);
    for pair in train.iter().take(5) {
        let sentences = qaret::corpus::split_sentences(&pair.answer);
        // the longest sentence is the most distinctive one
        let sentence = sentences.iter().max_by_key(|s| s.len()).unwrap();
        let out = ok(qaret(
            dir.path(),
            &["--method", "bm25", "query", sentence, "--top-k", "3"],
        ));
        let first: serde_json::Value =
            serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
        assert_eq!(first["doc_id"], pair.id);
        assert_eq!(first["rank"], 1);
        assert_eq!(stdout(&out).lines().count(), 3);
    }
    let out = ok(qaret(
        dir.path(),
        &[
            "--method",
            "lm",
            "query",
            &train[0].question,
            "--top-k",
            "1",
        ],
    ));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn empty_query_fails() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    let out = qaret(dir.path(), &["--method", "bm25", "query", "?! ..."]);
    assert_eq!(out.status.code(), Some(2));
    let out = qaret(
        dir.path(),
        &["--method", "bm25", "query", "x", "--top-k", "0"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_twice_gives_identical_model_and_falling_loss() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    let model = fs::read(dir.path().join("work/model.bin")).unwrap();
    let stores = fs::read(dir.path().join("work/stores/two-stage.store")).unwrap();
    ok(qaret(dir.path(), &["train"]));
    assert_eq!(fs::read(dir.path().join("work/model.bin")).unwrap(), model);
    assert_eq!(
        fs::read(dir.path().join("work/stores/two-stage.store")).unwrap(),
        stores
    );

    let csv = fs::read_to_string(dir.path().join("work/loss.csv")).unwrap();
    let losses: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 12);
    assert!(losses.last() < losses.first(), "{losses:?}");

    ok(qaret(dir.path(), &["--seed", "6", "train"]));
    assert_ne!(fs::read(dir.path().join("work/model.bin")).unwrap(), model);
}

#[test]
fn zero_epochs_keeps_the_initialization() {
    let (train, test) = synthetic(14);
    let dir = fixture(&CONFIG.replace("epochs = 12", "epochs = 0"), &train, &test);
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    assert_eq!(
        fs::read_to_string(dir.path().join("work/loss.csv")).unwrap(),
        "epoch,loss\n"
    );
    let model = EncoderModel::load(&dir.path().join("work/model.bin")).unwrap();
    let init = EncoderModel::random(model.vocab().clone(), 12, 20.0, 5).unwrap();
    assert_eq!(model, init);
}

fn report(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("work/reports").join(name)).unwrap()
}

#[test]
fn eval_writes_reports_for_every_method() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    let mut question_sets = Vec::new();
    for method in ["bm25", "tfidf-cos", "lm", "dense", "two-stage"] {
        let out = ok(qaret(dir.path(), &["--method", method, "eval"]));
        assert!(stdout(&out).contains("P@1"));
        assert!(stdout(&out).contains("mAP"));
        let json: serde_json::Value =
            serde_json::from_str(&report(dir.path(), &format!("test-{method}.json"))).unwrap();
        assert_eq!(json["method"], method);
        let ids: Vec<u64> = json["per_question"]
            .as_array()
            .unwrap()
            .iter()
            .map(|q| q["question_id"].as_u64().unwrap())
            .collect();
        question_sets.push(ids);
        let csv = report(dir.path(), &format!("test-{method}-overlap.csv"));
        assert!(csv.lines().count() <= 12);
        assert_eq!(csv.lines().next(), Some("X,count,p_at_1"));
    }
    assert!(question_sets.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(question_sets[0].len(), 4);

    let out = ok(qaret(
        dir.path(),
        &["--method", "bm25", "analyze-overlap", "--split", "train"],
    ));
    assert!(stdout(&out).contains("lexical overlap"));
    assert!(dir
        .path()
        .join("work/reports/train-bm25-overlap.csv")
        .is_file());
}

#[test]
fn gold_always_first_scores_100() {
    let pairs: Vec<QaPair> = (0..6)
        .map(|i| {
            let words = format!("alpha{i} beta{i} gamma{i}");
            QaPair::new(
                i,
                words.clone(),
                format!("{words}. delta{i} shared words here."),
            )
        })
        .collect();
    let dir = fixture(CONFIG, &pairs[..3], &pairs[3..]);
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["--method", "bm25", "eval"]));
    let json: serde_json::Value =
        serde_json::from_str(&report(dir.path(), "test-bm25.json")).unwrap();
    assert_eq!(json["p_at_k"]["1"], 100.0);
    assert_eq!(json["map"], 100.0);
}

#[test]
fn eval_without_the_split_is_a_usage_error() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    let out = qaret(dir.path(), &["--method", "bm25", "eval", "--split", "dev"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn external_embeddings_are_scored() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    let (_, test) = synthetic(14);
    let (train, _) = synthetic(14);
    // one-hot vectors: each question points straight at its own passage
    let dim = 14;
    let one_hot = |i: u64| {
        let mut v = vec![0.0f32; dim];
        v[i as usize] = 1.0;
        v
    };
    let passages = EmbeddingStore::from_entries(
        dim,
        train.iter().chain(&test).map(|p| (p.id, one_hot(p.id))),
    )
    .unwrap();
    let queries =
        EmbeddingStore::from_entries(dim, test.iter().map(|p| (p.id, one_hot(p.id)))).unwrap();
    passages.save(&dir.path().join("passages.store")).unwrap();
    queries.save(&dir.path().join("queries.store")).unwrap();
    ok(qaret(
        dir.path(),
        &[
            "eval",
            "--external-passages",
            "passages.store",
            "--external-queries",
            "queries.store",
        ],
    ));
    let json: serde_json::Value =
        serde_json::from_str(&report(dir.path(), "test-external.json")).unwrap();
    assert_eq!(json["p_at_k"]["1"], 100.0);

    let out = qaret(
        dir.path(),
        &["eval", "--external-passages", "passages.store"],
    );
    assert_eq!(out.status.code(), Some(1));
}

fn artifacts(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.join("work")];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                ));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn full_run_is_byte_stable() {
    let (train, test) = synthetic(14);
    let runs: Vec<Vec<(PathBuf, Vec<u8>)>> = (0..2)
        .map(|_| {
            let dir = fixture(CONFIG, &train, &test);
            ok(qaret(dir.path(), &["index"]));
            ok(qaret(dir.path(), &["train"]));
            for method in ["bm25", "tfidf-cos", "lm", "dense", "two-stage"] {
                ok(qaret(dir.path(), &["--method", method, "eval"]));
            }
            artifacts(dir.path())
        })
        .collect();
    assert_eq!(runs[0].len(), 7 + 15);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_flag_resolves_paths_against_its_directory() {
    let dir = default_fixture();
    let elsewhere = tempfile::tempdir().unwrap();
    let config = dir.path().join("qaret.toml");
    ok(qaret(
        elsewhere.path(),
        &["--config", config.to_str().unwrap(), "index"],
    ));
    assert!(dir.path().join("work/corpus.index").is_file());
    assert!(!elsewhere.path().join("work").exists());
}

#[test]
fn stopwords_can_stay_in_encoder_input() {
    let (train, test) = synthetic(14);
    let config = CONFIG.replace("stopwords = 0", "stopwords = 20\ndense_stopwords = false");
    let dir = fixture(&config, &train, &test);
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    let stopwords = fs::read_to_string(dir.path().join("work/stopwords.txt")).unwrap();
    let first = stopwords.lines().next().unwrap();
    let model = EncoderModel::load(&dir.path().join("work/model.bin")).unwrap();
    assert!(
        model.vocab().id(first).is_some(),
        "{first} missing from the encoder vocabulary"
    );
    ok(qaret(dir.path(), &["--method", "two-stage", "eval"]));

    let dir = fixture(
        &CONFIG.replace("stopwords = 0", "stopwords = 20"),
        &train,
        &test,
    );
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    let model = EncoderModel::load(&dir.path().join("work/model.bin")).unwrap();
    assert!(model.vocab().id(first).is_none());
}

fn scores(out: &Output) -> Vec<(u64, f64)> {
    stdout(out)
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["doc_id"].as_u64().unwrap(), v["score"].as_f64().unwrap())
        })
        .collect()
}

#[test]
fn per_query_condensing_is_a_config_switch() {
    let dir = default_fixture();
    ok(qaret(dir.path(), &["index"]));
    ok(qaret(dir.path(), &["train"]));
    let (train, _) = synthetic(14);
    let args = [
        "--method",
        "two-stage",
        "query",
        &train[2].question,
        "--top-k",
        "14",
    ];
    let stored = scores(&ok(qaret(dir.path(), &args)));

    fs::write(
        dir.path().join("qaret.toml"),
        format!("{CONFIG}\n[condenser]\nper_query = true\n"),
    )
    .unwrap();
    let live = scores(&ok(qaret(dir.path(), &args)));
    assert_eq!(stored.len(), 14);
    assert_eq!(live.len(), 14);
    // the gold passage was condensed with this question at index time too
    let gold = |s: &[(u64, f64)]| s.iter().find(|h| h.0 == train[2].id).unwrap().1;
    assert!((gold(&stored) - gold(&live)).abs() < 1e-12);
    ok(qaret(dir.path(), &["--method", "two-stage", "eval"]));
}
