use std::path::{Path, PathBuf};

use udkit::pipeline::{build, Pipeline, PipelineConfig, PipelineError};
use udkit::{parse_conllu, write_conllu};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn few_shot(models: &Path, extra: &str) -> PipelineConfig {
    let text = format!(
        "mode = \"few_shot\"\nseed = 5\ntreebank = {:?}\nmodel_dir = {:?}\n{extra}\n\
         [tagger]\nsource = \"treebank\"\n[parser]\nsource = \"treebank+augment\"\n",
        fixtures().join("vso.conllu"),
        models,
    );
    PipelineConfig::from_toml(&text, &fixtures()).unwrap()
}

#[test]
fn few_shot_toy_reproduces_the_gold_tree() {
    let dir = tempfile::tempdir().unwrap();
    let (pipeline, log) = build(&few_shot(dir.path(), "")).unwrap();
    assert_eq!(log.augmented_eligible, Some(1));
    assert_eq!(log.parser_sentences, 3);
    let out = pipeline.run("Kumain si Juan ng mansanas.").unwrap();
    let gold = parse_conllu(&std::fs::read_to_string(fixtures().join("vso.conllu")).unwrap()).unwrap();
    assert_eq!(out.len(), 1);
    let (got, want) = (&out.sentences[0], &gold.sentences[0]);
    assert_eq!(got.forms(), want.forms());
    for (g, w) in got.tokens.iter().zip(&want.tokens) {
        assert_eq!((g.head, &g.deprel, g.upos), (w.head, &w.deprel, w.upos), "{}", g.form);
    }
}

#[test]
fn runs_are_deterministic_and_models_reload() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = few_shot(dir.path(), "");
    let (built, log) = build(&cfg).unwrap();
    assert_eq!(log.files_written.len(), 3);
    let text = "Kumain si Juan ng mansanas. Kumain ng mansanas si Juan.";
    let first = write_conllu(&built.run(text).unwrap());
    let loaded = Pipeline::load(&cfg).unwrap();
    assert_eq!(write_conllu(&loaded.run(text).unwrap()), first);
    let (rebuilt, _) = build(&cfg).unwrap();
    assert_eq!(write_conllu(&rebuilt.run(text).unwrap()), first);
    assert!(built.run("").unwrap().is_empty());
    let many = built.run_many(&[text.to_owned(), String::new(), text.to_owned()]).unwrap();
    assert_eq!(write_conllu(&many[2]), first);
}

#[test]
fn intermediate_stages_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (p, _) = build(&few_shot(dir.path(), "[morph]\nstarter = \"v1\"")).unwrap();
    let stages = p.run_stages("Kumain si Juan ng mansanas.").unwrap();
    assert!(stages.tokenized.sentences[0].tokens.iter().all(|t| t.upos.is_none()));
    assert!(stages.tagged.sentences[0].tokens.iter().all(|t| t.upos.is_some() && t.head.is_none()));
    assert_eq!(stages.analyzed.sentences[0].tokens[0].lemma.as_deref(), Some("kain"));
    let files = stages.write_all(&dir.path().join("doc")).unwrap();
    assert_eq!(files.len(), 4);
    assert!(files[3].ends_with("doc.parsed.conllu"));
}

#[test]
fn zero_shot_config_cannot_name_a_treebank() {
    let base = std::fs::read_to_string(fixtures().join("zero_shot/zero_shot.toml")).unwrap();
    let err = PipelineConfig::from_toml(&format!("treebank = \"x.conllu\"\n{base}"), &fixtures()).unwrap_err();
    assert!(matches!(err, PipelineError::ModeViolation(_)));
    assert!(err.to_string().starts_with("mode violation"));
}
