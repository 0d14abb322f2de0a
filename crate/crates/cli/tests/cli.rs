use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn core_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn udkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udkit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = udkit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(udkit(&["eval", "--gold"]).status.code(), Some(1));
    assert_eq!(udkit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(udkit(&["--help"]).status.code(), Some(0));
    let missing = udkit(&["eval", "--gold", "/nonexistent.conllu", "--sys", "/nonexistent.conllu"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    let gold = core_fixtures().join("antipolo_gold.conllu");
    let mismatch = udkit(&["eval", "--gold", s(&gold), "--sys", s(&core_fixtures().join("antipolo_cross_lingual.conllu"))]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("character 43"));
}

#[test]
fn eval_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.tsv");
    let gold = core_fixtures().join("antipolo_gold.conllu");
    let sys = core_fixtures().join("antipolo_zero_shot.conllu");
    ok(&["eval", "--gold", s(&gold), "--sys", s(&sys), "--out", s(&out)]);
    let report = fs::read_to_string(&out).unwrap();
    assert!(report.starts_with("metric\tprecision\trecall\tf1\n"));
    assert!(report.contains("UAS\t54.55\t54.55\t54.55\n"), "{report}");
    assert!(report.contains("LAS\t27.27\t27.27\t27.27\n"), "{report}");
    let self_scored = ok(&["eval", "--gold", s(&gold), "--sys", s(&gold), "--no-punct"]);
    assert_eq!(self_scored.lines().filter(|l| l.ends_with("100.00\t100.00\t100.00")).count(), 8);
}

#[test]
fn segmenter_convert_and_tagger() {
    let dir = tempfile::tempdir().unwrap();
    let zs = core_fixtures().join("zero_shot");
    let model = dir.path().join("seg.punkt");
    ok(&["segmenter", "train", "--in", s(&zs.join("raw_train.txt")), "--out", s(&model)]);
    let doc = dir.path().join("doc.conllu");
    ok(&["segmenter", "run", "--model", s(&model), "--in", s(&zs.join("input.txt")), "--out", s(&doc)]);
    assert!(fs::read_to_string(&doc).unwrap().contains("# text = "));

    let converted = dir.path().join("conv.conllu");
    let report = dir.path().join("unmapped.tsv");
    ok(&[
        "convert", "--corpus", s(&zs.join("tagged.txt")), "--map", s(&zs.join("map.tsv")),
        "--out", s(&converted), "--report", s(&report),
    ]);
    assert!(fs::read_to_string(&report).unwrap().starts_with("source_tag\tcount\tmapped_to"));

    let tagger = dir.path().join("tagger.model");
    ok(&["tagger", "train", "--in", s(&converted), "--out", s(&tagger), "--epochs", "3", "--seed", "2"]);
    let tagged = ok(&["tagger", "run", "--model", s(&tagger), "--in", s(&doc)]);
    let rows: Vec<&str> = tagged.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split('\t').nth(3) != Some("_")));
    let again = ok(&["tagger", "run", "--model", s(&tagger), "--in", s(&doc)]);
    assert_eq!(again, tagged);
}

#[test]
fn morph_compile_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let fst = dir.path().join("v2.fst");
    let rules = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/v2.rules");
    ok(&["morph", "compile", "--rules", s(&rules), "--out", s(&fst)]);
    let out = ok(&["morph", "run", "--fst", s(&fst), "--in", s(&core_fixtures().join("vso.conllu"))]);
    let kumain = out.lines().find(|l| l.contains("\tKumain\t")).unwrap();
    assert_eq!(kumain.split('\t').nth(2), Some("kain"));
    let bad = dir.path().join("bad.rules");
    fs::write(&bad, "this is not a rule file\n").unwrap();
    assert_eq!(udkit(&["morph", "compile", "--rules", s(&bad)]).status.code(), Some(2));
}

#[test]
fn projection_labeling_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let (en, tl, src) = (fixtures().join("en.txt"), fixtures().join("tl.txt"), fixtures().join("en.conllu"));
    let lex = dir.path().join("en.lex");
    ok(&["project", "align", "--parallel", s(&en), s(&tl), "--iters", "10", "--out", s(&lex)]);
    let labeler = dir.path().join("labeler.model");
    ok(&["label", "train", "--in", s(&src), "--out", s(&labeler), "--trees", "5"]);

    let proj = dir.path().join("proj.conllu");
    let links = dir.path().join("links.tsv");
    ok(&[
        "project", "tree", "--src-conllu", s(&src), "--parallel", s(&en), s(&tl), "--aligner", s(&lex),
        "--labeler", s(&labeler), "--links", s(&links), "--out", s(&proj),
    ]);
    let text = fs::read_to_string(&proj).unwrap();
    assert_eq!(text.matches("# coverage = ").count(), 6);
    assert!(fs::read_to_string(&links).unwrap().starts_with("sent_id\tsrc\ttgt\tprob\n"));
    // Every projected sentence is a tree with exactly one root.
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let roots = block.lines().filter(|l| l.split('\t').nth(6) == Some("0")).count();
        assert_eq!(roots, 1, "{block}");
    }

    let top = ok(&["project", "select", "--in", s(&proj), "--k", "4"]);
    assert_eq!(top.matches("# sent_id = ").count(), 4);

    let relabeled = ok(&["label", "apply", "--model", s(&labeler), "--in", s(&src)]);
    let gold = fs::read_to_string(&src).unwrap();
    let labels = |t: &str| t.lines().filter_map(|l| l.split('\t').nth(7).map(str::to_owned)).collect::<Vec<_>>();
    assert_eq!(labels(&relabeled), labels(&gold));

    let short = udkit(&["project", "pos", "--src-conllu", s(&src), s(&src), "--parallel", s(&en), s(&tl)]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn augment_adds_morphs() {
    let out = ok(&["augment", "--in", s(&core_fixtures().join("aug10.conllu")), "--mode", "rotate"]);
    assert_eq!(out.matches("# morph = ").count(), 6);
    let cropped = ok(&["augment", "--in", s(&core_fixtures().join("aug10.conllu")), "--mode", "rotate+crop"]);
    assert_eq!(cropped.matches("# morph = ").count(), 12);
    assert_eq!(udkit(&["augment", "--in", "x", "--mode", "shuffle"]).status.code(), Some(1));
}

#[test]
fn learners_and_cross_validation() {
    let dir = tempfile::tempdir().unwrap();
    let tb = core_fixtures().join("aug10.conllu");
    let parser = dir.path().join("parser.model");
    ok(&["parser", "train", "--in", s(&tb), "--out", s(&parser), "--epochs", "3"]);
    let parsed = ok(&["parser", "run", "--model", s(&parser), "--in", s(&tb)]);
    assert_eq!(parsed.matches("\t0\troot\t").count(), 10);

    let cfg = dir.path().join("cv.toml");
    fs::write(
        &cfg,
        format!(
            "mode = \"few_shot\"\ntreebank = {:?}\n[tagger]\nsource = \"treebank\"\nepochs = 2\n\
             [parser]\nsource = \"treebank+augment\"\nepochs = 2\n",
            tb
        ),
    )
    .unwrap();
    let report = ok(&["cv", "--in", s(&tb), "--k", "5", "--seed", "4", "--pipeline", s(&cfg)]);
    assert_eq!(report.lines().filter(|l| l.split('\t').nth(1) == Some("LAS") && !l.starts_with("statistic")).count(), 5);
    let summary: Vec<&str> = report.split("\n\n").nth(1).unwrap().lines().collect();
    assert_eq!(summary[0], "statistic\tLAS");
    assert_eq!(summary.iter().skip(1).map(|l| l.split('\t').next().unwrap()).collect::<Vec<_>>(),
        ["min", "q1", "median", "q3", "max", "mean"]);
    assert_eq!(ok(&["cv", "--in", s(&tb), "--k", "5", "--seed", "4", "--pipeline", s(&cfg)]), report);
    assert_eq!(udkit(&["cv", "--in", s(&tb), "--k", "11", "--pipeline", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn zero_shot_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let zs = dir.path().join("zs");
    fs::create_dir(&zs).unwrap();
    for entry in fs::read_dir(core_fixtures().join("zero_shot")).unwrap() {
        let entry = entry.unwrap();
        if entry.file_name() != "treebank.conllu" {
            fs::copy(entry.path(), zs.join(entry.file_name())).unwrap();
        }
    }
    let cfg = zs.join("zero_shot.toml");
    let built = ok(&["pipeline", "build", "--config", s(&cfg)]);
    assert_eq!(built.lines().count(), 4);
    let out = dir.path().join("out.conllu");
    ok(&["pipeline", "run", "--config", s(&cfg), "--in", s(&zs.join("input.txt")), "--out", s(&out), "--keep-intermediate"]);
    for stage in ["tokenized", "tagged", "analyzed", "parsed"] {
        assert!(dir.path().join(format!("out.{stage}.conllu")).exists(), "{stage}");
    }
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.contains("\troot\t"));
    let second = ok(&["pipeline", "run", "--config", s(&cfg), "--in", s(&zs.join("input.txt"))]);
    assert_eq!(second, first);

    let bad = zs.join("bad.toml");
    fs::write(&bad, format!("treebank = \"t.conllu\"\n{}", fs::read_to_string(&cfg).unwrap())).unwrap();
    let err = udkit(&["pipeline", "build", "--config", s(&bad)]);
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("mode violation"));
}
