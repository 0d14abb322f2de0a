use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use udkit::augment::{augment_treebank, AugmentMode};
use udkit::delex::{extract_examples, train_labeler, Labeler};
use udkit::eval::{cv_tsv, score_with, ScoreOptions};
use udkit::learn::{self, ParserModel, TaggerModel};
use udkit::morph::{self, read_transducer, write_transducer};
use udkit::pipeline::{build, cross_validate_config, Pipeline, PipelineConfig};
use udkit::project::{
    links_tsv, predict_labels_delex, project_corpus, select_top_k, train_aligner, LexTable, ParallelPair,
    ProjectWhat, SourceCorpus, DEFAULT_FLOOR,
};
use udkit::segment::{read_model, segment_to_treebank, train_boundary_model, write_model, PunktParams};
use udkit::tagconv::{convert_corpus, load_tag_map, parse_tagged_corpus};
use udkit::{parse_conllu, write_conllu, Treebank};

/// Universal Dependencies annotation for low-resource languages.
#[derive(Parser)]
#[command(name = "udkit", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train or apply the unsupervised sentence segmenter.
    #[command(subcommand)]
    Segmenter(SegmenterCmd),
    /// Map a tagged corpus onto UPOS with a tag table.
    Convert(ConvertArgs),
    /// Train or apply the POS tagger.
    #[command(subcommand)]
    Tagger(LearnerCmd),
    /// Compile rule files and analyze CoNLL-U with the transducer.
    #[command(subcommand)]
    Morph(MorphCmd),
    /// Train or apply the dependency parser.
    #[command(subcommand)]
    Parser(LearnerCmd),
    /// Align parallel text and project source annotations.
    #[command(subcommand)]
    Project(ProjectCmd),
    /// Add reordered and cropped copies of eligible sentences.
    Augment(AugmentArgs),
    /// Train or apply the delexicalized dependency labeler.
    #[command(subcommand)]
    Label(LabelCmd),
    /// Score system CoNLL-U against gold.
    Eval(EvalArgs),
    /// k-fold cross-validation of a pipeline config on a treebank.
    Cv(CvArgs),
    /// Build or run a configured pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SegmenterCmd {
    Train(InOut),
    Run {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Args)]
struct ConvertArgs {
    /// Tagged corpus, `form/TAG` per token or FORM<TAB>TAG rows.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the unmapped-tag report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LearnerCmd {
    Train {
        #[command(flatten)]
        io: InOut,
        #[arg(long, default_value_t = learn::DEFAULT_EPOCHS)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Run {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Subcommand)]
enum MorphCmd {
    Compile {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Run {
        #[arg(long)]
        fst: PathBuf,
        #[command(flatten)]
        io: InOut,
        /// Consider analyses whose rules are restricted to another UPOS.
        #[arg(long)]
        no_gate: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Projection {
    Pos,
    Tree,
    Both,
}

#[derive(Subcommand)]
enum ProjectCmd {
    /// Train a word-translation table on a parallel corpus.
    Align {
        #[arg(long, num_args = 2, value_names = ["SOURCE", "TARGET"])]
        parallel: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Pos(ProjectArgs),
    Tree(ProjectArgs),
    Both(ProjectArgs),
    /// Keep the k sentences with the best alignment coverage.
    Select {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Args)]
struct ProjectArgs {
    /// Annotated source side, one per source language.
    #[arg(long, required = true, num_args = 1..)]
    src_conllu: Vec<PathBuf>,
    /// Source and target text files, one pair per source language.
    #[arg(long, required = true, num_args = 2, value_names = ["SOURCE", "TARGET"], action = ArgAction::Append)]
    parallel: Vec<PathBuf>,
    /// Translation tables, one per source language; trained on the fly
    /// when omitted.
    #[arg(long, num_args = 1..)]
    aligner: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    /// Labeler for projected arcs; arcs are labeled `dep` without one.
    #[arg(long)]
    labeler: Option<PathBuf>,
    /// Where to dump the alignment links as TSV.
    #[arg(long)]
    links: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AugmentChoice {
    #[value(name = "rotate")]
    Rotate,
    #[value(name = "rotate+crop")]
    RotateCrop,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    io: InOut,
    #[arg(long, value_enum, default_value = "rotate")]
    mode: AugmentChoice,
}

#[derive(Subcommand)]
enum LabelCmd {
    Train {
        #[command(flatten)]
        io: InOut,
        #[arg(long, default_value_t = 50)]
        trees: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    sys: PathBuf,
    /// Leave out words whose gold UPOS is PUNCT.
    #[arg(long)]
    no_punct: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    io: InOut,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    pipeline: PathBuf,
}

#[derive(Subcommand)]
enum PipelineCmd {
    Build {
        #[arg(long)]
        config: PathBuf,
    },
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        io: InOut,
        /// Also write `<out>.tokenized.conllu`, `.tagged`, `.analyzed` and
        /// `.parsed` next to the output.
        #[arg(long)]
        keep_intermediate: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_treebank(path: &Path) -> Result<Treebank> {
    parse_conllu(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).context("cannot write to standard output"),
    }
}

fn map_sentences(tb: &Treebank, f: impl Fn(&udkit::AnnotatedSentence) -> udkit::AnnotatedSentence) -> Treebank {
    Treebank::from_sentences(tb.source_name.clone(), tb.iter().map(f).collect())
}

fn segmenter(cmd: SegmenterCmd) -> Result<()> {
    match cmd {
        SegmenterCmd::Train(io) => {
            let model = train_boundary_model(&read(&io.input)?, PunktParams::default());
            emit(io.out.as_deref(), &write_model(&model))
        }
        SegmenterCmd::Run { model, io } => {
            let model = read_model(&read(&model)?).context("segmenter model")?;
            emit(io.out.as_deref(), &write_conllu(&segment_to_treebank(&read(&io.input)?, &model)))
        }
    }
}

fn convert(args: ConvertArgs) -> Result<()> {
    let corpus = parse_tagged_corpus(&read(&args.corpus)?).context("tagged corpus")?;
    let map = load_tag_map(&read(&args.map)?).context("tag map")?;
    let (tb, report) = convert_corpus(&corpus, &map)?;
    for row in &report.unmapped {
        log::warn!("tag {} ({} tokens) had no mapping, used {}", row.source_tag, row.count, row.mapped_to);
    }
    if let Some(p) = &args.report {
        emit(Some(p), &report.to_tsv())?;
    }
    emit(args.out.as_deref(), &write_conllu(&tb))
}

fn tagger(cmd: LearnerCmd) -> Result<()> {
    match cmd {
        LearnerCmd::Train { io, epochs, seed } => {
            let model = learn::train_tagger(&read_treebank(&io.input)?, epochs, seed)?;
            emit(io.out.as_deref(), &model.to_text())
        }
        LearnerCmd::Run { model, io } => {
            let model = TaggerModel::from_text(&read(&model)?).context("tagger model")?;
            let tb = read_treebank(&io.input)?;
            emit(io.out.as_deref(), &write_conllu(&map_sentences(&tb, |s| learn::tag(s, &model))))
        }
    }
}

fn parser(cmd: LearnerCmd) -> Result<()> {
    match cmd {
        LearnerCmd::Train { io, epochs, seed } => {
            let model = learn::train_parser(&read_treebank(&io.input)?, epochs, seed)?;
            emit(io.out.as_deref(), &model.to_text())
        }
        LearnerCmd::Run { model, io } => {
            let model = ParserModel::from_text(&read(&model)?).context("parser model")?;
            let tb = read_treebank(&io.input)?;
            emit(io.out.as_deref(), &write_conllu(&map_sentences(&tb, |s| learn::parse(s, &model))))
        }
    }
}

fn morph_cmd(cmd: MorphCmd) -> Result<()> {
    match cmd {
        MorphCmd::Compile { rules, out } => {
            let t = morph::compile_rules(&read(&rules)?).with_context(|| format!("{}", rules.display()))?;
            log::info!("compiled {}: {} states, {} arcs", t.version_tag(), t.generator.num_states(), t.generator.num_arcs());
            emit(out.as_deref(), &write_transducer(&t))
        }
        MorphCmd::Run { fst, io, no_gate } => {
            let t = read_transducer(&read(&fst)?).context("transducer")?;
            let tb = read_treebank(&io.input)?;
            emit(io.out.as_deref(), &write_conllu(&map_sentences(&tb, |s| morph::annotate_sentence(s, &t, !no_gate))))
        }
    }
}

fn read_parallel(source: &Path, target: &Path, lang: &str) -> Result<Vec<ParallelPair>> {
    let (s, t) = (read(source)?, read(target)?);
    let (s, t): (Vec<&str>, Vec<&str>) = (s.lines().collect(), t.lines().collect());
    if s.len() != t.len() {
        bail!("{} has {} lines but {} has {}", source.display(), s.len(), target.display(), t.len());
    }
    Ok(s.iter().zip(&t).map(|(a, b)| ParallelPair::new(a, b, lang)).collect())
}

fn lang_name(path: &Path, idx: usize) -> String {
    path.file_stem().map_or_else(|| format!("src{}", idx + 1), |s| s.to_string_lossy().into_owned())
}

fn project(cmd: ProjectCmd) -> Result<()> {
    let (what, args) = match cmd {
        ProjectCmd::Align { parallel, iters, out } => {
            let pairs = read_parallel(&parallel[0], &parallel[1], &lang_name(&parallel[0], 0))?;
            return emit(out.as_deref(), &train_aligner(&pairs, iters)?.to_text());
        }
        ProjectCmd::Select { k, io } => {
            let tb = read_treebank(&io.input)?;
            let scores = tb
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.comment_value("coverage")
                        .and_then(|v| v.parse::<f64>().ok())
                        .with_context(|| format!("sentence {} has no coverage comment", i + 1))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut keep = select_top_k(&scores, k);
            keep.sort_unstable();
            let picked = keep.into_iter().map(|i| tb.sentences[i].clone()).collect();
            return emit(io.out.as_deref(), &write_conllu(&Treebank::from_sentences(tb.source_name, picked)));
        }
        ProjectCmd::Pos(a) => (ProjectWhat::Pos, a),
        ProjectCmd::Tree(a) => (ProjectWhat::Tree, a),
        ProjectCmd::Both(a) => (ProjectWhat::Both, a),
    };
    let n = args.src_conllu.len();
    if args.parallel.len() != 2 * n {
        bail!("{n} source treebanks need {n} --parallel pairs, got {}", args.parallel.len() / 2);
    }
    if !args.aligner.is_empty() && args.aligner.len() != n {
        bail!("{n} source treebanks need {n} --aligner tables, got {}", args.aligner.len());
    }
    let mut sources = Vec::with_capacity(n);
    for (i, conllu) in args.src_conllu.iter().enumerate() {
        let lang = lang_name(conllu, i);
        let pairs = read_parallel(&args.parallel[2 * i], &args.parallel[2 * i + 1], &lang)?;
        let table = match args.aligner.get(i) {
            Some(p) => LexTable::from_text(&read(p)?).with_context(|| format!("{}", p.display()))?,
            None => train_aligner(&pairs, args.iters)?,
        };
        sources.push(SourceCorpus { lang, pairs, annotations: read_treebank(conllu)?, table });
    }
    let labeler = match &args.labeler {
        Some(p) => Some(Labeler::from_text(&read(p)?).context("labeler model")?),
        None => None,
    };
    let projected = project_corpus(&sources, what, labeler.as_ref(), args.floor)?;
    if let Some(p) = &args.links {
        let rows: Vec<_> = projected.iter().flat_map(|p| p.links.iter().cloned()).collect();
        emit(Some(p), &links_tsv(&rows))?;
    }
    let tb = Treebank::from_sentences("projected", projected.into_iter().map(|p| p.sentence).collect());
    emit(args.out.as_deref(), &write_conllu(&tb))
}

fn augment(args: AugmentArgs) -> Result<()> {
    let mode = match args.mode {
        AugmentChoice::Rotate => AugmentMode::Rotate,
        AugmentChoice::RotateCrop => AugmentMode::RotateCrop,
    };
    let (tb, stats) = augment_treebank(&read_treebank(&args.io.input)?, mode);
    log::info!("{} eligible sentences, {} added, {} morphs skipped", stats.eligible, stats.morphs, stats.skipped_morphs);
    emit(args.io.out.as_deref(), &write_conllu(&tb))
}

fn label(cmd: LabelCmd) -> Result<()> {
    match cmd {
        LabelCmd::Train { io, trees, seed } => {
            let examples = extract_examples(&read_treebank(&io.input)?)?;
            emit(io.out.as_deref(), &train_labeler(&examples, trees, seed)?.to_text())
        }
        LabelCmd::Apply { model, io } => {
            let labeler = Labeler::from_text(&read(&model)?).context("labeler model")?;
            let mut tb = read_treebank(&io.input)?;
            for (i, s) in tb.sentences.iter_mut().enumerate() {
                let heads = s
                    .tokens
                    .iter()
                    .map(|t| t.head.with_context(|| format!("sentence {}: token {} has no head", i + 1, t.id)))
                    .collect::<Result<Vec<_>>>()?;
                let upos: Vec<_> = s.tokens.iter().map(|t| t.upos).collect();
                for (tok, l) in s.tokens.iter_mut().zip(predict_labels_delex(&heads, &upos, &labeler)) {
                    tok.deprel = Some(l);
                }
            }
            emit(io.out.as_deref(), &write_conllu(&tb))
        }
    }
}

fn eval(args: EvalArgs) -> Result<()> {
    let report = score_with(
        &read_treebank(&args.gold)?,
        &read_treebank(&args.sys)?,
        ScoreOptions { no_punct: args.no_punct },
    )?;
    emit(args.out.as_deref(), &report.to_tsv())
}

fn cv(args: CvArgs) -> Result<()> {
    let cfg = PipelineConfig::load(&args.pipeline)?;
    let report = cross_validate_config(&cfg, &read_treebank(&args.io.input)?, args.k, args.seed)?;
    log::info!("LAS median {:.2} over {} folds", report.las.median, report.folds.len());
    emit(args.io.out.as_deref(), &cv_tsv(&report))
}

fn pipeline(cmd: PipelineCmd) -> Result<()> {
    match cmd {
        PipelineCmd::Build { config } => {
            let (_, log) = build(&PipelineConfig::load(&config)?)?;
            for p in &log.files_written {
                println!("{}", p.display());
            }
            Ok(())
        }
        PipelineCmd::Run { config, io, keep_intermediate } => {
            let p = Pipeline::load_or_build(&PipelineConfig::load(&config)?)?;
            let stages = p.run_stages(&read(&io.input)?)?;
            if keep_intermediate {
                let base = io.out.as_deref().unwrap_or(&io.input).with_extension("");
                stages.write_all(&base)?;
            }
            emit(io.out.as_deref(), &write_conllu(&stages.parsed))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segmenter(c) => segmenter(c),
        Command::Convert(a) => convert(a),
        Command::Tagger(c) => tagger(c),
        Command::Morph(c) => morph_cmd(c),
        Command::Parser(c) => parser(c),
        Command::Project(c) => project(c),
        Command::Augment(a) => augment(a),
        Command::Label(c) => label(c),
        Command::Eval(a) => eval(a),
        Command::Cv(a) => cv(a),
        Command::Pipeline(c) => pipeline(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not failures.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
