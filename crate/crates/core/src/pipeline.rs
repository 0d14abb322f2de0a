//! Config-driven zero-shot and few-shot annotation pipelines.
//!
//! A pipeline chains segmentation, tagging, morphological analysis and
//! parsing. In zero-shot mode every stage is trained from alternative
//! resources (converted tags, projected trees, hand-written rules) and the
//! config may not mention an annotated treebank at all. In few-shot mode
//! the tagger and parser learn from a treebank, optionally augmented.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::augment::{augment_treebank, AugmentMode};
use crate::eval::{cross_validate, CvReport};
use crate::learn::{self, ParserModel, TaggerModel};
use crate::morph::{self, Transducer};
use crate::project::filter_for_tagger;
use crate::segment::{self, BoundaryModel, PunktParams};
use crate::tagconv;
use crate::treebank::{parse_conllu, write_conllu, Treebank};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("mode violation: {0}")]
    ModeViolation(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ZeroShot,
    FewShot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaggerSource {
    Converted,
    Projected,
    Treebank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum ParserSource {
    #[serde(rename = "projected")]
    Projected,
    /// A parser model trained elsewhere.
    #[serde(rename = "external")]
    External,
    #[serde(rename = "treebank")]
    Treebank,
    #[serde(rename = "treebank+augment")]
    TreebankAugment,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
pub enum AugmentChoice {
    #[default]
    #[serde(rename = "rotate")]
    Rotate,
    #[serde(rename = "rotate+crop")]
    RotateCrop,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmenterConfig {
    /// A trained boundary model.
    pub model: Option<PathBuf>,
    /// Raw text to train the boundary model on.
    pub train_text: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggerConfig {
    pub source: TaggerSource,
    /// Tagged corpus (converted) or projected CoNLL-U (projected).
    pub corpus: Option<PathBuf>,
    pub tag_map: Option<PathBuf>,
    pub epochs: Option<usize>,
    /// Minimum share of tagged tokens for a projected sentence to be used.
    pub min_tagged: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphConfig {
    pub rules: Option<PathBuf>,
    /// `v1` or `v2`, used when no rule file is given.
    pub starter: Option<String>,
    #[serde(default = "yes")]
    pub gate: bool,
}

fn yes() -> bool {
    true
}

impl Default for MorphConfig {
    fn default() -> Self {
        MorphConfig { rules: None, starter: None, gate: true }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParserConfig {
    pub source: ParserSource,
    /// Projected CoNLL-U for `projected`.
    pub corpus: Option<PathBuf>,
    /// Model file for `external`.
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub augment: AugmentChoice,
    pub epochs: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Where trained models are written; defaults to `models` next to
    /// the config file.
    pub model_dir: Option<PathBuf>,
    /// Annotated treebank, few-shot only.
    pub treebank: Option<PathBuf>,
    #[serde(default)]
    pub segmenter: SegmenterConfig,
    pub tagger: TaggerConfig,
    #[serde(default)]
    pub morph: MorphConfig,
    pub parser: ParserConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn model_dir(&self) -> PathBuf {
        self.resolve(self.model_dir.as_deref().unwrap_or(Path::new("models")))
    }

    /// Check required paths and the mode constraints.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let need = |field: &Option<PathBuf>, what: &str| {
            if field.is_none() {
                Err(PipelineError::Config(format!("{what} is required")))
            } else {
                Ok(())
            }
        };
        match self.tagger.source {
            TaggerSource::Converted => {
                need(&self.tagger.corpus, "tagger.corpus")?;
                need(&self.tagger.tag_map, "tagger.tag_map")?;
            }
            TaggerSource::Projected => need(&self.tagger.corpus, "tagger.corpus")?,
            TaggerSource::Treebank => {}
        }
        match self.parser.source {
            ParserSource::Projected => need(&self.parser.corpus, "parser.corpus")?,
            ParserSource::External => need(&self.parser.model, "parser.model")?,
            ParserSource::Treebank | ParserSource::TreebankAugment => {}
        }
        if let Some(s) = &self.morph.starter {
            if s != "v1" && s != "v2" {
                return Err(PipelineError::Config(format!("unknown starter rule pack {s:?}")));
            }
        }
        let segmenter_given = self.segmenter.model.is_some() || self.segmenter.train_text.is_some();
        let uses_treebank = self.tagger.source == TaggerSource::Treebank
            || matches!(self.parser.source, ParserSource::Treebank | ParserSource::TreebankAugment)
            || !segmenter_given;
        match self.mode {
            Mode::ZeroShot => {
                if self.treebank.is_some() {
                    return Err(PipelineError::ModeViolation("zero-shot config declares an annotated treebank".into()));
                }
                if self.tagger.source == TaggerSource::Treebank {
                    return Err(PipelineError::ModeViolation("zero-shot tagger cannot be trained on a treebank".into()));
                }
                if matches!(self.parser.source, ParserSource::Treebank | ParserSource::TreebankAugment) {
                    return Err(PipelineError::ModeViolation("zero-shot parser cannot be trained on a treebank".into()));
                }
                if !segmenter_given {
                    return Err(PipelineError::Config("zero-shot segmenter needs a model or training text".into()));
                }
            }
            Mode::FewShot => {
                if uses_treebank {
                    need(&self.treebank, "treebank")?;
                }
            }
        }
        Ok(())
    }
}

/// What `build` read and did, for logs and tests.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildLog {
    pub files_read: Vec<PathBuf>,
    pub files_written: Vec<PathBuf>,
    pub tagger_sentences: usize,
    pub parser_sentences: usize,
    pub augmented_eligible: Option<usize>,
}

struct Reader<'a> {
    cfg: &'a PipelineConfig,
    log: &'a mut BuildLog,
}

impl Reader<'_> {
    fn read(&mut self, p: &Path) -> Result<String, PipelineError> {
        let path = self.cfg.resolve(p);
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::Io { path: path.clone(), message: e.to_string() })?;
        self.log.files_read.push(path);
        Ok(text)
    }

    fn conllu(&mut self, p: &Path, stage_name: &'static str) -> Result<Treebank, PipelineError> {
        let text = self.read(p)?;
        parse_conllu(&text).map_err(stage(stage_name))
    }
}

pub const SEGMENTER_FILE: &str = "segmenter.punkt";
pub const TAGGER_FILE: &str = "tagger.model";
pub const MORPH_FILE: &str = "morph.fst";
pub const PARSER_FILE: &str = "parser.model";

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub segmenter: BoundaryModel,
    pub tagger: TaggerModel,
    pub morph: Option<Transducer>,
    pub gate_morph: bool,
    pub parser: ParserModel,
}

/// The intermediate treebanks of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stages {
    pub tokenized: Treebank,
    pub tagged: Treebank,
    pub analyzed: Treebank,
    pub parsed: Treebank,
}

fn epochs(e: Option<usize>) -> usize {
    e.unwrap_or(learn::DEFAULT_EPOCHS)
}

fn tagger_stage(
    cfg: &PipelineConfig,
    rd: &mut Reader,
    treebank: Option<&Treebank>,
    seed: u64,
) -> Result<TaggerModel, PipelineError> {
    let data = match cfg.tagger.source {
        TaggerSource::Converted => {
            let corpus = tagconv::parse_tagged_corpus(&rd.read(cfg.tagger.corpus.as_ref().unwrap())?)
                .map_err(stage("tag conversion"))?;
            let map = tagconv::load_tag_map(&rd.read(cfg.tagger.tag_map.as_ref().unwrap())?)
                .map_err(stage("tag conversion"))?;
            tagconv::convert_corpus(&corpus, &map).map_err(stage("tag conversion"))?.0
        }
        TaggerSource::Projected => {
            let tb = rd.conllu(cfg.tagger.corpus.as_ref().unwrap(), "tagger")?;
            filter_for_tagger(&tb, cfg.tagger.min_tagged.unwrap_or(0.5))
        }
        TaggerSource::Treebank => need_treebank(treebank)?.clone(),
    };
    rd.log.tagger_sentences = data.len();
    learn::train_tagger(&data, epochs(cfg.tagger.epochs), seed).map_err(stage("tagger"))
}

fn morph_stage(cfg: &PipelineConfig, rd: &mut Reader) -> Result<Option<Transducer>, PipelineError> {
    let text = match (&cfg.morph.rules, cfg.morph.starter.as_deref()) {
        (Some(p), _) => Some(rd.read(p)?),
        (None, Some("v1")) => Some(morph::STARTER_V1.to_owned()),
        (None, Some(_)) => Some(morph::STARTER_V2.to_owned()),
        (None, None) => None,
    };
    text.map(|t| morph::compile_rules(&t).map_err(stage("morphology"))).transpose()
}

fn parser_stage(
    cfg: &PipelineConfig,
    rd: &mut Reader,
    treebank: Option<&Treebank>,
    seed: u64,
) -> Result<ParserModel, PipelineError> {
    let data = match cfg.parser.source {
        ParserSource::External => {
            let text = rd.read(cfg.parser.model.as_ref().unwrap())?;
            return ParserModel::from_text(&text).map_err(stage("parser"));
        }
        ParserSource::Projected => rd.conllu(cfg.parser.corpus.as_ref().unwrap(), "parser")?,
        ParserSource::Treebank => need_treebank(treebank)?.clone(),
        ParserSource::TreebankAugment => {
            let mode = match cfg.parser.augment {
                AugmentChoice::Rotate => AugmentMode::Rotate,
                AugmentChoice::RotateCrop => AugmentMode::RotateCrop,
            };
            let (aug, stats) = augment_treebank(need_treebank(treebank)?, mode);
            log::info!("augmented parser training set: {} sentences ({} eligible)", aug.len(), stats.eligible);
            rd.log.augmented_eligible = Some(stats.eligible);
            aug
        }
    };
    rd.log.parser_sentences = data.len();
    learn::train_parser(&data, epochs(cfg.parser.epochs), seed).map_err(stage("parser"))
}

fn need_treebank(tb: Option<&Treebank>) -> Result<&Treebank, PipelineError> {
    tb.ok_or_else(|| PipelineError::Config("treebank is required".into()))
}

/// Train (or load) every stage and persist the models under the config's
/// model directory.
pub fn build(cfg: &PipelineConfig) -> Result<(Pipeline, BuildLog), PipelineError> {
    cfg.validate()?;
    let mut log = BuildLog::default();
    let mut rd = Reader { cfg, log: &mut log };

    let treebank = match &cfg.treebank {
        Some(p) if cfg.mode == Mode::FewShot => Some(rd.conllu(p, "treebank")?),
        _ => None,
    };

    let segmenter = if let Some(p) = &cfg.segmenter.model {
        segment::read_model(&rd.read(p)?).map_err(stage("segmenter"))?
    } else if let Some(p) = &cfg.segmenter.train_text {
        segment::train_boundary_model(&rd.read(p)?, PunktParams::default())
    } else {
        segment::train_boundary_model(&need_treebank(treebank.as_ref())?.raw_text(), PunktParams::default())
    };
    let tagger = tagger_stage(cfg, &mut rd, treebank.as_ref(), cfg.seed)?;
    let morph = morph_stage(cfg, &mut rd)?;
    let parser = parser_stage(cfg, &mut rd, treebank.as_ref(), cfg.seed)?;

    let pipeline = Pipeline { segmenter, tagger, morph, gate_morph: cfg.morph.gate, parser };
    log.files_written = pipeline.save(&cfg.model_dir())?;
    Ok((pipeline, log))
}

/// Cross-validate the tagging, morphology and parsing stages of `cfg` on
/// `tb`, starting from gold tokenization. Stages the config trains on a
/// treebank are retrained on each fold's training split (the config's own
/// treebank path is ignored); the other stages are trained once from their
/// configured resources and shared by every fold.
pub fn cross_validate_config(
    cfg: &PipelineConfig,
    tb: &Treebank,
    k: usize,
    seed: u64,
) -> Result<CvReport, PipelineError> {
    let mut log = BuildLog::default();
    let mut rd = Reader { cfg, log: &mut log };
    let fixed_tagger = match cfg.tagger.source {
        TaggerSource::Treebank => None,
        _ => Some(tagger_stage(cfg, &mut rd, None, seed)?),
    };
    let fixed_parser = match cfg.parser.source {
        ParserSource::Treebank | ParserSource::TreebankAugment => None,
        _ => Some(parser_stage(cfg, &mut rd, None, seed)?),
    };
    let morph = morph_stage(cfg, &mut rd)?;
    let train = |train: &Treebank, fold_seed: u64| -> Result<(TaggerModel, ParserModel), PipelineError> {
        let mut log = BuildLog::default();
        let mut rd = Reader { cfg, log: &mut log };
        let tagger = match &fixed_tagger {
            Some(t) => t.clone(),
            None => tagger_stage(cfg, &mut rd, Some(train), fold_seed)?,
        };
        let parser = match &fixed_parser {
            Some(p) => p.clone(),
            None => parser_stage(cfg, &mut rd, Some(train), fold_seed)?,
        };
        Ok((tagger, parser))
    };
    let annotate = |(tagger, parser): &(TaggerModel, ParserModel), held: &Treebank| {
        let out = held
            .iter()
            .map(|s| {
                let mut s = learn::tag(&s.stripped(), tagger);
                if let Some(t) = &morph {
                    s = morph::annotate_sentence(&s, t, cfg.morph.gate);
                }
                learn::parse(&s, parser)
            })
            .collect();
        Ok::<_, PipelineError>(Treebank::from_sentences("cv", out))
    };
    cross_validate(tb, k, seed, train, annotate).map_err(stage("cross-validation"))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, PipelineError> {
    fs::write(&path, text).map_err(|e| PipelineError::Io { path: path.clone(), message: e.to_string() })?;
    Ok(path)
}

impl Pipeline {
    /// Write every model into `dir`; returns the files written.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
        let mut out = vec![
            write(dir.join(SEGMENTER_FILE), &segment::write_model(&self.segmenter))?,
            write(dir.join(TAGGER_FILE), &self.tagger.to_text())?,
            write(dir.join(PARSER_FILE), &self.parser.to_text())?,
        ];
        let morph_path = dir.join(MORPH_FILE);
        match &self.morph {
            Some(t) => out.push(write(morph_path, &morph::write_transducer(t))?),
            None if morph_path.exists() => {
                fs::remove_file(&morph_path)
                    .map_err(|e| PipelineError::Io { path: morph_path.clone(), message: e.to_string() })?;
            }
            None => {}
        }
        Ok(out)
    }

    /// Load the models a previous `build` wrote.
    pub fn load(cfg: &PipelineConfig) -> Result<Pipeline, PipelineError> {
        let dir = cfg.model_dir();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| PipelineError::Io { path, message: e.to_string() })
        };
        let morph_path = dir.join(MORPH_FILE);
        let morph = if morph_path.exists() {
            Some(morph::read_transducer(&read(MORPH_FILE)?).map_err(stage("morphology"))?)
        } else {
            None
        };
        Ok(Pipeline {
            segmenter: segment::read_model(&read(SEGMENTER_FILE)?).map_err(stage("segmenter"))?,
            tagger: TaggerModel::from_text(&read(TAGGER_FILE)?).map_err(stage("tagger"))?,
            morph,
            gate_morph: cfg.morph.gate,
            parser: ParserModel::from_text(&read(PARSER_FILE)?).map_err(stage("parser"))?,
        })
    }

    /// Load persisted models when all are present, otherwise build.
    pub fn load_or_build(cfg: &PipelineConfig) -> Result<Pipeline, PipelineError> {
        let dir = cfg.model_dir();
        if [SEGMENTER_FILE, TAGGER_FILE, PARSER_FILE].iter().all(|f| dir.join(f).exists()) {
            Self::load(cfg)
        } else {
            build(cfg).map(|(p, _)| p)
        }
    }

    pub fn run_stages(&self, raw_text: &str) -> Result<Stages, PipelineError> {
        let tokenized = segment::segment_to_treebank(raw_text, &self.segmenter);
        let map = |tb: &Treebank, f: &dyn Fn(&crate::AnnotatedSentence) -> crate::AnnotatedSentence| {
            Treebank::from_sentences(tb.source_name.clone(), tb.iter().map(f).collect())
        };
        let tagged = map(&tokenized, &|s| learn::tag(s, &self.tagger));
        let analyzed = match &self.morph {
            Some(t) => map(&tagged, &|s| morph::annotate_sentence(s, t, self.gate_morph)),
            None => tagged.clone(),
        };
        let parsed = map(&analyzed, &|s| learn::parse(s, &self.parser));
        for (i, s) in parsed.iter().enumerate() {
            if let Some(v) = s.validate_tree().first() {
                return Err(PipelineError::Stage { stage: "parser", message: format!("sentence {}: {v}", i + 1) });
            }
        }
        Ok(Stages { tokenized, tagged, analyzed, parsed })
    }

    pub fn run(&self, raw_text: &str) -> Result<Treebank, PipelineError> {
        self.run_stages(raw_text).map(|s| s.parsed)
    }

    /// Several documents in parallel; output order follows input order.
    pub fn run_many(&self, docs: &[String]) -> Result<Vec<Treebank>, PipelineError> {
        docs.par_iter().map(|d| self.run(d)).collect()
    }
}

impl Stages {
    /// Write each stage as `<prefix>.<stage>.conllu`.
    pub fn write_all(&self, prefix: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        let name = |stage: &str| {
            let mut p = prefix.as_os_str().to_owned();
            p.push(format!(".{stage}.conllu"));
            PathBuf::from(p)
        };
        [("tokenized", &self.tokenized), ("tagged", &self.tagged), ("analyzed", &self.analyzed), ("parsed", &self.parsed)]
            .into_iter()
            .map(|(stage, tb)| write(name(stage), &write_conllu(tb)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
mode = "zero_shot"
[segmenter]
train_text = "raw.txt"
[tagger]
source = "converted"
corpus = "tagged.txt"
tag_map = "map.tsv"
[parser]
source = "projected"
corpus = "projected.conllu"
"#;

    fn cfg(text: &str) -> Result<PipelineConfig, PipelineError> {
        PipelineConfig::from_toml(text, Path::new("/tmp"))
    }

    #[test]
    fn zero_shot_rejects_treebank_sources() {
        assert!(cfg(BASE).is_ok());
        let with_tb = format!("treebank = \"tb.conllu\"\n{BASE}");
        assert!(matches!(cfg(&with_tb), Err(PipelineError::ModeViolation(_))));
        let tb_parser = BASE.replace("source = \"projected\"", "source = \"treebank\"");
        let err = cfg(&tb_parser).unwrap_err();
        assert!(err.to_string().starts_with("mode violation"), "{err}");
    }

    #[test]
    fn missing_fields_are_reported() {
        let no_map = BASE.replace("tag_map = \"map.tsv\"\n", "");
        assert!(matches!(cfg(&no_map), Err(PipelineError::Config(m)) if m.contains("tag_map")));
        let few = BASE.replace("zero_shot", "few_shot").replace("source = \"projected\"", "source = \"treebank+augment\"");
        assert!(matches!(cfg(&few), Err(PipelineError::Config(m)) if m.contains("treebank")));
        assert!(cfg("mode = \"sideways\"").is_err());
    }

    #[test]
    fn paths_resolve_against_the_config_directory() {
        let c = cfg(BASE).unwrap();
        assert_eq!(c.model_dir(), Path::new("/tmp/models"));
        assert_eq!(c.resolve(Path::new("/abs")), Path::new("/abs"));
    }
}
