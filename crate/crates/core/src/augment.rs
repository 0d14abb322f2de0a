//! Sentence morphing: new training trees made by reordering or cropping the
//! predicate, subject and object spans of a clause.

use std::fmt;
use std::ops::RangeInclusive;

use crate::treebank::{AnnotatedSentence, Treebank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordOrder {
    Vso,
    Svo,
    Vos,
}

impl WordOrder {
    pub const ALL: [WordOrder; 3] = [WordOrder::Vso, WordOrder::Svo, WordOrder::Vos];

    fn slots(self) -> [Slot; 3] {
        match self {
            WordOrder::Vso => [Slot::Pred, Slot::Subj, Slot::Obj],
            WordOrder::Svo => [Slot::Subj, Slot::Pred, Slot::Obj],
            WordOrder::Vos => [Slot::Pred, Slot::Obj, Slot::Subj],
        }
    }
}

impl fmt::Display for WordOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordOrder::Vso => "VSO",
            WordOrder::Svo => "SVO",
            WordOrder::Vos => "VOS",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Pred,
    Subj,
    Obj,
}

/// Token id ranges of the three clause constituents, plus the punctuation
/// hanging off the root at either edge of the sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseSpans {
    pub pred: RangeInclusive<usize>,
    pub subj: RangeInclusive<usize>,
    pub obj: RangeInclusive<usize>,
    pub order: WordOrder,
    pub leading: Vec<usize>,
    pub trailing: Vec<usize>,
}

impl ClauseSpans {
    fn range(&self, slot: Slot) -> RangeInclusive<usize> {
        match slot {
            Slot::Pred => self.pred.clone(),
            Slot::Subj => self.subj.clone(),
            Slot::Obj => self.obj.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Eligibility {
    Eligible(ClauseSpans),
    Ineligible(&'static str),
}

impl Eligibility {
    pub fn spans(&self) -> Option<&ClauseSpans> {
        match self {
            Eligibility::Eligible(s) => Some(s),
            Eligibility::Ineligible(_) => None,
        }
    }
}

fn is_relation(s: &AnnotatedSentence, id: usize, rel: &str) -> bool {
    s.token(id).universal_deprel() == Some(rel)
}

fn contiguous(ids: &[usize]) -> Option<RangeInclusive<usize>> {
    let (&first, &last) = (ids.first()?, ids.last()?);
    (last - first + 1 == ids.len()).then_some(first..=last)
}

/// Decide whether a sentence can be morphed and, if so, where its spans are.
pub fn find_eligible(s: &AnnotatedSentence) -> Eligibility {
    if !s.heads_complete() || !s.validate_tree().is_empty() {
        return Eligibility::Ineligible("not a valid tree");
    }
    let Some(root) = s.root() else {
        return Eligibility::Ineligible("no root");
    };
    let deps = s.dependents(root);
    let Some(&nsubj) = deps.iter().find(|&&d| is_relation(s, d, "nsubj")) else {
        return Eligibility::Ineligible("no nsubj");
    };
    let Some(&obj) = deps.iter().find(|&&d| is_relation(s, d, "obj")) else {
        return Eligibility::Ineligible("no obj");
    };

    // Root-attached punctuation at the sentence edges stays where it is.
    let edge_punct = |id: usize| {
        let t = s.token(id);
        t.head == Some(root) && is_relation(s, id, "punct") && s.dependents(id).is_empty()
    };
    let n = s.len();
    let leading: Vec<usize> = (1..=n).take_while(|&id| edge_punct(id)).collect();
    let mut trailing: Vec<usize> = (leading.len() + 1..=n).rev().take_while(|&id| edge_punct(id)).collect();
    trailing.reverse();

    let subj_ids = s.subtree(nsubj);
    let obj_ids = s.subtree(obj);
    let pred_ids: Vec<usize> = (1..=n)
        .filter(|id| {
            !leading.contains(id) && !trailing.contains(id) && !subj_ids.contains(id) && !obj_ids.contains(id)
        })
        .collect();
    let (Some(pred), Some(subj), Some(obj)) =
        (contiguous(&pred_ids), contiguous(&subj_ids), contiguous(&obj_ids))
    else {
        return Eligibility::Ineligible("non-contiguous span");
    };

    let mut starts = [(*pred.start(), Slot::Pred), (*subj.start(), Slot::Subj), (*obj.start(), Slot::Obj)];
    starts.sort_by_key(|&(start, _)| start);
    let slots = starts.map(|(_, slot)| slot);
    let Some(order) = WordOrder::ALL.into_iter().find(|o| o.slots() == slots) else {
        return Eligibility::Ineligible("unsupported word order");
    };
    Eligibility::Eligible(ClauseSpans { pred, subj, obj, order, leading, trailing })
}

fn refresh_text(s: &mut AnnotatedSentence) {
    s.comments.retain(|c| c.split_once('=').is_none_or(|(k, _)| k.trim() != "text"));
    let text = s.raw_text();
    s.set_comment("text", text.trim_end());
}

/// The sentence in the given word order.
pub fn reorder(s: &AnnotatedSentence, spans: &ClauseSpans, order: WordOrder) -> AnnotatedSentence {
    let mut perm = spans.leading.clone();
    for slot in order.slots() {
        perm.extend(spans.range(slot));
    }
    perm.extend(&spans.trailing);
    let mut out = s.renumber(&perm).expect("clause spans partition the sentence");
    refresh_text(&mut out);
    out
}

/// The two other word orders, in VSO, SVO, VOS sequence.
pub fn rotate(s: &AnnotatedSentence, spans: &ClauseSpans) -> Vec<(WordOrder, AnnotatedSentence)> {
    WordOrder::ALL
        .into_iter()
        .filter(|&o| o != spans.order)
        .map(|o| (o, reorder(s, spans, o)))
        .collect()
}

/// Predicate plus subject, then predicate plus object, keeping the
/// edge punctuation.
pub fn crop(s: &AnnotatedSentence, spans: &ClauseSpans) -> Vec<(&'static str, AnnotatedSentence)> {
    [("nsubj", spans.subj.clone()), ("obj", spans.obj.clone())]
        .into_iter()
        .map(|(arg, range)| {
            let keep: Vec<usize> = spans
                .leading
                .iter()
                .copied()
                .chain(spans.pred.clone())
                .chain(range)
                .chain(spans.trailing.iter().copied())
                .collect();
            let mut out = s.subsentence(&keep).expect("crop keeps every head on the path to the root");
            refresh_text(&mut out);
            (arg, out)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AugmentMode {
    #[default]
    Rotate,
    RotateCrop,
}

/// Counts from one augmentation run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AugmentStats {
    pub eligible: usize,
    pub morphs: usize,
    pub skipped_morphs: usize,
}

/// The original sentences followed by every morph. Sentences that are
/// themselves morphs (they carry a `morph` comment) are not morphed again.
pub fn augment_treebank(tb: &Treebank, mode: AugmentMode) -> (Treebank, AugmentStats) {
    let mut out = tb.sentences.clone();
    let mut stats = AugmentStats::default();
    for (idx, s) in tb.iter().enumerate() {
        if s.comment_value("morph").is_some() {
            stats.skipped_morphs += 1;
            continue;
        }
        let Eligibility::Eligible(spans) = find_eligible(s) else {
            continue;
        };
        stats.eligible += 1;
        let src = s.sent_id().map(str::to_owned).unwrap_or_else(|| format!("s{}", idx + 1));
        let mut emit = |mut m: AnnotatedSentence, op: &str, what: String| {
            m.set_comment("sent_id", &format!("{src}-{op}-{what}"));
            m.set_comment("morph", &format!("{src}:{op}:{what}"));
            out.push(m);
            stats.morphs += 1;
        };
        for (order, m) in rotate(s, &spans) {
            emit(m, "rotate", order.to_string());
        }
        if mode == AugmentMode::RotateCrop {
            for (arg, m) in crop(s, &spans) {
                emit(m, "crop", arg.to_owned());
            }
        }
    }
    (Treebank::from_sentences(tb.source_name.clone(), out), stats)
}
