//! Carrying POS tags and dependency arcs across word alignments.

use std::collections::BTreeMap;

use super::align::{align, AlignmentLink, LexTable, ParallelPair};
use super::mst::{decode_single_root, WeightedDigraph};
use super::ProjectError;
use crate::delex::{HeadTag, Labeler};
use crate::treebank::{AnnotatedSentence, Treebank};
use crate::upos::Upos;

/// One source language's view of a target sentence, for tag projection.
#[derive(Clone, Copy, Debug)]
pub struct PosGroup<'a> {
    pub pair: &'a ParallelPair,
    pub links: &'a [AlignmentLink],
    /// Per source token: tag and confidence in (0, 1].
    pub tags: &'a [Option<(Upos, f64)>],
}

/// One source language's view of a target sentence, for tree projection.
#[derive(Clone, Copy, Debug)]
pub struct TreeGroup<'a> {
    pub pair: &'a ParallelPair,
    pub links: &'a [AlignmentLink],
    /// Per source token: head id (0 for the root), 1-based.
    pub heads: &'a [Option<usize>],
}

fn same_target<'a>(targets: impl Iterator<Item = &'a ParallelPair>) -> Result<usize, ProjectError> {
    let mut expected: Option<&Vec<String>> = None;
    for pair in targets {
        match expected {
            None => expected = Some(&pair.target_tokens),
            Some(t) if *t == pair.target_tokens => {}
            Some(_) => return Err(ProjectError::TargetMismatch),
        }
    }
    Ok(expected.map_or(0, Vec::len))
}

fn check_link(link: &AlignmentLink, pair: &ParallelPair) -> Result<(), ProjectError> {
    if link.src_index >= pair.source_tokens.len() || link.tgt_index >= pair.target_tokens.len() {
        return Err(ProjectError::LinkOutOfRange {
            src: link.src_index,
            tgt: link.tgt_index,
        });
    }
    Ok(())
}

/// For each target token, the tag with the highest summed confidence over
/// all links from all sources. Ties go to the alphabetically first tag;
/// tokens without links stay unset.
pub fn project_pos(groups: &[PosGroup]) -> Result<Vec<Option<Upos>>, ProjectError> {
    let n = same_target(groups.iter().map(|g| g.pair))?;
    let mut sums: Vec<BTreeMap<Upos, f64>> = vec![BTreeMap::new(); n];
    for g in groups {
        for link in g.links {
            check_link(link, g.pair)?;
            if let Some(Some((tag, conf))) = g.tags.get(link.src_index) {
                *sums[link.tgt_index].entry(*tag).or_insert(0.0) += conf;
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|tags| {
            // BTreeMap iterates alphabetically; keep the first maximum.
            tags.into_iter()
                .fold(None, |best: Option<(Upos, f64)>, (tag, s)| match best {
                    Some((_, b)) if b >= s => best,
                    _ => Some((tag, s)),
                })
                .map(|(tag, _)| tag)
        })
        .collect())
}

/// Candidate target arcs. A source arc `h -> d` with links `h -> h'`
/// (prob p1) and `d -> d'` (prob p2), `h' != d'`, adds `p1 * p2` to the
/// target arc `h' -> d'`; the source root's links add their probability to
/// `0 -> d'`. Weights are summed over sources.
pub fn build_edge_graph(groups: &[TreeGroup]) -> Result<WeightedDigraph, ProjectError> {
    let n = same_target(groups.iter().map(|g| g.pair))?;
    let mut graph = WeightedDigraph::new(n);
    for g in groups {
        let mut by_source: BTreeMap<usize, Vec<&AlignmentLink>> = BTreeMap::new();
        for link in g.links {
            check_link(link, g.pair)?;
            by_source.entry(link.src_index).or_default().push(link);
        }
        for (d, head) in g.heads.iter().enumerate() {
            let Some(head) = *head else { continue };
            let Some(dep_links) = by_source.get(&d) else { continue };
            if head == 0 {
                for l in dep_links {
                    graph.add(0, l.tgt_index + 1, l.prob);
                }
                continue;
            }
            let Some(head_links) = by_source.get(&(head - 1)) else { continue };
            for hl in head_links {
                for dl in dep_links {
                    if hl.tgt_index != dl.tgt_index {
                        graph.add(hl.tgt_index + 1, dl.tgt_index + 1, hl.prob * dl.prob);
                    }
                }
            }
        }
    }
    Ok(graph)
}

/// Label decoded arcs with the delexicalized labeler. Arcs from the root
/// are `root`; a token whose own or head tag is unknown gets the labeler's
/// fallback label.
pub fn predict_labels_delex(heads: &[usize], upos: &[Option<Upos>], labeler: &Labeler) -> Vec<String> {
    heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            if h == 0 {
                return "root".to_owned();
            }
            match (upos.get(i).copied().flatten(), upos.get(h - 1).copied().flatten()) {
                (Some(dep), Some(head)) => labeler.predict(dep, HeadTag::Tag(head)),
                _ => labeler.fallback_label.clone(),
            }
        })
        .collect()
}

/// Mean over sources of the fraction of target tokens with at least one link.
pub fn score_coverage(per_source: &BTreeMap<String, (ParallelPair, Vec<AlignmentLink>)>) -> Result<f64, ProjectError> {
    if per_source.is_empty() {
        return Err(ProjectError::NoSources);
    }
    let n = same_target(per_source.values().map(|(p, _)| p))?;
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = per_source
        .values()
        .map(|(_, links)| {
            let mut linked = vec![false; n];
            for l in links {
                if let Some(slot) = linked.get_mut(l.tgt_index) {
                    *slot = true;
                }
            }
            linked.iter().filter(|&&x| x).count() as f64 / n as f64
        })
        .sum();
    Ok(total / per_source.len() as f64)
}

/// Indices of the `k` highest scores, ties to the earlier index, returned
/// in corpus order.
pub fn select_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Per-token source tags with their confidence.
pub type SourceTags = Vec<Option<(Upos, f64)>>;

/// Tags (with `PosConf=` from MISC, default 1) and heads of a source
/// sentence, in the shapes the projection functions take.
pub fn source_annotation(s: &AnnotatedSentence) -> (SourceTags, Vec<Option<usize>>) {
    let tags = s
        .tokens
        .iter()
        .map(|t| {
            let conf = t
                .misc_value("PosConf")
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|c| *c > 0.0 && *c <= 1.0)
                .unwrap_or(1.0);
            t.upos.map(|u| (u, conf))
        })
        .collect();
    let heads = s.tokens.iter().map(|t| t.head).collect();
    (tags, heads)
}

/// A source language: its side of the parallel text, its annotations
/// (one sentence per parallel line) and its trained translation table.
#[derive(Clone, Debug)]
pub struct SourceCorpus {
    pub lang: String,
    pub pairs: Vec<ParallelPair>,
    pub annotations: Treebank,
    pub table: LexTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectWhat {
    Pos,
    Tree,
    Both,
}

/// A projected target sentence and its alignment coverage.
#[derive(Clone, Debug)]
pub struct Projected {
    pub sentence: AnnotatedSentence,
    pub coverage: f64,
    pub links: Vec<(String, Vec<AlignmentLink>)>,
}

/// Project every parallel sentence from all sources. Sources must have the
/// same number of lines and identical target sides. Arcs are decoded with
/// a single root; labels come from `labeler` when given (`dep` otherwise).
pub fn project_corpus(
    sources: &[SourceCorpus],
    what: ProjectWhat,
    labeler: Option<&Labeler>,
    floor: f64,
) -> Result<Vec<Projected>, ProjectError> {
    let Some(first) = sources.first() else {
        return Err(ProjectError::NoSources);
    };
    let lines = first.pairs.len();
    for src in sources {
        if src.pairs.len() != lines || src.annotations.len() != lines {
            return Err(ProjectError::LineCount {
                lang: src.lang.clone(),
                pairs: src.pairs.len(),
                annotated: src.annotations.len(),
                expected: lines,
            });
        }
    }
    let mut out = Vec::with_capacity(lines);
    for i in 0..lines {
        let mut links = Vec::new();
        let mut anns = Vec::new();
        for src in sources {
            let pair = &src.pairs[i];
            let ann = &src.annotations.sentences[i];
            if ann.len() != pair.source_tokens.len() {
                return Err(ProjectError::SourceLength { line: i + 1, lang: src.lang.clone() });
            }
            links.push(align(pair, &src.table, floor));
            anns.push(source_annotation(ann));
        }
        let target = &first.pairs[i].target_tokens;
        let mut sentence = AnnotatedSentence::from_forms(target);
        sentence.set_comment("sent_id", &(i + 1).to_string());
        if matches!(what, ProjectWhat::Pos | ProjectWhat::Both) {
            let groups: Vec<PosGroup> = sources
                .iter()
                .zip(&links)
                .zip(&anns)
                .map(|((src, l), (tags, _))| PosGroup { pair: &src.pairs[i], links: l, tags })
                .collect();
            for (tok, tag) in sentence.tokens.iter_mut().zip(project_pos(&groups)?) {
                tok.upos = tag;
            }
        }
        if matches!(what, ProjectWhat::Tree | ProjectWhat::Both) && !target.is_empty() {
            let groups: Vec<TreeGroup> = sources
                .iter()
                .zip(&links)
                .zip(&anns)
                .map(|((src, l), (_, heads))| TreeGroup { pair: &src.pairs[i], links: l, heads })
                .collect();
            let heads = decode_single_root(&build_edge_graph(&groups)?)?;
            let upos: Vec<Option<Upos>> = sentence.tokens.iter().map(|t| t.upos).collect();
            let labels = match labeler {
                Some(l) => predict_labels_delex(&heads, &upos, l),
                None => heads.iter().map(|&h| if h == 0 { "root" } else { "dep" }.to_owned()).collect(),
            };
            for ((tok, h), label) in sentence.tokens.iter_mut().zip(heads).zip(labels) {
                tok.head = Some(h);
                tok.deprel = Some(label);
            }
        }
        let per_source: BTreeMap<String, (ParallelPair, Vec<AlignmentLink>)> = sources
            .iter()
            .zip(&links)
            .map(|(src, l)| (src.lang.clone(), (src.pairs[i].clone(), l.clone())))
            .collect();
        let coverage = score_coverage(&per_source)?;
        sentence.set_comment("coverage", &format!("{coverage:.4}"));
        let id = (i + 1).to_string();
        out.push(Projected {
            sentence,
            coverage,
            links: sources.iter().zip(links).map(|(s, l)| (format!("{id}:{}", s.lang), l)).collect(),
        });
    }
    Ok(out)
}

/// Keep sentences where at least `min_tagged` of the tokens received a tag.
/// Untagged tokens stay in the kept sentences; the tagger skips them.
pub fn filter_for_tagger(tb: &Treebank, min_tagged: f64) -> Treebank {
    let sentences = tb
        .sentences
        .iter()
        .filter(|s| {
            let tagged = s.tokens.iter().filter(|t| t.upos.is_some()).count();
            !s.is_empty() && tagged as f64 >= min_tagged * s.len() as f64
        })
        .cloned()
        .collect();
    Treebank::from_sentences(tb.source_name.clone(), sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::project::mst::decode_mst;

    fn link(s: usize, t: usize, p: f64) -> AlignmentLink {
        AlignmentLink { src_index: s, tgt_index: t, prob: p }
    }

    #[test]
    fn pos_voting() {
        let pair = ParallelPair::new("a b c", "x", "en");
        let one = [link(0, 0, 1.0)];
        let tags = [Some((Upos::Noun, 0.7)), Some((Upos::Noun, 0.6)), Some((Upos::Verb, 0.9))];
        let g = [PosGroup { pair: &pair, links: &one, tags: &tags }];
        assert_eq!(project_pos(&g).unwrap(), vec![Some(Upos::Noun)]);

        let pairs: Vec<ParallelPair> = ["a", "b", "c"].iter().map(|s| ParallelPair::new(s, "x", "en")).collect();
        let groups: Vec<PosGroup> = pairs
            .iter()
            .zip(&tags)
            .map(|(p, t)| PosGroup { pair: p, links: &one, tags: std::slice::from_ref(t) })
            .collect();
        assert_eq!(project_pos(&groups).unwrap(), vec![Some(Upos::Noun)]);

        let none: [AlignmentLink; 0] = [];
        let g = [PosGroup { pair: &pair, links: &none, tags: &tags }];
        assert_eq!(project_pos(&g).unwrap(), vec![None]);
    }

    #[test]
    fn pos_ties_are_alphabetical() {
        let pair = ParallelPair::new("a b", "x", "en");
        let links = [link(0, 0, 1.0), link(1, 0, 1.0)];
        let tags = [Some((Upos::Verb, 0.5)), Some((Upos::Adj, 0.5))];
        let g = [PosGroup { pair: &pair, links: &links, tags: &tags }];
        assert_eq!(project_pos(&g).unwrap(), vec![Some(Upos::Adj)]);
    }

    #[test]
    fn target_mismatch_is_an_error() {
        let a = ParallelPair::new("a", "x", "en");
        let b = ParallelPair::new("a", "y", "id");
        let tags = [Some((Upos::Noun, 1.0))];
        let g = [
            PosGroup { pair: &a, links: &[], tags: &tags },
            PosGroup { pair: &b, links: &[], tags: &tags },
        ];
        assert_eq!(project_pos(&g).unwrap_err(), ProjectError::TargetMismatch);
    }

    #[test]
    fn identity_edges_reproduce_the_tree() {
        let pair = ParallelPair::new("w1 w2 w3 w4", "w1 w2 w3 w4", "en");
        let links: Vec<AlignmentLink> = (0..4).map(|i| link(i, i, 1.0)).collect();
        let heads = [Some(2), Some(0), Some(4), Some(2)];
        let g = build_edge_graph(&[TreeGroup { pair: &pair, links: &links, heads: &heads }]).unwrap();
        assert_eq!(decode_mst(&g).unwrap(), vec![2, 0, 4, 2]);
        let empty = build_edge_graph(&[TreeGroup { pair: &pair, links: &[], heads: &heads }]).unwrap();
        assert!(empty.arcs.is_empty());
    }

    #[test]
    fn heavier_votes_win() {
        // Source 1 says 2 -> 1 with 0.9 * 0.9; source 2 says 3 -> 1 with 0.5 * 0.5.
        let pair = ParallelPair::new("a b c", "x y z", "en");
        let l1 = [link(0, 0, 0.9), link(1, 1, 0.9), link(2, 2, 1.0)];
        let l2 = [link(0, 0, 0.5), link(1, 1, 1.0), link(2, 2, 0.5)];
        let h1 = [Some(2), Some(0), Some(2)];
        let h2 = [Some(3), Some(0), Some(2)];
        let g = build_edge_graph(&[
            TreeGroup { pair: &pair, links: &l1, heads: &h1 },
            TreeGroup { pair: &pair, links: &l2, heads: &h2 },
        ])
        .unwrap();
        assert!((g.weight(2, 1).unwrap() - 0.81).abs() < 1e-12);
        assert!((g.weight(3, 1).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(decode_mst(&g).unwrap()[0], 2);
    }

    #[test]
    fn coverage_and_selection() {
        let pair = ParallelPair::new("a b", "x y", "en");
        let mut m = BTreeMap::new();
        m.insert("en".to_owned(), (pair.clone(), vec![link(0, 0, 1.0), link(1, 1, 1.0)]));
        assert_eq!(score_coverage(&m).unwrap(), 1.0);
        m.insert("id".to_owned(), (pair.clone(), vec![link(0, 0, 1.0)]));
        assert_eq!(score_coverage(&m).unwrap(), 0.75);
        let mut none = BTreeMap::new();
        none.insert("en".to_owned(), (pair, vec![]));
        assert_eq!(score_coverage(&none).unwrap(), 0.0);
        assert_eq!(score_coverage(&BTreeMap::new()).unwrap_err(), ProjectError::NoSources);

        let scores = [0.5, 0.9, 0.5, 0.1];
        assert_eq!(select_top_k(&scores, 0), Vec::<usize>::new());
        assert_eq!(select_top_k(&scores, 2), vec![0, 1]);
        assert_eq!(select_top_k(&scores, 10), vec![0, 1, 2, 3]);
    }

    #[test]
    fn tagger_filter_drops_sparse_sentences() {
        let mut a = AnnotatedSentence::from_forms(&["x", "y"]);
        a.tokens[0].upos = Some(Upos::Noun);
        let mut b = AnnotatedSentence::from_forms(&["x", "y", "z"]);
        b.tokens[0].upos = Some(Upos::Noun);
        let tb = Treebank::from_sentences("p", vec![a, b]);
        assert_eq!(filter_for_tagger(&tb, 0.5).len(), 1);
    }
}
