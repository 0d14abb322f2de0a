use std::fmt::{Display, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{score, EvalError, Metric, MetricsReport};
use crate::treebank::Treebank;

/// Which fold each sentence belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, held out)` treebanks for one fold, both in corpus order.
    pub fn split(&self, tb: &Treebank, fold: usize) -> (Treebank, Treebank) {
        let (held, train): (Vec<_>, Vec<_>) = tb
            .sentences
            .iter()
            .zip(&self.assignments)
            .partition(|(_, &f)| f == fold);
        let collect = |v: Vec<(&crate::AnnotatedSentence, &usize)>| {
            Treebank::from_sentences(tb.source_name.clone(), v.into_iter().map(|(s, _)| s.clone()).collect())
        };
        (collect(train), collect(held))
    }
}

/// Shuffle sentence indices with the seed, then deal them round-robin.
pub fn make_folds(tb: &Treebank, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let n = tb.len();
    if k < 2 || k > n {
        return Err(EvalError::BadFolds { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, idx) in order.into_iter().enumerate() {
        assignments[idx] = pos % k;
    }
    Ok(FoldPlan { k, assignments })
}

/// Box-plot statistics; quartiles interpolate linearly between ranks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn five_number(values: &[f64]) -> FiveNumber {
    if values.is_empty() {
        return FiveNumber::default();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    FiveNumber {
        min: v[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub plan: FoldPlan,
    pub folds: Vec<MetricsReport>,
    pub las: FiveNumber,
}

impl CvReport {
    /// Mean F1 per metric over folds.
    pub fn mean_f1(&self, m: Metric) -> f64 {
        self.folds.iter().map(|r| r.get(m).f1()).sum::<f64>() / self.folds.len() as f64
    }
}

/// Train on k-1 folds, annotate the held-out fold and score it. Folds run
/// in parallel; each fold's trainer gets the seed `seed + fold`.
pub fn cross_validate<M, E, T, A>(
    tb: &Treebank,
    k: usize,
    seed: u64,
    train_fn: T,
    annotate_fn: A,
) -> Result<CvReport, EvalError>
where
    E: Display,
    T: Fn(&Treebank, u64) -> Result<M, E> + Sync,
    A: Fn(&M, &Treebank) -> Result<Treebank, E> + Sync,
{
    let plan = make_folds(tb, k, seed)?;
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| {
            let fail = |e: E| EvalError::Fold { fold: fold + 1, message: e.to_string() };
            let (train, held) = plan.split(tb, fold);
            let model = train_fn(&train, seed.wrapping_add(fold as u64)).map_err(fail)?;
            let sys = annotate_fn(&model, &held).map_err(fail)?;
            score(&held, &sys).map_err(|e| EvalError::Fold { fold: fold + 1, message: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let las: Vec<f64> = folds.iter().map(|r| r.las.f1()).collect();
    Ok(CvReport { plan, las: five_number(&las), folds })
}

/// Per-fold metric rows, then the LAS summary block.
pub fn cv_tsv(report: &CvReport) -> String {
    let mut out = String::from("fold\tmetric\tprecision\trecall\tf1\n");
    for (i, r) in report.folds.iter().enumerate() {
        for m in Metric::ALL {
            let s = r.get(m);
            let _ = writeln!(out, "{}\t{m}\t{:.2}\t{:.2}\t{:.2}", i + 1, s.precision(), s.recall(), s.f1());
        }
    }
    out.push_str("\nstatistic\tLAS\n");
    let l = report.las;
    for (name, v) in [("min", l.min), ("q1", l.q1), ("median", l.median), ("q3", l.q3), ("max", l.max), ("mean", l.mean)] {
        let _ = writeln!(out, "{name}\t{v:.2}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::AnnotatedSentence;

    fn corpus(n: usize) -> Treebank {
        let sentences = (0..n)
            .map(|i| {
                let mut s = AnnotatedSentence::from_forms(&[format!("w{i}"), "x".to_owned()]);
                s.tokens[0].head = Some(0);
                s.tokens[0].deprel = Some("root".into());
                s.tokens[1].head = Some(1);
                s.tokens[1].deprel = Some("dep".into());
                s
            })
            .collect();
        Treebank::from_sentences("c", sentences)
    }

    #[test]
    fn fold_sizes_for_94() {
        let plan = make_folds(&corpus(94), 10, 7).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [9, 9, 9, 9, 9, 9, 10, 10, 10, 10]);
        assert_eq!(plan, make_folds(&corpus(94), 10, 7).unwrap());
        assert!(make_folds(&corpus(5), 1, 0).is_err());
        assert!(make_folds(&corpus(5), 6, 0).is_err());
        assert_eq!(make_folds(&corpus(5), 5, 0).unwrap().fold_sizes(), [1; 5]);
    }

    #[test]
    fn copy_gold_scores_perfectly() {
        let tb = corpus(20);
        let r = cross_validate(&tb, 4, 1, |_, _| Ok::<_, String>(()), |_, held| Ok(held.clone())).unwrap();
        assert_eq!(r.folds.len(), 4);
        assert_eq!((r.las.min, r.las.max), (100.0, 100.0));
        assert!(cv_tsv(&r).contains("median\t100.00"));
    }

    #[test]
    fn errors_carry_the_fold() {
        let err = cross_validate(&corpus(4), 2, 0, |_, _| Err::<(), _>("boom"), |_, h| Ok(h.clone())).unwrap_err();
        assert!(matches!(err, EvalError::Fold { message, .. } if message == "boom"));
    }

    #[test]
    fn quartiles_interpolate() {
        let f = five_number(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((f.min, f.q1, f.median, f.q3, f.max, f.mean), (1.0, 1.75, 2.5, 3.25, 4.0, 2.5));
    }
}
