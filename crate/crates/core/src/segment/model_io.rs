//! Text serialization of boundary models.
//!
//! ```text
//! udkit-punkt 1
//! param abbrev 0.3
//! param colloc 7.88
//! param starter 30
//! total_tokens 1400
//! [abbreviations]
//! dr
//! [collocations]
//! ##number##<TAB>katao
//! [sentence_starters]
//! he
//! [ortho_context]
//! he<TAB>8
//! [type_counts]
//! dr.<TAB>200
//! ```
//!
//! Sets are listed one entry per line in sorted order, so the same model
//! always serializes to the same bytes.

use std::fmt::Write as _;

use thiserror::Error;

use super::punkt::{BoundaryModel, PunktParams};

const MAGIC: &str = "udkit-punkt 1";

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("boundary model line {line}: {message}")]
pub struct ModelFormatError {
    pub line: usize,
    pub message: String,
}

pub fn write_model(model: &BoundaryModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "param abbrev {}", model.params.abbrev);
    let _ = writeln!(out, "param colloc {}", model.params.colloc);
    let _ = writeln!(out, "param starter {}", model.params.starter);
    let _ = writeln!(out, "total_tokens {}", model.total_tokens);
    out.push_str("[abbreviations]\n");
    for a in &model.abbreviations {
        let _ = writeln!(out, "{a}");
    }
    out.push_str("[collocations]\n");
    for (a, b) in &model.collocations {
        let _ = writeln!(out, "{a}\t{b}");
    }
    out.push_str("[sentence_starters]\n");
    for s in &model.sentence_starters {
        let _ = writeln!(out, "{s}");
    }
    out.push_str("[ortho_context]\n");
    for (t, flags) in &model.ortho_context {
        let _ = writeln!(out, "{t}\t{flags}");
    }
    out.push_str("[type_counts]\n");
    for (t, c) in &model.type_counts {
        let _ = writeln!(out, "{t}\t{c}");
    }
    out
}

pub fn read_model(text: &str) -> Result<BoundaryModel, ModelFormatError> {
    let mut model = BoundaryModel {
        params: PunktParams::default(),
        ..Default::default()
    };
    let mut section = "";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => {
            return Err(ModelFormatError {
                line: 1,
                message: format!("expected header {MAGIC:?}"),
            })
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |message: String| ModelFormatError { line: line_no, message };
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = match &line[1..line.len() - 1] {
                s @ ("abbreviations" | "collocations" | "sentence_starters" | "ortho_context" | "type_counts") => s,
                other => return Err(err(format!("unknown section {other:?}"))),
            };
            continue;
        }
        let parse_num = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
        match section {
            "" => {
                let parts: Vec<&str> = line.split(' ').collect();
                match parts.as_slice() {
                    ["param", name, value] => {
                        let value: f64 = value.parse().map_err(|_| err(format!("bad value {value:?}")))?;
                        match *name {
                            "abbrev" => model.params.abbrev = value,
                            "colloc" => model.params.colloc = value,
                            "starter" => model.params.starter = value,
                            other => return Err(err(format!("unknown parameter {other:?}"))),
                        }
                    }
                    ["total_tokens", n] => model.total_tokens = parse_num(n)?,
                    _ => return Err(err(format!("unexpected line {line:?}"))),
                }
            }
            "abbreviations" => {
                model.abbreviations.insert(line.to_owned());
            }
            "sentence_starters" => {
                model.sentence_starters.insert(line.to_owned());
            }
            _ => {
                let (a, b) = line
                    .split_once('\t')
                    .ok_or_else(|| err("expected two tab-separated fields".into()))?;
                match section {
                    "collocations" => {
                        model.collocations.insert((a.to_owned(), b.to_owned()));
                    }
                    "ortho_context" => {
                        let flags = b.parse::<u8>().map_err(|e| err(e.to_string()))?;
                        model.ortho_context.insert(a.to_owned(), flags);
                    }
                    _ => {
                        model.type_counts.insert(a.to_owned(), parse_num(b)?);
                    }
                }
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::punkt::train_boundary_model;
    use super::*;

    #[test]
    fn round_trip() {
        let text = "Si G. Santos ay dumating noong 2017. Umalis si Engr. Reyes. ".repeat(30);
        let model = train_boundary_model(&text, PunktParams::default());
        let serialized = write_model(&model);
        let back = read_model(&serialized).unwrap();
        assert_eq!(back, model);
        assert_eq!(write_model(&back), serialized);
    }

    #[test]
    fn rejects_bad_header() {
        assert_eq!(read_model("nope\n").unwrap_err().line, 1);
        let err = read_model("udkit-punkt 1\n[bogus]\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
