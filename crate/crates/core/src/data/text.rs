//! Sentiment corpus: labeled TSV records, tokenizer and vocabulary.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::PAD_INDEX;

pub const OOV_INDEX: u32 = 1;

/// Lowercase and split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Token-to-index map. Index 0 is padding, 1 is out-of-vocabulary, and
/// the kept tokens take 2.. in order of decreasing frequency (ties broken
/// lexicographically).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub size: usize,
    pub index: HashMap<String, u32>,
}

impl Vocab {
    pub fn lookup(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(OOV_INDEX)
    }

    /// Token indices of `text`, truncated to `max_len` and right-padded.
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = tokenize(text).take(max_len).map(|t| self.lookup(&t)).collect();
        ids.resize(max_len, PAD_INDEX);
        ids
    }
}

pub fn build_vocab<'a>(corpus: impl IntoIterator<Item = &'a str>, vocab_size: usize) -> Result<Vocab> {
    if vocab_size < 3 {
        return Err(Error::Config(format!("vocab_size {vocab_size} leaves no room beyond the reserved indices")));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        for tok in tokenize(doc) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Data("corpus contains no tokens".into()));
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let index = ranked
        .into_iter()
        .take(vocab_size - 2)
        .enumerate()
        .map(|(i, (tok, _))| (tok, i as u32 + 2))
        .collect();
    Ok(Vocab { size: vocab_size, index })
}

/// One labeled document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub label: u8,
    pub text: String,
}

/// Parse `label<TAB>text` lines; labels must be 0 or 1. Blank lines are
/// skipped.
pub fn parse_tsv(contents: &str) -> Result<Vec<Record>> {
    contents
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let (label, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("line {}: missing tab separator", i + 1)))?;
            let label = match label.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Data(format!("line {}: label {other:?} is not 0 or 1", i + 1))),
            };
            Ok(Record { label, text: text.to_string() })
        })
        .collect()
}

pub fn read_tsv(path: &Path) -> Result<Vec<Record>> {
    let contents = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_tsv(&contents)
}

/// Render records back to TSV; tabs and newlines inside text become spaces.
pub fn format_tsv(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        let clean: String = r.text.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect();
        out.push_str(&format!("{}\t{}\n", r.label, clean));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_then_lexicographic() {
        let v = build_vocab(["a b a"], 4).unwrap();
        assert_eq!(v.index.len(), 2);
        assert_eq!(v.lookup("a"), 2);
        assert_eq!(v.lookup("b"), 3);

        let v = build_vocab(["y x y x"], 3).unwrap();
        assert_eq!(v.lookup("x"), 2);
        assert_eq!(v.lookup("y"), OOV_INDEX);
    }

    #[test]
    fn unknown_tokens_map_to_oov() {
        let v = build_vocab(["good movie"], 10).unwrap();
        assert_eq!(v.encode("terrible awful", 4), vec![1, 1, 0, 0]);
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        let toks: Vec<String> = tokenize("It's GREAT!!  10/10<br />").collect();
        assert_eq!(toks, ["it", "s", "great", "10", "10", "br"]);
    }

    #[test]
    fn encode_truncates_tail() {
        let v = build_vocab(["a b c d"], 10).unwrap();
        assert_eq!(v.encode("a b c d", 2).len(), 2);
        assert_eq!(v.encode("a b c d", 2), vec![v.lookup("a"), v.lookup("b")]);
    }

    #[test]
    fn vocab_errors() {
        assert!(matches!(build_vocab(["", "  ;; "], 10), Err(Error::Data(_))));
        assert!(matches!(build_vocab(["a"], 2), Err(Error::Config(_))));
    }

    #[test]
    fn tsv_roundtrip_and_errors() {
        let recs = vec![
            Record { label: 1, text: "loved\tit".into() },
            Record { label: 0, text: "meh".into() },
        ];
        let parsed = parse_tsv(&format_tsv(&recs)).unwrap();
        assert_eq!(parsed[0].text, "loved it");
        assert_eq!(parsed[1], recs[1]);
        assert!(parse_tsv("2\tbad label\n").is_err());
        assert!(parse_tsv("no tab here\n").is_err());
    }
}
