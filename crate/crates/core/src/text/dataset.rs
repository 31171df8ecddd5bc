use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    pub examples: Vec<LabeledExample>,
    pub labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(examples: Vec<LabeledExample>, labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("label catalog is empty".into()));
        }
        let mut seen = HashSet::new();
        for ex in &examples {
            if ex.label >= labels.len() {
                return Err(Error::Data(format!(
                    "example `{}` has label {} but the catalog has {} entries",
                    ex.id,
                    ex.label,
                    labels.len()
                )));
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::Data(format!("duplicate example id `{}`", ex.id)));
            }
        }
        Ok(LabeledDataset { examples, labels })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn golds(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Parses `id<TAB>label<TAB>text` lines. A first line whose label field
    /// is literally `label` is treated as a header.
    ///
    /// Without a supplied catalog, labels that are all non-negative integers
    /// are read as class indices (`0..=max`); otherwise the catalog follows
    /// order of first appearance.
    pub fn parse_tsv(content: &str, catalog: Option<&[String]>) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(3, '\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!(
                        "expected 3 tab-separated fields (id, label, text), found {}",
                        fields.len()
                    ),
                });
            }
            if rows.is_empty() && i == 0 && fields[1] == "label" {
                continue;
            }
            rows.push((
                i + 1,
                fields[0].to_string(),
                fields[1].to_string(),
                fields[2].to_string(),
            ));
        }
        if rows.is_empty() {
            return Err(Error::Data("no examples".into()));
        }

        let labels: Vec<String> = match catalog {
            Some(c) => c.to_vec(),
            None => {
                let numeric: Option<Vec<usize>> = rows.iter().map(|r| r.2.parse().ok()).collect();
                match numeric {
                    Some(nums) => {
                        let max = nums.into_iter().max().unwrap_or(0).max(1);
                        (0..=max).map(|n| n.to_string()).collect()
                    }
                    None => {
                        let mut seen = Vec::<String>::new();
                        for r in &rows {
                            if !seen.contains(&r.2) {
                                seen.push(r.2.clone());
                            }
                        }
                        seen
                    }
                }
            }
        };

        let mut examples = Vec::with_capacity(rows.len());
        for (line, id, label, text) in rows {
            let idx = labels
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| Error::Data(format!("line {line}: label `{label}` is not in the catalog {labels:?}")))?;
            examples.push(LabeledExample { id, text, label: idx });
        }
        Self::new(examples, labels)
    }

    pub fn load(path: &Path, catalog: Option<&[String]>) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&content, catalog)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tlabel\ttext\n");
        for ex in &self.examples {
            out.push_str(&format!("{}\t{}\t{}\n", ex.id, self.labels[ex.label], ex.text));
        }
        out
    }

    /// Seeded shuffle, then a 4:1 train/validation cut with
    /// `val = max(1, floor(n / 5))`.
    pub fn split_train_val(&self, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        let n = self.len();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 examples to split, have {n}")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_val = (n / 5).max(1);
        let pick = |idx: &[usize]| LabeledDataset {
            examples: idx.iter().map(|&i| self.examples[i].clone()).collect(),
            labels: self.labels.clone(),
        };
        Ok((pick(&order[n_val..]), pick(&order[..n_val])))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn dataset(n: usize) -> LabeledDataset {
        let examples = (0..n)
            .map(|i| LabeledExample {
                id: i.to_string(),
                text: format!("text {i}"),
                label: i % 2,
            })
            .collect();
        LabeledDataset::new(examples, vec!["0".into(), "1".into()]).unwrap()
    }

    #[test]
    fn parse_examples() {
        let d = LabeledDataset::parse_tsv("17\t1\ttook my med\n", None).unwrap();
        assert_eq!(d.examples[0].id, "17");
        assert_eq!(d.examples[0].label, 1);
        assert_eq!(d.examples[0].text, "took my med");

        assert!(matches!(LabeledDataset::parse_tsv("", None), Err(Error::Data(m)) if m == "no examples"));

        let err = LabeledDataset::parse_tsv("1\t0\tok\n2\t1\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn header_crlf_and_named_labels() {
        let d = LabeledDataset::parse_tsv("id\tlabel\ttext\r\na\tyes\tx y\r\nb\tno\tz\r\nc\tyes\tw\r\n", None).unwrap();
        assert_eq!(d.labels, vec!["yes", "no"]);
        assert_eq!(d.golds(), vec![0, 1, 0]);
        assert_eq!(d.examples[0].text, "x y");
    }

    #[test]
    fn supplied_catalog() {
        let cat = vec!["no".to_string(), "yes".to_string()];
        let d = LabeledDataset::parse_tsv("a\tyes\tx\n", Some(&cat)).unwrap();
        assert_eq!(d.golds(), vec![1]);
        assert!(matches!(
            LabeledDataset::parse_tsv("a\tmaybe\tx\n", Some(&cat)),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(LabeledDataset::parse_tsv("a\t0\tx\na\t1\ty\n", None).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = LabeledDataset::load(Path::new("/definitely/not/here.tsv"), None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn split_sizes() {
        for (n, train, val) in [(10, 8, 2), (5, 4, 1), (7, 6, 1), (2, 1, 1)] {
            let (t, v) = dataset(n).split_train_val(3).unwrap();
            assert_eq!((t.len(), v.len()), (train, val), "n={n}");
        }
        assert!(matches!(dataset(1).split_train_val(0), Err(Error::Data(_))));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 2usize..200, seed in any::<u64>()) {
            let d = dataset(n);
            let (t, v) = d.split_train_val(seed).unwrap();
            prop_assert_eq!(t.len() + v.len(), n);
            let mut ids: Vec<String> = t.examples.iter().chain(&v.examples).map(|e| e.id.clone()).collect();
            ids.sort();
            let mut want: Vec<String> = d.examples.iter().map(|e| e.id.clone()).collect();
            want.sort();
            prop_assert_eq!(ids, want);
            let again = d.split_train_val(seed).unwrap();
            prop_assert_eq!(again.1, v);
        }
    }
}
