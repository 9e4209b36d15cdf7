//! Reading and writing samples in libsvm's sparse text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Parses `label idx:val ...` lines. Indices are 1-based; feature `idx - 1`
/// is set iff `val > threshold`, and the label is `+1` iff it is positive.
/// The number of features is the largest index seen.
pub fn parse_libsvm(text: &str, threshold: f64) -> Result<Sample> {
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("line is not empty");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad label `{label_tok}`")))?;
        let mut x = Vec::new();
        for tok in tokens {
            let (key, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected idx:val, got `{tok}`")))?;
            if key == "qid" {
                continue;
            }
            let j: usize = key
                .parse()
                .ok()
                .filter(|&j| j >= 1 && j <= u32::MAX as usize)
                .ok_or_else(|| Error::parse(line_no, format!("bad feature index `{key}`")))?;
            let v: f64 = val
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad value `{val}`")))?;
            n = n.max(j);
            if v > threshold {
                x.push((j - 1) as u32);
            }
        }
        instances.push(x);
        labels.push(if label > 0.0 { 1 } else { -1 });
    }
    Sample::new(n, instances, labels)
}

pub fn read_libsvm(path: impl AsRef<Path>, threshold: f64) -> Result<Sample> {
    parse_libsvm(&std::fs::read_to_string(path)?, threshold)
}

/// Writes the set features as `idx:1` with 1-based indices.
pub fn write_libsvm(sample: &Sample) -> String {
    let mut out = String::new();
    for (x, &y) in sample.instances().iter().zip(sample.labels()) {
        out.push_str(if y > 0 { "+1" } else { "-1" });
        for &j in x {
            let _ = write!(out, " {}:1", j + 1);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = parse_libsvm("+1 1:1 3:1\n", 0.5).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.dense(0), vec![1.0, 0.0, 1.0]);
        assert_eq!(s.label(0), 1);

        let s = parse_libsvm("-1 2:0.4\n", 0.5).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.dense(0), vec![0.0, 0.0]);
        assert_eq!(s.label(0), -1);
    }

    #[test]
    fn labels_and_thresholds() {
        let s = parse_libsvm("0 1:0.7\n2.5 1:0.5 2:0.51 qid:3\n# note\n\n", 0.5).unwrap();
        assert_eq!(s.labels(), &[-1, 1]);
        assert_eq!(s.instances(), &[vec![0], vec![1]]);
    }

    #[test]
    fn malformed_lines_report_position() {
        for bad in ["+1 1:1\n-1 x:1\n", "+1 1:1\n+1 0:1\n", "+1 1:1\nfoo 1:1\n", "+1 1:1\n+1 3\n"] {
            match parse_libsvm(bad, 0.5) {
                Err(Error::Parse { line: 2, .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let text = "+1 1:1 4:1\n-1 2:1\n+1\n-1 3:1 4:1\n";
        for t in [0.0, 0.5, 0.99] {
            let s = parse_libsvm(text, t).unwrap();
            assert_eq!(write_libsvm(&s), text);
            assert_eq!(parse_libsvm(&write_libsvm(&s), 0.5).unwrap(), s);
        }
    }
}
