//! JSONL dataset ingestion: one [`QuestionCase`] per line.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};
use crate::model::QuestionCase;

/// Parses every non-blank line. Fails on the first malformed line; case
/// invariants are not checked here (see [`validate_dataset`]).
pub fn load_jsonl(path: &Path) -> Result<Vec<QuestionCase>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut cases = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case = serde_json::from_str(&line).map_err(|source| HedgeError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        cases.push(case);
    }
    Ok(cases)
}

/// Loads and validates, failing on the first invalid case.
pub fn load_valid(path: &Path) -> Result<Vec<QuestionCase>> {
    let cases = load_jsonl(path)?;
    for c in &cases {
        c.validate()?;
    }
    Ok(cases)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| HedgeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cases: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Hard violations become errors; duplicate ids and mixed pool sizes are warnings.
pub fn validate_dataset(cases: &[QuestionCase]) -> ValidationReport {
    let mut report = ValidationReport {
        cases: cases.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for c in cases {
        for v in c.violations() {
            report.errors.push(format!("case `{}`: {v}", c.id));
        }
        if !seen.insert(c.id.as_str()) {
            report.warnings.push(format!("duplicate case id `{}`", c.id));
        }
    }
    let sizes: HashSet<usize> = cases.iter().map(QuestionCase::n).collect();
    if sizes.len() > 1 {
        let mut sizes: Vec<_> = sizes.into_iter().collect();
        sizes.sort_unstable();
        report
            .warnings
            .push(format!("pool sizes differ across cases: {sizes:?}"));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::case;

    #[test]
    fn round_trip_and_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let cases = vec![case("a", "x", &["y"], &["z"], 0), case("b", "x", &["y"], &["z"], 1)];
        write_jsonl(&path, &cases).unwrap();
        assert_eq!(load_jsonl(&path).unwrap(), cases);

        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("\n{\"id\": 3}\n");
        fs::write(&path, text).unwrap();
        match load_jsonl(&path) {
            Err(HedgeError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validation_collects_errors_and_warnings() {
        let mut bad = case("bad", "x", &["y", "y"], &["z"], 0);
        bad.baseline.mean_logprob = 0.5;
        let cases = vec![
            case("a", "x", &["y"], &["z"], 0),
            case("a", "x", &["y"], &["z"], 1),
            bad,
        ];
        let r = validate_dataset(&cases);
        assert!(!r.is_ok());
        assert_eq!(r.errors.len(), 2);
        assert!(r.errors.iter().all(|e| e.contains("`bad`")));
        assert_eq!(r.warnings.len(), 2);
    }
}
