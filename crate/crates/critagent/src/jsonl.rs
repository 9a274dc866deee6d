//! Line-delimited JSON persistence: one record per line, no trailing blank
//! lines, stable field order so repeated runs produce identical bytes.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

pub fn to_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

pub fn from_line<T: DeserializeOwned>(line: &str) -> Result<T> {
    Ok(serde_json::from_str(line)?)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    for item in items {
        writeln!(out, "{}", to_line(item)?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(out, "{}", to_line(item)?)?;
    Ok(())
}

/// Reads every non-blank line. The error names the offending line number so a
/// corrupt record in a large file is findable.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| crate::error::Error::InvalidData {
            kind: "jsonl record",
            reason: format!("{}:{}: {e}", path.display(), idx + 1),
        })?;
        items.push(item);
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Criterion, Source};

    #[test]
    fn roundtrip_preserves_struct() {
        let c = Criterion::new("the response should rhyme", Source::Llm);
        let line = to_line(&c).unwrap();
        let back: Criterion = from_line(&line).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn write_then_read_skips_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let items = vec![
            Criterion::new("a", Source::Id),
            Criterion::new("b", Source::Id),
        ];
        write_jsonl(&path, &items).unwrap();
        // Sneak in a blank line; readers must tolerate it.
        let mut raw = std::fs::read_to_string(&path).unwrap();
        raw.push('\n');
        std::fs::write(&path, raw).unwrap();
        let back: Vec<Criterion> = read_jsonl(&path).unwrap();
        assert_eq!(back, items);
    }

    #[test]
    fn corrupt_line_error_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"text\":\"ok\",\"source\":\"ID\"}\nnot json\n").unwrap();
        let err = read_jsonl::<Criterion>(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "got: {err}");
    }
}
