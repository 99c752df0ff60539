//! Append-only per-sample records, one line each: `tag index payload`.
//!
//! A run appends every finished sample; a resumed run reloads the file and
//! only computes what is missing. A torn final line is dropped on load.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct SampleCache {
    path: PathBuf,
    records: HashMap<(String, u64), String>,
    file: File,
}

impl SampleCache {
    /// Opens `path`, discarding earlier records unless `resume` is set.
    pub fn open(path: &Path, resume: bool) -> Result<Self> {
        let mut records = HashMap::new();
        if resume && path.exists() {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let complete = match text.rfind('\n') {
                Some(i) => &text[..=i],
                None => "",
            };
            for line in complete.lines() {
                let mut it = line.splitn(3, ' ');
                if let (Some(tag), Some(idx), Some(payload)) = (it.next(), it.next(), it.next()) {
                    if let Ok(idx) = idx.parse() {
                        records.insert((tag.to_string(), idx), payload.to_string());
                    }
                }
            }
            if complete.len() != text.len() {
                crate::output::write_atomic(path, complete.as_bytes())?;
            }
        } else {
            File::create(path).with_context(|| format!("creating {}", path.display()))?;
        }
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(SampleCache { path: path.to_path_buf(), records, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, tag: &str, idx: u64) -> Option<&str> {
        self.records.get(&(tag.to_string(), idx)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, tag: &str, idx: u64, payload: &str) -> Result<()> {
        debug_assert!(!tag.contains(' ') && !payload.contains('\n'));
        writeln!(self.file, "{tag} {idx} {payload}")?;
        self.file.flush()?;
        self.records.insert((tag.to_string(), idx), payload.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reload_and_torn_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.cache");
        {
            let mut c = SampleCache::open(&path, false).unwrap();
            c.append("ids", 0, "1 2 3").unwrap();
            c.append("ids", 1, "4 5 6").unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "ids 2 7 8").unwrap();
        drop(f);
        let c = SampleCache::open(&path, true).unwrap();
        assert_eq!(c.get("ids", 1), Some("4 5 6"));
        assert_eq!(c.get("ids", 2), None);
        assert_eq!(c.len(), 2);
        let fresh = SampleCache::open(&path, false).unwrap();
        assert!(fresh.is_empty());
    }
}
