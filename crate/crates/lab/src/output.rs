//! Tables, CSV emission and the run manifest. Every file is written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

/// What an experiment produces: named tables and acceptance predicates.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self, kind: &str) -> String {
        let mut s = format!("experiment: {kind}\n");
        for c in &self.checks {
            s += &format!("[{}] {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &self.notes {
            s += &format!("note: {n}\n");
        }
        s += &format!("overall: {}\n", if self.pass() { "PASS" } else { "FAIL" });
        s
    }

    pub fn write(&self, dir: &Path, kind: &str) -> Result<()> {
        for (name, t) in &self.tables {
            write_atomic(&dir.join(name), &t.to_csv()?)?;
        }
        write_atomic(&dir.join("summary.txt"), self.summary(kind).as_bytes())
    }
}

pub const MANIFEST: &str = "manifest.txt";
const SEPARATOR: &str = "---\n";

/// Version stamp and command, then the canonical configuration.
pub fn manifest_text(kind: &str, canonical: &str) -> String {
    format!("displace {}\ncommand = {kind}\n{SEPARATOR}{canonical}", env!("CARGO_PKG_VERSION"))
}

pub struct Manifest {
    pub version: String,
    pub kind: String,
    pub config: String,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some((head, config)) = text.split_once(SEPARATOR) else {
        bail!("{} is not a run manifest", path.display());
    };
    let mut lines = head.lines();
    let version = lines.next().and_then(|l| l.strip_prefix("displace ")).map(str::to_string);
    let kind = lines.next().and_then(|l| l.strip_prefix("command = ")).map(str::to_string);
    match (version, kind) {
        (Some(version), Some(kind)) => Ok(Manifest { version, kind, config: config.to_string() }),
        _ => bail!("{} has a malformed header", path.display()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_round_trips_floats() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![fmt(0.1), "x,y".into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "a,b\n0.1,\"x,y\"\n");
        assert_eq!(fmt(1e-300).parse::<f64>().unwrap(), 1e-300);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST);
        write_atomic(&path, manifest_text("ids", "seed = 3\n").as_bytes()).unwrap();
        let m = read_manifest(&path).unwrap();
        assert_eq!((m.kind.as_str(), m.config.as_str()), ("ids", "seed = 3\n"));
    }
}
