//! Command-line laboratory: configuration files, the per-sample cache,
//! CSV output and the experiments driving `displace-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};

use cache::SampleCache;
use config::Config;
use experiments::{Context, Kind, Stopped};
use output::{manifest_text, read_manifest, write_atomic, Outcome, MANIFEST};

pub const CACHE: &str = "samples.cache";

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Error = 2,
    Stopped = 3,
}

pub struct RunOptions {
    pub out: PathBuf,
    /// Continue the run recorded in `out`.
    pub resume: bool,
    pub threads: Option<usize>,
    /// Stop after computing this many new samples.
    pub stop_after: Option<usize>,
}

/// Results of a run, one entry per experiment.
pub struct Report {
    pub outcomes: Vec<(Kind, Outcome)>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.outcomes.iter().all(|(_, o)| o.pass())
    }

    pub fn status(&self) -> Status {
        if self.pass() {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

pub fn status_of(err: &anyhow::Error) -> Status {
    if err.downcast_ref::<Stopped>().is_some() {
        Status::Stopped
    } else {
        Status::Error
    }
}

/// Validates `cfg` before touching the file system, then runs `kind` into
/// `opts.out`.
pub fn run(kind: Kind, cfg: &Config, opts: &RunOptions) -> Result<Report> {
    let setup = cfg.validate()?;
    let canonical = cfg.canonical();
    let manifest = opts.out.join(MANIFEST);
    if opts.resume {
        check_manifest(&manifest, kind, &canonical)?;
    } else {
        std::fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    }
    write_atomic(&manifest, manifest_text(kind.as_str(), &canonical).as_bytes())?;
    let threads = opts.threads.unwrap_or(cfg.threads);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let mut budget = opts.stop_after;
    let kinds: Vec<Kind> = if kind == Kind::VerifyAll { Kind::EXPERIMENTS.to_vec() } else { vec![kind] };
    let mut outcomes = Vec::new();
    for k in kinds {
        let dir = if kind == Kind::VerifyAll { opts.out.join(k.as_str()) } else { opts.out.clone() };
        std::fs::create_dir_all(&dir)?;
        let mut ctx = Context {
            cfg,
            setup: &setup,
            cache: SampleCache::open(&dir.join(CACHE), opts.resume)?,
            pool: &pool,
            budget,
        };
        let out = experiments::run(k, &mut ctx).with_context(|| format!("experiment {k}"))?;
        budget = ctx.budget;
        out.write(&dir, k.as_str())?;
        outcomes.push((k, out));
    }
    if kind == Kind::VerifyAll {
        let mut s = String::new();
        for (k, o) in &outcomes {
            s += &format!("[{}] {k}\n", if o.pass() { "PASS" } else { "FAIL" });
        }
        write_atomic(&opts.out.join("summary.txt"), s.as_bytes())?;
    }
    Ok(Report { outcomes })
}

fn check_manifest(path: &Path, kind: Kind, canonical: &str) -> Result<()> {
    let m = read_manifest(path)?;
    if m.version != env!("CARGO_PKG_VERSION") {
        bail!("run was recorded by displace {}, this is {}", m.version, env!("CARGO_PKG_VERSION"));
    }
    if m.kind != kind.as_str() {
        bail!("run was a `{}` experiment, not `{kind}`", m.kind);
    }
    if m.config != canonical {
        bail!("configuration differs from the one recorded in {}", path.display());
    }
    Ok(())
}

/// Continues the run whose manifest is at `manifest`.
pub fn resume(manifest: &Path, threads: Option<usize>, stop_after: Option<usize>) -> Result<Report> {
    let m = read_manifest(manifest)?;
    let kind: Kind = m.kind.parse()?;
    let cfg = Config::parse(&m.config)?;
    let out = manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
    run(kind, &cfg, &RunOptions { out, resume: true, threads, stop_after })
}
