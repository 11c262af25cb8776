//! Output directory handling. Every file is written to a temporary sibling
//! and renamed into place, so an interrupted run never leaves a partial
//! file under its final name.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub const TOOL: &str = "nfbeam";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` through `fill`, then renames it into place.
    pub fn write_with(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.{}.tmp", std::process::id()));
        let result = (|| -> anyhow::Result<()> {
            let file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            let mut w = BufWriter::new(file);
            fill(&mut w)?;
            w.flush().with_context(|| format!("writing {}", tmp.display()))?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, &target).with_context(|| format!("renaming into {}", target.display()))?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish<C: Serialize, R: Serialize>(mut self, command: &str, config: &C, results: Option<&R>) -> anyhow::Result<()> {
        let manifest = Manifest {
            tool: TOOL,
            version: VERSION,
            command,
            config,
            outputs: self.written.clone(),
            results,
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    results: Option<&'a R>,
}

/// `inf` for infinite values, shortest round-trip otherwise.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}
