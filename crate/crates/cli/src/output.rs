//! Output directory handling and the provenance header written by every run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Overrides `output.dir` of the config.
pub const OUT_ENV: &str = "KAWLAB_OUT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// sha256 of the effective configuration as echoed.
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let hash = Sha256::digest(cfg.to_toml().as_bytes());
        Self {
            tool: "kawlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
            seed: cfg.seed,
        }
    }

    /// `# kawlab 0.1.0 sample config-sha256=... seed=...`
    pub fn header(&self) -> String {
        format!(
            "# {} {} {} config-sha256={} seed={}",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn prepare(cfg: &ExperimentConfig, flag: Option<&Path>) -> std::io::Result<Self> {
        let root = match (flag, std::env::var_os(OUT_ENV)) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(env)) => PathBuf::from(env),
            (None, None) => PathBuf::from(&cfg.output.dir),
        };
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn create(&self, name: &str) -> std::io::Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    /// Writes `provenance.json` and the effective configuration.
    pub fn write_preamble(&self, prov: &Provenance, cfg: &ExperimentConfig) -> std::io::Result<()> {
        let mut w = self.create("provenance.json")?;
        serde_json::to_writer_pretty(&mut w, prov)?;
        writeln!(w)?;
        w.flush()?;
        let mut w = self.create("config.effective.toml")?;
        writeln!(w, "{}", prov.header())?;
        w.write_all(cfg.to_toml().as_bytes())?;
        w.flush()
    }

    /// JSON document `{ provenance, ...body }`.
    pub fn write_json<T: Serialize>(&self, name: &str, prov: &Provenance, body: &T) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &Doc { provenance: prov, body })?;
        writeln!(w)?;
        w.flush()
    }
}
