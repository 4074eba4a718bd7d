use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cascade::config::Config;
use cascade::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the effective configuration as written to `config.toml`.
    pub config_hash: String,
    pub created_unix: u64,
    pub cascade_version: String,
    pub command_line: Vec<String>,
}

/// Written as `manifest.toml` next to every command's outputs. The embedded
/// `config.toml` and the command line reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// `None` when the built-in experiment preset was used.
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub pipeline: String,
    pub seed: u64,
    pub paper_exact: bool,
    pub files: Vec<String>,
    pub provenance: Provenance,
}

pub fn config_hash(config: &Config) -> String {
    Sha256::digest(config.to_toml_string().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn is_empty_dir(path: &Path) -> bool {
    fs::read_dir(path).map(|mut d| d.next().is_none()).unwrap_or(false)
}

/// An explicit `--out` that already holds files is refused without
/// `--force`. The default `runs/<pipeline>-s<seed>-<hash>` gets a numeric
/// suffix instead.
pub fn choose_dir(out: Option<&Path>, pipeline: &str, config: &Config, force: bool) -> Result<PathBuf> {
    if let Some(out) = out {
        if out.exists() && !is_empty_dir(out) && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
        return Ok(out.to_path_buf());
    }
    let stem = format!("{pipeline}-s{}-{}", config.experiment.seed, &config_hash(config)[..8]);
    let base = Path::new("runs").join(&stem);
    if force || !base.exists() {
        return Ok(base);
    }
    Ok((2..)
        .map(|k| Path::new("runs").join(format!("{stem}-{k}")))
        .find(|p| !p.exists())
        .expect("unbounded suffixes"))
}

/// Output directory of one command, collecting the names of what it writes.
pub struct Output {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
        Ok(())
    }

    pub fn write_toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = toml::to_string(value).map_err(|e| Error::OutOfRange(format!("cannot serialize {name}: {e}")))?;
        self.write(name, text)
    }

    pub fn finish(
        mut self,
        config: &Config,
        config_path: Option<&Path>,
        pipeline: &str,
        paper_exact: bool,
    ) -> Result<PathBuf> {
        self.write("config.toml", config.to_toml_string())?;
        let manifest = RunManifest {
            config_path: config_path.map(Path::to_path_buf),
            output_dir: self.dir.clone(),
            pipeline: pipeline.to_string(),
            seed: config.experiment.seed,
            paper_exact,
            files: self.files.clone(),
            provenance: Provenance {
                config_hash: config_hash(config),
                created_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                cascade_version: env!("CARGO_PKG_VERSION").to_string(),
                command_line: std::env::args().collect(),
            },
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::OutOfRange(e.to_string()))?;
        fs::write(self.dir.join("manifest.toml"), text)?;
        Ok(self.dir)
    }
}
