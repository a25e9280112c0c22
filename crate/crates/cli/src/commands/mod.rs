pub mod firm;
pub mod model;
pub mod simulate;
pub mod svar;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{self, CliResult, RunInfo};
use crate::RunArgs;

/// Output directory plus the files written so far, for the manifest.
pub struct Artifacts {
    pub dir: PathBuf,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl Artifacts {
    pub fn create(args: &RunArgs, configured: Option<&Path>) -> CliResult<Self> {
        let dir = config::out_dir(args.out_dir.as_deref(), configured);
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            outputs: Vec::new(),
            notes: Vec::new(),
        })
    }

    /// Path for `name`, recorded as an output.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        std::fs::write(self.file(name), contents)?;
        Ok(())
    }

    pub fn finish<T: Serialize>(
        self,
        command: &str,
        seed: u64,
        config: &T,
        started: Instant,
    ) -> CliResult<()> {
        let run = RunInfo {
            command: command.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
            notes: self.notes,
        };
        let manifest = config::write_manifest(&self.dir, config, &run)?;
        for o in &self.outputs {
            println!("wrote {}", self.dir.join(o).display());
        }
        println!("wrote {}", manifest.display());
        Ok(())
    }
}

/// Directory that relative input paths are resolved against.
pub fn config_dir(args: &RunArgs) -> Option<PathBuf> {
    args.config
        .as_ref()
        .map(|c| c.parent().map(Path::to_path_buf).unwrap_or_default())
}
