//! Run directory and `manifest.json`.
//!
//! The manifest lists every artifact with the parameters that produced it.
//! It carries no timestamps or host data, so identical commands and seeds
//! give byte-identical output.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use serde::Serialize;

use birat::output;
use birat::Result;

use crate::config::{Loaded, RunConfig};

#[derive(Serialize)]
struct Artifact {
    file: String,
    description: String,
}

pub struct Run {
    pub dir: PathBuf,
    command: String,
    map: serde_json::Value,
    config: RunConfig,
    params: serde_json::Value,
    artifacts: Vec<Artifact>,
}

impl Run {
    pub fn new(command: &str, cfg: &RunConfig, loaded: &Loaded) -> Result<Self> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Run {
            dir: cfg.out.clone(),
            command: command.to_string(),
            map: serde_json::json!({ "name": loaded.name, "source": loaded.source }),
            config: cfg.clone(),
            params: serde_json::Value::Object(Default::default()),
            artifacts: Vec::new(),
        })
    }

    /// Command-specific parameters recorded in the manifest.
    pub fn param(&mut self, key: &str, value: impl Serialize) {
        if let serde_json::Value::Object(m) = &mut self.params {
            m.insert(key.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        }
    }

    pub fn json<T: Serialize>(&mut self, file: &str, description: &str, value: &T) -> Result<()> {
        output::write_json(&self.dir.join(file), value)?;
        self.record(file, description);
        Ok(())
    }

    /// A buffered writer for `file`, recorded in the manifest.
    pub fn create(&mut self, file: &str, description: &str) -> Result<BufWriter<fs::File>> {
        let w = output::create_file(&self.dir.join(file))?;
        self.record(file, description);
        Ok(w)
    }

    fn record(&mut self, file: &str, description: &str) {
        self.artifacts.push(Artifact { file: file.to_string(), description: description.to_string() });
    }

    pub fn finish(self) -> Result<()> {
        let manifest = serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "map": self.map,
            "config": self.config,
            "params": self.params,
            "artifacts": self.artifacts,
        });
        output::write_json(&self.dir.join("manifest.json"), &manifest)?;
        println!("artifacts in {}", self.dir.display());
        Ok(())
    }
}
