//! Report plumbing shared by every command: the meta envelope and artifact
//! writing. JSON is emitted with sorted keys and a trailing newline so that
//! identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value as Json};

pub struct ReportCtx {
    pub out_dir: PathBuf,
    pub config_digest: String,
    pub value_mode: &'static str,
    pub seed: u64,
}

impl ReportCtx {
    /// Envelope embedded in every JSON report: the config digest, value
    /// mode, seed, and the decision rules the command applied.
    pub fn meta(&self, command: &str, rules: &[&str]) -> Json {
        json!({
            "command": command,
            "config_digest": self.config_digest,
            "value_mode": self.value_mode,
            "seed": self.seed,
            "rules": rules,
        })
    }

    pub fn write_json(&self, name: &str, body: &Json) -> Result<PathBuf, std::io::Error> {
        let mut text = serde_json::to_string_pretty(body).expect("report serializes");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, std::io::Error> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)?;
        Ok(path)
    }
}

pub fn display_path(p: &Path) -> String {
    p.display().to_string()
}
