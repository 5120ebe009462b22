//! Atomic result files with an embedded configuration header.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, TaskKind};

pub const VERSION: &str = concat!("qnn ", env!("CARGO_PKG_VERSION"));

/// `# `-prefixed lines naming the version, the task and every resolved
/// setting.
pub fn comment_header(task: TaskKind, cfg: &ExperimentConfig) -> String {
    let mut out = format!("# {VERSION}\n# task = {}\n", task.name());
    for (k, v) in cfg.resolved() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so `path` is either absent, the old file, or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV body produced by `body`, preceded by the comment header.
pub fn write_csv(
    path: &Path,
    task: TaskKind,
    cfg: &ExperimentConfig,
    body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    let mut buf = comment_header(task, cfg).into_bytes();
    body(&mut buf)?;
    write_atomic(path, &buf)
}

/// JSON object `value` extended with `version`, `task` and `config` keys
/// (JSON has no comments).
pub fn write_json(path: &Path, task: TaskKind, cfg: &ExperimentConfig, value: serde_json::Value) -> Result<()> {
    let mut obj = match value {
        serde_json::Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    obj.insert("version".into(), VERSION.into());
    obj.insert("task".into(), task.name().into());
    let config: serde_json::Map<String, serde_json::Value> =
        cfg.resolved().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
    obj.insert("config".into(), config.into());
    let mut bytes = serde_json::to_vec_pretty(&serde_json::Value::Object(obj))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
