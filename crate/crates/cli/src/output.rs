use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// What a run produced, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub params_hash: String,
    pub params: Value,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub wedge_cli: &'static str,
    pub wedge_rbm: &'static str,
}

/// SHA-256 of the canonical JSON form (sorted keys, no whitespace).
pub fn params_hash(v: &Value) -> String {
    let mut h = Sha256::new();
    h.update(canonical(v).as_bytes());
    hex::encode(h.finalize())
}

fn canonical(v: &Value) -> String {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", Value::String((*k).clone()), canonical(&m[*k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub struct Output {
    pub out_dir: PathBuf,
    pub json: bool,
    pub files: Vec<PathBuf>,
    start: Instant,
}

impl Output {
    pub fn new(out_dir: PathBuf, json: bool) -> Self {
        Output {
            out_dir,
            json,
            files: Vec::new(),
            start: Instant::now(),
        }
    }

    /// Relative paths are taken inside the output directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    pub fn write(&mut self, p: &Path, bytes: &[u8]) -> Result<PathBuf, String> {
        let path = self.resolve(p);
        write_atomic(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_csv(&mut self, p: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| e.to_string();
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r.iter().map(|v| format!("{v}"))).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| e.to_string())?;
        self.write(p, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, p: &Path, v: &T) -> Result<PathBuf, String> {
        let s = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
        self.write(p, s.as_bytes())
    }

    /// Result on stdout: one line with `--json`, indented otherwise.
    pub fn emit<T: Serialize>(&self, v: &T) {
        let s = if self.json {
            serde_json::to_string(v)
        } else {
            serde_json::to_string_pretty(v)
        };
        println!("{}", s.expect("result serializes"));
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
