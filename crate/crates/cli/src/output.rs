use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ldpustat::io::fmt12;
use serde::Serialize;
use serde_json::Value;

/// Rounds every float in `v` to 12 significant digits; non-finite floats
/// are already `null` in JSON and become the strings `inf`/`-inf` only when
/// passed through [`num`].
pub fn round(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = fmt12(x).parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
        other => other,
    }
}

/// A float as JSON, with infinities spelled out.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        round(serde_json::json!(x))
    } else {
        Value::String(fmt12(x))
    }
}

pub fn to_json<T: Serialize>(x: &T) -> Result<Value> {
    Ok(round(serde_json::to_value(x)?))
}

/// Destination of a run's artifacts; without `--out` only stdout is used.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf) })
    }

    pub fn active(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` under the output directory, returning the file name.
    pub fn file(&self, name: &str, contents: &str) -> Result<Option<String>> {
        match &self.dir {
            None => Ok(None),
            Some(d) => {
                let path = d.join(name);
                fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
                Ok(Some(name.to_string()))
            }
        }
    }

    /// Prints `value` and, with `--out`, stores it as `name`.
    pub fn json(&self, name: &str, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        println!("{text}");
        self.file(name, &(text + "\n"))?;
        Ok(())
    }
}
