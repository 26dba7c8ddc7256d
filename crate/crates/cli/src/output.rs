use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};

use crate::RunArgs;

#[derive(Debug)]
pub enum CliError {
    Lib(mapbound::Error),
    Usage(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<mapbound::Error> for CliError {
    fn from(e: mapbound::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// The seed to use, announcing it on stderr when it was not given.
pub fn resolve_seed(run: &RunArgs) -> CliResult<u64> {
    match (run.seed, run.reproducible) {
        (Some(s), _) => Ok(s),
        (None, true) => Err(CliError::Usage("--reproducible requires --seed".into())),
        (None, false) => {
            let s: u64 = rand::random();
            eprintln!("seed: {s}");
            Ok(s)
        }
    }
}

/// Print a result as JSON (or flattened CSV) and store it under `--out`.
pub fn emit(run: &RunArgs, name: &str, mut value: Value) -> CliResult<()> {
    if !run.reproducible {
        if let Value::Object(m) = &mut value {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            m.insert("timestamp".into(), Value::from(secs));
        }
    }
    let text = if run.csv { to_csv(&value) } else { serde_json::to_string_pretty(&value)? + "\n" };
    print!("{text}");
    if let Some(dir) = &run.out {
        fs::create_dir_all(dir)?;
        let ext = if run.csv { "csv" } else { "json" };
        fs::write(dir.join(format!("{name}.{ext}")), &text)?;
    }
    Ok(())
}

/// `key,value` lines for every scalar leaf, keys joined with dots.
fn to_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(&key(k), v, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&key(&i.to_string()), v, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}
