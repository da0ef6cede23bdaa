//! TOML config files, applied by splicing `--key=value` tokens in front of
//! the command-line flags. Every subcommand lets a repeated flag override
//! the earlier one, so flags win and config values go through exactly the
//! same parsing and validation.

use std::ffi::OsString;
use std::path::Path;

/// Global options that take a separate value token.
const GLOBAL_WITH_VALUE: [&str; 4] = ["--threads", "--config", "--out", "--format"];

/// Returns `argv` with the config file's values inserted right after the
/// subcommand name. Without `--config` the input comes back unchanged.
pub fn splice(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(cmd_at) = subcommand_index(&argv) else {
        return Ok(argv);
    };
    let cmd = argv[cmd_at].to_string_lossy().into_owned();
    let tokens = load(Path::new(&path), &cmd)?;
    let mut out = argv[..=cmd_at].to_vec();
    out.extend(tokens.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[cmd_at + 1..]);
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if !a.starts_with('-') {
            return Some(i);
        }
        if GLOBAL_WITH_VALUE.contains(&a.as_ref()) {
            i += 1;
        }
        i += 1;
    }
    None
}

fn load(path: &Path, cmd: &str) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("config {}: {e}", path.display()))?;
    let mut tokens = Vec::new();
    for (key, value) in &table {
        if !value.is_table() {
            tokens.push(token(key, value)?);
        }
    }
    if let Some(section) = table.get(cmd) {
        let section = section
            .as_table()
            .ok_or_else(|| format!("config key `{cmd}` must be a table"))?;
        for (key, value) in section {
            tokens.push(token(key, value)?);
        }
    }
    Ok(tokens)
}

fn token(key: &str, value: &toml::Value) -> Result<String, String> {
    let flag = key.replace('_', "-");
    if flag == "config" {
        return Err("a config file cannot name another config file".into());
    }
    Ok(format!("--{flag}={}", scalar(key, value)?))
}

fn scalar(key: &str, value: &toml::Value) -> Result<String, String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(x) => Ok(x.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(xs) => {
            let parts: Result<Vec<String>, String> = xs.iter().map(|x| scalar(key, x)).collect();
            Ok(parts?.join(","))
        }
        _ => Err(format!("config key `{key}`: unsupported value {value}")),
    }
}
