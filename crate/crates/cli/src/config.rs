//! `--config` files: `key=value` lines turned into flags that sit before the
//! ones given on the command line, so explicit flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use alquery::Error;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Parses a config file into flags. Blank lines and `#` comments are
/// skipped; `true` makes a bare switch and `false` drops it.
pub fn parse(text: &str) -> Result<Vec<OsString>, Error> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("config line {}: invalid key `{key}`", n + 1)));
        }
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{key}").into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

/// Returns `argv` with the flags from its `--config` file (if any) inserted
/// right after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read config {}: {e}", Path::new(&path).display()),
        ))
    })?;
    let flags = parse(&text)?;
    if argv.len() < 2 {
        return Ok(argv);
    }
    let mut out = Vec::with_capacity(argv.len() + flags.len());
    out.extend_from_slice(&argv[..2]);
    out.extend(flags);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}
