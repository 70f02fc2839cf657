//! File plumbing shared by the subcommands.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::Vec2;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
}

/// Writes `bytes` next to `path` and renames into place, so readers never
/// observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Positions and values of a `x,y,u1,u2` field file.
pub type FieldRows = Vec<(Vec2<f64>, Vec2<f64>)>;

pub fn parse_field_csv(text: &str, path: &str) -> Result<FieldRows, InputError> {
    let bad = |line: usize, msg: String| InputError::Malformed {
        path: path.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim() == "x,y,u1,u2" => {}
        Some((i, h)) => return Err(bad(i + 1, format!("expected header x,y,u1,u2, found {h:?}"))),
    }
    lines
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(i + 1, e.to_string()))?;
            match v[..] {
                [x, y, u1, u2] if v.iter().all(|t| t.is_finite()) => Ok((Vec2::new(x, y), Vec2::new(u1, u2))),
                [_, _, _, _] => Err(bad(i + 1, "non-finite value".into())),
                _ => Err(bad(i + 1, format!("expected 4 columns, found {}", v.len()))),
            }
        })
        .collect()
}

pub fn read_field_csv(path: &Path) -> Result<FieldRows, InputError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| InputError::Read {
        path: p.clone(),
        source,
    })?;
    parse_field_csv(&text, &p)
}
