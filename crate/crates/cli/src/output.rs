use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Where machine output goes.
///
/// With a path, JSON is written atomically (temp file then rename) and the
/// human summary goes to stdout. Without one, JSON goes to stdout and the
/// summary to stderr so the two streams never mix.
#[derive(Debug, Clone, Default)]
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink { path }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn emit(&self, json: &str, summary: &str) -> CliResult<()> {
        match &self.path {
            Some(path) => {
                write_atomic(path, json.as_bytes())?;
                print_lines(&mut std::io::stdout(), summary);
                println!("wrote {}", path.display());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(json.as_bytes())
                    .and_then(|_| if json.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))?;
                print_lines(&mut std::io::stderr(), summary);
            }
        }
        Ok(())
    }

    /// Prints a message on the summary stream.
    pub fn note(&self, message: &str) {
        if self.path.is_some() {
            print_lines(&mut std::io::stdout(), message);
        } else {
            print_lines(&mut std::io::stderr(), message);
        }
    }
}

fn print_lines<W: Write>(w: &mut W, text: &str) {
    if text.is_empty() {
        return;
    }
    let _ = writeln!(w, "{}", text.trim_end());
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}
