use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;
use wwdtn::plot::{render_svg, PlotSpec};
use wwdtn::table::Table;
use wwdtn::{Error, Result};

/// Writes `contents` to a temporary file beside `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// CSV to `out`, or to standard output when no path is given.
pub fn emit_csv(table: &Table, out: Option<&Path>) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Usage("refusing to write an empty table".into()));
    }
    let text = table.to_csv();
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn emit_svg(table: &Table, spec: &PlotSpec, out: &Path) -> Result<()> {
    write_atomic(out, render_svg(table, spec)?.as_bytes())
}

pub fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
