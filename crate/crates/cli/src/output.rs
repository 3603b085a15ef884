use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use memvol::pricing::ValueSurface;

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// CSV text with a `# config_digest=` comment line before the header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(digest: &str, header: &str) -> Self {
        Self {
            text: format!("# config_digest={digest}\n{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{f}").expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn surface_csv(surface: &ValueSurface, digest: &str) -> Csv {
    let mut csv = Csv::new(digest, "t,S,V");
    for (t, row) in surface.times.iter().zip(&surface.values) {
        for (s, v) in surface.spots.iter().zip(row) {
            csv.row(&[t, s, v]);
        }
    }
    csv
}
