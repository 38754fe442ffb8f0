use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::Axis;
use crate::config::Resolved;
use crate::error::CliError;

/// Fixed 15 significant digits in scientific notation, independent of locale.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 {
        format!("{:.14e}", 0.0)
    } else {
        format!("{x:.14e}")
    }
}

/// In-memory CSV with LF line endings.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Resolved,
    #[serde(skip_serializing_if = "Option::is_none")]
    axes: Option<&'a [Axis]>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `out` and the resolved run description to `<out>.meta.json`.
pub fn write_with_sidecar(
    out: &Path,
    bytes: &[u8],
    command: &str,
    config: &Resolved,
    axes: Option<&[Axis]>,
) -> Result<(), CliError> {
    fs::write(out, bytes)?;
    let meta = Meta { tool: "qfeedback", version: env!("CARGO_PKG_VERSION"), command, config, axes };
    let mut json = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(sidecar_path(out), json)?;
    Ok(())
}
