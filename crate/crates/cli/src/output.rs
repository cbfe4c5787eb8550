use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::{CliError, RunConfig};

/// JSON provenance record: command, crate version and the resolved config
/// without its output path.
pub fn provenance(command: &str, config: &RunConfig) -> Value {
    let config = RunConfig {
        out: None,
        ..config.clone()
    };
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    })
}

/// 17 significant digits, enough to round-trip any `f64`. Negative zero
/// prints as zero.
pub fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// CSV table headed by a `#`-prefixed provenance line.
pub struct Table {
    writer: csv::Writer<Box<dyn Write>>,
}

impl Table {
    pub fn create(
        path: Option<&Path>,
        provenance: &Value,
        header: &[&str],
    ) -> Result<Self, CliError> {
        let mut out = sink(path)?;
        writeln!(out, "# {provenance}")?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes `value` as pretty JSON with a top-level `"provenance"` entry.
pub fn write_json(path: &Path, provenance: Value, value: &impl Serialize) -> Result<(), CliError> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(m) = &mut v {
        m.insert("provenance".into(), provenance);
    }
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
