//! JSON/CSV sinks. CSV floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

pub fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn emit_rows<R: Serialize>(rows: &[R], format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = writer(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_json<R: Serialize>(value: &R, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
