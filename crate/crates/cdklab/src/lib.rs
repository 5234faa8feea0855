//! Experiment runner for the `cdklab-core` kernels: configuration, execution and CSV / JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod parse;
pub mod runner;
pub mod schema;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use config::{ConfigError, Experiment, RawConfig};
pub use runner::{run, RunOutput};

/// Writes rows in the experiment's format to its output path, or to `stdout`.
///
/// CSV output written to a file gets its summary in a `.summary.json` sibling.
pub fn emit(exp: &Experiment, out: &RunOutput) -> io::Result<()> {
    match &exp.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            match exp.format {
                config::Format::Csv => {
                    output::write_csv(&out.rows, &mut w).map_err(io::Error::other)?;
                    let side = path.with_extension("summary.json");
                    let mut s = BufWriter::new(File::create(side)?);
                    serde_json::to_writer_pretty(&mut s, &out.summary)?;
                    s.write_all(b"\n")?;
                    s.flush()?;
                }
                config::Format::Json => output::write_json(&out.rows, &out.summary, &mut w)?,
            }
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match exp.format {
                config::Format::Csv => output::write_csv(&out.rows, &mut w).map_err(io::Error::other)?,
                config::Format::Json => output::write_json(&out.rows, &out.summary, &mut w)?,
            }
            w.flush()
        }
    }
}
