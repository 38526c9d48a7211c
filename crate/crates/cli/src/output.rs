use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::args::{Format, Output};

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e16)`.
pub fn real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A delimited table followed by `key=value` footer lines.
pub struct Report {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl Report {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn footer(&mut self, key: &str, value: impl Into<String>) {
        self.footer.push((key.to_string(), value.into()));
    }

    pub fn write_to<W: Write>(&self, sink: W, format: Format) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(format.delimiter())
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        let mut sink = w.into_inner().map_err(|e| e.into_error())?;
        for (k, v) in &self.footer {
            writeln!(sink, "{k}={v}")?;
        }
        sink.flush()
    }

    pub fn emit(&self, output: &Output) -> io::Result<()> {
        match &output.out {
            Some(path) => self.write_to(BufWriter::new(File::create(path)?), output.format),
            None => self.write_to(io::stdout().lock(), output.format),
        }
    }
}

/// Buffered writer for an optional side file.
pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new)
}
