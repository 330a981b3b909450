use std::io::Write;

pub const CSV_HEADER: &str = "kernel,rows,cols,median_ns,baseline_ns,speedup,packed_weight_bytes,plain_weight_bytes";

/// Note attached to every timing report.
pub const BASELINE_NOTE: &str =
    "baseline is a local 8-bit GEMV on the same vector backend; speedups are indicative for this host only";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kernel: String,
    pub rows: usize,
    pub cols: usize,
    pub median_ns: u64,
    pub baseline_ns: u64,
    pub speedup: f64,
    pub packed_weight_bytes: u64,
    pub plain_weight_bytes: u64,
    /// Set once the kernel output matched its reference. Not serialized.
    pub verified: bool,
}

impl BenchRow {
    /// `baseline_ns / median_ns`, guarding a zero-duration measurement.
    pub fn speedup_of(baseline_ns: u64, median_ns: u64) -> f64 {
        baseline_ns as f64 / median_ns.max(1) as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    /// Free-form lines written as `# ` comments before the header.
    pub notes: Vec<String>,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn rows_for<'a>(&'a self, kernel: &'a str) -> impl Iterator<Item = &'a BenchRow> + 'a {
        self.rows.iter().filter(move |r| r.kernel == kernel)
    }
}

/// Writes notes as `#` lines, the fixed header, then one LF-terminated line per row.
pub fn emit_csv<W: Write>(report: &BenchReport, mut sink: W) -> std::io::Result<()> {
    for note in &report.notes {
        writeln!(sink, "# {note}")?;
    }
    writeln!(sink, "{CSV_HEADER}")?;
    for row in &report.rows {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{}",
            row.kernel,
            row.rows,
            row.cols,
            row.median_ns,
            row.baseline_ns,
            row.speedup,
            row.packed_weight_bytes,
            row.plain_weight_bytes
        )?;
    }
    sink.flush()
}
