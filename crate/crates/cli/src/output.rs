//! CSV writing and number formatting.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use tuckeriga::solver::IterationRecord;

use crate::Failure;

/// A table: header and string rows.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to(&self, w: impl Write) -> Result<(), Failure> {
        let io = |e: csv::Error| Failure::Config(format!("cannot write CSV: {e}"));
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            out.write_record(r).map_err(io)?;
        }
        out.flush()
            .map_err(|e| Failure::Config(format!("cannot write CSV: {e}")))
    }

    /// Writes to `path`, or standard output.
    pub fn write(&self, path: Option<&Path>) -> Result<(), Failure> {
        match path {
            Some(p) => {
                let f = File::create(p).map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display())))?;
                self.write_to(f)
            }
            None => self.write_to(std::io::stdout().lock()),
        }
    }
}

/// Shortest round-trip decimal form; deterministic across runs.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn int(x: usize) -> String {
    x.to_string()
}

/// Report columns: `iter, res_norm, rx1..3, rr1..3, rp1..3, eps_k`, with
/// one rank triple per component when there are several.
pub fn history_table(history: &[(usize, &IterationRecord)], components: usize) -> Table {
    let mut header = vec!["iter".to_string(), "res_norm".to_string()];
    for v in ["rx", "rr", "rp"] {
        for c in 0..components {
            for m in 1..=3 {
                header.push(if components == 1 {
                    format!("{v}{m}")
                } else {
                    format!("{v}{m}_c{}", c + 1)
                });
            }
        }
    }
    header.push("eps_k".into());
    let mut t = Table::new(header);
    for &(iter, rec) in history {
        let mut row = vec![int(iter), num(rec.res_norm)];
        for ranks in [&rec.rank_x, &rec.rank_r, &rec.rank_p] {
            for r in ranks.iter().take(components) {
                row.extend(r.0.iter().map(|&v| int(v)));
            }
        }
        row.push(num(rec.eps));
        t.push(row);
    }
    t
}
