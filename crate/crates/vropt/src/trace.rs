//! Measurement traces and their CSV form.
//!
//! Columns: `iter,paper_count,actual_count,grad_norm,objective,full_batch_event`
//! plus `sampled_clients` (space-separated ids) for federated runs. Floats
//! are written in shortest round-trip form, so reading a file back gives the
//! exact values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, VroptError};

/// One measurement. `grad_norm` and `objective` are evaluated outside the
/// optimizer and never enter its counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Completed iterations (rounds).
    pub iter: u64,
    pub paper_count: u64,
    pub actual_count: u64,
    pub grad_norm: f64,
    pub objective: f64,
    /// The step that produced this iterate was a full-batch step or a
    /// full-participation round.
    pub full_batch_event: bool,
    /// Clients contacted in that round (federated runs only).
    pub sampled_clients: Option<Vec<usize>>,
}

pub const BASE_HEADER: [&str; 6] =
    ["iter", "paper_count", "actual_count", "grad_norm", "objective", "full_batch_event"];

fn csv_err(e: csv::Error) -> VroptError {
    VroptError::Csv(e.to_string())
}

/// Writes `trace`; the `sampled_clients` column is present iff
/// `distributed`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], distributed: bool, out: W) -> Result<()> {
    if trace.is_empty() {
        return Err(VroptError::Csv("refusing to write an empty trace".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_HEADER.to_vec();
    if distributed {
        header.push("sampled_clients");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in trace {
        let mut fields = vec![
            r.iter.to_string(),
            r.paper_count.to_string(),
            r.actual_count.to_string(),
            r.grad_norm.to_string(),
            r.objective.to_string(),
            u8::from(r.full_batch_event).to_string(),
        ];
        if distributed {
            let ids = r.sampled_clients.as_deref().unwrap_or(&[]);
            fields.push(ids.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| VroptError::Csv(e.to_string()))?;
    Ok(())
}

pub fn trace_to_csv_string(trace: &[TraceRecord], distributed: bool) -> Result<String> {
    let mut buf = Vec::new();
    write_trace_csv(trace, distributed, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

pub fn write_trace_file(trace: &[TraceRecord], distributed: bool, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| VroptError::io(path, e))?;
    write_trace_csv(trace, distributed, std::io::BufWriter::new(file))
}

/// Reads a trace written by [`write_trace_csv`].
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().collect();
    let distributed = match names.len() {
        6 => false,
        7 if names[6] == "sampled_clients" => true,
        _ => return Err(VroptError::Csv(format!("unexpected header {names:?}"))),
    };
    if names[..6] != BASE_HEADER {
        return Err(VroptError::Csv(format!("unexpected header {names:?}")));
    }
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = idx + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| VroptError::Parse { line, msg: format!("bad {what}") };
        let int = |i: usize, what: &str| field(i).parse::<u64>().map_err(|_| bad(what));
        let float = |i: usize, what: &str| field(i).parse::<f64>().map_err(|_| bad(what));
        let full_batch_event = match field(5) {
            "0" => false,
            "1" => true,
            _ => return Err(bad("full_batch_event")),
        };
        let sampled_clients = if distributed {
            Some(
                field(6)
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| bad("sampled_clients")))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        out.push(TraceRecord {
            iter: int(0, "iter")?,
            paper_count: int(1, "paper_count")?,
            actual_count: int(2, "actual_count")?,
            grad_norm: float(3, "grad_norm")?,
            objective: float(4, "objective")?,
            full_batch_event,
            sampled_clients,
        });
    }
    Ok(out)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::fs::File::open(path).map_err(|e| VroptError::io(path, e))?;
    read_trace_csv(std::io::BufReader::new(file))
}
