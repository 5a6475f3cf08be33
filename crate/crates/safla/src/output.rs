//! Event logs, metrics, and bench rows.

use std::io::{self, Write};

use serde::Serialize;

use safla_core::sim::{MetricRow, SimEvent};

/// Writes one compact JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// The simulator's audit log as JSON lines.
pub fn write_event_log<W: Write>(w: W, events: &[SimEvent]) -> io::Result<()> {
    write_jsonl(w, events)
}

/// Rows as CSV with a header taken from the field names.
pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Metrics as CSV: `scenario,seed,step,metric,value`.
pub fn write_metrics_csv<W: Write>(w: W, rows: &[MetricRow]) -> Result<(), csv::Error> {
    if rows.is_empty() {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario", "seed", "step", "metric", "value"])?;
        out.flush()?;
        return Ok(());
    }
    write_csv(w, rows)
}
