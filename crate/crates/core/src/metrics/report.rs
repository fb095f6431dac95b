use std::io::Write;

use super::AggregateReport;
use crate::error::Result;

/// Columns `bin_low,bin_high,density`; the overflow bin's upper edge is `inf`.
/// An empty histogram yields just the header.
pub fn write_speedup_csv<W: Write>(report: &AggregateReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_low", "bin_high", "density"])?;
    for bin in report.speedup_histogram.iter().flatten() {
        let high = bin.high.map_or_else(|| "inf".to_owned(), |h| h.to_string());
        w.write_record([bin.low.to_string(), high, bin.density.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `bin_low,bin_high,count`: cells whose conflict total lies in `[low, high)`.
pub fn write_hotspot_csv<W: Write>(report: &AggregateReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_low", "bin_high", "count"])?;
    for bin in &report.hotspot_histogram {
        w.write_record([
            bin.conflicts.to_string(),
            (bin.conflicts + 1).to_string(),
            bin.cells.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
