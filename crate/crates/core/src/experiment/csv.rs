//! Long-format CSV output.

use crate::metrics::MetricSeries;
use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str =
    "snr_db,param_name,param_value,metric,value,ci_low,ci_high,trials,seed";

/// Rows sorted by SNR, then parameter value, then metric name. Floats use
/// Rust's shortest round-trip scientific form.
pub fn render_csv(series: &[MetricSeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("no series to write".into()));
    }
    let mut rows = Vec::new();
    for s in series {
        for p in &s.points {
            for (metric, e) in p.named() {
                rows.push((p.snr_db, s, metric, e));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.param_value.sort_cmp(&b.1.param_value))
            .then_with(|| a.1.param_name.cmp(&b.1.param_name))
            .then_with(|| a.2.cmp(b.2))
    });
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (snr, s, metric, e) in rows {
        out.push_str(&format!(
            "{snr:e},{},{},{metric},{:e},{:e},{:e},{},{}\n",
            s.param_name, s.param_value, e.value, e.low, e.high, s.trials, s.seed
        ));
    }
    Ok(out)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file.
pub fn emit_csv(series: &[MetricSeries], path: &Path) -> Result<()> {
    let text = render_csv(series)?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
