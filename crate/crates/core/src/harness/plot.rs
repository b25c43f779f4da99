use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::RunRecord;
use crate::diagnostics::CSV_HEADER;
use crate::error::{InlsError, Result};

fn gnuplot_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => "NaN".into(),
    }
}

/// Writes one whitespace-separated time-series file per record and, for
/// more than one record, a phase-line file sorted by amplitude.
pub fn emit_plotdata(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(InlsError::InsufficientData("no records to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for rec in records {
        let Ok(series) = rec.load_series() else { continue };
        let mut text = format!("# {}\n", CSV_HEADER.replace(',', " "));
        for s in &series {
            let cols = [
                Some(s.t),
                Some(s.mass),
                Some(s.kinetic),
                Some(s.potential),
                Some(s.energy),
                Some(s.ma),
                Some(s.virial_rhs),
                Some(s.vr),
                Some(s.snorm_cum),
                Some(s.sup_abs),
                s.proxy,
            ];
            let line: Vec<String> = cols.into_iter().map(gnuplot_value).collect();
            let _ = writeln!(text, "{}", line.join(" "));
        }
        let path = dir.join(format!("{}.dat", &rec.config_hash[..16]));
        fs::write(&path, text)?;
        written.push(path);
    }
    if records.len() > 1 {
        let mut rows: Vec<&RunRecord> = records.iter().collect();
        rows.sort_by(|a, b| a.amplitude().total_cmp(&b.amplitude()));
        let mut text = String::from("# A E0 K0 subthreshold blowup\n");
        for r in rows {
            let (e0, k0, sub) = r
                .threshold
                .as_ref()
                .map_or((None, None, false), |t| (Some(t.e0), Some(t.k0), t.subthreshold));
            let _ = writeln!(
                text,
                "{} {} {} {} {}",
                r.amplitude(),
                gnuplot_value(e0),
                gnuplot_value(k0),
                u8::from(sub),
                u8::from(r.verdict.label() == "BlowUp")
            );
        }
        let path = dir.join("sweep_phase.dat");
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
