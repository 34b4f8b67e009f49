//! CSV and gnuplot output.
//!
//! Floats use Rust's shortest round-trip formatting, so a parsed CSV gives
//! back the exact rows that were written and equal rows always print the
//! same bytes.

use std::fmt::Write as _;
use std::path::Path;

use itertools::Itertools;

use super::sweep::MetricsRow;
use crate::error::{Result, SenseError};

pub const CSV_HEADER: &str = "snr_db,k,n_blocks,m,trials,p_offset,ci95_offset,p_active,ci95_active";

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| SenseError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn csv_string(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.k,
            r.n_blocks,
            r.m,
            r.trials,
            r.p_offset,
            r.ci95_offset,
            r.p_active,
            r.ci95_active
        )
        .expect("writing to a String");
    }
    out
}

pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(SenseError::InvalidConfig("no rows to write".into()));
    }
    write_file(path, &csv_string(rows))
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(SenseError::Parse("missing or wrong CSV header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| SenseError::Parse(format!("row {}: {what}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad("expected 9 fields"));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(s));
            Ok(MetricsRow {
                snr_db: real(f[0])?,
                k: int(f[1])?,
                n_blocks: int(f[2])?,
                m: int(f[3])?,
                trials: int(f[4])?,
                p_offset: real(f[5])?,
                ci95_offset: real(f[6])?,
                p_active: real(f[7])?,
                ci95_active: real(f[8])?,
            })
        })
        .collect()
}

/// Self-contained gnuplot script: one inline data block per
/// `(k, n_blocks, m)` curve, and two panels plotting offset and subcarrier
/// detection probability against SNR with 95% error bars. Noiseless rows
/// cannot sit on a dB axis and are listed in a comment instead.
pub fn plot_script(rows: &[MetricsRow]) -> String {
    let mut s = String::new();
    let mut curves = Vec::new();
    let grouped = rows.iter().chunk_by(|r| (r.k, r.n_blocks, r.m));
    for ((k, nb, m), group) in &grouped {
        let group: Vec<&MetricsRow> = group.collect();
        let name = format!("$k{k}_nb{nb}_m{m}");
        writeln!(s, "{name} << EOD").unwrap();
        for r in group.iter().filter(|r| r.snr_db.is_finite()) {
            writeln!(
                s,
                "{} {} {} {} {}",
                r.snr_db, r.p_offset, r.ci95_offset, r.p_active, r.ci95_active
            )
            .unwrap();
        }
        writeln!(s, "EOD").unwrap();
        for r in group.iter().filter(|r| !r.snr_db.is_finite()) {
            writeln!(
                s,
                "# noiseless: K={k} Nb={nb} M={m} p_offset={} p_active={}",
                r.p_offset, r.p_active
            )
            .unwrap();
        }
        curves.push((name, format!("K={k}, N_b={nb}, M={m}")));
    }

    s.push_str(
        "\nset terminal pngcairo size 1200,480\n\
         set output 'sweep.png'\n\
         set multiplot layout 1,2\n\
         set xlabel 'SNR (dB)'\n\
         set yrange [0:1.05]\n\
         set grid\n\
         set key bottom right\n",
    );
    for (title, col) in [
        ("Offset detection probability", 2),
        ("Active subcarrier detection ratio", 4),
    ] {
        writeln!(s, "set title '{title}'").unwrap();
        let plots = curves
            .iter()
            .map(|(name, label)| {
                format!(
                    "{name} using 1:{col}:{} with yerrorlines title '{label}'",
                    col + 1
                )
            })
            .join(", \\\n     ");
        writeln!(s, "plot {plots}").unwrap();
    }
    s.push_str("unset multiplot\n");
    s
}

pub fn emit_plot_script(rows: &[MetricsRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(SenseError::InvalidConfig("no rows to plot".into()));
    }
    write_file(path, &plot_script(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(snr_db: f64, k: usize, p: f64) -> MetricsRow {
        MetricsRow {
            snr_db,
            k,
            n_blocks: 10,
            m: 20,
            trials: 1000,
            p_offset: p / 3.0,
            ci95_offset: 0.1 / 7.0,
            p_active: p,
            ci95_active: 0.0123,
        }
    }

    #[test]
    fn single_row_is_two_lines() {
        let text = csv_string(&[row(-10.0, 1, 0.77)]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![
            row(-12.5, 1, 0.1),
            row(0.0, 1, 2.0 / 3.0),
            row(f64::INFINITY, 3, 1.0),
        ];
        assert_eq!(parse_csv(&csv_string(&rows)).unwrap(), rows);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_csv("nope\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,x,3,4,5,6,7,8,9\n")).is_err());
    }

    #[test]
    fn plot_has_one_curve_per_group() {
        let rows = vec![
            row(-10.0, 1, 0.5),
            row(0.0, 1, 0.9),
            row(-10.0, 3, 0.4),
            row(f64::INFINITY, 3, 1.0),
        ];
        let script = plot_script(&rows);
        assert_eq!(script.matches("<< EOD").count(), 2);
        assert_eq!(script.matches("with yerrorlines").count(), 4);
        assert!(script.contains("# noiseless: K=3"));
        assert!(!script.contains("inf "));
    }

    #[test]
    fn files_written() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("out.csv");
        emit_csv(&[row(1.0, 1, 0.5)], &csv).unwrap();
        assert_eq!(
            parse_csv(&std::fs::read_to_string(&csv).unwrap())
                .unwrap()
                .len(),
            1
        );
        assert!(emit_csv(&[], &csv).is_err());
        assert!(emit_csv(&[row(1.0, 1, 0.5)], &dir.path().join("missing/out.csv")).is_err());
    }
}
