use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::{HarnessError, SweepRecord};
use crate::integrators::{Method, Trajectory};
use crate::stability::StabilityRaster;

pub const CSV_HEADER: [&str; 5] = ["method", "h", "rel_error", "wall_time_s", "finite"];

fn format_error(e: f64) -> String {
    if e.is_finite() {
        format!("{e:e}")
    } else {
        "nan".to_string()
    }
}

/// Writes the sweep table: `h` with six significant digits, errors in
/// shortest round-trip form, non-finite errors as `nan`.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.method.tag(),
            format!("{:.5e}", r.h),
            format_error(r.rel_error),
            format!("{:e}", r.wall_time),
            r.finite.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    write_csv(records, BufWriter::new(File::create(path)?))
}

/// Parses a table written by [`write_csv`].
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Parse(format!("unexpected header {header:?}")));
    }
    let number = |s: &str| -> Result<f64, HarnessError> {
        s.parse::<f64>()
            .map_err(|_| HarnessError::Parse(format!("bad number `{s}`")))
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let method: Method = row[0]
            .parse()
            .map_err(|e| HarnessError::Parse(format!("{e}")))?;
        let finite = match &row[4] {
            "true" => true,
            "false" => false,
            other => return Err(HarnessError::Parse(format!("bad flag `{other}`"))),
        };
        records.push(SweepRecord {
            method,
            h: number(&row[1])?,
            rel_error: number(&row[2])?,
            wall_time: number(&row[3])?,
            finite,
        });
    }
    Ok(records)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>, HarnessError> {
    parse_csv(File::open(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RasterFormat {
    Csv,
    Pgm,
}

impl std::str::FromStr for RasterFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(RasterFormat::Csv),
            "pgm" => Ok(RasterFormat::Pgm),
            other => Err(HarnessError::Config(format!(
                "unknown raster format `{other}`"
            ))),
        }
    }
}

/// Writes a raster with the top row (largest imaginary part) first.
///
/// CSV: one `# re_min=..,re_max=..,im_min=..,im_max=..,nx=..,ny=..` line,
/// then `ny` rows of comma-separated `0`/`1`. PGM: plain `P2` with maxval 1.
pub fn write_raster<W: Write>(
    raster: &StabilityRaster,
    format: RasterFormat,
    mut out: W,
) -> io::Result<()> {
    let sep = match format {
        RasterFormat::Csv => {
            writeln!(
                out,
                "# re_min={},re_max={},im_min={},im_max={},nx={},ny={}",
                raster.re_min, raster.re_max, raster.im_min, raster.im_max, raster.nx, raster.ny
            )?;
            ","
        }
        RasterFormat::Pgm => {
            write!(out, "P2\n{} {}\n1\n", raster.nx, raster.ny)?;
            " "
        }
    };
    for iy in (0..raster.ny).rev() {
        let row: Vec<&str> = (0..raster.nx)
            .map(|ix| if raster.get(ix, iy) { "1" } else { "0" })
            .collect();
        writeln!(out, "{}", row.join(sep))?;
    }
    out.flush()
}

pub fn emit_raster(
    raster: &StabilityRaster,
    path: impl AsRef<Path>,
    format: RasterFormat,
) -> Result<(), HarnessError> {
    write_raster(raster, format, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// `t,u0,u1,...` with one row per stored state.
pub fn write_trajectory_csv<W: Write>(run: &Trajectory, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let dim = run.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("u{i}")));
    w.write_record(&header)?;
    for (t, u) in run.times.iter().zip(&run.states) {
        let mut row = vec![format!("{t:e}")];
        row.extend(u.iter().map(|x| format!("{x:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(mask: Vec<bool>, nx: usize, ny: usize) -> StabilityRaster {
        StabilityRaster {
            re_min: -1.0,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 1.0,
            nx,
            ny,
            mask,
        }
    }

    fn render(r: &StabilityRaster, f: RasterFormat) -> String {
        let mut buf = Vec::new();
        write_raster(r, f, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_and_single_row_tables() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "method,h,rel_error,wall_time_s,finite\n"
        );
        assert!(parse_csv(buf.as_slice()).unwrap().is_empty());

        let rec = SweepRecord {
            method: Method::ExpRk2,
            h: 1e-3,
            rel_error: 1.932_7e-6,
            wall_time: 0.0125,
            finite: true,
        };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&rec), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("exprk2,1.00000e-3,1.9327e-6,"), "{text}");
        assert_eq!(parse_csv(buf.as_slice()).unwrap(), vec![rec]);
    }

    #[test]
    fn nan_rows_round_trip() {
        let rec = SweepRecord {
            method: Method::Rb2 { gamma: 0.3 },
            h: 0.05,
            rel_error: f64::NAN,
            wall_time: 1e-4,
            finite: false,
        };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&rec), &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .contains("rb2:0.3,5.00000e-2,nan,"));
        let back = parse_csv(buf.as_slice()).unwrap();
        assert!(back[0].rel_error.is_nan() && !back[0].finite && back[0].method == rec.method);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = "method,h,rel_error,wall_time_s,finite\nrk9,1,1,1,true\n";
        assert!(parse_csv(bad.as_bytes()).is_err());
        let bad = "method,h,rel_error,wall_time_s,finite\nrk2,1,1,1,maybe\n";
        assert!(parse_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn raster_formats() {
        let all = raster(vec![true; 4], 2, 2);
        let csv = render(&all, RasterFormat::Csv);
        assert_eq!(
            csv,
            "# re_min=-1,re_max=1,im_min=-1,im_max=1,nx=2,ny=2\n1,1\n1,1\n"
        );
        // Bottom row stable only: printed last.
        let bottom = raster(vec![true, true, true, false, false, false], 3, 2);
        assert_eq!(
            render(&bottom, RasterFormat::Pgm),
            "P2\n3 2\n1\n0 0 0\n1 1 1\n"
        );
        let wide = raster(vec![false; 8000], 100, 80);
        assert!(render(&wide, RasterFormat::Pgm).starts_with("P2\n100 80\n1\n"));
        assert!("PGM".parse::<RasterFormat>().is_ok());
        assert!("png".parse::<RasterFormat>().is_err());
    }
}
