//! CSV ingestion of angle pairs onto the torus.

use std::path::Path;

use anyhow::Context;
use bvm::TorusPoint;

use crate::InputError;

/// Unit of the angle columns in an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AngleUnit {
    Degrees,
    Radians,
}

/// A parsed dataset of wrapped angle pairs.
#[derive(Debug, Clone)]
pub struct AngleDataset {
    points: Vec<TorusPoint>,
    source_unit: AngleUnit,
}

impl AngleDataset {
    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn source_unit(&self) -> AngleUnit {
        self.source_unit
    }

    pub fn from_points(points: Vec<TorusPoint>, source_unit: AngleUnit) -> Self {
        Self {
            points,
            source_unit,
        }
    }
}

fn parse_row(line: &str, line_no: usize, unit: AngleUnit) -> Result<TorusPoint, InputError> {
    let mut cols = line.split(',');
    let mut next = |name: &str| {
        cols.next()
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| InputError(format!("line {line_no}: missing {name} column")))
    };
    let phi: f64 = next("phi")?
        .parse()
        .map_err(|_| InputError(format!("line {line_no}: phi is not a number")))?;
    let psi: f64 = next("psi")?
        .parse()
        .map_err(|_| InputError(format!("line {line_no}: psi is not a number")))?;
    if cols.next().is_some_and(|c| !c.trim().is_empty()) {
        return Err(InputError(format!(
            "line {line_no}: expected exactly two columns"
        )));
    }
    if !phi.is_finite() || !psi.is_finite() {
        return Err(InputError(format!(
            "line {line_no}: non-finite angle value"
        )));
    }
    let (phi, psi) = match unit {
        AngleUnit::Degrees => (phi.to_radians(), psi.to_radians()),
        AngleUnit::Radians => (phi, psi),
    };
    Ok(TorusPoint::new(phi, psi))
}

/// Parse a two-column `phi,psi` CSV file into wrapped torus points.
///
/// A single non-numeric header line is tolerated; every other row must
/// hold two finite numbers. Angles are converted to radians when the
/// file is flagged as degrees, then wrapped into [−π, π).
pub fn ingest(path: &Path, unit: AngleUnit) -> anyhow::Result<AngleDataset> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_row(line, line_no, unit) {
            Ok(pt) => points.push(pt),
            // Tolerate a header, but only on the first line.
            Err(_) if line_no == 1 && !line.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') => {}
            Err(e) => return Err(e.into()),
        }
    }
    if points.is_empty() {
        return Err(InputError(format!("{}: no data rows", path.display())).into());
    }
    Ok(AngleDataset {
        points,
        source_unit: unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_plain_rows_and_counts() {
        let f = write_temp("0,0\n1.5,-1.5\n3.0,3.0\n");
        let ds = ingest(f.path(), AngleUnit::Radians).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.points()[0].theta1(), 0.0);
        assert_eq!(ds.source_unit(), AngleUnit::Radians);
    }

    #[test]
    fn degree_boundary_wraps_to_negative_pi() {
        let f = write_temp("phi,psi\n180,-180\n");
        let ds = ingest(f.path(), AngleUnit::Degrees).unwrap();
        assert_eq!(ds.n(), 1);
        assert!((ds.points()[0].theta1() + PI).abs() < 1e-12);
        assert!((ds.points()[0].theta2() + PI).abs() < 1e-12);
    }

    #[test]
    fn header_is_only_tolerated_on_line_one() {
        let f = write_temp("0,0\nphi,psi\n");
        let err = ingest(f.path(), AngleUnit::Radians).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let f = write_temp("0,0\n1.0\n");
        let err = ingest(f.path(), AngleUnit::Radians).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let f = write_temp("0,0,0\n");
        let err = ingest(f.path(), AngleUnit::Radians).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        let f = write_temp("1.0,nan\n");
        let err = ingest(f.path(), AngleUnit::Radians).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn empty_file_is_an_input_error() {
        let f = write_temp("phi,psi\n");
        let err = ingest(f.path(), AngleUnit::Radians).unwrap_err();
        assert!(err.is::<InputError>());
        assert!(err.to_string().contains("no data rows"));
    }
}
