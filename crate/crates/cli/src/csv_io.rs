//! CSV formats: observation sets, return matrices, samples, and bands.

use std::path::Path;

use lro_core::{CdfBand, ObservationSet};

use crate::json::format_float;
use crate::CliError;

/// Read an observation set: header `value,count` for scalar support or
/// `v1,...,vd,count` for vector support; decimal values, nonnegative
/// integer counts.
pub fn read_observations(path: &Path) -> Result<ObservationSet, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let width = headers.len();
    if width < 2 {
        return Err(CliError::Config(format!(
            "{}: expected at least `value,count` columns",
            path.display()
        )));
    }
    let mut support = Vec::new();
    let mut counts = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(CliError::Config(format!(
                "{}: row {} has {} fields, expected {width}",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let mut point = Vec::with_capacity(width - 1);
        for field in record.iter().take(width - 1) {
            point.push(parse_f64(field, path, line + 2)?);
        }
        let count: u64 = record[width - 1].trim().parse().map_err(|_| {
            CliError::Config(format!(
                "{}: row {}: count `{}` is not a nonnegative integer",
                path.display(),
                line + 2,
                &record[width - 1]
            ))
        })?;
        support.push(point);
        counts.push(count);
    }
    ObservationSet::new(support, counts).map_err(CliError::from_core_config)
}

/// Write an observation set in the same format.
pub fn write_observations(obs: &ObservationSet, path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    if obs.dim() == 1 {
        out.push_str("value,count\n");
    } else {
        for j in 1..=obs.dim() {
            out.push_str(&format!("v{j},"));
        }
        out.push_str("count\n");
    }
    for (point, count) in obs.support().iter().zip(obs.counts()) {
        for v in point {
            out.push_str(&format_float(*v));
            out.push(',');
        }
        out.push_str(&format!("{count}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a returns matrix: header row of asset names, one row per day.
pub fn read_returns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    if names.is_empty() {
        return Err(CliError::Config(format!("{}: empty header", path.display())));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(CliError::Config(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 2,
                record.len(),
                names.len()
            )));
        }
        let mut row = Vec::with_capacity(names.len());
        for field in record.iter() {
            row.push(parse_f64(field, path, line + 2)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok((names, rows))
}

/// Write a returns matrix.
pub fn write_returns(names: &[String], rows: &[Vec<f64>], path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read scalar samples: header `value`, one sample per row.
pub fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.is_empty() {
            continue;
        }
        samples.push(parse_f64(&record[0], path, line + 2)?);
    }
    if samples.is_empty() {
        return Err(CliError::Config(format!("{}: no samples", path.display())));
    }
    Ok(samples)
}

/// Write a CDF band as `x,lower,upper`.
pub fn write_band(band: &CdfBand, path: &Path) -> Result<(), CliError> {
    let mut out = String::from("x,lower,upper\n");
    for i in 0..band.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(band.points()[i]),
            format_float(band.lower()[i]),
            format_float(band.upper()[i])
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write the three worst-case newsvendor distributions on the demand grid
/// (plot-ready, one row per grid point).
pub fn write_worst_case_distributions(
    grid: &[i64],
    lro: &[f64],
    lro_moments: Option<&[f64]>,
    scarf: &[f64],
    empirical: &[f64],
    path: &Path,
) -> Result<(), CliError> {
    let mut out = String::from(match lro_moments {
        Some(_) => "demand,lro,lro_moments,scarf,empirical\n",
        None => "demand,lro,scarf,empirical\n",
    });
    for (i, &d) in grid.iter().enumerate() {
        out.push_str(&format!("{d},{}", format_float(lro[i])));
        if let Some(m) = lro_moments {
            out.push_str(&format!(",{}", format_float(m[i])));
        }
        out.push_str(&format!(
            ",{},{}\n",
            format_float(scarf[i]),
            format_float(empirical[i])
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    let v: f64 = field.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "{}: row {line}: `{field}` is not a number",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Config(format!(
            "{}: row {line}: non-finite value",
            path.display()
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let obs = ObservationSet::from_scalar(&[1.0, 2.5, 4.0], &[3, 0, 7]).unwrap();
        write_observations(&obs, &path).unwrap();
        let back = read_observations(&path).unwrap();
        assert_eq!(back.counts(), obs.counts());
        assert_eq!(back.support(), obs.support());
    }

    #[test]
    fn vector_observations_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let obs = ObservationSet::new(
            vec![vec![0.1, -0.2], vec![0.3, 0.4]],
            vec![2, 5],
        )
        .unwrap();
        write_observations(&obs, &path).unwrap();
        let back = read_observations(&path).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.counts(), &[2, 5]);
    }

    #[test]
    fn malformed_count_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "value,count\n1.0,-3\n").unwrap();
        assert!(matches!(read_observations(&path), Err(CliError::Config(_))));
    }
}
