//! Reading and writing configurations: CSV with header `x1,...,xd,weight`,
//! JSON `{d, points, weights}`, or `builtin:<name>`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;

use super::builtin::{builtin_config, implied_dimension};
use super::SphericalConfig;
use crate::error::{Error, Result};
use crate::numeric::norm;

/// Hand-written files may carry a few digits only; inputs within this
/// distance of feasibility are projected back onto it.
const INPUT_TOL: f64 = 1e-6;

/// Loads `builtin:<name>`, a `.json` file, or a CSV file. `d` is needed for
/// builtins that exist in several dimensions and is checked against files.
pub fn load_config(source: &str, d: Option<usize>) -> Result<SphericalConfig> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let d = match (d, implied_dimension(name)) {
            (Some(d), _) => d,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::domain(format!("builtin `{name}` needs an explicit dimension")))
            }
        };
        return builtin_config(name, d);
    }
    let path = Path::new(source);
    let config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_config_json(File::open(path)?)?
    } else {
        read_config_csv(File::open(path)?)?
    };
    if let Some(d) = d {
        if d != config.d() {
            return Err(Error::domain(format!(
                "configuration in {source} has d = {}, expected {d}",
                config.d()
            )));
        }
    }
    Ok(config)
}

fn from_raw(d: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<SphericalConfig> {
    for (i, p) in points.iter().enumerate() {
        if p.len() == d && (norm(p) - 1.0).abs() > INPUT_TOL {
            return Err(Error::domain(format!("atom {i} has norm {}, expected 1", norm(p))));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > INPUT_TOL {
        return Err(Error::domain(format!("weights sum to {total}, expected 1")));
    }
    SphericalConfig::normalized(d, points, weights)
}

pub fn read_config_csv<R: Read>(reader: R) -> Result<SphericalConfig> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let d = headers.len().saturating_sub(1);
    let well_formed = headers.len() >= 3
        && headers.get(d) == Some("weight")
        && (0..d).all(|i| headers.get(i) == Some(format!("x{}", i + 1).as_str()));
    if !well_formed {
        return Err(Error::Parse(format!(
            "expected CSV header x1,...,xd,weight, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
        weights.push(values[d]);
        points.push(values[..d].to_vec());
    }
    from_raw(d, points, weights)
}

#[derive(Deserialize)]
struct JsonConfig {
    d: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

pub fn read_config_json<R: Read>(reader: R) -> Result<SphericalConfig> {
    let raw: JsonConfig = serde_json::from_reader(BufReader::new(reader))?;
    from_raw(raw.d, raw.points, raw.weights)
}

/// Writes the CSV format with 17 significant digits, which round-trips.
pub fn write_config_csv<W: Write>(config: &SphericalConfig, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=config.d()).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    csv.write_record(&header)?;
    for (p, w) in config.points().iter().zip(config.weights()) {
        let row: Vec<String> = p.iter().chain(std::iter::once(w)).map(|v| format!("{v:.16e}")).collect();
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_config_json<W: Write>(config: &SphericalConfig, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, config)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let ico = builtin_config("icosahedron", 3).unwrap();
        let mut buf = Vec::new();
        write_config_csv(&ico, &mut buf).unwrap();
        let back = read_config_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ico);
    }

    #[test]
    fn json_round_trip() {
        let simplex = builtin_config("simplex", 4).unwrap();
        let mut buf = Vec::new();
        write_config_json(&simplex, &mut buf).unwrap();
        let back = read_config_json(buf.as_slice()).unwrap();
        for (a, b) in back.points().iter().flatten().zip(simplex.points().iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(read_config_csv("a,b,weight\n1,0,1\n".as_bytes()).is_err());
        assert!(read_config_csv("x1,x2,weight\n1,0,0.5\n".as_bytes()).is_err());
        assert!(read_config_csv("x1,x2,weight\n2,0,1\n".as_bytes()).is_err());
        assert!(read_config_csv("x1,x2,weight\n1,zero,1\n".as_bytes()).is_err());
        let ok = read_config_csv("x1,x2,weight\n0.7071068,0.7071068,1\n".as_bytes()).unwrap();
        assert!((norm(&ok.points()[0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn builtin_sources() {
        assert_eq!(load_config("builtin:icosahedron", None).unwrap().len(), 12);
        assert_eq!(load_config("builtin:onb", Some(5)).unwrap().len(), 5);
        assert!(load_config("builtin:onb", None).is_err());
    }

    #[test]
    fn file_sources() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        write_config_json(&builtin_config("cube", 3).unwrap(), File::create(&path).unwrap()).unwrap();
        let src = path.to_str().unwrap();
        assert_eq!(load_config(src, Some(3)).unwrap().len(), 8);
        assert!(load_config(src, Some(4)).is_err());
    }
}
