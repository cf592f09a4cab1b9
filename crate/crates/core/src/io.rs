//! JSON input formats for plants and uncertainty covariances.
//!
//! Plant: `{"num": [..], "den": [..]}` with descending-power coefficients, or
//! `{"entries": [[{"num": .., "den": ..}, ..], ..]}` for a transfer matrix.
//!
//! Covariance: `{"s1sq": r, "s2sq": r, "s12": r}` or `{"pi": [[..], ..]}`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lti::{TransferFunction, TransferMatrix};
use crate::ms::UncertaintyCovariance;

#[derive(Deserialize)]
#[serde(untagged)]
enum PlantJson {
    Siso(TransferFunction),
    Matrix { entries: Vec<Vec<TransferFunction>> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CovarianceJson {
    Triple { s1sq: f64, s2sq: f64, s12: f64 },
    General { pi: Vec<Vec<f64>> },
}

/// A parsed plant description.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Siso(TransferFunction),
    Matrix(TransferMatrix),
}

impl Plant {
    pub fn into_matrix(self) -> TransferMatrix {
        match self {
            Plant::Siso(tf) => TransferMatrix::scalar(tf),
            Plant::Matrix(m) => m,
        }
    }
}

/// Read either inline JSON (text starting with `{`) or a file path.
pub fn read_source(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| Error::Io(format!("{arg}: {e}")))
    }
}

pub fn parse_plant(text: &str) -> Result<Plant> {
    let parsed: PlantJson = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("plant must be {{\"num\": [..], \"den\": [..]}} or {{\"entries\": ..}}: {e}"))
    })?;
    Ok(match parsed {
        PlantJson::Siso(tf) => Plant::Siso(tf),
        PlantJson::Matrix { entries } => Plant::Matrix(TransferMatrix::from_rows(entries)?),
    })
}

pub fn parse_covariance(text: &str) -> Result<UncertaintyCovariance> {
    let parsed: CovarianceJson = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "covariance must be {{\"s1sq\", \"s2sq\", \"s12\"}} or {{\"pi\": [[..]]}}: {e}"
        ))
    })?;
    match parsed {
        CovarianceJson::Triple { s1sq, s2sq, s12 } => UncertaintyCovariance::two_channel(s1sq, s2sq, s12),
        CovarianceJson::General { pi } => {
            let m = pi.len();
            if pi.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidCovariance("pi must be square".into()));
            }
            let flat: Vec<f64> = pi.into_iter().flatten().collect();
            UncertaintyCovariance::from_row_slice(m, &flat)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_siso() {
        let p = parse_plant(r#"{"num": [1.0], "den": [1.0, -1.5]}"#).unwrap();
        assert_eq!(p, Plant::Siso(TransferFunction::first_order(1.5)));
    }

    #[test]
    fn plant_matrix() {
        let text = r#"{"entries": [[{"num": [1], "den": [1, -0.5]}, {"num": [0], "den": [1]}]]}"#;
        let m = parse_plant(text).unwrap().into_matrix();
        assert_eq!(m.dims(), (1, 2));
    }

    #[test]
    fn plant_errors() {
        assert!(matches!(parse_plant("{\"num\": [1, 2, 3], \"den\": [1, 0]}"), Err(Error::Parse(_))));
        assert!(matches!(parse_plant("not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn covariance_forms() {
        let a = parse_covariance(r#"{"s1sq": 0.2, "s2sq": 0.1, "s12": 0.05}"#).unwrap();
        let b = parse_covariance(r#"{"pi": [[0.2, 0.05], [0.05, 0.1]]}"#).unwrap();
        assert_eq!(a, b);
        assert!(parse_covariance(r#"{"pi": [[0.2, 0.5], [0.5, 0.1]]}"#).is_err());
        assert!(parse_covariance(r#"{"pi": [[0.2, 0.5]]}"#).is_err());
    }
}
