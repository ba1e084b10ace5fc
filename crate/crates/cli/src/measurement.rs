//! Measurement ingestion: built-in names or JSON files with `[re, im]` matrix entries.

use std::path::Path;

use measrepro::qcore::{named, validate_elements, Complex64, ComplexMatrix, Instrument, Povm};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Povm,
    Instrument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub kind: MeasurementKind,
    pub dim: usize,
    pub outcomes: usize,
    pub elements: serde_json::Value,
}

#[derive(Debug, Clone)]
pub enum Measurement {
    Povm(Povm),
    Instrument(Instrument),
}

impl Measurement {
    /// The statistics; an instrument contributes its induced POVM.
    pub fn povm(&self) -> Povm {
        match self {
            Self::Povm(p) => p.clone(),
            Self::Instrument(i) => measrepro::qcore::induced_povm(i),
        }
    }

    /// A POVM is promoted to its Lüders instrument.
    pub fn instrument(&self) -> CliResult<Instrument> {
        match self {
            Self::Povm(p) => Ok(Instrument::luders(p)?),
            Self::Instrument(i) => Ok(i.clone()),
        }
    }
}

/// Loaded measurement with the raw bytes that identify it (file contents or the built-in name).
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub measurement: Measurement,
    pub digest_bytes: Vec<u8>,
}

fn parse_unit_interval(name: &str, s: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("cannot parse `{s}` as a number in `{name}`")))
}

/// Built-ins: `trine`, `noisy-z:p,q`, `vn:d`, `degenerate-qutrit`.
pub fn builtin(name: &str) -> CliResult<Option<Povm>> {
    if name == "trine" {
        return Ok(Some(named::trine()));
    }
    if name == "degenerate-qutrit" {
        return Ok(Some(named::degenerate_qutrit()));
    }
    if let Some(rest) = name.strip_prefix("noisy-z:") {
        let (p, q) = rest
            .split_once(',')
            .ok_or_else(|| CliError::Usage(format!("expected noisy-z:p,q, got `{name}`")))?;
        let (p, q) = (parse_unit_interval(name, p)?, parse_unit_interval(name, q)?);
        return named::noisy_z(p, q)
            .map(Some)
            .map_err(|e| CliError::InvalidMeasurement {
                source_name: name.to_string(),
                report: e.to_string(),
            });
    }
    if let Some(rest) = name.strip_prefix("vn:") {
        let d: usize = rest
            .trim()
            .parse()
            .ok()
            .filter(|&d| d >= 1)
            .ok_or_else(|| CliError::Usage(format!("expected vn:d with d ≥ 1, got `{name}`")))?;
        return Ok(Some(named::von_neumann(d)));
    }
    Ok(None)
}

fn to_matrix(path: &str, m: &JsonMatrix) -> CliResult<ComplexMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(CliError::MalformedFile {
            path: path.to_string(),
            reason: "ragged matrix rows".into(),
        });
    }
    let data = m.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::new(rows, cols, data).map_err(|e| CliError::MalformedFile {
        path: path.to_string(),
        reason: e.to_string(),
    })
}

fn from_matrix(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Parses and validates a measurement document.
pub fn parse_measurement(path: &str, text: &str) -> CliResult<Measurement> {
    let malformed = |reason: String| CliError::MalformedFile {
        path: path.to_string(),
        reason,
    };
    let file: MeasurementFile = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let invalid = |report: String| CliError::InvalidMeasurement {
        source_name: path.to_string(),
        report,
    };
    match file.kind {
        MeasurementKind::Povm => {
            let raw: Vec<JsonMatrix> =
                serde_json::from_value(file.elements).map_err(|e| malformed(e.to_string()))?;
            if raw.len() != file.outcomes {
                return Err(malformed(format!("{} elements but outcomes = {}", raw.len(), file.outcomes)));
            }
            let elements = raw.iter().map(|m| to_matrix(path, m)).collect::<CliResult<Vec<_>>>()?;
            let report = validate_elements(file.dim, &elements);
            if !report.is_ok() {
                return Err(invalid(report.to_string()));
            }
            Ok(Measurement::Povm(Povm::new(elements).map_err(|e| invalid(e.to_string()))?))
        }
        MeasurementKind::Instrument => {
            let raw: Vec<Vec<JsonMatrix>> =
                serde_json::from_value(file.elements).map_err(|e| malformed(e.to_string()))?;
            if raw.len() != file.outcomes {
                return Err(malformed(format!("{} outcomes listed but outcomes = {}", raw.len(), file.outcomes)));
            }
            let kraus = raw
                .iter()
                .map(|ops| ops.iter().map(|m| to_matrix(path, m)).collect::<CliResult<Vec<_>>>())
                .collect::<CliResult<Vec<_>>>()?;
            if kraus.iter().flatten().any(|k| k.cols() != file.dim) {
                return Err(malformed(format!("Kraus operators must have {} columns", file.dim)));
            }
            Ok(Measurement::Instrument(Instrument::new(kraus).map_err(|e| invalid(e.to_string()))?))
        }
    }
}

/// Resolves a built-in name or reads a file.
pub fn load_measurement(source: &str) -> CliResult<Loaded> {
    if let Some(p) = builtin(source)? {
        return Ok(Loaded {
            name: source.to_string(),
            measurement: Measurement::Povm(p),
            digest_bytes: source.as_bytes().to_vec(),
        });
    }
    let text = std::fs::read_to_string(source).map_err(|e| CliError::MalformedFile {
        path: source.to_string(),
        reason: e.to_string(),
    })?;
    Ok(Loaded {
        name: source.to_string(),
        measurement: parse_measurement(source, &text)?,
        digest_bytes: text.into_bytes(),
    })
}

pub fn povm_document(p: &Povm) -> MeasurementFile {
    MeasurementFile {
        kind: MeasurementKind::Povm,
        dim: p.dim(),
        outcomes: p.outcomes(),
        elements: serde_json::to_value(p.elements().iter().map(from_matrix).collect::<Vec<_>>())
            .expect("matrices serialize"),
    }
}

pub fn instrument_document(inst: &Instrument) -> MeasurementFile {
    let elements: Vec<Vec<JsonMatrix>> = inst
        .all_kraus()
        .iter()
        .map(|ops| ops.iter().map(from_matrix).collect())
        .collect();
    MeasurementFile {
        kind: MeasurementKind::Instrument,
        dim: inst.dim_in(),
        outcomes: inst.outcomes(),
        elements: serde_json::to_value(elements).expect("matrices serialize"),
    }
}

pub fn save_measurement(path: impl AsRef<Path>, m: &Measurement) -> CliResult<()> {
    let doc = match m {
        Measurement::Povm(p) => povm_document(p),
        Measurement::Instrument(i) => instrument_document(i),
    };
    let text = serde_json::to_string_pretty(&doc).expect("documents serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use measrepro::qcore::{random, Rng};

    #[test]
    fn builtins_resolve() {
        assert_eq!(builtin("trine").unwrap().unwrap(), named::trine());
        assert_eq!(builtin("vn:3").unwrap().unwrap().outcomes(), 3);
        assert_eq!(builtin("noisy-z:0.9,0.7").unwrap().unwrap(), named::noisy_z(0.9, 0.7).unwrap());
        assert!(builtin("nonexistent.json").unwrap().is_none());
        assert!(matches!(builtin("vn:x"), Err(CliError::Usage(_))));
        assert!(matches!(builtin("noisy-z:1.3,0.9"), Err(CliError::InvalidMeasurement { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = Rng::new(3, 0);
        let p = random::random_povm(3, 4, &mut rng).unwrap();
        let path = dir.path().join("p.json");
        save_measurement(&path, &Measurement::Povm(p.clone())).unwrap();
        match load_measurement(path.to_str().unwrap()).unwrap().measurement {
            Measurement::Povm(q) => assert_eq!(p, q),
            Measurement::Instrument(_) => panic!("kind changed"),
        }
        let inst = random::random_instrument(2, &[2, 1], &mut rng).unwrap();
        let path = dir.path().join("i.json");
        save_measurement(&path, &Measurement::Instrument(inst.clone())).unwrap();
        match load_measurement(path.to_str().unwrap()).unwrap().measurement {
            Measurement::Instrument(j) => assert_eq!(inst, j),
            Measurement::Povm(_) => panic!("kind changed"),
        }
    }

    #[test]
    fn incomplete_elements_rejected() {
        let scaled: Vec<ComplexMatrix> = named::trine().elements().iter().map(|m| m.scale_real(0.9)).collect();
        let doc = povm_document(&Povm::new_unchecked(scaled));
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(parse_measurement("x", &text), Err(CliError::InvalidMeasurement { .. })));
    }

    #[test]
    fn malformed_documents_rejected() {
        for text in [
            "not json",
            r#"{"kind":"povm","dim":1,"outcomes":1,"elements":[[[1.0]]]}"#,
            r#"{"kind":"povm","dim":1,"outcomes":2,"elements":[[[[1.0,0.0]]]]}"#,
            r#"{"kind":"channel","dim":1,"outcomes":1,"elements":[]}"#,
        ] {
            assert!(matches!(parse_measurement("x", text), Err(CliError::MalformedFile { .. })), "{text}");
        }
        let ok = r#"{"kind":"povm","dim":1,"outcomes":1,"elements":[[[[1.0,0.0]]]]}"#;
        assert!(parse_measurement("x", ok).is_ok());
    }
}
