//! Trained probe parameters as JSON.
//!
//! `input_scale` is the factor applied to raw embedding rows before they
//! enter the probe. It is fixed at training time from the largest row norm
//! in the training data so that the same factor can be reused at inference.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{json_error, read_text, write_atomic, FormatError, Position};
use crate::geometry::PoincarePoint;
use crate::probes::{SemanticProbe, SyntaxProbe, TrainLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProbeFile {
    Semantic {
        input_scale: f64,
        /// `d_out` rows of `d_in` values.
        projection: Vec<Vec<f64>>,
        prototypes: Vec<Vec<f64>>,
        #[serde(default)]
        log: TrainLog,
    },
    Syntax {
        input_scale: f64,
        projection: Vec<Vec<f64>>,
        #[serde(default)]
        log: TrainLog,
    },
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err("projection is empty".into());
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(format!("projection row {i} has {} values, expected {c}", rows[i].len()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err("projection has a non-finite value".into());
    }
    Ok(Array2::from_shape_vec((r, c), flat).expect("shape checked"))
}

impl ProbeFile {
    pub fn semantic(probe: &SemanticProbe, input_scale: f64, log: TrainLog) -> Self {
        ProbeFile::Semantic {
            input_scale,
            projection: rows(&probe.projection),
            prototypes: probe.prototypes.iter().map(|p| p.coords().to_vec()).collect(),
            log,
        }
    }

    pub fn syntax(probe: &SyntaxProbe, input_scale: f64, log: TrainLog) -> Self {
        ProbeFile::Syntax {
            input_scale,
            projection: rows(&probe.projection),
            log,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProbeFile::Semantic { .. } => "semantic",
            ProbeFile::Syntax { .. } => "syntax",
        }
    }

    pub fn input_scale(&self) -> f64 {
        match self {
            ProbeFile::Semantic { input_scale, .. } | ProbeFile::Syntax { input_scale, .. } => *input_scale,
        }
    }

    pub fn log(&self) -> &TrainLog {
        match self {
            ProbeFile::Semantic { log, .. } | ProbeFile::Syntax { log, .. } => log,
        }
    }

    fn check_scale(&self) -> Result<(), String> {
        let s = self.input_scale();
        if !(s.is_finite() && s > 0.0) {
            return Err(format!("input_scale {s} must be positive and finite"));
        }
        Ok(())
    }

    pub fn to_semantic(&self) -> Result<SemanticProbe, String> {
        self.check_scale()?;
        match self {
            ProbeFile::Semantic {
                projection, prototypes, ..
            } => {
                let a = matrix(projection)?;
                let protos = prototypes
                    .iter()
                    .enumerate()
                    .map(|(k, c)| PoincarePoint::new(c.clone()).map_err(|e| format!("prototype {k}: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                SemanticProbe::new(a, protos).map_err(|e| e.to_string())
            }
            ProbeFile::Syntax { .. } => Err("expected a semantic probe, found syntax".into()),
        }
    }

    pub fn to_syntax(&self) -> Result<SyntaxProbe, String> {
        self.check_scale()?;
        match self {
            ProbeFile::Syntax { projection, .. } => SyntaxProbe::new(matrix(projection)?).map_err(|e| e.to_string()),
            ProbeFile::Semantic { .. } => Err("expected a syntax probe, found semantic".into()),
        }
    }
}

pub fn load_probe(path: &Path) -> Result<ProbeFile, FormatError> {
    let text = read_text(path)?;
    let file: ProbeFile = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    let check = match &file {
        ProbeFile::Semantic { .. } => file.to_semantic().map(drop),
        ProbeFile::Syntax { .. } => file.to_syntax().map(drop),
    };
    check.map_err(|m| FormatError::invalid(path, Position::File, m))?;
    Ok(file)
}

pub fn write_probe(path: &Path, file: &ProbeFile) -> Result<(), FormatError> {
    let mut s = serde_json::to_string_pretty(file).expect("probe serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
