//! Text format for cocycles.
//!
//! ```toml
//! schema = 1
//! alphabet_size = 2          # optional, checked when present
//! weights = [0.7, 0.3]
//! # one matrix per symbol: [a, b, c, d] as [re, im] pairs, row-major
//! matrices = [
//!   [[2.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
//!   [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [2.0, 0.0]],
//! ]
//! ```
//!
//! A window cocycle replaces `matrices` by a `[window]` table with `radius`
//! and `table`, listing all `m^(2·radius+1)` window words in base-`m` order
//! (coordinate `-radius` most significant).

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, FiniteCocycle, WindowCocycle, WindowField};
use crate::error::{Error, Result};
use crate::projective::Mat2C;

pub const SCHEMA_VERSION: u32 = 1;

/// `[a, b, c, d]`, each `[re, im]`.
pub type MatrixEntries = [[f64; 2]; 4];

pub fn matrix_from_entries(e: &MatrixEntries) -> Mat2C {
    let c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
    Mat2C::new(c(e[0]), c(e[1]), c(e[2]), c(e[3]))
}

pub fn matrix_to_entries(m: &Mat2C) -> MatrixEntries {
    m.entries().map(|z| [z.re, z.im])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowDef {
    pub radius: usize,
    pub table: Vec<MatrixEntries>,
}

/// Serialized form of a cocycle; also embedded inline in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleDef {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<MatrixEntries>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowDef>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// A parsed cocycle of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCocycle {
    Finite(FiniteCocycle),
    Window(WindowCocycle),
}

impl AnyCocycle {
    pub fn as_finite(&self) -> Option<&FiniteCocycle> {
        match self {
            AnyCocycle::Finite(c) => Some(c),
            AnyCocycle::Window(_) => None,
        }
    }

    pub fn as_dyn(&self) -> &dyn Cocycle {
        match self {
            AnyCocycle::Finite(c) => c,
            AnyCocycle::Window(c) => c,
        }
    }
}

impl CocycleDef {
    pub fn from_finite(c: &FiniteCocycle) -> Self {
        CocycleDef {
            schema: SCHEMA_VERSION,
            alphabet_size: Some(c.len()),
            weights: c.weights().to_vec(),
            matrices: Some(c.matrices().iter().map(matrix_to_entries).collect()),
            window: None,
        }
    }

    pub fn build(&self) -> Result<AnyCocycle> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported cocycle schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let m = self.weights.len();
        if let Some(declared) = self.alphabet_size {
            if declared != m {
                return Err(Error::AlphabetMismatch {
                    left: declared,
                    right: m,
                });
            }
        }
        match (&self.matrices, &self.window) {
            (Some(ms), None) => {
                let matrices = ms.iter().map(matrix_from_entries).collect();
                Ok(AnyCocycle::Finite(FiniteCocycle::new(
                    matrices,
                    self.weights.clone(),
                )?))
            }
            (None, Some(w)) => {
                let table = w.table.iter().map(matrix_from_entries).collect();
                let field = WindowField::new(m, w.radius, table)?;
                Ok(AnyCocycle::Window(WindowCocycle::new(
                    field,
                    self.weights.clone(),
                )?))
            }
            _ => Err(Error::Parse(
                "exactly one of `matrices` and `[window]` must be given".into(),
            )),
        }
    }
}

pub fn parse_cocycle(text: &str) -> Result<AnyCocycle> {
    let def: CocycleDef = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    def.build()
}

pub fn load_cocycle(path: &Path) -> Result<AnyCocycle> {
    parse_cocycle(&std::fs::read_to_string(path)?)
}

pub fn cocycle_to_toml(c: &FiniteCocycle) -> String {
    toml::to_string(&CocycleDef::from_finite(c)).expect("cocycle definitions always serialize")
}
