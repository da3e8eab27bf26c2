//! Row types with their fixed CSV column names, and the JSON envelope.

use nhbose_core::algebra::IdentityRow;
use serde::Serialize;

use crate::{CliError, RunConfig, TOOL_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub closed_form: f64,
    pub abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumrangeRow {
    pub theta: f64,
    #[serde(rename = "E_numeric")]
    pub e_numeric: f64,
    #[serde(rename = "E_closed")]
    pub e_closed: f64,
    pub x: f64,
    pub y: f64,
    pub envelope_y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudoRow {
    pub re: f64,
    pub im: f64,
    /// Empty in CSV, `null` in JSON where the solver failed.
    pub sigma_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub m: usize,
    pub n: usize,
    pub norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WkbOutRow {
    pub hbar: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiorthRow {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccretiveRow {
    /// `resolvent` or `rayleigh`
    pub kind: &'static str,
    pub re: f64,
    pub im: f64,
    pub sigma_min: Option<f64>,
    pub bound: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeRow {
    pub m: usize,
    pub n: usize,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Identities(Vec<IdentityRow>),
    Spectrum(Vec<SpectrumRow>),
    Numrange(Vec<NumrangeRow>),
    Pseudo(Vec<PseudoRow>),
    Biorth(Vec<BiorthRow>),
    Norms(Vec<NormRow>),
    Accretive(Vec<AccretiveRow>),
    Wkb(Vec<WkbOutRow>),
    Amplitudes(Vec<AmplitudeRow>),
}

const IDENTITY_COLUMNS: &[&str] = &["identity_name", "status", "residual_monomial_count"];

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Identities(r) => r.len(),
            Rows::Spectrum(r) => r.len(),
            Rows::Numrange(r) => r.len(),
            Rows::Pseudo(r) => r.len(),
            Rows::Biorth(r) => r.len(),
            Rows::Norms(r) => r.len(),
            Rows::Accretive(r) => r.len(),
            Rows::Wkb(r) => r.len(),
            Rows::Amplitudes(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column names, written even when there are no rows.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Rows::Identities(_) => IDENTITY_COLUMNS,
            Rows::Spectrum(_) => &["index", "re", "im", "closed_form", "abs_err"],
            Rows::Numrange(_) => &["theta", "E_numeric", "E_closed", "x", "y", "envelope_y"],
            Rows::Pseudo(_) => &["re", "im", "sigma_min"],
            Rows::Biorth(_) => &["m", "n", "p", "q", "value"],
            Rows::Norms(_) => &["m", "n", "norm_sq"],
            Rows::Accretive(_) => &["kind", "re", "im", "sigma_min", "bound", "holds"],
            Rows::Wkb(_) => &["hbar", "I1", "I2", "I3"],
            Rows::Amplitudes(_) => &["m", "n", "coefficient"],
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(self.columns()).map_err(ser)?;
        fn all<T: Serialize>(w: &mut csv::Writer<Vec<u8>>, rows: &[T]) -> Result<(), CliError> {
            rows.iter().try_for_each(|r| w.serialize(r).map_err(ser))
        }
        match self {
            Rows::Identities(r) => all(&mut w, r)?,
            Rows::Spectrum(r) => all(&mut w, r)?,
            Rows::Numrange(r) => all(&mut w, r)?,
            Rows::Pseudo(r) => all(&mut w, r)?,
            Rows::Biorth(r) => all(&mut w, r)?,
            Rows::Norms(r) => all(&mut w, r)?,
            Rows::Accretive(r) => all(&mut w, r)?,
            Rows::Wkb(r) => all(&mut w, r)?,
            Rows::Amplitudes(r) => all(&mut w, r)?,
        }
        w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))
    }
}

fn ser(e: csv::Error) -> CliError {
    CliError::Serialize(e.to_string())
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool_version: &'static str,
    command: &'static str,
    params: &'a RunConfig,
    rows: &'a Rows,
}

pub fn to_json(cfg: &RunConfig, rows: &Rows) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        tool_version: TOOL_VERSION,
        command: cfg.command.name(),
        params: cfg,
        rows,
    };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| CliError::Serialize(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
