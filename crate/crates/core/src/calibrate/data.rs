use std::io::Read;

use crate::{Error, Result};

/// Measured fluorescence versus repump detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanData {
    /// Repump detuning [Hz].
    pub detuning_hz: Vec<f64>,
    /// Count rate [counts/s].
    pub rate: Vec<f64>,
    /// One-sigma uncertainty of each rate [counts/s].
    pub sigma: Vec<f64>,
}

impl ScanData {
    /// Without explicit uncertainties each point gets Poisson error √N for
    /// N counts in one second, floored at one count.
    pub fn new(detuning_hz: Vec<f64>, rate: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        let sigma = sigma.unwrap_or_else(|| rate.iter().map(|r| r.max(1.0).sqrt()).collect());
        if detuning_hz.len() != rate.len() || rate.len() != sigma.len() {
            return Err(Error::config(format!(
                "scan columns differ in length: {} detunings, {} rates, {} uncertainties",
                detuning_hz.len(),
                rate.len(),
                sigma.len()
            )));
        }
        if detuning_hz.is_empty() {
            return Err(Error::config("scan has no points"));
        }
        if let Some(i) = sigma.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("uncertainty of point {i} is not positive")));
        }
        if detuning_hz.iter().chain(&rate).any(|v| !v.is_finite()) {
            return Err(Error::config("scan contains non-finite values"));
        }
        Ok(ScanData { detuning_hz, rate, sigma })
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    /// Reads `detuning_hz,rate_cps[,sigma_cps]` rows. A first row that does not
    /// parse as numbers is taken as a header. Either every row has a sigma
    /// column or none does.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
        let (mut det, mut rate, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
        let mut with_sigma = None;
        for (row, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format { offset: e.position().map_or(0, |p| p.byte()), reason: e.to_string() })?;
            let offset = rec.position().map_or(0, |p| p.byte());
            let fields: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let fields = match fields {
                Ok(f) => f,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(Error::Format { offset, reason: format!("row {}: {e}", row + 1) }),
            };
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::Format { offset, reason: format!("row {}: expected 2 or 3 columns", row + 1) });
            }
            let has = fields.len() == 3;
            if *with_sigma.get_or_insert(has) != has {
                return Err(Error::Format { offset, reason: format!("row {}: sigma column present in some rows only", row + 1) });
            }
            det.push(fields[0]);
            rate.push(fields[1]);
            if has {
                sigma.push(fields[2]);
            }
        }
        Self::new(det, rate, with_sigma.unwrap_or(false).then_some(sigma))
    }
}
