//! Error-budget bookkeeping: per-mechanism occurrence rates and their
//! longitudinal and transverse contributions, in ms⁻¹.

use crate::circuitmodel::DeviceParams;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Mean photon number of the code words used to turn per-loss probabilities into rates.
pub const CODE_NBAR: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Occurrence {
    /// ms⁻¹
    Rate(f64),
    /// Probability per photon-loss event; multiplies n̄/T1A.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contribution {
    /// Same as the occurrence rate.
    Occurrence,
    /// ms⁻¹
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorChannelRow {
    pub name: String,
    pub occurrence: Occurrence,
    #[serde(default)]
    pub longitudinal: Option<Contribution>,
    #[serde(default)]
    pub transverse: Option<Contribution>,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default = "default_nbar")]
    pub nbar: f64,
    pub rows: Vec<ErrorChannelRow>,
}

fn default_nbar() -> f64 {
    CODE_NBAR
}

/// fraction·n̄/T1A in ms⁻¹ with n̄ = 3.5.
pub fn rate_row_from_fraction(fraction: f64, p: &DeviceParams) -> Result<f64> {
    rate_from_fraction(fraction, CODE_NBAR, p)
}

fn rate_from_fraction(fraction: f64, nbar: f64, p: &DeviceParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside [0, 1]")));
    }
    Ok(fraction * nbar / (p.t1a * 1e-3))
}

impl ErrorChannelRow {
    fn new(name: &str, occurrence: Occurrence, longitudinal: Option<Contribution>, transverse: Option<Contribution>, provenance: &str) -> Self {
        Self { name: name.into(), occurrence, longitudinal, transverse, provenance: provenance.into() }
    }

    /// Occurrence rate in ms⁻¹.
    pub fn occurrence_rate(&self, nbar: f64, p: &DeviceParams) -> Result<f64> {
        match self.occurrence {
            Occurrence::Rate(x) if x >= 0.0 => Ok(x),
            Occurrence::Rate(x) => Err(Error::InvalidInput(format!("{}: negative rate {x}", self.name))),
            Occurrence::Fraction(f) => rate_from_fraction(f, nbar, p),
        }
    }

    fn contribution(&self, c: Option<Contribution>, nbar: f64, p: &DeviceParams) -> Result<f64> {
        match c {
            None => Ok(0.0),
            Some(Contribution::Occurrence) => self.occurrence_rate(nbar, p),
            Some(Contribution::Rate(x)) if x >= 0.0 => Ok(x),
            Some(Contribution::Rate(x)) => Err(Error::InvalidInput(format!("{}: negative contribution {x}", self.name))),
        }
    }

    /// (longitudinal, transverse) in ms⁻¹.
    pub fn contributions(&self, nbar: f64, p: &DeviceParams) -> Result<(f64, f64)> {
        Ok((self.contribution(self.longitudinal, nbar, p)?, self.contribution(self.transverse, nbar, p)?))
    }
}

impl Budget {
    /// The measured decoherence breakdown of the PReSPA-protected memory.
    pub fn reference() -> Self {
        use Contribution::{Occurrence as Occ, Rate};
        use Occurrence::{Fraction, Rate as R};
        let row = ErrorChannelRow::new;
        Self {
            nbar: CODE_NBAR,
            rows: vec![
                row(
                    "transmon heating γ↑",
                    R(1.8),
                    Some(Rate(2.16)),
                    Some(Occ),
                    "heating during conversion triggers a two-photon gain; 60% of events flip the logical state, counted twice for the longitudinal rate",
                ),
                row("other cavity dephasing", R(0.4), None, Some(Occ), "cavity pure dephasing beyond the heating contribution"),
                row("ancilla relaxation T1q", Fraction(0.07), None, Some(Occ), "∫P_e dt / T1q over one conversion"),
                row("second photon decay", Fraction(0.06), Some(Rate(0.7)), Some(Occ), "a second loss before the first is recovered"),
                row("comb distortion", Fraction(0.03), None, Some(Occ), "amplitude and phase errors of the multi-tone drive"),
                row("incorrect Raman transition", Fraction(0.03), None, Some(Occ), "off-resonant conversion of odd photon numbers"),
                row("Kerr", Fraction(0.02), None, Some(Occ), "self-Kerr phase accumulated while waiting for recovery"),
                row("χ'", Fraction(0.01), None, Some(Occ), "second-order dispersive phase during conversion"),
                row("other PReSPA phase errors", Fraction(0.02), None, Some(Occ), "residual phase mismatch between the four paths"),
            ],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !(b.nbar > 0.0) {
            return Err(Error::Config(format!("nbar must be positive, got {}", b.nbar)));
        }
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("budget serializes")
    }

    pub fn format_table(&self, p: &DeviceParams) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "{:<30} {:>12} {:>14} {:>14}", "mechanism", "rate ms⁻¹", "longitudinal", "transverse");
        for row in &self.rows {
            let occ = row.occurrence_rate(self.nbar, p)?;
            let (l, t) = row.contributions(self.nbar, p)?;
            let _ = writeln!(out, "{:<30} {:>12.3} {:>14.3} {:>14.3}", row.name, occ, l, t);
        }
        let (l, t) = budget_totals(self, p)?;
        let _ = writeln!(out, "{:<30} {:>12} {:>14.3} {:>14.3}", "total", "", l, t);
        let _ = writeln!(out, "{:<30} {:>12} {:>14.1} {:>14.1}", "1/total (μs)", "", 1e3 / l, 1e3 / t);
        Ok(out)
    }
}

/// Column sums (Γ_long, Γ_trans) in ms⁻¹.
pub fn budget_totals(budget: &Budget, p: &DeviceParams) -> Result<(f64, f64)> {
    budget.rows.iter().try_fold((0.0, 0.0), |(l, t), row| {
        let (a, b) = row.contributions(budget.nbar, p)?;
        Ok((l + a, t + b))
    })
}
