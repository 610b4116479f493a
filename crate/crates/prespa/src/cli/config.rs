use crate::circuitmodel::DeviceParams;
use crate::codes::cardinal_states;
use crate::decoder::FidelityConvention;
use crate::error::{Error, Result};
use crate::experiments::{CodeChoice, DecodePath, LifetimeMode, RamseyConfig, RamseyFrame, Spectroscopy2dConfig};
use crate::grape::{AdamConfig, CavityTransmonDims, CostWeights};
use crate::opensystem::{CombModelConfig, NoiseToggles};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Measured device values with the larger cavity truncation.
    Paper,
    /// Measured device values at truncations that run in seconds to minutes.
    Desk,
}

/// Everything a run needs. Every section has defaults, so `{}` is a valid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub device: DeviceParams,
    pub code: CodeChoice,
    pub comb: CombModelConfig,
    /// Replaces `comb.noise` when present.
    pub noise: Option<NoiseToggles>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub lifetime: LifetimeSection,
    pub trajectory: TrajectorySection,
    pub rates: RatesSection,
    pub spectroscopy: SpectroscopySection,
    pub spectroscopy2d: Spectroscopy2dSection,
    pub ramsey: RamseySection,
    pub wigner: WignerSection,
    pub chi: ChiSection,
    pub steady: SteadySection,
    pub heating: HeatingSection,
    pub grape: GrapeSection,
    pub budget: BudgetSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        let mut cfg = Self {
            version: CONFIG_VERSION,
            device: DeviceParams::paper(),
            code: CodeChoice::Optimal,
            comb: CombModelConfig::default(),
            noise: None,
            seed: 0,
            output: None,
            lifetime: LifetimeSection::default(),
            trajectory: TrajectorySection::default(),
            rates: RatesSection::default(),
            spectroscopy: SpectroscopySection::default(),
            spectroscopy2d: Spectroscopy2dSection::default(),
            ramsey: RamseySection::default(),
            wigner: WignerSection::default(),
            chi: ChiSection::default(),
            steady: SteadySection::default(),
            heating: HeatingSection::default(),
            grape: GrapeSection::default(),
            budget: BudgetSection::default(),
        };
        if profile == Profile::Paper {
            cfg.comb.cavity_dim = 24;
            cfg.ramsey.ramsey.dim = 24;
            cfg.grape.dims = CavityTransmonDims::paper();
        }
        cfg
    }

    pub fn from_json(text: &str, base: Profile) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = serde_json::to_value(Self::profile(base)).map_err(|e| Error::Config(e.to_string()))?;
        if !value.is_object() {
            return Err(Error::Config("configuration must be a JSON object".into()));
        }
        merge(&mut merged, value.take());
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version)));
        }
        self.device.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.comb.cavity_dim < 8 {
            return Err(Error::Config("comb.cavity_dim must be at least 8".into()));
        }
        Ok(())
    }

    /// The comb model settings with the top-level noise override applied.
    pub fn effective_comb(&self) -> CombModelConfig {
        let mut c = self.comb.clone();
        if let Some(n) = self.noise {
            c.noise = n;
        }
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Overlays `patch` onto `base`, recursing into objects. Keys absent from
/// `base` are kept so the typed parse can reject them.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cardinal {
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Cardinal {
    pub fn amplitudes(self) -> crate::codes::LogicalAmplitudes {
        let k = match self {
            Cardinal::PlusZ => 0,
            Cardinal::MinusZ => 1,
            Cardinal::PlusX => 2,
            Cardinal::MinusX => 3,
            Cardinal::PlusY => 4,
            Cardinal::MinusY => 5,
        };
        cardinal_states()[k].1
    }
}

/// A cavity input: a logical code state, a Fock state or the equal
/// superposition of two Fock states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityInput {
    Logical(Cardinal),
    Fock(usize),
    Superposition([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifetimeSection {
    pub mode: LifetimeMode,
    /// μs
    pub tmax: f64,
    pub tstep: f64,
    pub fidelity: FidelityConvention,
    /// μs⁻¹
    pub loss_rate: Option<f64>,
    pub decode: DecodePath,
    pub jmax: usize,
}

impl Default for LifetimeSection {
    fn default() -> Self {
        Self { mode: LifetimeMode::IdealPrespa, tmax: 2000.0, tstep: 50.0, fidelity: FidelityConvention::Squared, loss_rate: None, decode: DecodePath::Mathematical, jmax: 80 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub input: CavityInput,
    /// Dimensionless loss exposure κt.
    pub kappa_t: f64,
    /// μs⁻¹; 1/T1A when absent.
    pub kappa: Option<f64>,
    pub ntraj: usize,
    pub jmax: usize,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self { input: CavityInput::Logical(Cardinal::PlusX), kappa_t: 0.5, kappa: None, ntraj: 10_000, jmax: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    /// Path (0-based) used to calibrate both prefactors.
    pub calibration_path: usize,
    /// kHz
    pub omega_target: f64,
    pub lambda_target: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self { calibration_path: 1, omega_target: 127.0, lambda_target: 28.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectroscopySection {
    pub input: CavityInput,
    /// Comb-model evolution before the probe, μs.
    pub hold: f64,
    /// MHz
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub points: usize,
}

impl Default for SpectroscopySection {
    fn default() -> Self {
        Self { input: CavityInput::Fock(0), hold: 25.0, detuning_min: -10.0, detuning_max: 1.0, points: 1101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spectroscopy2dSection {
    pub init_fock: usize,
    /// MHz, relative to the zero-photon resonances.
    pub dq_min: f64,
    pub dq_max: f64,
    pub dq_points: usize,
    pub dm_min: f64,
    pub dm_max: f64,
    pub dm_points: usize,
    pub drive: Spectroscopy2dConfig,
}

impl Default for Spectroscopy2dSection {
    fn default() -> Self {
        Self { init_fock: 0, dq_min: -0.3, dq_max: 0.3, dq_points: 31, dm_min: -3.0, dm_max: 3.0, dm_points: 31, drive: Spectroscopy2dConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseySection {
    pub input: CavityInput,
    /// Displacement of the parity probe.
    pub probe_re: f64,
    pub probe_im: f64,
    /// μs
    pub tmax: f64,
    pub points: usize,
    pub ramsey: RamseyConfig,
}

impl Default for RamseySection {
    fn default() -> Self {
        Self {
            input: CavityInput::Superposition([1, 5]),
            probe_re: 0.8,
            probe_im: 0.0,
            tmax: 400.0,
            points: 201,
            ramsey: RamseyConfig { frame: RamseyFrame::Lab, ..RamseyConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerSection {
    pub input: CavityInput,
    /// Grid covers [−extent, extent] in both quadratures.
    pub extent: f64,
    pub points: usize,
    /// Also reconstruct the state from the sampled grid and report the fidelity.
    pub reconstruct: bool,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self { input: CavityInput::Logical(Cardinal::PlusZ), extent: 3.0, points: 41, reconstruct: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiChannelKind {
    Identity,
    IdealPrespa,
    Comb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiSection {
    pub channel: ChiChannelKind,
    /// μs
    pub duration: f64,
    pub support: usize,
    pub levels: Vec<usize>,
    pub shift: usize,
}

impl Default for ChiSection {
    fn default() -> Self {
        Self { channel: ChiChannelKind::Comb, duration: 25.0, support: 8, levels: vec![0, 2, 4, 6], shift: 1 }
    }
}

/// The comb model keeps slow residual rotations, so the long-time state is
/// reached by integration rather than a null-space solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadySection {
    pub input: CavityInput,
    /// μs
    pub time: f64,
}

impl Default for SteadySection {
    fn default() -> Self {
        Self { input: CavityInput::Fock(0), time: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingSection {
    /// kHz
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// ms⁻¹
    pub gamma_up: f64,
}

impl Default for HeatingSection {
    fn default() -> Self {
        Self { omega_min: 10.0, omega_max: 300.0, points: 30, gamma_up: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrapeTask {
    /// |g,0⟩ → |g,0_L⟩
    Prepare,
    /// The seven-dimensional decoding map.
    Decode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrapeSection {
    pub task: GrapeTask,
    pub dims: CavityTransmonDims,
    /// μs
    pub duration: f64,
    /// ns
    pub dt: f64,
    pub weights: CostWeights,
    pub adam: AdamConfig,
}

impl Default for GrapeSection {
    fn default() -> Self {
        Self {
            task: GrapeTask::Prepare,
            dims: CavityTransmonDims::desk(),
            duration: 1.0,
            dt: 1.0,
            weights: CostWeights::default(),
            adam: AdamConfig { threshold: 0.01, ..AdamConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    /// Budget JSON; the reference breakdown when absent.
    pub input: Option<PathBuf>,
}

/// Parses a duration with an optional unit suffix (ns, us, μs, ms, s) into μs.
pub fn parse_duration_us(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let (num, scale) = [("ns", 1e-3), ("us", 1.0), ("μs", 1.0), ("ms", 1e3), ("s", 1e6)]
        .iter()
        .find_map(|(suffix, scale)| t.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((t, 1.0));
    let v: f64 = num.trim().parse().map_err(|_| format!("cannot parse duration '{text}'"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("duration must be finite and non-negative, got '{text}'"));
    }
    Ok(v * scale)
}
