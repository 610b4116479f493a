use crate::error::{Error, Result};
use crate::opensystem::CombModelConfig;
use crate::qalg::C64;
use serde::{Deserialize, Serialize};

/// One tunable comb setting, indexed by conversion path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlParam {
    LamAmp(usize),
    LamPhase(usize),
    OmegaAmp(usize),
    OmegaPhase(usize),
}

impl ControlParam {
    pub fn all() -> Vec<Self> {
        (0..4).flat_map(|k| [Self::OmegaAmp(k), Self::LamAmp(k), Self::OmegaPhase(k), Self::LamPhase(k)]).collect()
    }

    fn is_amplitude(self) -> bool {
        matches!(self, Self::LamAmp(_) | Self::OmegaAmp(_))
    }

    fn slot(self, cfg: &mut CombModelConfig) -> Result<&mut C64> {
        let (arr, k) = match self {
            Self::LamAmp(k) | Self::LamPhase(k) => (&mut cfg.lam, k),
            Self::OmegaAmp(k) | Self::OmegaPhase(k) => (&mut cfg.omega, k),
        };
        arr.get_mut(k).ok_or_else(|| Error::InvalidInput(format!("path index {k} out of range")))
    }

    /// Relative amplitude change or absolute phase change in radians.
    fn apply(self, cfg: &CombModelConfig, step: f64) -> Result<CombModelConfig> {
        let mut out = cfg.clone();
        let z = self.slot(&mut out)?;
        *z = if self.is_amplitude() { *z * (1.0 + step) } else { *z * C64::from_polar(1.0, step) };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    pub params: Vec<ControlParam>,
    /// Initial relative amplitude step.
    pub amp_step: f64,
    /// Initial phase step, rad.
    pub phase_step: f64,
    /// Search stops once every step has been halved below this fraction of its initial value.
    pub min_step_ratio: f64,
    pub max_sweeps: usize,
    /// Smallest cost gain accepted as an improvement.
    pub tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { params: ControlParam::all(), amp_step: 0.05, phase_step: 0.05, min_step_ratio: 0.1, max_sweeps: 10, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub config: CombModelConfig,
    pub cost: f64,
    pub initial_cost: f64,
    pub evaluations: usize,
    /// Every accepted configuration with its cost, starting from the input.
    pub history: Vec<(CombModelConfig, f64)>,
}

/// Coordinate search maximizing `cost`, one comb setting at a time. A step is
/// kept only if it raises the cost, so the result never scores below the start.
pub fn empirical_optimizer(
    init: &CombModelConfig,
    cost: impl Fn(&CombModelConfig) -> Result<f64>,
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    if opts.params.is_empty() || !(opts.amp_step > 0.0) || !(opts.phase_step > 0.0) {
        return Err(Error::InvalidInput("optimizer needs parameters and positive steps".into()));
    }
    let mut cfg = init.clone();
    let mut best = cost(&cfg)?;
    let initial_cost = best;
    let mut evaluations = 1;
    let mut history = vec![(cfg.clone(), best)];
    let initial: Vec<f64> = opts.params.iter().map(|p| if p.is_amplitude() { opts.amp_step } else { opts.phase_step }).collect();
    let mut steps = initial.clone();
    for _ in 0..opts.max_sweeps {
        for (i, &param) in opts.params.iter().enumerate() {
            if steps[i] < opts.min_step_ratio * initial[i] {
                continue;
            }
            let mut moved = false;
            for dir in [1.0, -1.0] {
                loop {
                    let trial = param.apply(&cfg, dir * steps[i])?;
                    let c = cost(&trial)?;
                    evaluations += 1;
                    if c > best + opts.tolerance {
                        cfg = trial;
                        best = c;
                        moved = true;
                        history.push((cfg.clone(), best));
                    } else {
                        break;
                    }
                }
                if moved {
                    break;
                }
            }
            if !moved {
                steps[i] *= 0.5;
            }
        }
        if steps.iter().zip(&initial).all(|(s, s0)| *s < opts.min_step_ratio * s0) {
            break;
        }
    }
    Ok(OptimizerResult { config: cfg, cost: best, initial_cost, evaluations, history })
}
