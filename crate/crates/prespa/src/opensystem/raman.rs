use super::{steady_state, EvolveOptions, LindbladGenerator, NoiseModel, NoiseToggles};
use crate::circuitmodel::{drive_hamiltonian, DeviceParams, ModeLayout};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::qalg::{r, CMat, HilbertSpace, Operator};
use std::f64::consts::TAU;

/// Four-level two-stage Raman model on |2n,g,0⟩, |2n,e,0⟩, |2n+1,g,1⟩, |2n+1,g,0⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanModel {
    /// Reservoir decay rate, μs⁻¹.
    pub kappa: f64,
    /// Transmon relaxation time, μs.
    pub t1q: Option<f64>,
    /// Transmon pure dephasing rate, μs⁻¹.
    pub gamma_phi_q: Option<f64>,
    /// Transmon-tone and mixing-tone detunings, kHz.
    pub det_q: f64,
    pub det_m: f64,
}

impl RamanModel {
    pub fn ideal(p: &DeviceParams) -> Self {
        Self { kappa: TAU * p.kappa_r, t1q: None, gamma_phi_q: None, det_q: 0.0, det_m: 0.0 }
    }

    pub fn with_device_noise(p: &DeviceParams) -> Self {
        Self { t1q: Some(p.t1q), gamma_phi_q: Some(p.transmon_pure_dephasing()), ..Self::ideal(p) }
    }

    pub(crate) fn generator(&self, omega: f64, lam: f64) -> Result<LindbladGenerator> {
        let khz = TAU * 1e-3;
        let mut h = CMat::zeros(4, 4);
        h[(1, 0)] = r(khz * lam);
        h[(0, 1)] = r(khz * lam);
        h[(2, 1)] = r(khz * omega);
        h[(1, 2)] = r(khz * omega);
        h[(1, 1)] = r(-khz * self.det_q);
        h[(2, 2)] = r(-khz * (self.det_q + self.det_m));
        h[(3, 3)] = r(-khz * (self.det_q + self.det_m));
        let mut noise = NoiseModel::new();
        let unit = |i: usize, j: usize| {
            let mut m = CMat::zeros(4, 4);
            m[(i, j)] = r(1.0);
            m
        };
        noise.push("reservoir decay", unit(3, 2), self.kappa)?;
        if let Some(t1) = self.t1q {
            noise.push("transmon decay", unit(0, 1), 1.0 / t1)?;
        }
        if let Some(g) = self.gamma_phi_q {
            noise.push("transmon dephasing", unit(1, 1), 2.0 * g)?;
        }
        LindbladGenerator::from_noise(&h, &noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanCurves {
    pub times: Vec<f64>,
    /// Transmon excited-state population.
    pub p_excited: Vec<f64>,
    /// Population of the target odd photon number.
    pub p_target: Vec<f64>,
}

pub fn raman_curves(model: &RamanModel, omega: f64, lam: f64, times: &[f64]) -> Result<RamanCurves> {
    let g = model.generator(omega, lam)?;
    let mut rho0 = CMat::zeros(4, 4);
    rho0[(0, 0)] = r(1.0);
    let out = g.evolve(&rho0, times, &EvolveOptions::default())?;
    Ok(RamanCurves {
        times: times.to_vec(),
        p_excited: out.iter().map(|m| m[(1, 1)].re).collect(),
        p_target: out.iter().map(|m| m[(2, 2)].re + m[(3, 3)].re).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanFit {
    pub omega: f64,
    pub lambda: f64,
    pub scale: f64,
    pub rms: f64,
}

/// Least-squares fit of (Ω, λ, scale) to measured curves; `guess` seeds
/// (Ω, λ) in kHz.
pub fn raman_fit(model: &RamanModel, data: &RamanCurves, guess: (f64, f64), max_rms: f64) -> Result<RamanFit> {
    if data.times.len() != data.p_excited.len() || data.times.len() != data.p_target.len() || data.times.len() < 3 {
        return Err(Error::InvalidInput("Raman curves must share a grid of at least 3 points".into()));
    }
    let residual = |q: &[f64]| -> Vec<f64> {
        match raman_curves(model, q[0], q[1], &data.times) {
            Ok(c) => c
                .p_excited
                .iter()
                .zip(&data.p_excited)
                .chain(c.p_target.iter().zip(&data.p_target))
                .map(|(m, d)| q[2] * m - d)
                .chain(std::iter::once(1e-3 * (q[2] - 1.0)))
                .collect(),
            Err(_) => vec![f64::NAN; 2 * data.times.len() + 1],
        }
    };
    let res = levenberg_marquardt(residual, &[guess.0, guess.1, 1.0], &FitOptions { tolerance: 1e-12, ..FitOptions::default() })?;
    if !(res.rms <= max_rms) {
        return Err(Error::Fit { residual: res.rms });
    }
    Ok(RamanFit { omega: res.params[0].abs(), lambda: res.params[1].abs(), scale: res.params[2], rms: res.rms })
}

/// Population of |init+1⟩ in the full four-path tripartite model started in
/// |init, g, 0⟩, with only the selected noise channels.
pub fn tripartite_conversion(
    p: &DeviceParams,
    lam: f64,
    omega: f64,
    cavity_dim: usize,
    init: usize,
    times: &[f64],
    toggles: &NoiseToggles,
) -> Result<Vec<f64>> {
    let layout = ModeLayout::tripartite(cavity_dim);
    if init + 1 >= cavity_dim {
        return Err(Error::InvalidInput(format!("initial photon number {init} outside the cavity truncation")));
    }
    let h = drive_hamiltonian(lam, omega, &layout)?;
    let noise = NoiseModel::device(p, &layout, toggles)?;
    let g = LindbladGenerator::from_noise(&h.mat, &noise)?;
    let dim = g.n;
    let mut rho0 = CMat::zeros(dim, dim);
    let i0 = layout.index(init, 0, 0);
    rho0[(i0, i0)] = r(1.0);
    let out = g.evolve(&rho0, times, &EvolveOptions::default())?;
    Ok(out
        .iter()
        .map(|m| (0..2).flat_map(|q| (0..2).map(move |rr| (q, rr))).map(|(q, rr)| m[(layout.index(init + 1, q, rr), layout.index(init + 1, q, rr))].re).sum())
        .collect())
}

/// First time the curve reaches `level`, linearly interpolated.
pub fn first_crossing(times: &[f64], curve: &[f64], level: f64) -> Option<f64> {
    for k in 1..curve.len() {
        if curve[k] >= level && curve[k - 1] < level {
            let f = (level - curve[k - 1]) / (curve[k] - curve[k - 1]);
            return Some(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    None
}

/// Even-to-odd conversion half time from vacuum, μs.
pub fn conversion_halftime(p: &DeviceParams, lam: f64, omega: f64, toggles: &NoiseToggles) -> Result<f64> {
    let times: Vec<f64> = (0..=800).map(|k| k as f64 * 0.05).collect();
    let curve = tripartite_conversion(p, lam, omega, 8, 0, &times, toggles)?;
    first_crossing(&times, &curve, 0.5).ok_or_else(|| Error::Integration("conversion never reached one half within 40 μs".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingPoint {
    /// kHz
    pub omega: f64,
    /// Vacuum escape rate, ms⁻¹.
    pub gamma01: f64,
    pub p0: f64,
    pub p1: f64,
}

/// Steady-state heating with a single mixing tone on |0,e,0⟩ ↔ |1,g,1⟩.
pub fn heating_scan(p: &DeviceParams, omegas: &[f64], gamma_up: f64) -> Result<Vec<HeatingPoint>> {
    let layout = ModeLayout { cavity: 3, transmon: 2, reservoir: Some(2) };
    let space: HilbertSpace = layout.space()?;
    let toggles = NoiseToggles { transmon_heating: gamma_up, ..NoiseToggles { cavity_decay: true, transmon_decay: true, reservoir_decay: true, ..NoiseToggles::none() } };
    let noise = NoiseModel::device(p, &layout, &toggles)?;
    let dim = space.total();
    omegas
        .iter()
        .map(|&om| {
            let mut h = CMat::zeros(dim, dim);
            let (a, b) = (layout.index(0, 1, 0), layout.index(1, 0, 1));
            h[(b, a)] = r(TAU * 1e-3 * om);
            h[(a, b)] = r(TAU * 1e-3 * om);
            let ss = steady_state(&Operator::new(space.clone(), h)?, &noise)?;
            let pop = |n: usize| -> f64 { (0..2).flat_map(|q| (0..2).map(move |rr| (q, rr))).map(|(q, rr)| ss.population(layout.index(n, q, rr))).sum() };
            let (p0, p1) = (pop(0), pop(1));
            Ok(HeatingPoint { omega: om, gamma01: 1e3 * p1.max(0.0) / (p0 * p.t1a), p0, p1 })
        })
        .collect()
}

/// Rate-equation estimate γ↑·Γ/(Γ + 1/T1q) with Γ = 4Ω²/κ, ms⁻¹.
pub fn heating_rate_oracle(p: &DeviceParams, omega: f64, gamma_up: f64) -> f64 {
    let om = TAU * 1e-3 * omega;
    let gamma = 4.0 * om * om / (1.0 / p.t1r);
    gamma_up * gamma / (gamma + 1.0 / p.t1q)
}
