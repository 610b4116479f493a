use crate::circuitmodel::{dispersive_energy, DeviceParams};
use crate::error::{Error, Result};
use crate::opensystem::{EvolveOptions, RamanModel};
use crate::qalg::{r, CMat};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Excitation probability on a detuning grid. One-dimensional scans leave
/// `dm` empty; two-dimensional maps store `prob` row-major over (dq, dm).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopyResult {
    /// MHz
    pub dq: Vec<f64>,
    /// MHz
    pub dm: Vec<f64>,
    pub prob: Vec<f64>,
}

impl SpectroscopyResult {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.prob[i * self.dm.len().max(1) + j]
    }

    /// Grid indices of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let k = (0..self.prob.len()).max_by(|&a, &b| self.prob[a].total_cmp(&self.prob[b])).unwrap_or(0);
        let w = self.dm.len().max(1);
        (k / w, k % w)
    }
}

/// Half width at half maximum of the selective π-pulse line, MHz.
fn hwhm(p: &DeviceParams) -> f64 {
    1.0 / (TAU * p.t2q_star)
}

fn lorentzian(x: f64, g: f64) -> f64 {
    g * g / (x * x + g * g)
}

/// P(Δ) = Σ_n P_n·L(Δ + nχ_q) with unit-height Lorentzian lines.
pub fn transmon_spectroscopy(rho_cavity: &CMat, p: &DeviceParams, detunings: &[f64]) -> Result<SpectroscopyResult> {
    if rho_cavity.nrows() != rho_cavity.ncols() {
        return Err(Error::InvalidDimension("cavity state must be square".into()));
    }
    let g = hwhm(p);
    let pops: Vec<f64> = (0..rho_cavity.nrows()).map(|n| rho_cavity[(n, n)].re).collect();
    let prob = detunings
        .iter()
        .map(|&d| pops.iter().enumerate().map(|(n, &pn)| pn * lorentzian(d + n as f64 * p.chi_q, g)).sum::<f64>().clamp(0.0, 1.0))
        .collect();
    Ok(SpectroscopyResult { dq: detunings.to_vec(), dm: Vec::new(), prob })
}

/// Photon-number populations from a one-dimensional spectrum, by solving for
/// the line weights that reproduce the spectrum at each peak position.
pub fn peak_weights(spec: &SpectroscopyResult, p: &DeviceParams, nmax: usize) -> Result<Vec<f64>> {
    let g = hwhm(p);
    let mut a = DMatrix::<f64>::zeros(nmax, nmax);
    let mut b = DVector::<f64>::zeros(nmax);
    for k in 0..nmax {
        let d = -(k as f64) * p.chi_q;
        let i = (0..spec.dq.len())
            .min_by(|&x, &y| (spec.dq[x] - d).abs().total_cmp(&(spec.dq[y] - d).abs()))
            .ok_or_else(|| Error::InvalidInput("empty spectrum".into()))?;
        if (spec.dq[i] - d).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("grid does not contain the peak position {d} MHz")));
        }
        b[k] = spec.prob[i];
        for n in 0..nmax {
            a[(k, n)] = lorentzian(d + n as f64 * p.chi_q, g);
        }
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::InvalidInput("singular peak system".into()))?;
    Ok(x.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spectroscopy2dConfig {
    /// Transmon-tone and mixing-tone rates, kHz.
    pub lam: f64,
    pub omega: f64,
    /// Drive duration before the photon-number readout, μs.
    pub probe_time: f64,
    /// Include transmon relaxation and dephasing.
    pub device_noise: bool,
}

impl Default for Spectroscopy2dConfig {
    fn default() -> Self {
        Self { lam: 28.0, omega: 90.0, probe_time: 10.0, device_noise: true }
    }
}

/// Transmon and mixing transition offsets of the Fock-n path relative to the
/// zero-photon path, MHz.
pub fn path_offsets(p: &DeviceParams, n: usize) -> (f64, f64) {
    let e = |n, q| dispersive_energy(p, n, q) / TAU;
    let sq = (e(n, 1) - e(n, 0)) - (e(0, 1) - e(0, 0));
    let sm = (e(n + 1, 0) - e(n, 1)) - (e(1, 0) - e(0, 1));
    (sq, sm)
}

/// Photon-addition probability after the probe time as a function of the two
/// tone detunings (MHz, relative to the zero-photon resonances), starting
/// from Fock state `init_fock`. Without drives nothing is added, so this is
/// directly the selective-π minus background signal.
pub fn spectroscopy_2d(
    p: &DeviceParams,
    dq_grid: &[f64],
    dm_grid: &[f64],
    init_fock: usize,
    cfg: &Spectroscopy2dConfig,
) -> Result<SpectroscopyResult> {
    if dq_grid.iter().chain(dm_grid).any(|v| !v.is_finite()) || !(cfg.probe_time >= 0.0) {
        return Err(Error::InvalidInput("spectroscopy grids and probe time must be finite".into()));
    }
    let base = if cfg.device_noise { RamanModel::with_device_noise(p) } else { RamanModel::ideal(p) };
    let (sq, sm) = path_offsets(p, init_fock);
    let points: Vec<(f64, f64)> = dq_grid.iter().flat_map(|&a| dm_grid.iter().map(move |&b| (a, b))).collect();
    let prob = points
        .par_iter()
        .map(|&(dq, dm)| {
            if cfg.lam == 0.0 || cfg.omega == 0.0 {
                return Ok(0.0);
            }
            let model = RamanModel { det_q: 1e3 * (dq - sq), det_m: 1e3 * (dm - sm), ..base.clone() };
            let g = model.generator(cfg.omega, cfg.lam)?;
            let mut rho0 = CMat::zeros(4, 4);
            rho0[(0, 0)] = r(1.0);
            let out = g.evolve(&rho0, &[cfg.probe_time], &EvolveOptions::default())?;
            Ok((out[0][(2, 2)].re + out[0][(3, 3)].re).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectroscopyResult { dq: dq_grid.to_vec(), dm: dm_grid.to_vec(), prob })
}

/// Full width at half maximum of a sampled single-peaked line, linearly
/// interpolated; None when the line is not bracketed by the grid.
pub fn fwhm(grid: &[f64], values: &[f64]) -> Option<f64> {
    let k = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    let half = 0.5 * values[k];
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize + step) as usize;
            if values[j] < half {
                let f = (values[i] - half) / (values[i] - values[j]);
                return Some(grid[i] + f * (grid[j] - grid[i]));
            }
        }
        None
    };
    let right = cross(&mut (k..values.len() - 1), 1)?;
    let left = cross(&mut (1..=k).rev(), -1)?;
    Some(right - left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opensystem::CombModel;
    use crate::opensystem::CombModelConfig;
    use crate::qalg::CVec;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn vacuum_single_peak_at_zero() {
        let p = DeviceParams::paper();
        let mut rho = CMat::zeros(8, 8);
        rho[(0, 0)] = r(1.0);
        let d = grid(-10.0, 1.0, 1101);
        let s = transmon_spectroscopy(&rho, &p, &d).unwrap();
        let (i, _) = s.argmax();
        assert!(s.dq[i].abs() < 1e-9);
        assert!((s.prob[i] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_recover_populations() {
        let p = DeviceParams { chi_q: 1.0, ..DeviceParams::paper() };
        let pops = [0.1, 0.3, 0.05, 0.25, 0.0, 0.2, 0.0, 0.1];
        let rho = CMat::from_diagonal(&CVec::from_iterator(8, pops.iter().map(|&x| r(x))));
        let d: Vec<f64> = (0..=800).map(|k| -8.0 + 0.01 * k as f64).collect();
        let s = transmon_spectroscopy(&rho, &p, &d).unwrap();
        let w = peak_weights(&s, &p, 8).unwrap();
        for (a, b) in w.iter().zip(&pops) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn ideal_conversion_moves_peak_to_minus_chi() {
        let p = DeviceParams::paper();
        let m = CombModel::build(&p, &CombModelConfig::ideal_drive()).unwrap();
        let mut v = CVec::zeros(10);
        v[0] = r(1.0);
        let e = m.embed_state(&v);
        let out = m.evolve(&(&e * e.adjoint()), &[25.0], &EvolveOptions::default()).unwrap();
        let cav = m.cavity_state(&out[0]).unwrap();
        let d = grid(-3.0, 1.0, 401);
        let s = transmon_spectroscopy(&cav, &p, &d).unwrap();
        let (i, _) = s.argmax();
        assert!((s.dq[i] + p.chi_q).abs() < 0.011, "{}", s.dq[i]);
    }

    #[test]
    fn two_dimensional_map_peaks_on_resonance() {
        let p = DeviceParams::paper();
        let cfg = Spectroscopy2dConfig::default();
        let dq = grid(-0.2, 0.2, 21);
        let dm = grid(-1.0, 1.0, 21);
        let s = spectroscopy_2d(&p, &dq, &dm, 0, &cfg).unwrap();
        assert_eq!(s.argmax(), (10, 10));
        let (sq, sm) = path_offsets(&p, 2);
        let dq2: Vec<f64> = dq.iter().map(|x| x + sq).collect();
        let dm2: Vec<f64> = dm.iter().map(|x| x + sm).collect();
        let s2 = spectroscopy_2d(&p, &dq2, &dm2, 2, &cfg).unwrap();
        assert_eq!(s2.argmax(), (10, 10));
        let zero = spectroscopy_2d(&p, &dq, &dm, 0, &Spectroscopy2dConfig { lam: 0.0, ..cfg }).unwrap();
        assert!(zero.prob.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mixing_line_is_much_wider_than_transmon_line() {
        let p = DeviceParams::paper();
        let cfg = Spectroscopy2dConfig::default();
        let dq = grid(-0.3, 0.3, 241);
        let dm = grid(-3.0, 3.0, 241);
        let along_q = spectroscopy_2d(&p, &dq, &[0.0], 0, &cfg).unwrap();
        let along_m = spectroscopy_2d(&p, &[0.0], &dm, 0, &cfg).unwrap();
        let wq = fwhm(&dq, &along_q.prob).unwrap();
        let wm = fwhm(&dm, &along_m.prob).unwrap();
        assert!(wm / wq >= 5.0, "{wm} / {wq}");
    }
}
