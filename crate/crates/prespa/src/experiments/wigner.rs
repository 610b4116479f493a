use crate::dissipator::JumpProcess;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::opensystem::{EvolveOptions, LindbladGenerator, TimedOperator};
use crate::qalg::{r, CMat, CVec, HermitianEigen, StateVector, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Generalized Laguerre polynomials L_j^{(k)}(x) for j = 0..=n.
fn laguerre(n: usize, k: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(1.0 + k - x);
    }
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * out[j] - (jf + k) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Matrix of ⟨m|D(α) P̂ D(α)†|n⟩ on the first `dim` Fock levels, computed in
/// closed form so no padding of the displacement is needed.
pub fn wigner_kernel(alpha: C64, dim: usize) -> CMat {
    let x = 4.0 * alpha.norm_sqr();
    let gauss = (-2.0 * alpha.norm_sqr()).exp();
    let mut m = CMat::zeros(dim, dim);
    for d in 0..dim {
        let lag = laguerre(dim - 1 - d, d as f64, x);
        let two_alpha_d = (alpha * 2.0).powu(d as u32);
        // √(n!/(n+d)!) built up incrementally
        let mut ratio = 1.0;
        for k in 1..=d {
            ratio /= (k as f64).sqrt();
        }
        for n in 0..dim - d {
            if n > 0 {
                ratio *= (n as f64 / (n + d) as f64).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let v = two_alpha_d * (sign * ratio * gauss * lag[n]);
            m[(n + d, n)] = v;
            if d > 0 {
                m[(n, n + d)] = v.conj();
            }
        }
    }
    m
}

/// W(α) = (2/π)·Tr[D(α) P̂ D(−α) ρ] for each α.
pub fn wigner(rho: &CMat, alphas: &[C64]) -> Result<Vec<f64>> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::InvalidDimension("cavity state must be square".into()));
    }
    let dim = rho.nrows();
    Ok(alphas
        .iter()
        .map(|&a| {
            let k = wigner_kernel(a, dim);
            2.0 / PI * (k.component_mul(&rho.transpose())).iter().map(|z| z.re).sum::<f64>()
        })
        .collect())
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))².
pub fn density_fidelity(rho: &CMat, sigma: &CMat) -> f64 {
    let sq = HermitianEigen::new(rho).apply_fn(|l| r(l.max(0.0).sqrt()));
    let inner = &sq * sigma * &sq;
    let h = (&inner + inner.adjoint()) * r(0.5);
    let s: f64 = HermitianEigen::new(&h).values.iter().map(|&l| l.max(0.0).sqrt()).sum();
    s * s
}

/// Nearest unit-trace positive matrix to a unit-trace Hermitian one in the
/// spectral sense: negative eigenvalues are zeroed and their weight spread
/// over the remaining ones.
fn project_psd(h: &CMat) -> CMat {
    let eig = HermitianEigen::new(h);
    let n = eig.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]));
    let mut vals = eig.values.clone();
    let mut acc = 0.0;
    let mut first = 0;
    while first < n {
        let i = order[first];
        let remaining = (n - first) as f64;
        if vals[i] + acc / remaining < 0.0 {
            acc += vals[i];
            vals[i] = 0.0;
            first += 1;
        } else {
            break;
        }
    }
    let remaining = (n - first) as f64;
    for &i in &order[first..] {
        vals[i] += acc / remaining;
    }
    let mut out = CMat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let v = eig.vectors.column(k);
        out += (v * v.adjoint()) * r(l);
    }
    out
}

const MIN_INVERSE_CONDITION: f64 = 1e-10;

/// Constrained least-squares inversion of Wigner samples onto a `dim`-level
/// density matrix: Hermitian parametrization, trace fixed to one, then a
/// projection onto positive matrices.
pub fn reconstruct_density(alphas: &[C64], samples: &[f64], dim: usize) -> Result<CMat> {
    if alphas.len() != samples.len() {
        return Err(Error::InvalidInput("sample and grid lengths differ".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension("reconstruction dimension must be positive".into()));
    }
    let np = dim * dim;
    if samples.len() < np {
        return Err(Error::Reconstruction { condition: f64::INFINITY });
    }
    let mut design = DMatrix::<f64>::zeros(samples.len() + 1, np);
    for (row, &a) in alphas.iter().enumerate() {
        let k = wigner_kernel(a, dim);
        let mut col = 0;
        for n in 0..dim {
            design[(row, col)] = 2.0 / PI * k[(n, n)].re;
            col += 1;
        }
        for m in 0..dim {
            for n in m + 1..dim {
                design[(row, col)] = 4.0 / PI * k[(m, n)].re;
                design[(row, col + 1)] = 4.0 / PI * k[(m, n)].im;
                col += 2;
            }
        }
    }
    let sv = design.rows(0, samples.len()).into_owned().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > MIN_INVERSE_CONDITION * smax) {
        return Err(Error::Reconstruction { condition: smax / smin });
    }
    let weight = 10.0 * smax;
    for k in 0..dim {
        design[(samples.len(), k)] = weight;
    }
    let mut rhs = DVector::from_column_slice(samples).push(0.0);
    rhs[samples.len()] = weight;
    let x = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Reconstruction { condition: if e.is_empty() { f64::INFINITY } else { smax / smin } })?;
    let mut rho = CMat::zeros(dim, dim);
    let mut col = 0;
    for n in 0..dim {
        rho[(n, n)] = r(x[col]);
        col += 1;
    }
    for m in 0..dim {
        for n in m + 1..dim {
            let z = C64::new(x[col], x[col + 1]);
            rho[(m, n)] = z;
            rho[(n, m)] = z.conj();
            col += 2;
        }
    }
    let tr = rho.trace().re;
    Ok(project_psd(&(rho / r(tr))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RamseyFrame {
    /// Frame rotating with the bare cavity; only the Kerr phases remain.
    Lab,
    /// Frame rotating at the frequency that keeps Fock levels `a` and `b` in phase.
    CoRotating { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyConfig {
    pub dim: usize,
    /// Self-Kerr, kHz.
    pub kerr: f64,
    /// Rate of the compound loss-and-recovery jump, μs⁻¹.
    pub kappa: f64,
    pub frame: RamseyFrame,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        Self { dim: 10, kerr: 1.7, kappa: 1.0 / 520.0, frame: RamseyFrame::CoRotating { a: 1, b: 5 } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyResult {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    /// Cavity states at each time, in the chosen frame.
    pub states: Vec<CMat>,
}

/// Wigner value at a fixed point over time under ideal PReSPA with photon loss
/// and self-Kerr.
pub fn prespa_ramsey(psi0: &StateVector, alpha_probe: C64, times: &[f64], cfg: &RamseyConfig) -> Result<RamseyResult> {
    let dim = cfg.dim;
    if psi0.amps.len() != dim {
        return Err(Error::InvalidDimension(format!("state of length {} for cavity dimension {dim}", psi0.amps.len())));
    }
    let support = psi0.amps.iter().filter(|a| a.norm() > 1e-12).count();
    if support < 2 {
        return Err(Error::InvalidInput("Ramsey input must be a superposition".into()));
    }
    let energy = |n: usize| -TAU * 0.5e-3 * cfg.kerr * (n * n.saturating_sub(1)) as f64;
    let frame = match cfg.frame {
        RamseyFrame::Lab => 0.0,
        RamseyFrame::CoRotating { a, b } => {
            if a == b || a >= dim || b >= dim {
                return Err(Error::InvalidInput(format!("co-rotating levels ({a}, {b}) invalid")));
            }
            (energy(b) - energy(a)) / (b as f64 - a as f64)
        }
    };
    let h = CMat::from_diagonal(&CVec::from_fn(dim, |n, _| r(energy(n) - frame * n as f64)));
    let jp = JumpProcess::prespa(cfg.kappa, dim)?;
    let jumps = if cfg.kappa > 0.0 { vec![TimedOperator::from_dense(&(&jp.jump_op * r(cfg.kappa.sqrt())), 0.0)] } else { vec![] };
    let g = LindbladGenerator::new(TimedOperator::from_dense(&h, 0.0), jumps)?;
    let rho0 = &psi0.amps * psi0.amps.adjoint();
    let states = g.evolve(&rho0, times, &EvolveOptions::default())?;
    let w = states.iter().map(|s| wigner(s, &[alpha_probe]).map(|v| v[0])).collect::<Result<Vec<_>>>()?;
    Ok(RamseyResult { times: times.to_vec(), w, states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyFit {
    pub offset: f64,
    pub amplitude: f64,
    /// μs⁻¹
    pub decay_rate: f64,
    /// kHz
    pub frequency: f64,
    pub phase: f64,
    pub rms: f64,
}

/// Fit y = c + A·e^{−γt}·cos(2πft + φ), f seeded from a periodogram.
pub fn fit_damped_sinusoid(times: &[f64], y: &[f64]) -> Result<RamseyFit> {
    let n = times.len();
    if n < 8 || y.len() != n {
        return Err(Error::InvalidInput("damped-sinusoid fit needs at least 8 matched points".into()));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let spread = y.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if !(spread > 1e-9) {
        return Err(Error::Fit { residual: 0.0 });
    }
    let span = times[n - 1] - times[0];
    let dt_min = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (fmin, fmax) = (0.5 / span, 0.5 / dt_min);
    let steps = 4 * n;
    let (mut best_f, mut best_p) = (fmin, -1.0);
    for k in 0..=steps {
        let f = fmin + (fmax - fmin) * k as f64 / steps as f64;
        let (mut s, mut c) = (0.0, 0.0);
        for (t, v) in times.iter().zip(y) {
            let ph = TAU * f * t;
            s += (v - mean) * ph.sin();
            c += (v - mean) * ph.cos();
        }
        let p = s * s + c * c;
        if p > best_p {
            (best_f, best_p) = (f, p);
        }
    }
    let (mut s, mut c) = (0.0, 0.0);
    for (t, v) in times.iter().zip(y) {
        let ph = TAU * best_f * t;
        s += (v - mean) * ph.sin();
        c += (v - mean) * ph.cos();
    }
    let amp0 = 2.0 * (s * s + c * c).sqrt() / n as f64;
    let phase0 = (-s).atan2(c);
    let model = |p: &[f64], t: f64| p[0] + p[1] * (-p[2] * t).exp() * (TAU * p[3] * t + p[4]).cos();
    let res = levenberg_marquardt(
        |p| times.iter().zip(y).map(|(&t, &v)| model(p, t) - v).collect(),
        &[mean, amp0, 1.0 / span, best_f, phase0],
        &FitOptions { max_iterations: 400, ..FitOptions::default() },
    )?;
    let p = &res.params;
    if res.rms > 0.1 * spread || !(p[1].abs() > 1e-3 * spread) {
        return Err(Error::Fit { residual: res.rms });
    }
    let (amplitude, phase) = if p[1] < 0.0 { (-p[1], p[4] + PI) } else { (p[1], p[4]) };
    let (frequency, phase) = if p[3] < 0.0 { (-p[3], -phase) } else { (p[3], phase) };
    Ok(RamseyFit { offset: p[0], amplitude, decay_rate: p[2], frequency: 1e3 * frequency, phase, rms: res.rms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{cardinal_states, encode, optimal_codewords};
    use crate::qalg::{c, displacement, HilbertSpace, MaxAbs};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fock(n: usize, dim: usize) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        m[(n, n)] = r(1.0);
        m
    }

    fn grid(half: f64, k: usize) -> Vec<C64> {
        let step = 2.0 * half / (k - 1) as f64;
        (0..k).flat_map(|i| (0..k).map(move |j| c(-half + i as f64 * step, -half + j as f64 * step))).collect()
    }

    #[test]
    fn parity_at_origin() {
        let w0 = wigner(&fock(0, 6), &[r(0.0)]).unwrap()[0];
        let w1 = wigner(&fock(1, 6), &[r(0.0)]).unwrap()[0];
        assert!((w0 - 2.0 / PI).abs() < 1e-14 && (w1 + 2.0 / PI).abs() < 1e-14);
        for (name, xy) in cardinal_states() {
            let psi = encode(&optimal_codewords(), &xy, 8).unwrap();
            let w = wigner(&(&psi.amps * psi.amps.adjoint()), &[r(0.0)]).unwrap()[0];
            assert!(w < 0.0, "{name}: {w}");
        }
    }

    #[test]
    fn kernel_matches_padded_displacement() {
        let dim = 8;
        let pad = 60;
        let mut parity = CMat::zeros(pad, pad);
        for n in 0..pad {
            parity[(n, n)] = r(if n % 2 == 0 { 1.0 } else { -1.0 });
        }
        for &a in &[c(0.3, -0.4), c(1.1, 0.7), c(-1.5, 0.2)] {
            let d = displacement(a, pad).unwrap().op.mat;
            let full = &d * &parity * d.adjoint();
            let k = wigner_kernel(a, dim);
            assert!((full.view((0, 0), (dim, dim)) - &k).max_abs() < 1e-10);
        }
    }

    fn random_density(dim: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(dim, dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &g * g.adjoint();
        let tr = m.trace();
        m / tr
    }

    #[test]
    fn reconstruction_round_trip() {
        let dim = 8;
        let alphas = grid(2.5, 13);
        let rho = random_density(dim, 7);
        let w = wigner(&rho, &alphas).unwrap();
        let rec = reconstruct_density(&alphas, &w, dim).unwrap();
        assert!(density_fidelity(&rho, &rec) > 0.999);
        assert!((&rec - &rho).max_abs() < 1e-8);

        let vac = wigner(&fock(0, dim), &alphas).unwrap();
        let rec = reconstruct_density(&alphas, &vac, dim).unwrap();
        assert!((rec[(0, 0)].re - 1.0).abs() < 1e-8);

        let mut v = CVec::zeros(dim);
        v[1] = r(0.5f64.sqrt());
        v[3] = r(0.5f64.sqrt());
        let w = wigner(&(&v * v.adjoint()), &alphas).unwrap();
        let rec = reconstruct_density(&alphas, &w, dim).unwrap();
        assert!((rec[(1, 3)].norm() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn reconstruction_rejects_uninformative_design() {
        let alphas = vec![r(0.0); 100];
        let w = vec![0.5; 100];
        assert!(matches!(reconstruct_density(&alphas, &w, 6), Err(Error::Reconstruction { .. })));
        assert!(matches!(reconstruct_density(&alphas[..10], &w[..10], 6), Err(Error::Reconstruction { .. })));
    }

    #[test]
    fn psd_projection_preserves_trace() {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![r(0.8), r(0.4), r(-0.2)]));
        let p = project_psd(&h);
        assert!((p.trace().re - 1.0).abs() < 1e-14);
        assert!(HermitianEigen::new(&p).values.iter().all(|&l| l >= -1e-15));
    }

    fn superposition(a: usize, b: usize, dim: usize) -> StateVector {
        let mut v = CVec::zeros(dim);
        v[a] = r(0.5f64.sqrt());
        v[b] = r(0.5f64.sqrt());
        StateVector::new(HilbertSpace::single(dim).unwrap(), v).unwrap()
    }

    #[test]
    fn ramsey_is_static_in_corotating_frame() {
        let psi = superposition(1, 5, 10);
        let times: Vec<f64> = (0..20).map(|k| 5.0 * k as f64).collect();
        let cfg = RamseyConfig { kappa: 0.0, ..RamseyConfig::default() };
        let res = prespa_ramsey(&psi, c(0.8, 0.0), &times, &cfg).unwrap();
        let spread = res.w.iter().fold(0.0f64, |m, &w| m.max((w - res.w[0]).abs()));
        assert!(spread < 1e-8, "{spread}");
        assert!(fit_damped_sinusoid(&times, &res.w).is_err());
    }

    #[test]
    fn ramsey_kerr_frequency_and_decay() {
        let psi = superposition(1, 5, 10);
        let times: Vec<f64> = (0..=150).map(|k| 2.0 * k as f64).collect();
        let cfg = RamseyConfig { frame: RamseyFrame::Lab, ..RamseyConfig::default() };
        let res = prespa_ramsey(&psi, c(0.8, 0.0), &times, &cfg).unwrap();
        let fit = fit_damped_sinusoid(&times, &res.w).unwrap();
        let expected = cfg.kerr * (20.0 - 0.0) / 2.0;
        assert!((fit.frequency - expected).abs() / expected < 1e-3, "{fit:?}");
        let coh: Vec<f64> = res.states.iter().map(|s| s[(1, 5)].norm()).collect();
        let rate = -(coh.last().unwrap() / coh[0]).ln() / times.last().unwrap();
        assert!((fit.decay_rate - rate).abs() / rate < 1e-3, "{} vs {rate}", fit.decay_rate);
    }
}
