//! The PReSPA operator, its piecewise-deterministic trajectory solution and
//! a seeded Monte Carlo unraveling.

use crate::error::{Error, Result};
use crate::qalg::{lowering_matrix, r, CMat, CVec, DensityMatrix, HilbertSpace, Operator, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Π_eo on the first eight levels: |1⟩⟨0| + |3⟩⟨2| + |5⟩⟨4| + |7⟩⟨6|.
pub fn prespa_truncated(dim: usize) -> Result<Operator> {
    if dim < 8 {
        return Err(Error::InvalidDimension(format!("PReSPA needs at least 8 levels, got {dim}")));
    }
    Operator::new(HilbertSpace::single(dim)?, even_to_odd(dim, 8))
}

/// Σ_n |2n+1⟩⟨2n| up to the truncation `ncut`.
pub fn prespa_infinite(ncut: usize) -> Result<Operator> {
    if ncut < 8 || ncut % 2 != 0 {
        return Err(Error::InvalidDimension(format!("infinite PReSPA truncation must be even and ≥ 8, got {ncut}")));
    }
    Operator::new(HilbertSpace::single(ncut)?, even_to_odd(ncut, ncut))
}

fn even_to_odd(dim: usize, upto: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for n in (0..upto.min(dim) - 1).step_by(2) {
        m[(n + 1, n)] = r(1.0);
    }
    m
}

/// Compound loss-plus-recovery process with jump operator Π_eo·â.
#[derive(Debug, Clone)]
pub struct JumpProcess {
    /// Photon loss rate 1/T1A in μs⁻¹.
    pub kappa: f64,
    pub jump_op: CMat,
    /// κ·n̂/2
    pub no_jump_generator: CMat,
}

impl JumpProcess {
    pub fn prespa(kappa: f64, dim: usize) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::InvalidInput(format!("rate {kappa} must be nonnegative")));
        }
        let ncut = dim - dim % 2;
        let mut pi = CMat::zeros(dim, dim);
        pi.view_mut((0, 0), (ncut, ncut)).copy_from(&prespa_infinite(ncut)?.mat);
        let jump_op = pi * lowering_matrix(dim);
        let no_jump_generator = CMat::from_diagonal(&CVec::from_fn(dim, |n, _| r(kappa * n as f64 / 2.0)));
        Ok(Self { kappa, jump_op, no_jump_generator })
    }

    pub fn dim(&self) -> usize {
        self.jump_op.nrows()
    }

    /// Diagonal of J†J, which is n on odd levels and zero on even ones.
    fn jump_weight(&self) -> Vec<f64> {
        let jj = self.jump_op.adjoint() * &self.jump_op;
        (0..self.dim()).map(|n| jj[(n, n)].re).collect()
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time {t} must be finite and nonnegative")));
    }
    Ok(())
}

pub fn no_jump_propagator(jp: &JumpProcess, t: f64) -> Result<Operator> {
    check_time(t)?;
    let dim = jp.dim();
    let m = CMat::from_diagonal(&CVec::from_fn(dim, |n, _| r((-jp.kappa * t * n as f64 / 2.0).exp())));
    Operator::new(HilbertSpace::single(dim)?, m)
}

/// Normalized Σ C_n n^{j/2} e^{−nκt/2}|n⟩.
pub fn trajectory_state(psi0: &StateVector, j: usize, t: f64, jp: &JumpProcess) -> Result<StateVector> {
    check_time(t)?;
    let amps = unnormalized_trajectory(psi0, j, t, jp.kappa);
    let norm = amps.norm();
    if norm == 0.0 {
        return Err(Error::ImpossibleTrajectory(format!("{j} jumps annihilate the state")));
    }
    StateVector::new(psi0.space.clone(), amps.unscale(norm))
}

fn unnormalized_trajectory(psi0: &StateVector, j: usize, t: f64, kappa: f64) -> CVec {
    CVec::from_fn(psi0.amps.len(), |n, _| {
        let nf = n as f64;
        psi0.amps[n] * (nf.powf(j as f64 / 2.0) * (-nf * kappa * t / 2.0).exp())
    })
}

#[derive(Debug, Clone)]
pub struct JumpCountDistribution {
    pub probs: Vec<f64>,
    /// 1 − Σ_{j≤jmax} p_j
    pub deficit: f64,
}

pub fn jump_count_probs(psi0: &StateVector, t: f64, jmax: usize, jp: &JumpProcess) -> Result<JumpCountDistribution> {
    check_time(t)?;
    let kt = jp.kappa * t;
    let weights: Vec<f64> = psi0.amps.iter().map(|a| a.norm_sqr()).collect();
    let mut probs = Vec::with_capacity(jmax + 1);
    let mut prefactor = 1.0;
    for j in 0..=jmax {
        if j > 0 {
            prefactor *= kt / j as f64;
        }
        let norm2: f64 = weights
            .iter()
            .enumerate()
            .map(|(n, w)| {
                let nf = n as f64;
                let pow = if j == 0 { 1.0 } else { nf.powi(j as i32) };
                w * pow * (-nf * kt).exp()
            })
            .sum();
        probs.push(prefactor * norm2);
    }
    let deficit = 1.0 - probs.iter().sum::<f64>();
    Ok(JumpCountDistribution { probs, deficit })
}

#[derive(Debug, Clone)]
pub struct TrajectoryMixture {
    pub t: f64,
    pub terms: Vec<(f64, StateVector)>,
    pub deficit: f64,
}

impl TrajectoryMixture {
    /// Σ p_j |ψ_j⟩⟨ψ_j| renormalized over the retained terms.
    pub fn density(&self) -> DensityMatrix {
        let space = self.terms[0].1.space.clone();
        let n = space.total();
        let mut m = CMat::zeros(n, n);
        let total: f64 = self.terms.iter().map(|(p, _)| p).sum();
        for (p, psi) in &self.terms {
            m += &psi.amps * psi.amps.adjoint() * r(p / total);
        }
        DensityMatrix { space, mat: m }
    }
}

pub fn trajectory_mixture(psi0: &StateVector, t: f64, jmax: usize, jp: &JumpProcess) -> Result<TrajectoryMixture> {
    let dist = jump_count_probs(psi0, t, jmax, jp)?;
    let mut terms = Vec::new();
    for (j, &p) in dist.probs.iter().enumerate() {
        if p > 0.0 {
            terms.push((p, trajectory_state(psi0, j, t, jp)?));
        }
    }
    Ok(TrajectoryMixture { t, terms, deficit: dist.deficit })
}

#[derive(Debug, Clone)]
pub struct AveragedDensity {
    pub rho: DensityMatrix,
    pub deficit: f64,
}

pub fn averaged_density(psi0: &StateVector, t: f64, jmax: usize, jp: &JumpProcess) -> Result<AveragedDensity> {
    let mix = trajectory_mixture(psi0, t, jmax, jp)?;
    Ok(AveragedDensity { rho: mix.density(), deficit: mix.deficit })
}

/// The j-sum carried out in closed form:
/// ρ_nm = C_n C_m* exp(−(n+m)κt/2 + κt√(nm)) for odd-supported states.
pub fn exact_averaged_density(psi0: &StateVector, t: f64, jp: &JumpProcess) -> Result<DensityMatrix> {
    check_time(t)?;
    let kt = jp.kappa * t;
    let dim = psi0.amps.len();
    let m = CMat::from_fn(dim, dim, |n, k| {
        let (nf, kf) = (n as f64, k as f64);
        psi0.amps[n] * psi0.amps[k].conj() * (-(nf + kf) * kt / 2.0 + kt * (nf * kf).sqrt()).exp()
    });
    DensityMatrix::new(psi0.space.clone(), m)
}

/// Per-trajectory seed derived from the run seed by SplitMix64 mixing.
pub fn trajectory_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub jump_counts: Vec<usize>,
    pub final_states: Vec<StateVector>,
}

impl MonteCarloResult {
    pub fn density(&self) -> DensityMatrix {
        let space = self.final_states[0].space.clone();
        let n = space.total();
        let mut m = CMat::zeros(n, n);
        for psi in &self.final_states {
            m += &psi.amps * psi.amps.adjoint();
        }
        DensityMatrix { space, mat: m.unscale(self.final_states.len() as f64) }
    }

    pub fn histogram(&self, jmax: usize) -> Vec<usize> {
        let mut h = vec![0; jmax + 1];
        for &j in &self.jump_counts {
            if j <= jmax {
                h[j] += 1;
            }
        }
        h
    }

    pub fn mean_jumps(&self) -> f64 {
        self.jump_counts.iter().sum::<usize>() as f64 / self.jump_counts.len() as f64
    }
}

/// Unravels the jump process into `ntraj` trajectories. Substeps are bounded
/// by κ⟨J†J⟩δ ≤ 0.01 and a jump inside a substep is placed at its exact
/// waiting time, so the sampled statistics carry no time-step bias.
pub fn monte_carlo_unravel(psi0: &StateVector, t: f64, ntraj: usize, seed: u64, jp: &JumpProcess) -> Result<MonteCarloResult> {
    check_time(t)?;
    if ntraj == 0 {
        return Err(Error::InvalidInput("ntraj must be at least 1".into()));
    }
    let weight = jp.jump_weight();
    let runs: Vec<(usize, CVec)> = (0..ntraj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(seed, i as u64));
            single_trajectory(&psi0.amps, t, jp.kappa, &weight, &mut rng)
        })
        .collect();
    let mut jump_counts = Vec::with_capacity(ntraj);
    let mut final_states = Vec::with_capacity(ntraj);
    for (j, amps) in runs {
        jump_counts.push(j);
        final_states.push(StateVector::new(psi0.space.clone(), amps)?);
    }
    Ok(MonteCarloResult { jump_counts, final_states })
}

fn survival(psi: &CVec, kappa: f64, weight: &[f64], s: f64) -> f64 {
    psi.iter().zip(weight).map(|(a, w)| a.norm_sqr() * (-kappa * w * s).exp()).sum()
}

fn single_trajectory(psi0: &CVec, t: f64, kappa: f64, weight: &[f64], rng: &mut ChaCha8Rng) -> (usize, CVec) {
    let mut psi = psi0.unscale(psi0.norm());
    let mut remaining = t;
    let mut jumps = 0;
    while remaining > 0.0 {
        let rate: f64 = kappa * psi.iter().zip(weight).map(|(a, w)| a.norm_sqr() * w).sum::<f64>();
        let step = if rate > 0.0 { remaining.min(0.01 / rate) } else { remaining };
        let u: f64 = rng.random();
        let p_jump = 1.0 - survival(&psi, kappa, weight, step);
        if u < p_jump {
            let (mut lo, mut hi) = (0.0, step);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if 1.0 - survival(&psi, kappa, weight, mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            for (n, a) in psi.iter_mut().enumerate() {
                *a *= (-kappa * weight[n] * s / 2.0).exp() * weight[n].sqrt();
            }
            psi.unscale_mut(psi.norm());
            jumps += 1;
            remaining -= s;
        } else {
            for (n, a) in psi.iter_mut().enumerate() {
                *a *= (-kappa * weight[n] * step / 2.0).exp();
            }
            psi.unscale_mut(psi.norm());
            remaining -= step;
        }
    }
    (jumps, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{cardinal_states, encode, mean_photon_number, optimal_codewords, parity_expectation, t4c_words, CodeWords};
    use crate::qalg::{commutator, MaxAbs};

    #[test]
    fn truncated_operator_examples() {
        let p = prespa_truncated(10).unwrap();
        let space = HilbertSpace::single(10).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = CVec::zeros(10);
        v[0] = r(h);
        v[2] = r(h);
        let out = p.apply(&StateVector::new(space.clone(), v).unwrap()).unwrap();
        assert!((out.amps[1] - r(h)).norm() < 1e-15 && (out.amps[3] - r(h)).norm() < 1e-15);
        let one = space.basis(&[1]).unwrap();
        assert_eq!(p.apply(&one).unwrap().norm(), 0.0);
        let pp = p.mat.adjoint() * &p.mat;
        for n in 0..10 {
            let expect = if n % 2 == 0 && n < 8 { 1.0 } else { 0.0 };
            assert_eq!(pp[(n, n)].re, expect);
        }
        assert_eq!(pp.iter().filter(|z| z.norm() > 0.0).count(), 4);
        assert!(prespa_truncated(7).is_err());
    }

    #[test]
    fn infinite_operator_and_jump_diagonal() {
        let inf = prespa_infinite(12).unwrap();
        let tr = prespa_truncated(12).unwrap();
        assert_eq!(inf.mat.view((0, 0), (8, 8)), tr.mat.view((0, 0), (8, 8)));
        let jp = JumpProcess::prespa(1.0, 12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let expect = if i == j && i % 2 == 1 { (i as f64).sqrt() } else { 0.0 };
                assert!((jp.jump_op[(i, j)].re - expect).abs() < 1e-15);
            }
        }
        assert!(prespa_infinite(9).is_err());
    }

    #[test]
    fn jump_commutes_with_drift() {
        let jp = JumpProcess::prespa(0.7, 12).unwrap();
        let v = no_jump_propagator(&jp, 1.3).unwrap();
        assert!(commutator(&jp.jump_op, &v.mat).max_abs() < 1e-14);
        assert!(commutator(&jp.jump_op, &jp.no_jump_generator).max_abs() < 1e-14);
    }

    #[test]
    fn no_jump_examples() {
        let jp = JumpProcess::prespa(2.0, 10).unwrap();
        assert_eq!(no_jump_propagator(&jp, 0.0).unwrap().mat, CMat::identity(10, 10));
        let v = no_jump_propagator(&jp, 0.3).unwrap();
        for n in 0..10 {
            assert!((v.mat[(n, n)].re - (-(n as f64) * 0.3).exp()).abs() < 1e-15);
        }
        assert!(no_jump_propagator(&jp, -1.0).is_err());
    }

    #[test]
    fn trajectory_examples() {
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let five = HilbertSpace::single(10).unwrap().basis(&[5]).unwrap();
        for j in 0..4 {
            let s = trajectory_state(&five, j, 0.8, &jp).unwrap();
            assert!((s.amps[5] - r(1.0)).norm() < 1e-15);
        }
        let (z, _) = t4c_words(&optimal_codewords(), 10).unwrap();
        let s = trajectory_state(&z, 0, 0.2, &jp).unwrap();
        let (a1, a5) = (0.5 * (-0.1f64).exp(), 0.75f64.sqrt() * (-0.5f64).exp());
        let n = (a1 * a1 + a5 * a5).sqrt();
        assert!((s.amps[1].re - a1 / n).abs() < 1e-15 && (s.amps[5].re - a5 / n).abs() < 1e-15);
    }

    #[test]
    fn trajectory_matches_operator_pipeline() {
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        for (_, xy) in cardinal_states() {
            let psi = encode(&CodeWords::experimental(), &xy, 10).unwrap();
            for j in 0..=10 {
                let v = no_jump_propagator(&jp, 0.1).unwrap().mat;
                let mut amps = &v * &psi.amps;
                for _ in 0..j {
                    amps = &jp.jump_op * amps;
                }
                let expected = amps.unscale(amps.norm());
                let got = trajectory_state(&psi, j, 0.1, &jp).unwrap();
                assert!((got.amps - expected).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn poisson_counts_for_fock_input() {
        let jp = JumpProcess::prespa(0.5, 10).unwrap();
        let three = HilbertSpace::single(10).unwrap().basis(&[3]).unwrap();
        let d = jump_count_probs(&three, 1.0, 20, &jp).unwrap();
        let lam: f64 = 3.0 * 0.5;
        let mut term = (-lam).exp();
        for (j, &p) in d.probs.iter().enumerate() {
            if j > 0 {
                term *= lam / j as f64;
            }
            assert!((p - term).abs() < 1e-15);
        }
        let d0 = jump_count_probs(&three, 0.0, 5, &jp).unwrap();
        assert_eq!(d0.probs[0], 1.0);
        assert!(d0.probs[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn averaged_density_properties() {
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let psi = encode(&optimal_codewords(), &cardinal_states()[2].1, 10).unwrap();
        let rho0 = averaged_density(&psi, 0.0, 20, &jp).unwrap().rho;
        assert!((rho0.mat - psi.to_density().mat).max_abs() < 1e-15);
        let parity = crate::qalg::fock_operators(10).unwrap().parity.mat;
        for &t in &[0.1, 0.5, 1.0] {
            let avg = averaged_density(&psi, t, 20, &jp).unwrap();
            avg.rho.validate().unwrap();
            assert!((avg.rho.expect(&parity).re + 1.0).abs() < 1e-12);
            let exact = exact_averaged_density(&psi, t, &jp).unwrap();
            assert!(avg.rho.trace_distance(&exact) <= 2.0 * avg.deficit.max(1e-14));
        }
    }

    #[test]
    fn jumps_increase_mean_photon_number() {
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        for (_, xy) in cardinal_states() {
            let psi = encode(&CodeWords::experimental(), &xy, 10).unwrap();
            for j in 0..5 {
                let a = mean_photon_number(&trajectory_state(&psi, j, 0.4, &jp).unwrap());
                let b = mean_photon_number(&trajectory_state(&psi, j + 1, 0.4, &jp).unwrap());
                assert!(b >= a - 1e-12);
            }
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let jp0 = JumpProcess::prespa(0.0, 10).unwrap();
        let psi = encode(&optimal_codewords(), &cardinal_states()[2].1, 10).unwrap();
        let mc = monte_carlo_unravel(&psi, 1.0, 1, 42, &jp0).unwrap();
        assert_eq!(mc.jump_counts, vec![0]);
        assert!((mc.final_states[0].amps.clone() - &psi.amps).max_abs() < 1e-15);

        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let rho_mc = monte_carlo_unravel(&psi, 0.3, 4000, 3, &jp).unwrap().density();
        let exact = exact_averaged_density(&psi, 0.3, &jp).unwrap();
        assert!(rho_mc.trace_distance(&exact) <= 5.0 / (4000f64).sqrt());
        assert!(parity_expectation(&psi) + 1.0 < 1e-12);
    }

    #[test]
    fn seeds_are_decorrelated() {
        let a: Vec<u64> = (0..4).map(|i| trajectory_seed(1, i)).collect();
        let b: Vec<u64> = (0..4).map(|i| trajectory_seed(2, i)).collect();
        assert!(a.iter().all(|x| !b.contains(x)));
    }
}
