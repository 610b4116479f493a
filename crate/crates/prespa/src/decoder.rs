//! Subspace decomposition, the decoding map onto the transmon, and fidelity
//! metrics.

use crate::codes::{t4c_words, CodeWords, LogicalAmplitudes};
use crate::dissipator::{trajectory_state, JumpProcess, TrajectoryMixture};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::qalg::{r, CMat, CVec, DensityMatrix, HilbertSpace, StateVector, C64};
use crate::table::CsvTable;

const CODE_SUPPORT: [usize; 4] = [1, 3, 5, 7];

/// Orthonormal pairs spanning H₁₅ (u0, u1) and H₃₇ (v0, v1).
#[derive(Debug, Clone)]
pub struct DecodingBasis {
    pub u0: StateVector,
    pub u1: StateVector,
    pub v0: StateVector,
    pub v1: StateVector,
}

impl DecodingBasis {
    pub fn new(u0: StateVector, u1: StateVector, v0: StateVector, v1: StateVector) -> Result<Self> {
        let check_pair = |a: &StateVector, b: &StateVector, support: [usize; 2]| -> Result<()> {
            for v in [a, b] {
                if (v.amps.norm_squared() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput("decoding basis vectors must be normalized".into()));
                }
                let outside: f64 = v
                    .amps
                    .iter()
                    .enumerate()
                    .filter(|(n, _)| !support.contains(n))
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                if outside > 1e-24 {
                    return Err(Error::InvalidInput(format!("decoding basis vector leaves {support:?}")));
                }
            }
            if a.inner(b).norm() > 1e-12 {
                return Err(Error::InvalidInput("decoding basis pair not orthogonal".into()));
            }
            Ok(())
        };
        check_pair(&u0, &u1, [1, 5])?;
        check_pair(&v0, &v1, [3, 7])?;
        Ok(Self { u0, u1, v0, v1 })
    }

    /// u0 = |0_L⟩, v0 = |1_L⟩ and their orthogonal partners inside each subspace.
    pub fn from_codewords(cw: &CodeWords, dim: usize) -> Result<Self> {
        let (z, o) = t4c_words(cw, dim)?;
        let space = z.space.clone();
        let mut u1 = CVec::zeros(dim);
        u1[1] = r(-cw.c5);
        u1[5] = r(cw.c1);
        let mut v1 = CVec::zeros(dim);
        v1[3] = r(-cw.c7);
        v1[7] = r(cw.c3);
        Self::new(z, StateVector::new(space.clone(), u1)?, o, StateVector::new(space, v1)?)
    }

    pub fn dim(&self) -> usize {
        self.u0.amps.len()
    }

    fn us(&self) -> [&CVec; 2] {
        [&self.u0.amps, &self.u1.amps]
    }

    fn vs(&self) -> [&CVec; 2] {
        [&self.v0.amps, &self.v1.amps]
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    pub n15: f64,
    pub n37: f64,
    pub psi15: Option<StateVector>,
    pub psi37: Option<StateVector>,
}

/// ψ = n15·ψ15 + n37·ψ37 with ψ15 ∈ span{|1⟩,|5⟩}, ψ37 ∈ span{|3⟩,|7⟩}
/// normalized; the logical amplitudes x, y are absorbed into the weights.
pub fn subspace_decompose(psi: &StateVector) -> Result<SubspaceDecomposition> {
    let leaked: f64 = psi
        .amps
        .iter()
        .enumerate()
        .filter(|(n, _)| !CODE_SUPPORT.contains(n))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if leaked > 1e-10 {
        return Err(Error::Leakage { leaked });
    }
    let project = |levels: [usize; 2]| {
        let mut v = CVec::zeros(psi.amps.len());
        for n in levels {
            v[n] = psi.amps[n];
        }
        let norm = v.norm();
        let state = if norm > 0.0 { Some(StateVector { space: psi.space.clone(), amps: v.unscale(norm) }) } else { None };
        (norm, state)
    };
    let (n15, psi15) = project([1, 5]);
    let (n37, psi37) = project([3, 7]);
    Ok(SubspaceDecomposition { n15, n37, psi15, psi37 })
}

/// (θ_j, φ_j) with cos θ_j = |⟨u0|ψ_j¹⁵⟩| and cos φ_j = |⟨v0|ψ_j³⁷⟩| for the
/// default code-word decoding basis.
pub fn decoding_angles(cw: &CodeWords, j: usize, t: f64, jp: &JumpProcess) -> Result<(f64, f64)> {
    let dim = jp.dim();
    let (z, o) = t4c_words(cw, dim)?;
    let zt = trajectory_state(&z, j, t, jp)?;
    let ot = trajectory_state(&o, j, t, jp)?;
    let theta = z.inner(&zt).norm().min(1.0).acos();
    let phi = o.inner(&ot).norm().min(1.0).acos();
    Ok((theta, phi))
}

#[derive(Debug, Clone)]
pub struct DecodedQubit {
    /// 2×2 transmon state in the (g, e) basis.
    pub rho_q: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakagePolicy {
    /// Weight outside H₁₅ ⊕ H₃₇ is an error.
    Reject,
    /// Weight outside H₁₅ ⊕ H₃₇ decodes to the maximally mixed qubit.
    Depolarize,
}

/// ρ_q[g,g] = Σ_k⟨u_k|ρ|u_k⟩, ρ_q[e,e] = Σ_k⟨v_k|ρ|v_k⟩,
/// ρ_q[g,e] = Σ_k⟨u_k|ρ|v_k⟩, renormalized to unit trace.
pub fn decode_density(rho: &CMat, basis: &DecodingBasis, policy: LeakagePolicy) -> Result<DecodedQubit> {
    let dim = basis.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidDimension(format!("cavity state of size {} for basis of size {dim}", rho.nrows())));
    }
    let sandwich = |a: &CVec, b: &CVec| a.dotc(&(rho * b));
    let gg: f64 = basis.us().iter().map(|u| sandwich(u, u).re).sum();
    let ee: f64 = basis.vs().iter().map(|v| sandwich(v, v).re).sum();
    let ge: C64 = basis.us().iter().zip(basis.vs()).map(|(u, v)| sandwich(u, v)).sum();
    let total = rho.trace().re;
    let leaked = total - gg - ee;
    let (gg, ee) = match policy {
        LeakagePolicy::Reject if leaked > 1e-10 => return Err(Error::Leakage { leaked }),
        LeakagePolicy::Reject => (gg, ee),
        LeakagePolicy::Depolarize => (gg + leaked.max(0.0) / 2.0, ee + leaked.max(0.0) / 2.0),
    };
    let norm = gg + ee;
    if !(norm > 0.0) {
        return Err(Error::Leakage { leaked });
    }
    let rho_q = CMat::from_row_slice(2, 2, &[r(gg / norm), ge / norm, ge.conj() / norm, r(ee / norm)]);
    Ok(DecodedQubit { rho_q })
}

/// Branch-wise decode of a trajectory mixture: each branch contributes
/// populations n15², n37² and the coherence n15·n37·cos(θ_j − φ_j), with the
/// angles taken from the magnitudes of the overlaps with the basis. This
/// equals decoding the mixture density whenever ⟨u1|ψ_j⟩ and ⟨v1|ψ_j⟩ share a
/// sign in every branch, and bounds it from above otherwise.
pub fn decode_mixture(mix: &TrajectoryMixture, basis: &DecodingBasis) -> Result<DecodedQubit> {
    let (mut gg, mut ee, mut ge) = (0.0, 0.0, C64::new(0.0, 0.0));
    for (p, psi) in &mix.terms {
        let dec = subspace_decompose(psi)?;
        if psi.amps.len() != basis.dim() {
            return Err(Error::InvalidDimension(format!("trajectory state of length {} for basis of size {}", psi.amps.len(), basis.dim())));
        }
        gg += p * dec.n15 * dec.n15;
        ee += p * dec.n37 * dec.n37;
        let a: Vec<C64> = basis.us().iter().map(|u| u.dotc(&psi.amps)).collect();
        let b: Vec<C64> = basis.vs().iter().map(|v| v.dotc(&psi.amps)).collect();
        let magnitude = a[0].norm() * b[0].norm() + a[1].norm() * b[1].norm();
        let lead = if (a[0] * b[0].conj()).norm() > 0.0 { a[0] * b[0].conj() } else { a[1] * b[1].conj() };
        if lead.norm() > 0.0 {
            ge += lead.unscale(lead.norm()) * (p * magnitude);
        }
    }
    let norm = gg + ee;
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("empty trajectory mixture".into()));
    }
    let rho_q = CMat::from_row_slice(2, 2, &[r(gg / norm), ge / norm, ge.conj() / norm, r(ee / norm)]);
    Ok(DecodedQubit { rho_q })
}

/// Completion order for the Gram–Schmidt extension of the decoding isometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Ascending,
    Descending,
}

/// Full unitary on cavity ⊗ two-level transmon mapping |u_k,g⟩ → |k,g⟩ and
/// |v_k,g⟩ → |k,e⟩, completed on the orthogonal complements.
pub fn decoding_unitary(basis: &DecodingBasis, completion: Completion) -> Result<CMat> {
    let dim = basis.dim();
    let space = HilbertSpace::new(vec![dim, 2])?;
    let n = space.total();
    let lift = |v: &CVec, q: usize| {
        let mut out = CVec::zeros(n);
        for k in 0..dim {
            out[space.index(&[k, q])] = v[k];
        }
        out
    };
    let unit = |k: usize, q: usize| {
        let mut out = CVec::zeros(n);
        out[space.index(&[k, q])] = r(1.0);
        out
    };
    let inputs = vec![lift(basis.us()[0], 0), lift(basis.us()[1], 0), lift(basis.vs()[0], 0), lift(basis.vs()[1], 0)];
    let outputs = vec![unit(0, 0), unit(1, 0), unit(0, 1), unit(1, 1)];
    let a = complete_basis(inputs, n, Completion::Ascending);
    let b = complete_basis(outputs, n, completion);
    Ok(b * a.adjoint())
}

fn complete_basis(mut vecs: Vec<CVec>, n: usize, completion: Completion) -> CMat {
    let order: Vec<usize> = match completion {
        Completion::Ascending => (0..n).collect(),
        Completion::Descending => (0..n).rev().collect(),
    };
    for k in order {
        if vecs.len() == n {
            break;
        }
        let mut v = CVec::zeros(n);
        v[k] = r(1.0);
        for _ in 0..2 {
            for u in &vecs {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            vecs.push(v.unscale(norm));
        }
    }
    CMat::from_columns(&vecs)
}

/// Decodes by applying the explicit unitary to ρ ⊗ |g⟩⟨g| and tracing out the cavity.
pub fn decode_with_unitary(rho: &CMat, u: &CMat) -> Result<DecodedQubit> {
    let dim = rho.nrows();
    let g = CMat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(0.0)]);
    let joint = rho.kronecker(&g);
    let out = u * joint * u.adjoint();
    let space = HilbertSpace::new(vec![dim, 2])?;
    let red = crate::qalg::partial_trace(&DensityMatrix::new(space, out)?, &[1])?;
    let tr = red.trace().re;
    Ok(DecodedQubit { rho_q: red.mat.unscale(tr) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityConvention {
    /// ⟨ψ_q|ρ_q|ψ_q⟩
    #[default]
    Standard,
    /// |⟨ψ_q|ρ_q|ψ_q⟩|², as written in some of the literature.
    Squared,
}

pub fn state_fidelity(dq: &DecodedQubit, xy: &LogicalAmplitudes) -> f64 {
    let psi = CVec::from_vec(vec![xy.x, xy.y]);
    psi.dotc(&(&dq.rho_q * &psi)).re.clamp(0.0, 1.0)
}

pub fn state_fidelity_with(dq: &DecodedQubit, xy: &LogicalAmplitudes, conv: FidelityConvention) -> f64 {
    let f = state_fidelity(dq, xy);
    match conv {
        FidelityConvention::Standard => f,
        FidelityConvention::Squared => f * f,
    }
}

pub fn process_fidelity(fids: &[f64]) -> Result<f64> {
    if fids.len() != 6 {
        return Err(Error::InvalidInput(format!("process fidelity needs 6 cardinal fidelities, got {}", fids.len())));
    }
    Ok(1.5 * fids.iter().sum::<f64>() / 6.0 - 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub a: f64,
    pub tau: f64,
    pub rms: f64,
}

/// Least-squares fit of F = 0.25 + A·e^{−t/τ}.
pub fn fit_decay(times: &[f64], fids: &[f64]) -> Result<DecayFit> {
    fit_decay_with_floor(times, fids, 0.25)
}

/// Least-squares fit of F = floor + A·e^{−t/τ}.
pub fn fit_decay_with_floor(times: &[f64], fids: &[f64], floor: f64) -> Result<DecayFit> {
    if times.len() < 4 || times.len() != fids.len() {
        return Err(Error::InvalidInput("fit needs at least 4 matched points".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("fit times must be strictly increasing".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(fids)
        .filter(|(_, &f)| f - floor > 1e-9)
        .map(|(&t, &f)| (t, (f - floor).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit { residual: f64::NAN });
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Fit { residual: f64::NAN });
    }
    let tau0 = -1.0 / slope;
    let a0 = (my - slope * mt).exp();
    let model = |p: &[f64], t: f64| floor + p[0] * (-t / p[1]).exp();
    let res = levenberg_marquardt(
        |p| times.iter().zip(fids).map(|(&t, &f)| model(p, t) - f).collect(),
        &[a0, tau0],
        &FitOptions::default(),
    )?;
    let (a, tau) = (res.params[0], res.params[1]);
    if !(tau > 0.0) || !tau.is_finite() || res.rms > 0.05 {
        return Err(Error::Fit { residual: res.rms });
    }
    Ok(DecayFit { a, tau, rms: res.rms })
}

/// Cardinal-state fidelity curves in the order +Z, −Z, +X, −X, +Y, −Y.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurves {
    pub times: Vec<f64>,
    pub cardinal: Vec<[f64; 6]>,
}

impl FidelityCurves {
    pub fn process(&self) -> Vec<f64> {
        self.cardinal.iter().map(|f| 1.5 * f.iter().sum::<f64>() / 6.0 - 0.5).collect()
    }

    /// Mean of the two pole states.
    pub fn pole(&self) -> Vec<f64> {
        self.cardinal.iter().map(|f| 0.5 * (f[0] + f[1])).collect()
    }

    /// Mean of the four equator states.
    pub fn equator(&self) -> Vec<f64> {
        self.cardinal.iter().map(|f| 0.25 * (f[2] + f[3] + f[4] + f[5])).collect()
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["time_us", "F_pZ", "F_mZ", "F_pX", "F_mX", "F_pY", "F_mY", "F_process"]);
        for ((&time, f), p) in self.times.iter().zip(&self.cardinal).zip(self.process()) {
            let mut row = vec![time];
            row.extend_from_slice(f);
            row.push(p);
            t.push(row);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{cardinal_states, encode, optimal_codewords};
    use crate::dissipator::{exact_averaged_density, trajectory_mixture};
    use crate::qalg::MaxAbs;

    #[test]
    fn decompose_examples() {
        let (z, _) = t4c_words(&optimal_codewords(), 10).unwrap();
        let d = subspace_decompose(&z).unwrap();
        assert!((d.n15 - 1.0).abs() < 1e-15 && d.n37 == 0.0);
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = encode(&optimal_codewords(), &LogicalAmplitudes::new(r(h), r(h)).unwrap(), 10).unwrap();
        let traj = trajectory_state(&psi, 0, 0.1, &jp).unwrap();
        let d = subspace_decompose(&traj).unwrap();
        // both words have ⟨n⟩ = 4, so the no-jump weights stay balanced to O((κt)²)
        assert!((d.n15 / h - 1.0).abs() < 0.01 && (d.n37 / h - 1.0).abs() < 0.01);
        assert!((d.n15 - d.n37).abs() < 1e-3, "{} {}", d.n15, d.n37);
        let mut leaky = psi.clone();
        leaky.amps[2] = r(0.1);
        assert!(matches!(subspace_decompose(&leaky), Err(Error::Leakage { .. })));
    }

    #[test]
    fn angles_agree_to_second_order() {
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        assert_eq!(decoding_angles(&optimal_codewords(), 0, 0.0, &jp).unwrap(), (0.0, 0.0));
        let ratios: Vec<f64> = [0.0125, 0.025, 0.05]
            .iter()
            .map(|&kt| {
                let (th, ph) = decoding_angles(&optimal_codewords(), 0, kt, &jp).unwrap();
                // equal first-order slopes √3/2; the second-order term survives
                assert!((th / kt - 3f64.sqrt() / 2.0).abs() < kt);
                (th - ph) / (kt * kt)
            })
            .collect();
        assert!((ratios[0] - ratios[1]).abs() < 0.02 && (ratios[1] - ratios[2]).abs() < 0.04, "{ratios:?}");
    }

    #[test]
    fn experimental_angle_closed_form() {
        let cw = CodeWords::experimental();
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let (th, ph) = decoding_angles(&cw, 1, 0.1, &jp).unwrap();
        let amp = |c: f64, n: f64| c * n.sqrt() * (-n * 0.05f64).exp();
        let (a1, a5) = (amp(cw.c1, 1.0), amp(cw.c5, 5.0));
        let cos_th = (cw.c1 * a1 + cw.c5 * a5) / (a1 * a1 + a5 * a5).sqrt();
        let (b3, b7) = (amp(cw.c3, 3.0), amp(cw.c7, 7.0));
        let cos_ph = (cw.c3 * b3 + cw.c7 * b7) / (b3 * b3 + b7 * b7).sqrt();
        assert!((th.cos() - cos_th).abs() < 1e-14);
        assert!((ph.cos() - cos_ph).abs() < 1e-14);
    }

    #[test]
    fn mixture_decoding_matches_explicit_unitary() {
        let cw = optimal_codewords();
        let basis = DecodingBasis::from_codewords(&cw, 10).unwrap();
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let ua = decoding_unitary(&basis, Completion::Ascending).unwrap();
        let ud = decoding_unitary(&basis, Completion::Descending).unwrap();
        assert!((&ua * ua.adjoint() - CMat::identity(20, 20)).max_abs() < 1e-12);
        assert!((&ua - &ud).max_abs() > 1e-3);
        for (_, xy) in cardinal_states() {
            let psi = encode(&cw, &xy, 10).unwrap();
            let t0 = decode_mixture(&trajectory_mixture(&psi, 0.0, 20, &jp).unwrap(), &basis).unwrap();
            assert!((state_fidelity(&t0, &xy) - 1.0).abs() < 1e-14);
            for &t in &[0.05, 0.1, 0.2] {
                let mix = trajectory_mixture(&psi, t, 20, &jp).unwrap();
                let dq = decode_mixture(&mix, &basis).unwrap();
                dq.rho_q.iter().for_each(|z| assert!(z.re.is_finite()));
                let rho_dm = DensityMatrix::new(HilbertSpace::single(2).unwrap(), dq.rho_q.clone()).unwrap();
                assert!(rho_dm.min_eigenvalue() > -1e-10);
                for u in [&ua, &ud] {
                    let other = decode_with_unitary(&mix.density().mat, u).unwrap();
                    assert!((&other.rho_q - &dq.rho_q).max_abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn branch_decode_bounds_density_decode() {
        let cw = optimal_codewords();
        let basis = DecodingBasis::from_codewords(&cw, 10).unwrap();
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        let xy = &cardinal_states()[2].1;
        let psi = encode(&cw, xy, 10).unwrap();
        let mix = trajectory_mixture(&psi, 0.3, 30, &jp).unwrap();
        let branch = decode_mixture(&mix, &basis).unwrap();
        let dense = decode_density(&mix.density().mat, &basis, LeakagePolicy::Reject).unwrap();
        assert!((branch.rho_q[(0, 0)] - dense.rho_q[(0, 0)]).norm() < 1e-12);
        assert!(branch.rho_q[(0, 1)].norm() > dense.rho_q[(0, 1)].norm() + 1e-6);
    }

    #[test]
    fn pole_states_do_not_decay_with_optimal_words() {
        let cw = optimal_codewords();
        let basis = DecodingBasis::from_codewords(&cw, 10).unwrap();
        let jp = JumpProcess::prespa(1.0, 10).unwrap();
        for (name, xy) in &cardinal_states()[..2] {
            let psi = encode(&cw, xy, 10).unwrap();
            for &t in &[0.2, 0.6, 1.0] {
                let rho = exact_averaged_density(&psi, t, &jp).unwrap();
                let dq = decode_density(&rho.mat, &basis, LeakagePolicy::Reject).unwrap();
                assert!((state_fidelity(&dq, xy) - 1.0).abs() < 1e-12, "{name}");
            }
        }
        let x = &cardinal_states()[2].1;
        let psi = encode(&cw, x, 10).unwrap();
        let dq = decode_density(&exact_averaged_density(&psi, 0.3, &jp).unwrap().mat, &basis, LeakagePolicy::Reject).unwrap();
        assert!(dq.rho_q[(0, 1)].norm() < 0.5 && dq.rho_q[(0, 1)].norm() > 0.3);
    }

    #[test]
    fn fidelity_metrics() {
        let xy = LogicalAmplitudes::new(r(1.0), r(0.0)).unwrap();
        let pure = DecodedQubit { rho_q: CMat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(0.0)]) };
        assert_eq!(state_fidelity(&pure, &xy), 1.0);
        let orth = LogicalAmplitudes::new(r(0.0), r(1.0)).unwrap();
        assert_eq!(state_fidelity(&pure, &orth), 0.0);
        let mixed = DecodedQubit { rho_q: CMat::identity(2, 2).scale(0.5) };
        assert_eq!(state_fidelity(&mixed, &xy), 0.5);
        assert_eq!(state_fidelity_with(&mixed, &xy, FidelityConvention::Squared), 0.25);
        assert_eq!(process_fidelity(&[1.0; 6]).unwrap(), 1.0);
        assert_eq!(process_fidelity(&[0.5; 6]).unwrap(), 0.25);
        assert_eq!(process_fidelity(&[0.75; 6]).unwrap(), 0.625);
        assert!(process_fidelity(&[1.0; 5]).is_err());
    }

    #[test]
    fn decay_fit_round_trip() {
        let t: Vec<f64> = (0..25).map(|k| k as f64 * 40.0).collect();
        let f: Vec<f64> = t.iter().map(|&x| 0.25 + 0.75 * (-x / 288.0).exp()).collect();
        let fit = fit_decay(&t, &f).unwrap();
        assert!((fit.a - 0.75).abs() < 1e-6 && (fit.tau - 288.0).abs() < 1e-6);
        assert!(fit_decay(&t[..3], &f[..3]).is_err());
        assert!(fit_decay(&t, &[1.0; 25]).is_err());
    }

    #[test]
    fn depolarize_policy_counts_leakage_as_mixed() {
        let basis = DecodingBasis::from_codewords(&optimal_codewords(), 10).unwrap();
        let mut rho = CMat::zeros(10, 10);
        rho[(0, 0)] = r(1.0);
        assert!(decode_density(&rho, &basis, LeakagePolicy::Reject).is_err());
        let dq = decode_density(&rho, &basis, LeakagePolicy::Depolarize).unwrap();
        assert!((&dq.rho_q - CMat::identity(2, 2).scale(0.5)).max_abs() < 1e-15);
    }
}
