//! Gradient pulse engineering: piecewise-constant controls, exact propagator
//! derivatives and ADAM descent on a weighted cost.

use crate::circuitmodel::{dispersive_energy, DeviceParams};
use crate::decoder::DecodingBasis;
use crate::error::{Error, Result};
use crate::qalg::{kron, lowering_matrix, r, CMat, CVec, HermitianEigen, Operator, C64, I};
use crate::table::CsvTable;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Control amplitudes u[(k, n)] in rad/μs, held for `dt` ns each.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    pub u: DMatrix<f64>,
    /// ns
    pub dt: f64,
}

impl ControlPulse {
    pub fn new(u: DMatrix<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("pulse amplitudes must be finite".into()));
        }
        Ok(Self { u, dt })
    }

    pub fn zeros(controls: usize, steps: usize, dt: f64) -> Result<Self> {
        Self::new(DMatrix::zeros(controls, steps), dt)
    }

    /// Independent N(0, σ²) amplitudes from a seeded generator.
    pub fn white_noise(controls: usize, steps: usize, dt: f64, sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = DMatrix::from_fn(controls, steps, |_, _| normal.sample(&mut rng));
        Self::new(u, dt)
    }

    pub fn controls(&self) -> usize {
        self.u.nrows()
    }

    pub fn steps(&self) -> usize {
        self.u.ncols()
    }

    /// μs
    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt * 1e-3
    }

    pub fn to_table(&self) -> CsvTable {
        let header = std::iter::once("step".to_string()).chain((1..=self.controls()).map(|k| format!("u_{k}")));
        let mut t = CsvTable::new(header);
        for n in 0..self.steps() {
            t.push(std::iter::once(n as f64).chain(self.u.column(n).iter().copied()).collect());
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }

    pub fn from_csv(text: &str, dt: f64) -> Result<Self> {
        let t = CsvTable::parse(text).ok_or_else(|| Error::Config("malformed pulse CSV".into()))?;
        if t.header.first().map(String::as_str) != Some("step") {
            return Err(Error::Config("pulse CSV must start with a step column".into()));
        }
        let m = t.header.len() - 1;
        for (n, row) in t.rows.iter().enumerate() {
            if row.len() != m + 1 || row[0] != n as f64 {
                return Err(Error::Config(format!("pulse CSV row {n} is out of sequence")));
            }
        }
        Self::new(DMatrix::from_fn(m, t.rows.len(), |k, n| t.rows[n][k + 1]), dt)
    }
}

/// Inputs and desired outputs, one column each. A state transfer is the
/// single-column case; a subspace unitary uses one column per basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub inputs: CMat,
    pub outputs: CMat,
}

impl Target {
    pub fn state(initial: &CVec, target: &CVec) -> Result<Self> {
        Self::subspace(CMat::from_columns(std::slice::from_ref(initial)), CMat::from_columns(std::slice::from_ref(target)))
    }

    pub fn subspace(inputs: CMat, outputs: CMat) -> Result<Self> {
        if inputs.shape() != outputs.shape() || inputs.ncols() == 0 {
            return Err(Error::InvalidDimension("target inputs and outputs must have equal, non-empty shapes".into()));
        }
        for m in [&inputs, &outputs] {
            let gram = m.adjoint() * m;
            if (gram - CMat::identity(m.ncols(), m.ncols())).iter().any(|z| z.norm() > 1e-9) {
                return Err(Error::InvalidInput("target columns must be orthonormal".into()));
            }
        }
        Ok(Self { inputs, outputs })
    }

    /// D
    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Σ_k |out_k⟩⟨in_k|
    pub fn unitary(&self) -> CMat {
        &self.outputs * self.inputs.adjoint()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { alpha2: 1e-4, alpha3: 1e-7, alpha4: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    /// Initial learning rate, rad/μs per iteration.
    pub eta0: f64,
    /// Learning-rate decay per iteration.
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_iterations: usize,
    /// Stop once the infidelity C1 falls to this value.
    pub threshold: f64,
    /// Standard deviation of the initial white-noise pulse, rad/μs.
    pub init_sigma: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { eta0: 1.0, beta: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, max_iterations: 2000, threshold: 1e-3, init_sigma: 1.0 }
    }
}

#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &CMat) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { entries }
    }
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    /// rad/μs
    pub drift: CMat,
    /// Hermitian control operators H_k, multiplied by u_k in rad/μs.
    pub controls: Vec<CMat>,
    pub target: Target,
    pub weights: CostWeights,
    /// Basis indices whose occupation is penalized at every step.
    pub forbidden: Vec<usize>,
    pub adam: AdamConfig,
    sparse: Vec<SparseOp>,
}

impl ControlProblem {
    pub fn new(drift: CMat, controls: Vec<CMat>, target: Target, weights: CostWeights, forbidden: Vec<usize>, adam: AdamConfig) -> Result<Self> {
        let n = drift.nrows();
        if drift.ncols() != n || controls.iter().any(|h| h.shape() != (n, n)) || target.inputs.nrows() != n {
            return Err(Error::InvalidDimension(format!("drift, controls and target must act on dimension {n}")));
        }
        if controls.is_empty() {
            return Err(Error::InvalidInput("at least one control operator is required".into()));
        }
        if [weights.alpha2, weights.alpha3, weights.alpha4].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("cost weights must be non-negative".into()));
        }
        if let Some(&f) = forbidden.iter().find(|&&f| f >= n) {
            return Err(Error::InvalidDimension(format!("forbidden index {f} outside dimension {n}")));
        }
        let sparse = controls.iter().map(SparseOp::from_dense).collect();
        Ok(Self { drift, controls, target, weights, forbidden, adam, sparse })
    }

    pub fn from_operators(drift: &Operator, controls: &[Operator], target: Target, weights: CostWeights, forbidden: Vec<usize>, adam: AdamConfig) -> Result<Self> {
        Self::new(drift.mat.clone(), controls.iter().map(|o| o.mat.clone()).collect(), target, weights, forbidden, adam)
    }

    /// Cavity ⊗ transmon in the dispersive frame with controls σx, σy, x_A, p_A.
    /// Forbidden states are the top transmon level (when there are more than
    /// two) and the top two cavity levels.
    pub fn cavity_transmon(p: &DeviceParams, dims: CavityTransmonDims, target: Target, weights: CostWeights, adam: AdamConfig) -> Result<Self> {
        let (drift, controls) = cavity_transmon_operators(p, dims)?;
        Self::new(drift, controls, target, weights, default_forbidden(dims), adam)
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    fn check_pulse(&self, pulse: &ControlPulse) -> Result<()> {
        if pulse.controls() != self.controls.len() {
            return Err(Error::InvalidDimension(format!("pulse has {} controls, problem has {}", pulse.controls(), self.controls.len())));
        }
        Ok(())
    }

    fn hamiltonian(&self, pulse: &ControlPulse, n: usize) -> CMat {
        let mut h = self.drift.clone();
        for (k, op) in self.sparse.iter().enumerate() {
            let u = pulse.u[(k, n)];
            for &(i, j, v) in &op.entries {
                h[(i, j)] += v * u;
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityTransmonDims {
    pub cavity: usize,
    pub transmon: usize,
}

impl CavityTransmonDims {
    pub fn desk() -> Self {
        Self { cavity: 10, transmon: 3 }
    }

    pub fn paper() -> Self {
        Self { cavity: 24, transmon: 3 }
    }

    /// Basis index of |q, n⟩ (cavity-major ordering).
    pub fn index(&self, q: usize, n: usize) -> usize {
        n * self.transmon + q
    }

    pub fn total(&self) -> usize {
        self.cavity * self.transmon
    }
}

pub fn cavity_transmon_operators(p: &DeviceParams, dims: CavityTransmonDims) -> Result<(CMat, Vec<CMat>)> {
    if dims.cavity < 2 || dims.transmon < 2 {
        return Err(Error::InvalidDimension("cavity and transmon need at least two levels".into()));
    }
    let total = dims.total();
    let mut drift = CMat::zeros(total, total);
    for n in 0..dims.cavity {
        for q in 0..dims.transmon {
            let anh = 0.5 * TAU * p.alpha_q * (q * q.saturating_sub(1)) as f64;
            drift[(dims.index(q, n), dims.index(q, n))] = r(dispersive_energy(p, n, q) - anh);
        }
    }
    let a = lowering_matrix(dims.cavity);
    let q = lowering_matrix(dims.transmon);
    let (ic, iq) = (CMat::identity(dims.cavity, dims.cavity), CMat::identity(dims.transmon, dims.transmon));
    let sx = &q + q.adjoint();
    let sy = (q.adjoint() - &q) * I;
    let xa = &a + a.adjoint();
    let pa = (a.adjoint() - &a) * I;
    Ok((drift, vec![kron(&ic, &sx), kron(&ic, &sy), kron(&xa, &iq), kron(&pa, &iq)]))
}

fn default_forbidden(dims: CavityTransmonDims) -> Vec<usize> {
    let mut f = Vec::new();
    for n in 0..dims.cavity {
        for q in 0..dims.transmon {
            let leaked = (dims.transmon > 2 && q + 1 == dims.transmon) || n + 2 >= dims.cavity;
            if leaked {
                f.push(dims.index(q, n));
            }
        }
    }
    f
}

/// Decoding target on the seven-dimensional subspace: |g,u_k⟩ → |g,k⟩,
/// |g,0⟩ → |g,5⟩ and the swap |g,v_k⟩ ↔ |e,k⟩.
pub fn decode_target(basis: &DecodingBasis, dims: CavityTransmonDims) -> Result<Target> {
    if basis.dim() > dims.cavity || dims.cavity < 8 {
        return Err(Error::InvalidDimension("decoding target needs at least eight cavity levels".into()));
    }
    let total = dims.total();
    let lift = |v: &CVec, q: usize| {
        let mut out = CVec::zeros(total);
        for (n, &a) in v.iter().enumerate() {
            out[dims.index(q, n)] = a;
        }
        out
    };
    let unit = |q: usize, n: usize| {
        let mut out = CVec::zeros(total);
        out[dims.index(q, n)] = r(1.0);
        out
    };
    let inputs = [
        lift(&basis.u0.amps, 0),
        lift(&basis.u1.amps, 0),
        unit(0, 0),
        lift(&basis.v0.amps, 0),
        lift(&basis.v1.amps, 0),
        unit(1, 0),
        unit(1, 1),
    ];
    let outputs = [unit(0, 0), unit(0, 1), unit(0, 5), unit(1, 0), unit(1, 1), lift(&basis.v0.amps, 0), lift(&basis.v1.amps, 0)];
    Target::subspace(CMat::from_columns(&inputs), CMat::from_columns(&outputs))
}

/// Lifts a cavity state to |g⟩ ⊗ ψ.
pub fn with_transmon_ground(psi: &CVec, dims: CavityTransmonDims) -> Result<CVec> {
    if psi.len() > dims.cavity {
        return Err(Error::InvalidDimension(format!("cavity state of length {} exceeds {}", psi.len(), dims.cavity)));
    }
    let mut out = CVec::zeros(dims.total());
    for (n, &a) in psi.iter().enumerate() {
        out[dims.index(0, n)] = a;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub fidelity: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// U_{N−1}⋯U_0 applied to the identity.
pub fn propagate(pulse: &ControlPulse, prob: &ControlProblem) -> Result<CMat> {
    prob.check_pulse(pulse)?;
    let n = prob.dim();
    let mut u = CMat::identity(n, n);
    for step in 0..pulse.steps() {
        u = step_propagator(&HermitianEigen::new(&prob.hamiltonian(pulse, step)), pulse.dt * 1e-3) * u;
    }
    Ok(u)
}

pub fn propagate_state(pulse: &ControlPulse, prob: &ControlProblem, psi: &CVec) -> Result<CVec> {
    prob.check_pulse(pulse)?;
    let mut v = psi.clone();
    for step in 0..pulse.steps() {
        v = step_propagator(&HermitianEigen::new(&prob.hamiltonian(pulse, step)), pulse.dt * 1e-3) * v;
    }
    Ok(v)
}

fn step_propagator(eig: &HermitianEigen, dt: f64) -> CMat {
    eig.apply_fn(|x| C64::from_polar(1.0, -x * dt))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn cost(pulse: &ControlPulse, prob: &ControlProblem) -> Result<CostBreakdown> {
    Ok(evaluate(pulse, prob, false)?.0)
}

/// ∂C/∂u_{kn}
pub fn gradient(pulse: &ControlPulse, prob: &ControlProblem) -> Result<DMatrix<f64>> {
    Ok(evaluate(pulse, prob, true)?.1.expect("gradient requested"))
}

pub fn cost_and_gradient(pulse: &ControlPulse, prob: &ControlProblem) -> Result<(CostBreakdown, DMatrix<f64>)> {
    let (c, g) = evaluate(pulse, prob, true)?;
    Ok((c, g.expect("gradient requested")))
}

fn forbidden_projection(prob: &ControlProblem, psi: &CMat) -> CMat {
    let mut out = CMat::zeros(psi.nrows(), psi.ncols());
    for &f in &prob.forbidden {
        out.row_mut(f).copy_from(&psi.row(f));
    }
    out
}

fn evaluate(pulse: &ControlPulse, prob: &ControlProblem, want_grad: bool) -> Result<(CostBreakdown, Option<DMatrix<f64>>)> {
    prob.check_pulse(pulse)?;
    let steps = pulse.steps();
    let dt = pulse.dt * 1e-3;
    let d = prob.target.dim() as f64;
    let w = prob.weights;

    let mut eigs = Vec::with_capacity(if want_grad { steps } else { 0 });
    let mut states = Vec::with_capacity(if want_grad { steps + 1 } else { 0 });
    let mut psi = prob.target.inputs.clone();
    let mut c4 = 0.0;
    for step in 0..steps {
        let eig = HermitianEigen::new(&prob.hamiltonian(pulse, step));
        let next = step_propagator(&eig, dt) * &psi;
        if want_grad {
            states.push(std::mem::replace(&mut psi, next));
            eigs.push(eig);
        } else {
            psi = next;
        }
        c4 += prob.forbidden.iter().map(|&f| psi.row(f).norm_squared()).sum::<f64>();
    }
    c4 /= d;
    let z: C64 = prob.target.outputs.iter().zip(psi.iter()).map(|(o, p)| o.conj() * p).sum();
    let fidelity = z.norm_sqr() / (d * d);
    let c1 = 1.0 - fidelity;
    let u = &pulse.u;
    let mut c2 = 0.0;
    for n in 1..steps {
        c2 += (u.column(n) - u.column(n - 1)).norm_squared();
    }
    let c3 = u.norm_squared();
    let total = c1 + w.alpha2 * c2 + w.alpha3 * c3 + w.alpha4 * c4;
    let breakdown = CostBreakdown { total, fidelity, c1, c2, c3, c4 };
    if !want_grad {
        return Ok((breakdown, None));
    }

    let mut grad = DMatrix::<f64>::zeros(u.nrows(), steps);
    let mut lambda = &prob.target.outputs * (-z / (d * d)) + forbidden_projection(prob, &psi) * r(w.alpha4 / d);
    for step in (0..steps).rev() {
        let eig = &eigs[step];
        let v = &eig.vectors;
        let x = v.adjoint() * &states[step];
        let y = v.adjoint() * &lambda;
        let outer = y.conjugate() * x.transpose();
        let dim = eig.values.len();
        let m = CMat::from_fn(dim, dim, |a, b| {
            let (la, lb) = (eig.values[a], eig.values[b]);
            let phi = C64::from_polar(sinc(0.5 * dt * (la - lb)), -0.5 * dt * (la + lb));
            phi * outer[(a, b)]
        });
        let k = v.conjugate() * m * v.transpose();
        for (c, op) in prob.sparse.iter().enumerate() {
            let s: C64 = op.entries.iter().map(|&(i, j, h)| h * k[(i, j)]).sum();
            grad[(c, step)] = 2.0 * (-I * s * dt).re;
        }
        let back = step_propagator(eig, dt).adjoint() * &lambda;
        lambda = if step > 0 { back + forbidden_projection(prob, &states[step]) * r(w.alpha4 / d) } else { back };
    }
    for c in 0..u.nrows() {
        for n in 0..steps {
            let mut g = 2.0 * w.alpha3 * u[(c, n)];
            if n > 0 {
                g += 2.0 * w.alpha2 * (u[(c, n)] - u[(c, n - 1)]);
            }
            if n + 1 < steps {
                g -= 2.0 * w.alpha2 * (u[(c, n + 1)] - u[(c, n)]);
            }
            grad[(c, n)] += g;
        }
    }
    Ok((breakdown, Some(grad)))
}

#[derive(Debug, Clone)]
pub struct GrapeResult {
    /// Lowest-cost pulse seen.
    pub pulse: ControlPulse,
    pub best: CostBreakdown,
    /// Cost of every iterate, in order.
    pub history: Vec<CostBreakdown>,
    pub converged: bool,
}

impl GrapeResult {
    /// Running minimum of the total cost.
    pub fn best_envelope(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::INFINITY, |m, c| {
                *m = m.min(c.total);
                Some(*m)
            })
            .collect()
    }
}

/// ADAM descent from a white-noise pulse of the given shape.
pub fn optimize(prob: &ControlProblem, steps: usize, dt: f64, seed: u64) -> Result<GrapeResult> {
    let init = ControlPulse::white_noise(prob.controls.len(), steps, dt, prob.adam.init_sigma, seed)?;
    optimize_from(prob, init)
}

pub fn optimize_from(prob: &ControlProblem, init: ControlPulse) -> Result<GrapeResult> {
    let cfg = prob.adam;
    let mut pulse = init;
    let shape = pulse.u.shape();
    let (mut m1, mut m2) = (DMatrix::<f64>::zeros(shape.0, shape.1), DMatrix::<f64>::zeros(shape.0, shape.1));
    let mut history = Vec::new();
    let mut best: Option<(CostBreakdown, ControlPulse)> = None;
    let mut converged = false;
    for iteration in 0..=cfg.max_iterations {
        let (c, g) = cost_and_gradient(&pulse, prob)?;
        if !c.total.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Optimizer { iteration });
        }
        history.push(c);
        if best.as_ref().map_or(true, |(b, _)| c.total < b.total) {
            best = Some((c, pulse.clone()));
        }
        if c.c1 <= cfg.threshold {
            converged = true;
            break;
        }
        if iteration == cfg.max_iterations {
            break;
        }
        let p = iteration as f64;
        let eta = cfg.eta0 * (-cfg.beta * p).exp();
        let (b1t, b2t) = (1.0 - cfg.beta1.powf(p + 1.0), 1.0 - cfg.beta2.powf(p + 1.0));
        for ((u, gi), (a, b)) in pulse.u.iter_mut().zip(g.iter()).zip(m1.iter_mut().zip(m2.iter_mut())) {
            *a = cfg.beta1 * *a + (1.0 - cfg.beta1) * gi;
            *b = cfg.beta2 * *b + (1.0 - cfg.beta2) * gi * gi;
            *u -= eta * (*a / b1t) / ((*b / b2t).sqrt() + cfg.eps);
        }
    }
    let (best, pulse) = best.expect("at least one evaluation");
    Ok(GrapeResult { pulse, best, history, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseMetadata {
    /// ns
    pub dt: f64,
    pub dims: CavityTransmonDims,
    pub weights: CostWeights,
    pub seed: u64,
    pub fidelity: f64,
    pub iterations: usize,
}
