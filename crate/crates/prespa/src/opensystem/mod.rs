//! Lindblad master-equation integration, steady states, and the driven
//! cavity–transmon–reservoir models built on top of them.

mod comb;
mod raman;

pub use comb::{CombModel, CombModelConfig};
pub use raman::{
    conversion_halftime, first_crossing, heating_rate_oracle, heating_scan, raman_curves, raman_fit, tripartite_conversion,
    HeatingPoint, RamanCurves, RamanFit, RamanModel,
};

use crate::circuitmodel::{DeviceParams, ModeLayout};
use crate::error::{Error, Result};
use crate::qalg::{embed_matrix, lowering_matrix, number_matrix, r, CMat, DensityMatrix, MaxAbs, Operator, C64, I};
use serde::{Deserialize, Serialize};

/// One matrix entry that rotates in time: value · e^{i·freq·t}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedEntry {
    pub row: usize,
    pub col: usize,
    pub value: C64,
    pub freq: f64,
}

/// Sparse operator whose entries carry individual rotation frequencies (rad/μs).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimedOperator {
    pub n: usize,
    pub entries: Vec<TimedEntry>,
}

impl TimedOperator {
    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)].norm() > tol {
                    entries.push(TimedEntry { row: i, col: j, value: m[(i, j)], freq: 0.0 });
                }
            }
        }
        Self { n: m.nrows(), entries }
    }

    pub fn is_static(&self) -> bool {
        self.entries.iter().all(|e| e.freq == 0.0)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.entries.iter_mut().for_each(|e| e.value *= s);
        self
    }

    fn eval_into(&self, t: f64, out: &mut Vec<(usize, usize, C64)>) {
        out.clear();
        out.extend(self.entries.iter().map(|e| {
            let v = if e.freq == 0.0 { e.value } else { e.value * C64::from_polar(1.0, e.freq * t) };
            (e.row, e.col, v)
        }));
    }

    pub fn at(&self, t: f64) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        let mut buf = Vec::new();
        self.eval_into(t, &mut buf);
        for (i, j, v) in buf {
            m[(i, j)] += v;
        }
        m
    }

    /// L†L with the rotation frequencies of each product term.
    fn dagger_product(&self) -> TimedOperator {
        let mut by_row: Vec<Vec<&TimedEntry>> = vec![Vec::new(); self.n];
        for e in &self.entries {
            by_row[e.row].push(e);
        }
        let mut acc: Vec<TimedEntry> = Vec::new();
        for row in by_row {
            for a in &row {
                for b in &row {
                    let value = a.value.conj() * b.value;
                    let freq = b.freq - a.freq;
                    match acc.iter_mut().find(|x| x.row == a.col && x.col == b.col && (x.freq - freq).abs() < 1e-12) {
                        Some(x) => x.value += value,
                        None => acc.push(TimedEntry { row: a.col, col: b.col, value, freq }),
                    }
                }
            }
        }
        acc.retain(|e| e.value.norm() > 0.0);
        TimedOperator { n: self.n, entries: acc }
    }
}

/// Generator L[ρ] = −i[H,ρ] + Σ_c (L_c ρ L_c† − ½{L_c†L_c, ρ}).
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub n: usize,
    pub hamiltonian: TimedOperator,
    pub jumps: Vec<TimedOperator>,
    heff: TimedOperator,
}

struct Scratch {
    heff: Vec<(usize, usize, C64)>,
    jump: Vec<(usize, usize, C64)>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: TimedOperator, jumps: Vec<TimedOperator>) -> Result<Self> {
        let n = hamiltonian.n;
        if jumps.iter().any(|j| j.n != n) {
            return Err(Error::InvalidDimension("collapse operator size differs from the Hamiltonian".into()));
        }
        let mut heff = hamiltonian.clone();
        for j in &jumps {
            for e in j.dagger_product().entries {
                heff.entries.push(TimedEntry { value: e.value * C64::new(0.0, -0.5), ..e });
            }
        }
        Ok(Self { n, hamiltonian, jumps, heff })
    }

    /// Static generator from a Hamiltonian and rate-weighted collapse operators.
    pub fn from_noise(h: &CMat, noise: &NoiseModel) -> Result<Self> {
        let jumps = noise
            .collapses
            .iter()
            .filter(|c| c.rate > 0.0)
            .map(|c| TimedOperator::from_dense(&c.op, 0.0).scaled(c.rate.sqrt()))
            .collect();
        Self::new(TimedOperator::from_dense(h, 0.0), jumps)
    }

    pub fn is_static(&self) -> bool {
        self.heff.is_static() && self.jumps.iter().all(TimedOperator::is_static)
    }

    fn scratch(&self) -> Scratch {
        Scratch { heff: Vec::with_capacity(self.heff.entries.len()), jump: Vec::new() }
    }

    fn apply_with(&self, t: f64, rho: &[C64], out: &mut [C64], s: &mut Scratch) {
        let n = self.n;
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        self.heff.eval_into(t, &mut s.heff);
        // −i H_eff ρ
        for &(a, b, v) in &s.heff {
            let w = -I * v;
            for k in 0..n {
                out[k * n + a] += w * rho[k * n + b];
            }
        }
        // + i ρ H_eff†
        for &(a, b, v) in &s.heff {
            let w = I * v.conj();
            let (src, dst) = (b * n, a * n);
            for k in 0..n {
                let x = rho[src + k];
                out[dst + k] += w * x;
            }
        }
        for jump in &self.jumps {
            jump.eval_into(t, &mut s.jump);
            for &(i, j, v) in &s.jump {
                for &(k, l, u) in &s.jump {
                    out[k * n + i] += v * rho[l * n + j] * u.conj();
                }
            }
        }
    }

    pub fn apply(&self, t: f64, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        let mut s = self.scratch();
        self.apply_with(t, rho.as_slice(), out.as_mut_slice(), &mut s);
        out
    }

    /// Column-stacked superoperator matrix (static generators only).
    pub fn vectorized(&self) -> Result<CMat> {
        if !self.is_static() {
            return Err(Error::InvalidInput("vectorized generator requires time-independent operators".into()));
        }
        let n2 = self.n * self.n;
        let mut m = CMat::zeros(n2, n2);
        let mut basis = vec![C64::new(0.0, 0.0); n2];
        let mut out = vec![C64::new(0.0, 0.0); n2];
        let mut s = self.scratch();
        for k in 0..n2 {
            basis[k] = r(1.0);
            self.apply_with(0.0, &basis, &mut out, &mut s);
            m.column_mut(k).copy_from_slice(&out);
            basis[k] = r(0.0);
        }
        Ok(m)
    }

    /// Dormand–Prince 5(4) integration landing exactly on every requested time.
    pub fn evolve(&self, rho0: &CMat, times: &[f64], opts: &EvolveOptions) -> Result<Vec<CMat>> {
        if rho0.nrows() != self.n || rho0.ncols() != self.n {
            return Err(Error::InvalidDimension(format!("initial state {}x{} for generator of size {}", rho0.nrows(), rho0.ncols(), self.n)));
        }
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidInput("evolution times must be non-negative and non-decreasing".into()));
        }
        let mut out = Vec::with_capacity(times.len());
        let mut y = rho0.as_slice().to_vec();
        let mut t = 0.0;
        let mut h = opts.initial_step;
        let mut rk = Rk45::new(y.len());
        let mut s = self.scratch();
        let mut steps = 0usize;
        for &target in times {
            while target - t > 1e-14 * target.max(1.0) {
                let step = h.min(target - t);
                let err = rk.step(self, t, &y, step, opts, &mut s);
                if !err.is_finite() {
                    return Err(Error::Integration(format!("non-finite state at t = {t}")));
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    t += step;
                    y.copy_from_slice(&rk.y_new);
                    let next = (step * factor).min(opts.max_step);
                    h = if step < h { h.max(next) } else { next };
                } else {
                    h = step * factor;
                    if h < opts.min_step {
                        return Err(Error::Integration(format!("step size collapsed to {h:.3e} at t = {t}")));
                    }
                }
                steps += 1;
                if steps > opts.max_steps {
                    return Err(Error::Integration(format!("exceeded {} steps before t = {target}", opts.max_steps)));
                }
            }
            out.push(CMat::from_column_slice(self.n, self.n, &y));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, initial_step: 1e-3, max_step: f64::INFINITY, min_step: 1e-12, max_steps: 10_000_000 }
    }
}

struct Rk45 {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Rk45 {
    fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Self { k: std::array::from_fn(|_| z.clone()), tmp: z.clone(), y_new: z }
    }

    fn combine(&mut self, y: &[C64], h: f64, coefs: &[(usize, f64)]) {
        for (i, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(s, a) in coefs {
                acc += self.k[s][i] * (h * a);
            }
            *t = acc;
        }
    }

    /// One trial step; returns the scaled error norm.
    fn step(&mut self, g: &LindbladGenerator, t: f64, y: &[C64], h: f64, o: &EvolveOptions, s: &mut Scratch) -> f64 {
        g.apply_with(t, y, &mut self.k[0], s);
        let stages: [(f64, &[(usize, f64)]); 5] = [
            (1.0 / 5.0, &[(0, A21)]),
            (3.0 / 10.0, &[(0, A31), (1, A32)]),
            (4.0 / 5.0, &[(0, A41), (1, A42), (2, A43)]),
            (8.0 / 9.0, &[(0, A51), (1, A52), (2, A53), (3, A54)]),
            (1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]),
        ];
        for (idx, (c, coefs)) in stages.iter().enumerate() {
            self.combine(y, h, coefs);
            let (tmp, k) = (&self.tmp, &mut self.k[idx + 1]);
            g.apply_with(t + c * h, tmp, k, s);
        }
        self.combine(y, h, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
        self.y_new.copy_from_slice(&self.tmp);
        g.apply_with(t + h, &self.y_new, &mut self.k[6], s);
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1 + self.k[2][i] * E3 + self.k[3][i] * E4 + self.k[4][i] * E5 + self.k[5][i] * E6 + self.k[6][i] * E7) * h;
            let scale = o.atol + o.rtol * y[i].norm().max(self.y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingKind {
    /// √(2γ_φ)·n̂, coherence ρ_nm decays at γ_φ(n−m)².
    #[default]
    Number,
    /// √γ_φ·P_n for every Fock projector, coherence ρ_nm decays at γ_φ.
    FockProjectors,
}

#[derive(Debug, Clone)]
pub struct Collapse {
    pub label: String,
    pub op: CMat,
    /// μs⁻¹
    pub rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct NoiseModel {
    pub collapses: Vec<Collapse>,
}

/// Which device noise channels to include.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseToggles {
    pub cavity_decay: bool,
    pub cavity_dephasing: bool,
    pub transmon_decay: bool,
    pub transmon_dephasing: bool,
    /// Transmon heating rate, ms⁻¹; zero disables.
    pub transmon_heating: f64,
    pub reservoir_decay: bool,
    pub dephasing_kind: DephasingKind,
}

impl Default for NoiseToggles {
    fn default() -> Self {
        Self {
            cavity_decay: true,
            cavity_dephasing: true,
            transmon_decay: true,
            transmon_dephasing: true,
            transmon_heating: 1.8,
            reservoir_decay: true,
            dephasing_kind: DephasingKind::Number,
        }
    }
}

impl NoiseToggles {
    pub fn none() -> Self {
        Self {
            cavity_decay: false,
            cavity_dephasing: false,
            transmon_decay: false,
            transmon_dephasing: false,
            transmon_heating: 0.0,
            reservoir_decay: false,
            dephasing_kind: DephasingKind::Number,
        }
    }
}

impl NoiseModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, op: CMat, rate: f64) -> Result<()> {
        let label = label.into();
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidInput(format!("collapse rate for {label} must be non-negative, got {rate}")));
        }
        if let Some(c) = self.collapses.first() {
            if c.op.nrows() != op.nrows() {
                return Err(Error::InvalidDimension(format!("collapse {label} has size {}, expected {}", op.nrows(), c.op.nrows())));
            }
        }
        self.collapses.push(Collapse { label, op, rate });
        Ok(())
    }

    /// Device noise on a cavity–transmon(–reservoir) layout.
    pub fn device(p: &DeviceParams, layout: &ModeLayout, toggles: &NoiseToggles) -> Result<Self> {
        let space = layout.space()?;
        let mut m = Self::new();
        let cav = |op: &CMat| embed_matrix(op, &space, 0);
        let tr = |op: &CMat| embed_matrix(op, &space, 1);
        if toggles.cavity_decay {
            m.push("cavity decay", cav(&lowering_matrix(layout.cavity))?, 1.0 / p.t1a)?;
        }
        if toggles.cavity_dephasing {
            let g = p.cavity_pure_dephasing();
            if g < 0.0 {
                return Err(Error::Config("cavity T2 exceeds 2·T1".into()));
            }
            match toggles.dephasing_kind {
                DephasingKind::Number => m.push("cavity dephasing", cav(&number_matrix(layout.cavity))?, 2.0 * g)?,
                DephasingKind::FockProjectors => {
                    for n in 0..layout.cavity {
                        let mut pn = CMat::zeros(layout.cavity, layout.cavity);
                        pn[(n, n)] = r(1.0);
                        m.push(format!("cavity dephasing {n}"), cav(&pn)?, g)?;
                    }
                }
            }
        }
        if toggles.transmon_decay {
            m.push("transmon decay", tr(&lowering_matrix(layout.transmon))?, 1.0 / p.t1q)?;
        }
        if toggles.transmon_dephasing {
            let g = p.transmon_pure_dephasing();
            if g < 0.0 {
                return Err(Error::Config("transmon T2* exceeds 2·T1".into()));
            }
            m.push("transmon dephasing", tr(&number_matrix(layout.transmon))?, 2.0 * g)?;
        }
        if toggles.transmon_heating > 0.0 {
            m.push("transmon heating", tr(&lowering_matrix(layout.transmon).adjoint())?, toggles.transmon_heating * 1e-3)?;
        }
        if toggles.reservoir_decay {
            if let Some(d) = layout.reservoir {
                m.push("reservoir decay", embed_matrix(&lowering_matrix(d), &space, 2)?, 1.0 / p.t1r)?;
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct MasterEqProblem {
    pub h: Operator,
    pub noise: NoiseModel,
    pub rho0: DensityMatrix,
    /// μs
    pub times: Vec<f64>,
}

const MAX_DIM: usize = 200;

pub fn lindblad_evolve(prob: &MasterEqProblem) -> Result<Vec<DensityMatrix>> {
    lindblad_evolve_with(prob, &EvolveOptions::default())
}

pub fn lindblad_evolve_with(prob: &MasterEqProblem, opts: &EvolveOptions) -> Result<Vec<DensityMatrix>> {
    let n = prob.h.space.total();
    if n > MAX_DIM {
        return Err(Error::InvalidDimension(format!("master equation of dimension {n} exceeds {MAX_DIM}")));
    }
    if prob.rho0.space != prob.h.space {
        return Err(Error::InvalidDimension("initial state and Hamiltonian live in different spaces".into()));
    }
    let g = LindbladGenerator::from_noise(&prob.h.mat, &prob.noise)?;
    let out = g.evolve(&prob.rho0.mat, &prob.times, opts)?;
    out.into_iter().map(|m| DensityMatrix::new(prob.h.space.clone(), m)).collect()
}

/// Null vector of the generator normalized to unit trace.
pub fn steady_state(h: &Operator, noise: &NoiseModel) -> Result<DensityMatrix> {
    let g = LindbladGenerator::from_noise(&h.mat, noise)?;
    let rho = steady_state_of(&g)?;
    DensityMatrix::new(h.space.clone(), rho)
}

pub fn steady_state_of(g: &LindbladGenerator) -> Result<CMat> {
    let n = g.n;
    let l = g.vectorized()?;
    let scale = l.max_abs().max(1e-300);
    if n * n <= 256 {
        let sv = l.singular_values();
        let null_dim = sv.iter().filter(|&&s| s < 1e-10 * scale).count();
        if null_dim != 1 {
            return Err(Error::NonUniqueSteadyState { null_dim });
        }
    }
    let mut a = l.clone();
    for k in 0..n * n {
        a[(0, k)] = r(0.0);
    }
    for i in 0..n {
        a[(0, i * n + i)] = r(scale);
    }
    let mut b = crate::qalg::CVec::zeros(n * n);
    b[0] = r(scale);
    let lu = a.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n * n).map(|i| u[(i, i)].norm()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if dmin < 1e-13 * dmax {
        return Err(Error::NonUniqueSteadyState { null_dim: 2 });
    }
    let x = lu.solve(&b).ok_or(Error::NonUniqueSteadyState { null_dim: 2 })?;
    let rho = CMat::from_column_slice(n, n, x.as_slice());
    let rho = (&rho + rho.adjoint()).scale(0.5);
    let resid = g.apply(0.0, &rho).max_abs();
    if resid > 1e-10 {
        return Err(Error::Integration(format!("steady-state residual {resid:.2e}")));
    }
    Ok(rho)
}

/// Entries of √rate·L in a frame with energies `frame`, grouped into clusters
/// of nearby rotation frequency; each cluster keeps only the residual
/// rotation about its mean.
pub fn rotate_and_cluster(op: &CMat, rate: f64, frame: &[f64], threshold: f64) -> Vec<TimedOperator> {
    let n = op.nrows();
    let amp = rate.sqrt();
    let mut entries: Vec<TimedEntry> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let v = op[(i, j)];
            if v.norm() > 0.0 {
                entries.push(TimedEntry { row: i, col: j, value: v * amp, freq: frame[i] - frame[j] });
            }
        }
    }
    entries.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    let mut clusters: Vec<Vec<TimedEntry>> = Vec::new();
    for e in entries {
        match clusters.last_mut() {
            Some(c) if e.freq - c.last().map_or(f64::NEG_INFINITY, |x| x.freq) < threshold => c.push(e),
            _ => clusters.push(vec![e]),
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let mean = c.iter().map(|e| e.freq).sum::<f64>() / c.len() as f64;
            let entries = c.into_iter().map(|e| TimedEntry { freq: if (e.freq - mean).abs() < 1e-12 { 0.0 } else { e.freq - mean }, ..e }).collect();
            TimedOperator { n, entries }
        })
        .collect()
}
