use crate::dissipator::prespa_infinite;
use crate::error::{Error, Result};
use crate::opensystem::{CombModel, EvolveOptions, LindbladGenerator};
use crate::qalg::{r, CMat, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// A map on cavity density matrices (any linear operator is accepted, so
/// coherence inputs can be propagated directly).
pub trait CavityChannel: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, rho: &CMat) -> Result<CMat>;
}

pub struct IdentityChannel {
    pub dim: usize,
}

impl CavityChannel for IdentityChannel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, rho: &CMat) -> Result<CMat> {
        Ok(rho.clone())
    }
}

/// Long-time limit of PReSPA: even levels are moved up by one, odd levels kept.
pub struct IdealPrespaChannel {
    pub dim: usize,
}

impl CavityChannel for IdealPrespaChannel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, rho: &CMat) -> Result<CMat> {
        let ncut = self.dim - self.dim % 2;
        let mut pi = CMat::zeros(self.dim, self.dim);
        pi.view_mut((0, 0), (ncut, ncut)).copy_from(&prespa_infinite(ncut)?.mat);
        let odd = CMat::from_fn(self.dim, self.dim, |i, j| if i == j && i % 2 == 1 { r(1.0) } else { r(0.0) });
        Ok(&pi * rho * pi.adjoint() + &odd * rho * &odd)
    }
}

/// Cavity-only master equation run for a fixed duration.
pub struct LindbladChannel {
    pub generator: LindbladGenerator,
    pub duration: f64,
}

impl CavityChannel for LindbladChannel {
    fn dim(&self) -> usize {
        self.generator.n
    }
    fn apply(&self, rho: &CMat) -> Result<CMat> {
        Ok(self.generator.evolve(rho, &[self.duration], &EvolveOptions::default())?.remove(0))
    }
}

/// Full comb model: the cavity input is embedded with transmon and reservoir
/// in their ground states and the output is traced down to the cavity.
pub struct CombChannel {
    pub model: CombModel,
    pub duration: f64,
}

impl CavityChannel for CombChannel {
    fn dim(&self) -> usize {
        self.model.layout.cavity
    }
    fn apply(&self, rho: &CMat) -> Result<CMat> {
        let full = self.model.embed_operator(rho);
        let out = self.model.evolve(&full, &[self.duration], &EvolveOptions::default())?;
        Ok(self.model.cavity_block(&out[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceElement {
    pub input: (usize, usize),
    pub output: (usize, usize),
    /// ρ_out[n', m'] / ρ_in[n, m]
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    /// μs
    pub duration: f64,
    /// population[(n', n)]: weight on |n'⟩ for input |n⟩.
    pub population: DMatrix<f64>,
    pub coherence: Vec<CoherenceElement>,
    /// Largest off-diagonal output element other than the mapped one, over
    /// all superposition inputs.
    pub cross_path_max: f64,
}

impl ProcessMatrix {
    pub fn mean_coherence_magnitude(&self) -> f64 {
        self.coherence.iter().map(|c| c.value.norm()).sum::<f64>() / self.coherence.len().max(1) as f64
    }
}

const MIN_INPUT_COHERENCE: f64 = 1e-9;

fn ratio(rho_in: &CMat, rho_out: &CMat, input: (usize, usize), output: (usize, usize)) -> Result<C64> {
    let den = rho_in[input];
    if den.norm() < MIN_INPUT_COHERENCE {
        return Err(Error::UndefinedElement(format!("input coherence ρ{}{} vanishes", input.0, input.1)));
    }
    Ok(rho_out[output] / den)
}

/// Population block from Fock inputs |n⟩, n < support, and coherence
/// elements ρ_{n+shift, m+shift}/ρ_{nm} from the inputs (|n⟩+|m⟩)/√2 for
/// every pair drawn from `levels`.
pub fn chi_matrix(channel: &dyn CavityChannel, duration: f64, support: usize, levels: &[usize], shift: usize) -> Result<ProcessMatrix> {
    let dim = channel.dim();
    if support > dim || levels.iter().any(|&n| n + shift >= dim) {
        return Err(Error::InvalidDimension(format!("process support exceeds the channel dimension {dim}")));
    }
    let pairs: Vec<(usize, usize)> =
        levels.iter().enumerate().flat_map(|(i, &n)| levels[i + 1..].iter().map(move |&m| (n, m))).collect();
    let pops: Vec<Vec<f64>> = (0..support)
        .into_par_iter()
        .map(|n| {
            let mut rho = CMat::zeros(dim, dim);
            rho[(n, n)] = r(1.0);
            let out = channel.apply(&rho)?;
            Ok((0..support).map(|k| out[(k, k)].re).collect())
        })
        .collect::<Result<_>>()?;
    let population = DMatrix::from_fn(support, support, |k, n| pops[n][k]);
    let outputs: Vec<(CMat, CMat)> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let mut rho = CMat::zeros(dim, dim);
            for a in [n, m] {
                for b in [n, m] {
                    rho[(a, b)] = r(0.5);
                }
            }
            let out = channel.apply(&rho)?;
            Ok((rho, out))
        })
        .collect::<Result<_>>()?;
    let mut coherence = Vec::new();
    let mut cross: f64 = 0.0;
    for (&(n, m), (rin, rout)) in pairs.iter().zip(&outputs) {
        let output = (n + shift, m + shift);
        coherence.push(CoherenceElement { input: (n, m), output, value: ratio(rin, rout, (n, m), output)? });
        for i in 0..dim {
            for j in 0..dim {
                if i != j && (i, j) != output && (j, i) != output {
                    cross = cross.max(rout[(i, j)].norm());
                }
            }
        }
    }
    Ok(ProcessMatrix { duration, population, coherence, cross_path_max: cross })
}
