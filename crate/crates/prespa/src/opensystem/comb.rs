use super::{rotate_and_cluster, DephasingKind, EvolveOptions, LindbladGenerator, NoiseToggles, TimedOperator};
use crate::circuitmodel::{dispersive_energy, optimal_comb, DeviceParams, ModeLayout};
use crate::error::{Error, Result};
use crate::qalg::{embed_matrix, lowering_matrix, number_matrix, partial_trace, r, CMat, CVec, DensityMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Full four-path PReSPA model: both combs, dispersive energies, the
/// off-resonant mixing of odd photon numbers, and device noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombModelConfig {
    pub cavity_dim: usize,
    /// Transmon-comb rates per path, kHz.
    pub lam: [C64; 4],
    /// Mixing-comb rates per path, kHz.
    pub omega: [C64; 4],
    /// Tone spacing and detuning in MHz; the residual-minimizing comb when absent.
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub noise: NoiseToggles,
    /// Cavity pure dephasing, μs⁻¹. Defaults to the measured rate less the part
    /// already produced by idle transmon heating.
    pub cavity_dephasing: Option<f64>,
    /// Include the mixing tones acting on odd-photon transmon excitations.
    pub offresonant_mixing: bool,
    /// Collapse-frequency clustering width, MHz.
    pub cluster_threshold: f64,
}

impl Default for CombModelConfig {
    fn default() -> Self {
        Self {
            cavity_dim: 10,
            lam: [r(28.0); 4],
            omega: [r(90.0); 4],
            eta: None,
            delta: None,
            noise: NoiseToggles { dephasing_kind: DephasingKind::FockProjectors, ..NoiseToggles::default() },
            cavity_dephasing: None,
            offresonant_mixing: true,
            cluster_threshold: 0.3,
        }
    }
}

impl CombModelConfig {
    pub fn ideal_drive() -> Self {
        Self { noise: NoiseToggles { reservoir_decay: true, ..NoiseToggles::none() }, offresonant_mixing: false, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct CombModel {
    pub layout: ModeLayout,
    /// Frame energies, rad/μs.
    pub frame: Vec<f64>,
    pub generator: LindbladGenerator,
}

struct Edge {
    from: usize,
    to: usize,
    coupling: C64,
    tone: f64,
}

impl CombModel {
    pub fn build(p: &DeviceParams, cfg: &CombModelConfig) -> Result<Self> {
        if cfg.cavity_dim < 8 {
            return Err(Error::InvalidDimension(format!("comb model needs at least 8 cavity levels, got {}", cfg.cavity_dim)));
        }
        let layout = ModeLayout::tripartite(cfg.cavity_dim);
        let space = layout.space()?;
        let dim = space.total();
        let energy: Vec<f64> = (0..dim)
            .map(|k| {
                let lv = space.levels(k);
                dispersive_energy(p, lv[0], lv[1])
            })
            .collect();
        let (eta, delta) = match (cfg.eta, cfg.delta) {
            (Some(e), Some(d)) => (e, d),
            (e, d) => {
                let (oe, od, _) = optimal_comb(p);
                (e.unwrap_or(oe), d.unwrap_or(od))
            }
        };
        let nu_q = |k: usize| TAU * (-delta - k as f64 * eta);
        let nu_m = |k: usize| TAU * (delta + k as f64 * eta);
        let khz = TAU * 1e-3;
        let mut edges = Vec::new();
        for k in 0..4 {
            edges.push(Edge { from: layout.index(2 * k, 0, 0), to: layout.index(2 * k, 1, 0), coupling: cfg.lam[k] * khz, tone: nu_q(k) });
            edges.push(Edge { from: layout.index(2 * k, 1, 0), to: layout.index(2 * k + 1, 0, 1), coupling: cfg.omega[k] * khz, tone: nu_m(k) });
        }
        if cfg.offresonant_mixing {
            for j in 0.. {
                let n = 2 * j + 1;
                if n + 1 >= cfg.cavity_dim {
                    break;
                }
                let adjacent: Vec<usize> = [j, j + 1].into_iter().filter(|&k| k < 4).collect();
                let Some(&k) = adjacent.last() else { break };
                let coupling = cfg.omega[k] * khz * (adjacent.len() as f64).sqrt();
                edges.push(Edge { from: layout.index(n, 1, 0), to: layout.index(n + 1, 0, 1), coupling, tone: nu_m(k) });
            }
        }
        let mut frame = energy.clone();
        for e in &edges {
            frame[e.to] = frame[e.from] + e.tone;
        }
        let mut h = CMat::zeros(dim, dim);
        for k in 0..dim {
            h[(k, k)] = r(energy[k] - frame[k]);
        }
        for e in &edges {
            h[(e.to, e.from)] += e.coupling;
            h[(e.from, e.to)] += e.coupling.conj();
        }

        let threshold = TAU * cfg.cluster_threshold;
        let nt = &cfg.noise;
        let mut jumps: Vec<TimedOperator> = Vec::new();
        let mut add = |op: CMat, rate: f64| {
            if rate > 0.0 {
                jumps.extend(rotate_and_cluster(&op, rate, &frame, threshold));
            }
        };
        let nc = cfg.cavity_dim;
        if nt.cavity_decay {
            add(embed_matrix(&lowering_matrix(nc), &space, 0)?, 1.0 / p.t1a);
        }
        if nt.cavity_dephasing {
            let g = cfg.cavity_dephasing.unwrap_or_else(|| (p.cavity_pure_dephasing() - 1e-3 * p.gamma_up_idle).max(0.0));
            match nt.dephasing_kind {
                DephasingKind::Number => add(embed_matrix(&number_matrix(nc), &space, 0)?, 2.0 * g),
                DephasingKind::FockProjectors => {
                    for n in 0..nc {
                        let mut pn = CMat::zeros(nc, nc);
                        pn[(n, n)] = r(1.0);
                        add(embed_matrix(&pn, &space, 0)?, g);
                    }
                }
            }
        }
        let q = lowering_matrix(2);
        if nt.transmon_decay {
            add(embed_matrix(&q, &space, 1)?, 1.0 / p.t1q);
        }
        if nt.transmon_dephasing {
            add(embed_matrix(&number_matrix(2), &space, 1)?, 2.0 * p.transmon_pure_dephasing());
        }
        if nt.transmon_heating > 0.0 {
            add(embed_matrix(&q.adjoint(), &space, 1)?, 1e-3 * nt.transmon_heating);
        }
        if nt.reservoir_decay {
            add(embed_matrix(&lowering_matrix(2), &space, 2)?, 1.0 / p.t1r);
        }
        let generator = LindbladGenerator::new(TimedOperator::from_dense(&h, 0.0), jumps)?;
        Ok(Self { layout, frame, generator })
    }

    pub fn dim(&self) -> usize {
        self.generator.n
    }

    /// |ψ⟩ ⊗ |g⟩ ⊗ |0⟩
    pub fn embed_state(&self, cavity: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for n in 0..cavity.len().min(self.layout.cavity) {
            out[self.layout.index(n, 0, 0)] = cavity[n];
        }
        out
    }

    /// M ⊗ |g,0⟩⟨g,0| for a cavity operator M.
    pub fn embed_operator(&self, cavity: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim(), self.dim());
        let nc = cavity.nrows().min(self.layout.cavity);
        for m in 0..nc {
            for n in 0..nc {
                out[(self.layout.index(n, 0, 0), self.layout.index(m, 0, 0))] = cavity[(n, m)];
            }
        }
        out
    }

    pub fn evolve(&self, rho0: &CMat, times: &[f64], opts: &EvolveOptions) -> Result<Vec<CMat>> {
        self.generator.evolve(rho0, times, opts)
    }

    /// Cavity block after tracing out transmon and reservoir.
    pub fn cavity_state(&self, rho: &CMat) -> Result<CMat> {
        let full = DensityMatrix::new(self.layout.space()?, rho.clone())?;
        Ok(partial_trace(&full, &[0])?.mat)
    }

    /// Partial trace over transmon and reservoir of any operator, without the
    /// density-matrix checks; used for evolved operator bases.
    pub fn cavity_block(&self, op: &CMat) -> CMat {
        let l = &self.layout;
        let nr = l.reservoir.unwrap_or(1);
        CMat::from_fn(l.cavity, l.cavity, |n, m| {
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..l.transmon {
                for rr in 0..nr {
                    acc += op[(l.index(n, q, rr), l.index(m, q, rr))];
                }
            }
            acc
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qalg::MaxAbs;

    #[test]
    fn frame_makes_drive_static_and_resonant_edges_exact() {
        let p = DeviceParams::paper();
        let cfg = CombModelConfig { eta: Some(2.0 * p.chi_q), delta: Some(0.0), ..CombModelConfig::ideal_drive() };
        let m = CombModel::build(&p, &cfg).unwrap();
        let h = m.generator.hamiltonian.at(0.0);
        assert!((&h - h.adjoint()).max_abs() < 1e-15);
        // the zero-photon path has no χ' or Kerr correction, so it is exactly resonant
        let (g, e, o) = (m.layout.index(0, 0, 0), m.layout.index(0, 1, 0), m.layout.index(1, 0, 1));
        assert_eq!(h[(g, g)], r(0.0));
        assert!(h[(e, e)].norm() < 1e-12 && h[(o, o)].norm() < 1e-12);
        assert!(m.generator.hamiltonian.is_static());
    }

    #[test]
    fn ideal_drive_converts_vacuum_to_one_photon() {
        let p = DeviceParams::paper();
        let m = CombModel::build(&p, &CombModelConfig::ideal_drive()).unwrap();
        let mut psi = CVec::zeros(10);
        psi[0] = r(1.0);
        let v = m.embed_state(&psi);
        let rho0 = &v * v.adjoint();
        let out = m.evolve(&rho0, &[40.0], &EvolveOptions::default()).unwrap();
        let cav = m.cavity_state(&out[0]).unwrap();
        assert!(cav[(1, 1)].re > 0.9, "{}", cav[(1, 1)]);
    }

    #[test]
    fn rejects_small_cavity() {
        let p = DeviceParams::paper();
        assert!(CombModel::build(&p, &CombModelConfig { cavity_dim: 6, ..Default::default() }).is_err());
    }
}
