//! Simulated measurement protocols: spectroscopy, Ramsey, Wigner tomography,
//! process-matrix estimation, memory lifetime and comb tuning.

mod chi;
mod lifetime;
mod optimizer;
mod spectroscopy;
mod wigner;

pub use chi::{chi_matrix, CavityChannel, CoherenceElement, CombChannel, IdealPrespaChannel, IdentityChannel, LindbladChannel, ProcessMatrix};
pub use lifetime::{
    free_fock_analytic, hold_fidelities, lifetime_experiment, CodeChoice, DecodePath, LifetimeConfig, LifetimeMode, LifetimeResult,
};
pub use optimizer::{empirical_optimizer, ControlParam, OptimizerOptions, OptimizerResult};
pub use spectroscopy::{fwhm, path_offsets, peak_weights, spectroscopy_2d, transmon_spectroscopy, Spectroscopy2dConfig, SpectroscopyResult};
pub use wigner::{
    density_fidelity, fit_damped_sinusoid, prespa_ramsey, reconstruct_density, wigner, wigner_kernel, RamseyConfig, RamseyFit,
    RamseyFrame, RamseyResult,
};
