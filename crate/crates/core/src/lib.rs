//! Minimization of pairwise interaction energies of probability measures on
//! the unit sphere `S^{d-1}`.

pub mod diffop;
pub mod error;
pub mod kernel;
pub mod measures;
pub mod moments;
pub mod numeric;
pub mod optimizer;
pub mod spectral;
pub mod witness;

pub use diffop::{dk_closed_form, dk_finite_difference, dk_sign_scan, lb_closed_form, lb_finite_difference, SignScanReport};
pub use error::{Error, Result};
pub use kernel::{Kernel, TabulatedKernel};
pub use measures::{discrete_energy, potential, potential_report, PotentialReport, SphericalConfig};
pub use moments::{caratheodory_reduce, design_report, discrete_minimizer_reduce, DesignReport, MomentSystem, Reduction, ReductionReport};
pub use optimizer::{local_min_probe, minimize_energy, OptimizerParams, OptimizerReport, ProbeReport};
pub use spectral::{
    classify_pd, expand_kernel, gauss_gegenbauer_rule, gegenbauer_eval, harmonic_dim, sigma_energy,
    GegenbauerExpansion, PDClassification,
};
pub use witness::{hadamard_power_bound, non_pd_witness, HadamardBound, WitnessReport};
