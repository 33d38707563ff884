//! Absorption spectra of molecular aggregates built from identical monomers.
//!
//! Pipeline: [`geometry`] places sites and transition dipoles,
//! [`excitonics`] builds and diagonalizes the dipole-dipole coupling matrix,
//! [`lineshape`] provides the monomer Green function ⟨g(E)⟩ and
//! [`spectra`] assembles stick and CES spectra.

pub mod error;
pub mod excitonics;
pub mod export;
pub mod geometry;
pub mod lineshape;
pub mod spectra;

pub use error::{Error, Result};
pub use excitonics::{
    coupling_matrix, coupling_matrix_with, diagonalize, oscillator_strengths, CouplingMatrix,
    CouplingRange, ExcitonBasis, OscillatorStrengths, ReferenceCoupling,
};
pub use geometry::{AggregateGeometry, DipoleFrame, DipoleSpec, GeometryKind, GeometrySpec, Vec3};
pub use lineshape::{
    electronic_green, kramers_kronig, load_tabulated_lineshape, vibronic_green, Broadening,
    EnergyGrid, LineshapeModel, MonomerGreen,
};
pub use spectra::{
    ces_spectrum, electronic_spectral_function, monomer_spectrum, monomer_spectrum_exciton,
    stick_spectrum, CesOptions, Polarization, SpectrumResult,
};
