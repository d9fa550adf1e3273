//! Covariance-matrix algebra for multimode Gaussian states.

mod cm;
mod conditioning;
mod spectrum;
mod symplectic;
mod williamson;

pub use cm::{
    direct_sum, epr_cm, epr_cm_labeled, quadrature_columns, reduce, reduce_labels, reorder, CovarianceMatrix, Quadrature,
};
pub use conditioning::{
    condition_on_homodyne, condition_on_homodynes, heterodyne_recombine, heterodyne_split, PINV_TOL,
};
pub use spectrum::{
    clamp_eigenvalue, g_function, raw_symplectic_eigenvalues, symplectic_invariants, symplectic_spectrum_generic,
    symplectic_spectrum_quartic, von_neumann_entropy, SpectrumMethod, SymplecticSpectrum, PAIRING_TOL, PURITY_TOL,
};
pub use symplectic::{apply, beam_splitter, cnot_gate, omega, symplectic_defect, SymplecticTransform, SYMPLECTIC_TOL};
pub use williamson::{inflate_to_physical, project_physical, uncertainty_margin, williamson, Williamson};

pub(crate) use cm::{fmt_num, read_matrix_csv, write_matrix_csv};
