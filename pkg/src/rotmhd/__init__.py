"""rotmhd: pseudo-spectral toolkit for fast-rotating anisotropic MHD."""

from .spectral import (Grid, SpectralField, StateVector, NormReport,
                       ConfigurationError, InvariantViolation, DiagnosticWarning,
                       forward_transform, inverse_transform, to_physical,
                       scalar_field, project_leray, max_divergence,
                       is_divergence_free, pressure_from_state, advect, dealias,
                       l2_norm, l2_inner, aniso_sobolev_norm, iso_sobolev_norm,
                       aniso_lebesgue_norm, y_norm, norm_report,
                       state_h0s_norm, state_l2_sq)
from .linear import (ModelParams, ModeEigenSystem, DegenerateModeError,
                     assemble_symbol, dispersion_factors, eigenvalues,
                     eigenvectors, cramer_coefficients, cramer_matrix,
                     det_d_modulus, mode_eigensystem, expm_oracle,
                     LinearPropagator, get_propagator, propagate_exact)
from .cutoff import (CutoffParams, SplitReport, psi, psi_field_mask, alpha_max,
                     schedule_parameters, split_initial_data, validate_resolution)
from .solver import (SolverConfig, DiagnosticsRecord, RunResult, BlowupError,
                     advection_tendency, nonlinear_rhs, step, run,
                     twin_run_divergence)

__version__ = "0.1.0"
