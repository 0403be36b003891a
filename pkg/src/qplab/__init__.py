"""Numerical laboratory for a one-frequency quasi-periodic operator family.

The operator acts on two-sided sequences as

    (H u)_n = -u_{n+1} - u_{n-1} + V(theta + n w) u_n,
    V(theta) = exp(K f(theta + w)) + exp(-K f(theta)),

with an analytic zero-mean sampling profile f, coupling K >= 0 and
irrational frequency w.  Sub-packages cover the Fourier-side model
(`fourier`), continued-fraction arithmetic (`frequencies`), transfer-matrix
products and Lyapunov exponents (`cocycle`), finite-volume spectra
(`spectrum`), the explicit energy-zero conjugation (`reducibility`), and
rational-approximant probes (`gordon`).  `cli` wires these into scan
commands; `svgplot` renders the plots.
"""

from .cocycle import (CocycleProduct, GrowthBoundReport, LyapunovEstimate,
                      SL2Matrix, finite_lyapunov, finite_lyapunov_general,
                      growth_bound_check, lyapunov_free, lyapunov_profile,
                      lyapunov_scan, phase_grid, product, rotation_free,
                      rotation_number, step_matrix)
from .errors import (ConvergenceError, DomainError, InsufficientDataError,
                     QplabError, ResolutionError, ResourceError,
                     SmallDivisorError)
from .fourier import (FourierSeries, ModelParams, cosine_profile,
                      decay_certificate_ok, default_model, empirical_width,
                      exp_of_series, normalize_c1, potential, strip_norm,
                      zero_series)
from .frequencies import (BetaEstimate, BetaStage, DiophantineCheck,
                          DiophantineParams, Frequency, Witness, beta,
                          check_dc, check_sdc, convergents,
                          log_approximation_error, make_liouville,
                          make_liouville_near)
from .gordon import (CayleyHamiltonProbe, CriterionResult, GapDetail,
                     GordonReport, approximant_gap, approximant_gap_detail,
                     cayley_hamilton_quantity, ch_residual, criterion,
                     gordon_report)
from .reducibility import (Conjugation, PerturbationReport, SubcriticalRow,
                           build_conjugation, perturbation_report,
                           perturbed_cocycle, solve_homological,
                           subcritical_probe)
from .spectrum import (DecayFit, EigenvectorResult, FiniteOperator,
                       SpectrumResult, analyze_window, build_finite,
                       decay_rate, edge_slack, eigenvalue_count_below,
                       eigenvalues_in, eigenvector, gap_profile,
                       kth_eigenvalue, spectral_edges, thouless_estimate)

__version__ = "0.1.0"

__all__ = [
    "BetaEstimate", "BetaStage", "CayleyHamiltonProbe", "CocycleProduct",
    "Conjugation", "ConvergenceError", "CriterionResult", "DecayFit",
    "DiophantineCheck", "DiophantineParams", "DomainError",
    "EigenvectorResult", "FiniteOperator", "FourierSeries", "Frequency",
    "GapDetail", "GordonReport", "GrowthBoundReport",
    "InsufficientDataError", "LyapunovEstimate", "ModelParams",
    "PerturbationReport", "QplabError", "ResolutionError", "ResourceError",
    "SL2Matrix", "SmallDivisorError", "SpectrumResult", "SubcriticalRow",
    "Witness", "analyze_window", "approximant_gap", "approximant_gap_detail",
    "beta", "build_conjugation", "build_finite", "cayley_hamilton_quantity",
    "ch_residual", "check_dc", "check_sdc", "convergents", "cosine_profile",
    "criterion", "decay_certificate_ok", "decay_rate", "default_model",
    "edge_slack", "eigenvalue_count_below", "eigenvalues_in", "eigenvector",
    "empirical_width", "exp_of_series", "finite_lyapunov",
    "finite_lyapunov_general", "gap_profile", "gordon_report",
    "growth_bound_check", "kth_eigenvalue", "log_approximation_error",
    "lyapunov_free", "lyapunov_profile", "lyapunov_scan", "make_liouville",
    "make_liouville_near", "normalize_c1", "perturbation_report",
    "perturbed_cocycle", "phase_grid", "potential", "product",
    "rotation_free", "rotation_number", "solve_homological",
    "spectral_edges", "step_matrix", "strip_norm", "subcritical_probe",
    "thouless_estimate", "zero_series",
]
