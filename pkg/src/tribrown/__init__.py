"""Brown measures of x0 + g (triangular elliptic): subordination solvers,
density/determinant grids, push-forward transport, and random-matrix checks."""

from .backend import active_backend, set_threads
from .models import (
    ATOM_TOL,
    DenseMatrixModel,
    MeasureModel,
    ModelError,
    NumericalFailure,
    TraceBundle,
    h_inv_at_zero,
    load_model,
    parse_model,
    resolve_model,
    trace_bundle,
    trace_bundle_grid,
    zero_model,
)
from .subordination import (
    EllipticParams,
    SubordinationState,
    epsilon_profiles,
    eps0_from_sigma,
    in_xi,
    q_eps,
    solve_s,
    solve_sigma_system,
    solve_state,
    solve_w0,
    solve_w0_grid,
    solve_w_reg,
    solve_w_reg_grid,
)
from .density import (
    DensityGrid,
    density_circ,
    density_circ_reg,
    density_flat,
    density_tri,
    domain_grid,
    fill_grid,
    fk_determinant,
    fkdet_density_grid,
)
from .pushforward import (
    LostMassError,
    PushforwardMap,
    TransportedGrid,
    rebin_grid,
    transport,
)
from .randmat import (
    EnsembleSample,
    SpectrumScore,
    compare_spectrum,
    covariance_matrices,
    eigenvalues,
    sample_ensemble,
    score_report,
    write_eigenvalues_csv,
    x0_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "ATOM_TOL",
    "DenseMatrixModel",
    "DensityGrid",
    "EllipticParams",
    "EnsembleSample",
    "LostMassError",
    "MeasureModel",
    "ModelError",
    "NumericalFailure",
    "PushforwardMap",
    "SpectrumScore",
    "SubordinationState",
    "TraceBundle",
    "TransportedGrid",
    "active_backend",
    "compare_spectrum",
    "covariance_matrices",
    "density_circ",
    "density_circ_reg",
    "density_flat",
    "density_tri",
    "domain_grid",
    "eigenvalues",
    "epsilon_profiles",
    "eps0_from_sigma",
    "fill_grid",
    "fk_determinant",
    "fkdet_density_grid",
    "h_inv_at_zero",
    "in_xi",
    "load_model",
    "parse_model",
    "q_eps",
    "rebin_grid",
    "resolve_model",
    "sample_ensemble",
    "score_report",
    "set_threads",
    "solve_s",
    "solve_sigma_system",
    "solve_state",
    "solve_w0",
    "solve_w0_grid",
    "solve_w_reg",
    "solve_w_reg_grid",
    "trace_bundle",
    "trace_bundle_grid",
    "transport",
    "write_eigenvalues_csv",
    "x0_matrix",
    "zero_model",
]
