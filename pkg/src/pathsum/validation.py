"""Reference oracles and model diagnostics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_solve

from . import _kernels as K
from ._linalg import RCOND_MIN, lu_with_rcond
from .errors import SingularityError, UnsupportedPartitionError
from .graph import build_graph, enumerate_simple_paths
from .model import BlockPartition, InformationModel

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
# rho is only known to about POWER_TOL, so values this close to 1 sit on the
# boundary and the strict inequality rho < 1 is not certified
BOUNDARY_MARGIN = 1e-9


@dataclass
class DiagnosticReport:
    spectral_radius_abs_r: float
    is_walk_summable: bool
    is_positive_definite: bool
    min_eigenvalue_estimate: float
    power_iteration_converged: bool = True

    def to_dict(self):
        return asdict(self)


def direct_inverse(model: InformationModel) -> np.ndarray:
    """Dense ``J^{-1}`` by LU with partial pivoting.

    Raises:
        SingularityError: reciprocal condition estimate below ``1e-14``.
    """
    lu_piv, rcond = lu_with_rcond(model.J)
    if lu_piv is None or rcond < RCOND_MIN:
        raise SingularityError(f"information matrix is singular (rcond={rcond:.3g})")
    return lu_solve(lu_piv, np.eye(model.n))


def _logdet(A):
    if A.shape[0] == 0:
        return 1.0, 0.0
    return np.linalg.slogdet(A)


def determinant_formula_entry(model: InformationModel, alpha: int, omega: int,
                              partition: Optional[BlockPartition] = None) -> float:
    """``Sigma[omega, alpha]`` as a sum over simple paths of determinant ratios.

    Each path ``p`` from ``alpha`` to ``omega`` contributes
    ``(-1)**len(p) * prod(J on p) * det(J without p) / det(J)``. Only
    defined for scalar entries: block weights do not commute.
    """
    if partition is not None and not partition.is_trivial:
        raise UnsupportedPartitionError(
            "the determinant formula needs commuting weights; use the singleton partition"
        )
    J = model.J
    sign_j, log_j = _logdet(J)
    if sign_j == 0 or not math.isfinite(log_j):
        raise SingularityError("information matrix is singular (zero determinant)")
    graph = build_graph(model)
    everything = np.arange(model.n)
    terms = []
    for path in enumerate_simple_paths(graph, 0, alpha, omega):
        weight = 1.0
        for a, b in zip(path[:-1], path[1:]):
            weight *= J[b, a]
        keep = np.setdiff1d(everything, path, assume_unique=True)
        sign_m, log_m = _logdet(J[np.ix_(keep, keep)])
        if sign_m == 0:
            continue
        ratio = sign_m * sign_j * math.exp(log_m - log_j)
        terms.append((-1) ** (len(path) - 1) * weight * ratio)
    return math.fsum(terms)


def spectral_radius_abs_r(model: InformationModel):
    """``rho(|I - J|)`` by power iteration; returns ``(rho, converged)``."""
    absR = np.abs(np.eye(model.n) - model.J)
    rho, _, converged = K.perron_root(absR, POWER_TOL, POWER_MAX_ITER)
    return float(rho), bool(converged)


def min_eigenvalue_estimate(J: np.ndarray) -> float:
    """Smallest eigenvalue of symmetric ``J`` by shifted power iteration."""
    x0 = np.random.default_rng(0).uniform(0.5, 1.5, J.shape[0])
    top, _, _ = K.dominant_eigenvalue(J, x0, POWER_TOL, POWER_MAX_ITER)
    # |top| bounds the spectrum, so |top| I - J is positive semidefinite with
    # its dominant eigenvalue at |top| - lambda_min.
    shift = abs(top)
    gap, _, _ = K.dominant_eigenvalue(shift * np.eye(J.shape[0]) - J, x0, POWER_TOL, POWER_MAX_ITER)
    return float(shift - gap)


def is_positive_definite(J: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(J)
    except np.linalg.LinAlgError:
        return False
    return True


def diagnose(model: InformationModel) -> DiagnosticReport:
    rho, converged = spectral_radius_abs_r(model)
    pd = is_positive_definite(model.J)
    return DiagnosticReport(
        spectral_radius_abs_r=rho,
        # rho < 1 forces J to be positive definite; never report one without the other
        is_walk_summable=bool(rho < 1.0 - BOUNDARY_MARGIN and pd),
        is_positive_definite=pd,
        min_eigenvalue_estimate=min_eigenvalue_estimate(model.J),
        power_iteration_converged=converged,
    )
