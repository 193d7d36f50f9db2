"""Dense LU helpers with a reciprocal condition estimate."""
import numpy as np
from scipy.linalg import lapack, lu_solve

RCOND_MIN = 1e-14


def lu_with_rcond(A):
    """LU-factor ``A`` and estimate its 1-norm reciprocal condition number.

    Returns ``(lu_piv, rcond)``; ``rcond`` is 0 for exactly singular or
    non-finite input, in which case ``lu_piv`` is ``None``.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        return None, 0.0
    lu, piv, info = lapack.dgetrf(A)
    if info > 0:
        return None, 0.0
    anorm = np.linalg.norm(A, 1)
    if anorm == 0.0:
        return None, 0.0
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    return (lu, piv), float(rcond)


def inverse_or_none(A, rcond_min=RCOND_MIN):
    """Inverse of ``A`` by pivoted LU, or ``None`` when ``A`` is numerically singular."""
    lu_piv, rcond = lu_with_rcond(A)
    if lu_piv is None or rcond < rcond_min:
        return None
    return lu_solve(lu_piv, np.eye(A.shape[0]))


def solve_or_none(A, b, rcond_min=RCOND_MIN):
    lu_piv, rcond = lu_with_rcond(A)
    if lu_piv is None or rcond < rcond_min:
        return None
    return lu_solve(lu_piv, b)


__all__ = ["RCOND_MIN", "lu_with_rcond", "inverse_or_none", "solve_or_none"]
