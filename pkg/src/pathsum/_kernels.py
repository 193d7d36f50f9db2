"""Hot scalar kernels, compiled with numba when available.

Set ``PATHSUM_NO_NUMBA=1`` to run the same code as plain Python/numpy.
The flag is read once at import time.

The path-sum kernels work on a scalar graph given as CSR arrays
``(indptr, indices, data)``, per-vertex neighbor masks ``nbr`` and the dense
weight matrix, with vertex sets as ``int64`` bit masks. The memo maps
``component_mask * 64 + vertex`` to the diagonal resolvent of that vertex on
that component, which bounds graphs to ``MAX_KERNEL_VERTICES`` vertices.

``stats`` is an ``int64`` array with the slots named by the ``STAT_*``
constants below.
"""
import os

import numpy as np

_DISABLED = os.environ.get("PATHSUM_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit, types
    from numba.typed import Dict

    USE_NUMBA = True
    jit = njit(cache=True)
except ImportError:
    USE_NUMBA = False

    def jit(f):
        return f


MAX_KERNEL_VERTICES = 57
SINGULAR_RTOL = 1e-14

STAT_LEAVES = 0
STAT_DEPTH = 1
STAT_CYCLES = 2
STAT_SINGULAR = 3
STAT_SINGULAR_ALIVE = 4
STAT_PATHS = 5
STAT_SUBPROBLEMS = 6
N_STATS = 7


def new_memo():
    if USE_NUMBA:
        return Dict.empty(types.int64, types.float64)
    return {}


def new_stats():
    return np.zeros(N_STATS, dtype=np.int64)


@jit
def component_mask(nbr, alive, seed):
    """Mask of the component of ``seed`` inside ``alive``; ``nbr[v]`` is a neighbor mask."""
    comp = 1 << seed
    frontier = comp
    while frontier != 0:
        grow = 0
        v = 0
        f = frontier
        while f != 0:
            if f & 1:
                grow |= nbr[v]
            f >>= 1
            v += 1
        frontier = grow & alive & ~comp
        comp |= frontier
    return comp


@jit
def resolvent(nbr, indptr, indices, data, dense, alive, alpha, memo, stats, depth0):
    """Diagonal entry ``alpha`` of the inverse of ``J`` restricted to ``alive``.

    Each pending subproblem is a frame running a depth-first search over
    the simple cycles rooted at its vertex. The running product ``q`` for
    the prefix ``(a, m2, ..., mk)`` carries the sign ``(-1)**(k-1)``, so a
    closing edge contributes ``J[a, mk] * q``. When a prefix needs a
    resolvent missing from ``memo`` a child frame is pushed and the parent
    resumes at the same neighbor once the child has been stored.
    """
    comp0 = component_mask(nbr, alive, alpha)
    key0 = comp0 * 64 + alpha
    if key0 in memo:
        return memo[key0]
    n = dense.shape[0]
    f_alpha = np.empty(n + 1, np.int64)
    f_comp = np.empty(n + 1, np.int64)
    f_top = np.empty(n + 1, np.int64)
    f_visited = np.empty(n + 1, np.int64)
    f_total = np.empty(n + 1, np.float64)
    f_carry = np.empty(n + 1, np.float64)
    f_scale = np.empty(n + 1, np.float64)
    sv = np.empty((n + 1, n), np.int64)
    sp = np.empty((n + 1, n), np.int64)
    sq = np.empty((n + 1, n), np.float64)

    d = 0
    a = alpha
    comp = comp0
    while True:
        # open frame d for (a, comp)
        stats[STAT_SUBPROBLEMS] += 1
        if depth0 + d > stats[STAT_DEPTH]:
            stats[STAT_DEPTH] = depth0 + d
        f_alpha[d] = a
        f_comp[d] = comp
        f_total[d] = dense[a, a]
        f_carry[d] = 0.0
        f_scale[d] = abs(dense[a, a])
        f_visited[d] = 1 << a
        if comp == (1 << a):
            stats[STAT_LEAVES] += 1
            f_top[d] = -1
        else:
            f_top[d] = 0
            sv[d, 0] = a
            sp[d, 0] = indptr[a]
            sq[d, 0] = 1.0
        pushed = False
        while not pushed:
            top = f_top[d]
            if top < 0:
                a = f_alpha[d]
                total = f_total[d] + f_carry[d]
                if not np.isfinite(total) or abs(total) <= SINGULAR_RTOL * f_scale[d]:
                    if stats[STAT_SINGULAR] == 0:
                        stats[STAT_SINGULAR] = 1
                        stats[STAT_SINGULAR_ALIVE] = f_comp[d]
                    value = np.nan
                else:
                    value = 1.0 / total
                memo[f_comp[d] * 64 + a] = value
                if d == 0:
                    return value
                d -= 1
                continue
            v = sv[d, top]
            p = sp[d, top]
            if p == indptr[v + 1]:
                f_visited[d] &= ~(1 << v)
                f_top[d] = top - 1
                continue
            u = indices[p]
            bit = 1 << u
            visited = f_visited[d]
            if (f_comp[d] & bit) == 0 or (visited & bit) != 0:
                sp[d, top] = p + 1
                continue
            child = component_mask(nbr, f_comp[d] & ~visited, u)
            ckey = child * 64 + u
            if ckey not in memo:
                d += 1
                a = u
                comp = child
                pushed = True
                continue
            sp[d, top] = p + 1
            q = -(memo[ckey] * data[p] * sq[d, top])
            w = dense[f_alpha[d], u]
            if w != 0.0:
                term = w * q
                stats[STAT_CYCLES] += 1
                if abs(term) > f_scale[d]:
                    f_scale[d] = abs(term)
                # Neumaier compensated sum
                total = f_total[d]
                t = total + term
                if abs(total) >= abs(term):
                    f_carry[d] += (total - t) + term
                else:
                    f_carry[d] += (term - t) + total
                f_total[d] = t
            top += 1
            f_top[d] = top
            sv[d, top] = u
            sp[d, top] = indptr[u]
            sq[d, top] = q
            f_visited[d] = visited | bit


@jit
def column(nbr, indptr, indices, data, dense, alive, alpha, target, memo, stats, out, carry):
    """Accumulate covariances ``Sigma[v, alpha]`` into ``out`` over simple paths.

    With ``target < 0`` every vertex reachable from ``alpha`` receives its
    path sum; otherwise only ``target`` does and branches that can no longer
    reach it are pruned. ``carry`` holds the Neumaier compensation terms and
    is folded into ``out`` before returning.
    """
    s_aa = resolvent(nbr, indptr, indices, data, dense, alive, alpha, memo, stats, 0)
    if target < 0 or target == alpha:
        out[alpha] += s_aa
        stats[STAT_PATHS] += 1
    if target == alpha:
        return
    n = dense.shape[0]
    stack_v = np.empty(n, np.int64)
    stack_p = np.empty(n, np.int64)
    stack_q = np.empty(n, np.float64)
    stack_v[0] = alpha
    stack_p[0] = indptr[alpha]
    stack_q[0] = s_aa
    visited = 1 << alpha
    top = 0
    while top >= 0:
        v = stack_v[top]
        p = stack_p[top]
        if p == indptr[v + 1]:
            visited &= ~(1 << v)
            top -= 1
            continue
        stack_p[top] = p + 1
        u = indices[p]
        bit = 1 << u
        if (alive & bit) == 0 or (visited & bit) != 0:
            continue
        rest = alive & ~visited
        if target >= 0 and u != target:
            if (component_mask(nbr, rest, u) >> target) & 1 == 0:
                continue
        r = resolvent(nbr, indptr, indices, data, dense, rest, u, memo, stats, 1)
        q = -(r * data[p] * stack_q[top])
        if target < 0 or u == target:
            stats[STAT_PATHS] += 1
            o = out[u]
            t = o + q
            if abs(o) >= abs(q):
                carry[u] += (o - t) + q
            else:
                carry[u] += (q - t) + o
            out[u] = t
        if u == target:
            continue
        top += 1
        stack_v[top] = u
        stack_p[top] = indptr[u]
        stack_q[top] = q
        visited |= bit
    for v in range(n):
        out[v] += carry[v]
        carry[v] = 0.0


@jit
def perron_root(A, tol, max_iter):
    """Spectral radius of a symmetric nonnegative matrix by power iteration.

    Iterates on ``A + I`` from the all-ones vector: the shift keeps the
    Perron root strictly dominant in modulus even when ``A`` is periodic
    (bipartite patterns). Stops when the eigen-residual drops below
    ``tol`` relative to the estimate. Returns ``(rho, iterations, converged)``.
    """
    n = A.shape[0]
    x = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A @ x + x
        lam = np.sum(x * y)
        res = np.sqrt(np.sum((y - lam * x) ** 2))
        if res <= tol * lam:
            return lam - 1.0, it, True
        x = y / np.sqrt(np.sum(y * y))
    return lam - 1.0, max_iter, False


@jit
def dominant_eigenvalue(A, x0, tol, max_iter):
    """Largest-magnitude eigenvalue of a symmetric matrix (Rayleigh quotient).

    Returns ``(eigenvalue, iterations, converged)``.
    """
    x = x0 / np.sqrt(np.sum(x0 * x0))
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A @ x
        lam = np.sum(x * y)
        nrm = np.sqrt(np.sum(y * y))
        if nrm == 0.0:
            return 0.0, it, True
        res = np.sqrt(np.sum((y - lam * x) ** 2))
        if res <= tol * nrm:
            return lam, it, True
        x = y / nrm
    return lam, max_iter, False
