import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathsum import (
    BlockPartition,
    ConfigurationError,
    DomainError,
    InformationModel,
    PathSumEngine,
    ResolventMemo,
    SingularityError,
    absorb_observations,
    build_graph,
    diagonal_entry,
    full_covariance,
    mean_vector,
    off_diagonal_entry,
)

from conftest import (
    c5_matrix,
    membrane_blocks,
    membrane_matrix,
    membrane_sigma_aa,
    membrane_sigma_ba,
    random_spd,
    rel_err,
)

BACKENDS = ["kernel", "generic"]


def closed_forms(r):
    d = 1 - 5 * r**2 + 5 * r**4 + 2 * r**5
    return (1 - 3 * r**2 + r**4) / d, (r**4 + 2 * r**3 - r) / d, (r**2 - r**3 - r**4) / d


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("r, expected", [
    (0.3, (1.23975, -0.39959, 0.09221)),
    (0.6, (14.09091, -10.90909, 4.09091)),
])
def test_c5_printed_values(backend, r, expected):
    g = build_graph(InformationModel(c5_matrix(r)))
    eng = PathSumEngine(g, backend)
    got = [eng.entry(0, w).value[0, 0] for w in range(3)]
    np.testing.assert_allclose(got, expected, atol=5e-6)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("r", [-0.4, -0.2, 0.1, 0.45, 0.6])
def test_c5_closed_forms(backend, r):
    S = full_covariance(InformationModel(c5_matrix(r)), backend=backend)
    np.testing.assert_allclose(S[:3, 0], closed_forms(r), rtol=1e-12)


def test_leaf_resolvent_is_inverse_self_loop():
    J = membrane_matrix(1.0, 1.0)
    g = build_graph(InformationModel(J), BlockPartition.contiguous([3, 3, 3]))
    L, _ = membrane_blocks(1.0, 1.0)
    res = diagonal_entry(g, {0, 1}, 2)
    np.testing.assert_allclose(res.value, np.linalg.inv(L), rtol=1e-14)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.25)])
def test_membrane_blocks(a, b):
    J = membrane_matrix(a, b)
    g = build_graph(InformationModel(J), BlockPartition.contiguous([3, 3, 3]))
    eng = PathSumEngine(g)
    Saa = eng.entry(0, 0).value
    Sba = eng.entry(0, 1).value
    np.testing.assert_allclose(Saa, membrane_sigma_aa(a, b), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(Sba, membrane_sigma_ba(a, b), rtol=1e-10, atol=1e-12)
    inv = np.linalg.inv(J)
    np.testing.assert_allclose(Sba, inv[3:6, 0:3], rtol=1e-10, atol=1e-12)


def test_partition_invariance(rng):
    for _ in range(10):
        n = int(rng.integers(4, 9))
        J = random_spd(rng, n, rng.uniform(0.3, 1.0))
        perm = rng.permutation(n)
        cuts = np.sort(rng.choice(np.arange(1, n), size=int(rng.integers(1, min(3, n - 1) + 1)), replace=False))
        p = BlockPartition([np.sort(x).tolist() for x in np.split(perm, cuts)], n)
        m = InformationModel(J)
        assert rel_err(full_covariance(m, p), full_covariance(m)) < 1e-10


def test_non_contiguous_blocks_scatter_correctly():
    J = membrane_matrix(1.0, 1.0)
    p = BlockPartition.from_lists([[1, 5, 9], [2, 4, 6], [3, 7, 8]], 9)
    S = full_covariance(InformationModel(J), p)
    assert rel_err(S, np.linalg.inv(J)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.floats(0.2, 1.0), st.integers(0, 2**32 - 1))
def test_oracle_property(n, density, seed):
    J = random_spd(np.random.default_rng(seed), n, density)
    S = full_covariance(InformationModel(J))
    assert rel_err(S, np.linalg.inv(J)) < 1e-10
    np.testing.assert_allclose(S, S.T, rtol=1e-12, atol=1e-14)


def test_backends_agree(rng):
    for _ in range(10):
        J = random_spd(rng, int(rng.integers(2, 7)), 0.7)
        m = InformationModel(J)
        np.testing.assert_allclose(
            full_covariance(m, backend="kernel"), full_covariance(m, backend="generic"), rtol=1e-13, atol=1e-15
        )


def test_threads_and_shared_memo(rng):
    J = random_spd(rng, 9, 0.6)
    g = build_graph(InformationModel(J))
    memo = ResolventMemo()
    S1 = PathSumEngine(g, memo=memo).covariance(threads=4)
    size = len(memo)
    S2 = PathSumEngine(g, memo=memo).covariance(threads=1)
    assert len(memo) == size
    np.testing.assert_array_equal(S1, S2)
    with pytest.raises(ValueError):
        PathSumEngine(build_graph(InformationModel(np.eye(2))), memo=memo)


def test_disconnected_blocks_are_zero():
    J = np.diag([2.0, 3.0, 4.0])
    J[0, 1] = J[1, 0] = 0.5
    g = build_graph(InformationModel(J))
    r = off_diagonal_entry(g, 0, 2)
    assert r.value[0, 0] == 0.0 and r.path_count == 0
    np.testing.assert_allclose(full_covariance(InformationModel(J)), np.linalg.inv(J), rtol=1e-14)


def test_path_count_reported():
    J = np.eye(4) * 4 + np.ones((4, 4))
    r = off_diagonal_entry(build_graph(InformationModel(J)), 0, 1)
    assert r.path_count == 5
    assert r.max_depth >= 1 and r.leaf_count >= 1


@pytest.mark.parametrize("backend", BACKENDS)
def test_singular_subgraph_raises(backend):
    J = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularityError) as info:
        full_covariance(InformationModel(J), backend=backend)
    assert info.value.to_dict()["error"] == "singularity"


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_self_loop_subproblem_raises(backend):
    # J is invertible but J minus vertex 1 is the 1x1 zero matrix
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SingularityError) as info:
        full_covariance(InformationModel(J), backend=backend)
    assert list(info.value.deleted) == [0]


def test_indefinite_but_nonsingular_is_still_exact():
    J = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) - 1.5 * np.eye(3)
    S = full_covariance(InformationModel(J))
    np.testing.assert_allclose(S, np.linalg.inv(J), rtol=1e-12)


def test_domain_errors():
    g = build_graph(InformationModel(c5_matrix(0.3)))
    eng = PathSumEngine(g)
    with pytest.raises(DomainError):
        eng.resolvent({0}, 0)
    with pytest.raises(DomainError):
        eng.entry(0, 7)
    with pytest.raises(ConfigurationError):
        PathSumEngine(g, backend="gpu")
    bg = build_graph(InformationModel(membrane_matrix(1, 1)), BlockPartition.contiguous([3, 3, 3]))
    with pytest.raises(ConfigurationError):
        PathSumEngine(bg, backend="kernel")


def test_mean_vector():
    J = c5_matrix(0.3)
    h = np.arange(1.0, 6.0)
    mu = mean_vector(InformationModel(J, h))
    np.testing.assert_allclose(mu, np.linalg.solve(J, h), rtol=1e-12)
    with pytest.raises(ConfigurationError):
        mean_vector(InformationModel(J))


def test_absorb_observations(rng):
    J = random_spd(rng, 5, 0.6)
    C = rng.normal(size=(2, 5))
    M = np.diag([0.5, 2.0])
    y = rng.normal(size=2)
    post = absorb_observations(InformationModel(J, np.ones(5)), C, M, y)
    Jt = J + C.T @ np.linalg.inv(M) @ C
    assert rel_err(full_covariance(post), np.linalg.inv(Jt)) < 1e-10
    np.testing.assert_allclose(post.h, np.ones(5) + C.T @ np.linalg.solve(M, y), rtol=1e-12)
    with pytest.raises(SingularityError):
        absorb_observations(InformationModel(J), C, np.zeros((2, 2)), y)
    with pytest.raises(ConfigurationError):
        absorb_observations(InformationModel(J), C, np.eye(3), y)


def test_large_scalar_graph_uses_generic_route():
    n = 60
    J = np.eye(n) * 3.0
    for i in range(n - 1):
        J[i, i + 1] = J[i + 1, i] = -1.0
    g = build_graph(InformationModel(J))
    eng = PathSumEngine(g)
    assert not eng.kernel
    assert rel_err(eng.covariance(), np.linalg.inv(J)) < 1e-12


def test_pure_numpy_fallback():
    code = (
        "import numpy as np, pathsum._kernels as K\n"
        "assert not K.USE_NUMBA\n"
        "from pathsum import InformationModel, full_covariance\n"
        "J = np.eye(5)\n"
        "for i in range(5): J[i, (i + 1) % 5] = J[(i + 1) % 5, i] = 0.6\n"
        "S = full_covariance(InformationModel(J), backend='kernel')\n"
        "assert abs(S[0, 0] - 14.090909090909) < 1e-9, S[0, 0]\n"
        "print('ok')\n"
    )
    env = dict(os.environ, PATHSUM_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=120)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"
