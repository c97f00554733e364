"""Energy thresholding, null-space plans, and spectral diagnostics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nusacl.errors import DegenerateSpectrumError, ShapeError
from nusacl.linalg import svd_thin
from nusacl.nullspace import (
    plan_nullspace,
    principal_dim,
    select_subspace,
    spectral_snapshot,
)


def _principal_dim_linear_scan(sigma, rho):
    energy = [s * s for s in sigma]
    total = sum(energy)
    running = 0.0
    for k, e in enumerate(energy, start=1):
        running += e
        if running >= rho * total:
            return k
    return len(sigma)


def test_principal_dim_simple_cases():
    assert principal_dim(np.array([1.0]), 0.5) == 1
    assert principal_dim(np.ones(100), 0.95) == 95
    assert principal_dim(np.array([10.0, 1e-6]), 0.95) == 1


def test_principal_dim_matches_linear_scan():
    rng = np.random.default_rng(21)
    for _ in range(200):
        sigma = np.sort(rng.uniform(0.0, 5.0, size=rng.integers(1, 40)))[::-1]
        if sigma.sum() == 0.0:
            continue
        rho = float(rng.uniform(0.05, 0.999))
        assert principal_dim(sigma, rho) == _principal_dim_linear_scan(sigma, rho)


def test_principal_dim_monotone_in_rho():
    # higher energy cutoff keeps at least as many directions (Table-style
    # rho sweep sanity)
    sigma = np.geomspace(1.0, 1e-3, num=64)
    ks = [principal_dim(sigma, rho) for rho in (0.80, 0.90, 0.95, 0.99, 0.999)]
    assert ks == sorted(ks)


def test_principal_dim_rejects_bad_input():
    with pytest.raises(ShapeError):
        principal_dim(np.zeros((2, 2)), 0.9)
    with pytest.raises(ValueError):
        principal_dim(np.ones(3), 1.0)
    with pytest.raises(DegenerateSpectrumError):
        principal_dim(np.zeros(4), 0.9)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31),
    rho=st.floats(min_value=0.05, max_value=0.995),
)
def test_principal_dim_property(seed, rho):
    rng = np.random.default_rng(seed)
    sigma = np.sort(rng.uniform(1e-6, 3.0, size=int(rng.integers(1, 32))))[::-1]
    k = principal_dim(sigma, rho)
    energy = np.cumsum(sigma * sigma)
    assert energy[k - 1] >= rho * energy[-1] - 1e-12
    if k > 1:
        assert energy[k - 2] < rho * energy[-1]


def test_plan_identity_matrix():
    # flat spectrum: 95% of the energy needs 95 of 100 directions
    plan = plan_nullspace(svd_thin(np.eye(100)), rho=0.95, r_max=8)
    assert plan.k == 95
    assert plan.r == 5
    assert plan.u_null.shape == (100, 5)


def test_plan_rank_one_tail_is_full_cap():
    rng = np.random.default_rng(22)
    w = np.outer(rng.standard_normal(16), rng.standard_normal(16))
    plan = plan_nullspace(svd_thin(w), rho=0.95, r_max=8)
    assert plan.k == 1
    assert plan.r == 8
    assert np.allclose(plan.sigma_null, 0.0)


def test_plan_inert_when_no_tail():
    plan = plan_nullspace(svd_thin(np.eye(2)), rho=0.9, r_max=8)
    assert plan.k == 2
    assert plan.is_inert()
    assert plan.sigma_null_max == 0.0


def test_plan_bases_are_complementary_to_principal():
    rng = np.random.default_rng(23)
    w = rng.standard_normal((40, 40))
    svd = svd_thin(w)
    plan = plan_nullspace(svd, rho=0.95, r_max=8)
    u_principal = svd.u[:, : plan.k]
    # frozen tail bases are orthogonal to every principal direction
    assert np.abs(u_principal.T @ plan.u_null).max() < 1e-10
    assert plan.sigma_null_max == pytest.approx(svd.sigma[plan.k])
    assert np.all(plan.sigma_null <= plan.sigma_null_max + 1e-12)


def test_plan_takes_last_columns():
    sigma = np.diag(np.geomspace(10.0, 0.01, num=12))
    svd = svd_thin(sigma)
    plan = plan_nullspace(svd, rho=0.95, r_max=4)
    assert np.allclose(plan.sigma_null, svd.sigma[-4:])


def test_select_subspace_modes():
    rng = np.random.default_rng(24)
    svd = svd_thin(rng.standard_normal((20, 20)))
    for mode in ("tail", "top", "random"):
        u, v = select_subspace(svd, mode, r=6, seed=3)
        assert u.shape == (20, 6)
        assert np.abs(u.T @ u - np.eye(6)).max() < 1e-9
        assert np.abs(v.T @ v - np.eye(6)).max() < 1e-9
    assert np.array_equal(select_subspace(svd, "tail", 6)[0], svd.u[:, -6:])
    assert np.array_equal(select_subspace(svd, "top", 6)[0], svd.u[:, :6])


def test_select_subspace_random_is_seed_deterministic():
    rng = np.random.default_rng(25)
    svd = svd_thin(rng.standard_normal((15, 15)))
    a = select_subspace(svd, "random", 4, seed=9)
    b = select_subspace(svd, "random", 4, seed=9)
    c = select_subspace(svd, "random", 4, seed=10)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


def test_select_subspace_rejects_oversized_r():
    svd = svd_thin(np.eye(5))
    with pytest.raises(ShapeError):
        select_subspace(svd, "tail", 6)
    with pytest.raises(ValueError):
        select_subspace(svd, "middle", 2)


def test_spectral_snapshot_counts():
    w = np.diag(np.concatenate([np.full(3, 10.0), np.full(61, 0.1)]))
    snap = spectral_snapshot(w, "layer0", 0)
    # 3 strong directions hold ~99.8% of the energy
    assert snap.r95 == 3
    assert snap.null_at_95 == 61
    assert snap.energy_total == pytest.approx(3 * 100.0 + 61 * 0.01)
