"""Spectral-energy thresholding, principal/null partition, and diagnostics.

The principal dimension k is the smallest count of leading singular values
whose squared sum reaches a fraction rho of total spectral energy.  The
remaining tail directions span the intrinsic null space; the update rank is
capped at r_max and the cap keeps the lowest-energy directions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, ShapeError
from .linalg import SvdFactorization, check_matrix, svd_thin

R95_RHO = 0.95


def principal_dim(sigma: np.ndarray, rho: float) -> int:
    """Smallest k with sum_{i<=k} sigma_i^2 >= rho * sum sigma_i^2."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1 or sigma.size == 0:
        raise ShapeError("sigma must be a non-empty 1-D vector")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    energy = sigma * sigma
    total = float(energy.sum())
    if total == 0.0:
        raise DegenerateSpectrumError("all-zero spectrum has no energy fractions")
    cumulative = np.cumsum(energy)
    k = int(np.searchsorted(cumulative, rho * total, side="left")) + 1
    return min(k, sigma.size)


@dataclass(frozen=True)
class NullSpacePlan:
    """Frozen tail bases and bookkeeping for one weight matrix.

    k: principal dimension; r: effective update rank min(d - k, r_max);
    u_null/v_null: the LAST r singular-vector columns; sigma_null: their
    singular values (descending); sigma_null_max: sigma_{k+1}, or 0 when
    k = d.
    """

    k: int
    r: int
    d: int
    u_null: np.ndarray
    v_null: np.ndarray
    sigma_null: np.ndarray
    sigma_null_max: float
    rho: float
    r_max: int

    def is_inert(self) -> bool:
        return self.r == 0


def plan_nullspace(svd: SvdFactorization, rho: float, r_max: int) -> NullSpacePlan:
    """Partition a factorization into principal and capped-tail blocks.

    When d - k = 0 the plan is inert (r = 0, empty bases) and the caller
    skips adaptation for that layer.
    """
    if r_max < 1:
        raise ValueError(f"r_max must be >= 1, got {r_max}")
    d = svd.d
    k = principal_dim(svd.sigma, rho)
    r = min(d - k, r_max)
    sigma_null_max = float(svd.sigma[k]) if k < d else 0.0
    u_null = svd.u[:, d - r:].copy()
    v_null = svd.v[:, d - r:].copy()
    sigma_null = svd.sigma[d - r:].copy()
    return NullSpacePlan(
        k=k,
        r=r,
        d=d,
        u_null=u_null,
        v_null=v_null,
        sigma_null=sigma_null,
        sigma_null_max=sigma_null_max,
        rho=float(rho),
        r_max=int(r_max),
    )


@dataclass(frozen=True)
class SpectralSnapshot:
    """Effective rank r95 and remaining null directions of one layer."""

    layer_id: str
    task_index: int
    r95: int
    null_at_95: int
    energy_total: float


def spectral_snapshot(w: np.ndarray, layer_id: str, task_index: int) -> SpectralSnapshot:
    w = check_matrix(w, "w")
    svd = svd_thin(w)
    r95 = principal_dim(svd.sigma, R95_RHO)
    d = svd.d
    return SpectralSnapshot(
        layer_id=str(layer_id),
        task_index=int(task_index),
        r95=r95,
        null_at_95=d - r95,
        energy_total=float(np.sum(svd.sigma**2)),
    )


def select_subspace(
    svd: SvdFactorization, mode: str, r: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Pick r orthonormal direction pairs for an update subspace.

    tail: the last r singular-vector columns (null-like); top: the first r;
    random: r columns of a seeded orthonormal basis via QR of a Gaussian
    draw (sign-fixed for determinism).
    """
    d = svd.d
    if r > d:
        raise ShapeError(f"requested r={r} exceeds d={d}")
    if mode == "tail":
        return svd.u[:, d - r:].copy(), svd.v[:, d - r:].copy()
    if mode == "top":
        return svd.u[:, :r].copy(), svd.v[:, :r].copy()
    if mode == "random":
        rng = np.random.default_rng(seed)
        bases = []
        for dim in (svd.u.shape[0], svd.v.shape[0]):
            g = rng.standard_normal((dim, r))
            q, rr = np.linalg.qr(g)
            q = q * np.sign(np.diag(rr))  # fix QR sign ambiguity
            bases.append(q[:, :r])
        return bases[0], bases[1]
    raise ValueError(f"unknown subspace mode {mode!r}")


def write_snapshots_csv(path, snapshots) -> None:
    """One CSV row per (layer, task): layer_id, task_index, r95, null_at_95."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer_id", "task_index", "r95", "null_at_95"])
        for s in snapshots:
            writer.writerow([s.layer_id, s.task_index, s.r95, s.null_at_95])
