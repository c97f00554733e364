"""Constrained low-rank adapters: delta_w = s * U M V^T with frozen bases.

The core variant trains only the r x r matrix M between frozen tail bases,
which keeps every update inside the identified null space.  The ablation
variants unfreeze one or both bases; plain_lowrank is the standard
two-factor baseline expressed in the same container (M fixed to identity,
both factors trainable, the V-side factor zero-initialized so the update
starts at zero for every variant).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ProvenanceError, ShapeError
from .linalg import check_matrix, frobenius_inner, load_matrix, save_matrix
from .nullspace import NullSpacePlan

VARIANTS = ("core_only", "core_and_v", "core_u_v", "plain_lowrank")

_TRAINABLE = {
    "core_only": frozenset({"m_core"}),
    "core_and_v": frozenset({"m_core", "v_basis"}),
    "core_u_v": frozenset({"m_core", "u_basis", "v_basis"}),
    "plain_lowrank": frozenset({"u_basis", "v_basis"}),
}


def matrix_digest(a: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass
class Adapter:
    u_basis: np.ndarray  # m x r
    v_basis: np.ndarray  # n x r
    m_core: np.ndarray  # r x r
    alpha: float
    variant: str
    sigma_null: np.ndarray | None = None  # tail singular values, descending
    sigma_null_max: float | None = None
    base_digest: str | None = None  # digest of the W the plan came from
    rho: float | None = None
    seed: int | None = None
    trainable: frozenset = field(init=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        m, r = self.u_basis.shape
        n, r2 = self.v_basis.shape
        if r != r2 or self.m_core.shape != (r, r):
            raise ShapeError(
                f"inconsistent adapter shapes: U {self.u_basis.shape}, "
                f"V {self.v_basis.shape}, M {self.m_core.shape}"
            )
        self.trainable = _TRAINABLE[self.variant]

    @property
    def r(self) -> int:
        return self.m_core.shape[0]

    @property
    def scale(self) -> float:
        return self.alpha / math.sqrt(self.r)

    def params(self) -> dict[str, np.ndarray]:
        return {"m_core": self.m_core, "u_basis": self.u_basis, "v_basis": self.v_basis}


def from_plan(
    plan: NullSpacePlan, w_base: np.ndarray, alpha: float, variant: str = "core_only"
) -> Adapter:
    """Build an adapter on a plan's frozen tail bases, M zero-initialized."""
    if variant == "plain_lowrank":
        raise ValueError("plain_lowrank does not use a null-space plan")
    if plan.is_inert():
        raise ValueError("inert plan (r = 0); skip adaptation for this layer")
    return Adapter(
        u_basis=plan.u_null.copy(),
        v_basis=plan.v_null.copy(),
        m_core=np.zeros((plan.r, plan.r)),
        alpha=float(alpha),
        variant=variant,
        sigma_null=plan.sigma_null.copy(),
        sigma_null_max=plan.sigma_null_max,
        base_digest=matrix_digest(w_base),
        rho=plan.rho,
    )


def from_subspace(
    u_basis: np.ndarray, v_basis: np.ndarray, alpha: float, variant: str = "core_only"
) -> Adapter:
    """Build an adapter on externally chosen bases (top/random ablations)."""
    if variant == "plain_lowrank":
        raise ValueError("plain_lowrank does not take subspace bases")
    r = u_basis.shape[1]
    return Adapter(
        u_basis=u_basis.copy(),
        v_basis=v_basis.copy(),
        m_core=np.zeros((r, r)),
        alpha=float(alpha),
        variant=variant,
    )


def plain_lowrank(m: int, n: int, r: int, alpha: float, seed: int = 0) -> Adapter:
    """Standard two-factor baseline: B Gaussian/sqrt(m), A zero."""
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((m, r)) / math.sqrt(m)
    return Adapter(
        u_basis=b,
        v_basis=np.zeros((n, r)),
        m_core=np.eye(r),
        alpha=float(alpha),
        variant="plain_lowrank",
        seed=int(seed),
    )


def delta_w(adapter: Adapter) -> np.ndarray:
    """Effective update s * U M V^T (exactly zero for a fresh adapter)."""
    return adapter.scale * (adapter.u_basis @ adapter.m_core @ adapter.v_basis.T)


def apply(adapter: Adapter, w_base: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Forward with an unmerged adapter: (W + delta_w) x, column batches."""
    check_matrix(w_base, "w_base")
    check_matrix(x, "x")
    if x.shape[0] != w_base.shape[1]:
        raise ShapeError(f"batch rows {x.shape[0]} != W cols {w_base.shape[1]}")
    if (w_base.shape[0], w_base.shape[1]) != (
        adapter.u_basis.shape[0],
        adapter.v_basis.shape[0],
    ):
        raise ShapeError("adapter shape does not match the base matrix")
    s = adapter.scale
    return w_base @ x + s * (
        adapter.u_basis @ (adapter.m_core @ (adapter.v_basis.T @ x))
    )


def grad_core(adapter: Adapter, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Chain rule through delta_w; upstream is dL/d(delta_w_eff), m x n.

    Returns gradients only for the variant's trainable parameters:
    dL/dM = s U^T G V, dL/dU = s G V M^T, dL/dV = s G^T U M.
    """
    check_matrix(upstream, "upstream")
    if upstream.shape != (adapter.u_basis.shape[0], adapter.v_basis.shape[0]):
        raise ShapeError(
            f"upstream shape {upstream.shape} does not match adapter "
            f"({adapter.u_basis.shape[0]}, {adapter.v_basis.shape[0]})"
        )
    s = adapter.scale
    grads = {}
    gv = upstream @ adapter.v_basis  # m x r, shared subexpression
    if "m_core" in adapter.trainable:
        grads["m_core"] = s * (adapter.u_basis.T @ gv)
    if "u_basis" in adapter.trainable:
        grads["u_basis"] = s * (gv @ adapter.m_core.T)
    if "v_basis" in adapter.trainable:
        grads["v_basis"] = s * (upstream.T @ adapter.u_basis @ adapter.m_core)
    return grads


def merge(adapter: Adapter, w_base: np.ndarray) -> np.ndarray:
    """W_t = W_{t-1} + delta_w_eff; the adapter is discarded afterward."""
    check_matrix(w_base, "w_base")
    dw = delta_w(adapter)
    if dw.shape != w_base.shape:
        raise ShapeError(f"update shape {dw.shape} != base shape {w_base.shape}")
    return w_base + dw


def interference(adapter: Adapter, w_base: np.ndarray) -> tuple[float, float]:
    """Frobenius interference <W, delta_w> and its bound s*sigma_null_max*||M||_F.

    Only defined for adapters whose frozen bases come from the null-space
    plan of this exact W; anything else raises ProvenanceError.
    """
    check_matrix(w_base, "w_base")
    if adapter.base_digest is None or adapter.sigma_null is None:
        raise ProvenanceError("adapter was not built from a null-space plan")
    if adapter.variant != "core_only":
        raise ProvenanceError(
            "interference bound requires frozen bases (core_only variant)"
        )
    if matrix_digest(w_base) != adapter.base_digest:
        raise ProvenanceError("adapter bases do not come from this base matrix")
    inner = frobenius_inner(w_base, delta_w(adapter))
    bound = adapter.scale * adapter.sigma_null_max * float(
        np.linalg.norm(adapter.m_core)
    )
    return inner, bound


def interference_trace(adapter: Adapter) -> float:
    """The proof-side identity: <W, delta_w> = s * Tr(Sigma_n M)."""
    if adapter.sigma_null is None:
        raise ProvenanceError("adapter carries no tail singular values")
    return adapter.scale * float(np.sum(adapter.sigma_null * np.diag(adapter.m_core)))


# --- checkpointing --------------------------------------------------------

def save_adapter(directory, name: str, adapter: Adapter) -> None:
    os.makedirs(directory, exist_ok=True)
    for key, value in adapter.params().items():
        save_matrix(os.path.join(directory, f"{name}.{key}.nusa"), value)
    sidecar = {
        "variant": adapter.variant,
        "alpha": adapter.alpha,
        "r": adapter.r,
        "rho": adapter.rho,
        "seed": adapter.seed,
        "sigma_null": None
        if adapter.sigma_null is None
        else [float(x) for x in adapter.sigma_null],
        "sigma_null_max": adapter.sigma_null_max,
        "base_digest": adapter.base_digest,
    }
    with open(os.path.join(directory, f"{name}.json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_adapter(directory, name: str) -> Adapter:
    with open(os.path.join(directory, f"{name}.json")) as fh:
        sidecar = json.load(fh)
    mats = {
        key: load_matrix(os.path.join(directory, f"{name}.{key}.nusa"))
        for key in ("u_basis", "v_basis", "m_core")
    }
    sigma_null = sidecar["sigma_null"]
    return Adapter(
        u_basis=mats["u_basis"],
        v_basis=mats["v_basis"],
        m_core=mats["m_core"],
        alpha=sidecar["alpha"],
        variant=sidecar["variant"],
        sigma_null=None if sigma_null is None else np.asarray(sigma_null),
        sigma_null_max=sidecar["sigma_null_max"],
        base_digest=sidecar["base_digest"],
        rho=sidecar["rho"],
        seed=sidecar["seed"],
    )
