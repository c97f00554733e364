"""Sequential-task harness: synthetic streams, the per-task adaptation
cycle (SVD -> plan -> constrained training -> merge), and the summary
metrics Transfer / Avg. / Last / Forgetting plus the interference ledger
and spectral trajectory.
"""

from __future__ import annotations

import csv
import datetime
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import adapter as adapter_mod
from . import nn
from .errors import ConfigError, ProtocolError
from .linalg import svd_thin
from .nullspace import (
    NullSpacePlan,
    SpectralSnapshot,
    plan_nullspace,
    select_subspace,
    spectral_snapshot,
)

STREAM_KINDS = ("split_gaussians", "permuted_features", "rotated_moons")

GAUSSIAN_NOISE = 0.3
MEAN_RADIUS = 2.0


@dataclass(frozen=True)
class TaskStream:
    kind: str
    num_tasks: int
    classes_per_task: int
    samples_per_class_train: int
    samples_per_class_test: int
    seed: int
    input_dim: int = 32

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ConfigError(f"unknown stream kind {self.kind!r}")
        if self.num_tasks < 2:
            raise ConfigError("num_tasks must be >= 2")
        if min(self.samples_per_class_train, self.samples_per_class_test) < 1:
            raise ConfigError("per-class sample counts must be >= 1")
        if self.classes_per_task < 2:
            raise ConfigError("classes_per_task must be >= 2")
        if self.kind == "rotated_moons" and self.classes_per_task != 2:
            raise ConfigError("rotated_moons supports exactly 2 classes per task")

    @property
    def total_classes(self) -> int:
        if self.kind == "split_gaussians":
            return self.num_tasks * self.classes_per_task
        return self.classes_per_task


@dataclass
class Task:
    index: int
    train_x: np.ndarray  # input_dim x N, column batches
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    class_ids: np.ndarray  # global class indices this task uses


def _gaussian_blobs(means, labels_per_class, n_per_class, noise, rng):
    xs, ys = [], []
    for cls, mean in zip(labels_per_class, means):
        pts = mean[None, :] + noise * rng.standard_normal((n_per_class, mean.size))
        xs.append(pts)
        ys.append(np.full(n_per_class, cls, dtype=np.int64))
    x = np.concatenate(xs, axis=0).T
    y = np.concatenate(ys)
    return x, y


def _moons(n_per_class, noise, rng):
    t = rng.uniform(0.0, math.pi, size=n_per_class)
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    t = rng.uniform(0.0, math.pi, size=n_per_class)
    lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    pts = np.concatenate([upper, lower], axis=0)
    pts = pts + noise * rng.standard_normal(pts.shape)
    labels = np.concatenate(
        [np.zeros(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)]
    )
    return pts, labels


def _class_means(spec: TaskStream) -> np.ndarray:
    """Unit-sphere class means scaled to MEAN_RADIUS, fixed by the stream
    seed alone so every consumer sees the same geometry."""
    master = np.random.default_rng([spec.seed, 0xC0FFEE])
    means = master.standard_normal((spec.total_classes, spec.input_dim))
    return means * (MEAN_RADIUS / np.linalg.norm(means, axis=1, keepdims=True))


def _feature_permutation(spec: TaskStream, task_index: int) -> np.ndarray:
    if task_index == 0:
        return np.arange(spec.input_dim)
    return np.random.default_rng([spec.seed, 2, task_index]).permutation(
        spec.input_dim
    )


def generate_stream(spec: TaskStream) -> list[Task]:
    """Materialize the task list; identical for identical seeds."""
    dim = spec.input_dim
    tasks = []
    if spec.kind == "split_gaussians":
        means = _class_means(spec)
        for t in range(spec.num_tasks):
            cls = np.arange(
                t * spec.classes_per_task, (t + 1) * spec.classes_per_task
            )
            rng = np.random.default_rng([spec.seed, 1, t])
            train_x, train_y = _gaussian_blobs(
                means[cls], cls, spec.samples_per_class_train, GAUSSIAN_NOISE, rng
            )
            test_x, test_y = _gaussian_blobs(
                means[cls], cls, spec.samples_per_class_test, GAUSSIAN_NOISE, rng
            )
            tasks.append(Task(t, train_x, train_y, test_x, test_y, cls))
    elif spec.kind == "permuted_features":
        cls = np.arange(spec.classes_per_task)
        means = _class_means(spec)
        rng = np.random.default_rng([spec.seed, 1, 0])
        base_train = _gaussian_blobs(
            means, cls, spec.samples_per_class_train, GAUSSIAN_NOISE, rng
        )
        base_test = _gaussian_blobs(
            means, cls, spec.samples_per_class_test, GAUSSIAN_NOISE, rng
        )
        for t in range(spec.num_tasks):
            perm = _feature_permutation(spec, t)
            tasks.append(
                Task(
                    t,
                    base_train[0][perm, :],
                    base_train[1].copy(),
                    base_test[0][perm, :],
                    base_test[1].copy(),
                    cls,
                )
            )
    else:  # rotated_moons
        cls = np.arange(2)
        for t in range(spec.num_tasks):
            angle = math.pi * t / spec.num_tasks
            rot = np.array(
                [
                    [math.cos(angle), -math.sin(angle)],
                    [math.sin(angle), math.cos(angle)],
                ]
            )
            rng = np.random.default_rng([spec.seed, 1, t])
            out = []
            for n in (spec.samples_per_class_train, spec.samples_per_class_test):
                pts, labels = _moons(n, 0.1, rng)
                pts = pts @ rot.T
                full = 0.05 * rng.standard_normal((pts.shape[0], dim))
                full[:, :2] = pts
                out.append((full.T, labels))
            tasks.append(Task(t, out[0][0], out[0][1], out[1][0], out[1][1], cls))
    return tasks


def generate_pretraining(spec: TaskStream, n_per_class: int):
    """Held-out draw from every task's distribution, used to pretrain the
    classifier head before the continual phase (the desk-scale stand-in for
    a broadly pretrained backbone).  Disjoint from the task train/test
    samples (dedicated subseed), same class geometry."""
    dim = spec.input_dim
    xs, ys = [], []
    if spec.kind in ("split_gaussians", "permuted_features"):
        means = _class_means(spec)
        for t in range(spec.num_tasks):
            rng = np.random.default_rng([spec.seed, 3, t])
            if spec.kind == "split_gaussians":
                cls = np.arange(
                    t * spec.classes_per_task, (t + 1) * spec.classes_per_task
                )
                x, y = _gaussian_blobs(means[cls], cls, n_per_class, GAUSSIAN_NOISE, rng)
            else:
                cls = np.arange(spec.classes_per_task)
                x, y = _gaussian_blobs(means, cls, n_per_class, GAUSSIAN_NOISE, rng)
                x = x[_feature_permutation(spec, t), :]
            xs.append(x)
            ys.append(y)
    else:  # rotated_moons
        for t in range(spec.num_tasks):
            angle = math.pi * t / spec.num_tasks
            rot = np.array(
                [
                    [math.cos(angle), -math.sin(angle)],
                    [math.sin(angle), math.cos(angle)],
                ]
            )
            rng = np.random.default_rng([spec.seed, 3, t])
            pts, labels = _moons(n_per_class, 0.1, rng)
            pts = pts @ rot.T
            full = 0.05 * rng.standard_normal((pts.shape[0], dim))
            full[:, :2] = pts
            xs.append(full.T)
            ys.append(labels)
    x = np.concatenate(xs, axis=1)
    y = np.concatenate(ys)
    perm = np.random.default_rng([spec.seed, 4]).permutation(x.shape[1])
    return x[:, perm], y[perm]


@dataclass
class CycleConfig:
    variant: str = "core_only"
    mode: str = "tail"  # subspace for plan-based variants: tail | top | random
    r_max: int = 8
    rho: float = 0.95
    alpha: float = 1.0
    iterations: int = 300
    learning_rate: float = 0.6
    warmup_fraction: float = 0.05
    schedule: str = "cosine"
    batch_size: int = 32
    max_grad_norm: float = 10.0  # global clip; keeps ablation variants finite
    pretrain_steps: int = 300
    pretrain_lr: float = 0.5
    pretrain_samples_per_class: int = 20
    hidden_dims: tuple = (64, 64)
    init_gain: float = 5.0
    init_r95_frac: float = 0.55
    adapt_layers: tuple | None = None  # default: square non-head layers


def default_adapt_layers(model: nn.Model) -> tuple:
    """Square non-head layers: the analogue of adapting projection matrices.

    Rectangular embedding layers have too few low-energy directions for the
    configured rank to persist in, so they stay frozen by default.
    """
    return tuple(
        i
        for i, layer in enumerate(model.layers[:-1])
        if layer.w.shape[0] == layer.w.shape[1]
    )


@dataclass
class StepDiagnostics:
    """Per-training-step ledger for one adapted layer."""

    inner: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    principal_leak: list = field(default_factory=list)
    delta_norm: list = field(default_factory=list)


@dataclass
class LedgerEntry:
    task_index: int
    layer_index: int
    inner: float
    bound: float | None


@dataclass
class TaskRecord:
    task_index: int
    losses: list
    ledger: list  # final-update LedgerEntry per adapted layer
    diagnostics: dict  # layer_index -> StepDiagnostics
    plans: dict  # layer_index -> {"k":..., "r":..., "d":..., "sigma_null_max":...}
    capacity_warnings: list


def _build_adapter(
    plan: NullSpacePlan, svd, layer: nn.Layer, cfg: CycleConfig, seed_key
):
    if cfg.variant == "plain_lowrank":
        rng_seed = int(np.random.default_rng(seed_key).integers(0, 2**31))
        return adapter_mod.plain_lowrank(
            layer.w.shape[0], layer.w.shape[1], plan.r, cfg.alpha, seed=rng_seed
        )
    if cfg.mode == "tail":
        return adapter_mod.from_plan(plan, layer.w, cfg.alpha, cfg.variant)
    rng_seed = int(np.random.default_rng(seed_key).integers(0, 2**31))
    u_b, v_b = select_subspace(svd, cfg.mode, plan.r, seed=rng_seed)
    return adapter_mod.from_subspace(u_b, v_b, cfg.alpha, cfg.variant)


def run_task_cycle(
    model: nn.Model, task: Task, cfg: CycleConfig, run_seed: int = 0
) -> tuple[nn.Model, TaskRecord]:
    """One full cycle on the current weights: plan, train, merge.

    The null space is re-computed from each layer's current W, adapters are
    trained for cfg.iterations steps with interference recorded every step,
    and the updates are merged (adapters discarded, zero parameter growth).
    """
    adapt_layers = cfg.adapt_layers
    if adapt_layers is None:
        adapt_layers = default_adapt_layers(model)

    contexts = {}
    plans_meta = {}
    for i in adapt_layers:
        layer = model.layers[i]
        svd = svd_thin(layer.w)
        plan = plan_nullspace(svd, cfg.rho, cfg.r_max)
        plans_meta[i] = {
            "k": plan.k,
            "r": plan.r,
            "d": plan.d,
            "sigma_null_max": plan.sigma_null_max,
        }
        if plan.is_inert():
            continue  # frozen layer for this task
        adapter = _build_adapter(plan, svd, layer, cfg, [run_seed, task.index, i, 7])
        layer.adapter = adapter
        # principal-block cross products; exact contractions of U_p^T dW V_p
        cross_u = svd.u[:, : plan.k].T @ adapter.u_basis
        cross_v = adapter.v_basis.T @ svd.v[:, : plan.k]
        contexts[i] = (adapter, plan, cross_u, cross_v)

    optimizer = nn.OptimizerState(
        learning_rate=cfg.learning_rate,
        warmup_fraction=cfg.warmup_fraction,
        schedule=cfg.schedule,
        total_steps=max(cfg.iterations, 1),
    )
    shuffle_rng = np.random.default_rng([run_seed, task.index, 11])
    n = task.train_x.shape[1]
    order = shuffle_rng.permutation(n)
    cursor = 0

    losses = []
    diagnostics = {i: StepDiagnostics() for i in contexts}
    for _ in range(cfg.iterations):
        if cursor + cfg.batch_size > n:
            order = shuffle_rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + cfg.batch_size]
        cursor += cfg.batch_size
        loss, grads = nn.loss_and_grads(model, task.train_x[:, idx], task.train_y[idx])
        losses.append(loss)

        params, gdict = {}, {}
        for i in contexts:
            adapter = contexts[i][0]
            for name, value in adapter.params().items():
                if name in adapter.trainable:
                    params[f"{i}.{name}"] = value
                    gdict[f"{i}.{name}"] = grads[i].get(name)
        if cfg.max_grad_norm > 0:
            total = math.sqrt(
                sum(float(np.sum(g * g)) for g in gdict.values() if g is not None)
            )
            if total > cfg.max_grad_norm:
                factor = cfg.max_grad_norm / total
                gdict = {
                    k: None if g is None else g * factor for k, g in gdict.items()
                }
        params, optimizer = nn.step(optimizer, params, gdict)
        for key, value in params.items():
            layer_idx, name = key.split(".", 1)
            setattr(contexts[int(layer_idx)][0], name, value)

        for i, (adapter, plan, cross_u, cross_v) in contexts.items():
            diag = diagnostics[i]
            s = adapter.scale
            if cfg.variant == "core_only" and cfg.mode == "tail":
                inner, bound = adapter_mod.interference(adapter, model.layers[i].w)
                diag.inner.append(inner)
                diag.bound.append(bound)
            else:
                diag.inner.append(
                    float(np.sum(model.layers[i].w * adapter_mod.delta_w(adapter)))
                )
                diag.bound.append(None)
            leak = s * float(np.linalg.norm(cross_u @ adapter.m_core @ cross_v))
            diag.principal_leak.append(leak)
            diag.delta_norm.append(
                float(np.linalg.norm(adapter_mod.delta_w(adapter)))
            )

    ledger = []
    capacity_warnings = []
    for i, (adapter, plan, _, _) in contexts.items():
        if cfg.variant == "core_only" and cfg.mode == "tail":
            inner, bound = adapter_mod.interference(adapter, model.layers[i].w)
        else:
            inner = float(
                np.sum(model.layers[i].w * adapter_mod.delta_w(adapter))
            )
            bound = None
        ledger.append(LedgerEntry(task.index, i, inner, bound))
        model.layers[i].w = adapter_mod.merge(adapter, model.layers[i].w)
        model.layers[i].adapter = None

    for i in adapt_layers:
        snap = spectral_snapshot(model.layers[i].w, f"layer{i}", task.index + 1)
        if i in contexts and snap.null_at_95 < 2 * plans_meta[i]["r"]:
            capacity_warnings.append(
                f"task {task.index}: layer{i} null_at_95={snap.null_at_95} "
                f"< 2*r={2 * plans_meta[i]['r']}"
            )

    return model, TaskRecord(
        task_index=task.index,
        losses=losses,
        ledger=ledger,
        diagnostics=diagnostics,
        plans=plans_meta,
        capacity_warnings=capacity_warnings,
    )


def evaluate(model: nn.Model, task: Task) -> float:
    """Task-aware accuracy: argmax over the task's own class logits."""
    logits, _ = nn.forward(model, task.test_x)
    sub = logits[task.class_ids, :]
    pred = task.class_ids[np.argmax(sub, axis=0)]
    return float(np.mean(pred == task.test_y))


def evaluate_grid(snapshots: list[nn.Model], tasks: list[Task]) -> np.ndarray:
    """Full T x T accuracy grid: row t = model after task t, column j = task j."""
    if len(snapshots) != len(tasks):
        raise ProtocolError(
            f"need one snapshot per task: {len(snapshots)} vs {len(tasks)}"
        )
    grid = np.zeros((len(tasks), len(tasks)))
    for t, model in enumerate(snapshots):
        for j, task in enumerate(tasks):
            grid[t, j] = evaluate(model, task)
    return grid


def metrics(accuracy: np.ndarray) -> tuple[float, float, float, float]:
    """Transfer (mean over j > t), Avg. (grid mean), Last (final row mean),
    Forgetting (mean over j < T of a[j][j] - a[T][j]; negative = backward
    transfer)."""
    accuracy = np.asarray(accuracy, dtype=np.float64)
    if accuracy.ndim != 2 or accuracy.shape[0] != accuracy.shape[1]:
        raise ProtocolError(f"accuracy grid must be square, got {accuracy.shape}")
    if not np.all(np.isfinite(accuracy)):
        raise ProtocolError("accuracy grid is incomplete")
    t_count = accuracy.shape[0]
    upper = [accuracy[t, j] for t in range(t_count) for j in range(t + 1, t_count)]
    transfer = float(np.mean(upper)) if upper else float("nan")
    avg = float(np.mean(accuracy))
    last = float(np.mean(accuracy[-1]))
    if t_count > 1:
        drops = [accuracy[j, j] - accuracy[-1, j] for j in range(t_count - 1)]
        forgetting = float(np.mean(drops))
    else:
        forgetting = 0.0
    return transfer, avg, last, forgetting


def spectral_trajectory(
    snapshots: list[nn.Model], adapt_layers
) -> list[SpectralSnapshot]:
    """r95 / null_at_95 per adapted layer for model states task 0..T
    (index 0 = initial model)."""
    out = []
    for t, model in enumerate(snapshots):
        for i in adapt_layers:
            out.append(spectral_snapshot(model.layers[i].w, f"layer{i}", t))
    return out


@dataclass
class RunReport:
    accuracy: np.ndarray
    transfer: float
    avg: float
    last: float
    forgetting: float
    ledger: list  # LedgerEntry
    spectra: list  # SpectralSnapshot
    task_records: list  # TaskRecord
    capacity_warnings: list
    config: dict
    seed: int

    def cumulative_interference(self) -> tuple[float, float]:
        inner = sum(abs(e.inner) for e in self.ledger)
        bound = sum(e.bound for e in self.ledger if e.bound is not None)
        return inner, bound

    def to_json_dict(self, timestamp: bool = True) -> dict:
        inner, bound = self.cumulative_interference()
        payload = {
            "config": self.config,
            "seed": self.seed,
            "accuracy": self.accuracy.tolist(),
            "metrics": {
                "transfer": self.transfer,
                "avg": self.avg,
                "last": self.last,
                "forgetting": self.forgetting,
            },
            "ledger": [asdict(e) for e in self.ledger],
            "cumulative_interference": {"inner": inner, "bound": bound},
            "spectra": [asdict(s) for s in self.spectra],
            "capacity_warnings": list(self.capacity_warnings),
            "final_losses": [r.losses[-1] if r.losses else None for r in self.task_records],
        }
        if timestamp:
            payload["timestamp"] = datetime.datetime.now(
                datetime.timezone.utc
            ).isoformat()
        return payload


def pretrain_head(
    model: nn.Model, stream: TaskStream, cfg: CycleConfig, seed: int
) -> None:
    """Train only the classifier head on a held-out all-class draw, then
    leave it frozen for the whole continual phase."""
    if cfg.pretrain_steps <= 0:
        return
    x, y = generate_pretraining(stream, cfg.pretrain_samples_per_class)
    head = len(model.layers) - 1
    opt = nn.OptimizerState(
        learning_rate=cfg.pretrain_lr,
        warmup_fraction=0.0,
        schedule="cosine",
        total_steps=cfg.pretrain_steps,
    )
    rng = np.random.default_rng([seed, 5])
    n = x.shape[1]
    for _ in range(cfg.pretrain_steps):
        idx = rng.integers(0, n, size=min(cfg.batch_size, n))
        _, grads = nn.loss_and_grads(model, x[:, idx], y[idx], train_base=True)
        params = {"w": model.layers[head].w, "b": model.layers[head].b}
        params, opt = nn.step(opt, params, grads[head])
        model.layers[head].w = params["w"]
        model.layers[head].b = params["b"]


def run_experiment(stream: TaskStream, cfg: CycleConfig, seed: int) -> RunReport:
    """Run the full multi-task cycle and assemble a report."""
    tasks = generate_stream(stream)
    model = nn.init_model(
        stream.input_dim,
        list(cfg.hidden_dims),
        stream.total_classes,
        seed=seed,
        r95_frac=cfg.init_r95_frac,
        gain=cfg.init_gain,
    )
    adapt_layers = cfg.adapt_layers
    if adapt_layers is None:
        adapt_layers = default_adapt_layers(model)
    cfg_effective = CycleConfig(**{**asdict(cfg), "adapt_layers": adapt_layers})

    pretrain_head(model, stream, cfg_effective, seed)
    base_digests = nn.base_weight_digests(model)
    snapshots = [model.copy()]
    records = []
    for task in tasks:
        model, record = run_task_cycle(model, task, cfg_effective, run_seed=seed)
        records.append(record)
        snapshots.append(model.copy())
        new_digests = nn.base_weight_digests(model)
        for i, (before, after) in enumerate(zip(base_digests, new_digests)):
            if i not in adapt_layers and before != after:
                raise ProtocolError(f"non-adapted layer {i} changed during a task")
        base_digests = new_digests

    grid = evaluate_grid(snapshots[1:], tasks)
    transfer, avg, last, forgetting = metrics(grid)
    ledger = [e for r in records for e in r.ledger]
    warnings = [w for r in records for w in r.capacity_warnings]
    spectra = spectral_trajectory(snapshots, adapt_layers)
    config_echo = {
        "stream": asdict(stream),
        "cycle": {**asdict(cfg_effective), "adapt_layers": list(adapt_layers)},
    }
    return RunReport(
        accuracy=grid,
        transfer=transfer,
        avg=avg,
        last=last,
        forgetting=forgetting,
        ledger=ledger,
        spectra=spectra,
        task_records=records,
        capacity_warnings=warnings,
        config=config_echo,
        seed=seed,
    )


def train_linear_probe(
    task: Task, classes: int, input_dim: int, steps: int = 200,
    learning_rate: float = 0.5, seed: int = 0
) -> float:
    """Train a standalone softmax regression on one task; returns test
    accuracy.  Used to confirm streams are learnable."""
    rng = np.random.default_rng(seed)
    model = nn.Model(
        layers=[
            nn.Layer(
                w=0.01 * rng.standard_normal((classes, input_dim)),
                b=np.zeros(classes),
            )
        ],
        classes=classes,
    )
    opt = nn.OptimizerState(
        learning_rate=learning_rate, schedule="constant", total_steps=steps
    )
    n = task.train_x.shape[1]
    for _ in range(steps):
        idx = rng.integers(0, n, size=min(64, n))
        _, grads = nn.loss_and_grads(
            model, task.train_x[:, idx], task.train_y[idx], train_base=True
        )
        params = {"w": model.layers[0].w, "b": model.layers[0].b}
        params, opt = nn.step(opt, params, grads[0])
        model.layers[0].w = params["w"]
        model.layers[0].b = params["b"]
    return evaluate(model, task)


# --- flat CSV extracts ----------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def metrics_csv_row(report: RunReport) -> dict:
    cycle = report.config["cycle"]
    stream = report.config["stream"]
    inner, bound = report.cumulative_interference()
    return {
        "seed": report.seed,
        "kind": stream["kind"],
        "num_tasks": stream["num_tasks"],
        "variant": cycle["variant"],
        "mode": cycle["mode"],
        "r_max": cycle["r_max"],
        "rho": cycle["rho"],
        "alpha": cycle["alpha"],
        "iterations": cycle["iterations"],
        "learning_rate": cycle["learning_rate"],
        "transfer": report.transfer,
        "avg": report.avg,
        "last": report.last,
        "forgetting": report.forgetting,
        "cumulative_inner": inner,
        "cumulative_bound": bound,
        "capacity_warnings": len(report.capacity_warnings),
    }


def write_metrics_csv(path, reports: list[RunReport]) -> None:
    rows = [metrics_csv_row(r) for r in reports]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])


def write_ledger_csv(path, reports: list[RunReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "task_index", "layer_index", "inner", "bound"])
        for report in reports:
            for e in report.ledger:
                writer.writerow(
                    [
                        report.seed,
                        e.task_index,
                        e.layer_index,
                        _fmt(e.inner),
                        "" if e.bound is None else _fmt(e.bound),
                    ]
                )


def write_spectra_csv(path, reports: list[RunReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "layer_id", "task_index", "r95", "null_at_95"])
        for report in reports:
            for s in report.spectra:
                writer.writerow(
                    [report.seed, s.layer_id, s.task_index, s.r95, s.null_at_95]
                )
