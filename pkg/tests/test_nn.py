"""Model family: forward pass, loss, gradients, optimizer schedule."""

import math

import numpy as np
import pytest

from nusacl import adapter as am
from nusacl import nn
from nusacl.errors import DataError, ShapeError
from nusacl.linalg import svd_thin
from nusacl.nullspace import plan_nullspace, principal_dim


def test_init_model_shapes_and_activations():
    model = nn.init_model(32, [64, 64], 10, seed=0)
    assert [l.w.shape for l in model.layers] == [(64, 32), (64, 64), (10, 64)]
    assert [l.activation for l in model.layers] == ["relu", "relu", "none"]
    assert all(np.all(l.b == 0.0) for l in model.layers)


def test_structured_weight_hits_r95_target():
    rng = np.random.default_rng(50)
    w = nn.structured_weight(64, 64, rng, r95_frac=0.55, gain=5.0)
    svd = svd_thin(w)
    k = principal_dim(svd.sigma, 0.95)
    assert abs(k - 0.55 * 64) <= 3


def test_structured_weight_gain_scales_spectrum():
    rng_a = np.random.default_rng(51)
    rng_b = np.random.default_rng(51)
    a = nn.structured_weight(32, 32, rng_a, gain=1.0)
    b = nn.structured_weight(32, 32, rng_b, gain=3.0)
    assert np.allclose(b, 3.0 * a, atol=1e-12)


def test_forward_matches_manual_computation():
    model = nn.init_model(4, [5], 3, seed=1)
    x = np.random.default_rng(52).standard_normal((4, 7))
    logits, cache = nn.forward(model, x)
    h = np.maximum(model.layers[0].w @ x + model.layers[0].b[:, None], 0.0)
    want = model.layers[1].w @ h + model.layers[1].b[:, None]
    assert np.allclose(logits, want, atol=1e-12)
    assert len(cache["inputs"]) == 2


def test_forward_rejects_wrong_input_dim():
    model = nn.init_model(4, [5], 3, seed=1)
    with pytest.raises(ShapeError):
        nn.forward(model, np.zeros((3, 2)))


def test_cross_entropy_uniform_logits():
    logits = np.zeros((10, 6))
    labels = np.arange(6) % 10
    loss, grad = nn.softmax_cross_entropy(logits, labels)
    assert loss == pytest.approx(math.log(10.0))
    assert grad.shape == (10, 6)
    # gradient columns sum to zero for softmax + cross-entropy
    assert np.abs(grad.sum(axis=0)).max() < 1e-12


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(DataError):
        nn.softmax_cross_entropy(np.zeros((3, 2)), np.array([0, 5]))
    with pytest.raises(ShapeError):
        nn.softmax_cross_entropy(np.zeros((3, 2)), np.array([0, 1, 2]))


def test_full_model_gradients_match_finite_differences():
    rng = np.random.default_rng(53)
    model = nn.init_model(8, [8], 3, seed=53, gain=1.0)
    plan = plan_nullspace(svd_thin(model.layers[0].w), rho=0.6, r_max=3)
    model.layers[0].adapter = am.from_plan(plan, model.layers[0].w, 1.5)
    model.layers[0].adapter.m_core = 0.1 * rng.standard_normal((plan.r, plan.r))
    x = rng.standard_normal((8, 5))
    labels = rng.integers(0, 3, size=5)
    _, grads = nn.loss_and_grads(model, x, labels, train_base=True)

    def loss():
        value, _ = nn.loss_and_grads(model, x, labels)
        return value

    step = 1e-5
    targets = [
        (grads[0]["m_core"], model.layers[0].adapter.m_core),
        (grads[0]["w"], model.layers[0].w),
        (grads[0]["b"], model.layers[0].b),
        (grads[1]["w"], model.layers[1].w),
        (grads[1]["b"], model.layers[1].b),
    ]
    for analytic, param in targets:
        numeric = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + step
            hi = loss()
            param[idx] = orig - step
            lo = loss()
            param[idx] = orig
            numeric[idx] = (hi - lo) / (2 * step)
            it.iternext()
        scale = max(np.abs(numeric).max(), 1.0)
        assert np.abs(analytic - numeric).max() / scale < 1e-5


def test_default_grads_touch_only_adapter():
    model = nn.init_model(6, [6], 2, seed=54)
    plan = plan_nullspace(svd_thin(model.layers[0].w), rho=0.6, r_max=2)
    model.layers[0].adapter = am.from_plan(plan, model.layers[0].w, 1.0)
    x = np.random.default_rng(55).standard_normal((6, 3))
    _, grads = nn.loss_and_grads(model, x, np.array([0, 1, 0]))
    assert set(grads[0]) == {"m_core"}
    assert grads[1] == {}


def test_optimizer_schedule_shape():
    opt = nn.OptimizerState(
        learning_rate=1.0, warmup_fraction=0.1, schedule="cosine", total_steps=100
    )
    lrs = []
    for step in range(100):
        state = nn.OptimizerState(
            learning_rate=1.0,
            warmup_fraction=0.1,
            schedule="cosine",
            step=step,
            total_steps=100,
        )
        lrs.append(state.current_lr())
    assert lrs[0] == 0.0
    # warmup climbs, then cosine decays toward zero
    assert lrs[5] < lrs[10]
    peak = max(lrs)
    assert peak == pytest.approx(max(lrs[8:12]), abs=1e-9)
    assert lrs[-1] < 0.01
    assert opt.current_lr() == 0.0


def test_optimizer_constant_schedule():
    state = nn.OptimizerState(
        learning_rate=0.5, warmup_fraction=0.0, schedule="constant",
        step=7, total_steps=10,
    )
    assert state.current_lr() == 0.5


def test_optimizer_rejects_bad_settings():
    with pytest.raises(ValueError):
        nn.OptimizerState(learning_rate=0.0)
    with pytest.raises(ValueError):
        nn.OptimizerState(learning_rate=1.0, warmup_fraction=0.6)
    with pytest.raises(ValueError):
        nn.OptimizerState(learning_rate=1.0, schedule="adamw")


def test_step_applies_update_and_advances():
    state = nn.OptimizerState(
        learning_rate=0.1, warmup_fraction=0.0, schedule="constant", total_steps=5
    )
    params = {"m_core": np.ones((2, 2))}
    grads = {"m_core": np.full((2, 2), 2.0)}
    updated, state2 = nn.step(state, params, grads)
    assert np.allclose(updated["m_core"], 0.8)
    assert state2.step == 1
    # parameters without gradients pass through untouched
    updated3, _ = nn.step(state, {"x": np.ones(2)}, {})
    assert np.array_equal(updated3["x"], np.ones(2))


def test_step_converges_on_quadratic():
    # gradient descent on 0.5||p - t||^2 contracts toward the target
    state = nn.OptimizerState(
        learning_rate=0.5, warmup_fraction=0.0, schedule="constant", total_steps=50
    )
    target = np.array([[1.0, -2.0]])
    p = {"p": np.zeros((1, 2))}
    for _ in range(50):
        g = {"p": p["p"] - target}
        p, state = nn.step(state, p, g)
    assert np.abs(p["p"] - target).max() < 1e-10


def test_model_checkpoint_roundtrip(tmp_path):
    model = nn.init_model(6, [8], 4, seed=56)
    plan = plan_nullspace(svd_thin(model.layers[0].w), rho=0.8, r_max=2)
    model.layers[0].adapter = am.from_plan(plan, model.layers[0].w, 1.0)
    nn.save_model(tmp_path / "ckpt", model)
    loaded = nn.load_model(tmp_path / "ckpt")
    assert loaded.classes == 4
    for a, b in zip(loaded.layers, model.layers):
        assert np.array_equal(a.w, b.w)
        assert np.array_equal(a.b, b.b)
        assert a.activation == b.activation
    assert loaded.layers[0].adapter is not None
    x = np.random.default_rng(57).standard_normal((6, 3))
    assert np.array_equal(nn.forward(loaded, x)[0], nn.forward(model, x)[0])


def test_base_weight_digests_track_changes():
    model = nn.init_model(4, [4], 2, seed=58)
    before = nn.base_weight_digests(model)
    model_copy = model.copy()
    assert nn.base_weight_digests(model_copy) == before
    model_copy.layers[0].w[0, 0] += 1.0
    assert nn.base_weight_digests(model_copy)[0] != before[0]
    assert nn.base_weight_digests(model) == before
