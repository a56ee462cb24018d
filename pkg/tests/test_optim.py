import os

import numpy as np
import pytest

from fallcast.errors import TrainingDivergedError
from fallcast.optim import (AdamState, LrSchedule, ParamStore, adam_step,
                            load_checkpoint, save_checkpoint)


def make_store(value):
    store = ParamStore()
    store.add("w", np.asarray(value, dtype=np.float64))
    return store


def test_adam_first_step_is_signed_learning_rate():
    store = make_store([1.0])
    store["w"].grad = np.array([0.003])
    state = AdamState(lr=0.01)
    adam_step(store, state)
    # bias-corrected first step reduces to -lr * sign(g) up to eps
    assert store["w"].data[0] == pytest.approx(1.0 - 0.01, rel=1e-4)
    assert state.t == 1

    store = make_store([1.0])
    store["w"].grad = np.array([-5.0])
    adam_step(store, AdamState(lr=0.01))
    assert store["w"].data[0] == pytest.approx(1.0 + 0.01, rel=1e-4)


def test_adam_zero_gradient_leaves_parameters_unchanged():
    store = make_store([2.0, -3.0])
    state = AdamState(lr=0.1)
    for _ in range(5):
        store["w"].grad = np.zeros(2)
        adam_step(store, state)
    np.testing.assert_array_equal(store["w"].data, [2.0, -3.0])
    assert state.t == 5


def test_adam_converges_on_quadratic_bowl():
    # f(w) = w^2, gradient 2w, from w=1 with lr=0.01
    store = make_store([1.0])
    state = AdamState(lr=0.01)
    for _ in range(2000):
        store["w"].grad = 2.0 * store["w"].data
        adam_step(store, state)
    assert abs(store["w"].data[0]) < 1e-2


def test_adam_rejects_nan_gradient_naming_parameter():
    store = ParamStore()
    store.add("lstm0.wx", np.ones(3))
    store["lstm0.wx"].grad = np.array([1.0, np.nan, 0.0])
    with pytest.raises(TrainingDivergedError, match="lstm0.wx"):
        adam_step(store, AdamState())


def test_param_store_rejects_duplicate_names():
    store = make_store([1.0])
    with pytest.raises(ValueError):
        store.add("w", np.zeros(2))


def test_lr_schedule_exact_decay_points():
    sched = LrSchedule(initial=1e-3, interval=16, factor=0.5, max_epochs=300)
    assert sched.rate(0) == 1e-3
    for k in range(6):
        assert sched.rate(16 * k) == 1e-3 * 0.5 ** k
    assert sched.rate(15) == 1e-3
    assert sched.rate(16) == 5e-4
    rates = [sched.rate(e) for e in range(300)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(9)
    params = {
        "a": rng.normal(size=(7, 3)),
        "b": np.array([np.pi, np.nextafter(1.0, 2.0), 1e-300, -0.0]),
    }
    path = os.path.join(tmp_path, "ckpt.json")
    save_checkpoint(path, "anticipator", {"hidden_size": 4}, params)
    kind, config, loaded = load_checkpoint(path)
    assert kind == "anticipator"
    assert config == {"hidden_size": 4}
    for name, a in params.items():
        assert loaded[name].shape == a.shape
        assert np.array_equal(loaded[name].view(np.uint64), a.view(np.uint64))


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = os.path.join(tmp_path, "other.json")
    with open(path, "w") as fh:
        fh.write('{"format": "something-else"}')
    with pytest.raises(ValueError):
        load_checkpoint(path)
