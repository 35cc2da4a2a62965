import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptyff.optim import AdamState, LrSchedule, adam_init, adam_step, lr_at, minibatch_plan


def reference_adam(x, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar textbook Adam."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    return x


def test_first_step_moves_by_lr():
    p, s = adam_step(np.array([1.0, -2.0]), np.array([3.0, -0.5]), adam_init(np.zeros(2)), 0.01)
    np.testing.assert_allclose(p, [0.99, -1.99], atol=1e-9)
    assert s.step_count == 1


@given(grads=st.lists(st.floats(-10, 10), min_size=1, max_size=8))
def test_matches_scalar_reference(grads):
    p = np.array([0.3])
    s = adam_init(p)
    for g in grads:
        p, s = adam_step(p, np.array([g]), s, 1e-2)
    assert p[0] == pytest.approx(reference_adam(0.3, grads, 1e-2), abs=1e-12)


def test_complex_parameters_use_independent_channels():
    p = np.array([1 + 1j])
    q, s = adam_step(p, np.array([2.0 - 0.001j]), adam_init(p), 0.1)
    np.testing.assert_allclose(q, [0.9 + 1.1j], atol=1e-6)
    assert s.m1.shape == (2,)


def test_step_does_not_mutate_inputs():
    p = np.ones(3, complex)
    s = adam_init(p)
    adam_step(p, np.ones(3, complex), s, 0.1)
    assert np.all(p == 1) and s.step_count == 0 and not s.m1.any()


def test_shape_mismatch_and_bad_lr():
    s = adam_init(np.zeros(3))
    with pytest.raises(ValueError):
        adam_step(np.zeros(4), np.zeros(4), s, 0.1)
    with pytest.raises(ValueError):
        adam_step(np.zeros(3), np.zeros(3), s, 0.0)


def test_lr_schedule_steps():
    sched = LrSchedule(0.005, 50, 0.2)
    assert lr_at(sched, 0) == 0.005 and lr_at(sched, 49) == 0.005
    assert lr_at(sched, 50) == pytest.approx(0.001)
    assert lr_at(sched, 100) == pytest.approx(0.0002)


@given(K=st.integers(1, 300), b=st.integers(1, 64), seed=st.integers(0, 2**31))
def test_minibatch_plan_partitions(K, b, seed):
    plan = minibatch_plan(K, b, seed)
    flat = np.concatenate(plan)
    assert sorted(flat.tolist()) == list(range(K))
    assert all(len(c) == b for c in plan[:-1]) and 0 < len(plan[-1]) <= b
    again = minibatch_plan(K, b, seed)
    assert all(np.array_equal(x, y) for x, y in zip(plan, again))


def test_full_scale_epoch_has_23_minibatches():
    assert len(minibatch_plan(1125, 50, 0)) == 23
