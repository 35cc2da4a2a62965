from dataclasses import replace

import numpy as np
import pytest

from ptyff.engine import (EngineConfig, ReconstructionState, apply_fast_forward,
                          apply_probe_support, embed_truth, init_object, init_state, run,
                          sharp_probe_init)
from ptyff.ffop import IdentityOperator
from ptyff.objective import loss_and_gradients
from ptyff.simkit import SimConfig, synthesize


@pytest.fixture(scope="module")
def small():
    cfg = SimConfig(object_size=40, probe_size=16, scan_step=6, aperture_radius=6.0,
                    texture_seed=7)
    data, truth = synthesize(cfg)
    ecfg = EngineConfig.desk(16, iterations=8, i_ml=3, snapshot_iterations=(3, 8))
    return data, truth, cfg.physics, ecfg


def test_desk_scaling_rule():
    full = EngineConfig.desk(512)
    assert (full.probe_support_radius, full.object_pad) == (200.0, 200)
    d = EngineConfig.desk(32)
    assert d.batch_size == 2 and d.object_pad == 12 and d.probe_support_radius == 12.5
    assert EngineConfig.desk(32, batch_size=9).batch_size == 9
    assert EngineConfig().batch_size == 50


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(iterations=10, i_ml=11)
    with pytest.raises(ValueError):
        EngineConfig(batch_size=0)


def test_probe_support_disk():
    p = apply_probe_support(np.ones((1, 9, 9)), 2.0)
    assert p[0, 4, 4] == 1 and p[0, 4, 6] == 1 and p[0, 4, 7] == 0 and p[0, 2, 2] == 0
    assert p.sum() == 13
    with pytest.raises(ValueError):
        apply_probe_support(p, 0)


def test_initialization(small):
    data, _, physics, ecfg = small
    probe = sharp_probe_init(data, 2, ecfg.probe_support_radius)
    assert probe.shape == (2, 16, 16)
    assert np.sum(abs(probe[1]) ** 2) == pytest.approx(0.01 * np.sum(abs(probe[0]) ** 2), rel=0.05)
    obj = init_object(data, ecfg.object_pad, 1e-3, 0)
    pad = ecfg.object_pad
    assert np.all(obj[:pad] == 0)
    np.testing.assert_allclose(abs(obj[pad:-pad, pad:-pad]), 1e-3)
    st = init_state(data, ecfg, physics)
    assert st.object.shape == (40 + 2 * pad, 40 + 2 * pad)
    assert st.positions.min() == pad


def test_truth_is_stationary(small):
    data, truth, physics, ecfg = small
    st = init_state(data, ecfg, physics)
    obj = embed_truth(truth.object, data, ecfg.object_pad)
    loss, g = loss_and_gradients(truth.probe, obj, data.patterns, st.positions,
                                 np.arange(data.K), physics)
    assert loss < 1e-20 and np.max(abs(g.d_object)) < 1e-10 and np.max(abs(g.d_probe)) < 1e-10


def test_run_records_history_and_snapshots(small):
    data, _, physics, ecfg = small
    st = run(data, ecfg, physics)
    assert [r[0] for r in st.loss_history] == list(range(1, 9))
    assert sorted(st.snapshots) == [3, 8]
    np.testing.assert_array_equal(st.snapshots[8], st.object)
    assert len(st.epoch_seconds) == 8 and not st.fast_forward_applied
    assert st.mse_curve()[-1] < st.mse_curve()[0]
    outside = apply_probe_support(np.ones_like(st.probe), ecfg.probe_support_radius) == 0
    assert np.all(st.probe[outside] == 0)


def test_run_is_deterministic(small):
    data, _, physics, ecfg = small
    a = run(data, ecfg, physics)
    b = run(data, ecfg, physics)
    assert a.loss_history == b.loss_history
    np.testing.assert_array_equal(a.object, b.object)


def test_identity_insertion_matches_moment_reset(small):
    data, _, physics, ecfg = small
    ml = run(data, ecfg, physics, operator=IdentityOperator())
    ctl = run(data, replace(ecfg, reset_moments_without_operator=True), physics)
    assert ml.loss_history == ctl.loss_history
    assert ml.events == [{"iteration": 3, "event": "fast_forward"}]
    assert ctl.events == [{"iteration": 3, "event": "moment_reset"}]


def test_operator_sees_object_after_i_ml_epochs(small):
    data, _, physics, ecfg = small
    seen = {}

    def op(obj):
        seen["obj"] = obj.copy()
        return obj * 0.5

    st = run(data, ecfg, physics, operator=op)
    np.testing.assert_array_equal(seen["obj"], st.snapshots[3])
    assert st.fast_forward_applied and st.adam_object.step_count > 0


def test_fast_forward_guards(small):
    data, _, physics, ecfg = small
    st = init_state(data, ecfg, physics)
    with pytest.raises(ValueError):
        apply_fast_forward(st, lambda o: o[:-1])
    apply_fast_forward(st, IdentityOperator())
    with pytest.raises(RuntimeError):
        apply_fast_forward(st, IdentityOperator())


def test_insertion_at_last_iteration(small):
    data, _, physics, ecfg = small
    cfg = replace(ecfg, iterations=2, i_ml=2)
    st = run(data, cfg, physics, operator=lambda o: 2 * o)
    assert st.fast_forward_applied and len(st.loss_history) == 2


def test_resume_from_state(small):
    data, _, physics, ecfg = small
    full = run(data, ecfg, physics)
    part = run(data, replace(ecfg, iterations=4), physics)
    rest = run(data, ecfg, physics, state=part)
    assert rest.loss_history == full.loss_history


def _const_dataset(c, h=8, K=3):
    from ptyff.fields import DiffractionDataset, ScanPositions
    pos = ScanPositions(np.array([[0, 0], [2, 3], [4, 1]][:K]))
    return DiffractionDataset(np.full((K, h, h), c), pos, 1e-9, 0.1, 1e-8)


def test_sharp_init_constant_patterns_against_dft_oracle():
    from oracles import naive_centered_dft
    c = 2.25
    probe = sharp_probe_init(_const_dataset(c), 1, 100.0)[0]
    # the real-space probe must transform back to amplitude sqrt(c), zero phase
    np.testing.assert_allclose(naive_centered_dft(probe), np.full((8, 8), np.sqrt(c)), atol=1e-12)
    expected = np.zeros((8, 8))
    expected[4, 4] = np.sqrt(c) * 8
    np.testing.assert_allclose(probe, expected, atol=1e-12)


def test_sharp_init_modes_and_zero_rejection():
    p = sharp_probe_init(_const_dataset(1.0), 3, 100.0)
    power = np.sum(abs(p) ** 2, axis=(1, 2))
    np.testing.assert_allclose(power / power[0], [1, 1e-2, 1e-4], rtol=1e-12)
    with pytest.raises(ValueError):
        sharp_probe_init(_const_dataset(0.0), 1, 100.0)


def test_support_brute_force_and_idempotent():
    ones = np.ones((1, 8, 8))
    p = apply_probe_support(ones, 1.0)
    count = sum((i - 4) ** 2 + (j - 4) ** 2 <= 1 for i in range(8) for j in range(8))
    assert p.sum() == count == 5
    np.testing.assert_array_equal(apply_probe_support(p, 1.0), p)
    np.testing.assert_array_equal(apply_probe_support(ones, 8 * np.sqrt(2)), ones)


def test_object_frame_arithmetic_and_zero_init():
    data = _const_dataset(1.0, h=2)
    obj = init_object(data, pad=2, init_amplitude=0.0)
    # max_row 4 + h 2 + 2*2 ; max_col 3 + h 2 + 2*2
    assert obj.shape == (10, 9) and not obj.any()


def test_zero_iterations(small):
    data, _, physics, ecfg = small
    st = run(data, replace(ecfg, iterations=0, i_ml=None), physics)
    assert st.loss_history == [] and st.iteration == 0


def test_untouched_pad_stays_zero(small):
    data, _, physics, ecfg = small
    st = run(data, replace(ecfg, i_ml=None), physics)
    pad = ecfg.object_pad
    ring = np.ones(st.object.shape, bool)
    ring[pad:-pad, pad:-pad] = False
    assert np.all(st.object[ring] == 0)


def test_doubling_operator(small):
    data, _, physics, ecfg = small
    st = init_state(data, ecfg, physics)
    before = st.object.copy()
    apply_fast_forward(st, lambda o: 2 * o)
    np.testing.assert_array_equal(st.object, 2 * before)
    assert st.adam_object.step_count == 0 and not st.adam_object.m1.any()


def test_nll_curve_indexing(small):
    data, _, physics, ecfg = small
    st = run(data, ecfg, physics)
    nll = st.nll_curve()
    assert len(nll) == ecfg.iterations + 1
    assert nll[3] == st.loss_history[2][2] and nll[0] == st.initial_nll
