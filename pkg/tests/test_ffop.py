import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptyff.ffop import (IdentityOperator, TrainConfig, UNetConfig, UNetOperator,
                        channels_to_complex, complex_to_channels, ff_apply, init_weights,
                        load_weights, make_training_pairs, save_weights, train_operator,
                        unet_backward, unet_forward, weight_shapes)
from ptyff.ffop.training import PairSet, split_by_dataset
from oracles import crandn, naive_unet_depth1, unet_fd_error

TINY = UNetConfig(c_base=2, depth=2)


def as64(w):
    return {k: v.astype(np.float64) for k, v in w.items()}


def test_forward_matches_naive_loops(rng):
    cfg = UNetConfig(c_base=3, depth=1)
    w = init_weights(cfg, seed=1, dtype=np.float64)
    for k in w:
        if k.endswith("bias"):
            w[k] = rng.normal(size=w[k].shape) * 0.1
    x = rng.normal(size=(2, 6, 8))
    ref = naive_unet_depth1(x, w)
    out = unet_forward(x, w, cfg)
    assert np.max(abs(out - ref)) <= 1e-5 * np.max(abs(ref))
    out32 = unet_forward(x, {k: v.astype(np.float32) for k, v in w.items()}, cfg)
    assert out32.dtype == np.float32
    assert np.max(abs(out32 - ref)) <= 1e-5 * np.max(abs(ref))


def test_backward_finite_differences_float64(rng):
    assert unet_fd_error(TINY, np.float64, rng) <= 1e-6


def test_backward_finite_differences_float32(rng):
    assert unet_fd_error(TINY, np.float32, rng) <= 1e-3


def test_backward_requires_cache():
    with pytest.raises(RuntimeError):
        unet_backward(None, np.zeros((2, 4, 4)))


@settings(max_examples=10)
@given(hm=st.integers(1, 6), wm=st.integers(1, 6), n=st.integers(1, 3))
def test_fully_convolutional_shapes(hm, wm, n):
    w = init_weights(TINY, seed=0)
    x = np.zeros((n, 2, 4 * hm, 4 * wm), np.float32)
    assert unet_forward(x, w, TINY).shape == x.shape


def test_translation_equivariance_away_from_borders(rng):
    cfg = UNetConfig(c_base=2, depth=1)
    w = init_weights(cfg, seed=2, dtype=np.float64)
    x = np.zeros((2, 24, 24))
    x[:, 8:12, 8:12] = rng.normal(size=(2, 4, 4))
    y = unet_forward(x, w, cfg)
    ys = unet_forward(np.roll(x, (2, 4), axis=(1, 2)), w, cfg)
    np.testing.assert_allclose(np.roll(y, (2, 4), axis=(1, 2))[:, 4:20, 4:20], ys[:, 4:20, 4:20],
                               atol=1e-12)


def test_indivisible_size_rejected():
    with pytest.raises(ValueError, match="divisible by 4"):
        unet_forward(np.zeros((2, 6, 8), np.float32), init_weights(TINY), TINY)


def test_weight_names_and_full_scale_config():
    names = list(weight_shapes(UNetConfig(depth=1)))
    assert names[0] == "enc0.conv1.weight" and names[-1] == "head.bias"
    full = UNetConfig.full_scale()
    assert (full.c_base, full.depth, full.divisor) == (64, 4, 16)
    assert full.channels(4) == 1024


def test_serialization_bitwise(tmp_path):
    w = init_weights(TINY, seed=5)
    save_weights(tmp_path / "w", w, TINY)
    back, cfg = load_weights(tmp_path / "w")
    assert cfg == TINY
    for k in w:
        assert back[k].dtype == np.float32 and back[k].tobytes() == w[k].tobytes()
    save_weights(tmp_path / "w2", back, cfg)
    assert (tmp_path / "w" / "weights.bin").read_bytes() == (tmp_path / "w2" / "weights.bin").read_bytes()


def test_load_rejects_truncated(tmp_path):
    save_weights(tmp_path / "w", init_weights(TINY), TINY)
    blob = (tmp_path / "w" / "weights.bin").read_bytes()
    (tmp_path / "w" / "weights.bin").write_bytes(blob[:-8])
    with pytest.raises(ValueError):
        load_weights(tmp_path / "w")


def test_channel_round_trip(rng):
    z = crandn(rng, 3, 5, 4)
    c = complex_to_channels(z)
    assert c.shape == (3, 2, 5, 4)
    np.testing.assert_array_equal(channels_to_complex(c), z)


@settings(max_examples=10)
@given(H=st.integers(3, 21), W=st.integers(3, 21), scale=st.floats(1e-3, 1e3),
       seed=st.integers(0, 1000))
def test_ff_apply_any_size_and_scale_equivariant(H, W, scale, seed):
    w = init_weights(TINY, seed=seed % 7)
    z = crandn(np.random.default_rng(seed), H, W)
    out = ff_apply(z, w, TINY)
    assert out.shape == (H, W) and out.dtype == np.complex128
    np.testing.assert_allclose(ff_apply(scale * z, w, TINY), scale * out, rtol=1e-9, atol=1e-12)


def test_ff_apply_zero_object():
    out = ff_apply(np.zeros((8, 8), complex), init_weights(TINY), TINY)
    assert np.isfinite(out).all()


def test_operators(tmp_path, rng):
    z = crandn(rng, 8, 8)
    out = IdentityOperator()(z)
    np.testing.assert_array_equal(out, z)
    assert out is not z
    w = init_weights(TINY, seed=4)
    save_weights(tmp_path / "w", w, TINY)
    op = UNetOperator.load(tmp_path / "w")
    np.testing.assert_array_equal(op(z), ff_apply(z, w, TINY))


def test_make_training_pairs_colocated(rng):
    a, b = crandn(rng, 30, 30), crandn(rng, 30, 30)
    cfg = TrainConfig(patch_size=8, patches_per_dataset=5)
    pairs = make_training_pairs(a, b, cfg, rng_seed=3, dataset_id=7)
    assert len(pairs) == 5 and set(pairs.dataset_ids) == {7}
    for k, (r, c) in enumerate(pairs.corners):
        np.testing.assert_array_equal(pairs.inputs[k], a[r:r + 8, c:c + 8])
        np.testing.assert_array_equal(pairs.targets[k], b[r:r + 8, c:c + 8])
    again = make_training_pairs(a, b, cfg, rng_seed=3, dataset_id=7)
    np.testing.assert_array_equal(again.corners, pairs.corners)
    with pytest.raises(ValueError):
        make_training_pairs(a, b[:-1], cfg, 0)


def test_split_by_dataset():
    ids = np.repeat(np.arange(100), 2)
    tr, va = split_by_dataset(ids, 0.98, np.random.default_rng(0))
    assert len(va) == 2 and len(tr) == 98 and not set(tr) & set(va)
    with pytest.warns(UserWarning, match="holding out 1"):
        tr, va = split_by_dataset(np.arange(5), 0.98, np.random.default_rng(0))
    assert len(va) == 1
    with pytest.raises(ValueError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            split_by_dataset(np.zeros(3, int), 0.98, np.random.default_rng(0))


def _identity_pairs(rng, n_sets=4, per=6, p=8):
    sets = []
    for d in range(n_sets):
        z = crandn(rng, 24, 24)
        sets.append(make_training_pairs(z, z, TrainConfig(patch_size=p, patches_per_dataset=per),
                                        rng_seed=d, dataset_id=d))
    return PairSet.concat(sets)


def test_zero_epochs_gives_initialization(rng):
    pairs = _identity_pairs(rng)
    cfg = TrainConfig(patch_size=8, epochs=0, rng_seed=9, split_fraction=0.75)
    w, log = train_operator(pairs, cfg, TINY)
    init = init_weights(TINY, seed=9)
    assert all(np.array_equal(w[k], init[k]) for k in w)
    assert log.train_loss == [] and log.initial_val_loss is not None


def test_training_reduces_validation_loss_on_identity_task(rng):
    pairs = _identity_pairs(rng)
    cfg = TrainConfig(patch_size=8, epochs=15, split_fraction=0.75, lr=3e-3)
    _, log = train_operator(pairs, cfg, TINY)
    assert log.val_loss[-1] < log.initial_val_loss
    assert len(log.val_datasets) == 1 and len(log.train_datasets) == 3


def test_train_config_checks():
    with pytest.raises(ValueError):
        TrainConfig(input_iteration=100, target_iteration=5)
    with pytest.raises(ValueError):
        TrainConfig(patch_size=6).check_unet(TINY)
    assert TrainConfig.full_scale().patch_size == 512
