"""Independent reference implementations used only by the tests."""

import numpy as np


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def naive_centered_dft(g):
    """Unitary DFT with the origin at index n//2, summed term by term."""
    g = np.asarray(g, dtype=np.complex128)
    h, w = g.shape
    ky = np.arange(h) - h // 2
    kx = np.arange(w) - w // 2
    Fy = np.exp(-2j * np.pi * np.outer(ky, ky) / h) / np.sqrt(h)
    Fx = np.exp(-2j * np.pi * np.outer(kx, kx) / w) / np.sqrt(w)
    return Fy @ g @ Fx.T


def fd_wirtinger(f, x, step=1e-6):
    """Central differences of a real scalar f at complex x, returned as
    df/dRe + i df/dIm (the convention the analytic gradients follow)."""
    x = np.array(x, dtype=np.complex128)
    out = np.zeros_like(x)
    flat = x.reshape(-1)
    res = out.reshape(-1)
    for i in range(flat.size):
        parts = []
        for d in (step, 1j * step):
            orig = flat[i]
            flat[i] = orig + d
            fp = f(x)
            flat[i] = orig - d
            fm = f(x)
            flat[i] = orig
            parts.append((fp - fm) / (2 * step))
        res[i] = parts[0] + 1j * parts[1]
    return out


def naive_conv3x3_same(x, w, b):
    """x (Cin, H, W), w (Cout, Cin, 3, 3): explicit loops, zero padding."""
    cin, H, W = x.shape
    cout = w.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    y = np.zeros((cout, H, W))
    for o in range(cout):
        for i in range(H):
            for j in range(W):
                y[o, i, j] = b[o] + np.sum(w[o] * xp[:, i:i + 3, j:j + 3])
    return y


def naive_unet_depth1(x, wts):
    """Depth-1 U-Net written with explicit loops (weights as float64 dict)."""
    relu = lambda a: np.maximum(a, 0)
    conv = lambda a, p: relu(naive_conv3x3_same(a, wts[p + ".weight"], wts[p + ".bias"]))
    e = conv(conv(x, "enc0.conv1"), "enc0.conv2")
    C, H, W = e.shape
    pooled = e.reshape(C, H // 2, 2, W // 2, 2).max(axis=(2, 4))
    bott = conv(conv(pooled, "bottleneck.conv1"), "bottleneck.conv2")
    wu, bu = wts["dec0.up.weight"], wts["dec0.up.bias"]       # (Cin, Cout, 2, 2)
    cout = wu.shape[1]
    up = np.zeros((cout, H, W))
    for o in range(cout):
        up[o] += bu[o]
        for i in range(H // 2):
            for j in range(W // 2):
                up[o, 2 * i:2 * i + 2, 2 * j:2 * j + 2] += np.einsum("c,cab->ab", bott[:, i, j], wu[:, o])
    d = np.concatenate([e, up])
    d = conv(conv(d, "dec0.conv1"), "dec0.conv2")
    wh, bh = wts["head.weight"], wts["head.bias"]
    return np.einsum("oc,chw->ohw", wh[:, :, 0, 0], d) + bh[:, None, None]


def random_instance(rng, modes, fresnel):
    """Small random problem: probe <= 8x8, object <= 16x16, K <= 4."""
    from ptyff.forward import PhysicsConfig

    h = int(rng.integers(3, 9))
    w = int(rng.integers(3, 9))
    H = int(rng.integers(h + 1, 17))
    W = int(rng.integers(w + 1, 17))
    K = int(rng.integers(1, 5))
    pos = np.stack([rng.integers(0, H - h + 1, K), rng.integers(0, W - w + 1, K)], axis=1)
    probe = crandn(rng, modes, h, w)
    obj = crandn(rng, H, W)
    patterns = rng.uniform(0.5, 4.0, size=(K, h, w)) * np.abs(crandn(rng, K, h, w)) ** 2
    z = float(rng.uniform(5e-6, 5e-5)) if fresnel else 0.0
    phys = PhysicsConfig(wavelength=1e-9, fresnel_distance=z, pixel_size=1e-8, mode_count=modes)
    return probe, obj, patterns, pos, phys


def relative_linf(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def unet_fd_error(cfg, dtype, rng, n_check=6, step=1e-5):
    """Analytic grads (in ``dtype``) against float64 central differences of
    sum(y * r); errors normalized by each tensor's largest analytic entry."""
    from ptyff.ffop import init_weights, unet_backward, unet_forward

    w = init_weights(cfg, seed=3, dtype=dtype)
    x = rng.normal(size=(2, 2, 8, 8)).astype(dtype)
    r = rng.normal(size=(2, cfg.c_out, 8, 8))
    cache = {}
    unet_forward(x, w, cfg, cache=cache)
    dx, grads = unet_backward(cache, r.astype(dtype))
    w64 = {k: v.astype(np.float64) for k, v in w.items()}
    f = lambda ww, xx: float(np.sum(unet_forward(xx, ww, cfg) * r))
    worst = 0.0
    for name, g in grads.items():
        flat = w64[name].reshape(-1)
        idx = rng.choice(flat.size, size=min(n_check, flat.size), replace=False)
        fd = np.empty(len(idx))
        for j, i in enumerate(idx):
            orig = flat[i]
            flat[i] = orig + step
            fp = f(w64, x.astype(np.float64))
            flat[i] = orig - step
            fm = f(w64, x.astype(np.float64))
            flat[i] = orig
            fd[j] = (fp - fm) / (2 * step)
        full_fd_scale = max(np.max(abs(g)), 1e-12)
        worst = max(worst, np.max(abs(g.reshape(-1)[idx] - fd)) / full_fd_scale)
    xf = x.astype(np.float64).reshape(-1)
    idx = rng.choice(xf.size, size=n_check, replace=False)
    fdx = []
    for i in idx:
        orig = xf[i]
        xf[i] = orig + step
        fp = f(w64, xf.reshape(x.shape))
        xf[i] = orig - step
        fm = f(w64, xf.reshape(x.shape))
        xf[i] = orig
        fdx.append((fp - fm) / (2 * step))
    worst = max(worst, np.max(abs(dx.reshape(-1)[idx] - fdx)) / np.max(abs(dx)))
    return worst
