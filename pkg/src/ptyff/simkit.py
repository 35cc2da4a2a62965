"""Synthetic ptychography datasets with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from .fields import DiffractionDataset, ScanPositions
from .forward import PhysicsConfig, model_intensity

__all__ = [
    "SimConfig",
    "GroundTruth",
    "make_ground_truth",
    "raster_positions",
    "synthesize",
    "make_corpus",
    "footprint_coverage",
]


def _default_physics() -> PhysicsConfig:
    return PhysicsConfig(wavelength=1e-9, fresnel_distance=25e-6, pixel_size=4e-8, mode_count=1)


@dataclass(frozen=True)
class SimConfig:
    object_size: int = 96
    probe_size: int = 32
    scan_step: int = 8
    aperture_radius: float = 12.0
    probe_amplitude: float = 1.0
    photons_per_pattern: float | None = None
    mode_count: int = 1
    texture_seed: int = 0
    texture_sigma: float = 1.5
    n_particles: int = 12
    detector_distance: float = 0.1
    physics: PhysicsConfig = field(default_factory=_default_physics)

    def __post_init__(self):
        if self.scan_step >= self.probe_size:
            raise ValueError("scan_step must be smaller than probe_size for overlap")
        if not 0 < self.aperture_radius < self.probe_size / 2:
            raise ValueError("aperture_radius must lie in (0, probe_size/2)")
        if self.object_size < self.probe_size:
            raise ValueError("object must be at least as large as the probe")
        if self.mode_count < 1:
            raise ValueError("mode_count must be >= 1")
        if self.photons_per_pattern is not None and not self.photons_per_pattern > 0:
            raise ValueError("photons_per_pattern must be positive or None")
        if self.physics.mode_count != self.mode_count:
            object.__setattr__(self, "physics", replace(self.physics, mode_count=self.mode_count))


@dataclass(frozen=True)
class GroundTruth:
    object: np.ndarray   # (N, N) complex, same frame the positions index
    probe: np.ndarray    # (M, h, w) complex, reference plane (before Fresnel)


def _unit_field(rng, shape, sigma) -> np.ndarray:
    f = gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    f -= f.min()
    return f / max(f.max(), 1e-300)


def _texture(rng, n, sigma, n_particles) -> np.ndarray:
    """Smooth background plus a few soft-edged particles, scaled to [0, 1]."""
    base = _unit_field(rng, (n, n), sigma)
    yy, xx = np.mgrid[:n, :n]
    blobs = np.zeros((n, n))
    for _ in range(n_particles):
        cy, cx = rng.uniform(0, n, size=2)
        rad = rng.uniform(2.0, 7.0)
        d = np.hypot(yy - cy, xx - cx)
        blobs = np.maximum(blobs, 1.0 / (1.0 + np.exp((d - rad) / 0.8)))
    t = 0.5 * base + 0.5 * blobs
    t -= t.min()
    return t / max(t.max(), 1e-300)


def make_ground_truth(cfg: SimConfig) -> GroundTruth:
    rng = np.random.default_rng(cfg.texture_seed)
    n = cfg.object_size
    amp = 0.5 + 0.5 * _texture(rng, n, cfg.texture_sigma, cfg.n_particles)
    phase = np.pi * (_texture(rng, n, cfg.texture_sigma, cfg.n_particles) - 0.5)
    obj = amp * np.exp(1j * phase)

    h = cfg.probe_size
    c = h // 2
    yy, xx = np.mgrid[:h, :h]
    aperture = (np.hypot(yy - c, xx - c) <= cfg.aperture_radius).astype(np.complex128)
    modes = [cfg.probe_amplitude * aperture]
    p0_power = np.sum(np.abs(modes[0]) ** 2)
    for m in range(1, cfg.mode_count):
        pert = aperture * (rng.standard_normal((h, h)) + 1j * rng.standard_normal((h, h)))
        pert = gaussian_filter(pert.real, 1.0) + 1j * gaussian_filter(pert.imag, 1.0)
        for prev in modes:
            pert = pert - np.vdot(prev, pert) / np.vdot(prev, prev) * prev
        pert *= np.sqrt(p0_power * 10.0 ** (-2 * m) / np.sum(np.abs(pert) ** 2))
        modes.append(pert)
    return GroundTruth(obj, np.stack(modes))


def raster_positions(object_size: int, probe_size: int, step: int) -> np.ndarray:
    ticks = np.arange(0, object_size - probe_size + 1, step)
    rr, cc = np.meshgrid(ticks, ticks, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.int64)


def footprint_coverage(object_size: int, probe_size: int, positions) -> np.ndarray:
    cover = np.zeros((object_size, object_size), dtype=np.int64)
    for r, c in np.asarray(positions):
        cover[r:r + probe_size, c:c + probe_size] += 1
    return cover


def synthesize(cfg: SimConfig, noise_seed: int | None = None):
    """Simulate a dataset; returns ``(DiffractionDataset, GroundTruth)``.

    Poisson draws (when ``photons_per_pattern`` is set) use ``noise_seed``,
    defaulting to the texture seed.
    """
    truth = make_ground_truth(cfg)
    pos = raster_positions(cfg.object_size, cfg.probe_size, cfg.scan_step)
    patterns = model_intensity(truth.probe, truth.object, pos, cfg.physics)
    if cfg.photons_per_pattern is not None:
        scale = cfg.photons_per_pattern / np.mean(np.sum(patterns, axis=(1, 2)))
        rng = np.random.default_rng(cfg.texture_seed if noise_seed is None else noise_seed)
        patterns = rng.poisson(patterns * scale).astype(np.float64)
    physics = cfg.physics
    data = DiffractionDataset(
        patterns=patterns,
        positions=ScanPositions(pos),
        wavelength=physics.wavelength,
        detector_distance=cfg.detector_distance,
        pixel_size=physics.pixel_size,
        meta={
            "texture_seed": cfg.texture_seed,
            "photons_per_pattern": cfg.photons_per_pattern,
            "fresnel_distance": physics.fresnel_distance,
            "mode_count": cfg.mode_count,
        },
    )
    return data, truth


def corpus_seeds(n_datasets: int, seed: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(n_datasets)]


def make_corpus(n_datasets: int, cfg_template: SimConfig, seed: int):
    """``n_datasets`` simulated datasets with texture seeds spawned from ``seed``."""
    if n_datasets < 1:
        raise ValueError("n_datasets must be >= 1")
    return [synthesize(replace(cfg_template, texture_seed=s))
            for s in corpus_seeds(n_datasets, seed)]
