"""Reproducible point-process samplers.

Every trial owns an independent, replayable stream: streams are derived
from a base seed plus the trial index through a seed sequence feeding a
counter-based generator, so trial i's cloud does not depend on how many
trials run or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .limits import RadialDensity, unit_ball_volume

RNG_ALGORITHM = "philox4x32+seedsequence"


def trial_rng(seed: int, *indices: int) -> np.random.Generator:
    """Independent stream for (seed, index path), stable across schedulers."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SamplerSpec:
    """Cloud recipe: 'poisson' draws a Poisson(size * mass(f)) count, 'iid'
    exactly size points; positions follow the density in both modes."""

    mode: str
    size: float
    density: RadialDensity
    seed: int

    def __post_init__(self):
        if self.mode not in ("poisson", "iid"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.mode == "iid":
            if self.size < 1 or self.size != int(self.size):
                raise ValueError("iid mode needs an integer count >= 1")
        elif self.size < 0:
            raise ValueError("poisson intensity must be nonnegative")


def _density_mass(density: RadialDensity) -> float:
    if density.kind != "table":
        return 1.0
    d = density.dim
    r = np.linspace(0.0, density.support_radius(), 4097)
    g = density.f_radial(r) * r ** (d - 1)
    total = float(np.sum((g[1:] + g[:-1]) * np.diff(r) / 2))
    return d * unit_ball_volume(d) * total


def _radial_positions(density: RadialDensity, n: int, rng: np.random.Generator):
    d = density.dim
    if density.kind == "gaussian":
        return rng.standard_normal((n, d))
    if density.kind == "uniform_ball":
        radii = density.radius * rng.random(n) ** (1.0 / d)
    else:
        # inverse transform on the radial mass of the piecewise-linear table
        grid = np.linspace(0.0, density.support_radius(), 4097)
        g = density.f_radial(grid) * grid ** (d - 1)
        cdf = np.concatenate([[0.0], np.cumsum((g[1:] + g[:-1]) * np.diff(grid) / 2)])
        if cdf[-1] <= 0:
            return np.empty((0, d))
        cdf /= cdf[-1]
        radii = np.interp(rng.random(n), cdf, grid)
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return radii[:, None] * dirs


def sample(spec: SamplerSpec, trial=0) -> np.ndarray:
    """Draw one cloud for the given trial index (an int or an index path)."""
    path = (trial,) if isinstance(trial, int) else tuple(trial)
    rng = trial_rng(spec.seed, *path)
    density = spec.density
    if spec.mode == "poisson":
        n = int(rng.poisson(spec.size * _density_mass(density)))
    else:
        n = int(spec.size)
    pts = _radial_positions(density, n, rng)
    if len(pts) and density.frame is not None:
        a, b = density.frame
        pts = np.linalg.solve(a, (pts - b).T).T
    return pts


def poisson_rectangle(
    rng: np.random.Generator,
    x_lo: float,
    x_hi: float,
    y_lo: float,
    y_hi: float,
    intensity: float = 1.0,
) -> np.ndarray:
    """Unit-intensity (by default) Poisson cloud on an open axis box."""
    area = (x_hi - x_lo) * (y_hi - y_lo)
    if area < 0:
        raise ValueError("empty rectangle")
    n = int(rng.poisson(intensity * area))
    pts = np.empty((n, 2))
    pts[:, 0] = x_lo + (x_hi - x_lo) * rng.random(n)
    pts[:, 1] = y_lo + (y_hi - y_lo) * rng.random(n)
    return pts
