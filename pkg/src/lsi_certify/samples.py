"""Random smooth test functions for the sampled property checks."""

from __future__ import annotations

import numpy as np

from .discretization import Grid


def random_smooth(g: Grid, rng: np.random.Generator, terms: int = 4, amplitude: float = 0.5,
                  positive: bool = True) -> np.ndarray:
    """A random trigonometric profile, exponentiated when ``positive``.

    Frequencies are scaled to the grid radius so every profile is well
    resolved; the exponentiated form stays between ``exp(-terms * amplitude)``
    and ``exp(terms * amplitude)``.
    """
    s = np.zeros(g.size)
    for k in range(1, terms + 1):
        coef = rng.normal(0.0, amplitude / np.sqrt(k))
        freq = rng.uniform(0.5, 1.0) * k * np.pi / g.radius
        phase = rng.uniform(0, 2 * np.pi)
        direction = rng.normal(size=g.dim)
        direction /= np.linalg.norm(direction)
        s += np.clip(coef, -amplitude, amplitude) * np.sin(freq * (g.nodes @ direction) + phase)
    return np.exp(s) if positive else s


def bump_profile(g: Grid, amplitude: float = 0.5) -> np.ndarray:
    """``1 + amplitude sin(x)`` along the first axis: positive and bounded."""
    return 1.0 + amplitude * np.sin(g.nodes[:, 0])
