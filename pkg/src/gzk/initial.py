"""Initial-condition library for simulation runs."""

from __future__ import annotations

import numpy as np

from . import functionals as fn
from .analysis import line_soliton
from .spectral import Field, Grid


def gaussian(grid: Grid, amplitude: float = 1.0, sigma: float = 4.0, x0: float = 0.0) -> Field:
    """a exp(-((x - x0)^2 + sigma (y - 1/2)^2)), periodized in y by summing images."""
    X, Y = grid.mesh
    env = np.zeros(grid.shape)
    for m in range(-3, 4):
        env += np.exp(-sigma * (Y - 0.5 - m) ** 2)
    return Field(grid, values=amplitude * np.exp(-((X - x0) ** 2)) * env)


def gaussian_with_mass(grid: Grid, target_mass: float, sigma: float = 4.0) -> Field:
    """Gaussian datum rescaled to a prescribed L2 mass."""
    g = gaussian(grid, 1.0, sigma)
    return g * np.sqrt(target_mass / fn.mass(g))


def perturbed_line_soliton(grid: Grid, c: float, k: int, eps: float = 0.05) -> Field:
    """Q_c(x) (1 + eps cos(2 pi y))."""
    base = line_soliton(c, k, grid)
    _, Y = grid.mesh
    return Field(grid, values=base.values * (1 + eps * np.cos(2 * np.pi * Y)))


PRESETS = ("gaussian", "line-soliton", "perturbed-soliton")


def make_initial(preset: str, grid: Grid, k: int, **params) -> Field:
    if preset == "gaussian":
        if params.get("mass") is not None:
            return gaussian_with_mass(grid, params["mass"], params.get("sigma", 4.0))
        return gaussian(grid, params.get("amplitude", 1.0), params.get("sigma", 4.0))
    if preset == "line-soliton":
        return line_soliton(params.get("c", 1.0), k, grid)
    if preset == "perturbed-soliton":
        return perturbed_line_soliton(grid, params.get("c", 1.0), k, params.get("eps", 0.05))
    raise ValueError(f"unknown preset {preset!r}")
