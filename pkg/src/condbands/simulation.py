"""Synthetic benchmark models with closed-form conditional laws.

Both models draw the design variable X from a standard normal.

m1: Y | X = x follows a Beta(1, 1 + x^2) law on [0, 1], so
    F(t | x) = 1 - (1 - t)^(1 + x^2) on [0, 1], with conditional mean
    1 / (2 + x^2).

m2: Y | X = x is uniform on (-|x|, |x|); at x = 0 the law degenerates to
    a point mass at 0.  The conditional mean is identically 0.

Draws are reproducible: the generator is seeded with the ``seed``
argument, which may be anything numpy accepts as a seed.  Replicated
experiments derive the stream for replication r by spawning child r of
the root seed, which never collides with the root stream itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import DensityPair
from .estimator import Sample

__all__ = [
    "SimModel",
    "sim_model",
    "draw",
    "draw_conditional",
    "true_cdf",
    "true_cdf_grid",
    "true_quantile",
    "true_regression",
    "true_densities",
    "marginal_density",
    "oracle_density_provider",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SimModel:
    kind: str

    def __post_init__(self):
        if self.kind not in ("m1", "m2"):
            raise ValueError(f"unknown model kind {self.kind!r}; expected m1 or m2")


def sim_model(kind: str) -> SimModel:
    return SimModel(kind=kind.lower())


def _y_from_uniform(kind: str, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    if kind == "m1":
        return 1.0 - (1.0 - u) ** (1.0 / (1.0 + x * x))
    return np.abs(x) * (2.0 * u - 1.0)


def draw(model: SimModel, n: int, seed) -> Sample:
    """Draw n pairs (X, Y) from the model using a seeded generator."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    u = rng.random(n)
    return Sample(xs=x, ys=_y_from_uniform(model.kind, x, u))


def draw_conditional(model: SimModel, x: float, n: int, seed) -> np.ndarray:
    """Draw n responses from the conditional law at a fixed x."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    return _y_from_uniform(model.kind, np.full(n, float(x)), u)


def true_cdf(model: SimModel, x: float, t):
    """Conditional distribution function F(t | x); t may be an array."""
    t_arr = np.asarray(t, dtype=float)
    if model.kind == "m1":
        b = 1.0 + x * x
        inner = 1.0 - (1.0 - np.clip(t_arr, 0.0, 1.0)) ** b
        out = np.where(t_arr < 0.0, 0.0, np.where(t_arr > 1.0, 1.0, inner))
    else:
        ax = abs(x)
        if ax == 0.0:
            out = np.where(t_arr >= 0.0, 1.0, 0.0)
        else:
            out = np.clip((t_arr + ax) / (2.0 * ax), 0.0, 1.0)
    return float(out) if t_arr.ndim == 0 else out


def true_cdf_grid(model: SimModel, xs, ts) -> np.ndarray:
    """Matrix F(ts[j] | xs[i]) with shape (len(xs), len(ts))."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if model.kind == "m1":
        b = 1.0 + xs * xs
        inner = 1.0 - (1.0 - np.clip(ts, 0.0, 1.0))[None, :] ** b[:, None]
        return np.where(ts < 0.0, 0.0, np.where(ts > 1.0, 1.0, inner))
    ax = np.abs(xs)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (ts[None, :] + ax) / (2.0 * ax)
    out = np.clip(ratio, 0.0, 1.0)
    degenerate = (ts[None, :] >= 0.0).astype(float)
    return np.where(ax == 0.0, degenerate, out)


def true_quantile(model: SimModel, x: float, alpha: float) -> float:
    """Conditional quantile of level alpha; the generalized inverse at x."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if model.kind == "m1":
        return 1.0 - (1.0 - alpha) ** (1.0 / (1.0 + x * x))
    return abs(x) * (2.0 * alpha - 1.0)


def true_regression(model: SimModel, x: float) -> float:
    """Conditional mean E[Y | X = x]."""
    if model.kind == "m1":
        return 1.0 / (2.0 + x * x)
    return 0.0


def marginal_density(model: SimModel, x):
    """Design density; standard normal for both models."""
    x_arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x_arr * x_arr) / _SQRT_2PI
    return float(out) if x_arr.ndim == 0 else out


def _conditional_density(model: SimModel, x: float, y: float) -> float:
    if model.kind == "m1":
        if not 0.0 <= y <= 1.0:
            return 0.0
        b = 1.0 + x * x
        return b * (1.0 - y) ** (x * x)
    ax = abs(x)
    if ax == 0.0:
        return 0.0  # point mass at 0 has no density
    return 1.0 / (2.0 * ax) if -ax < y < ax else 0.0


def true_densities(model: SimModel, x: float, y: float) -> DensityPair:
    """Oracle marginal and joint densities at (x, y)."""
    fx = marginal_density(model, x)
    return DensityPair(fx=fx, fxy=fx * _conditional_density(model, x, y), source="oracle")


def oracle_density_provider(model: SimModel):
    """Density callback for quantile bands backed by the true densities."""

    def provider(x: float, y: float) -> DensityPair:
        return true_densities(model, x, y)

    return provider
