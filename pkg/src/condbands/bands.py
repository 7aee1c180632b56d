"""Uniform asymptotic certainty bands around local polynomial estimates.

The common ingredient is the half-width

    L(x) = sqrt( |K|_2^2 * log(1/h) / (2 n h * d0(x)) )

where d0(x) is the local moment of order zero (a kernel density estimate
of the design density at x).  Distribution bands use (1 + eps) * L(x),
regression bands on a response interval [a, b] use (b - a) * L(x), and
quantile bands use 2 * L(x) * fx / fxy with marginal and joint densities
supplied either by an oracle or by a plug-in estimate.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientLocalData,
    InvalidBandwidth,
    YRangeViolation,
    ZeroJointDensity,
)
from .estimator import (
    CdfCurve,
    EstimatorConfig,
    Sample,
    cdf_curve,
    local_moments,
    quantile_estimate,
    regression_estimate,
)

__all__ = [
    "DensityPair",
    "BandTable",
    "certainty_halfwidth",
    "band_halfwidth",
    "cdf_band",
    "regression_band",
    "quantile_band",
    "density_plugin",
]


@dataclass(frozen=True)
class DensityPair:
    """Marginal density fx at x and joint density fxy at (x, y)."""

    fx: float
    fxy: float
    source: str  # "oracle" or "plugin"


@dataclass
class BandTable:
    """Row-wise band output plus the settings that produced it.

    Parallel arrays, one entry per row; ``t`` is NaN for band kinds that
    have no response coordinate (regression, quantile).
    """

    x: np.ndarray
    t: np.ndarray
    estimate: np.ndarray
    halfwidth: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.x.size

    def to_csv(self, path_or_buf) -> None:
        """Write rows as CSV with header x,t,estimate,halfwidth,lower,upper."""
        own = isinstance(path_or_buf, (str, bytes))
        buf = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            writer = csv.writer(buf)
            writer.writerow(["x", "t", "estimate", "halfwidth", "lower", "upper"])
            for i in range(len(self)):
                t_val = "" if math.isnan(self.t[i]) else repr(float(self.t[i]))
                writer.writerow(
                    [
                        repr(float(self.x[i])),
                        t_val,
                        repr(float(self.estimate[i])),
                        repr(float(self.halfwidth[i])),
                        repr(float(self.lower[i])),
                        repr(float(self.upper[i])),
                    ]
                )
        finally:
            if own:
                buf.close()

    def to_json(self) -> str:
        rows = []
        for i in range(len(self)):
            rows.append(
                {
                    "x": float(self.x[i]),
                    "t": None if math.isnan(self.t[i]) else float(self.t[i]),
                    "estimate": float(self.estimate[i]),
                    "halfwidth": float(self.halfwidth[i]),
                    "lower": float(self.lower[i]),
                    "upper": float(self.upper[i]),
                }
            )
        return json.dumps(
            {"metadata": self.metadata, "rows": rows}, sort_keys=True, indent=2
        )


def certainty_halfwidth(
    l2_norm_sq: float, bandwidth: float, n: int, density_at_x: float,
    denom_tol: float = 1e-12,
) -> float:
    """The half-width formula on raw inputs; validates h and the density."""
    if not 0.0 < bandwidth < 1.0:
        raise InvalidBandwidth(
            f"half-width needs log(1/h) > 0, got bandwidth {bandwidth!r}"
        )
    if density_at_x <= denom_tol:
        raise InsufficientLocalData(
            f"design density estimate {density_at_x:.3e} too small for a band"
        )
    log_inv_h = math.log(1.0 / bandwidth)
    return math.sqrt(l2_norm_sq * log_inv_h / (2.0 * n * bandwidth * density_at_x))


def band_halfwidth(sample: Sample, x: float, cfg: EstimatorConfig) -> float:
    """L(x) evaluated from the sample at ``x`` under ``cfg``."""
    d0 = float(local_moments(sample, x, cfg, jmax=0)[0])
    return certainty_halfwidth(
        cfg.kernel.l2_norm_sq, cfg.bandwidth, sample.n, d0, cfg.denom_tol
    )


def _common_metadata(sample: Sample, cfg: EstimatorConfig, kind: str) -> dict:
    return {
        "kind": kind,
        "order": cfg.order,
        "kernel": cfg.kernel.name,
        "bandwidth": cfg.bandwidth,
        "n": sample.n,
    }


def cdf_band(
    sample: Sample,
    x_grid: Sequence[float],
    t_grid,
    cfg: EstimatorConfig,
    epsilon: float = 0.0,
    clip: bool = True,
) -> BandTable:
    """Distribution band of half-width (1 + epsilon) * L(x) per location.

    ``t_grid`` is either an explicit array of response values or the
    string "jumps", which evaluates each curve at its own jump points.
    Estimates come from the raw (non-monotonized) curve.  With ``clip``
    the interval is intersected with [0, 1]; estimates are reported as-is.
    Locations where the local fit is degenerate are skipped and recorded
    in the metadata.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon!r}")
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size == 0:
        raise ValueError("x_grid must not be empty")
    use_jumps = isinstance(t_grid, str)
    if use_jumps:
        if t_grid != "jumps":
            raise ValueError(f'unknown t_grid mode {t_grid!r}; expected "jumps"')
    else:
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.size == 0:
            raise ValueError("t_grid must not be empty")

    xs, ts, est, hw, lo, up = [], [], [], [], [], []
    skipped = []
    for x in x_grid:
        try:
            curve = cdf_curve(sample, x, cfg, monotonize=False)
            half = (1.0 + epsilon) * band_halfwidth(sample, x, cfg)
        except InsufficientLocalData:
            skipped.append(float(x))
            continue
        t_here = curve.jump_ts if use_jumps else t_grid
        e_here = curve.value_at(t_here)
        lo_here = e_here - half
        up_here = e_here + half
        if clip:
            lo_here = np.clip(lo_here, 0.0, 1.0)
            up_here = np.clip(up_here, 0.0, 1.0)
        xs.append(np.full(t_here.size, x, dtype=float))
        ts.append(np.asarray(t_here, dtype=float))
        est.append(np.asarray(e_here, dtype=float))
        hw.append(np.full(t_here.size, half, dtype=float))
        lo.append(np.asarray(lo_here, dtype=float))
        up.append(np.asarray(up_here, dtype=float))

    meta = _common_metadata(sample, cfg, "cdf")
    meta.update(
        {
            "epsilon": epsilon,
            "clipped": clip,
            "t_grid": "jumps" if use_jumps else "explicit",
            "skipped_locations": skipped,
        }
    )
    if not xs:
        raise InsufficientLocalData("every grid location had a degenerate local fit")
    return BandTable(
        x=np.concatenate(xs),
        t=np.concatenate(ts),
        estimate=np.concatenate(est),
        halfwidth=np.concatenate(hw),
        lower=np.concatenate(lo),
        upper=np.concatenate(up),
        metadata=meta,
    )


def regression_band(
    sample: Sample,
    x_grid: Sequence[float],
    cfg: EstimatorConfig,
    y_range: tuple[float, float],
) -> BandTable:
    """Regression band m_hat(x) +/- (b - a) * L(x) for responses in [a, b]."""
    a, b = float(y_range[0]), float(y_range[1])
    if not a < b:
        raise ValueError(f"y_range must satisfy a < b, got ({a}, {b})")
    if sample.ys.min() < a or sample.ys.max() > b:
        raise YRangeViolation(
            f"responses fall outside the declared range [{a}, {b}]"
        )
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size == 0:
        raise ValueError("x_grid must not be empty")

    xs, est, hw = [], [], []
    skipped = []
    for x in x_grid:
        try:
            m = regression_estimate(sample, x, cfg)
            half = (b - a) * band_halfwidth(sample, x, cfg)
        except InsufficientLocalData:
            skipped.append(float(x))
            continue
        xs.append(float(x))
        est.append(m)
        hw.append(half)
    if not xs:
        raise InsufficientLocalData("every grid location had a degenerate local fit")

    xs = np.asarray(xs)
    est = np.asarray(est)
    hw = np.asarray(hw)
    meta = _common_metadata(sample, cfg, "regression")
    meta.update({"y_range": [a, b], "skipped_locations": skipped})
    return BandTable(
        x=xs,
        t=np.full(xs.size, np.nan),
        estimate=est,
        halfwidth=hw,
        lower=est - hw,
        upper=est + hw,
        metadata=meta,
    )


def quantile_band(
    sample: Sample,
    x_grid: Sequence[float],
    alpha: float,
    cfg: EstimatorConfig,
    densities: Callable[[float, float], DensityPair],
    use_raw_curve: bool = False,
    fxy_tol: float = 1e-12,
) -> BandTable:
    """Quantile band q_hat(x) +/- 2 * L(x) * fx / fxy.

    ``densities(x, q)`` supplies the marginal/joint density pair at the
    estimated quantile.  Inversion uses the monotonized curve unless
    ``use_raw_curve`` is set.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size == 0:
        raise ValueError("x_grid must not be empty")

    xs, est, hw = [], [], []
    skipped = []
    source = None
    for x in x_grid:
        try:
            curve = cdf_curve(sample, x, cfg, monotonize=not use_raw_curve)
            q = quantile_estimate(curve, alpha)
            half_l = band_halfwidth(sample, x, cfg)
        except InsufficientLocalData:
            skipped.append(float(x))
            continue
        pair = densities(float(x), q)
        if not pair.fx > 0.0:
            raise ZeroJointDensity(
                f"marginal density {pair.fx!r} at x = {x} is not positive"
            )
        if pair.fxy <= fxy_tol:
            raise ZeroJointDensity(
                f"joint density {pair.fxy!r} at (x, q) = ({x}, {q}) below tolerance"
            )
        source = pair.source
        xs.append(float(x))
        est.append(q)
        hw.append(2.0 * half_l * pair.fx / pair.fxy)
    if not xs:
        raise InsufficientLocalData("every grid location had a degenerate local fit")

    xs = np.asarray(xs)
    est = np.asarray(est)
    hw = np.asarray(hw)
    meta = _common_metadata(sample, cfg, "quantile")
    meta.update(
        {
            "alpha": alpha,
            "density_source": source,
            "raw_curve": use_raw_curve,
            "skipped_locations": skipped,
        }
    )
    if source == "plugin":
        meta["density_note"] = (
            "plug-in densities reuse the estimation bandwidth in both coordinates"
        )
    return BandTable(
        x=xs,
        t=np.full(xs.size, np.nan),
        estimate=est,
        halfwidth=hw,
        lower=est - hw,
        upper=est + hw,
        metadata=meta,
    )


def density_plugin(sample: Sample, x: float, y: float, cfg: EstimatorConfig) -> DensityPair:
    """Kernel plug-in estimates of the marginal and joint densities.

    The joint estimate uses the product kernel with the same bandwidth in
    both coordinates.  Zero estimates are legal here; band construction
    is where positivity gets enforced.
    """
    h = cfg.bandwidth
    kx = cfg.kernel.eval((x - sample.xs) / h)
    ky = cfg.kernel.eval((y - sample.ys) / h)
    fx = float(kx.sum()) / (sample.n * h)
    fxy = float((kx * ky).sum()) / (sample.n * h * h)
    return DensityPair(fx=fx, fxy=fxy, source="plugin")
