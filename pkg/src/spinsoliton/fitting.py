"""Power-law fits in log-log coordinates and finite-difference smoothness probes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ``y ~ amplitude * t**exponent`` on a window."""

    exponent: float
    amplitude: float
    residual: float
    window: tuple[float, float]
    n_samples: int

    def within(self, lo: float, hi: float) -> bool:
        return lo <= self.exponent <= hi


def fit_power_law(t, y, window=None, scale=None, floor_factor=1e3) -> DecayFit:
    """Fit ``log y = log amplitude + exponent * log t`` on ``window``.

    ``residual`` is the max absolute log deviation from the fitted line.
    Samples below ``floor_factor * eps * scale`` are refused (``scale``
    defaults to the largest |y| in the window).
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if window is None:
        window = (float(t.min()), float(t.max()))
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if not sel.any():
        raise FitError(f"empty fit window {window}")
    ts, ys = t[sel], y[sel]
    if ts.size < 8:
        raise FitError(f"need at least 8 samples in window, got {ts.size}")
    if np.any(ts <= 0):
        raise FitError("abscissae must be positive")
    if scale is None:
        scale = float(ys.max())
    floor = floor_factor * EPS * scale
    if np.any(ys <= floor):
        raise FitError(f"samples below numerical floor {floor:.3e}")
    lt, ly = np.log(ts), np.log(ys)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = float(np.max(np.abs(ly - (intercept + slope * lt))))
    return DecayFit(float(slope), float(np.exp(intercept)), resid, (lo, hi), int(ts.size))


_CENTRAL = {
    1: (np.array([-0.5, 0.0, 0.5]), np.array([-1, 0, 1])),
    2: (np.array([1.0, -2.0, 1.0]), np.array([-1, 0, 1])),
}


@dataclass(frozen=True)
class ProbeResult:
    value: complex
    error: float


def central_difference(f: Callable, x: float, order: int, h: float):
    weights, offsets = _CENTRAL[order]
    vals = [f(x + o * h) for o in offsets]
    return sum(w * v for w, v in zip(weights, vals)) / h**order


def smoothness_probe(f: Callable, x: float, order: int = 1, h: float = 1e-3,
                     domain: tuple[float, float] | None = None) -> ProbeResult:
    """Central difference of order 1 or 2 with a Richardson error estimate.

    The estimate is ``|D_h - D_{h/2}| / 3``; the returned value is ``D_{h/2}``.
    """
    if order not in _CENTRAL:
        raise ValueError("order must be 1 or 2")
    if domain is not None and (x - h < domain[0] or x + h > domain[1]):
        raise ValueError(f"stencil [{x - h}, {x + h}] leaves domain {domain}")
    d1 = central_difference(f, x, order, h)
    d2 = central_difference(f, x, order, h / 2)
    return ProbeResult(complex(d2), float(abs(d1 - d2) / 3))


def envelope(t, y, half_width: float) -> np.ndarray:
    """Sliding maximum of ``|y|`` over ``[t - half_width, t + half_width]``.

    Oscillating decays cross zero; the envelope keeps the log-log fit finite.
    ``t`` must be sorted.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(y))
    lo = np.searchsorted(t, t - half_width, side="left")
    hi = np.searchsorted(t, t + half_width, side="right")
    return np.array([a[i:j].max() for i, j in zip(lo, hi)])
