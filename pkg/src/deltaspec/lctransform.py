"""Positive-function substitution carrying -y'' + q y = lambda y into the
weighted form -(P z')' + Q z = lambda W z with z = y/g.

P = W = g^2 and Q = g * (-g'' + q g).  On a finite truncation with the
Dirichlet condition z(b) = 0 the substitution preserves eigenvalues exactly
(z(b) = 0 iff y(b) = 0), which is the cross-check this module ships.

Right boundary convention: angle beta in (0, pi] with the n-th eigenvalue
characterized by the phase condition theta(b) = beta + (n-1)*pi, where
z = rho*sin(theta) and P z' = rho*cos(theta).  So beta = pi is Dirichlet
(z(b) = 0) and beta = pi/2 is the Neumann-type condition P z'(b) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .errors import ConfigError, NoEigenvalueBelowFloor
from .model import Potential, SolverConfig
from .propagate import _EDGE_NUDGE, grid_steps

_PI = math.pi


@dataclass(frozen=True, eq=False)
class WeightedProblem:
    """Coefficient triple of the weighted problem, plus the generating g.

    P and W coincide by construction; g is kept for the back-substitution
    y = g * z.
    """

    P: Callable[[np.ndarray], np.ndarray]
    Q: Callable[[np.ndarray], np.ndarray]
    W: Callable[[np.ndarray], np.ndarray]
    g: Potential
    beta: float = _PI

    def export_csv(self, path, b: float, h: float) -> None:
        """Coefficient columns on the integration grid, for inspection."""
        n, heff = grid_steps(0.0, b, h)
        xs = heff * np.arange(n + 1)
        p, qq, w = self.P(xs), self.Q(xs), self.W(xs)
        with open(path, "w") as fh:
            fh.write("x,P,Q,W\n")
            for row in zip(xs, p, qq, w):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def transform(q: Potential, g: Potential, cfg: SolverConfig,
              beta: float = _PI) -> WeightedProblem:
    """Build the weighted coefficients from a strictly positive, twice
    differentiable g."""
    if not (0.0 < beta <= _PI):
        raise ConfigError("boundary angle beta must lie in (0, pi]")
    n = max(2, int(math.ceil(cfg.b / cfg.h)))
    xs = np.linspace(0.0, cfg.b, n + 1)
    gv = np.asarray(g(xs), dtype=float)
    if not np.all(np.isfinite(gv)):
        raise ConfigError("g is not finite everywhere on [0, b]")
    if not np.all(gv > 0):
        bad = xs[gv <= 0][0]
        raise ConfigError(f"g must be strictly positive; g({bad:.6g}) <= 0")
    g2 = g.second_derivative()  # raises for linear tables / indicator forms

    def P(x):
        v = np.asarray(g(x), dtype=float)
        return v * v

    def Q(x):
        x = np.asarray(x, dtype=float)
        gx = np.asarray(g(x), dtype=float)
        return gx * (-g2(x) + np.asarray(q(x), dtype=float) * gx)

    return WeightedProblem(P=P, Q=Q, W=P, g=g, beta=beta)


def _weighted_coeffs(wp: WeightedProblem, b: float, h: float):
    n, heff = grid_steps(0.0, b, h)
    base = heff * np.arange(n)
    pts = np.empty(3 * n)
    pts[0::3] = base + heff * _EDGE_NUDGE
    pts[1::3] = base + heff * 0.5
    pts[2::3] = base + heff * (1.0 - _EDGE_NUDGE)
    p = np.asarray(wp.P(pts), dtype=float)
    qq = np.asarray(wp.Q(pts), dtype=float)
    w = np.asarray(wp.W(pts), dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(p > 0)):
        raise ConfigError("P must be finite and strictly positive on [0, b]")
    if not (np.all(np.isfinite(qq)) and np.all(np.isfinite(w)) and np.all(w > 0)):
        raise ConfigError("Q and W must be finite (W positive) on [0, b]")
    return p, qq, w, heff


def weighted_eigen(wp: WeightedProblem, b: float, h: float, n: int = 1,
                   *, ceiling: Optional[float] = None) -> float:
    """n-th eigenvalue of -(P z')' + Q z = lambda W z, z(0) = 0, with the
    right boundary set by wp.beta (see module docstring)."""
    if n < 1:
        raise ConfigError("eigenvalue index n must be >= 1")
    p, qq, w, heff = _weighted_coeffs(wp, b, h)
    a = 1.0 / p
    target = wp.beta + (n - 1) * _PI

    def theta(lam: float) -> float:
        return float(_kernels.rk4_prufer(a, lam * w - qq, heff, 0.0))

    ratio = qq / w
    qmin = float(np.min(ratio))
    scale = max(1.0, abs(qmin))
    lo = qmin - max(1.0, (_PI / b) ** 2)
    step = scale
    for _ in range(80):
        if theta(lo) < target:
            break
        lo -= step
        step *= 2.0
    else:
        raise ConfigError("could not find a lower bracket for the weighted search")

    if ceiling is not None:
        hi = ceiling
        if theta(hi) < target:
            raise NoEigenvalueBelowFloor(
                f"no weighted eigenvalue with index {n} below {ceiling:.6g} "
                f"on [0, {b:g}]", floor=ceiling, b=b,
            )
    else:
        hi = qmin + 5.0 * scale
        for _ in range(200):
            if theta(hi) >= target:
                break
            hi = qmin + 2.0 * (hi - qmin)
        else:
            raise ConfigError("weighted eigenvalue ceiling expansion failed")

    return float(brentq(lambda lam: theta(lam) - target, lo, hi,
                        xtol=1e-13 * scale, rtol=4.0 * np.finfo(float).eps,
                        maxiter=200))
