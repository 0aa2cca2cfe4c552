"""Integration of -y'' + q y = lambda y and phase-based oscillation counts.

All solvers in the package sit on these primitives.  Grids are uniform with
an even number of steps (so trace-grid quadrature can use Simpson's rule);
the effective step never exceeds the requested h.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import _kernels
from .errors import ConfigError, OverflowInForbiddenRegion
from .model import Potential

# Angle slack when turning a phase into a zero count: a phase that lands
# numerically on a multiple of pi means a zero AT the endpoint, which the
# open-interval count must not include.
_ANGLE_EPS = 1e-8


def grid_steps(x0: float, x1: float, h: float) -> Tuple[int, float]:
    """Number of steps (even, >= 2) and signed effective step for [x0, x1]."""
    length = abs(x1 - x0)
    if length <= 0:
        raise ConfigError("empty integration interval")
    n = max(2, int(math.ceil(length / h - 1e-12)))
    if n % 2:
        n += 1
    return n, (x1 - x0) / n


# Fractional inward nudge applied to per-step endpoint samples; makes a
# coefficient jump sitting on a grid node read as one-sided limits.
_EDGE_NUDGE = 1e-9


@functools.lru_cache(maxsize=128)
def _half_grid_values(q: Potential, x0: float, x1: float, h: float):
    """q sampled per step as (left, mid, right) over [x0, x1]; cached."""
    n, heff = grid_steps(x0, x1, h)
    base = x0 + heff * np.arange(n)
    pts = np.empty(3 * n)
    pts[0::3] = base + heff * _EDGE_NUDGE
    pts[1::3] = base + heff * 0.5
    pts[2::3] = base + heff * (1.0 - _EDGE_NUDGE)
    with np.errstate(all="ignore"):
        vals = np.asarray(q(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise ConfigError(f"potential is not finite at x = {bad:.6g}")
    return pts, vals, n, heff


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    """Grid-sampled solution pair (y, y') of -y'' + q y = lambda y.

    xs is always increasing regardless of integration direction; init is
    the (x0, y0, dy0) triple the trace was launched from and is reproduced
    exactly at x0.
    """

    xs: np.ndarray
    ys: np.ndarray
    dys: np.ndarray
    lam: float
    direction: str
    init: Tuple[float, float, float]

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def h(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def value_at(self, x: float) -> Tuple[float, float]:
        i = int(np.argmin(np.abs(self.xs - x)))
        if abs(self.xs[i] - x) > 0.51 * self.h:
            raise ConfigError(f"x = {x} is not on the trace grid")
        return float(self.ys[i]), float(self.dys[i])

    def zero_count(self) -> int:
        """Strict sign changes of y in the open interior of the grid."""
        v = self.ys
        scale = np.max(np.abs(v))
        if scale == 0:
            return 0
        keep = np.abs(v) > 1e-13 * scale
        sign = np.sign(v[keep])
        return int(np.sum(sign[1:] * sign[:-1] < 0))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# lambda={self.lam!r} direction={self.direction} "
                     f"init=({self.init[0]!r},{self.init[1]!r},{self.init[2]!r})\n")
            fh.write("x,y,dy\n")
            for x, y, dy in zip(self.xs, self.ys, self.dys):
                fh.write(f"{float(x)!r},{float(y)!r},{float(dy)!r}\n")

    @staticmethod
    def from_csv(path) -> "SolutionTrace":
        lam = math.nan
        init = (math.nan, math.nan, math.nan)
        xs, ys, dys = [], [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    m = {}
                    for tok in line[1:].split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            m[k] = v
                    lam = float(m.get("lambda", "nan"))
                    if "init" in m:
                        init = tuple(float(v) for v in m["init"].strip("()").split(","))
                    continue
                if line.lower().startswith("x,"):
                    continue
                a, b, c = line.split(",")
                xs.append(float(a))
                ys.append(float(b))
                dys.append(float(c))
        xs = np.asarray(xs)
        direction = "forward" if abs(xs[0] - init[0]) < abs(xs[-1] - init[0]) else "backward"
        return SolutionTrace(xs, np.asarray(ys), np.asarray(dys), lam, direction, init)


@dataclass(frozen=True)
class PruferSummary:
    theta_end: float
    zero_count: int


@dataclass(frozen=True, eq=False)
class TwoPieceTrace:
    """An eigenfunction trace split at an interior node.

    left covers [0, t] and right covers [t, b]; both contain the node t, so
    one-sided derivatives at t are left.dys[-1] and right.dys[0].  For an
    unperturbed eigenfunction the two derivative values agree.
    """

    left: SolutionTrace
    right: SolutionTrace

    @property
    def t(self) -> float:
        return float(self.left.xs[-1])

    @property
    def lam(self) -> float:
        return self.left.lam

    def positions(self) -> np.ndarray:
        return np.concatenate([self.left.xs, self.right.xs[1:]])

    def values(self) -> np.ndarray:
        return np.concatenate([self.left.ys, self.right.ys[1:]])

    def value_at(self, x: float) -> float:
        piece = self.left if x <= self.t else self.right
        return piece.value_at(x)[0]

    def derivative_jump(self) -> float:
        """y'(t-0) - y'(t+0)."""
        return float(self.left.dys[-1] - self.right.dys[0])

    def max_abs_derivative(self) -> float:
        return float(max(np.max(np.abs(self.left.dys)), np.max(np.abs(self.right.dys))))

    def zero_count(self) -> int:
        v = self.values()
        scale = np.max(np.abs(v))
        if scale == 0:
            return 0
        keep = np.abs(v) > 1e-13 * scale
        sign = np.sign(v[keep])
        return int(np.sum(sign[1:] * sign[:-1] < 0))

    def squared_integral(self) -> float:
        from scipy.integrate import simpson

        return float(simpson(self.left.ys ** 2, x=self.left.xs)
                     + simpson(self.right.ys ** 2, x=self.right.xs))

    def scaled(self, factor: float) -> "TwoPieceTrace":
        def scale(tr: SolutionTrace) -> SolutionTrace:
            return SolutionTrace(xs=tr.xs, ys=tr.ys * factor, dys=tr.dys * factor,
                                 lam=tr.lam, direction=tr.direction,
                                 init=(tr.init[0], tr.init[1] * factor, tr.init[2] * factor))
        return TwoPieceTrace(left=scale(self.left), right=scale(self.right))

    def to_trace(self) -> SolutionTrace:
        """Merged trace; the split node appears twice (left then right
        derivative) whenever the derivative actually jumps there."""
        if abs(self.derivative_jump()) <= 1e-9 * max(1e-3, self.max_abs_derivative()):
            xs = self.positions()
            ys = self.values()
            dys = np.concatenate([self.left.dys, self.right.dys[1:]])
        else:
            xs = np.concatenate([self.left.xs, self.right.xs])
            ys = np.concatenate([self.left.ys, self.right.ys])
            dys = np.concatenate([self.left.dys, self.right.dys])
        return SolutionTrace(xs=xs, ys=ys, dys=dys, lam=self.lam,
                             direction="forward", init=self.left.init)


@dataclass(frozen=True, eq=False)
class ScaledShot:
    """Raw renormalized integration output, ordered along the travel
    direction (index 0 is the launch point).  True values are
    ys[i] * exp(logs[i])."""

    xs: np.ndarray
    ys: np.ndarray
    dys: np.ndarray
    logs: np.ndarray


def shoot(q: Potential, lam: float, x0: float, x1: float,
          y0: float, dy0: float, h: float) -> ScaledShot:
    """Renormalized IVP integration; never overflows, see ScaledShot."""
    lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
    half, qvals, n, heff_fwd = _half_grid_values(q, lo, hi, h)
    if x0 < x1:
        coeff = qvals - lam
        heff = heff_fwd
        xs = lo + heff_fwd * np.arange(n + 1)
    else:
        coeff = np.ascontiguousarray((qvals - lam)[::-1])
        heff = -heff_fwd
        xs = hi - heff_fwd * np.arange(n + 1)
    a = np.ones_like(coeff)
    ys, dys, logs = _kernels.rk4_linear(a, coeff, heff, y0, dy0)
    return ScaledShot(xs=xs, ys=ys, dys=dys, logs=logs)


def propagate(q: Potential, lam: float, x0: float, x1: float,
              y0: float, dy0: float, h: float) -> SolutionTrace:
    """Integrate the IVP and return a plain-valued trace.

    Raises OverflowInForbiddenRegion as soon as the solution magnitude
    leaves the representable range; the scaled machinery in shoot() is the
    renormalized restart the error message advises.
    """
    if x0 == x1:
        raise ConfigError("propagate needs x0 != x1")
    shot = shoot(q, lam, x0, x1, y0, dy0, h)
    bad = np.nonzero((shot.logs != 0.0) | ~np.isfinite(shot.ys) | ~np.isfinite(shot.dys))[0]
    if bad.size:
        last = shot.xs[max(int(bad[0]) - 1, 0)]
        raise OverflowInForbiddenRegion(
            f"solution exceeded {_kernels.RENORM_LIMIT:g} beyond x = {last:.6g}; "
            "restart from there with renormalized initial data",
            last_finite_x=float(last),
        )
    direction = "forward" if x1 > x0 else "backward"
    if direction == "forward":
        xs, ys, dys = shot.xs, shot.ys, shot.dys
    else:
        xs, ys, dys = shot.xs[::-1].copy(), shot.ys[::-1].copy(), shot.dys[::-1].copy()
    return SolutionTrace(xs=xs, ys=ys, dys=dys, lam=float(lam),
                         direction=direction, init=(float(x0), float(y0), float(dy0)))


def prufer_theta(q: Potential, lam: float, b: float, h: float,
                 theta0: float = 0.0) -> float:
    """Phase at b of the polar form y = rho*sin(theta), y' = rho*cos(theta)."""
    if b <= 0:
        raise ConfigError("prufer integration needs b > 0")
    _, qvals, _, heff = _half_grid_values(q, 0.0, b, h)
    a = np.ones_like(qvals)
    return float(_kernels.rk4_prufer(a, lam - qvals, heff, theta0))


def prufer_count(q: Potential, lam: float, b: float, h: float) -> PruferSummary:
    """Phase at b plus the number of solution zeros in the open interval (0, b).

    A phase landing within _ANGLE_EPS of a multiple of pi is a zero at the
    endpoint itself and is not counted.
    """
    theta = prufer_theta(q, lam, b, h)
    count = max(0, int(math.floor((theta - _ANGLE_EPS) / math.pi)))
    return PruferSummary(theta_end=theta, zero_count=count)


def wronskian(a: SolutionTrace, b: SolutionTrace) -> Tuple[float, float]:
    """W = a*b' - b*a' at the left shared grid point, plus its max drift.

    Both traces must carry the same spectral parameter and overlap on a
    common grid.
    """
    if not math.isclose(a.lam, b.lam, rel_tol=1e-12, abs_tol=1e-12):
        raise ConfigError("wronskian needs traces at the same lambda")
    lo = max(a.xs[0], b.xs[0])
    hi = min(a.xs[-1], b.xs[-1])
    if hi <= lo - 1e-12:
        raise ConfigError("trace grids do not overlap")
    tol = min(a.h, b.h) / 20.0
    ia = np.nonzero((a.xs >= lo - tol) & (a.xs <= hi + tol))[0]
    jb = np.searchsorted(b.xs, a.xs[ia])
    jb = np.clip(jb, 0, len(b.xs) - 1)
    # searchsorted returns the right neighbor; pick whichever side is closer
    left = np.clip(jb - 1, 0, len(b.xs) - 1)
    use_left = np.abs(b.xs[left] - a.xs[ia]) < np.abs(b.xs[jb] - a.xs[ia])
    jb = np.where(use_left, left, jb)
    ok = np.abs(b.xs[jb] - a.xs[ia]) <= tol
    ia, jb = ia[ok], jb[ok]
    if ia.size == 0:
        raise ConfigError("trace grids share no nodes")
    w = a.ys[ia] * b.dys[jb] - b.ys[jb] * a.dys[ia]
    value = float(w[0])
    return value, float(np.max(np.abs(w - value)))
