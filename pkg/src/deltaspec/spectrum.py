"""Eigenvalues of the unperturbed half-line problem via truncation.

The n-th Dirichlet eigenvalue on [0, b] is the unique lambda whose phase
reaches n*pi at b; it is bracketed and polished to near machine precision
(the tightness matters downstream: slope tables difference eigenvalues, and
root noise would be amplified by the reconstruction stencils).  The
half-line value is the b-escalation limit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConfigError,
    NoEigenvalueBelowFloor,
    NonConvergentTruncation,
    UnsupportedPotentialError,
)
from .model import HypothesisClass, Potential, SolverConfig, classify, probe_potential
from .propagate import SolutionTrace, _half_grid_values, prufer_theta
from .weyl import assemble_two_piece

_PI = math.pi


@dataclass(frozen=True, eq=False)
class EigenResult:
    lambda_1: float
    b_used: float
    iterations: int
    converged: bool
    eigenfunction: SolutionTrace
    b_delta: float = math.nan  # |lambda(b) - lambda(b/growth)| actually achieved


def _grid_min(q: Potential, b: float, h: float) -> float:
    _, vals, _, _ = _half_grid_values(q, 0.0, b, h)
    return float(np.min(vals))


def eigen_truncated(q: Potential, b: float, n: int = 1, h: float = 1e-3,
                    lambda_floor: Optional[float] = None, *,
                    ceiling: Optional[float] = None) -> float:
    """n-th Dirichlet eigenvalue of -y'' + q y = lambda y on [0, b].

    When a ceiling is supplied (the essential-spectrum proxy for potentials
    that are merely bounded below), absence of the eigenvalue below it
    raises NoEigenvalueBelowFloor instead of searching past it.
    """
    if n < 1:
        raise ConfigError("eigenvalue index n must be >= 1")
    if b <= 0:
        raise ConfigError("truncation radius must be positive")
    target = n * _PI

    def theta(lam: float) -> float:
        return prufer_theta(q, lam, b, h)

    qmin = _grid_min(q, b, h)
    scale = max(1.0, abs(qmin))
    lo = lambda_floor if lambda_floor is not None else qmin - max(1.0, (_PI / b) ** 2)
    step = scale
    for _ in range(80):
        if theta(lo) < target:
            break
        lo -= step
        step *= 2.0
    else:
        raise ConfigError("could not find a lower bracket for the eigenvalue search")

    if ceiling is not None:
        hi = ceiling
        if theta(hi) < target:
            raise NoEigenvalueBelowFloor(
                f"no eigenvalue with index {n} below the essential-spectrum "
                f"floor {ceiling:.6g} on [0, {b:g}]",
                floor=ceiling, b=b,
            )
    else:
        hi = qmin + 5.0 * scale
        for _ in range(200):
            if theta(hi) >= target:
                break
            hi = qmin + 2.0 * (hi - qmin)
        else:
            raise ConfigError("eigenvalue search ceiling expansion failed")

    return float(brentq(lambda lam: theta(lam) - target, lo, hi,
                        xtol=1e-13 * scale, rtol=4.0 * np.finfo(float).eps,
                        maxiter=200))


@functools.lru_cache(maxsize=512)
def _eigen_truncated_cached(q: Potential, b: float, n: int, h: float,
                            ceiling: Optional[float]) -> float:
    return eigen_truncated(q, b, n, h, ceiling=ceiling)


def essential_floor(q: Potential, cfg: SolverConfig) -> float:
    """Infimum of q over the probe grid, tail scan included."""
    return probe_potential(q, cfg).floor


def first_eigenvalue(q: Potential, cfg: SolverConfig,
                     hypothesis: Optional[HypothesisClass] = None) -> EigenResult:
    """First eigenvalue of the half-line problem, with b-escalation.

    Escalates b by cfg.b_growth until successive truncated values agree to
    cfg.eig_tol.  For potentials that are bounded below but not confining,
    only eigenvalues below the tail infimum of q (the essential-spectrum
    proxy) are meaningful; their absence raises NoEigenvalueBelowFloor.
    """
    hyp = hypothesis if hypothesis is not None else classify(q, cfg)
    if not hyp.is_h1:
        raise UnsupportedPotentialError(
            f"first_eigenvalue needs an H1-class potential, got {hyp.variant}: {hyp.notes}"
        )
    probe = probe_potential(q, cfg)
    gate = hyp.variant == "H1_BoundedBelow"
    ceiling = probe.tail_floor if gate else None

    b = cfg.b
    lam = _eigen_truncated_cached(q, b, 1, cfg.h, ceiling)
    iterations = 1
    delta = math.inf
    converged = False
    while b * cfg.b_growth <= cfg.b_max * (1 + 1e-12):
        b_next = b * cfg.b_growth
        lam_next = _eigen_truncated_cached(q, b_next, 1, cfg.h, ceiling)
        iterations += 1
        delta = abs(lam_next - lam)
        lam, b = lam_next, b_next
        if delta < cfg.eig_tol:
            converged = True
            break
    if not converged:
        if iterations == 1:
            raise NonConvergentTruncation(
                f"truncation cannot be verified: b_max = {cfg.b_max:g} leaves "
                f"no room to escalate beyond b = {b:g}", b=b, delta=delta,
            )
        raise NonConvergentTruncation(
            f"truncated eigenvalue still moving by {delta:.3g} at b = {b:g} "
            f"(cap {cfg.b_max:g})",
            b=b, delta=delta,
        )
    if gate and not (lam < ceiling - cfg.eig_tol):
        raise NoEigenvalueBelowFloor(
            f"first eigenvalue {lam:.9g} does not lie below the "
            f"essential-spectrum floor {ceiling:.6g}",
            floor=ceiling, b=b,
        )

    assembled = assemble_two_piece(q, lam, b, cfg.h, t_idx=None, r=0.0)
    return EigenResult(
        lambda_1=float(lam),
        b_used=float(b),
        iterations=iterations,
        converged=converged,
        eigenfunction=assembled.phi0.to_trace(),
        b_delta=float(delta),
    )
