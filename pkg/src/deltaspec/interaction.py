"""First eigenvalue function lambda(t, r) of the delta-perturbed problems.

A coupling -r*delta(x-t) leaves the equation untouched away from t and
imposes the derivative jump y'(t-0) - y'(t+0) = r*y(t).  With phi the
left solution (phi(0)=0, phi'(0)=1) and Psi = chi/m the normalized right
solution, the perturbed eigenvalue is the root of

    F(lambda) = r * phi(t,lambda) * Psi(t,lambda) - 1/m(lambda).

Root location works on the equivalent function

    G(lambda) = r * phi(t,lambda) * chi(t,lambda)/chi(0,lambda) - 1,

which has the same zeros wherever m is finite and nonzero but no spurious
pole where m crosses zero, and grows to +inf at the unperturbed eigenvalue.
Scanning leftward from just below that eigenvalue therefore brackets the
largest root, the continuous continuation of lambda(t, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import (
    BracketFailure,
    ConfigError,
    NoEigenvalueBelowFloor,
    NonConvergentTruncation,
    UnsupportedPotentialError,
)
from .model import HypothesisClass, Potential, SolverConfig, classify, probe_potential
from .propagate import TwoPieceTrace, grid_steps, shoot
from .spectrum import _eigen_truncated_cached, first_eigenvalue
from .weyl import assemble_two_piece, chi_shot, u_of_lambda

_EXP_CLIP = 700.0


@dataclass(frozen=True, eq=False)
class PerturbedEigen:
    """First eigenvalue and eigenfunction of one perturbed problem.

    t is the interaction position snapped to the integration grid; phi0 is
    the normalized two-piece eigenfunction whose derivative jumps by
    r*phi0(t) at t; c_factor is the matching constant phi(t)/Psi(t)."""

    t: float
    r: float
    lambda_tr: float
    phi0: TwoPieceTrace
    c_factor: float
    jump_residual: float
    b_used: float
    lambda_1: float


def _t_index(t: float, b: float, h: float) -> Tuple[int, float, int]:
    n, heff = grid_steps(0.0, b, h)
    ti = int(round(t / heff))
    if not 1 <= ti <= n - 1:
        raise ConfigError(f"interaction position t = {t:g} must lie inside (0, {b:g})")
    return ti, heff, n


def _log_signed(x: float) -> Tuple[float, float]:
    return math.copysign(1.0, x), math.log(abs(x) + 1e-300)


def _matching_g(q: Potential, lam: float, ti: int, r: float,
                b: float, h: float) -> float:
    """G = r*phi(t)*chi(t)/chi(0) - 1, saturating instead of overflowing."""
    fwd = shoot(q, lam, 0.0, b, 0.0, 1.0, h)
    chi = chi_shot(q, lam, b, h)
    phi_t = float(fwd.ys[ti])
    chi_t = float(chi.ys[ti])
    chi_0 = chi.chi0
    if chi_0 == 0.0:
        return math.inf  # lambda sits exactly on the truncated eigenvalue
    s1, l1 = _log_signed(phi_t)
    s2, l2 = _log_signed(chi_t)
    s3, l3 = _log_signed(chi_0)
    exponent = (math.log(r) + l1 + fwd.logs[ti]
                + l2 + chi.logs[ti] - l3 - chi.log0)
    term = s1 * s2 * s3 * math.exp(min(exponent, _EXP_CLIP))
    return term - 1.0


def matching_residual(q: Potential, t: float, r: float, lam: float,
                      b: float, h: float) -> float:
    """F = r*phi(t)*Psi(t) - 1/m at the given lambda (scale-safe).

    Requires m to be finite at lambda; a truncated eigenvalue raises
    PoleAtLambda (root location works on an equivalent pole-free form)."""
    ti, _, _ = _t_index(t, b, h)
    fwd = shoot(q, lam, 0.0, b, 0.0, 1.0, h)
    chi = chi_shot(q, lam, b, h)
    chi.ensure_no_eigen_pole()
    inv_m = chi.inv_m()
    psi_t = chi.psi_weyl_at(ti)
    phi_t = float(fwd.ys[ti] * math.exp(min(fwd.logs[ti], _EXP_CLIP)))
    return r * phi_t * psi_t - inv_m


def _resolve_r_cap(cfg: SolverConfig, lam1: float, floor: float) -> float:
    if cfg.r_cap is not None:
        return cfg.r_cap
    return 0.2 * max(lam1 - floor, 1.0)


def _solve_matching_root(q: Potential, t: float, r: float, b: float,
                         cfg: SolverConfig, ceiling: Optional[float],
                         floor_eff: float) -> Tuple[float, int, float]:
    """Largest root of the matching equation strictly below the truncated
    unperturbed eigenvalue, at fixed truncation radius b."""
    h = cfg.h
    ti, heff, _ = _t_index(t, b, h)
    lam1 = _eigen_truncated_cached(q, b, 1, h, ceiling)

    def g(lam: float) -> float:
        return _matching_g(q, lam, ti, r, b, h)

    # Right end: G -> +inf as lambda -> lam1 from below; shrink eps until
    # the sign shows.  Failure here means the root is not resolvable at
    # working precision (r far outside the small-coupling regime).
    eps = max(cfg.eig_tol, 1e-10 * max(1.0, abs(lam1)))
    g_hi = -1.0
    lam_hi = lam1 - eps
    for _ in range(60):
        lam_hi = lam1 - eps
        g_hi = g(lam_hi)
        if g_hi > 0.0:
            break
        if eps < 64.0 * np.finfo(float).eps * max(1.0, abs(lam1)):
            raise BracketFailure(
                f"no sign change below the unperturbed eigenvalue at t={t:g}, "
                f"r={r:g}: the coupling is outside the resolvable regime",
                t=t, r=r, lam_hi=lam_hi,
            )
        eps /= 4.0
    else:
        raise BracketFailure(
            f"could not find a positive matching value below lambda_1 at "
            f"t={t:g}, r={r:g}", t=t, r=r, lam_hi=lam_hi,
        )
    if g_hi == 0.0:
        return float(lam_hi), ti, lam1

    # Scan leftward in gap-scale increments; the first sign change from the
    # right brackets the largest root (the continuation of lambda(t, 0)).
    step = max(5.0 * r, 100.0 * cfg.eig_tol)
    prev = lam_hi
    lam_lo = lam_hi - step
    for k in range(240):
        if lam_lo < floor_eff:
            lam_lo = floor_eff
        g_lo = g(lam_lo)
        if g_lo == 0.0:
            return float(lam_lo), ti, lam1
        if g_lo < 0.0:
            break
        if lam_lo <= floor_eff:
            raise NoEigenvalueBelowFloor(
                f"perturbed eigenvalue at t={t:g}, r={r:g} pushed below the "
                f"search floor {floor_eff:g}; enlarge the bracket "
                "(lambda_floor) or reduce r",
                floor=floor_eff, b=b,
            )
        prev = lam_lo
        if k >= 10:
            step *= 1.5
        lam_lo -= step
    else:
        raise BracketFailure(
            f"no sign change found while scanning below lambda_1 at t={t:g}, "
            f"r={r:g}", t=t, r=r, lam_hi=prev, lam_lo=lam_lo,
        )

    root = brentq(g, lam_lo, prev, xtol=1e-13 * max(1.0, abs(lam1)),
                  rtol=4.0 * np.finfo(float).eps, maxiter=200)
    return float(root), ti, lam1


def _unperturbed_package(q: Potential, cfg: SolverConfig, t: float, r: float,
                         hyp: HypothesisClass) -> PerturbedEigen:
    fe = first_eigenvalue(q, cfg, hypothesis=hyp)
    if 0.0 < t < fe.b_used:
        ti, _, _ = _t_index(t, fe.b_used, cfg.h)
    else:
        ti = None
    assembled = assemble_two_piece(q, fe.lambda_1, fe.b_used, cfg.h, t_idx=ti, r=r)
    return PerturbedEigen(
        t=float(t), r=float(r), lambda_tr=fe.lambda_1, phi0=assembled.phi0,
        c_factor=assembled.c_factor, jump_residual=assembled.jump_residual,
        b_used=fe.b_used, lambda_1=fe.lambda_1,
    )


def lambda_tr(q: Potential, t: float, r: float, cfg: SolverConfig,
              hypothesis: Optional[HypothesisClass] = None) -> PerturbedEigen:
    """First eigenvalue of the problem perturbed by -r*delta(x-t).

    r = 0 and t = 0 short-circuit to the unperturbed eigenvalue through the
    same code path as first_eigenvalue, so those identities are exact.
    Otherwise the largest matching root below the unperturbed eigenvalue is
    located at b, re-located under b-escalation until stable to eig_tol, and
    the two-piece eigenfunction is assembled at the final radius.
    """
    if t < 0:
        raise ConfigError("interaction position t must be >= 0")
    if r < 0:
        raise ConfigError("coupling constant r must be >= 0")
    hyp = hypothesis if hypothesis is not None else classify(q, cfg)
    if not hyp.is_h1:
        raise UnsupportedPotentialError(
            f"lambda_tr needs an H1-class potential, got {hyp.variant}: {hyp.notes}"
        )
    if r == 0.0 or t == 0.0:
        return _unperturbed_package(q, cfg, t, r, hyp)
    if t >= cfg.b:
        raise ConfigError(f"t = {t:g} must lie inside (0, b = {cfg.b:g})")

    probe = probe_potential(q, cfg)
    ceiling = probe.tail_floor if hyp.variant == "H1_BoundedBelow" else None
    floor_eff = (cfg.lambda_floor if cfg.lambda_floor is not None
                 else probe.floor - max(1.0, abs(probe.floor)))

    lam1_first = _eigen_truncated_cached(q, cfg.b, 1, cfg.h, ceiling)
    r_cap = _resolve_r_cap(cfg, lam1_first, probe.floor)
    if r > r_cap:
        raise ConfigError(
            f"coupling r = {r:g} exceeds r_cap = {r_cap:g}; the first "
            "eigenvalue branch is only tracked for small couplings"
        )

    b = cfg.b
    lam, ti, lam1 = _solve_matching_root(q, t, r, b, cfg, ceiling, floor_eff)
    delta = math.inf
    converged = False
    while b * cfg.b_growth <= cfg.b_max * (1 + 1e-12):
        b_next = b * cfg.b_growth
        lam_next, ti, lam1 = _solve_matching_root(q, t, r, b_next, cfg,
                                                  ceiling, floor_eff)
        delta = abs(lam_next - lam)
        lam, b = lam_next, b_next
        if delta < cfg.eig_tol:
            converged = True
            break
    if not converged:
        raise NonConvergentTruncation(
            f"perturbed eigenvalue at t={t:g}, r={r:g} still moving by "
            f"{delta:.3g} at b = {b:g}", b=b, delta=delta,
        )

    assembled = assemble_two_piece(q, lam, b, cfg.h, t_idx=ti, r=r)
    _, heff, _ = _t_index(t, b, cfg.h)
    return PerturbedEigen(
        t=float(ti * heff), r=float(r), lambda_tr=float(lam),
        phi0=assembled.phi0, c_factor=assembled.c_factor,
        jump_residual=assembled.jump_residual, b_used=float(b),
        lambda_1=float(lam1),
    )


def dlambda_dr_formula(q: Potential, t: float, r: float, cfg: SolverConfig,
                       perturbed: Optional[PerturbedEigen] = None) -> float:
    """d(lambda)/dr from the implicit matching equation.

    Evaluates phi(t)*Psi(t) / (u - r * d[phi*Psi]/dlambda) at the computed
    eigenvalue, with u = d(1/m)/dlambda and the lambda-derivative of
    phi*Psi by central differences.  At r = 0 the product is averaged
    across the (simple) pole of m, where phi*Psi is smooth.
    """
    if t == 0.0:
        return 0.0  # Dirichlet end: the eigenfunction vanishes there
    pe = perturbed if perturbed is not None else lambda_tr(q, t, r, cfg)
    b, h, lam = pe.b_used, cfg.h, pe.lambda_tr
    dl = cfg.dl_eff
    ti, _, _ = _t_index(t, b, h)

    def product(lam_: float) -> float:
        fwd = shoot(q, lam_, 0.0, b, 0.0, 1.0, h)
        chi = chi_shot(q, lam_, b, h)
        phi_t = float(fwd.ys[ti] * math.exp(min(fwd.logs[ti], _EXP_CLIP)))
        return phi_t * chi.psi_weyl_at(ti)

    u = u_of_lambda(q, lam, b, h, dl)
    p_hi = product(lam + dl)
    p_lo = product(lam - dl)
    if r == 0.0:
        return 0.5 * (p_hi + p_lo) / u

    p_mid = product(lam)
    dp = (p_hi - p_lo) / (2.0 * dl)
    denom = u - r * dp
    if abs(denom) < 1e-8 * max(abs(u), 1e-300):
        raise ConfigError(
            "the derivative-formula denominator u - r*d(phi*Psi)/dlambda "
            f"vanishes at t={t:g}, r={r:g}; the coupling exceeds the regime "
            "where the formula is valid (reduce r)"
        )
    return p_mid / denom


def oracle_fd(q: Potential, t: float, r: float, b: float, h: float) -> float:
    """Independent brute-force check: smallest eigenvalue of the symmetric
    tridiagonal finite-difference matrix with the delta realized as -r/h on
    the diagonal node nearest t (unit mass).

    Solved by LAPACK's Sturm-sequence bisection; this route shares no code
    with the shooting solvers.
    """
    n = int(round(b / h))
    if n < 8:
        raise ConfigError("finite-difference oracle needs b/h >= 8")
    xs = h * np.arange(1, n)
    # Average one-sided limits so a jump sitting on a node keeps the
    # scheme second order (no-op for smooth q).
    nudge = h * 1e-9
    qvals = 0.5 * (np.asarray(q(xs - nudge), dtype=float)
                   + np.asarray(q(xs + nudge), dtype=float))
    diag = 2.0 / h ** 2 + qvals
    off = np.full(n - 2, -1.0 / h ** 2)
    if r != 0.0 and t > 0.0:
        j = int(round(t / h)) - 1
        if not 0 <= j < n - 1:
            raise ConfigError(f"t = {t:g} must sit inside (0, b = {b:g})")
        diag[j] -= r / h
    vals = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0),
                            eigvals_only=True)
    return float(vals[0])
