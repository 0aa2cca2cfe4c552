"""Truncated Weyl m-function machinery.

With the fundamental pair phi (phi(0)=0, phi'(0)=1) and psi (psi(0)=1,
psi'(0)=0), the Weyl solution chi = psi + m*phi is the one satisfying the
right boundary condition; truncation at b replaces that condition with
chi(b) = 0, so m_b = -psi(b)/phi(b).

chi is built by backward shooting from chi(b)=0, chi'(b)=-1 and normalized
at 0 (forward combination psi + m*phi cancels catastrophically inside
classically forbidden regions; the two agree by uniqueness).  All derived
quantities are scale-free ratios of the raw backward shot:

    m_b   = chi'(0)/chi(0)      1/m_b = chi(0)/chi'(0)
    Psi   = chi/m (normalized)  Psi(x) = chi_raw(x)/chi_raw'(0)

The last form stays finite when lambda sits on a truncated eigenvalue
(chi(0) -> 0), which the perturbed-eigenfunction assembly relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, PoleAtLambda
from .model import Potential
from .propagate import ScaledShot, SolutionTrace, TwoPieceTrace, grid_steps, shoot

_POLE_LOG_TOL = math.log(1e-12)
_EXP_CLIP = 700.0


def _sexp(sign_val: float, exponent: float) -> float:
    """sign(sign_val) * exp(exponent), saturating instead of overflowing."""
    if sign_val == 0.0:
        return 0.0
    return math.copysign(math.exp(min(exponent, _EXP_CLIP)), sign_val)


@dataclass(eq=False)
class ChiShot:
    """Backward shot for chi, reordered so index i sits at x_i = i*heff."""

    q: Potential
    lam: float
    b: float
    h: float
    xs: np.ndarray
    ys: np.ndarray
    dys: np.ndarray
    logs: np.ndarray
    heff: float

    @property
    def chi0(self) -> float:
        return float(self.ys[0])

    @property
    def dchi0(self) -> float:
        return float(self.dys[0])

    @property
    def log0(self) -> float:
        return float(self.logs[0])

    def log_abs_max(self) -> float:
        with np.errstate(divide="ignore"):
            return float(np.max(np.log(np.abs(self.ys) + 1e-300) + self.logs))

    def ensure_no_eigen_pole(self) -> None:
        if math.log(abs(self.chi0) + 1e-300) + self.log0 < self.log_abs_max() + _POLE_LOG_TOL:
            raise PoleAtLambda(
                f"lambda = {self.lam!r} is numerically an eigenvalue of the "
                f"problem truncated at b = {self.b}",
                lam=self.lam, b=self.b, kind="eigenvalue",
            )

    def ensure_m_nonzero(self) -> None:
        if math.log(abs(self.dchi0) + 1e-300) + self.log0 < self.log_abs_max() + _POLE_LOG_TOL:
            raise PoleAtLambda(
                f"the truncated Weyl function vanishes at lambda = {self.lam!r}; "
                "1/m and the normalized Weyl solution are unusable here",
                lam=self.lam, b=self.b, kind="m_zero",
            )

    def m(self) -> float:
        self.ensure_no_eigen_pole()
        return self.dchi0 / self.chi0

    def inv_m(self) -> float:
        self.ensure_m_nonzero()
        return self.chi0 / self.dchi0

    def _scaled_ratio(self, i: int, denom: float) -> float:
        """ys[i]/denom with log-scale bookkeeping (denom lives at node 0)."""
        num = float(self.ys[i])
        if num == 0.0 or denom == 0.0:
            return 0.0 if num == 0.0 else math.copysign(math.inf, num * denom)
        exponent = (self.logs[i] - self.log0
                    + math.log(abs(num)) - math.log(abs(denom)))
        return _sexp(num * denom, exponent)

    def psi_weyl_at(self, i: int) -> float:
        """Psi(x_i) = chi_raw(x_i)/chi_raw'(0); finite even at m-poles."""
        self.ensure_m_nonzero()
        return self._scaled_ratio(i, self.dchi0)

    def normalized_values(self):
        """(chi, chi') arrays under chi(0) = 1; far-field underflow goes to 0."""
        self.ensure_no_eigen_pole()
        rel = self.logs - self.log0
        scale = np.exp(np.minimum(rel, _EXP_CLIP)) / self.chi0
        return self.ys * scale, self.dys * scale


def chi_shot(q: Potential, lam: float, b: float, h: float) -> ChiShot:
    raw = shoot(q, lam, b, 0.0, 0.0, -1.0, h)
    n, heff = grid_steps(0.0, b, h)
    return ChiShot(
        q=q, lam=lam, b=b, h=h,
        xs=raw.xs[::-1].copy(),
        ys=raw.ys[::-1].copy(),
        dys=raw.dys[::-1].copy(),
        logs=raw.logs[::-1].copy(),
        heff=heff,
    )


@dataclass(frozen=True, eq=False)
class WeylEval:
    """One lambda's worth of truncated Weyl data."""

    lam: float
    b: float
    m: float
    chi: SolutionTrace
    psi_weyl: SolutionTrace
    m_prime_integral: float
    u_value: float


def m_truncated(q: Potential, lam: float, b: float, h: float) -> float:
    """m_b(lambda) = -psi(b)/phi(b), computed as chi'(0)/chi(0).

    Below the first truncated eigenvalue m_b is finite and increasing;
    raises PoleAtLambda when lambda is (numerically) a truncated eigenvalue.
    """
    return chi_shot(q, lam, b, h).m()


def psi_weyl(q: Potential, lam: float, b: float, h: float) -> WeylEval:
    """chi, Psi = chi/m, the m' integral and u = -integral(Psi^2)."""
    shot = chi_shot(q, lam, b, h)
    m = shot.m()
    shot.ensure_m_nonzero()
    chi_vals, dchi_vals = shot.normalized_values()
    chi_trace = SolutionTrace(xs=shot.xs, ys=chi_vals, dys=dchi_vals,
                              lam=float(lam), direction="backward",
                              init=(float(b), 0.0, float(dchi_vals[-1])))
    psi_trace = SolutionTrace(xs=shot.xs, ys=chi_vals / m, dys=dchi_vals / m,
                              lam=float(lam), direction="backward",
                              init=(float(b), 0.0, float(dchi_vals[-1] / m)))
    m_int = float(simpson(chi_vals ** 2, x=shot.xs))
    return WeylEval(
        lam=float(lam), b=float(b), m=float(m),
        chi=chi_trace, psi_weyl=psi_trace,
        m_prime_integral=m_int,
        u_value=-m_int / (m * m),
    )


def u_of_lambda(q: Potential, lam: float, b: float, h: float, dl: float = 1e-5) -> float:
    """u(lambda) = d(1/m)/dlambda by central differences.

    1/m is smooth across eigenvalue poles of m (it has a simple zero there),
    so the stencil may straddle one; each stencil point must still avoid
    being an exact zero of m.
    """
    hi = chi_shot(q, lam + dl, b, h).inv_m()
    lo = chi_shot(q, lam - dl, b, h).inv_m()
    return (hi - lo) / (2.0 * dl)


@dataclass(frozen=True, eq=False)
class AssembledEigen:
    """A normalized two-piece eigenfunction with its matching diagnostics."""

    phi0: "TwoPieceTrace"
    c_factor: float
    jump_residual: float
    norm: float            # L2 norm of the unnormalized assembly
    t_index: int


def _phi_forward(q: Potential, lam: float, b: float, h: float) -> ScaledShot:
    return shoot(q, lam, 0.0, b, 0.0, 1.0, h)


def _shot_values(shot, lo: int, hi: int, ref_log: float):
    """Materialize true (y, y') over node slice [lo, hi] relative to a
    reference log scale; entries whose scale underflows come out 0."""
    rel = shot.logs[lo:hi + 1] - ref_log
    scale = np.exp(np.minimum(rel, _EXP_CLIP))
    return shot.ys[lo:hi + 1] * scale, shot.dys[lo:hi + 1] * scale


def assemble_two_piece(q: Potential, lam: float, b: float, h: float,
                       t_idx: int | None = None, r: float = 0.0) -> AssembledEigen:
    """Build the eigenfunction that is phi on [0, t] and c*Psi on [t, b].

    The right piece is evaluated as phi(t) * chi(x)/chi(t), which is the
    same function but stays finite when lambda sits on a pole of m (the
    unperturbed eigenvalue), so r = 0 and r > 0 share this code path.  When
    t_idx is None the split is placed at the scaled maximum of |chi|: chi is
    the numerically stable (backward) representation of the decaying
    eigenfunction, whereas forward phi is contaminated by the growing mode
    past the turning point.
    """
    n, heff = grid_steps(0.0, b, h)
    fwd = _phi_forward(q, lam, b, h)
    chi = chi_shot(q, lam, b, h)

    if t_idx is None:
        with np.errstate(divide="ignore"):
            logmag = np.log(np.abs(chi.ys) + 1e-300) + chi.logs
        t_idx = int(np.argmax(logmag))
        t_idx = min(max(t_idx, 1), n - 1)
    if not 1 <= t_idx <= n - 1:
        raise ConfigError(f"split index {t_idx} outside the open grid interior")
    t = t_idx * heff

    # Left piece: phi itself, relative to its launch scale.
    phi_vals, dphi_vals = _shot_values(fwd, 0, t_idx, fwd.logs[0])
    phi_t = float(phi_vals[-1])
    if phi_t == 0.0:
        raise PoleAtLambda(
            f"phi vanishes at the interaction point t = {t:.6g}; "
            "the two-piece assembly is singular there",
            lam=lam, b=b, kind="phi_zero",
        )

    # Right piece: phi(t) * chi(x)/chi(t).
    chi_vals, dchi_vals = _shot_values(chi, t_idx, n, chi.logs[t_idx])
    chi_t = float(chi_vals[0])
    if chi_t == 0.0:
        raise PoleAtLambda(
            f"chi vanishes at the interaction point t = {t:.6g}",
            lam=lam, b=b, kind="chi_zero",
        )
    factor = phi_t / chi_t
    right_vals = chi_vals * factor
    dright_vals = dchi_vals * factor

    xs_left = heff * np.arange(t_idx + 1)
    xs_right = heff * np.arange(t_idx, n + 1)
    left = SolutionTrace(xs=xs_left, ys=phi_vals, dys=dphi_vals, lam=float(lam),
                         direction="forward", init=(0.0, 0.0, 1.0))
    right = SolutionTrace(xs=xs_right, ys=right_vals, dys=dright_vals, lam=float(lam),
                          direction="backward", init=(float(b), float(right_vals[-1]),
                                                      float(dright_vals[-1])))
    piece = TwoPieceTrace(left=left, right=right)

    norm = math.sqrt(piece.squared_integral())
    normalized = piece.scaled(1.0 / norm)
    jump = normalized.derivative_jump() - r * normalized.left.ys[-1]

    c = phi_t / chi.psi_weyl_at(t_idx)
    return AssembledEigen(phi0=normalized, c_factor=float(c),
                          jump_residual=float(jump), norm=float(norm),
                          t_index=t_idx)
