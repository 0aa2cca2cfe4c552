"""Problem setup: potentials, solver configuration, hypothesis screening.

A Potential is either a closed-form expression in x or a knot table with an
interpolation rule.  Both forms are immutable, hashable and picklable; the
compiled evaluator is built lazily and cached per instance, so potentials
travel cheaply across worker processes.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
import sympy

from .errors import ConfigError, PotentialParseError

_X = sympy.Symbol("x", real=True)

_ALLOWED_NAMES = {"x", "exp", "sin", "cos", "sqrt", "abs", "Abs", "ind", "pi"}

_UNICODE_OPS = {
    "−": "-",  # minus sign
    "·": "*",  # middle dot
    "×": "*",
    "÷": "/",
}


def _indicator(cond):
    return sympy.Piecewise((1.0, cond), (0.0, True))


def _normalize_expression(text: str) -> str:
    src = text.strip()
    for uni, rep in _UNICODE_OPS.items():
        src = src.replace(uni, rep)
    src = src.replace("^", "**")
    # Brackets only ever delimit indicator conditions in this grammar.
    src = src.replace("[", "ind(").replace("]", ")")
    return src


def _parse_expression(text: str) -> sympy.Expr:
    src = _normalize_expression(text)
    if not src:
        raise PotentialParseError("empty potential expression")
    names = set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", src))
    unknown = names - _ALLOWED_NAMES
    if unknown:
        raise PotentialParseError(
            f"unknown name(s) {sorted(unknown)} in potential expression {text!r}; "
            "allowed: x, exp, sin, cos, sqrt, abs, [condition]"
        )
    local = {
        "x": _X,
        "exp": sympy.exp,
        "sin": sympy.sin,
        "cos": sympy.cos,
        "sqrt": sympy.sqrt,
        "abs": sympy.Abs,
        "Abs": sympy.Abs,
        "pi": sympy.pi,
        "ind": _indicator,
    }
    try:
        expr = sympy.sympify(src, locals=local, rational=False)
    except (sympy.SympifyError, SyntaxError, TypeError, AttributeError) as exc:
        raise PotentialParseError(f"malformed potential expression {text!r}: {exc}") from exc
    if not expr.free_symbols <= {_X}:
        raise PotentialParseError(f"expression {text!r} contains symbols other than x")
    return expr


@dataclass(frozen=True)
class Potential:
    """Real-valued coefficient q on [0, +inf).

    Exactly one of expression / knots is set.  domain_hint marks the right
    endpoint of reliable definition (inf for closed forms, the last knot for
    tables; tables are clamp-extended beyond it).
    """

    expression: Optional[str] = None
    knots_x: Optional[tuple] = None
    knots_q: Optional[tuple] = None
    interpolation: str = "pchip"
    domain_hint: float = math.inf

    def __post_init__(self):
        if (self.expression is None) == (self.knots_x is None):
            raise PotentialParseError("potential needs an expression or a knot table")
        if self.knots_x is not None:
            xs = np.asarray(self.knots_x, dtype=float)
            qs = np.asarray(self.knots_q, dtype=float)
            if xs.size < 2 or xs.size != qs.size:
                raise PotentialParseError("knot table needs >= 2 rows of (x, q)")
            if not np.all(np.diff(xs) > 0):
                raise PotentialParseError("knot abscissae must be strictly increasing")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(qs))):
                raise PotentialParseError("knot table contains non-finite values")
            if self.interpolation not in ("pchip", "linear"):
                raise PotentialParseError(f"unknown interpolation rule {self.interpolation!r}")
            if self.domain_hint == math.inf:
                object.__setattr__(self, "domain_hint", float(xs[-1]))

    @property
    def is_table(self) -> bool:
        return self.knots_x is not None

    def __call__(self, x):
        f = _compiled_eval(self)
        arr = np.asarray(x, dtype=float)
        out = f(arr)
        if np.isscalar(x) or arr.ndim == 0:
            return float(out)
        return out

    def second_derivative(self) -> Callable[[np.ndarray], np.ndarray]:
        """q'' as a vectorized callable.

        Exact (symbolic) for expressions; cubic-spline based for tables.
        Rejects expressions with indicator pieces and linearly interpolated
        tables, which have no usable second derivative.
        """
        return _compiled_second_derivative(self)

    def describe(self) -> str:
        if self.expression is not None:
            return self.expression
        return f"table[{len(self.knots_x)} knots, {self.interpolation}]"


@functools.lru_cache(maxsize=256)
def _compiled_eval(pot: Potential):
    if pot.expression is not None:
        expr = _parse_expression(pot.expression)
        raw = sympy.lambdify(_X, expr, modules=["numpy"])

        def f(arr, _raw=raw):
            out = _raw(arr)
            return np.broadcast_to(np.asarray(out, dtype=float), arr.shape).copy()

        _probe_expression(pot.expression, f)
        return f

    xs = np.asarray(pot.knots_x, dtype=float)
    qs = np.asarray(pot.knots_q, dtype=float)
    if pot.interpolation == "linear":

        def f(arr):
            return np.interp(arr, xs, qs)

        return f

    from scipy.interpolate import PchipInterpolator

    sp = PchipInterpolator(xs, qs, extrapolate=False)

    def f(arr):
        out = sp(np.clip(arr, xs[0], xs[-1]))
        return np.asarray(out, dtype=float)

    return f


@functools.lru_cache(maxsize=64)
def _compiled_second_derivative(pot: Potential):
    if pot.expression is not None:
        expr = _parse_expression(pot.expression)
        if expr.has(sympy.Piecewise):
            raise ConfigError(
                "indicator pieces make the expression non-differentiable; "
                "second derivative unavailable"
            )
        d2 = sympy.diff(expr, _X, 2)
        raw = sympy.lambdify(_X, d2, modules=["numpy"])

        def f(arr, _raw=raw):
            arr = np.asarray(arr, dtype=float)
            out = _raw(arr)
            return np.broadcast_to(np.asarray(out, dtype=float), arr.shape).copy()

        return f

    if pot.interpolation == "linear":
        raise ConfigError(
            "linearly interpolated tables carry no second derivative; "
            "supply a cubic-interpolated table or a closed form"
        )
    from scipy.interpolate import CubicSpline

    xs = np.asarray(pot.knots_x, dtype=float)
    qs = np.asarray(pot.knots_q, dtype=float)
    d2 = CubicSpline(xs, qs, bc_type="not-a-knot").derivative(2)

    def f(arr):
        arr = np.clip(np.asarray(arr, dtype=float), xs[0], xs[-1])
        return np.asarray(d2(arr), dtype=float)

    return f


def _probe_expression(text: str, f) -> None:
    probe = np.array([0.0, 0.5, 1.0, 2.0])
    try:
        with np.errstate(all="ignore"):
            vals = f(probe)
    except Exception as exc:
        raise PotentialParseError(f"expression {text!r} failed to evaluate: {exc}") from exc
    vals = np.asarray(vals)
    if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0):
        raise PotentialParseError(f"expression {text!r} produces non-real values")
    if not np.any(np.isfinite(np.real(vals))):
        raise PotentialParseError(f"expression {text!r} is nowhere finite on the probe points")


def _looks_like_table(text: str) -> bool:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        return False
    head = lines[0].lower().replace(" ", "")
    if head in ("x,q", "x,q(x)"):
        return True
    parts = lines[0].split(",")
    if len(parts) != 2:
        return False
    try:
        float(parts[0])
        float(parts[1])
    except ValueError:
        return False
    return True


def parse_potential(spec: str, *, interpolation: str = "pchip") -> Potential:
    """Build a Potential from a textual description.

    Accepts either an arithmetic expression in x (+, -, *, /, ^, exp, sin,
    cos, sqrt, abs, and bracketed indicators like [x<1]) or CSV knot-table
    text with columns x,q.
    """
    if _looks_like_table(spec):
        xs, qs = [], []
        for ln in spec.splitlines():
            ln = ln.strip()
            if not ln or ln.lower().replace(" ", "") in ("x,q", "x,q(x)"):
                continue
            parts = ln.split(",")
            if len(parts) != 2:
                raise PotentialParseError(f"bad knot row {ln!r}; expected 'x,q'")
            try:
                xs.append(float(parts[0]))
                qs.append(float(parts[1]))
            except ValueError as exc:
                raise PotentialParseError(f"non-numeric knot row {ln!r}") from exc
        return Potential(knots_x=tuple(xs), knots_q=tuple(qs), interpolation=interpolation)
    pot = Potential(expression=spec)
    _compiled_eval(pot)  # parse and probe eagerly so errors surface here
    return pot


def potential_from_knots(xs: Sequence[float], qs: Sequence[float],
                         interpolation: str = "pchip") -> Potential:
    return Potential(knots_x=tuple(float(v) for v in xs),
                     knots_q=tuple(float(v) for v in qs),
                     interpolation=interpolation)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared across the solvers.

    b          truncation radius replacing +inf
    h          integration step
    eig_tol    eigenvalue tolerance (also the truncation-escalation target)
    b_growth   multiplicative escalation factor for b
    b_max      hard cap on escalation
    t_grid     interaction positions for sampling
    r_ladder   decreasing positive coupling constants
    r_cap      max admissible coupling; None = 0.2*(lambda_1 - floor) at use
    lambda_floor  lower bracket for eigenvalue searches; None = automatic
    dl         spectral-parameter increment for finite differences;
               None = max(1e-5, 10*eig_tol)
    smooth     penalized-spline smoothing of the slope profile before
               differentiation in the reconstruction
    phi_floor_rel  drop reconstruction points with phi0 below this fraction
               of max(phi0)
    slope_tol  positive slack allowed on slopes at r=0 before the table is
               declared inconsistent
    workers    worker processes for sampling (1 = sequential)
    """

    b: float = 8.0
    h: float = 1e-3
    eig_tol: float = 1e-9
    b_growth: float = 2.0
    b_max: float = 256.0
    t_grid: tuple = ()
    r_ladder: tuple = (0.04, 0.02, 0.01)
    r_cap: Optional[float] = None
    lambda_floor: Optional[float] = None
    dl: Optional[float] = None
    smooth: bool = False
    phi_floor_rel: float = 1e-3
    slope_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.b <= 0 or self.h <= 0:
            raise ConfigError("b and h must be positive")
        if self.eig_tol <= 0:
            raise ConfigError("eig_tol must be positive")
        if self.b_growth <= 1:
            raise ConfigError("b_growth must exceed 1")
        if self.b_max < self.b:
            raise ConfigError("b_max must be >= b")
        t = tuple(float(v) for v in self.t_grid)
        object.__setattr__(self, "t_grid", t)
        if t:
            if any(v < 0 for v in t) or any(b <= a for a, b in zip(t, t[1:])):
                raise ConfigError("t_grid must be nonnegative and strictly increasing")
            if self.b <= max(t):
                raise ConfigError("truncation radius b must exceed max(t_grid)")
        r = tuple(float(v) for v in self.r_ladder)
        object.__setattr__(self, "r_ladder", r)
        if r:
            if any(v <= 0 for v in r) or any(b >= a for a, b in zip(r, r[1:])):
                raise ConfigError("r_ladder must be strictly positive and strictly decreasing")
            if self.r_cap is not None and max(r) > self.r_cap:
                raise ConfigError("r_ladder exceeds r_cap")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def dl_eff(self) -> float:
        return self.dl if self.dl is not None else max(1e-5, 10.0 * self.eig_tol)

    def replace(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class HypothesisClass:
    """Grid-heuristic classification of a potential.

    variant is one of H1_Confining, H1_BoundedBelow, H2_LimitCircle,
    Unsupported.  floor_q0 is the minimum of q over the probe grid (tail
    scan included) for the H1 variants.
    """

    variant: str
    floor_q0: Optional[float] = None
    notes: str = "grid-probe heuristic"

    @property
    def is_h1(self) -> bool:
        return self.variant in ("H1_Confining", "H1_BoundedBelow")


@dataclass(frozen=True)
class ProbeResult:
    floor: float          # min q over [0, b] plus tail scan
    main_floor: float     # min q over [0, b] alone
    tail_floor: float     # min q over the tail scan alone (essential floor proxy)
    q_at_b: float
    tail_start: float
    tail_end_value: float
    tail_rising: bool


def probe_potential(q: Potential, cfg: SolverConfig) -> ProbeResult:
    """Sample q on [0, b] with step h plus a coarse tail scan on [b, 4b].

    The tail scan stops at domain_hint for tables; endpoint classification
    is asymptotic, and the tail is what catches late sign changes.
    """
    n = max(2, int(math.ceil(cfg.b / cfg.h)))
    xs = np.linspace(0.0, cfg.b, n + 1)
    with np.errstate(all="ignore"):
        vals = q(xs)
    if not np.all(np.isfinite(vals)):
        raise ConfigError(
            f"potential {q.describe()!r} is not finite everywhere on [0, {cfg.b}]"
        )
    tail_hi = min(4.0 * cfg.b, q.domain_hint)
    if tail_hi > cfg.b:
        txs = np.linspace(cfg.b, tail_hi, 65)
        with np.errstate(all="ignore"):
            tvals = q(txs)
        if not np.all(np.isfinite(tvals)):
            raise ConfigError(
                f"potential {q.describe()!r} is not finite on the tail scan [{cfg.b}, {tail_hi}]"
            )
    else:
        tvals = vals[-1:]
    scale = max(1.0, abs(float(np.min(vals))))
    tail_rising = bool(
        np.min(tvals) >= vals[-1] - 1e-12 * scale
        and tvals[-1] >= vals[-1] + scale
    )
    return ProbeResult(
        floor=float(min(np.min(vals), np.min(tvals))),
        main_floor=float(np.min(vals)),
        tail_floor=float(np.min(tvals)),
        q_at_b=float(vals[-1]),
        tail_start=float(cfg.b),
        tail_end_value=float(tvals[-1]),
        tail_rising=tail_rising,
    )


def classify(q: Potential, cfg: SolverConfig, g: Optional[Potential] = None) -> HypothesisClass:
    """Decide which hypothesis regime a problem instance falls in.

    This is a deterministic grid heuristic, not a proof: confinement is
    declared when q has clearly entered and keeps climbing through the
    classically forbidden range by the end of the probe window.
    """
    probe = probe_potential(q, cfg)
    if g is not None:
        n = max(2, int(math.ceil(cfg.b / cfg.h)))
        xs = np.linspace(0.0, min(4.0 * cfg.b, g.domain_hint), n + 1)
        gv = g(xs)
        if not (np.all(np.isfinite(gv)) and np.all(gv > 0)):
            raise ConfigError("the supplied g must be strictly positive on the probe grid")
        return HypothesisClass(
            variant="H2_LimitCircle",
            floor_q0=None,
            notes="grid-probe heuristic; g positive on probe grid",
        )

    scale = max(1.0, abs(probe.main_floor))
    if probe.tail_floor < probe.main_floor - 10.0 * scale:
        return HypothesisClass(
            variant="Unsupported",
            floor_q0=None,
            notes="potential keeps decreasing along the tail scan; "
                  "supply a positive g for the limit-circle route if applicable",
        )
    if probe.q_at_b >= probe.floor + 5.0 * scale and probe.tail_rising:
        return HypothesisClass(variant="H1_Confining", floor_q0=probe.floor)
    return HypothesisClass(variant="H1_BoundedBelow", floor_q0=probe.floor)
