"""Potential reconstruction from first-eigenvalue-function samples.

Given observations lambda(t, r_n) on a grid of interaction positions t and
a ladder of couplings r_n decreasing toward 0, the slope of lambda in r at
r = 0 equals minus the squared normalized ground state, so

    phi0(t) = sqrt(-d lambda(t, 0)/dr),
    qhat(t) = phi0''(t)/phi0(t) + lambda_1.

The slope is a one-sided derivative; it is estimated per t by a
least-squares fit of s*r + c*r^2 through the origin-shifted points, which
cancels the leading quadratic bias of the single-rung quotient.  The second
derivative uses a five-point stencil (optionally a smoothing spline), and
the validity window drops points where the quotient is ill-conditioned
(phi0 vanishes at 0 and decays at large t).
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DeltaspecError, InconsistentTable, WindowEmpty
from .interaction import lambda_tr
from .model import HypothesisClass, Potential, SolverConfig, classify
from .spectrum import first_eigenvalue

_GENERATOR = "deltaspec"


def config_hash(cfg: SolverConfig) -> str:
    payload = {k: (list(v) if isinstance(v, tuple) else v)
               for k, v in cfg.__dict__.items()}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SampleTable:
    """The observed first eigenvalue function on a full (t, r) grid.

    rs is ascending and includes 0.0 whenever unperturbed rows are present;
    lam has shape (len(ts), len(rs)).  lambda_1 is the unperturbed
    eigenvalue (from the r = 0 rows or from sidecar metadata).
    """

    ts: np.ndarray
    rs: np.ndarray
    lam: np.ndarray
    lambda_1: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam.shape != (len(self.ts), len(self.rs)):
            raise InconsistentTable("lambda grid shape does not match (ts, rs)")

    @property
    def r_ladder(self) -> np.ndarray:
        return self.rs[self.rs > 0]

    def entries(self) -> List[Tuple[float, float, float]]:
        out = []
        for i, t in enumerate(self.ts):
            for j, r in enumerate(self.rs):
                out.append((float(t), float(r), float(self.lam[i, j])))
        return out

    def validate(self, tol: float = 1e-6) -> None:
        """Structural checks a genuine first eigenvalue function satisfies."""
        if len(self.ts) == 0 or len(self.r_ladder) == 0:
            raise InconsistentTable("table has no positive-coupling entries")
        if not np.all(np.isfinite(self.lam)):
            raise InconsistentTable("table contains non-finite eigenvalues")
        scale = max(1.0, abs(self.lambda_1))
        if np.any(self.lam > self.lambda_1 + tol * scale):
            i, j = np.unravel_index(int(np.argmax(self.lam)), self.lam.shape)
            raise InconsistentTable(
                f"lambda(t={self.ts[i]:g}, r={self.rs[j]:g}) = "
                f"{self.lam[i, j]:.9g} exceeds lambda_1 = {self.lambda_1:.9g}"
            )
        if 0.0 in self.rs:
            j0 = int(np.nonzero(self.rs == 0.0)[0][0])
            col = self.lam[:, j0]
            if np.max(col) - np.min(col) > tol * scale:
                raise InconsistentTable(
                    "r = 0 rows disagree about lambda_1 beyond tolerance"
                )
        for i, t in enumerate(self.ts):
            row = self.lam[i]
            if np.any(np.diff(row) > tol * scale):
                raise InconsistentTable(
                    f"lambda(t={t:g}, r) is not nonincreasing in r"
                )


def _sample_one(args):
    q, t, r, cfg = args
    pe = lambda_tr(q, t, r, cfg)
    return t, r, pe.lambda_tr


def sample(q: Potential, cfg: SolverConfig,
           hypothesis: Optional[HypothesisClass] = None) -> SampleTable:
    """Fill the full t_grid x ({0} u r_ladder) table with solver output.

    The r = 0 entries are the unperturbed eigenvalue computed once, so the
    identity lambda(t, 0) = lambda_1 holds by construction.  Output order
    is deterministic regardless of worker scheduling.
    """
    if not cfg.t_grid:
        raise ConfigError("sampling needs a nonempty t_grid")
    if not cfg.r_ladder:
        raise ConfigError("sampling needs a nonempty r_ladder")
    hyp = hypothesis if hypothesis is not None else classify(q, cfg)
    fe = first_eigenvalue(q, cfg, hypothesis=hyp)
    lam1 = fe.lambda_1

    ts = np.asarray(cfg.t_grid, dtype=float)
    rs = np.concatenate(([0.0], np.sort(np.asarray(cfg.r_ladder, dtype=float))))
    lam = np.empty((len(ts), len(rs)))
    lam[:, 0] = lam1

    jobs = [(q, float(t), float(r), cfg) for t in ts for r in rs[1:]]
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = _collect(jobs, pool.map(_sample_one, jobs))
    else:
        results = _collect(jobs, map(_sample_one, jobs))
    for (t, r, value) in results:
        i = int(np.nonzero(ts == t)[0][0])
        j = int(np.nonzero(rs == r)[0][0])
        lam[i, j] = value

    meta = {
        "generator": _GENERATOR,
        "lambda_1": lam1,
        "config_hash": config_hash(cfg),
        "eig_tol": cfg.eig_tol,
        "b": cfg.b,
        "h": cfg.h,
    }
    table = SampleTable(ts=ts, rs=rs, lam=lam, lambda_1=lam1, meta=meta)
    table.validate(tol=max(1e-6, 10 * cfg.eig_tol))
    return table


def _collect(jobs, iterator):
    out = []
    it = iter(iterator)
    for job in jobs:
        _, t, r, _ = job
        try:
            out.append(next(it))
        except DeltaspecError as exc:
            raise type(exc)(f"sampling failed at (t={t:g}, r={r:g}): {exc}") from exc
    return out


@dataclass(frozen=True, eq=False)
class SlopeFit:
    ts: np.ndarray
    slopes: np.ndarray           # fitted d lambda/dr at r = 0 (clamped)
    raw_slopes: np.ndarray       # before clamping
    baseline: np.ndarray         # single-rung quotient at the smallest r
    residuals: np.ndarray        # max |fit - data| per t
    clamped: int


def _fit_slopes(table: SampleTable, slope_tol: float) -> SlopeFit:
    rungs = table.r_ladder
    if len(rungs) < 2:
        raise ConfigError("slope estimation needs at least 2 positive rungs")
    cols = [int(np.nonzero(table.rs == r)[0][0]) for r in rungs]
    design = np.column_stack([rungs, rungs ** 2])
    slopes = np.empty(len(table.ts))
    raw = np.empty(len(table.ts))
    base = np.empty(len(table.ts))
    resid = np.empty(len(table.ts))
    clamped = 0
    r_min = float(rungs[0])
    jmin = cols[0]
    for i in range(len(table.ts)):
        y = table.lam[i, cols] - table.lambda_1
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        s = float(coef[0])
        raw[i] = s
        resid[i] = float(np.max(np.abs(design @ coef - y)))
        base[i] = (table.lam[i, jmin] - table.lambda_1) / r_min
        if s > slope_tol:
            raise InconsistentTable(
                f"slope at r=0 is positive ({s:.3g}) at t = {table.ts[i]:g}; "
                "the data cannot come from a first eigenvalue function"
            )
        if s > 0.0:
            s = 0.0
            clamped += 1
        slopes[i] = s
    return SlopeFit(ts=table.ts.copy(), slopes=slopes, raw_slopes=raw,
                    baseline=base, residuals=resid, clamped=clamped)


def slope_at_zero(table: SampleTable,
                  slope_tol: float = 1e-6) -> List[Tuple[float, float]]:
    """Per-position one-sided derivative of lambda in r at r = 0."""
    fit = _fit_slopes(table, slope_tol)
    return [(float(t), float(s)) for t, s in zip(fit.ts, fit.slopes)]


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    xs: np.ndarray
    phi0: np.ndarray
    qhat: np.ndarray
    window: Tuple[float, float]
    lambda_1: float
    diagnostics: dict


# Five-point second-derivative stencil: the window drops two stencil
# half-widths (4 nodes) at each end on top of the 2 nodes the stencil
# itself cannot reach.
_STENCIL_MARGIN = 4


def reconstruct(table: SampleTable, cfg: Optional[SolverConfig] = None) -> ReconstructionResult:
    """Reconstruct the potential from a sample table.

    qhat = phi0''/phi0 + lambda_1 with phi0 = sqrt(-slope).  Points with
    phi0 below phi_floor_rel * max(phi0) are dropped (the quotient is
    analytically fine but numerically ill-posed where phi0 vanishes), as
    are the stencil margins at both ends.
    """
    if cfg is None:
        cfg = SolverConfig()
    table.validate(tol=max(1e-6, 10 * cfg.eig_tol))
    fit = _fit_slopes(table, cfg.slope_tol)
    ts = fit.ts
    n = len(ts)
    if n < 2 * _STENCIL_MARGIN + 1:
        raise WindowEmpty(f"t grid with {n} points is too short for the stencils")
    steps = np.diff(ts)
    dt = float(steps[0])
    if np.max(np.abs(steps - dt)) > 1e-9 * max(dt, 1.0):
        raise ConfigError("reconstruction needs a uniform t grid")

    phi = np.sqrt(np.maximum(-fit.slopes, 0.0))

    smoothing_rule = None
    d2 = np.full(n, np.nan)
    if cfg.smooth:
        from scipy.interpolate import make_smoothing_spline

        # GCV-penalized spline; scipy does not expose the selected penalty,
        # so the rule (not a number) goes into the diagnostics.
        spl = make_smoothing_spline(ts, phi)
        smoothing_rule = "gcv"
        phi_used = np.asarray(spl(ts), dtype=float)
        d2[:] = np.asarray(spl.derivative(2)(ts), dtype=float)
    else:
        phi_used = phi
        core = slice(2, n - 2)
        d2[core] = (-phi[:-4] + 16 * phi[1:-3] - 30 * phi[2:-2]
                    + 16 * phi[3:-1] - phi[4:]) / (12.0 * dt * dt)

    floor = cfg.phi_floor_rel * float(np.max(phi_used))
    kept = np.zeros(n, dtype=bool)
    kept[_STENCIL_MARGIN:n - _STENCIL_MARGIN] = True
    kept &= phi_used > floor
    kept &= np.isfinite(d2)
    n_floor = int(np.sum(~(phi_used > floor)))
    if not np.any(kept):
        raise WindowEmpty(
            "no grid points survived the stencil margins and the phi0 floor"
        )

    xs = ts[kept]
    qhat = d2[kept] / phi_used[kept] + table.lambda_1
    if not np.all(np.isfinite(qhat)):
        raise WindowEmpty("reconstructed values are not finite on the window")

    diagnostics = {
        "slope_fit_residual_max": float(np.max(fit.residuals)),
        "slope_fit_residuals": [float(v) for v in fit.residuals],
        "clamped_slopes": fit.clamped,
        "points_below_phi_floor": n_floor,
        "phi_floor": float(floor),
        "smoothing": bool(cfg.smooth),
        "smoothing_rule": smoothing_rule,
        "stencil_margin": _STENCIL_MARGIN,
    }
    return ReconstructionResult(
        xs=xs, phi0=phi_used[kept], qhat=qhat,
        window=(float(xs[0]), float(xs[-1])),
        lambda_1=float(table.lambda_1), diagnostics=diagnostics,
    )


@dataclass(frozen=True, eq=False)
class RoundtripReport:
    table: SampleTable
    result: ReconstructionResult
    q_true: np.ndarray
    max_abs_err: float
    mean_abs_err: float
    excluded_zones: List[Tuple[float, float]]
    flags: List[str]


def _jump_zones(q: Potential, ts: np.ndarray) -> List[Tuple[float, float]]:
    """Neighborhoods of detected jumps of q, sized to cover the reach of the
    five-point stencil (two grid steps) and at least +-0.1."""
    vals = np.asarray(q(ts), dtype=float)
    diffs = np.abs(np.diff(vals))
    if diffs.size == 0:
        return []
    halfwidth = max(0.1, 2.0 * float(np.max(np.diff(ts))) * (1 + 1e-9))
    scale = float(np.median(diffs))
    zones = []
    for i in np.nonzero(diffs > max(1.0, 10.0 * scale))[0]:
        mid = 0.5 * (ts[i] + ts[i + 1])
        zones.append((float(mid - halfwidth), float(mid + halfwidth)))
    return zones


def roundtrip(q: Potential, cfg: SolverConfig) -> RoundtripReport:
    """Forward-sample lambda(t, r), reconstruct, and compare against q.

    Near detected jumps of q the comparison is masked out (+-0.1 around the
    jump): a second-difference stencil on sqrt(slope) cannot resolve a
    discontinuity sharply, and the overshoot there is flagged instead of
    scored.
    """
    table = sample(q, cfg)
    result = reconstruct(table, cfg)
    q_true = np.asarray(q(result.xs), dtype=float)
    zones = _jump_zones(q, table.ts)
    mask = np.ones(len(result.xs), dtype=bool)
    for lo, hi in zones:
        mask &= ~((result.xs >= lo) & (result.xs <= hi))
    flags = []
    if zones:
        flags.append(
            "potential jump detected; reconstruction overshoots near "
            + ", ".join(f"[{lo:.3g}, {hi:.3g}]" for lo, hi in zones)
            + " and errors are measured off those zones"
        )
    err = np.abs(result.qhat - q_true)
    scored = err[mask] if np.any(mask) else err
    return RoundtripReport(
        table=table, result=result, q_true=q_true,
        max_abs_err=float(np.max(scored)),
        mean_abs_err=float(np.mean(scored)),
        excluded_zones=zones, flags=flags,
    )


# ----------------------------------------------------------------------
# File formats: CSV tables with a JSON sidecar carrying the metadata.

def _fmt(v: float) -> str:
    return repr(float(v))


def sidecar_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".json"


def write_sample_table(table: SampleTable, csv_path: str) -> None:
    with open(csv_path, "w") as fh:
        fh.write("t,r,lambda\n")
        for t, r, lam in table.entries():
            fh.write(f"{_fmt(t)},{_fmt(r)},{_fmt(lam)}\n")
    meta = dict(table.meta)
    meta.setdefault("generator", _GENERATOR)
    meta["lambda_1"] = table.lambda_1
    with open(sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def table_from_entries(rows: Iterable[Tuple[float, float, float]],
                       lambda_1: Optional[float] = None,
                       meta: Optional[dict] = None) -> SampleTable:
    """Assemble a SampleTable from (t, r, lambda) triples.

    The triples must cover a full rectangular (t, r) grid.  lambda_1 is
    taken from the r = 0 rows when present (averaged, spread checked later
    by validate()), else from the lambda_1 argument.
    """
    rows = [(float(t), float(r), float(v)) for t, r, v in rows]
    if not rows:
        raise InconsistentTable("sample table is empty")
    ts = np.unique([r[0] for r in rows])
    rs = np.unique([r[1] for r in rows])
    lam = np.full((len(ts), len(rs)), np.nan)
    for t, r, v in rows:
        i = int(np.searchsorted(ts, t))
        j = int(np.searchsorted(rs, r))
        lam[i, j] = v
    if np.any(np.isnan(lam)):
        raise InconsistentTable(
            "table is not a full (t, r) grid: every pair must be present"
        )
    if 0.0 in rs:
        j0 = int(np.nonzero(rs == 0.0)[0][0])
        lam1 = float(np.mean(lam[:, j0]))
    elif lambda_1 is not None:
        lam1 = float(lambda_1)
    else:
        raise InconsistentTable(
            "table has no r = 0 rows and no lambda_1 metadata was supplied"
        )
    return SampleTable(ts=ts, rs=rs, lam=lam, lambda_1=lam1,
                       meta=meta if meta is not None else {"generator": "external"})


def read_sample_table(csv_path: str) -> SampleTable:
    """Load a table written by write_sample_table or produced externally.

    External tables may omit the r = 0 rows if the sidecar JSON supplies
    lambda_1; a full rectangular (t, r) grid is required either way.
    """
    if not os.path.exists(csv_path):
        raise ConfigError(f"sample table {csv_path!r} does not exist")
    rows = []
    with open(csv_path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower().replace(" ", "").startswith("t,r,"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise InconsistentTable(f"bad table row {line!r}; expected t,r,lambda")
            try:
                rows.append(tuple(float(v) for v in parts))
            except ValueError as exc:
                raise InconsistentTable(f"non-numeric table row {line!r}") from exc

    meta = {"generator": "external"}
    side = sidecar_path(csv_path)
    if os.path.exists(side):
        with open(side) as fh:
            try:
                meta = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"sidecar {side!r} is not valid JSON: {exc}") from exc
    return table_from_entries(rows, lambda_1=meta.get("lambda_1"), meta=meta)


def write_reconstruction(result: ReconstructionResult, csv_path: str,
                         q_true: Optional[np.ndarray] = None,
                         extra_meta: Optional[dict] = None) -> None:
    with open(csv_path, "w") as fh:
        fh.write("x,phi0,qhat\n")
        for x, p, qh in zip(result.xs, result.phi0, result.qhat):
            fh.write(f"{_fmt(x)},{_fmt(p)},{_fmt(qh)}\n")
    report = {
        "lambda_1": result.lambda_1,
        "window": [result.window[0], result.window[1]],
        "n_points": int(len(result.xs)),
        "diagnostics": result.diagnostics,
    }
    if q_true is not None:
        report["q_true"] = [float(v) for v in q_true]
    if extra_meta:
        report.update(extra_meta)
    with open(sidecar_path(csv_path), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
