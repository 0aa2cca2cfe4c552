"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the report lines.
Criteria with runtime bounds measure wall time after the session-wide
kernel warmup (compilation is machine setup, not solve time).
"""

import contextlib
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import ai_zeros

import deltaspec as ds
from deltaspec import inverse
from deltaspec.cli import main as cli_main
from deltaspec.lctransform import transform, weighted_eigen

QH = ds.parse_potential("x^2")
QA = ds.parse_potential("x")
QW = ds.parse_potential("-5*[x<1]")

CFG = ds.SolverConfig()

AIRY_LAMBDA_1 = float(-ai_zeros(1)[0][0])


def well_oracle():
    k = brentq(lambda k: k / math.tan(k) + math.sqrt(5.0 - k * k),
               math.pi / 2 + 1e-9, min(math.sqrt(5.0), math.pi) - 1e-9,
               xtol=1e-15)
    return k * k - 5.0


@contextlib.contextmanager
def criterion(num, summary):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:2d} FAIL: {summary}")
        raise
    dt = time.perf_counter() - t0
    print(f"ACCEPTANCE {num:2d} PASS: {summary} [{dt:.1f}s]")


# Shared expensive computations -------------------------------------------

GRID_T = {"x^2": (0.5, 1.0, 1.5, 2.0, 2.5), "well": (0.3, 0.6, 0.9, 1.2, 1.5)}
GRID_R = (0.01, 0.03, 0.05)


@pytest.fixture(scope="module")
def perturbed_grid():
    """lambda_tr on a 5x3 (t, r) grid for the harmonic and well potentials."""
    t0 = time.perf_counter()
    out = {}
    for q, key in ((QH, "x^2"), (QW, "well")):
        hyp = ds.classify(q, CFG)
        for t in GRID_T[key]:
            for r in GRID_R:
                out[(key, t, r)] = ds.lambda_tr(q, t, r, CFG, hypothesis=hyp)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def harmonic_roundtrip():
    cfg = CFG.replace(t_grid=tuple(np.round(np.arange(0.1, 3.5 + 1e-12, 0.05), 10)),
                      r_ladder=(0.04, 0.02, 0.01))
    t0 = time.perf_counter()
    rep = inverse.roundtrip(QH, cfg)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def airy_roundtrip():
    cfg = CFG.replace(t_grid=tuple(np.round(np.arange(0.1, 3.5 + 1e-12, 0.05), 10)),
                      r_ladder=(0.04, 0.02, 0.01))
    t0 = time.perf_counter()
    rep = inverse.roundtrip(QA, cfg)
    return rep, time.perf_counter() - t0


# Criteria ------------------------------------------------------------------

def test_criterion_01_harmonic_forward_oracle():
    with criterion(1, "first_eigenvalue(x^2) = 3 within 1e-6, under 5 s"):
        t0 = time.perf_counter()
        fe = ds.first_eigenvalue(QH, CFG)
        dt = time.perf_counter() - t0
        assert abs(fe.lambda_1 - 3.0) <= 1e-6
        assert dt < 5.0


def test_criterion_02_airy_forward_oracle():
    with criterion(2, "first_eigenvalue(x) = 2.3381074 within 1e-6, under 10 s"):
        t0 = time.perf_counter()
        fe = ds.first_eigenvalue(QA, CFG)
        dt = time.perf_counter() - t0
        assert abs(fe.lambda_1 - AIRY_LAMBDA_1) <= 1e-6
        assert abs(fe.lambda_1 - 2.3381074) <= 1e-6
        assert dt < 10.0


def test_criterion_03_well_forward_oracle():
    with criterion(3, "first_eigenvalue(well) matches k*cot(k) = -kappa root within 1e-6"):
        fe = ds.first_eigenvalue(QW, CFG)
        assert abs(fe.lambda_1 - well_oracle()) <= 1e-6


def test_criterion_04_perturbed_vs_fd_oracle(perturbed_grid):
    with criterion(4, "lambda_tr vs FD oracle within max(1e-4, 10 h^2) on 5x3 grids, under 2 min"):
        grid, elapsed = perturbed_grid
        tol = max(1e-4, 10.0 * CFG.h ** 2)
        t0 = time.perf_counter()
        for (key, t, r), pe in grid.items():
            q = QH if key == "x^2" else QW
            b_fd = 8.0 if key == "x^2" else 24.0
            fd = ds.oracle_fd(q, t, r, b_fd, CFG.h)
            assert abs(fd - pe.lambda_tr) <= tol, (key, t, r)
        total = elapsed + (time.perf_counter() - t0)
        assert total < 120.0


def test_criterion_05_matching_residual(perturbed_grid):
    with criterion(5, "|r phi Psi - 1/m| <= 1e-8 at every computed lambda_tr"):
        grid, _ = perturbed_grid
        for (key, t, r), pe in grid.items():
            q = QH if key == "x^2" else QW
            f = ds.matching_residual(q, pe.t, r, pe.lambda_tr, pe.b_used, CFG.h)
            assert abs(f) <= 1e-8, (key, t, r, f)


def test_criterion_06_ordering_and_sign(perturbed_grid):
    with criterion(6, "lambda(t,0) = lambda(0,r) = lambda_1 exactly; "
                      "lambda(t,r) < lambda_1; no eigenfunction sign change"):
        grid, _ = perturbed_grid
        for q in (QH, QW):
            fe = ds.first_eigenvalue(q, CFG)
            assert ds.lambda_tr(q, 1.3, 0.0, CFG).lambda_tr == fe.lambda_1
            assert ds.lambda_tr(q, 0.0, 0.04, CFG).lambda_tr == fe.lambda_1
        lam1 = {"x^2": ds.first_eigenvalue(QH, CFG).lambda_1,
                "well": ds.first_eigenvalue(QW, CFG).lambda_1}
        for (key, t, r), pe in grid.items():
            assert pe.lambda_tr < lam1[key]
            assert pe.phi0.zero_count() == 0, (key, t, r)
            assert abs(pe.jump_residual) <= 1e-6 * pe.phi0.max_abs_derivative()


def test_criterion_07_derivative_law(perturbed_grid):
    with criterion(7, "d lambda/dr: finite difference vs -phi0(t)^2 vs formula, "
                      "1e-3 relative across the t grid"):
        grid, _ = perturbed_grid
        r = 0.05
        step = 1e-3
        for t in GRID_T["x^2"]:
            pe = grid[("x^2", t, r)]
            formula = ds.dlambda_dr_formula(QH, t, r, CFG, perturbed=pe)
            phi_sq = pe.phi0.value_at(pe.t) ** 2
            fd = (ds.lambda_tr(QH, t, r + step, CFG).lambda_tr
                  - ds.lambda_tr(QH, t, r - step, CFG).lambda_tr) / (2 * step)
            assert abs(fd + phi_sq) / phi_sq <= 1e-3, t
            assert abs(fd - formula) / abs(formula) <= 1e-3, t
        # and at r = 0 the formula equals minus the squared unperturbed
        # ground state
        fe = ds.first_eigenvalue(QH, CFG)
        for t in GRID_T["x^2"]:
            formula0 = ds.dlambda_dr_formula(QH, t, 0.0, CFG)
            phi_sq0 = fe.eigenfunction.value_at(t)[0] ** 2
            assert abs(formula0 + phi_sq0) / phi_sq0 <= 1e-3, t


def test_criterion_08_weyl_identities():
    with criterion(8, "m_b monotone below lambda_1; m' and u integral "
                      "identities within 1e-4 relative"):
        grid = np.linspace(0.0, 2.95, 20)
        ms = [ds.m_truncated(QH, float(l), 8.0, CFG.h) for l in grid]
        assert all(b > a for a, b in zip(ms, ms[1:]))
        dl = 1e-5
        ev = ds.psi_weyl(QH, 2.0, 8.0, CFG.h)
        fd_mprime = (ds.m_truncated(QH, 2.0 + dl, 8.0, CFG.h)
                     - ds.m_truncated(QH, 2.0 - dl, 8.0, CFG.h)) / (2 * dl)
        assert abs(fd_mprime - ev.m_prime_integral) / abs(fd_mprime) <= 1e-4
        u = ds.u_of_lambda(QH, 2.0, 8.0, CFG.h)
        assert abs(u - ev.u_value) / abs(u) <= 1e-4


def test_criterion_09_transform_invariance():
    with criterion(9, "weighted eigenvalue equals direct eigenvalue within "
                      "1e-6 for three (q, g) pairs on [0, 6]"):
        cfg6 = ds.SolverConfig(b=6.0)
        pairs = [("x^2", "1"), ("x^2", "1+x"), ("x", "exp(0-x/2)")]
        for q_expr, g_expr in pairs:
            q = ds.parse_potential(q_expr)
            wp = transform(q, ds.parse_potential(g_expr), cfg6)
            lw = weighted_eigen(wp, 6.0, CFG.h)
            ld = ds.eigen_truncated(q, 6.0, 1, CFG.h)
            assert abs(lw - ld) <= 1e-6, (q_expr, g_expr)


def test_criterion_10_roundtrip(harmonic_roundtrip, airy_roundtrip):
    with criterion(10, "round-trip reconstruction error <= 5e-2 on the window "
                       "for x^2 and x, each under 5 min"):
        for rep, elapsed in (harmonic_roundtrip, airy_roundtrip):
            assert rep.max_abs_err <= 5e-2
            assert elapsed < 300.0


def test_criterion_11_formula_in_isolation():
    with criterion(11, "reconstruction from the analytic slope table matches "
                       "x^2 within 1e-4"):
        ts = np.round(np.arange(0.1, 3.5 + 1e-12, 0.05), 12)
        rs = np.array([0.01, 0.02, 0.04])
        s = -4.0 / math.sqrt(math.pi) * ts ** 2 * np.exp(-ts ** 2)
        lam = np.empty((len(ts), len(rs) + 1))
        lam[:, 0] = 3.0
        for j, r in enumerate(rs):
            lam[:, j + 1] = 3.0 + s * r
        table = ds.SampleTable(ts=ts, rs=np.concatenate(([0.0], rs)),
                               lam=lam, lambda_1=3.0)
        result = inverse.reconstruct(table)
        assert np.max(np.abs(result.qhat - result.xs ** 2)) <= 1e-4


def test_criterion_12_failure_detection(tmp_path):
    with criterion(12, "q = 0 exits with code 3; a table violating the "
                       "ordering exits with code 5"):
        code = cli_main(["roundtrip", "--potential", "0", "--t-min", "0.5",
                         "--t-max", "1.0", "--t-step", "0.5",
                         "--r-ladder", "0.02,0.01", "--out", str(tmp_path / "rt")])
        assert code == 3
        bad = tmp_path / "bad.csv"
        rows = ["t,r,lambda"]
        for t in (0.5, 1.0):
            rows += [f"{t},0.0,3.0", f"{t},0.01,3.4", f"{t},0.02,3.5"]
        bad.write_text("\n".join(rows) + "\n")
        code = cli_main(["invert", "--table", str(bad), "--out", str(tmp_path / "inv")])
        assert code == 5


def test_criterion_13_determinism(tmp_path):
    with criterion(13, "two roundtrip runs with workers=1 produce "
                       "byte-identical artifacts"):
        args = ["roundtrip", "--potential", "x^2", "--t-min", "0.4",
                "--t-max", "1.8", "--t-step", "0.1",
                "--r-ladder", "0.04,0.02", "--workers", "1"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli_main(args + ["--out", str(a)]) == 0
        assert cli_main(args + ["--out", str(b)]) == 0
        for name in ("table.csv", "table.json", "reconstruction.csv",
                     "reconstruction.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
