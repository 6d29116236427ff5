"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also collected into an "acceptance criteria" section of
the terminal summary.
"""
import hashlib
import subprocess
import sys
import time
from itertools import combinations

import numpy as np
import pytest

from bergkit import catalog as cat
from bergkit.essnorm import (compactness_test, ess_spectral_radius_p2, essnorm_report,
                             segmented_sweep)
from bergkit.geometry import identity_residuals, random_points
from bergkit.lattice import build_lattice, lattice_measure
from bergkit.measures import (carleson_geo, carleson_rkm, default_probes, dirac, fst_growth,
                              valpha)
from bergkit.operators import bk_error_curve, get_basis, identity, rank_one, tmu_matrix
from bergkit.quadrature import build_hyperbolic_grid

from conftest import SESSION_START, record

# calibrated spread bound for the Carleson ratio (see the decisions ledger)
CARLESON_C = 8.0


def test_criterion_01_geometry_identities():
    rng = np.random.default_rng(1)
    worst, elapsed = {}, 0.0
    for n in (1, 2):
        t0 = time.perf_counter()
        z, w, a = (random_points(10_000, n, rng) for _ in range(3))
        res = identity_residuals(z, w, a)
        elapsed += time.perf_counter() - t0
        worst[n] = max(res.values())
    ok = all(v < 1e-10 for v in worst.values()) and elapsed < 2.0
    record(1, ok, f"max residual n=1 {worst[1]:.2e}, n=2 {worst[2]:.2e}; {elapsed:.2f} s")
    assert ok


def test_criterion_02_normalization():
    errs = {}
    for n, tol in ((1, 1e-8), (2, 1e-5)):
        for alpha in (-0.5, 0.0, 0.5, 2.0):
            mass = valpha(n, alpha).integrate(lambda w: np.ones(w.shape[0]))
            errs[(n, alpha)] = (abs(mass - 1), tol)
    ok = all(e < tol for e, tol in errs.values())
    worst1 = max(e for (n, _), (e, _) in errs.items() if n == 1)
    worst2 = max(e for (n, _), (e, _) in errs.items() if n == 2)
    record(2, ok, f"mass error n=1 {worst1:.1e}, n=2 {worst2:.1e}")
    assert ok


def test_criterion_03_growth():
    steep = fst_growth(4.0, 0.0, 1)
    flat = fst_growth(1.0, 0.0, 1)
    slope_ok = abs(steep["slope"] - steep["predicted_slope"]) <= 0.05
    spread_ok = flat["outer_spread"] < 0.05
    ok = slope_ok and spread_ok
    record(3, ok, f"slope {steep['slope']:.4f} (predicted {steep['predicted_slope']:.1f}); "
                  f"bounded-case outer spread {flat['outer_spread']:.2%}")
    assert ok


def test_criterion_04_lattice_invariants():
    details, ok = [], True
    for rho in (0.3, 1.0):
        t0 = time.perf_counter()
        grid = build_hyperbolic_grid(0.0, rho / 4, 0.99)
        lat = build_lattice(rho, 0.99, grid)
        dt = time.perf_counter() - t0
        good = lat.separation >= rho / 2 and lat.covering_radius <= rho and dt < 5.0
        ok &= good
        details.append(f"rho={rho}: {lat.size} centers, sep {lat.separation:.4f}, "
                       f"cover {lat.covering_radius:.4f}, {dt:.2f} s")
    record(4, ok, "; ".join(details))
    assert ok


def test_criterion_05_mu_rho_convergence():
    basis = get_basis(1, 0.0, 30)
    devs = []
    for rho in (1.0, 0.5, 0.25):
        T = tmu_matrix(lattice_measure(rho), basis)
        devs.append(float(np.linalg.norm(T.data - np.eye(basis.size), 2)))
    ok = devs[0] > devs[1] > devs[2] and devs[2] < 0.25
    record(5, ok, "||T_mu_rho - I|| = " + ", ".join(f"{d:.4f}" for d in devs)
           + " for rho = 1, 0.5, 0.25")
    assert ok


def _curve_ok(errs):
    tail = errs[1:]
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    return nonincreasing, errs[-1] / errs[0]


def test_criterion_06_berezin_approximation():
    basis = get_basis(1, 0.0, 30)
    family = {"dirac0": dirac(np.zeros(1)),
              "density-abs2": cat.measure("density-abs2", degree=64),
              "mu-rho(0.5)": lattice_measure(0.5)}
    results, ok = [], True
    for name, mu in family.items():
        _, errs = bk_error_curve(mu, basis, 0.0, 20)
        mono, ratio = _curve_ok(errs)
        good = mono and ratio <= 0.1
        ok &= good
        results.append(f"{name} ratio {ratio:.3f}{'' if good else ' (fails)'}")
    record(6, ok, "final/initial: " + ", ".join(results))
    assert ok


def test_criterion_07_carleson_equivalence():
    alpha, r = 0.0, 0.5
    base = default_probes(1)

    def ratio_pair(mu):
        probes = base
        if mu.is_atomic and mu.points.shape[0] <= 64:
            probes = np.concatenate([base, mu.points])
        rkm = carleson_rkm(mu, probes, alpha)
        geo = carleson_geo(mu, r, probes, alpha)
        return rkm, geo

    named = {"valpha": valpha(1, alpha), "mu-rho": lattice_measure(0.5), "dirac0": dirac(np.zeros(1))}
    ratios = {k: (lambda p: p[0] / p[1])(ratio_pair(mu)) for k, mu in named.items()}
    radii = (0.9, 0.95, 0.99)
    atoms = {}
    for rad in radii:
        for theta in (0.0, 1.0, 2.5):
            z = rad * np.exp(1j * theta)
            atoms[(rad, theta)] = ratio_pair(dirac(np.array([z])))
    ratios.update({f"atom({k[0]}e^{k[1]}i)": v[0] / v[1] for k, v in atoms.items()})
    in_band = all(1 / CARLESON_C <= q <= CARLESON_C for q in ratios.values())
    # both quantities grow together as the atom approaches the boundary
    together = True
    for theta in (0.0, 1.0, 2.5):
        rk = [atoms[(rad, theta)][0] for rad in radii]
        ge = [atoms[(rad, theta)][1] for rad in radii]
        for vals in (rk, ge):
            together &= all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] > 10 * vals[0]
    ok = in_band and together
    lo, hi = min(ratios.values()), max(ratios.values())
    record(7, ok, f"rkm/geo in [{lo:.3f}, {hi:.3f}] within [1/{CARLESON_C:g}, {CARLESON_C:g}]; "
                  f"atom family diverges jointly: {together}")
    assert ok


def test_criterion_08_rank_one_identity():
    worst = 0.0
    for n in (1, 2):
        for d in (1, 5, 10, 20, 40):
            basis = get_basis(n, 0.0, d)
            diff = rank_one(1.0, 1.0, basis).data - tmu_matrix(dirac(np.zeros(n), n), basis).data
            worst = max(worst, float(np.max(np.abs(diff))))
    ok = worst == 0.0
    record(8, ok, f"max |1(x)1 - T_delta0| entry {worst!r} over n in (1, 2), d <= 40")
    assert ok


@pytest.fixture(scope="module")
def disk40():
    return get_basis(1, 0.0, 40)


def test_criterion_09_compactness(disk40):
    cases = {"bump": ("compact", cat.operator("bump", disk40)),
             "semicommutator": ("compact", cat.operator("semicommutator", disk40)),
             "identity": ("non-compact", identity(disk40)),
             "coord": ("non-compact", cat.operator("coord", disk40))}
    ok, parts = True, []
    for name, (want, S) in cases.items():
        v = compactness_test(S)
        outer = v.berezin_by_shell[-1]
        good = v.verdict == want
        if want == "compact":
            good &= outer < 0.05
        if name == "identity":
            good &= all(abs(b - 1) <= 1e-6 for b in v.berezin_by_shell)
        ok &= good
        parts.append(f"{name} {v.verdict} (outer Berezin {outer:.4f})")
    record(9, ok, "; ".join(parts))
    assert ok


@pytest.fixture(scope="module")
def reports(disk40):
    names = ("coord", "half-shift", "bump")
    return {name: essnorm_report(cat.operator(name, disk40)) for name in names}


def test_criterion_10_essential_norm(reports):
    ess = {k: r.ess_norm["estimate"] for k, r in reports.items()}
    values_ok = (abs(ess["coord"] - 1) <= 0.1 and abs(ess["half-shift"] - 1) <= 0.1
                 and ess["bump"] < 0.05)
    agree, parts = True, []
    for name, rep in reports.items():
        est = rep.estimates
        worst = max(max(a, b) / min(a, b) for a, b in combinations(est.values(), 2))
        agree &= worst <= 3
        parts.append(f"{name} ess {ess[name]:.4f}, estimators "
                     + "/".join(f"{v:.3f}" for v in est.values()) + f" (max ratio {worst:.2f})")
    ok = values_ok and agree
    record(10, ok, "; ".join(parts))
    assert ok


def test_criterion_11_segmented():
    S = cat.operator("product", get_basis(1, 0.0, 30))
    rows = segmented_sweep(S, (1.0, 2.0, 3.0), 1)
    errs = [r["error"] for r in rows]
    ok = all(b <= a for a, b in zip(errs, errs[1:])) and errs[2] <= 0.5 * errs[0]
    record(11, ok, "errors " + ", ".join(f"{e:.4f}" for e in errs) + " for sigma = 1, 2, 3")
    assert ok


def test_criterion_12_spectral_radius(disk40, reports):
    rw = ess_spectral_radius_p2(cat.operator("coord", disk40)).estimate
    ra = ess_spectral_radius_p2(cat.operator("bump", disk40)).estimate
    na = reports["bump"].ess_norm["estimate"]
    ok = abs(rw - 1) <= 0.15 and abs(ra - na) <= 0.05
    record(12, ok, f"r_e(T_w) {rw:.4f}; r_e(T_a) {ra:.4f} vs ||T_a||_e {na:.4f}")
    assert ok


def _cli_digest(args):
    out = subprocess.run([sys.executable, "-m", "bergkit", *args], check=True,
                         capture_output=True).stdout
    return hashlib.sha256(out).hexdigest()


def test_criterion_13_determinism_and_budget():
    runs = (["geometry-check", "--seed", "3"], ["fst-growth"], ["lattice", "--rho", "1.0"],
            ["bk-approx", "--measure", "mu-rho"], ["compactness", "--symbol", "bump"])
    same = all(_cli_digest(a) == _cli_digest(a) for a in runs)
    elapsed = time.time() - SESSION_START
    ok = same and elapsed < 600
    record(13, ok, f"repeated CLI runs byte-identical: {same}; suite time {elapsed:.0f} s")
    assert ok
