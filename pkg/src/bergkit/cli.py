"""Command-line experiment driver.

Every subcommand writes one CSV (curves) or JSON (reports) document to
``--out`` or stdout.  CSV documents start with ``#`` comment lines holding
the full configuration; JSON documents carry it under ``"config"``.
Numbers are printed with 12 significant digits so that identical
configurations give byte-identical files.

Exit codes: 0 success, 2 invalid configuration, 3 truncation warnings under
``--strict``.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings

import numpy as np

from . import catalog
from .config import ConfigError, RunConfig, read_config_file, update
from .essnorm import (SEGMENT_RADIUS, EstimatorConfig, compactness_test, essnorm_report,
                      segmented_sweep, working_degree)
from .geometry import identity_residuals, random_points
from .lattice import LATTICE_RADIUS, build_lattice, mu_rho
from .measures import carleson_geo, carleson_rkm, default_probes, fst_growth
from .operators import TruncationWarning, berezin, bk_error_curve, get_basis, tmu_matrix
from .quadrature import build_grid, build_hyperbolic_grid, monomial_exactness_error

SUBCOMMANDS = ("geometry-check", "quadrature-check", "fst-growth", "lattice", "carleson",
               "berezin", "bk-approx", "mu-rho", "segmented", "essnorm", "compactness")

def fmt(x) -> str:
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.12g},{x.imag:.12g}"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def clean(obj):
    """Round floats to 12 significant digits for stable JSON."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    return obj


class Csv:
    def __init__(self, cfg: RunConfig, command: str, columns):
        self.buf = io.StringIO()
        self.buf.write(f"# command: {command}\n")
        self.buf.write("# config: " + json.dumps(clean(cfg.as_dict()), sort_keys=True) + "\n")
        self.columns = list(columns)
        self.notes = []

    def note(self, key, value):
        self.buf.write(f"# {key}: {json.dumps(clean(value), sort_keys=True)}\n")

    def rows(self, rows):
        self.buf.write(",".join(self.columns) + "\n")
        for r in rows:
            self.buf.write(",".join(fmt(v) for v in r) + "\n")

    def text(self) -> str:
        return self.buf.getvalue()


def json_doc(cfg: RunConfig, command: str, result: dict) -> str:
    doc = {"command": command, "config": cfg.as_dict(), "result": result}
    return json.dumps(clean(doc), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- subcommands

def cmd_geometry_check(cfg):
    rng = np.random.default_rng(cfg.seed)
    z, w, a = (random_points(cfg.pairs, cfg.n, rng) for _ in range(3))
    res = identity_residuals(z, w, a)
    res["pairs"] = cfg.pairs
    return json_doc(cfg, "geometry-check", res)


def _grid(cfg):
    radial = cfg.radial_order or max(1, math.ceil((cfg.degree + 2) / 4))
    return build_grid(cfg.n, cfg.alpha, radial, cfg.angular_order or cfg.degree + 1)


def cmd_quadrature_check(cfg):
    g = _grid(cfg)
    check = g.exact_degree if cfg.n == 1 else min(g.exact_degree, 12)
    res = {"mass": float(np.sum(g.weights)), "mass_error": abs(float(np.sum(g.weights)) - 1),
           "nodes": g.size, "exact_degree": g.exact_degree, "checked_degree": check,
           "monomial_error": monomial_exactness_error(g, check)}
    return json_doc(cfg, "quadrature-check", res)


def cmd_fst_growth(cfg):
    g = fst_growth(cfg.s, cfg.t, cfg.n)
    out = Csv(cfg, "fst-growth", ["radius", "one_minus_r2", "F"])
    out.note("slope", g["slope"])
    out.note("predicted_slope", g["predicted_slope"])
    out.note("outer_spread", g["outer_spread"])
    out.rows(zip(g["radii"], 1 - g["radii"] ** 2, g["values"]))
    return out.text()


def _hyperbolic_grid(cfg, radius):
    if cfg.n != 1:
        raise ConfigError("lattices are built on the disk (n = 1)")
    return build_hyperbolic_grid(cfg.alpha, cfg.rho / 4, radius)


def cmd_lattice(cfg):
    grid = _hyperbolic_grid(cfg, cfg.radius)
    lat = build_lattice(cfg.rho, cfg.radius, grid)
    sep, cov = lat.separation, lat.covering_radius
    out = Csv(cfg, "lattice", ["m", "re", "im", "cell_mass"])
    out.note("checks", {"centers": lat.size, "nodes": grid.size, "min_separation": sep,
                        "separation_ok": bool(sep >= cfg.rho / 2), "covering_radius": cov,
                        "covering_ok": bool(cov <= cfg.rho)})
    masses = lat.cell_masses()
    out.rows((m, c[0].real, c[0].imag, ms) for m, (c, ms) in enumerate(zip(lat.centers, masses)))
    return out.text()


def _measure(cfg):
    return catalog.measure(cfg.measure, cfg.n, cfg.alpha, cfg.rho, cfg.degree)


def cmd_carleson(cfg):
    mu = _measure(cfg)
    probes = default_probes(cfg.n, seed=cfg.seed)
    if mu.is_atomic and mu.points.shape[0] <= 64:
        probes = np.concatenate([probes, mu.points])
    rkm = carleson_rkm(mu, probes, cfg.alpha)
    geo = carleson_geo(mu, cfg.disk_radius, probes, cfg.alpha)
    return json_doc(cfg, "carleson", {"measure": mu.label, "rkm": rkm, "geo": geo,
                                      "ratio": rkm / geo if geo else math.inf,
                                      "probes": int(probes.shape[0])})


def _basis(cfg):
    return get_basis(cfg.n, cfg.alpha, cfg.degree)


def cmd_berezin(cfg):
    S = catalog.operator(cfg.symbol, _basis(cfg), cfg.p)
    ecfg = _est_cfg(cfg)
    D, ok = working_degree(S, max(cfg.shells), ecfg.berezin_tail_tol, ecfg.max_degree)
    if not ok:
        warnings.warn(f"radius {max(cfg.shells)} not resolved at degree {D}", TruncationWarning)
    S = S.at_degree(D)
    radii = np.linspace(0.0, max(cfg.shells), 50)
    pts = np.zeros((radii.size, cfg.n), complex)
    pts[:, 0] = radii
    vals = berezin(S, pts)
    out = Csv(cfg, "berezin", ["radius", "re", "im"])
    out.note("working_degree", D)
    out.rows((r, v.real, v.imag) for r, v in zip(radii, vals))
    return out.text()


def cmd_bk_approx(cfg):
    mu = _measure(cfg)
    ks, errs = bk_error_curve(mu, _basis(cfg), cfg.alpha, cfg.k_max, cfg.p)
    out = Csv(cfg, "bk-approx", ["k", "error"])
    out.note("measure", mu.label)
    out.rows(zip(ks, errs))
    return out.text()


def cmd_mu_rho(cfg):
    grid = _hyperbolic_grid(cfg, LATTICE_RADIUS)
    lat = build_lattice(cfg.rho, LATTICE_RADIUS, grid, check=False)
    mu = mu_rho(lat)
    dev = float(np.linalg.norm(tmu_matrix(mu, _basis(cfg)).data - np.eye(_basis(cfg).size), 2))
    out = Csv(cfg, "mu-rho", ["m", "re", "im", "mass"])
    out.note("summary", {"atoms": lat.size, "truncation_radius": LATTICE_RADIUS,
                         "distance_to_identity": dev, "total_mass": mu.total_variation()})
    out.rows((m, c[0].real, c[0].imag, ms.real) for m, (c, ms) in
             enumerate(zip(mu.points, mu.masses)))
    return out.text()


def cmd_segmented(cfg):
    if cfg.n != 1:
        raise ConfigError("segmented runs on the disk (n = 1)")
    S = catalog.operator(cfg.symbol, _basis(cfg), cfg.p)
    rows = segmented_sweep(S, cfg.sigma, cfg.k, cfg.rho, alpha=cfg.alpha)
    return json_doc(cfg, "segmented", {"operator": S.label, "grid_radius": SEGMENT_RADIUS,
                                       "sweep": rows})


def _est_cfg(cfg):
    return EstimatorConfig(shells=tuple(cfg.shells))


def cmd_essnorm(cfg):
    if cfg.n != 1 or cfg.p != 2:
        raise ConfigError("essnorm runs on the disk with p = 2")
    S = catalog.operator(cfg.symbol, _basis(cfg), cfg.p)
    rep = essnorm_report(S, _est_cfg(cfg))
    return json_doc(cfg, "essnorm", rep.as_dict())


def cmd_compactness(cfg):
    S = catalog.operator(cfg.symbol, _basis(cfg), cfg.p)
    v = compactness_test(S, _est_cfg(cfg))
    return json_doc(cfg, "compactness", {
        "operator": S.label, "verdict": v.verdict, "berezin_by_shell": v.berezin_by_shell,
        "berezin_degree": v.berezin_degree, "c_cutoff": v.c_cutoff,
        "c_by_degree": v.c_by_degree, "trend_degrees": list(EstimatorConfig().trend_degrees),
        "thresholds": v.thresholds, "reasons": v.reasons})


COMMANDS = {
    "geometry-check": cmd_geometry_check, "quadrature-check": cmd_quadrature_check,
    "fst-growth": cmd_fst_growth, "lattice": cmd_lattice, "carleson": cmd_carleson,
    "berezin": cmd_berezin, "bk-approx": cmd_bk_approx, "mu-rho": cmd_mu_rho,
    "segmented": cmd_segmented, "essnorm": cmd_essnorm, "compactness": cmd_compactness,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bergkit", description="Weighted Bergman space experiments")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="key=value file; flags override it")
    ap.add_argument("--n", type=int)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--p", type=float)
    ap.add_argument("--degree", type=int)
    ap.add_argument("--radial-order", type=int)
    ap.add_argument("--angular-order", type=int)
    ap.add_argument("--shells", help="comma-separated radii")
    ap.add_argument("--rho", type=float)
    ap.add_argument("--radius", type=float)
    ap.add_argument("--sigma", help="comma-separated values")
    ap.add_argument("--k", type=int)
    ap.add_argument("--k-max", type=int)
    ap.add_argument("--s", type=float)
    ap.add_argument("--t", type=float)
    ap.add_argument("--disk-radius", type=float)
    ap.add_argument("--pairs", type=int)
    ap.add_argument("--symbol")
    ap.add_argument("--measure")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--strict", action="store_true", default=None)
    return ap


def make_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            update(cfg, read_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    update(cfg, flags)
    return cfg.validate()


def run(command: str, cfg: RunConfig):
    """Run a subcommand; returns ``(exit_code, text)``."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        text = COMMANDS[command](cfg)
    flags = [w for w in caught if issubclass(w.category, TruncationWarning)]
    for w in flags:
        print(f"warning: {w.message}", file=sys.stderr)
    if flags and cfg.strict:
        return 3, None
    return 0, text


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        code, text = run(args.command, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if text is not None:
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
