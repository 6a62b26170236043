"""Command-line front end.

    hillkit find-orbit <cfg.toml> [--output FILE]
    hillkit analyze <cfg.toml> [--orbit FILE] [--rho-grid N]
    hillkit hill-continuous <cfg.toml> [--max-order N]
    hillkit report <report.json> --format json|csv [--output FILE]

Exit codes: 0 ok, 2 no convergence, 3 theorem violation (a bug, since the
verified identities are exact), 4 truncation not stabilized, 5 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dls, figures, hill, report as rep, reversible, routh
from .billiards import BilliardLagrangian
from .config import ConfigError, build_model, is_billiard_kind, load_config
from .continuous import (
    DEFAULT_LADDER,
    _SpectralBasis,
    identity_residual_grid,
    rho_index_continuous,
)
from .errors import (
    ConditionAFailed,
    ConditionBFailed,
    ExcessDegeneracy,
    HillkitError,
    NoConvergence,
    NotReversible,
    NotStabilized,
    TheoremViolation,
)

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_THEOREM_VIOLATION = 3
EXIT_NOT_STABILIZED = 4
EXIT_CONFIG = 5


def _out_dir(cfg, cfg_path):
    directory = cfg.get("output", {}).get("directory")
    base = Path(directory) if directory else Path(cfg_path).resolve().parent / "hillkit-out"
    base.mkdir(parents=True, exist_ok=True)
    return base


def _build_orbit(cfg, model, kind):
    orbit_cfg = cfg.get("orbit", {})
    if "guess" not in orbit_cfg:
        raise ConfigError("[orbit] needs a 'guess' table of points")
    guess = np.asarray(orbit_cfg["guess"], dtype=float)
    if guess.ndim == 1:
        guess = guess[:, None]
    tags = tuple(orbit_cfg["cycle"]) if "cycle" in orbit_cfg else None
    tol = float(orbit_cfg.get("tolerance", 1e-11))
    if orbit_cfg.get("refine", True):
        return dls.refine_orbit(model, dls.PeriodicOrbit(points=guess, chart_tags=tags), tol=tol)
    return dls.orbit_with_residual(model, guess, chart_tags=tags, tol=tol)


def _load_orbit(path):
    with open(path, "r", encoding="ascii") as handle:
        payload = json.load(handle)
    return dls.PeriodicOrbit(
        points=np.asarray(payload["points"], dtype=float),
        chart_tags=tuple(payload["chart_tags"]) if "chart_tags" in payload else None,
        residual_norm=float(payload["residual_norm"]["value"]),
        converged=bool(payload["converged"]),
    )


def _involution_from_config(rev_cfg, dim):
    kind = rev_cfg.get("kind", "identity")
    if kind == "identity":
        return reversible.identity_involution(dim)
    if kind == "negation":
        return reversible.negation_involution(dim)
    if kind == "angle_reflection":
        return reversible.angle_reflection(float(rev_cfg.get("center", 0.0)))
    raise ConfigError(f"unknown reversible kind '{kind}'")


def _symmetry_basis(sym_cfg, orbit):
    kind = sym_cfg.get("kind")
    n, m = orbit.period, orbit.dim
    if kind == "rotation":
        return np.ones((1, n, m))
    if kind == "cyclic":
        coords = sym_cfg.get("coordinates", [])
        w = np.zeros((len(coords), n, m))
        for a, c in enumerate(coords):
            w[a, :, int(c)] = 1.0
        return w
    raise ConfigError(f"unknown symmetry kind '{kind}'")


def cmd_find_orbit(args):
    cfg = load_config(args.config)
    kind, model = build_model(cfg)
    if kind in ("continuous",):
        raise ConfigError("find-orbit needs a discrete model")
    orbit = _build_orbit(cfg, model, kind)
    payload = rep.orbit_payload(
        orbit, action_value=dls.action(model, orbit), tol=float(cfg.get("orbit", {}).get("tolerance", 1e-11))
    )
    out = Path(args.output) if args.output else _out_dir(cfg, args.config) / "orbit.json"
    rep.write_json(out, payload)
    print(out)
    return EXIT_OK


def cmd_analyze(args):
    cfg = load_config(args.config)
    kind, model = build_model(cfg)
    if kind == "continuous":
        raise ConfigError("analyze needs a discrete model; use hill-continuous")
    orbit = _load_orbit(args.orbit) if args.orbit else _build_orbit(cfg, model, kind)
    if not orbit.converged:
        raise NoConvergence(f"orbit residual {orbit.residual_norm:.3e} above tolerance")
    chain = hill.assemble_chain(model, orbit, provenance=kind)
    analysis_cfg = cfg.get("analysis", {})
    grid_size = args.rho_grid or int(analysis_cfg.get("rho_grid", 64))
    extra = [float(r) for r in analysis_cfg.get("extra_real_rho", [0.5, -0.5, 2.0, -2.0, 1.0, -1.0])]
    report = hill.analyze(
        chain,
        rho_grid_size=grid_size,
        extra_rhos=extra,
        is_billiard=is_billiard_kind(kind),
        zero_tol=float(analysis_cfg.get("zero_tol", 1e-9)),
    )
    payload = {
        "orbit": rep.orbit_payload(orbit, action_value=dls.action(model, orbit)),
        "hill": rep.hill_report_payload(report),
    }

    sym_cfg = cfg.get("orbit", {}).get("symmetry")
    if sym_cfg:
        w = _symmetry_basis(sym_cfg, orbit)
        try:
            reduced, data = routh.linear_routh(chain, w)
            eig = routh.generalized_unit_eigendata(chain, data)
            idx_report = routh.index_relation_report(chain, reduced, data, eig)
            rho_reports = [
                routh.rho_reduction_check(chain, reduced, data, rho)
                for rho in (np.exp(1j * np.pi / 3), -1.0 + 0j, 1j)
            ]
            payload["routh"] = rep.routh_payload(idx_report, rho_reports)
        except (ConditionAFailed, ConditionBFailed, ExcessDegeneracy) as exc:
            payload["routh"] = {"condition_failure": str(exc)}

    rev_cfg = cfg.get("orbit", {}).get("reversible")
    if rev_cfg:
        S = _involution_from_config(rev_cfg, orbit.dim)
        try:
            rev = reversible.classify_reversible(
                orbit, S, chart_period=rev_cfg.get("chart_period")
            )
            rev_model = model
            if rev.shift_applied and rev.orbit.chart_tags and hasattr(model, "pieces"):
                # the canonical rotation relabels the itinerary as well
                rev_model = BilliardLagrangian(model.pieces, rev.orbit.chart_tags)
            rev_chain = hill.assemble_chain(rev_model, rev.orbit, provenance=kind + " (canonical)")
            split = reversible.split_hessian(rev_chain, rev)
            verdicts = reversible.reversible_verdicts(rev_chain, rev, split)
            payload["reversible"] = rep.reversible_payload(rev, verdicts)
        except NotReversible as exc:
            payload["reversible"] = {"not_reversible": str(exc)}

    out_dir = _out_dir(cfg, args.config)
    rep.write_json(out_dir / "report.json", payload)
    rep.write_text(out_dir / "rho_grid.csv", rep.rho_grid_csv(report))
    if cfg.get("output", {}).get("figures", True):
        figures.save_rho_grid_figure(report, out_dir / "rho_grid.png")
        figures.save_multiplier_figure(report, out_dir / "multipliers.png")
    print(out_dir / "report.json")
    return EXIT_OK


def cmd_hill_continuous(args):
    cfg = load_config(args.config)
    kind, system = build_model(cfg)
    if kind != "continuous":
        raise ConfigError("hill-continuous needs a continuous model")
    analysis_cfg = cfg.get("analysis", {})
    max_order = args.max_order or int(analysis_cfg.get("max_order", 64))
    ladder = tuple(n for n in DEFAULT_LADDER if n <= max_order) or (max_order,)
    points = int(analysis_cfg.get("rho_points", 8))
    rhos = [complex(np.exp(2j * np.pi * j / points)) for j in range(points)]
    results = identity_residual_grid(system, rhos, ladder)
    basis = _SpectralBasis(system)
    indices = []
    for rho in rhos:
        if abs(abs(rho) - 1.0) < 1e-12:
            indices.append((rho, rho_index_continuous(system, rho, basis=basis)))
    payload = rep.continuous_payload(results, indices)
    out_dir = _out_dir(cfg, args.config)
    rep.write_json(out_dir / "continuous.json", payload)
    rep.write_text(out_dir / "convergence.csv", rep.convergence_csv(results))
    if cfg.get("output", {}).get("figures", True):
        figures.save_convergence_figure(results, out_dir / "convergence.png")
    print(out_dir / "continuous.json")
    return EXIT_OK


def cmd_report(args):
    with open(args.report, "r", encoding="ascii") as handle:
        payload = json.load(handle)
    if args.format == "json":
        text = rep.to_json(payload)
    else:
        text = rep.report_to_csv(payload)
    if args.output:
        rep.write_text(args.output, text)
        print(args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hillkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("find-orbit", help="refine a periodic orbit from a config guess")
    p.add_argument("config")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_find_orbit)

    p = sub.add_parser("analyze", help="full Hill analysis of a discrete orbit")
    p.add_argument("config")
    p.add_argument("--orbit", default=None, help="orbit JSON produced by find-orbit")
    p.add_argument("--rho-grid", type=int, default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("hill-continuous", help="truncated Hill determinants of a flow")
    p.add_argument("config")
    p.add_argument("--max-order", type=int, default=None)
    p.set_defaults(fn=cmd_hill_continuous)

    p = sub.add_parser("report", help="re-emit a report as json or csv")
    p.add_argument("report")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except TheoremViolation as exc:
        print(f"theorem violation (implementation bug): {exc}", file=sys.stderr)
        return EXIT_THEOREM_VIOLATION
    except NotStabilized as exc:
        print(f"truncation not stabilized: {exc}", file=sys.stderr)
        return EXIT_NOT_STABILIZED
    except HillkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
