"""Run-configuration loading and schema validation (TOML in).

Exact key names
---------------
Top level: ``schema_version`` (must be 1), ``[model]``, ``[orbit]``,
``[analysis]``, ``[output]``.  Unknown keys anywhere are rejected.

[model]
    kind         one of standard_map | circle | ellipse | ellipsoid |
                 polygon | two_disk | continuous | discretized
    dim          chart dimension (standard_map)
    kinetic      symmetric matrix as a list of rows (standard_map)
    potential    table with keys:
                   cos / sin  lists of [coefficient, wavevector] pairs
                              (discrete maps) or [coefficient, harmonic]
                              pairs (continuous kinds)
                   constant   scalar offset (continuous kinds)
    radius       circle radius
    a, b, c      ellipse / ellipsoid semi-axes
    vertices     polygon vertex list, in order
    centers      two disk centers (two_disk)
    radii        two disk radii (two_disk)
    tau          period of a continuous system
    steps        grid steps of a discretized flow

[orbit]
    period       number of points
    guess        list of chart points
    cycle        boundary-piece itinerary for billiards
    refine       run Newton refinement (default true)
    tolerance    residual tolerance for convergence
    reversible   table: kind = identity | negation | angle_reflection,
                 center (reflection axis angle), chart_period (wraps angle
                 charts when matching points)
    symmetry     table: kind = rotation | cyclic,
                 coordinates (cyclic chart indices)

[analysis]
    rho_grid        unit-circle grid size for the discrete sweep
    extra_real_rho  additional real exponents
    max_order       truncation cap for the continuous ladder
    rho_points      unit-circle grid size for the continuous sweep
    zero_tol        eigenvalue nullity threshold

[output]
    directory    output directory (created if missing)
    figures      render PNG figures next to the CSV output (default true)
    formats      reserved for format selection
"""

from __future__ import annotations

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import billiards, models
from .continuous import scalar_system
from .errors import ConfigError

_NUMBER = (int, float)

SCHEMA = {
    "schema_version": int,
    "model": {
        "kind": str,
        "dim": int,
        "kinetic": list,
        "potential": {"cos": list, "sin": list, "constant": _NUMBER},
        "radius": _NUMBER,
        "a": _NUMBER,
        "b": _NUMBER,
        "c": _NUMBER,
        "vertices": list,
        "centers": list,
        "radii": list,
        "tau": _NUMBER,
        "steps": int,
    },
    "orbit": {
        "period": int,
        "guess": list,
        "cycle": list,
        "refine": bool,
        "tolerance": _NUMBER,
        "winding": int,
        "reversible": {"kind": str, "center": _NUMBER, "chart_period": _NUMBER},
        "symmetry": {"kind": str, "coordinates": list},
    },
    "analysis": {
        "rho_grid": int,
        "extra_real_rho": list,
        "max_order": int,
        "rho_points": int,
        "zero_tol": _NUMBER,
    },
    "output": {"directory": str, "figures": bool, "formats": list},
}


def _validate(node, schema, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    for key, value in node.items():
        if key not in schema:
            raise ConfigError(f"unknown key '{path + key}'")
        expected = schema[key]
        if isinstance(expected, dict):
            _validate(value, expected, path + key + ".")
        elif not isinstance(value, expected):
            raise ConfigError(f"key '{path + key}' has wrong type {type(value).__name__}")


def load_config(path):
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    _validate(raw, SCHEMA, "")
    if raw.get("schema_version") != 1:
        raise ConfigError("schema_version must be 1")
    if "model" not in raw or "kind" not in raw["model"]:
        raise ConfigError("config needs a [model] table with a 'kind'")
    return raw


def _trig_potential(dim, spec):
    if spec is None:
        return models.zero_potential(dim)
    cos_terms = [(c, k) for c, k in (tuple(t) for t in spec.get("cos", []))]
    sin_terms = [(c, k) for c, k in (tuple(t) for t in spec.get("sin", []))]
    return models.TrigPotential(dim, cos_terms=cos_terms, sin_terms=sin_terms)


def _scalar_coefficient(spec, tau):
    constant = float(spec.get("constant", 0.0))
    cos_terms = [(float(c), int(k)) for c, k in (tuple(t) for t in spec.get("cos", []))]
    sin_terms = [(float(c), int(k)) for c, k in (tuple(t) for t in spec.get("sin", []))]
    omega = 2 * np.pi / tau

    def a(t):
        out = constant
        for c, k in cos_terms:
            out += c * np.cos(k * omega * t)
        for c, k in sin_terms:
            out += c * np.sin(k * omega * t)
        return out

    return a


def build_model(cfg):
    """Instantiate the model named by the config; returns (kind, object)."""
    spec = cfg["model"]
    kind = spec["kind"]
    if kind == "standard_map":
        dim = int(spec.get("dim", 1))
        kinetic = np.asarray(spec.get("kinetic", np.eye(dim).tolist()), dtype=float)
        return kind, models.StandardMap(kinetic, _trig_potential(dim, spec.get("potential")))
    if kind == "circle":
        n = int(cfg.get("orbit", {}).get("period", 2))
        return kind, billiards.circle_billiard(float(spec.get("radius", 1.0)), n)
    if kind == "ellipse":
        n = int(cfg.get("orbit", {}).get("period", 2))
        return kind, billiards.ellipse_billiard(float(spec["a"]), float(spec["b"]), n)
    if kind == "ellipsoid":
        n = int(cfg.get("orbit", {}).get("period", 2))
        return kind, billiards.ellipsoid_billiard(
            float(spec["a"]), float(spec["b"]), float(spec["c"]), n
        )
    if kind == "polygon":
        cycle = cfg.get("orbit", {}).get("cycle")
        return kind, billiards.polygon_billiard(spec["vertices"], cycle)
    if kind == "two_disk":
        centers = spec.get("centers", [[0.0, 0.0], [4.0, 0.0]])
        radii = spec.get("radii", [1.0, 1.0])
        return kind, billiards.two_disk_billiard(centers, radii)
    if kind == "continuous":
        tau = float(spec.get("tau", 2 * np.pi))
        pot = spec.get("potential")
        if pot is None:
            raise ConfigError("continuous model needs [model.potential]")
        return kind, scalar_system(tau, _scalar_coefficient(pot, tau))
    if kind == "discretized":
        tau = float(spec.get("tau", 2 * np.pi))
        pot = spec.get("potential")
        if pot is None:
            raise ConfigError("discretized model needs [model.potential]")
        system = scalar_system(tau, _scalar_coefficient(pot, tau))
        return kind, models.discretize_cls(system, int(spec.get("steps", 16)))
    raise ConfigError(f"unknown model kind '{kind}'")


def is_billiard_kind(kind):
    return kind in ("circle", "ellipse", "ellipsoid", "polygon", "two_disk")
