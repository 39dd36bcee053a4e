"""Run configuration: a JSON key-value tree validated before any computation.

Schema (``schema_version`` 1)::

    {
      "schema_version": 1,
      "manifold": "sphere(1)" | {"builtin": "circle", "args": [6.28]}
                  | {"custom": {"n": 2, "g": [[..], [..]], "domain": [[lo, hi], ..],
                                "periods": [null | number, ..], "aliases": {"u": 1}}},
      "gauge": {"A0": "expr", "A": ["expr", ..]},
      "points": [[..], ..],              # curvature sample points
      "checks": ["lemma", ..],           # verify selection (default: the standard suite)
      "tolerance": number | {"check": number},
      "k": [numbers],                    # spectrum k values
      "grid": [ints],                    # spectrum node counts per axis
      "eigenvalues": int,
      "seed": int,
      "output": "dir",
      "jobs": int
    }

Numeric fields also accept expression strings such as ``"2*pi"`` or ``"1/6"``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from cqmq import manifolds
from cqmq.errors import CQMError, ConfigError
from cqmq.geometry import MetricChart
from cqmq.jetcalc.expr import eval_point, parse

SCHEMA_VERSION = 1

KEYS = {
    "schema_version",
    "manifold",
    "gauge",
    "points",
    "checks",
    "tolerance",
    "k",
    "grid",
    "eigenvalues",
    "seed",
    "output",
    "jobs",
}
CUSTOM_KEYS = {"n", "g", "domain", "periods", "aliases", "name"}
GAUGE_KEYS = {"A0", "A"}
U64 = 2**64


@dataclass
class RunConfig:
    manifold: MetricChart = None
    manifold_spec: object = None
    gauge: dict = None
    points: list = None
    checks: list = None
    tolerance: object = None
    k: list = field(default_factory=lambda: [0.0])
    grid: list = None
    eigenvalues: int = 9
    seed: int = 42
    output: str = None
    jobs: int = 1

    def tolerance_for(self, check):
        if isinstance(self.tolerance, dict):
            return self.tolerance.get(check)
        return self.tolerance


def number(x, where):
    """A real number given as a JSON number or a constant expression."""
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            v = complex(eval_point(parse(x, n=0), []))
        except CQMError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if v.imag != 0:
            raise ConfigError(f"{where}: expected a real number")
        return v.real
    raise ConfigError(f"{where}: expected a number")


def integer(x, where, lo=None, hi=None):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer")
    if (lo is not None and x < lo) or (hi is not None and x >= hi):
        raise ConfigError(f"{where}: {x} out of range")
    return x


def seed_value(x, where="seed"):
    if isinstance(x, str) and x.isdigit():
        x = int(x)
    return integer(x, where, 0, U64)


def _unknown(d, allowed, where):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}", )


_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def manifold_from_spec(spec):
    """Resolve a manifold spec (string, builtin dict or custom dict)."""
    if isinstance(spec, str):
        mt = _CALL.match(spec)
        if not mt:
            raise ConfigError(f"manifold: cannot read {spec!r}")
        name, args = mt.group(1), mt.group(2)
        args = [a for a in (args or "").split(",") if a.strip()]
        return _builtin(name, args)
    if not isinstance(spec, dict):
        raise ConfigError("manifold: expected a string or an object")
    if "builtin" in spec:
        _unknown(spec, {"builtin", "args"}, "manifold")
        return _builtin(spec["builtin"], spec.get("args", []))
    if "custom" in spec:
        _unknown(spec, {"custom"}, "manifold")
        return _custom(spec["custom"])
    raise ConfigError("manifold: expected 'builtin' or 'custom'")


def _builtin(name, args):
    if name not in manifolds.BUILTINS:
        raise ConfigError(f"manifold: unknown builtin {name!r}")
    vals = [number(a, f"manifold.{name}") for a in args]
    if name in ("euclidean",):
        vals = [int(v) for v in vals]
    if name == "random":
        vals = [int(vals[0])] + [int(v) for v in vals[1:2]] + vals[2:]
    try:
        return manifolds.BUILTINS[name](*vals)
    except TypeError as exc:
        raise ConfigError(f"manifold.{name}: {exc}") from exc


def _custom(c):
    if not isinstance(c, dict):
        raise ConfigError("manifold.custom: expected an object")
    _unknown(c, CUSTOM_KEYS, "manifold.custom")
    if "n" not in c or "g" not in c:
        raise ConfigError("manifold.custom: 'n' and 'g' are required")
    n = integer(c["n"], "manifold.custom.n", 1, 8)
    g = c["g"]
    if not (isinstance(g, list) and len(g) == n and all(isinstance(r, list) and len(r) == n for r in g)):
        raise ConfigError(f"manifold.custom.g: expected an {n}x{n} array of expressions")
    g = [[str(x) for x in row] for row in g]
    domain = c.get("domain")
    if domain is not None:
        domain = [(number(lo, "domain"), number(hi, "domain")) for lo, hi in domain]
    periods = c.get("periods")
    if periods is not None:
        periods = [None if p is None else number(p, "periods") for p in periods]
    if domain is None and periods is not None:
        domain = [(0.0, p) if p is not None else (float("-inf"), float("inf")) for p in periods]
    try:
        return MetricChart.from_components(n, g, periods, domain, c.get("aliases"), c.get("name", "custom"))
    except CQMError as exc:
        raise ConfigError(f"manifold.custom.g: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"manifold.custom: {exc}") from exc


def validate(raw):
    """Validate a decoded config tree; raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be an object")
    _unknown(raw, KEYS, "config")
    ver = raw.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {ver!r}")
    cfg = RunConfig()
    if "manifold" in raw:
        cfg.manifold_spec = raw["manifold"]
        cfg.manifold = manifold_from_spec(raw["manifold"])
    if "gauge" in raw:
        gz = raw["gauge"]
        if not isinstance(gz, dict):
            raise ConfigError("gauge: expected an object")
        _unknown(gz, GAUGE_KEYS, "gauge")
        cfg.gauge = {"A0": str(gz.get("A0", "0")), "A": [str(a) for a in gz.get("A", [])] or None}
    if "points" in raw:
        pts = raw["points"]
        if not isinstance(pts, list) or not all(isinstance(p, list) for p in pts):
            raise ConfigError("points: expected a list of coordinate lists")
        cfg.points = [[number(x, "points") for x in p] for p in pts]
        if cfg.manifold is not None and any(len(p) != cfg.manifold.n for p in cfg.points):
            raise ConfigError(f"points: each point needs {cfg.manifold.n} coordinates")
    if "checks" in raw:
        from cqmq.verifier import SUITES

        chk = raw["checks"]
        if not isinstance(chk, list) or not chk:
            raise ConfigError("checks: expected a non-empty list")
        for c in chk:
            if c not in SUITES:
                raise ConfigError(f"checks: unknown check {c!r}")
        cfg.checks = list(chk)
    if "tolerance" in raw:
        t = raw["tolerance"]
        cfg.tolerance = {k: number(v, f"tolerance.{k}") for k, v in t.items()} if isinstance(t, dict) else number(t, "tolerance")
    if "k" in raw:
        ks = raw["k"] if isinstance(raw["k"], list) else [raw["k"]]
        cfg.k = [number(x, "k") for x in ks]
        if not cfg.k:
            raise ConfigError("k: expected at least one value")
    if "grid" in raw:
        gr = raw["grid"]
        if not isinstance(gr, list):
            raise ConfigError("grid: expected a list of node counts")
        cfg.grid = [integer(x, "grid", 3, 1 << 16) for x in gr]
        if cfg.manifold is not None and len(cfg.grid) != cfg.manifold.n:
            raise ConfigError(f"grid: expected {cfg.manifold.n} node counts")
    if "eigenvalues" in raw:
        cfg.eigenvalues = integer(raw["eigenvalues"], "eigenvalues", 1, 1000)
    if "seed" in raw:
        cfg.seed = seed_value(raw["seed"])
    if "output" in raw:
        if not isinstance(raw["output"], str):
            raise ConfigError("output: expected a path")
        cfg.output = raw["output"]
    if "jobs" in raw:
        cfg.jobs = integer(raw["jobs"], "jobs", 1, 256)
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate(raw)
