"""Command line front end.

    cqmq <curvature|verify|spectrum> --config <path> [--out <dir>] [--seed <u64>]

Exit codes: 0 success (all checks pass), 1 a check failed, 2 configuration
error, 3 numerical error.  Reports are written atomically; timestamps go to
a separate ``metadata.json`` so the reports themselves are byte-stable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from cqmq import __version__
from cqmq import config as C
from cqmq import spectral, verifier
from cqmq.errors import CQMError, ConfigError
from cqmq.geometry import scalar_curvature
from cqmq.operators import GaugePotential
from cqmq.phase_algebra import sample_points

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
REPORT_SCHEMA = 1

log = logging.getLogger("cqmq")


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag} if x.imag else x.real
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def _gauge(cfg, n):
    if cfg.gauge is None:
        return None
    A = cfg.gauge["A"] or ["0"] * n
    if len(A) != n:
        raise ConfigError(f"gauge.A: expected {n} components")
    aliases = cfg.manifold.aliases if cfg.manifold is not None else None
    try:
        return GaugePotential.make(cfg.gauge["A0"], A, n=n, aliases=aliases)
    except CQMError as exc:
        raise ConfigError(f"gauge: {exc}") from exc


def _metadata(out, command, cfg, started):
    meta = {
        "schema_version": REPORT_SCHEMA,
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    write_atomic(os.path.join(out, "metadata.json"), dump_json(meta))


# --------------------------------------------------------------------------
# commands


def cmd_curvature(cfg, out):
    if cfg.manifold is None:
        raise ConfigError("curvature: 'manifold' is required")
    m = cfg.manifold
    pts = cfg.points
    if pts is None:
        pts = [p.tolist() for p in sample_points(m, 4, np.random.default_rng(cfg.seed))]
    rows = []
    for p in pts:
        data = scalar_curvature(m, np.array(p, dtype=float))
        g = m.metric_jet(np.array(p, dtype=float), 0).g_value
        row = data.to_dict()
        row["g"] = np.asarray(g).tolist()
        rows.append(row)
    report = {
        "schema_version": REPORT_SCHEMA,
        "manifold": m.name,
        "conventions": {
            "gamma": "flipped-sign symbols, gamma = -gamma_std",
            "gamma_std": "Levi-Civita symbols G^i_jk = 1/2 g^ih (d_j g_hk + d_k g_hj - d_h g_jk)",
            "r_std": "g^jl R^i_jil (unit sphere: +2)",
            "r_paper": "-r_std, the scalar curvature entering the energy operators",
        },
        "points": rows,
    }
    write_atomic(os.path.join(out, "curvature.json"), dump_json(report))
    lines = ["point,r_std,r_paper"]
    for row in rows:
        lines.append(f"\"{' '.join(repr(float(x)) for x in row['point'])}\",{float(row['r_std'])!r},{float(row['r_paper'])!r}")
    write_atomic(os.path.join(out, "curvature.csv"), "\n".join(lines) + "\n")
    return EXIT_OK


def _run_one(args):
    name, seed, tol, spec, gauge = args
    m = C.manifold_from_spec(spec) if spec is not None else None
    A = None
    if gauge is not None and m is not None:
        A = GaugePotential.make(gauge["A0"], gauge["A"] or ["0"] * m.n, n=m.n, aliases=m.aliases)
    return verifier.run_check(name, seed, tol, m, A).to_dict()


def cmd_verify(cfg, out):
    checks = cfg.checks or list(verifier.DEFAULT_SUITE)
    if cfg.manifold is not None:
        _gauge(cfg, cfg.manifold.n)
    jobs = [(c, cfg.seed, cfg.tolerance_for(c), cfg.manifold_spec, cfg.gauge) for c in checks]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    summary = {"schema_version": REPORT_SCHEMA, "seed": cfg.seed, "checks": {}}
    ok = True
    for name, rep in zip(checks, results):
        write_atomic(os.path.join(out, f"{name}.json"), dump_json(rep))
        summary["checks"][name] = {"pass": rep["pass"], "max_residual": rep["max_residual"], "tolerance": rep["tolerance"]}
        ok = ok and rep["pass"]
        log.info("%-20s %s  max residual %.3e (tol %.1e)", name, "PASS" if rep["pass"] else "FAIL", rep["max_residual"], rep["tolerance"])
    summary["all_pass"] = ok
    write_atomic(os.path.join(out, "summary.json"), dump_json(summary))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(cfg, out):
    if cfg.manifold is None:
        raise ConfigError("spectrum: 'manifold' is required")
    m = cfg.manifold
    if cfg.grid is None:
        raise ConfigError("spectrum: 'grid' is required")
    if len(cfg.grid) != m.n:
        raise ConfigError(f"grid: expected {m.n} node counts")
    A = _gauge(cfg, m.n)
    grid = spectral.make_grid(m, cfg.grid)
    table = spectral.k_sweep(m, A, grid, cfg.k, cfg.eigenvalues, seed=cfg.seed)
    report = {"schema_version": REPORT_SCHEMA, "manifold": m.name, "seed": cfg.seed, "k": cfg.k}
    report.update(table.to_dict())
    ok = True
    if table.r_constant:
        ok = table.max_deviation <= 1e-10
        report["shift_uniform"] = ok
    write_atomic(os.path.join(out, "spectrum.json"), dump_json(report))
    write_atomic(os.path.join(out, "spectrum.csv"), spectral.spectrum_csv(table))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"curvature": cmd_curvature, "verify": cmd_verify, "spectrum": cmd_spectrum}


def build_parser():
    p = argparse.ArgumentParser(prog="cqmq", description="Curvature, verification and spectra of half-form quantum operators.")
    p.add_argument("--version", action="version", version=f"cqmq {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", help="unsigned 64-bit seed (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    try:
        cfg = C.load(args.config)
        if args.seed is not None:
            cfg.seed = C.seed_value(args.seed, "--seed")
        out = args.out or cfg.output or "."
        code = COMMANDS[args.command](cfg, out)
        _metadata(out, args.command, cfg, started)
        return code
    except ConfigError as exc:
        print(f"cqmq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CQMError as exc:
        print(f"cqmq: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"cqmq: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
