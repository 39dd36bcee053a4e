"""Built-in charts and the randomized analytic metric corpus."""

from __future__ import annotations

import math

import numpy as np

from cqmq.geometry import MetricChart

TWO_PI = 2 * math.pi


def euclidean(n):
    comps = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return MetricChart.from_components(n, comps, name=f"euclidean({n})")


def circle(length=TWO_PI):
    return MetricChart.from_components(1, [["1"]], periods=[length], domain=[(0.0, length)], name=f"circle({length:g})")


def flat_torus(l1=TWO_PI, l2=TWO_PI):
    return MetricChart.from_components(
        2, [["1", "0"], ["0", "1"]], periods=[l1, l2], domain=[(0.0, l1), (0.0, l2)], name=f"flat_torus({l1:g},{l2:g})"
    )


def sphere(radius=1.0):
    """Round sphere in colatitude/longitude ``(theta, phi)``; singular at the poles."""
    r2 = _lit(radius * radius)
    return MetricChart.from_components(
        2,
        [[r2, "0"], ["0", f"{r2}*sin(theta)^2"]],
        periods=[None, TWO_PI],
        domain=[(0.0, math.pi), (0.0, TWO_PI)],
        aliases={"theta": 1, "phi": 2},
        name=f"sphere({radius:g})",
    )


def half_plane():
    """Poincare upper half-plane ``(dx^2 + dy^2) / y^2``."""
    return MetricChart.from_components(
        2,
        [["1/y^2", "0"], ["0", "1/y^2"]],
        domain=[(-math.inf, math.inf), (0.0, math.inf)],
        aliases={"x": 1, "y": 2},
        name="half_plane",
    )


def perturbed_flat(n=2, eps=0.1):
    """Conformally flat ``(1 + eps * bump) delta`` with a smooth periodic bump."""
    bump = "*".join(f"cos(x{i + 1})" for i in range(n))
    f = f"(1 + {_lit(eps)}*{bump})"
    comps = [[f if i == j else "0" for j in range(n)] for i in range(n)]
    return MetricChart.from_components(n, comps, periods=[TWO_PI] * n, domain=[(0.0, TWO_PI)] * n, name=f"perturbed_flat({n},{eps:g})")


def _lit(x):
    """Decimal literal accepted by the expression grammar."""
    s = f"{x:.10f}".rstrip("0").rstrip(".")
    if s.startswith("-"):
        return f"(-{s[1:]})"
    return s or "0"


def _trig_poly(rng, n, degree=2, terms=3):
    parts = [_lit(rng.uniform(-1, 1))]
    for _ in range(terms):
        k = rng.integers(-degree, degree + 1, size=n)
        if not k.any():
            k[rng.integers(n)] = 1
        while np.abs(k).sum() > degree:
            k[np.argmax(np.abs(k))] -= np.sign(k[np.argmax(np.abs(k))])
        arg = " + ".join(f"{_lit(float(ki))}*x{i + 1}" for i, ki in enumerate(k) if ki)
        fn = "cos" if rng.random() < 0.5 else "sin"
        parts.append(f"{_lit(rng.uniform(-1, 1))}*{fn}({arg})")
    return " + ".join(parts)


def random_metric(seed, n=2, eps=0.15, samples=64):
    """``delta + eps * S(x)`` with ``S`` symmetric, entries trig polynomials of degree <= 2.

    Positive definiteness is checked by Cholesky on ``samples`` random
    points of the period cell; on failure the draw is repeated with the
    next sub-seed.
    """
    if not 0 < eps <= 0.2:
        raise ValueError("eps must lie in (0, 0.2]")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        comps = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                s = _trig_poly(rng, n)
                entry = f"{_lit(eps)}*({s})"
                comps[i][j] = comps[j][i] = f"1 + {entry}" if i == j else entry
        chart = MetricChart.from_components(
            n, comps, periods=[TWO_PI] * n, domain=[(0.0, TWO_PI)] * n, name=f"random_metric(seed={seed},n={n})"
        )
        pts = rng.uniform(0, TWO_PI, size=(n, samples))
        g = chart.metric_jet(pts, 0).g_value
        try:
            np.linalg.cholesky(np.moveaxis(g, -1, 0))
        except np.linalg.LinAlgError:
            continue
        return chart
    raise RuntimeError("could not draw a positive definite metric")


BUILTINS = {
    "euclidean": euclidean,
    "circle": circle,
    "flat_torus": flat_torus,
    "sphere": sphere,
    "half_plane": half_plane,
    "perturbed_flat": perturbed_flat,
    "random": random_metric,
}
