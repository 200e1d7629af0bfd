"""Low-level quadrature and root-finding helpers.

Everything here is deliberately deterministic: fixed node counts, fixed
panel layouts, no randomized adaptivity, so repeated runs are bit-identical.
"""
from __future__ import annotations

import numpy as np

from .errors import QuadratureError

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [-1, 1], cached per order."""
    rule = _GAUSS_CACHE.get(order)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(order)
        _GAUSS_CACHE[order] = rule
    return rule


def panel_nodes(edges: np.ndarray, order: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for every panel [edges[i], edges[i+1]].

    Returns flat arrays of length (len(edges)-1)*order.
    """
    x, w = gauss_rule(order)
    a = edges[:-1]
    half = 0.5 * (edges[1:] - a)
    mid = a + half
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_panels(f, edges: np.ndarray, order: int = 10) -> float:
    """Integrate a vectorized callable over a fixed panel decomposition."""
    nodes, weights = panel_nodes(np.asarray(edges, dtype=float), order)
    return float(np.dot(weights, f(nodes)))


def graded_edges(start: float, stop: float, first: float, ratio: float = 1.7) -> np.ndarray:
    """Edges from start to stop with widths growing geometrically from `first`.

    The fine end is at `start`; panels widen by `ratio` until `stop` is
    reached. start < stop required.
    """
    if stop <= start:
        return np.array([start])
    edges = [start]
    width = first
    pos = start
    while pos + width < stop:
        pos += width
        edges.append(pos)
        width *= ratio
        if len(edges) > 400:
            break
    edges.append(stop)
    return np.array(edges)


def tail_panels(f, start: float, ratio: float = 2.0, order: int = 10,
                rel_tol: float = 1e-14, max_panels: int = 240,
                scale: float = 0.0) -> float:
    """Integrate f over (start, inf) with geometrically widening panels.

    Stops once two consecutive panel contributions fall below
    rel_tol * max(|accumulated|, scale). Raises QuadratureError when the
    panel sequence does not die out.
    """
    total = 0.0
    a = start
    width = start
    small = 0
    for _ in range(max_panels):
        b = a + width
        part = integrate_panels(f, np.array([a, b]), order)
        total += part
        ref = max(abs(total), scale, 1e-300)
        if abs(part) <= rel_tol * ref:
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
        a = b
        width *= ratio
    raise QuadratureError(
        f"tail quadrature did not converge (last panel at {a:.3e})")


def head_panels(f, stop: float, ratio: float = 2.0, order: int = 10,
                rel_tol: float = 1e-14, max_panels: int = 200,
                scale: float = 0.0) -> float:
    """Integrate f over (0, stop) with panels shrinking geometrically to 0."""
    total = 0.0
    b = stop
    small = 0
    for _ in range(max_panels):
        a = b / ratio
        part = integrate_panels(f, np.array([a, b]), order)
        total += part
        ref = max(abs(total), scale, 1e-300)
        if abs(part) <= rel_tol * ref:
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
        b = a
    return total


def bisect_root(f, a: float, b: float, fa: float | None = None,
                fb: float | None = None, max_iter: int = 200) -> float:
    """Plain bisection down to floating-point resolution.

    f(a) and f(b) must have opposite signs (one may be zero).
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ValueError("bisection bracket does not change sign")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def tanh_sinh_rule(a: float, b: float, n_half: int = 72,
                   h: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Double-exponential (tanh-sinh) nodes/weights on (a, b).

    Robust for integrable endpoint singularities; nodes never touch the
    endpoints.
    """
    if h is None:
        h = 3.4 / n_half
    k = np.arange(-n_half, n_half + 1)
    t = k * h
    sk = np.sinh(t)
    x = np.tanh(0.5 * np.pi * sk)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(0.5 * np.pi * sk) ** 2
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    keep = (nodes > a) & (nodes < b) & (weights > 1e-300)
    return nodes[keep], weights[keep]


def integrate_tanh_sinh(f, a: float, b: float, n_half: int = 72) -> float:
    nodes, weights = tanh_sinh_rule(a, b, n_half)
    return float(np.dot(weights, f(nodes)))
