"""Integration over the half-space and its boundary for y-radial integrands.

An integrand g(rho, t) with rho = |y| is integrated as

    omega_{N-2} * int_0^inf int_0^inf g(rho, t) rho^(N-2) drho dt

in polar coordinates (R, theta) of the quarter plane, with Gauss-Legendre
panels that grow geometrically in R.  Error estimates compare two rule orders
and add an explicit power-law tail bound.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gamma, pi
from typing import Callable, NamedTuple

import numpy as np

from .errors import DivergenceError, InputError, ToleranceNotMetError

FIRST_EDGE = 0.25
GROWTH = 1.6
BASE_ORDER = 8
ORDER_STEP = 4


def sphere_area(k):
    """Surface measure of the unit sphere S^k in R^(k+1)."""
    return 2.0 * pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


@dataclass(frozen=True)
class RadialKernel:
    """Integrand g(rho, t) (or g(rho) on the boundary) with its decay law.

    ``decay`` is an exponent alpha with |g| <= C * radius^(-alpha) far out.
    ``log`` marks integrands carrying an extra logarithmic factor.  A finite
    ``support`` radius replaces the tail analysis, and ``breakpoints`` are
    radii that must coincide with panel edges.
    """
    func: Callable
    decay: float = np.inf
    log: bool = False
    scale: float = 1.0
    support: float | None = None
    breakpoints: tuple = ()


@dataclass(frozen=True)
class QuadratureSpec:
    rtol: float = 1e-8
    radius: float | None = None
    max_depth: int = 8

    def __post_init__(self):
        if not 0 < self.rtol <= 1e-2:
            raise InputError(f"rtol must lie in (0, 1e-2], got {self.rtol}")
        if self.max_depth < 4:
            raise InputError("max_depth must be at least 4")


class Integral(NamedTuple):
    value: float
    error: float


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_panels(edges, order):
    """Composite Gauss-Legendre nodes and weights on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    x, w = _legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def panel_edges(radius, scale=1.0, breakpoints=()):
    """Geometric panel edges from 0 to ``radius`` including ``breakpoints``."""
    edges = [0.0]
    e = FIRST_EDGE * scale
    while e < radius * (1 - 1e-12):
        edges.append(e)
        e *= GROWTH
    edges.append(radius)
    edges.extend(b for b in breakpoints if 0 < b < radius)
    return np.unique(np.asarray(edges))


@dataclass(frozen=True)
class HalfspaceRule:
    """Tensor rule in (R, theta); weights include omega_{N-2} rho^(N-2) R."""
    rho: np.ndarray
    t: np.ndarray
    weights: np.ndarray
    radius: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)


def halfspace_rule(N, edges, order, n_theta=None):
    r, wr = gauss_panels(edges, order)
    th, wth = gauss_panels([0.0, pi / 2], n_theta or order)
    R, TH = np.meshgrid(r, th, indexing="ij")
    rho, t = R * np.sin(TH), R * np.cos(TH)
    w = np.outer(wr, wth) * R * rho ** (N - 2) * sphere_area(N - 2)
    return HalfspaceRule(rho, t, w, r, th)


def boundary_rule(N, edges, order):
    rho, w = gauss_panels(edges, order)
    return rho, w * rho ** (N - 2) * sphere_area(N - 2)


def tail_bound(decay_exponent, N, R):
    """Integral of |x|^(-decay) over {|x| > R} in the half-space R^N_+."""
    gap = decay_exponent - N
    if gap <= 0:
        raise DivergenceError(f"decay exponent {decay_exponent} must exceed N={N}")
    return 0.5 * sphere_area(N - 1) * R ** (-gap) / gap


def _boundary_tail(decay_exponent, N, R):
    gap = decay_exponent - (N - 1)
    return sphere_area(N - 2) * R ** (-gap) / gap


def _effective_decay(kernel, dim):
    if np.isinf(kernel.decay):
        # faster than any power: bound the tail by a power just past integrability
        return dim + 2.0
    if kernel.decay <= dim:
        raise DivergenceError(
            f"integrand decays like radius^-{kernel.decay}, not integrable in dimension {dim}")
    if kernel.log:
        return kernel.decay - min(0.5, 0.5 * (kernel.decay - dim))
    return kernel.decay


def _adaptive(evaluate, tail, spec, edges_for, probe):
    """Shared driver: pick a truncation radius, then raise the order."""
    if spec.radius is not None:
        radius = spec.radius
    else:
        radius = probe
    value = evaluate(edges_for(radius), BASE_ORDER)
    if tail is not None and spec.radius is None:
        for _ in range(80):
            if tail(radius) <= 0.1 * spec.rtol * abs(value):
                break
            radius *= 4.0
            value = evaluate(edges_for(radius), BASE_ORDER)
        else:
            raise ToleranceNotMetError("truncation radius search did not converge")
    tail_err = tail(radius) if tail is not None else 0.0
    edges = edges_for(radius)
    previous = value
    for depth in range(1, spec.max_depth + 1):
        current = evaluate(edges, BASE_ORDER + ORDER_STEP * depth)
        err = abs(current - previous) + tail_err
        if err <= spec.rtol * abs(current) or current == previous == 0.0:
            return Integral(float(current), float(err))
        previous = current
    raise ToleranceNotMetError(
        f"relative error {err / max(abs(current), 1e-300):.2e} above {spec.rtol:.1e}")


def halfspace_integral(kernel, N, spec=None):
    """Integrate a y-radial kernel g(rho, t) over R^N_+."""
    spec = spec or QuadratureSpec()
    if N < 3:
        raise InputError("N must be at least 3")

    def evaluate(edges, order):
        rule = halfspace_rule(N, edges, order)
        return float(np.sum(rule.weights * kernel.func(rule.rho, rule.t)))

    def edges_for(radius):
        return panel_edges(radius, kernel.scale, kernel.breakpoints)

    if kernel.support is not None:
        return _adaptive(evaluate, None, QuadratureSpec(spec.rtol, kernel.support, spec.max_depth),
                         edges_for, kernel.support)
    alpha = _effective_decay(kernel, N)

    def tail(radius):
        th = np.linspace(0.0, pi / 2, 33)
        g = np.abs(kernel.func(radius * np.sin(th), radius * np.cos(th)))
        return float(np.max(g)) * radius ** alpha * tail_bound(alpha, N, radius)

    return _adaptive(evaluate, tail, spec, edges_for, 64.0 * kernel.scale)


def boundary_integral(kernel, N, spec=None):
    """Integrate a radial kernel g(rho) over the boundary R^(N-1)."""
    spec = spec or QuadratureSpec()
    if N < 3:
        raise InputError("N must be at least 3")

    def evaluate(edges, order):
        rho, w = boundary_rule(N, edges, order)
        return float(np.sum(w * kernel.func(rho)))

    def edges_for(radius):
        return panel_edges(radius, kernel.scale, kernel.breakpoints)

    if kernel.support is not None:
        return _adaptive(evaluate, None, QuadratureSpec(spec.rtol, kernel.support, spec.max_depth),
                         edges_for, kernel.support)
    alpha = _effective_decay(kernel, N - 1)

    def tail(radius):
        g = abs(float(kernel.func(np.array([radius]))[0]))
        return g * radius ** alpha * _boundary_tail(alpha, N, radius)

    return _adaptive(evaluate, tail, spec, edges_for, 64.0 * kernel.scale)


def sphere_moment_exact(exponents, m):
    """Average of prod y_i^a_i over S^(m-1) as an exact fraction."""
    exps = [int(a) for a in exponents]
    if len(exps) > m or any(a < 0 for a in exps):
        raise InputError("multi-index must have at most m nonnegative entries")
    if any(a % 2 for a in exps):
        return Fraction(0)
    num = 1
    for a in exps:
        for k in range(1, a, 2):
            num *= k
    den = 1
    for j in range(sum(exps) // 2):
        den *= m + 2 * j
    return Fraction(num, den)


def sphere_moment(exponents, m):
    return float(sphere_moment_exact(exponents, m))
