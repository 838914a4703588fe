"""Fermi coordinates attached to a boundary graph x_N = psi(y).

The chart is Phi(y, t) = (y, psi(y)) + t * nu(y) with the unit inward normal
nu = (-grad psi, 1) / sqrt(1 + |grad psi|^2).  Without an explicit psi the
quadratic graph psi(y) = y.D2psi.y / 2 is used.
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import (InputError, InsufficientSamplesError, NonInjectiveError,
                     NotRadialError, OutOfChartError)

CONVENTIONS = ("trace", "average")


class GraphPolynomial:
    """Polynomial psi(y) = sum c_a y^a over multi-indices a."""

    def __init__(self, terms, dim):
        self.dim = int(dim)
        clean = {}
        for index, coef in terms:
            index = tuple(int(a) for a in index)
            if len(index) != self.dim or min(index) < 0:
                raise InputError(f"bad multi-index {index} for dimension {self.dim}")
            if coef:
                clean[index] = clean.get(index, 0.0) + float(coef)
        self.terms = tuple(sorted(clean.items()))

    @classmethod
    def quadratic(cls, hessian):
        hessian = np.asarray(hessian, dtype=float)
        m = hessian.shape[0]
        terms = []
        for i, j in combinations_with_replacement(range(m), 2):
            index = [0] * m
            index[i] += 1
            index[j] += 1
            terms.append((index, hessian[i, j] * (0.5 if i == j else 1.0)))
        return cls(terms, m)

    def _monomial(self, y, index, shift=()):
        a = list(index)
        c = 1.0
        for k in shift:
            c *= a[k]
            a[k] -= 1
        if c == 0:
            return np.zeros(y.shape[:-1])
        out = np.full(y.shape[:-1], c)
        for k, ak in enumerate(a):
            if ak:
                out = out * y[..., k] ** ak
        return out

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return sum((c * self._monomial(y, a) for a, c in self.terms), np.zeros(y.shape[:-1]))

    def gradient(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for a, c in self.terms:
            for k in range(self.dim):
                if a[k]:
                    out[..., k] += c * self._monomial(y, a, (k,))
        return out

    def hessian(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape + (self.dim,))
        for a, c in self.terms:
            for k in range(self.dim):
                for l in range(k, self.dim):
                    if a[k] and (a[l] - (k == l)) > 0:
                        d = c * self._monomial(y, a, (k, l))
                        out[..., k, l] += d
                        if l != k:
                            out[..., l, k] += d
        return out

    def to_list(self):
        return [[list(a), c] for a, c in self.terms]


@dataclass(frozen=True, eq=False)
class GeometrySpec:
    psi_hessian: np.ndarray
    delta: float = 0.25
    psi: GraphPolynomial | None = None

    def __post_init__(self):
        h = np.array(self.psi_hessian, dtype=float, ndmin=2)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise InputError("psi_hessian must be a square matrix")
        if np.linalg.norm(h - h.T) > 1e-12 * max(np.linalg.norm(h), 1.0):
            raise InputError("psi_hessian must be symmetric")
        if not self.delta > 0:
            raise InputError("delta must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "psi_hessian", h)
        if self.psi is not None:
            if self.psi.dim != h.shape[0]:
                raise InputError("psi polynomial dimension does not match psi_hessian")
            zero = np.zeros(h.shape[0])
            if abs(self.psi.value(zero)) > 1e-14 or np.abs(self.psi.gradient(zero)).max() > 1e-14:
                raise InputError("psi must satisfy psi(0) = 0 and grad psi(0) = 0")
            if np.abs(self.psi.hessian(zero) - h).max() > 1e-12:
                raise InputError("psi polynomial Hessian at 0 disagrees with psi_hessian")

    @classmethod
    def flat(cls, N, delta=0.25):
        return cls(np.zeros((N - 1, N - 1)), delta)

    @property
    def N(self):
        return self.psi_hessian.shape[0] + 1

    @property
    def graph(self):
        return self.psi if self.psi is not None else GraphPolynomial.quadratic(self.psi_hessian)

    @property
    def is_flat(self):
        return not np.any(self.psi_hessian) and (self.psi is None or not self.psi.terms)

    def to_dict(self):
        out = {"psi_hessian": self.psi_hessian.tolist(), "delta": self.delta}
        if self.psi is not None:
            out["psi"] = self.psi.to_list()
        return out

    @classmethod
    def from_dict(cls, data):
        h = np.array(data["psi_hessian"], dtype=float, ndmin=2)
        psi = data.get("psi")
        poly = GraphPolynomial(psi, h.shape[0]) if psi is not None else None
        return cls(h, float(data.get("delta", 0.25)), poly)


@dataclass(frozen=True)
class CurvatureData:
    H: float
    h: np.ndarray
    hbar: float
    convention: str


def curvature_data(spec, convention="trace"):
    """Second fundamental form h = D2psi(0) and mean curvature H.

    ``trace``: H = tr h, hbar = tr h / (N - 1).  This is the normalization the
    direct-quadrature fits select.  ``average`` sets H = hbar = tr h / (N - 1).
    """
    if convention not in CONVENTIONS:
        raise InputError(f"convention must be one of {CONVENTIONS}")
    h = spec.psi_hessian.copy()
    tr = float(np.trace(h))
    hbar = tr / (spec.N - 1)
    H = tr if convention == "trace" else hbar
    return CurvatureData(H, h, hbar, convention)


def _check_chart(spec, y, t):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.shape[-1] != spec.N - 1:
        raise InputError(f"y must have {spec.N - 1} components")
    if np.any(np.linalg.norm(y, axis=-1) >= 2 * spec.delta) or np.any(t < 0) or np.any(t >= 2 * spec.delta):
        raise OutOfChartError("point outside |y| < 2 delta, 0 <= t < 2 delta")
    return y, t


def _normal(graph, y):
    g = graph.gradient(y)
    w = np.sqrt(1.0 + np.sum(g * g, axis=-1))
    return np.concatenate([-g, np.ones(g.shape[:-1] + (1,))], axis=-1) / w[..., None], g, w


def _phi(graph, y, t):
    nu, _, _ = _normal(graph, y)
    base = np.concatenate([y, graph.value(y)[..., None]], axis=-1)
    return base + np.asarray(t)[..., None] * nu


def unit_normal(spec, y):
    nu, _, _ = _normal(spec.graph, np.asarray(y, dtype=float))
    return nu


def chart_map(spec, y, t):
    y, t = _check_chart(spec, y, t)
    return _phi(spec.graph, y, t)


def chart_derivative(spec, y, t):
    """Analytic N x N derivative of Phi; last column is nu."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    graph = spec.graph
    m = spec.N - 1
    nu, g, w = _normal(graph, y)
    hess = graph.hessian(y)
    # d nu / d y_i for each i, stacked along the last axis
    top = -hess / w[..., None, None]
    dnu = np.concatenate([top, np.zeros(y.shape[:-1] + (1, m))], axis=-2)
    proj = np.einsum("...k,...ki->...i", g, hess) / w[..., None] ** 2
    dnu = dnu - nu[..., :, None] * proj[..., None, :]
    base = np.concatenate([np.broadcast_to(np.eye(m), y.shape[:-1] + (m, m)), g[..., None, :]], axis=-2)
    cols = base + t[..., None, None] * dnu
    return np.concatenate([cols, nu[..., :, None]], axis=-1)


def jacobian_det(spec, y, t, step=None):
    """det D Phi by central differences with step 1e-5 * delta."""
    y, t = _check_chart(spec, y, t)
    h = step if step is not None else 1e-5 * spec.delta
    graph = spec.graph
    N = spec.N
    cols = []
    for k in range(N):
        e = np.zeros(N)
        e[k] = h
        plus = _phi(graph, y + e[:-1], t + e[-1])
        minus = _phi(graph, y - e[:-1], t - e[-1])
        cols.append((plus - minus) / (2 * h))
    det = np.linalg.det(np.stack(cols, axis=-1))
    if np.any(det <= 0):
        raise NonInjectiveError("chart Jacobian is not positive")
    return det


def inverse_metric(spec, y, t):
    D = chart_derivative(spec, y, t)
    return np.linalg.inv(np.einsum("...ki,...kj->...ij", D, D))


def is_rotationally_symmetric(spec, trials=8, seed=0):
    """Numerical test that psi(Qy) = psi(y) for random rotations Q."""
    h = spec.psi_hessian
    m = spec.N - 1
    if np.abs(h - np.trace(h) / m * np.eye(m)).max() > 1e-12:
        return False
    if spec.psi is None or m == 1:
        return True
    rng = np.random.default_rng(seed)
    y = rng.uniform(-spec.delta, spec.delta, (trials, m))
    for _ in range(trials):
        q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        a, b = spec.psi.value(y), spec.psi.value(y @ q.T)
        if np.abs(a - b).max() > 1e-12 * max(1.0, np.abs(a).max()):
            return False
    return True


def radial_chart_factors(spec, rho, t):
    """Jacobian and inverse-metric entries at y = (rho, 0, ..., 0).

    Returns (J, g_rr, g_rt, g_tt) where |grad u|^2 equals
    g_rr v_rho^2 + 2 g_rt v_rho v_t + g_tt v_t^2 for y-radial v.
    """
    if not is_rotationally_symmetric(spec):
        raise NotRadialError("geometry is not rotationally symmetric in y")
    rho = np.asarray(rho, dtype=float)
    t = np.asarray(t, dtype=float)
    if spec.is_flat:
        one = np.ones(np.broadcast(rho, t).shape)
        return one, one, 0.0 * one, one
    y = np.zeros(rho.shape + (spec.N - 1,))
    y[..., 0] = rho
    D = chart_derivative(spec, y, t)
    J = np.linalg.det(D)
    if np.any(J <= 0):
        raise NonInjectiveError("chart Jacobian is not positive on the support")
    G = np.linalg.inv(np.einsum("...ki,...kj->...ij", D, D))
    return J, G[..., 0, 0], G[..., 0, -1], G[..., -1, -1]


@dataclass(frozen=True)
class ResidualReport:
    jacobian_order: float
    metric_order: float
    nu_unit_error: float
    jacobian_residuals: tuple
    metric_residuals: tuple
    scales: tuple
    H: float
    convention: str

    @property
    def passed(self):
        return self.jacobian_order >= 1.9 and self.metric_order >= 1.9 and self.nu_unit_error <= 1e-12

    def to_dict(self):
        return {
            "jacobian_order": self.jacobian_order,
            "metric_order": self.metric_order,
            "nu_unit_error": self.nu_unit_error,
            "jacobian_residuals": list(self.jacobian_residuals),
            "metric_residuals": list(self.metric_residuals),
            "scales": list(self.scales),
            "H": self.H,
            "convention": self.convention,
            "passed": self.passed,
        }


def _order(scales, residuals, floor=1e-13):
    """Log-log slope of the residuals; values under ``floor`` count as zero."""
    res = np.asarray(residuals)
    keep = res > floor
    if keep.sum() < 2:
        return float("inf")
    x = np.log(np.asarray(scales)[keep])
    return float(np.polyfit(x, np.log(res[keep]), 1)[0])


def expansion_residual_check(spec, samples=64, levels=6, seed=0, convention="trace"):
    """Empirical orders of the Jacobian and metric expansions at the origin.

    Points fill the box |y| <= s, 0 <= t <= s for s = delta * 2^-k.  The
    residuals |J - (1 - H t)| and |grad v.G^-1.grad v - model| are compared
    with s on a log-log scale; the model metric is delta + 2 h t.
    """
    if samples < 4 or levels < 3:
        raise InsufficientSamplesError("need at least 4 samples on at least 3 levels")
    m = spec.N - 1
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal((samples, m))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(0.0, 1.0, samples) ** (1.0 / m)
    y_unit = direction * radius[:, None]
    t_unit = rng.uniform(0.0, 1.0, samples)
    c = np.linspace(1.0, 0.3, spec.N)
    curv = curvature_data(spec, convention)
    scales, jres, mres, nu_err = [], [], [], 0.0
    for k in range(1, levels + 1):
        s = spec.delta * 2.0 ** (-k)
        y, t = s * y_unit, s * t_unit
        J = jacobian_det(spec, y, t)
        jres.append(float(np.max(np.abs(J - (1.0 - curv.H * t)))))
        x = np.concatenate([y, t[:, None]], axis=1)
        grad_v = np.cos(1.0 + x @ c)[:, None] * c
        exact = np.einsum("ni,nij,nj->n", grad_v, inverse_metric(spec, y, t), grad_v)
        gy = grad_v[:, :m]
        model = grad_v[:, -1] ** 2 + np.sum(gy * gy, axis=1) + 2 * t * np.einsum("ni,ij,nj->n", gy, curv.h, gy)
        mres.append(float(np.max(np.abs(exact - model))))
        nu = unit_normal(spec, y)
        nu_err = max(nu_err, float(np.max(np.abs(np.linalg.norm(nu, axis=1) - 1.0))))
        scales.append(s)
    # rounding floor of the central-difference Jacobian
    fd_floor = 10 * np.finfo(float).eps / (1e-5 * spec.delta)
    return ResidualReport(_order(scales, jres, fd_floor), _order(scales, mres), nu_err,
                          tuple(jres), tuple(mres), tuple(scales), curv.H, convention)
