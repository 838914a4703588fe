"""Closed-form small-eps expansion coefficients of bubble integrals and a
direct-quadrature oracle that checks them by least-squares fitting.

For v_eps = eta * V_eps (a C^2 cutoff eta equal to 1 on |x| < delta and 0
beyond 2 delta) the integrals

    gradient:  int f |grad v_eps|^p(x) dx
    boundary:  int f |v_eps|^r(x) dS
    volume:    int f |v_eps|^p(x) dx

are evaluated exactly in Fermi coordinates and fitted in powers of eps and
eps ln eps.
"""
import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import (HypothesisError, InputError, InsufficientSamplesError,
                     NotRadialError, RankDeficiencyError)
from .extremal import BubbleParams, bubble_integral_table, rescale_bubble
from .fermi import curvature_data, radial_chart_factors
from .fields import TaylorModel, theorem_bound
from .quadrature import Integral, boundary_rule, gauss_panels, halfspace_rule, panel_edges, sphere_moment

BASIS = {
    "1": lambda e: np.ones_like(e),
    "elne": lambda e: e * np.log(e),
    "e": lambda e: e,
    "elne2": lambda e: (e * np.log(e)) ** 2,
    "e2lne": lambda e: e * e * np.log(e),
    "e2": lambda e: e * e,
}
FULL_BASIS = ("1", "elne", "e", "elne2", "e2lne", "e2")
BOUNDARY_BASIS = ("1", "e2lne", "e2")
ILL_CONDITIONED = 1e8
LEADING_TOL = 1e-3
SUBLEADING_TOL = 2e-2


@lru_cache(maxsize=32)
def cached_table(N, p):
    return bubble_integral_table(BubbleParams(N, p))


def _table(config, table):
    return table if table is not None else cached_table(config.N, config.p0)


def _require_gradient_hypotheses(N, p_model):
    p0 = p_model.value
    if not p0 < N * N / (3 * N - 2):
        raise HypothesisError(f"gradient expansion needs p < N^2/(3N-2) = {N * N / (3 * N - 2):.6g}")
    if np.abs(p_model.grad_y).max(initial=0) > 1e-12 or p_model.dt < 0:
        raise HypothesisError("gradient expansion needs a local minimum of p at the origin")


def gradient_coefficients(N, p_model, weight, table):
    """C0..C4 for int weight * eta |grad V_eps|^p(x) over the half-space."""
    _require_gradient_hypotheses(N, p_model)
    p = p_model.value
    g0, dtg = weight.value, weight.dt
    dtp, dttp, lap = p_model.dt, p_model.dtt, p_model.laplacian_y
    c = {"0": g0 * table["G0"], "1": -(N / p) * g0 * dtp * table["G1"] if dtp else 0.0}
    c["2"] = (g0 * dtp * table["G1L"] if dtp else 0.0) + dtg * table["G1"]
    c["3"] = (N * N / (2 * p * p)) * g0 * dtp ** 2 * table["G2"]
    c["4"] = (-(N / p) * (0.5 * g0 * dttp * table["G2"] + dtp * dtg * table["G2"]
                          + (dtp ** 2 * g0 * table["G2L"] if dtp else 0.0))
              - N / (2 * (N - 1) * p) * g0 * lap * table["Gy"])
    return c


def tangential_coefficients(N, p_model, a, weight, table):
    """B0..B4 for sum_ij a_ij int weight * eta |grad V_eps|^(p(x)-2) d_i V_eps d_j V_eps.

    Also returns ``quartic_residual``, the contribution proportional to
    m(y1^4) - 3 m(y1^2 y2^2), which vanishes for y-radial prefactors.
    """
    _require_gradient_hypotheses(N, p_model)
    a = np.asarray(a, dtype=float)
    m = N - 1
    if a.shape != (m, m):
        raise InputError(f"a must be {m} x {m}")
    p = p_model.value
    g0, dtg = weight.value, weight.dt
    dtp, dttp = p_model.dt, p_model.dtt
    D = p_model.hess_y
    abar = float(np.trace(a)) / m
    if abar == 0 and not np.any(a):
        return {k: 0.0 for k in ("0", "1", "2", "3", "4")} | {"quartic_residual": 0.0}
    b = {"0": abar * g0 * table["Gyr"]}
    b["1"] = -(N / p) * g0 * dtp * abar * table["Gty"] if dtp else 0.0
    b["2"] = abar * ((g0 * dtp * table["GtyL"] if dtp else 0.0) + dtg * table["Gty"])
    b["3"] = (N * N / (2 * p * p)) * g0 * dtp ** 2 * abar * table["Gt2y"]
    radial = -(N / p) * abar * (0.5 * g0 * dttp * table["Gt2y"] + dtp * dtg * table["Gt2y"]
                                + (dtp ** 2 * g0 * table["Gt2yL"] if dtp else 0.0))
    m4 = sphere_moment([4], m)
    m22 = sphere_moment([2, 2], m) if m >= 2 else 0.0
    quartic = 0.0
    coupled = 0.0
    if np.any(D):
        diag = float(np.sum(np.diag(a) * np.diag(D)))
        quartic = -(N * g0 / (2 * p)) * diag * (m4 - 3 * m22) * table["Gy4r"]
        coupled = -(N * g0 / (2 * p)) * (np.trace(a) * np.trace(D) + 2 * np.sum(a * D)) * m22 * table["Gy4r"]
        if m == 1:
            coupled = -(N * g0 / (2 * p)) * a[0, 0] * D[0, 0] * m4 * table["Gy4r"]
            quartic = 0.0
    b["4"] = radial + quartic + coupled
    b["quartic_residual"] = quartic
    return b


def coeff_volume(config, table=None):
    """Leading coefficient of int f |v_eps|^p(x) = C0 eps^p + ..."""
    table = _table(config, table)
    return {"C0": config.f.value * table["Vp"]}


def coeff_boundary(config, table=None):
    """A0 and A1 of int f |v_eps|^r(x) dS = A0 + A1 eps^2 ln eps + O(eps^2)."""
    N, p = config.N, config.p0
    if not p < (N - 1) / 2:
        raise HypothesisError(f"boundary expansion needs p < (N-1)/2 = {(N - 1) / 2:g}")
    table = _table(config, table)
    ps = config.p_star
    f0 = config.f.value
    Dr = config.r.hess_y
    A1 = -(1.0 / (2 * ps)) * f0 * float(np.trace(Dr)) * table["Sy"]
    m = N - 1
    quad = 0.0
    for i in range(m):
        for j in range(m):
            if Dr[i, j]:
                index = [0] * m
                index[i] += 1
                index[j] += 1
                quad += Dr[i, j] * sphere_moment(index, m)
    A1_matrix = -(N - p) / (2 * p) * f0 * quad * table["Sy"]
    return {"A0": f0 * table["S0"], "A1": A1, "A1_matrix_form": A1_matrix}


def coeff_gradient_tangential(config, a, g, table=None):
    b = tangential_coefficients(config.N, config.p, a, g, _table(config, table))
    return {f"B{k}": b[k] for k in "01234"} | {"B4_quartic_residual": b["quartic_residual"]}


def coeff_gradient_full(config, table=None):
    c = gradient_coefficients(config.N, config.p, config.f, _table(config, table))
    return {f"C{k}": c[k] for k in "01234"}


def coeff_full_gradient_with_geometry(config, table=None, convention="trace"):
    """D0..D4 for int f |grad v_eps|^p(x) in Fermi coordinates.

    Assembled as C[f] + B[a = h, g = t f p] + C[-H t f]: the first term is the
    flat expansion, the second the metric correction and the third the
    Jacobian correction 1 - H t.
    """
    table = _table(config, table)
    N = config.N
    c = gradient_coefficients(N, config.p, config.f, table)
    curv = curvature_data(config.geometry, convention)
    out = {f"D{k}": c[k] for k in "01234"}
    if not np.any(curv.h):
        return out
    t = TaylorModel.coordinate(N)
    b = tangential_coefficients(N, config.p, curv.h, t * config.f * config.p, table)
    j = gradient_coefficients(N, config.p, (-curv.H) * t * config.f, table)
    for k in "01234":
        out[f"D{k}"] = c[k] + b[k] + j[k]
    return out


def smoothstep_cutoff(radius, delta):
    """C^2 cutoff: 1 on [0, delta], quintic ramp to 0 at 2 delta; with derivative."""
    s = np.clip(radius / delta - 1.0, 0.0, 1.0)
    eta = 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    deta = -30.0 * s * s * (1.0 - s) ** 2 / delta
    return eta, deta


def _scaled_edges(epsilon, delta):
    inner = panel_edges(delta / epsilon)
    outer = np.linspace(delta / epsilon, 2 * delta / epsilon, 9)
    return np.unique(np.concatenate([inner, outer]))


@dataclass(frozen=True)
class VolumeSamples:
    """Quadrature nodes on the support of v_eps with all integrand pieces."""
    rho: np.ndarray
    t: np.ndarray
    weights: np.ndarray      # includes the chart Jacobian
    v: np.ndarray
    grad: np.ndarray         # |grad v_eps| in the physical metric
    p: np.ndarray
    f: np.ndarray
    h: np.ndarray
    axes: tuple = field(default=())


@dataclass(frozen=True)
class BoundarySamples:
    rho: np.ndarray
    weights: np.ndarray      # includes the surface element
    v: np.ndarray
    r: np.ndarray
    f: np.ndarray


def _require_radial(config):
    if not config.p.is_radial():
        raise NotRadialError("p must depend on y only through |y| for the radial oracle")


def volume_samples(config, epsilon, order=24):
    _require_radial(config)
    N, delta = config.N, config.geometry.delta
    if not 0 < epsilon <= delta / 2:
        raise InputError(f"epsilon must lie in (0, delta/2], got {epsilon}")
    rule = halfspace_rule(N, _scaled_edges(epsilon, delta), order)
    rho, t = epsilon * rule.rho, epsilon * rule.t
    w = epsilon ** N * rule.weights
    bubble = rescale_bubble(BubbleParams(N, config.p0), epsilon)
    V = bubble(rho, t)
    dVr, dVt = bubble.gradient(rho, t)
    rad = np.hypot(rho, t)
    eta, deta = smoothstep_cutoff(rad, delta)
    vr = eta * dVr + V * deta * rho / rad
    vt = eta * dVt + V * deta * t / rad
    J, grr, grt, gtt = radial_chart_factors(config.geometry, rho, t)
    grad = np.sqrt(np.maximum(grr * vr * vr + 2 * grt * vr * vt + gtt * vt * vt, 0.0))
    pv = config.p.radial(rho, t)
    if np.any(pv <= 1):
        raise InputError("p(x) leaves (1, inf) on the support of v_eps")
    return VolumeSamples(rho, t, w * J, eta * V, grad, pv, config.f.radial(rho, t),
                         config.h.radial(rho, t), (epsilon * rule.radius, rule.theta))


def boundary_samples(config, epsilon, order=24):
    if not config.r.is_radial():
        raise NotRadialError("r must be radial in y for the radial oracle")
    N, delta = config.N, config.geometry.delta
    if not 0 < epsilon <= delta / 2:
        raise InputError(f"epsilon must lie in (0, delta/2], got {epsilon}")
    X, w = boundary_rule(N, _scaled_edges(epsilon, delta), order)
    rho = epsilon * X
    w = epsilon ** (N - 1) * w
    bubble = rescale_bubble(BubbleParams(N, config.p0), epsilon)
    eta, _ = smoothstep_cutoff(rho, delta)
    graph = config.geometry.graph
    y = np.zeros(rho.shape + (N - 1,))
    y[:, 0] = rho
    dS = np.sqrt(1.0 + np.sum(graph.gradient(y) ** 2, axis=-1))
    return BoundarySamples(rho, w * dS, eta * bubble(rho, 0.0), config.r.radial(rho, 0.0),
                           config.f.radial(rho, 0.0))


def _tangential_value(config, epsilon, order, a, g):
    if not config.geometry.is_flat:
        raise InputError("the tangential oracle is defined on the flat half-space")
    m = config.N - 1
    a = np.asarray(a, dtype=float)
    iso_a = np.allclose(a, np.trace(a) / m * np.eye(m), atol=1e-14)
    iso_g = np.allclose(g.hess_y, g.laplacian_y / m * np.eye(m), atol=1e-14)
    if not (iso_a or iso_g):
        raise NotRadialError("need an isotropic a or an isotropic y-Hessian of g")
    _require_radial(config)
    N, delta = config.N, config.geometry.delta
    rule = halfspace_rule(N, _scaled_edges(epsilon, delta), order)
    rho, t = epsilon * rule.rho, epsilon * rule.t
    bubble = rescale_bubble(BubbleParams(N, config.p0), epsilon)
    dVr, dVt = bubble.gradient(rho, t)
    eta, _ = smoothstep_cutoff(np.hypot(rho, t), delta)
    pv = config.p.radial(rho, t)
    gn = np.hypot(dVr, dVt)
    vals = g.radial(rho, t) * eta * gn ** (pv - 2) * dVr ** 2 * (np.trace(a) / m)
    return float(np.sum(epsilon ** N * rule.weights * vals))


def _lhs_value(config, kind, epsilon, order, tangential=None):
    if kind == "gradient":
        s = volume_samples(config, epsilon, order)
        return float(np.sum(s.weights * s.f * s.grad ** s.p))
    if kind == "volume":
        s = volume_samples(config, epsilon, order)
        return float(np.sum(s.weights * s.f * s.v ** s.p))
    if kind == "boundary":
        s = boundary_samples(config, epsilon, order)
        return float(np.sum(s.weights * s.f * s.v ** s.r))
    if kind == "tangential":
        return _tangential_value(config, epsilon, order, *tangential)
    raise InputError(f"unknown kind {kind!r}")


def direct_lhs(config, kind, epsilon, order=24, tangential=None):
    """Exact left-hand side at one eps with an order-doubling error estimate.

    ``tangential=(a, g)`` selects the metric-correction integrand for
    kind="tangential".
    """
    coarse = _lhs_value(config, kind, epsilon, order, tangential)
    fine = _lhs_value(config, kind, epsilon, order + 8, tangential)
    return Integral(fine, abs(fine - coarse))


@dataclass(frozen=True)
class ExpansionFit:
    eps: tuple
    lhs: tuple
    basis: tuple
    coefficients: dict
    residual_norm: float
    relative_residual: float
    condition: float

    @property
    def ill_conditioned(self):
        return self.condition > ILL_CONDITIONED

    def to_dict(self):
        return {"eps": list(self.eps), "lhs": list(self.lhs), "basis": list(self.basis),
                "coefficients": dict(self.coefficients), "residual_norm": self.residual_norm,
                "relative_residual": self.relative_residual, "condition": self.condition,
                "ill_conditioned": self.ill_conditioned}


def design_matrix(eps, basis):
    eps = np.asarray(eps, dtype=float).ravel()
    try:
        return np.column_stack([BASIS[b](eps) for b in basis])
    except KeyError as exc:
        raise InputError(f"unknown basis label {exc}") from exc


class ExpansionRegressor(BaseEstimator, RegressorMixin):
    """Weighted least squares in a basis of eps-monomials and logs.

    X holds the eps samples (shape (n,) or (n, 1)).  Columns are scaled to
    unit max-norm before solving; ``condition_`` is the 2-norm condition
    number of the scaled design matrix.
    """

    def __init__(self, basis=FULL_BASIS):
        self.basis = basis

    def fit(self, X, y, sample_weight=None):
        eps = np.asarray(X, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        basis = tuple(self.basis)
        if eps.size != y.size:
            raise InputError("eps and lhs sizes differ")
        if eps.size < len(basis) + 2:
            raise InsufficientSamplesError(f"need at least {len(basis) + 2} samples for {len(basis)} terms")
        if np.unique(eps).size != eps.size:
            raise InputError("eps samples must be distinct")
        A = design_matrix(eps, basis)
        w = np.ones_like(y) if sample_weight is None else np.sqrt(np.asarray(sample_weight, dtype=float))
        A, yw = A * w[:, None], y * w
        scale = np.abs(A).max(axis=0)
        if np.any(scale == 0):
            raise RankDeficiencyError("a basis column vanishes on the sample points")
        As = A / scale
        sv = np.linalg.svd(As, compute_uv=False)
        if sv[-1] <= sv[0] * len(basis) * np.finfo(float).eps:
            raise RankDeficiencyError("design matrix is rank deficient")
        sol, *_ = np.linalg.lstsq(As, yw, rcond=None)
        self.coef_ = sol / scale
        self.basis_ = basis
        self.condition_ = float(sv[0] / sv[-1])
        self.residual_norm_ = float(np.linalg.norm(A @ self.coef_ - yw))
        self.relative_residual_ = self.residual_norm_ / max(float(np.linalg.norm(yw)), 1e-300)
        return self

    def predict(self, X):
        return design_matrix(X, self.basis_) @ self.coef_


def fit_expansion(eps_values, lhs_values, basis_labels=FULL_BASIS, weights=None):
    reg = ExpansionRegressor(tuple(basis_labels)).fit(eps_values, lhs_values, sample_weight=weights)
    return ExpansionFit(tuple(float(e) for e in eps_values), tuple(float(v) for v in lhs_values),
                        reg.basis_, dict(zip(reg.basis_, (float(c) for c in reg.coef_))),
                        reg.residual_norm_, reg.relative_residual_, reg.condition_)


@dataclass(frozen=True)
class Comparison:
    name: str
    basis: str
    closed_form: float
    fitted: float
    rel_dev: float
    tolerance: float
    compared: bool
    passed: bool
    warning: bool = False

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class ExpansionReport:
    kind: str
    fit: ExpansionFit
    comparisons: tuple
    lhs_error: tuple
    notes: tuple
    alternatives: dict

    @property
    def passed(self):
        return all(c.passed for c in self.comparisons if c.compared)

    def comparison(self, name):
        for c in self.comparisons:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"kind": self.kind, "passed": self.passed,
                "coefficients": [c.to_dict() for c in self.comparisons],
                "fit": self.fit.to_dict(), "lhs_error": list(self.lhs_error),
                "notes": list(self.notes), "alternatives": self.alternatives}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "lhs", "lhs_error"])
            for row in zip(self.fit.eps, self.fit.lhs, self.lhs_error):
                w.writerow([repr(float(x)) for x in row])


# (closed-form name, basis label, tolerance or None when only reported)
_PLAN = {
    "gradient": [("D0", "1", LEADING_TOL), ("D1", "elne", SUBLEADING_TOL), ("D2", "e", SUBLEADING_TOL),
                 ("D3", "elne2", None), ("D4", "e2lne", None)],
    "boundary": [("A0", "1", LEADING_TOL), ("A1", "e2lne", SUBLEADING_TOL)],
    "volume": [("C0", "1", LEADING_TOL)],
}


def closed_forms(config, kind, table=None, convention="trace"):
    if kind == "gradient":
        return coeff_full_gradient_with_geometry(config, table, convention)
    if kind == "boundary":
        return coeff_boundary(config, table)
    if kind == "volume":
        return coeff_volume(config, table)
    raise InputError(f"unknown kind {kind!r}")


def verify_expansion(config, kind, eps_grid=None, order=24, table=None, convention="trace",
                     perturb=None):
    """Fit direct left-hand sides on the eps grid and compare with closed forms.

    ``perturb`` maps coefficient names to factors applied to the closed
    forms; it exists to exercise the failure path.
    """
    eps = np.asarray(eps_grid if eps_grid is not None else config.epsilon_grid, dtype=float)
    table = _table(config, table)
    cf = dict(closed_forms(config, kind, table, convention))
    for name, factor in (perturb or {}).items():
        cf[name] = cf[name] * factor
    results = [direct_lhs(config, kind, float(e), order) for e in eps]
    lhs = np.array([r.value for r in results])
    err = tuple(r.error for r in results)
    notes = []
    if kind == "volume":
        target, basis = lhs / eps ** config.p0, FULL_BASIS
        notes.append("volume values divided by eps^p before fitting")
    elif kind == "boundary":
        target, basis = lhs, BOUNDARY_BASIS
    else:
        target, basis = lhs, FULL_BASIS
        if config.geometry.is_flat:
            notes.append("flat geometry: D coefficients coincide with the C coefficients")
        elif config.p.dt:
            notes.append("curved geometry with d_t p(0) != 0: D2, D4 use the general assembly")
    fit = fit_expansion(eps, target, basis)
    lead = abs(cf[_PLAN[kind][0][0]])
    comps = []
    for name, label, tol in _PLAN[kind]:
        c, fv = cf[name], fit.coefficients[label]
        floor = LEADING_TOL * lead
        compared = tol is not None
        if abs(c) >= floor and abs(c) > 0:
            dev = abs(fv - c) / abs(c)
        else:
            # a vanishing closed form is checked against a fraction of the leading term
            dev = abs(fv - c) / floor if floor > 0 else abs(fv)
            tol = 1.0 if compared else None
        ok = (not compared) or dev <= tol
        warn = compared and fit.ill_conditioned and not ok
        comps.append(Comparison(name, label, float(c), float(fv), float(dev), tol if compared else float("nan"),
                                compared, ok or warn, warn))
    alternatives = {}
    if kind == "gradient" and not config.geometry.is_flat:
        other = "average" if convention == "trace" else "trace"
        alt = closed_forms(config, kind, table, other)["D2"]
        alternatives[other] = {"D2": alt, "rel_dev": abs(fit.coefficients["e"] - alt) / max(abs(alt), 1e-300)}
        notes.append(f"mean curvature convention: {convention}")
    return ExpansionReport(kind, fit, tuple(comps), err, tuple(notes), alternatives)
